#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcf/sampler.hpp"
#include "bcf/types.hpp"

namespace bcf {

// Everything needed to resume or report a chain. Counts are not stored; they
// are rebuilt from the assignment vectors against the stimulus set on load.
struct Checkpoint {
  Hyperparams hyper;
  std::vector<std::string> concept_names;
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;
  int sweeps_run = 0;
  std::vector<int> k_assign, g_assign;          // state after the last sweep
  std::vector<int> best_k_assign, best_g_assign;  // highest log-joint state seen
  double best_log_joint = 0.0;
  int best_sweep = -1;
  std::string rng_text;  // serialized generator, to continue the exact stream
};

Checkpoint make_checkpoint(const ChainResult& chain, const Vocabulary& vocab, std::uint64_t seed);

// Layout: one JSON header line (version, hyperparams, sizes, vocabulary,
// digest), then the four assignment vectors as base-ten integer lines, then
// the generator state line. Round-trips exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds the live states. Refuses a stimulus set whose vocabulary does not
// match the one the checkpoint was trained on.
ModelState resume_state(const Checkpoint& ckpt, const StimulusSet& stimuli);
ModelState best_state(const Checkpoint& ckpt, const StimulusSet& stimuli);

}  // namespace bcf
