#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bcf/rng.hpp"
#include "bcf/types.hpp"

namespace bcf {

struct Hyperparams {
  int K = 40;          // category count
  int G = 50;          // feature-type count
  double alpha = 0.7;  // Dirichlet mass on the category distribution
  double beta = 0.1;   // Dirichlet mass on each category's feature-type distribution
  double gamma = 0.1;  // Dirichlet mass on each feature type's feature distribution

  void validate() const;
};

// Collapsed sampler state. Parameters are integrated out; only assignments and
// the count tables they induce are kept. The index block at the bottom is
// derived once from the stimulus set and never mutated.
struct ModelState {
  Hyperparams hyper;
  int K = 0, G = 0, V = 0, L = 0, D = 0;

  std::vector<int> g_assign;                 // D: feature type per stimulus
  std::vector<int> k_assign;                 // L: category per concept
  std::vector<int> n_cat;                    // K: concepts in category j
  std::vector<std::vector<int>> n_cat_ft;    // K x G: stimuli of category j assigned type i
  std::vector<int> n_cat_stim;               // K: row sums of n_cat_ft
  std::vector<std::vector<int>> n_ft_feat;   // G x V: tokens of feature v under type i
  std::vector<int> n_ft_total;               // G: row sums of n_ft_feat
  Rng rng;

  // Derived from the stimulus set at init time.
  std::vector<int> concept_of;                              // D
  std::vector<std::vector<std::pair<int, int>>> feat_counts;  // D: (feature, multiplicity)
  std::vector<std::vector<int>> stimuli_of;                 // L: stimulus ids per concept
};

// Uniform random assignments, count tables built to match.
ModelState init_state(const StimulusSet& stimuli, const Hyperparams& hyper, std::uint64_t seed);

// State with the given assignments and counts rebuilt from them; used by
// checkpoint resume and by tests that need a hand-picked configuration.
// The rng is default-seeded; callers restore or seed it themselves.
ModelState state_from_assignments(const StimulusSet& stimuli, const Hyperparams& hyper,
                                  const std::vector<int>& k_assign,
                                  const std::vector<int>& g_assign);

// Count bookkeeping for one stimulus / one concept. remove_* must be called
// before scoring a conditional, add_* after sampling; they throw if a count
// would go negative (which means the caller's bookkeeping is broken).
void remove_stimulus(ModelState& state, int d);
void add_stimulus(ModelState& state, int d, int new_g);
void remove_concept(ModelState& state, int l);
void add_concept(ModelState& state, int l, int new_k);

// Unnormalized log weights for resampling stimulus d's feature type (length G)
// and concept l's category (length K). Caller must have removed d (resp. l)
// from the counts first. Log domain: the per-candidate products run over up to
// max_ctx token factors and underflow linear doubles at realistic V.
std::vector<double> conditional_g(const ModelState& state, int d);
std::vector<double> conditional_k(const ModelState& state, int l);

// One full pass: every stimulus's feature type, then every concept's category,
// each in ascending index order with decrement / sample / increment.
void sweep(ModelState& state);

// Log of the collapsed joint over (category assignments, feature-type
// assignments, feature tokens): three Dirichlet-multinomial marginals, one per
// count family. Exp of it sums to exactly 1 over all joint assignments.
double log_joint(const ModelState& state);

// Recomputes every count table from the assignment vectors; throws Error on
// the first mismatch with the stored tables. Cheap enough to run in tests
// after every sweep.
void check_counts(const ModelState& state);

struct PosteriorSummary {
  std::vector<double> theta_hat;               // K
  std::vector<std::vector<double>> mu_hat;     // K x G
  std::vector<std::vector<double>> phi_hat;    // G x V
};

// Smoothed point estimates from the current counts: add the Dirichlet mass and
// normalize each row.
PosteriorSummary posterior_means(const ModelState& state);

// Reporting helpers. Descending probability, ties to the lower id.
std::vector<std::pair<std::string, double>> top_features(const PosteriorSummary& summary,
                                                         const Vocabulary& vocab, int g, int n);
std::vector<std::pair<int, double>> top_feature_types(const PosteriorSummary& summary, int k,
                                                      int n);
std::vector<std::vector<std::string>> category_members(const ModelState& state,
                                                       const Vocabulary& vocab);

struct RunConfig {
  int sweeps = 1000;
  bool early_stop = false;     // stop when log_joint moves < early_tol (relative)
  double early_tol = 1e-6;     // ... over the last early_window sweeps
  int early_window = 50;
};

struct ChainResult {
  ModelState state;        // state after the last sweep
  ModelState best_state;   // state at the highest log_joint seen (the one to report)
  double best_log_joint = 0.0;
  int best_sweep = -1;
  int sweeps_run = 0;
  std::vector<std::pair<int, double>> trace;  // (sweep, log_joint), sweep 0 = init
};

ChainResult run_chain(const StimulusSet& stimuli, const Hyperparams& hyper, std::uint64_t seed,
                      const RunConfig& config);

// ---- synthetic data ----------------------------------------------------

struct SynthDims {
  int L = 0;  // concepts
  int V = 0;  // feature vocabulary size
  int D = 0;  // stimuli
  int I = 0;  // features per stimulus
};

struct SyntheticTruth {
  std::vector<int> true_k;                  // L
  std::vector<int> true_g;                  // D
  std::vector<double> theta;                // K
  std::vector<std::vector<double>> mu;      // K x G
  std::vector<std::vector<double>> phi;     // G x V
};

// Forward simulation of the generative story: theta ~ Dir(alpha),
// k_l ~ Mult(theta), mu_k ~ Dir(beta), phi_g ~ Dir(gamma); each stimulus picks
// a concept uniformly, a feature type from its category's mu, and I features
// iid from that type's phi. Refuses I outside [3,20] (downstream invariant)
// unless allow_any_width is set.
std::pair<StimulusSet, SyntheticTruth> generate_synthetic(const Hyperparams& hyper,
                                                          const SynthDims& dims,
                                                          std::uint64_t seed,
                                                          bool allow_any_width = false);

// Same simulation with the parameters and category labels supplied instead of
// drawn, for recovery experiments with controlled separation.
std::pair<StimulusSet, SyntheticTruth> generate_synthetic(
    const Hyperparams& hyper, const SynthDims& dims, const std::vector<int>& true_k,
    const std::vector<std::vector<double>>& mu, const std::vector<std::vector<double>>& phi,
    std::uint64_t seed, bool allow_any_width = false);

}  // namespace bcf
