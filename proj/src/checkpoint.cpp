#include "bcf/checkpoint.hpp"

#include <sstream>

#include <json.hpp>

#include "bcf/io_util.hpp"

using nlohmann::json;

namespace bcf {

static constexpr int kVersion = 1;

Checkpoint make_checkpoint(const ChainResult& chain, const Vocabulary& vocab, std::uint64_t seed) {
  Checkpoint c;
  c.hyper = chain.state.hyper;
  c.concept_names = vocab.concept_names();
  c.feature_names = vocab.feature_names();
  c.seed = seed;
  c.sweeps_run = chain.sweeps_run;
  c.k_assign = chain.state.k_assign;
  c.g_assign = chain.state.g_assign;
  c.best_k_assign = chain.best_state.k_assign;
  c.best_g_assign = chain.best_state.g_assign;
  c.best_log_joint = chain.best_log_joint;
  c.best_sweep = chain.best_sweep;
  std::ostringstream rng_out;
  rng_out << chain.state.rng;
  c.rng_text = rng_out.str();
  return c;
}

static std::uint64_t names_digest(const std::vector<std::string>& concepts,
                                  const std::vector<std::string>& features) {
  Vocabulary v;
  for (const auto& n : concepts) v.add_concept(n);
  for (const auto& n : features) v.add_feature(n);
  return v.digest();
}

static void write_ints(std::ostream& out, const std::vector<int>& xs) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ' ';
    out << xs[i];
  }
  out << '\n';
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json header;
  header["format"] = "bcf-checkpoint";
  header["version"] = kVersion;
  header["hyper"] = {{"K", ckpt.hyper.K},
                     {"G", ckpt.hyper.G},
                     {"alpha", ckpt.hyper.alpha},
                     {"beta", ckpt.hyper.beta},
                     {"gamma", ckpt.hyper.gamma}};
  header["concepts"] = ckpt.concept_names;
  header["features"] = ckpt.feature_names;
  header["seed"] = ckpt.seed;
  header["sweeps_run"] = ckpt.sweeps_run;
  header["best_log_joint"] = ckpt.best_log_joint;
  header["best_sweep"] = ckpt.best_sweep;
  char digest[17];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(names_digest(ckpt.concept_names, ckpt.feature_names)));
  header["vocab_digest"] = digest;
  atomic_write(path, [&](std::ostream& out) {
    out << header.dump() << '\n';
    write_ints(out, ckpt.k_assign);
    write_ints(out, ckpt.g_assign);
    write_ints(out, ckpt.best_k_assign);
    write_ints(out, ckpt.best_g_assign);
    out << ckpt.rng_text << '\n';
  });
}

static std::vector<int> parse_ints(const std::string& line, std::size_t expected,
                                   const std::string& what) {
  std::vector<int> xs;
  xs.reserve(expected);
  std::istringstream in(line);
  int x;
  while (in >> x) xs.push_back(x);
  if (xs.size() != expected)
    throw Error("checkpoint: " + what + " has " + std::to_string(xs.size()) + " entries, expected " +
                std::to_string(expected));
  return xs;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.size() < 6) throw Error("checkpoint file truncated: " + path);
  json header;
  try {
    header = json::parse(lines[0]);
  } catch (const json::exception& e) {
    throw Error("checkpoint header unreadable: " + std::string(e.what()));
  }
  if (header.value("format", "") != "bcf-checkpoint")
    throw Error("not a checkpoint file: " + path);
  if (header.value("version", -1) != kVersion)
    throw Error("unsupported checkpoint version in " + path);

  Checkpoint c;
  const auto& h = header.at("hyper");
  c.hyper.K = h.at("K").get<int>();
  c.hyper.G = h.at("G").get<int>();
  c.hyper.alpha = h.at("alpha").get<double>();
  c.hyper.beta = h.at("beta").get<double>();
  c.hyper.gamma = h.at("gamma").get<double>();
  c.hyper.validate();
  c.concept_names = header.at("concepts").get<std::vector<std::string>>();
  c.feature_names = header.at("features").get<std::vector<std::string>>();
  c.seed = header.at("seed").get<std::uint64_t>();
  c.sweeps_run = header.at("sweeps_run").get<int>();
  c.best_log_joint = header.at("best_log_joint").get<double>();
  c.best_sweep = header.at("best_sweep").get<int>();

  char digest[17];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(names_digest(c.concept_names, c.feature_names)));
  if (header.value("vocab_digest", "") != digest)
    throw Error("checkpoint vocabulary digest mismatch (file corrupt or edited)");

  std::size_t L = c.concept_names.size(), D = 0;
  {
    std::istringstream in(lines[2]);
    int x;
    while (in >> x) ++D;
  }
  c.k_assign = parse_ints(lines[1], L, "k_assign");
  c.g_assign = parse_ints(lines[2], D, "g_assign");
  c.best_k_assign = parse_ints(lines[3], L, "best_k_assign");
  c.best_g_assign = parse_ints(lines[4], D, "best_g_assign");
  c.rng_text = lines[5];
  return c;
}

static void check_vocab(const Checkpoint& ckpt, const StimulusSet& stimuli) {
  if (stimuli.vocab.concept_names() != ckpt.concept_names ||
      stimuli.vocab.feature_names() != ckpt.feature_names)
    throw Error("stimulus set vocabulary differs from the one this checkpoint was trained on");
}

ModelState resume_state(const Checkpoint& ckpt, const StimulusSet& stimuli) {
  check_vocab(ckpt, stimuli);
  ModelState st = state_from_assignments(stimuli, ckpt.hyper, ckpt.k_assign, ckpt.g_assign);
  std::istringstream in(ckpt.rng_text);
  in >> st.rng;
  if (!in) throw Error("checkpoint rng state unreadable");
  return st;
}

ModelState best_state(const Checkpoint& ckpt, const StimulusSet& stimuli) {
  check_vocab(ckpt, stimuli);
  return state_from_assignments(stimuli, ckpt.hyper, ckpt.best_k_assign, ckpt.best_g_assign);
}

}  // namespace bcf
