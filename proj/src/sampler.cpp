#include "bcf/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace bcf {

void Hyperparams::validate() const {
  if (K < 1) throw Error("K must be >= 1");
  if (G < 1) throw Error("G must be >= 1");
  if (!(alpha > 0.0)) throw Error("alpha must be > 0");
  if (!(beta > 0.0)) throw Error("beta must be > 0");
  if (!(gamma > 0.0)) throw Error("gamma must be > 0");
}

// log of the rising factorial x(x+1)...(x+n-1).
static double log_rising(double x, int n) {
  if (n == 0) return 0.0;
  if (n == 1) return std::log(x);  // the common case in the inner loops
  return std::lgamma(x + n) - std::lgamma(x);
}

// Everything except the assignment vectors and count tables.
static ModelState skeleton(const StimulusSet& stimuli, const Hyperparams& hyper) {
  hyper.validate();
  if (stimuli.stimuli.empty()) throw Error("empty stimulus set");

  ModelState st;
  st.hyper = hyper;
  st.K = hyper.K;
  st.G = hyper.G;
  st.V = stimuli.vocab.num_features();
  st.L = stimuli.vocab.num_concepts();
  st.D = stimuli.num_stimuli();

  st.concept_of.resize(static_cast<std::size_t>(st.D));
  st.feat_counts.resize(static_cast<std::size_t>(st.D));
  st.stimuli_of.resize(static_cast<std::size_t>(st.L));
  for (int d = 0; d < st.D; ++d) {
    const Stimulus& s = stimuli.stimuli[static_cast<std::size_t>(d)];
    st.concept_of[static_cast<std::size_t>(d)] = s.concept_id;
    st.stimuli_of[static_cast<std::size_t>(s.concept_id)].push_back(d);
    // Compact the token list to (feature, multiplicity) pairs, ascending id.
    std::vector<int> sorted = s.features;
    std::sort(sorted.begin(), sorted.end());
    auto& fc = st.feat_counts[static_cast<std::size_t>(d)];
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      fc.emplace_back(sorted[i], static_cast<int>(j - i));
      i = j;
    }
  }
  return st;
}

static void rebuild_counts(ModelState& st) {
  st.n_cat.assign(static_cast<std::size_t>(st.K), 0);
  st.n_cat_ft.assign(static_cast<std::size_t>(st.K), std::vector<int>(static_cast<std::size_t>(st.G), 0));
  st.n_cat_stim.assign(static_cast<std::size_t>(st.K), 0);
  st.n_ft_feat.assign(static_cast<std::size_t>(st.G), std::vector<int>(static_cast<std::size_t>(st.V), 0));
  st.n_ft_total.assign(static_cast<std::size_t>(st.G), 0);

  for (int l = 0; l < st.L; ++l) ++st.n_cat[static_cast<std::size_t>(st.k_assign[static_cast<std::size_t>(l)])];
  for (int d = 0; d < st.D; ++d) {
    int j = st.k_assign[static_cast<std::size_t>(st.concept_of[static_cast<std::size_t>(d)])];
    int i = st.g_assign[static_cast<std::size_t>(d)];
    ++st.n_cat_ft[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    ++st.n_cat_stim[static_cast<std::size_t>(j)];
    for (auto [v, c] : st.feat_counts[static_cast<std::size_t>(d)]) {
      st.n_ft_feat[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)] += c;
      st.n_ft_total[static_cast<std::size_t>(i)] += c;
    }
  }
}

ModelState init_state(const StimulusSet& stimuli, const Hyperparams& hyper, std::uint64_t seed) {
  ModelState st = skeleton(stimuli, hyper);
  st.rng.seed(seed);
  st.k_assign.resize(static_cast<std::size_t>(st.L));
  st.g_assign.resize(static_cast<std::size_t>(st.D));
  for (int l = 0; l < st.L; ++l)
    st.k_assign[static_cast<std::size_t>(l)] =
        static_cast<int>(next_below(st.rng, static_cast<std::uint64_t>(st.K)));
  for (int d = 0; d < st.D; ++d)
    st.g_assign[static_cast<std::size_t>(d)] =
        static_cast<int>(next_below(st.rng, static_cast<std::uint64_t>(st.G)));
  rebuild_counts(st);
  return st;
}

ModelState state_from_assignments(const StimulusSet& stimuli, const Hyperparams& hyper,
                                  const std::vector<int>& k_assign,
                                  const std::vector<int>& g_assign) {
  ModelState st = skeleton(stimuli, hyper);
  if (static_cast<int>(k_assign.size()) != st.L) throw Error("k_assign length != L");
  if (static_cast<int>(g_assign.size()) != st.D) throw Error("g_assign length != D");
  for (int k : k_assign)
    if (k < 0 || k >= st.K) throw Error("category assignment out of range");
  for (int g : g_assign)
    if (g < 0 || g >= st.G) throw Error("feature type assignment out of range");
  st.k_assign = k_assign;
  st.g_assign = g_assign;
  rebuild_counts(st);
  return st;
}

static void dec(int& count, const char* what) {
  if (--count < 0) throw Error(std::string("count went negative: ") + what);
}

void remove_stimulus(ModelState& state, int d) {
  if (d < 0 || d >= state.D) throw Error("stimulus index out of range");
  int j = state.k_assign[static_cast<std::size_t>(state.concept_of[static_cast<std::size_t>(d)])];
  int i = state.g_assign[static_cast<std::size_t>(d)];
  dec(state.n_cat_ft[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)], "n_cat_ft");
  dec(state.n_cat_stim[static_cast<std::size_t>(j)], "n_cat_stim");
  for (auto [v, c] : state.feat_counts[static_cast<std::size_t>(d)]) {
    auto& cell = state.n_ft_feat[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)];
    cell -= c;
    if (cell < 0) throw Error("count went negative: n_ft_feat");
    state.n_ft_total[static_cast<std::size_t>(i)] -= c;
  }
  if (state.n_ft_total[static_cast<std::size_t>(i)] < 0) throw Error("count went negative: n_ft_total");
}

void add_stimulus(ModelState& state, int d, int new_g) {
  int j = state.k_assign[static_cast<std::size_t>(state.concept_of[static_cast<std::size_t>(d)])];
  state.g_assign[static_cast<std::size_t>(d)] = new_g;
  ++state.n_cat_ft[static_cast<std::size_t>(j)][static_cast<std::size_t>(new_g)];
  ++state.n_cat_stim[static_cast<std::size_t>(j)];
  for (auto [v, c] : state.feat_counts[static_cast<std::size_t>(d)]) {
    state.n_ft_feat[static_cast<std::size_t>(new_g)][static_cast<std::size_t>(v)] += c;
    state.n_ft_total[static_cast<std::size_t>(new_g)] += c;
  }
}

void remove_concept(ModelState& state, int l) {
  if (l < 0 || l >= state.L) throw Error("concept id out of range");
  int j = state.k_assign[static_cast<std::size_t>(l)];
  dec(state.n_cat[static_cast<std::size_t>(j)], "n_cat");
  for (int d : state.stimuli_of[static_cast<std::size_t>(l)]) {
    dec(state.n_cat_ft[static_cast<std::size_t>(j)][static_cast<std::size_t>(state.g_assign[static_cast<std::size_t>(d)])],
        "n_cat_ft");
    dec(state.n_cat_stim[static_cast<std::size_t>(j)], "n_cat_stim");
  }
}

void add_concept(ModelState& state, int l, int new_k) {
  state.k_assign[static_cast<std::size_t>(l)] = new_k;
  ++state.n_cat[static_cast<std::size_t>(new_k)];
  for (int d : state.stimuli_of[static_cast<std::size_t>(l)]) {
    ++state.n_cat_ft[static_cast<std::size_t>(new_k)][static_cast<std::size_t>(state.g_assign[static_cast<std::size_t>(d)])];
    ++state.n_cat_stim[static_cast<std::size_t>(new_k)];
  }
}

std::vector<double> conditional_g(const ModelState& state, int d) {
  if (d < 0 || d >= state.D) throw Error("stimulus index out of range");
  const double beta = state.hyper.beta, gamma = state.hyper.gamma;
  int j = state.k_assign[static_cast<std::size_t>(state.concept_of[static_cast<std::size_t>(d)])];
  const auto& fc = state.feat_counts[static_cast<std::size_t>(d)];
  int f_star = 0;
  for (auto [v, c] : fc) f_star += c;

  // The first factor's denominator is shared by every candidate, so it shifts
  // all log weights equally; kept anyway so the weights match the stated form.
  double ft_denom =
      std::log(state.n_cat_stim[static_cast<std::size_t>(j)] + state.G * beta);

  std::vector<double> logw(static_cast<std::size_t>(state.G));
  for (int i = 0; i < state.G; ++i) {
    const auto& row = state.n_ft_feat[static_cast<std::size_t>(i)];
    double w = std::log(state.n_cat_ft[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] + beta) - ft_denom;
    for (auto [v, c] : fc) w += log_rising(row[static_cast<std::size_t>(v)] + gamma, c);
    w -= log_rising(state.n_ft_total[static_cast<std::size_t>(i)] + state.V * gamma, f_star);
    logw[static_cast<std::size_t>(i)] = w;
  }
  return logw;
}

std::vector<double> conditional_k(const ModelState& state, int l) {
  if (l < 0 || l >= state.L) throw Error("concept id out of range");
  const double alpha = state.hyper.alpha, beta = state.hyper.beta;
  // Feature-type histogram of this concept's stimuli under current g_assign.
  std::vector<int> f_g(static_cast<std::size_t>(state.G), 0);
  int f_star = 0;
  for (int d : state.stimuli_of[static_cast<std::size_t>(l)]) {
    ++f_g[static_cast<std::size_t>(state.g_assign[static_cast<std::size_t>(d)])];
    ++f_star;
  }

  std::vector<double> logw(static_cast<std::size_t>(state.K));
  for (int j = 0; j < state.K; ++j) {
    const auto& row = state.n_cat_ft[static_cast<std::size_t>(j)];
    double w = std::log(state.n_cat[static_cast<std::size_t>(j)] + alpha);
    for (int g = 0; g < state.G; ++g)
      if (f_g[static_cast<std::size_t>(g)] > 0)
        w += log_rising(row[static_cast<std::size_t>(g)] + beta, f_g[static_cast<std::size_t>(g)]);
    w -= log_rising(state.n_cat_stim[static_cast<std::size_t>(j)] + state.G * beta, f_star);
    logw[static_cast<std::size_t>(j)] = w;
  }
  return logw;
}

void sweep(ModelState& state) {
  for (int d = 0; d < state.D; ++d) {
    remove_stimulus(state, d);
    int g = state.G == 1 ? 0 : sample_from_log_weights(state.rng, conditional_g(state, d));
    add_stimulus(state, d, g);
  }
  for (int l = 0; l < state.L; ++l) {
    remove_concept(state, l);
    int k = state.K == 1 ? 0 : sample_from_log_weights(state.rng, conditional_k(state, l));
    add_concept(state, l, k);
  }
}

// One Dirichlet-multinomial log marginal: counts drawn with symmetric mass
// `conc` over `dim` cells. Zero cells cancel exactly and are skipped.
static double dir_mult_log(const std::vector<int>& counts, double conc, int dim, int total) {
  double lj = std::lgamma(conc * dim) - std::lgamma(conc * dim + total);
  double lg_conc = std::lgamma(conc);
  for (int c : counts)
    if (c > 0) lj += std::lgamma(c + conc) - lg_conc;
  return lj;
}

double log_joint(const ModelState& state) {
  const Hyperparams& h = state.hyper;
  double lj = dir_mult_log(state.n_cat, h.alpha, state.K, state.L);
  for (int j = 0; j < state.K; ++j)
    lj += dir_mult_log(state.n_cat_ft[static_cast<std::size_t>(j)], h.beta, state.G,
                       state.n_cat_stim[static_cast<std::size_t>(j)]);
  for (int i = 0; i < state.G; ++i)
    lj += dir_mult_log(state.n_ft_feat[static_cast<std::size_t>(i)], h.gamma, state.V,
                       state.n_ft_total[static_cast<std::size_t>(i)]);
  return lj;
}

void check_counts(const ModelState& state) {
  std::vector<int> n_cat(static_cast<std::size_t>(state.K), 0);
  std::vector<std::vector<int>> n_cat_ft(static_cast<std::size_t>(state.K),
                                         std::vector<int>(static_cast<std::size_t>(state.G), 0));
  std::vector<int> n_cat_stim(static_cast<std::size_t>(state.K), 0);
  std::vector<std::vector<int>> n_ft_feat(static_cast<std::size_t>(state.G),
                                          std::vector<int>(static_cast<std::size_t>(state.V), 0));
  std::vector<int> n_ft_total(static_cast<std::size_t>(state.G), 0);
  for (int l = 0; l < state.L; ++l) ++n_cat[static_cast<std::size_t>(state.k_assign[static_cast<std::size_t>(l)])];
  for (int d = 0; d < state.D; ++d) {
    int j = state.k_assign[static_cast<std::size_t>(state.concept_of[static_cast<std::size_t>(d)])];
    int i = state.g_assign[static_cast<std::size_t>(d)];
    ++n_cat_ft[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    ++n_cat_stim[static_cast<std::size_t>(j)];
    for (auto [v, c] : state.feat_counts[static_cast<std::size_t>(d)]) {
      n_ft_feat[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)] += c;
      n_ft_total[static_cast<std::size_t>(i)] += c;
    }
  }
  if (n_cat != state.n_cat) throw Error("count mismatch: n_cat");
  if (n_cat_ft != state.n_cat_ft) throw Error("count mismatch: n_cat_ft");
  if (n_cat_stim != state.n_cat_stim) throw Error("count mismatch: n_cat_stim");
  if (n_ft_feat != state.n_ft_feat) throw Error("count mismatch: n_ft_feat");
  if (n_ft_total != state.n_ft_total) throw Error("count mismatch: n_ft_total");
}

static std::vector<double> smoothed_row(const std::vector<int>& counts, double conc) {
  double total = conc * static_cast<double>(counts.size());
  for (int c : counts) total += c;
  std::vector<double> row(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) row[i] = (counts[i] + conc) / total;
  return row;
}

PosteriorSummary posterior_means(const ModelState& state) {
  PosteriorSummary s;
  s.theta_hat = smoothed_row(state.n_cat, state.hyper.alpha);
  s.mu_hat.reserve(static_cast<std::size_t>(state.K));
  for (int j = 0; j < state.K; ++j)
    s.mu_hat.push_back(smoothed_row(state.n_cat_ft[static_cast<std::size_t>(j)], state.hyper.beta));
  s.phi_hat.reserve(static_cast<std::size_t>(state.G));
  for (int i = 0; i < state.G; ++i)
    s.phi_hat.push_back(smoothed_row(state.n_ft_feat[static_cast<std::size_t>(i)], state.hyper.gamma));
  return s;
}

// Indices of the n largest entries, descending, ties to the lower index.
static std::vector<int> top_indices(const std::vector<double>& row, int n) {
  std::vector<int> idx(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(b)];
  });
  if (n < static_cast<int>(idx.size())) idx.resize(static_cast<std::size_t>(n));
  return idx;
}

std::vector<std::pair<std::string, double>> top_features(const PosteriorSummary& summary,
                                                         const Vocabulary& vocab, int g, int n) {
  if (g < 0 || g >= static_cast<int>(summary.phi_hat.size())) throw Error("feature type id out of range");
  const auto& row = summary.phi_hat[static_cast<std::size_t>(g)];
  std::vector<std::pair<std::string, double>> out;
  for (int v : top_indices(row, n))
    out.emplace_back(vocab.feature_name(v), row[static_cast<std::size_t>(v)]);
  return out;
}

std::vector<std::pair<int, double>> top_feature_types(const PosteriorSummary& summary, int k, int n) {
  if (k < 0 || k >= static_cast<int>(summary.mu_hat.size())) throw Error("category id out of range");
  const auto& row = summary.mu_hat[static_cast<std::size_t>(k)];
  std::vector<std::pair<int, double>> out;
  for (int g : top_indices(row, n)) out.emplace_back(g, row[static_cast<std::size_t>(g)]);
  return out;
}

std::vector<std::vector<std::string>> category_members(const ModelState& state,
                                                       const Vocabulary& vocab) {
  std::vector<std::vector<std::string>> members(static_cast<std::size_t>(state.K));
  for (int l = 0; l < state.L; ++l)
    members[static_cast<std::size_t>(state.k_assign[static_cast<std::size_t>(l)])].push_back(
        vocab.concept_name(l));
  return members;
}

ChainResult run_chain(const StimulusSet& stimuli, const Hyperparams& hyper, std::uint64_t seed,
                      const RunConfig& config) {
  ChainResult res;
  res.state = init_state(stimuli, hyper, seed);
  double lj = log_joint(res.state);
  res.trace.emplace_back(0, lj);
  res.best_state = res.state;
  res.best_log_joint = lj;
  res.best_sweep = 0;
  for (int s = 1; s <= config.sweeps; ++s) {
    sweep(res.state);
    lj = log_joint(res.state);
    res.trace.emplace_back(s, lj);
    res.sweeps_run = s;
    if (lj > res.best_log_joint) {
      res.best_log_joint = lj;
      res.best_sweep = s;
      res.best_state = res.state;
    }
    if (config.early_stop && s >= config.early_window) {
      double then = res.trace[static_cast<std::size_t>(s - config.early_window)].second;
      if (std::abs(lj - then) < config.early_tol * std::abs(then)) break;
    }
  }
  return res;
}

std::pair<StimulusSet, SyntheticTruth> generate_synthetic(const Hyperparams& hyper,
                                                          const SynthDims& dims,
                                                          std::uint64_t seed,
                                                          bool allow_any_width) {
  hyper.validate();
  Rng rng(seed);
  SyntheticTruth truth;
  truth.theta = next_dirichlet(rng, hyper.alpha, hyper.K);
  truth.true_k.resize(static_cast<std::size_t>(dims.L));
  for (int l = 0; l < dims.L; ++l)
    truth.true_k[static_cast<std::size_t>(l)] = sample_discrete(rng, truth.theta);
  truth.mu.reserve(static_cast<std::size_t>(hyper.K));
  for (int k = 0; k < hyper.K; ++k) truth.mu.push_back(next_dirichlet(rng, hyper.beta, hyper.G));
  truth.phi.reserve(static_cast<std::size_t>(hyper.G));
  for (int g = 0; g < hyper.G; ++g) truth.phi.push_back(next_dirichlet(rng, hyper.gamma, dims.V));
  auto out = generate_synthetic(hyper, dims, truth.true_k, truth.mu, truth.phi, rng(), allow_any_width);
  out.second.theta = truth.theta;  // keep the drawn distribution, not the uniform placeholder
  return out;
}

std::pair<StimulusSet, SyntheticTruth> generate_synthetic(
    const Hyperparams& hyper, const SynthDims& dims, const std::vector<int>& true_k,
    const std::vector<std::vector<double>>& mu, const std::vector<std::vector<double>>& phi,
    std::uint64_t seed, bool allow_any_width) {
  hyper.validate();
  if (dims.L < 1 || dims.V < 1 || dims.D < 1 || dims.I < 1) throw Error("all sizes must be >= 1");
  if (!allow_any_width && (dims.I < 3 || dims.I > 20))
    throw Error("I outside [3,20]; set the override to generate anyway");
  if (static_cast<int>(true_k.size()) != dims.L) throw Error("true_k length != L");
  if (static_cast<int>(mu.size()) != hyper.K || static_cast<int>(phi.size()) != hyper.G)
    throw Error("parameter dimensions disagree with hyperparams");

  Rng rng(seed);
  SyntheticTruth truth;
  truth.true_k = true_k;
  truth.theta.assign(static_cast<std::size_t>(hyper.K), 1.0 / hyper.K);
  truth.mu = mu;
  truth.phi = phi;

  StimulusSet set;
  for (int l = 0; l < dims.L; ++l) set.vocab.add_concept("concept_" + std::to_string(l));
  for (int v = 0; v < dims.V; ++v) set.vocab.add_feature("feature_" + std::to_string(v));

  truth.true_g.resize(static_cast<std::size_t>(dims.D));
  set.stimuli.reserve(static_cast<std::size_t>(dims.D));
  for (int d = 0; d < dims.D; ++d) {
    Stimulus s;
    s.concept_id = static_cast<int>(next_below(rng, static_cast<std::uint64_t>(dims.L)));
    int g = sample_discrete(rng, mu[static_cast<std::size_t>(truth.true_k[static_cast<std::size_t>(s.concept_id)])]);
    truth.true_g[static_cast<std::size_t>(d)] = g;
    for (int i = 0; i < dims.I; ++i)
      s.features.push_back(sample_discrete(rng, phi[static_cast<std::size_t>(g)]));
    set.stimuli.push_back(std::move(s));
  }
  set.per_concept_counts.assign(static_cast<std::size_t>(dims.L), 0);
  for (const auto& s : set.stimuli) ++set.per_concept_counts[static_cast<std::size_t>(s.concept_id)];
  return {std::move(set), std::move(truth)};
}

}  // namespace bcf
