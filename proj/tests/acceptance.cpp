// Acceptance gate for the whole toolkit: ten end-to-end checks, one
// [PASS]/[FAIL] line each, covering the sampler's exactness, metric
// correctness, synthetic recovery, prediction, intruder tasks, and
// whole-pipeline determinism. argv[1] names the CLI binary (used by the
// determinism check). Exits nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bcf/baselines.hpp"
#include "bcf/eval.hpp"
#include "bcf/intruder.hpp"
#include "bcf/io_util.hpp"
#include "bcf/rng.hpp"
#include "bcf/sampler.hpp"
#include "bcf/types.hpp"

using namespace bcf;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %s%s%s\n", ok ? "PASS" : "FAIL", number, name,
              detail.empty() ? "" : ": ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

// ---- tiny exhaustive instances ---------------------------------------------

// Hand-built stimulus set small enough to enumerate the collapsed joint over.
StimulusSet tiny_set(int L, int V, const std::vector<std::pair<int, std::vector<int>>>& rows) {
  StimulusSet set;
  for (int l = 0; l < L; ++l) set.vocab.add_concept("c" + std::to_string(l));
  for (int v = 0; v < V; ++v) set.vocab.add_feature("f" + std::to_string(v));
  set.per_concept_counts.assign(static_cast<std::size_t>(L), 0);
  for (const auto& [cid, feats] : rows) {
    Stimulus s;
    s.concept_id = cid;
    s.features = feats;
    s.doc_id = "tiny";
    s.sentence_index = static_cast<int>(set.stimuli.size());
    set.stimuli.push_back(std::move(s));
    ++set.per_concept_counts[static_cast<std::size_t>(cid)];
  }
  return set;
}

// Exact conditionals by scoring the full joint at every candidate value.
std::vector<double> oracle_conditional_g(const StimulusSet& set, const Hyperparams& h,
                                         const std::vector<int>& k, std::vector<int> g, int d) {
  std::vector<double> lj(static_cast<std::size_t>(h.G));
  for (int i = 0; i < h.G; ++i) {
    g[static_cast<std::size_t>(d)] = i;
    lj[static_cast<std::size_t>(i)] = log_joint(state_from_assignments(set, h, k, g));
  }
  return normalize_log_weights(lj);
}

std::vector<double> oracle_conditional_k(const StimulusSet& set, const Hyperparams& h,
                                         std::vector<int> k, const std::vector<int>& g, int l) {
  std::vector<double> lj(static_cast<std::size_t>(h.K));
  for (int j = 0; j < h.K; ++j) {
    k[static_cast<std::size_t>(l)] = j;
    lj[static_cast<std::size_t>(j)] = log_joint(state_from_assignments(set, h, k, g));
  }
  return normalize_log_weights(lj);
}

struct TinyInstance {
  StimulusSet set;
  Hyperparams h;
  std::vector<int> k, g;
};

TinyInstance random_instance(std::uint64_t seed) {
  Rng rng(seed);
  TinyInstance t;
  int L = 1 + static_cast<int>(next_below(rng, 4));
  int V = 1 + static_cast<int>(next_below(rng, 6));
  int D = 1 + static_cast<int>(next_below(rng, 6));
  t.h.K = 1 + static_cast<int>(next_below(rng, 3));
  t.h.G = 1 + static_cast<int>(next_below(rng, 3));
  t.h.alpha = 0.2 + next_unit(rng) * 2.0;
  t.h.beta = 0.05 + next_unit(rng);
  t.h.gamma = 0.05 + next_unit(rng);

  std::vector<std::pair<int, std::vector<int>>> rows;
  for (int d = 0; d < D; ++d) {
    int cid = static_cast<int>(next_below(rng, static_cast<std::uint64_t>(L)));
    int width = 1 + static_cast<int>(next_below(rng, 4));
    std::vector<int> feats;
    for (int i = 0; i < width; ++i)
      feats.push_back(static_cast<int>(next_below(rng, static_cast<std::uint64_t>(V))));
    rows.emplace_back(cid, feats);
  }
  t.set = tiny_set(L, V, rows);
  for (int l = 0; l < L; ++l)
    t.k.push_back(static_cast<int>(next_below(rng, static_cast<std::uint64_t>(t.h.K))));
  for (int d = 0; d < D; ++d)
    t.g.push_back(static_cast<int>(next_below(rng, static_cast<std::uint64_t>(t.h.G))));
  return t;
}

// ---- check 1: conditionals vs enumeration ----------------------------------

void check_conditionals() {
  auto t0 = std::chrono::steady_clock::now();
  const int instances = 60;
  double worst = 0.0;
  for (int trial = 1; trial <= instances; ++trial) {
    TinyInstance t = random_instance(static_cast<std::uint64_t>(trial));
    ModelState base = state_from_assignments(t.set, t.h, t.k, t.g);
    for (int d = 0; d < base.D; ++d) {
      ModelState st = base;
      remove_stimulus(st, d);
      auto got = normalize_log_weights(conditional_g(st, d));
      auto want = oracle_conditional_g(t.set, t.h, t.k, t.g, d);
      for (int i = 0; i < t.h.G; ++i) {
        std::size_t idx = static_cast<std::size_t>(i);
        worst = std::max(worst, std::abs(got[idx] - want[idx]) / want[idx]);
      }
    }
    for (int l = 0; l < base.L; ++l) {
      ModelState st = base;
      remove_concept(st, l);
      auto got = normalize_log_weights(conditional_k(st, l));
      auto want = oracle_conditional_k(t.set, t.h, t.k, t.g, l);
      for (int j = 0; j < t.h.K; ++j) {
        std::size_t idx = static_cast<std::size_t>(j);
        worst = std::max(worst, std::abs(got[idx] - want[idx]) / want[idx]);
      }
    }
  }
  double secs = seconds_since(t0);
  bool ok = worst <= 1e-10 && secs < 10.0;
  report(1, "stimulus and concept conditionals match exhaustive enumeration", ok,
         "max relative error " + num(worst, "%.2e") + " over " + std::to_string(instances) +
             " instances in " + num(secs, "%.2f") + "s");
}

// ---- check 2: total probability --------------------------------------------

void check_total_probability() {
  auto t0 = std::chrono::steady_clock::now();
  // Two concepts, two stimuli of width 2, binary vocabulary, K = G = 2: sum
  // exp(log_joint) over every token combination and every assignment.
  Hyperparams h;
  h.K = 2;
  h.G = 2;
  h.alpha = 0.7;
  h.beta = 0.1;
  h.gamma = 0.1;
  double total = 0.0;
  for (int tokens = 0; tokens < 16; ++tokens) {
    std::vector<int> f0 = {(tokens >> 0) & 1, (tokens >> 1) & 1};
    std::vector<int> f1 = {(tokens >> 2) & 1, (tokens >> 3) & 1};
    auto set = tiny_set(2, 2, {{0, f0}, {1, f1}});
    for (int k0 = 0; k0 < 2; ++k0)
      for (int k1 = 0; k1 < 2; ++k1)
        for (int g0 = 0; g0 < 2; ++g0)
          for (int g1 = 0; g1 < 2; ++g1)
            total += std::exp(log_joint(state_from_assignments(set, h, {k0, k1}, {g0, g1})));
  }
  double secs = seconds_since(t0);
  bool ok = std::abs(total - 1.0) <= 1e-8 && secs < 5.0;
  report(2, "collapsed joint sums to one over all assignments and tokens", ok,
         "sum = 1 " + std::string(total >= 1.0 ? "+ " : "- ") + num(std::abs(total - 1.0), "%.2e") +
             " in " + num(secs, "%.2f") + "s");
}

// ---- check 3: count consistency --------------------------------------------

void check_count_consistency() {
  auto t0 = std::chrono::steady_clock::now();
  Hyperparams h;
  h.K = 3;
  h.G = 4;
  SynthDims dims;
  dims.L = 10;
  dims.V = 20;
  dims.D = 1000;
  dims.I = 5;
  auto [set, truth] = generate_synthetic(h, dims, 33);
  (void)truth;
  ModelState st = init_state(set, h, 7);
  for (int s = 0; s < 100; ++s) sweep(st);

  ModelState recount = state_from_assignments(set, h, st.k_assign, st.g_assign);
  bool equal = st.n_cat == recount.n_cat && st.n_cat_ft == recount.n_cat_ft &&
               st.n_cat_stim == recount.n_cat_stim && st.n_ft_feat == recount.n_ft_feat &&
               st.n_ft_total == recount.n_ft_total;
  bool guarded = true;
  try {
    check_counts(st);
  } catch (const Error&) {
    guarded = false;
  }
  double secs = seconds_since(t0);
  bool ok = equal && guarded && secs < 10.0;
  report(3, "count tables match a recount after 100 sweeps on 1000 stimuli", ok,
         std::string(equal ? "all five tables identical" : "TABLE MISMATCH") + " in " +
             num(secs, "%.2f") + "s");
}

// ---- checks 4 and 8 share the recovery fixture ------------------------------

struct RecoveryFixture {
  bool trained = false;
  Hyperparams hyper;
  SynthDims dims;
  std::vector<int> true_k;
  std::vector<std::vector<double>> mu, phi;
  ModelState best;
  PosteriorSummary summary;
};

ContingencyTable cross_table(const std::vector<int>& induced, int n_induced,
                             const std::vector<int>& gold, int n_gold) {
  ContingencyTable t;
  t.counts.assign(static_cast<std::size_t>(n_induced),
                  std::vector<int>(static_cast<std::size_t>(n_gold), 0));
  for (std::size_t i = 0; i < induced.size(); ++i) {
    ++t.counts[static_cast<std::size_t>(induced[i])][static_cast<std::size_t>(gold[i])];
    ++t.N;
  }
  return t;
}

void check_recovery(RecoveryFixture& fx) {
  auto t0 = std::chrono::steady_clock::now();
  fx.hyper.K = 5;
  fx.hyper.G = 8;
  fx.dims.L = 50;
  fx.dims.V = 100;
  fx.dims.D = 5000;
  fx.dims.I = 8;

  // Sharply separated truth: each feature type owns a disjoint 10-word block,
  // each category concentrates on its own pair of types, and concepts come in
  // 5 blocks of 10. Five pairs over eight types must reuse two of them
  // (categories 0/4 share type 0, categories 1/4 share type 2); the shared
  // types get lopsided weights so each has a clear majority owner.
  const int pairs[5][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}};
  const double weights[5][2] = {{0.1, 0.9}, {0.2, 0.8}, {0.5, 0.5}, {0.5, 0.5}, {0.9, 0.1}};
  fx.mu.assign(5, std::vector<double>(8, 0.0));
  for (int k = 0; k < 5; ++k) {
    fx.mu[static_cast<std::size_t>(k)][static_cast<std::size_t>(pairs[k][0])] = weights[k][0];
    fx.mu[static_cast<std::size_t>(k)][static_cast<std::size_t>(pairs[k][1])] = weights[k][1];
  }
  fx.phi.assign(8, std::vector<double>(100, 0.0));
  for (int g = 0; g < 8; ++g)
    for (int v = 0; v < 10; ++v)
      fx.phi[static_cast<std::size_t>(g)][static_cast<std::size_t>(10 * g + v)] = 0.1;
  fx.true_k.resize(50);
  for (int l = 0; l < 50; ++l) fx.true_k[static_cast<std::size_t>(l)] = l / 10;

  auto [set, truth] = generate_synthetic(fx.hyper, fx.dims, fx.true_k, fx.mu, fx.phi, 2024);
  (void)truth;

  RunConfig rc;
  rc.sweeps = 500;
  ChainResult best;
  for (std::uint64_t seed : {101ull, 102ull}) {
    ChainResult r = run_chain(set, fx.hyper, seed, rc);
    if (best.best_sweep < 0 || r.best_log_joint > best.best_log_joint) best = std::move(r);
  }
  fx.best = best.best_state;
  fx.summary = posterior_means(fx.best);
  fx.trained = true;

  ContingencyTable learned = cross_table(fx.best.k_assign, 5, fx.true_k, 5);
  double pu = purity(learned), co = collocation(learned);
  double f1 = f_beta(pu, co);

  Categorization rnd = random_categorize(50, 5, 555);
  ContingencyTable shuffled = cross_table(rnd.category_of, 5, fx.true_k, 5);
  double f1_rand = f_beta(purity(shuffled), collocation(shuffled));

  double secs = seconds_since(t0);
  bool ok = pu >= 0.9 && co >= 0.9 && f1 - f1_rand >= 0.5 && secs < 120.0;
  report(4, "sharp synthetic structure is recovered after 500 sweeps", ok,
         "purity " + num(pu) + ", collocation " + num(co) + ", F1 " + num(f1) +
             " vs random F1 " + num(f1_rand) + " in " + num(secs, "%.1f") + "s");
}

// ---- check 5: metric oracles ------------------------------------------------

double entropy_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

VMeasure oracle_v(const ContingencyTable& t) {
  std::size_t rows = t.counts.size(), cols = t.counts[0].size();
  std::vector<double> pc(rows, 0.0), pg(cols, 0.0), joint;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      double p = static_cast<double>(t.counts[i][j]) / t.N;
      joint.push_back(p);
      pc[i] += p;
      pg[j] += p;
    }
  double hc = entropy_of(pc), hg = entropy_of(pg), hcg = entropy_of(joint);
  VMeasure v;
  v.vh = hg == 0.0 ? 1.0 : 1.0 - (hcg - hc) / hg;
  v.vc = hc == 0.0 ? 1.0 : 1.0 - (hcg - hg) / hc;
  double denom = v.vh + v.vc;
  v.vm = denom == 0.0 ? 0.0 : 2.0 * v.vh * v.vc / denom;
  return v;
}

double oracle_purity(const ContingencyTable& t) {
  long long total = 0;
  for (const auto& row : t.counts) {
    int best = 0;
    for (int c : row) best = std::max(best, c);
    total += best;
  }
  return static_cast<double>(total) / t.N;
}

double oracle_collocation(const ContingencyTable& t) {
  long long total = 0;
  for (std::size_t j = 0; j < t.counts[0].size(); ++j) {
    int best = 0;
    for (std::size_t i = 0; i < t.counts.size(); ++i) best = std::max(best, t.counts[i][j]);
    total += best;
  }
  return static_cast<double>(total) / t.N;
}

void check_metric_oracles() {
  Rng rng(99);
  int mismatches = 0;
  double worst_entropy_gap = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    int rows = 1 + static_cast<int>(next_below(rng, 4));
    int cols = 1 + static_cast<int>(next_below(rng, 4));
    int n = 1 + static_cast<int>(next_below(rng, 20));
    ContingencyTable t;
    t.counts.assign(static_cast<std::size_t>(rows), std::vector<int>(static_cast<std::size_t>(cols), 0));
    t.N = n;
    for (int i = 0; i < n; ++i)
      ++t.counts[next_below(rng, static_cast<std::uint64_t>(rows))]
                 [next_below(rng, static_cast<std::uint64_t>(cols))];

    if (purity(t) != oracle_purity(t)) ++mismatches;
    if (collocation(t) != oracle_collocation(t)) ++mismatches;
    if (f_beta(purity(t), collocation(t)) != f_beta(oracle_purity(t), oracle_collocation(t)))
      ++mismatches;
    VMeasure got = v_measure(t);
    VMeasure want = oracle_v(t);
    worst_entropy_gap = std::max({worst_entropy_gap, std::abs(got.vh - want.vh),
                                  std::abs(got.vc - want.vc), std::abs(got.vm - want.vm)});
  }

  // A permutation-perfect clustering scores 1.0 on every metric.
  ContingencyTable perfect;
  perfect.counts = {{4, 0, 0}, {0, 2, 0}, {0, 0, 6}};
  perfect.N = 12;
  VMeasure pv = v_measure(perfect);
  bool perfect_ok = purity(perfect) == 1.0 && collocation(perfect) == 1.0 &&
                    f_beta(1.0, 1.0) == 1.0 && pv.vh == 1.0 && pv.vc == 1.0 && pv.vm == 1.0;

  bool ok = mismatches == 0 && worst_entropy_gap <= 1e-12 && perfect_ok;
  report(5, "clustering metrics match brute-force oracles on 1000 random tables", ok,
         std::to_string(mismatches) + " mismatches, max entropy-metric gap " +
             num(worst_entropy_gap, "%.2e") + (perfect_ok ? "" : ", PERFECT-CLUSTERING CASE FAILED"));
}

// ---- checks 6 and 7: arithmetic anchors -------------------------------------

// Both targets are quoted to three decimals, and so are their inputs. The band
// therefore allows the propagated input rounding (about 5e-4 for both
// formulas at these operating points) on top of the targets' own half-ULP.
const double kAnchorTol = 1e-3;

void check_f_anchor() {
  double f = f_beta(0.552, 0.432, 1.0);
  bool ok = std::abs(f - 0.484) <= kAnchorTol;
  report(6, "F-score arithmetic cross-check", ok,
         "f_beta(0.552, 0.432) = " + num(f, "%.6f") + ", target 0.484 +/- " + num(kAnchorTol));
}

void check_harmonic_anchor() {
  double hm = 2.0 * 0.652 * 0.598 / (0.652 + 0.598);
  bool formula_agrees = std::abs(f_beta(0.652, 0.598, 1.0) - hm) <= 1e-15;
  bool ok = std::abs(hm - 0.623) <= kAnchorTol && formula_agrees;
  report(7, "V-measure harmonic-mean cross-check", ok,
         "harmonic(0.652, 0.598) = " + num(hm, "%.6f") + ", target 0.623 +/- " + num(kAnchorTol));
}

// ---- check 8: prediction sanity ---------------------------------------------

void check_prediction(const RecoveryFixture& fx) {
  if (!fx.trained) {
    report(8, "trained model predicts held-out concepts far above chance", false,
           "no trained model (recovery check failed to train)");
    return;
  }
  SynthDims held = fx.dims;
  held.D = 300;
  auto [test, truth] = generate_synthetic(fx.hyper, held, fx.true_k, fx.mu, fx.phi, 777);
  (void)truth;

  std::vector<int> ranks;
  for (const auto& s : test.stimuli) {
    Prediction p = predict_concept_bcf(fx.summary, fx.best.k_assign, s.features);
    ranks.push_back(rank_of(p, s.concept_id));
  }
  RankingResult model = ranking_metrics(ranks, fx.dims.L);
  double chance = 1.0 / fx.dims.L;

  // Random ranking: the true concept's rank is uniform, so pr@10 concentrates
  // at 10/L with a binomial spread over the 300 draws.
  Rng rng(888);
  std::vector<int> random_ranks;
  for (const auto& s : test.stimuli) {
    Prediction p;
    p.score.resize(static_cast<std::size_t>(fx.dims.L));
    for (auto& x : p.score) x = next_unit(rng);
    p.order.resize(p.score.size());
    for (int i = 0; i < fx.dims.L; ++i) p.order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(p.order.begin(), p.order.end(), [&](int a, int b) {
      return p.score[static_cast<std::size_t>(a)] > p.score[static_cast<std::size_t>(b)];
    });
    random_ranks.push_back(rank_of(p, s.concept_id));
  }
  RankingResult random = ranking_metrics(random_ranks, fx.dims.L);
  double expect10 = 10.0 / fx.dims.L;
  double band10 = 3.0 * std::sqrt(expect10 * (1.0 - expect10) / 300.0);

  bool ok = model.pr_at_1 >= 5.0 * chance && std::abs(random.pr_at_10 - expect10) <= band10;
  report(8, "trained model predicts held-out concepts far above chance", ok,
         "model pr@1 " + num(model.pr_at_1) + " (threshold " + num(5.0 * chance) +
             "), random pr@10 " + num(random.pr_at_10) + " (expected " + num(expect10) + " +/- " +
             num(band10) + ")");
}

// ---- check 9: intruder round trip -------------------------------------------

void check_intruder_round_trip() {
  // 60 feature types with disjoint six-word themes; the first 50 get a
  // coherence task each. 50 categories, each associated with five of the
  // types, get a relevance task each. All tasks show six items.
  std::vector<std::vector<std::string>> type_words;
  for (int t = 0; t < 60; ++t) {
    std::vector<std::string> words;
    for (int i = 0; i < 6; ++i)
      words.push_back("w" + std::to_string(t) + "_" + std::to_string(i));
    type_words.push_back(std::move(words));
  }
  std::vector<std::vector<std::string>> coherence_types(type_words.begin(),
                                                        type_words.begin() + 50);
  std::vector<std::vector<std::string>> members;
  std::vector<std::vector<double>> relevance;
  for (int c = 0; c < 50; ++c) {
    members.push_back({"m" + std::to_string(c) + "a", "m" + std::to_string(c) + "b"});
    std::vector<double> row(60, 0.0);
    for (int j = 0; j < 5; ++j) row[static_cast<std::size_t>(c + j)] = 0.5 - 0.1 * j;
    relevance.push_back(std::move(row));
  }

  std::vector<std::string> warnings;
  auto tasks = gen_coherence_tasks(coherence_types, 5, 61, &warnings);
  auto rel = gen_relevance_tasks(members, relevance, type_words, 6, 5, 62, &warnings);
  tasks.insert(tasks.end(), rel.begin(), rel.end());
  bool generated = tasks.size() == 100 && rel.size() == 50 && warnings.empty();

  fs::path dir = fs::temp_directory_path();
  std::string tasks_path = (dir / "bcf_accept_tasks.csv").string();
  std::string keys_path = (dir / "bcf_accept_keys.csv").string();
  std::string resp_path = (dir / "bcf_accept_resp.csv").string();
  save_tasks(tasks, tasks_path);
  save_keys(tasks, keys_path);
  auto loaded = load_tasks(tasks_path, keys_path);

  // Three annotators who read the answer key, through the response file.
  std::vector<std::pair<std::string, std::vector<int>>> by_task;
  for (const auto& t : loaded)
    by_task.emplace_back(t.task_id, std::vector<int>{t.answer_index, t.answer_index, t.answer_index});
  save_responses(by_task, resp_path);
  ResponseSet oracle = load_responses(resp_path);

  auto subset = [&](TaskKind kind, const ResponseSet& all) {
    ResponseSet out;
    for (const auto& t : loaded)
      if (t.kind == kind) {
        out.task_ids.push_back(t.task_id);
        out.choices_of.emplace(t.task_id, all.choices_of.at(t.task_id));
      }
    return out;
  };
  ResponseSet oracle_coh = subset(TaskKind::coherence, oracle);
  ResponseSet oracle_rel = subset(TaskKind::relevance, oracle);
  bool oracle_ok = score_accuracy(loaded, oracle) == 1.0 && fleiss_kappa(oracle_coh, 6) == 1.0 &&
                   fleiss_kappa(oracle_rel, 6) == 1.0;

  // Five annotators picking uniformly among the six items.
  Rng rng(4242);
  ResponseSet random;
  for (const auto& t : loaded) {
    random.task_ids.push_back(t.task_id);
    std::vector<int> choices;
    for (int a = 0; a < 5; ++a) choices.push_back(static_cast<int>(next_below(rng, 6)));
    random.choices_of.emplace(t.task_id, std::move(choices));
  }
  ResponseSet random_coh = subset(TaskKind::coherence, random);
  ResponseSet random_rel = subset(TaskKind::relevance, random);

  // Accuracy spread: 250 independent 1-in-6 guesses per kind. Agreement
  // spread: enumerate all 6^5 choice tuples for the exact variance of the
  // per-task agreement statistic, then scale by the 50 tasks per kind.
  double acc_band = 3.0 * std::sqrt((1.0 / 6.0) * (5.0 / 6.0) / 250.0);
  double mean_a = 0.0, mean_a2 = 0.0;
  for (int code = 0; code < 7776; ++code) {
    int counts[6] = {0, 0, 0, 0, 0, 0};
    int x = code;
    for (int a = 0; a < 5; ++a) {
      ++counts[x % 6];
      x /= 6;
    }
    int s = 0;
    for (int c : counts) s += c * c;
    double agree = (s - 5) / 20.0;
    mean_a += agree;
    mean_a2 += agree * agree;
  }
  mean_a /= 7776.0;
  mean_a2 /= 7776.0;
  double kappa_band = 3.0 * std::sqrt((mean_a2 - mean_a * mean_a) / 50.0) / (1.0 - mean_a);

  double acc_coh = score_accuracy(loaded, random_coh);
  double acc_rel = score_accuracy(loaded, random_rel);
  double kap_coh = fleiss_kappa(random_coh, 6);
  double kap_rel = fleiss_kappa(random_rel, 6);
  bool random_ok = std::abs(acc_coh - 1.0 / 6.0) <= acc_band &&
                   std::abs(acc_rel - 1.0 / 6.0) <= acc_band &&
                   std::abs(kap_coh) <= kappa_band && std::abs(kap_rel) <= kappa_band;

  fs::remove(tasks_path);
  fs::remove(keys_path);
  fs::remove(resp_path);

  bool ok = generated && oracle_ok && random_ok;
  report(9, "intruder tasks round-trip and score correctly", ok,
         std::string(generated ? "100 tasks" : "TASK GENERATION OFF") +
             (oracle_ok ? ", key-readers at accuracy 1 / kappa 1" : ", ORACLE SCORING OFF") +
             ", random accuracy " + num(acc_coh) + "/" + num(acc_rel) + " (1/6 +/- " +
             num(acc_band) + "), kappa " + num(kap_coh) + "/" + num(kap_rel) + " (0 +/- " +
             num(kappa_band) + ")");
}

// ---- check 10: pipeline determinism -----------------------------------------

bool run_step(const std::string& cmd, std::string& err) {
  int rc = std::system(cmd.c_str());
  if (rc != 0) {
    err = "step failed (exit " + std::to_string(rc) + "): " + cmd;
    return false;
  }
  return true;
}

bool run_pipeline(const std::string& cli, const std::string& dir, std::string& err) {
  fs::remove_all(dir);
  std::string q = "\"" + cli + "\"";
  std::string out = " --out-dir \"" + dir + "\"";
  std::string null = " > /dev/null";
  if (!run_step(q + " synth" + out + " --seed 5 --K 3 --G 4 --L 10 --V 30 --D 230 --I 5" + null,
                err))
    return false;
  if (!run_step(q + " train --stimuli \"" + dir + "/synthetic.jsonl\"" + out +
                    " --seed 9 --K 3 --G 4 --sweeps 40 --chains 2 --threads 2 --test-split 30" +
                    null,
                err))
    return false;
  if (!run_step(q + " eval --stimuli \"" + dir + "/train_stimuli.jsonl\" --gold \"" + dir +
                    "/truth.tsv\" --pred bcf=\"" + dir + "/categorization_bcf.tsv\"" + out + null,
                err))
    return false;
  if (!run_step(q + " predict --model bcf --test \"" + dir + "/test_stimuli.jsonl\" --stimuli \"" +
                    dir + "/train_stimuli.jsonl\" --checkpoint \"" + dir + "/bcf_chain_0.ckpt\"" +
                    out + null,
                err))
    return false;
  if (!run_step(q + " tasks --model bcf --stimuli \"" + dir + "/train_stimuli.jsonl\"" +
                    " --checkpoint \"" + dir + "/bcf_chain_0.ckpt\"" + out +
                    " --seed 3 --top-n 3 --types-shown 3 --words-per-type 3" + null + " 2>/dev/null",
                err))
    return false;
  return true;
}

void check_pipeline_determinism(const std::string& cli) {
  const char* name = "pipeline reruns are byte-identical";
  if (cli.empty()) {
    report(10, name, false, "no CLI binary given (expected as argv[1])");
    return;
  }
  std::string a = (fs::temp_directory_path() / "bcf_accept_run1").string();
  std::string b = (fs::temp_directory_path() / "bcf_accept_run2").string();
  std::string err;
  if (!run_pipeline(cli, a, err) || !run_pipeline(cli, b, err)) {
    report(10, name, false, err);
    return;
  }

  auto names_of = [](const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
  };
  auto names_a = names_of(a), names_b = names_of(b);
  if (names_a != names_b) {
    report(10, name, false, "runs produced different file sets");
    return;
  }
  for (const auto& n : names_a) {
    if (read_file((fs::path(a) / n).string()) != read_file((fs::path(b) / n).string())) {
      report(10, name, false, "file differs between runs: " + n);
      return;
    }
  }
  fs::remove_all(a);
  fs::remove_all(b);
  report(10, name, true,
         std::to_string(names_a.size()) + " files identical across two full runs");
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli = argc > 1 ? argv[1] : "";
  RecoveryFixture fx;

  struct Step {
    int number;
    const char* name;
    std::function<void()> run;
  };
  std::vector<Step> steps = {
      {1, "stimulus and concept conditionals match exhaustive enumeration", [] { check_conditionals(); }},
      {2, "collapsed joint sums to one over all assignments and tokens", [] { check_total_probability(); }},
      {3, "count tables match a recount after 100 sweeps on 1000 stimuli", [] { check_count_consistency(); }},
      {4, "sharp synthetic structure is recovered after 500 sweeps", [&] { check_recovery(fx); }},
      {5, "clustering metrics match brute-force oracles on 1000 random tables", [] { check_metric_oracles(); }},
      {6, "F-score arithmetic cross-check", [] { check_f_anchor(); }},
      {7, "V-measure harmonic-mean cross-check", [] { check_harmonic_anchor(); }},
      {8, "trained model predicts held-out concepts far above chance", [&] { check_prediction(fx); }},
      {9, "intruder tasks round-trip and score correctly", [] { check_intruder_round_trip(); }},
      {10, "pipeline reruns are byte-identical", [&] { check_pipeline_determinism(cli); }},
  };
  for (const auto& step : steps) {
    try {
      step.run();
    } catch (const std::exception& e) {
      report(step.number, step.name, false, std::string("unexpected error: ") + e.what());
    }
  }

  std::printf("%d/10 checks passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
