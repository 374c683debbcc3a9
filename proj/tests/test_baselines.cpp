#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "bcf/baselines.hpp"
#include "bcf/rng.hpp"
#include "bcf/types.hpp"

using namespace bcf;

namespace {

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

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Objective actually minimized: sum of squared distances to cluster means.
double kmeans_objective(const std::vector<std::vector<double>>& pts,
                        const std::vector<int>& labels, int k) {
  std::size_t dim = pts[0].size();
  std::vector<std::vector<double>> mean(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ++count[static_cast<std::size_t>(labels[i])];
    for (std::size_t j = 0; j < dim; ++j)
      mean[static_cast<std::size_t>(labels[i])][j] += pts[i][j];
  }
  for (int c = 0; c < k; ++c)
    if (count[static_cast<std::size_t>(c)] > 0)
      for (auto& x : mean[static_cast<std::size_t>(c)]) x /= count[static_cast<std::size_t>(c)];
  double obj = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      double d = pts[i][j] - mean[static_cast<std::size_t>(labels[i])][j];
      obj += d * d;
    }
  return obj;
}

}  // namespace

TEST_CASE("association counts match a hand tally and honor min_count") {
  // c0: tokens f0 x3 (2+1), f1 x1. c1: f1 x2, f2 x1.
  auto set = tiny_set(2, 3, {{0, {0, 0, 1}}, {0, {0}}, {1, {1, 1, 2}}});
  AssocMatrix a = build_assoc(set, 0);
  CHECK(a.values[0] == std::vector<double>{3, 1, 0});
  CHECK(a.values[1] == std::vector<double>{0, 2, 1});

  AssocMatrix b = build_assoc(set, 2);
  CHECK(b.values[0] == std::vector<double>{3, 0, 0});  // the 1s fall below min_count
  CHECK(b.values[1] == std::vector<double>{0, 2, 0});
  CHECK(b.min_count == 2);
}

TEST_CASE("kmeans separates obvious 1-D blobs") {
  std::vector<std::vector<double>> pts = {{0.0}, {0.1}, {0.2}, {10.0}, {10.1}, {20.0}};
  auto labels = kmeans(pts, 3, 5);
  CHECK(labels[0] == labels[1]);
  CHECK(labels[1] == labels[2]);
  CHECK(labels[3] == labels[4]);
  CHECK(labels[0] != labels[3]);
  CHECK(labels[5] != labels[0]);
  CHECK(labels[5] != labels[3]);
}

TEST_CASE("kmeans with k = n isolates every point") {
  std::vector<std::vector<double>> pts = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {5.0, 5.0}};
  auto labels = kmeans(pts, 4, 9);
  std::set<int> distinct(labels.begin(), labels.end());
  CHECK(distinct.size() == 4);
}

TEST_CASE("kmeans reaches the brute-force optimum on separated 2-D blobs") {
  std::vector<std::vector<double>> pts = {{0.0, 0.0}, {0.2, 0.1}, {0.1, 0.3},
                                          {8.0, 8.0}, {8.1, 8.3}, {7.8, 8.1}};
  // Enumerate all 2^6 labelings; keep the best objective over those using
  // both clusters.
  double best = 1e18;
  for (int m = 1; m < 63; ++m) {
    std::vector<int> labels(6);
    for (int i = 0; i < 6; ++i) labels[static_cast<std::size_t>(i)] = (m >> i) & 1;
    best = std::min(best, kmeans_objective(pts, labels, 2));
  }
  auto got = kmeans(pts, 2, 3);
  CHECK(kmeans_objective(pts, got, 2) == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("kmeans is deterministic per seed and never leaves a cluster empty") {
  std::vector<std::vector<double>> pts = {{0.0}, {0.0}, {0.0}, {9.0}};
  auto a = kmeans(pts, 3, 1);
  auto b = kmeans(pts, 3, 1);
  CHECK(a == b);
  std::set<int> distinct(a.begin(), a.end());
  CHECK(distinct.size() == 3);  // duplicates force the empty-cluster repair

  CHECK_THROWS_AS(kmeans(pts, 5, 1), Error);  // more clusters than points
  CHECK_THROWS_AS(kmeans({}, 1, 1), Error);
}

TEST_CASE("co-occurrence categorization groups concepts with shared features") {
  // c0, c1 share features 0/1; c2, c3 share features 2/3.
  auto set = tiny_set(4, 4,
                      {{0, {0, 0, 1}}, {1, {0, 1, 1}}, {2, {2, 3, 3}}, {3, {2, 2, 3}}});
  AssocMatrix a = build_assoc(set, 0);
  Categorization cat = cooc_categorize(a, 2, 7);
  CHECK(cat.num_categories == 2);
  CHECK(cat.category_of[0] == cat.category_of[1]);
  CHECK(cat.category_of[2] == cat.category_of[3]);
  CHECK(cat.category_of[0] != cat.category_of[2]);

  CHECK_THROWS_AS(cooc_categorize(a, 5, 7), Error);  // K exceeds the concept count
}

TEST_CASE("co-occurrence feature types use the half-the-members support rule") {
  // Category 0 = {c0, c1, c2}: need support >= 2.
  //   f0 co-occurs with all three, f1 with two, f2 with only c2 (excluded),
  //   f3 with none of them (excluded even though c3 uses it heavily).
  auto set = tiny_set(4, 4,
                      {{0, {0, 1, 1}}, {1, {0, 1, 1}}, {2, {0, 0, 2}}, {3, {3, 3, 3}}});
  AssocMatrix a = build_assoc(set, 0);
  Categorization cat;
  cat.num_categories = 2;
  cat.category_of = {0, 0, 0, 1};
  auto per_cat = cooc_feature_types(a, cat, 5, 11);
  REQUIRE(per_cat.size() == 2);

  std::set<int> clustered;
  for (const auto& [f, g] : per_cat[0].assignment) clustered.insert(f);
  CHECK(clustered == std::set<int>{0, 1});
  // k = min(types_per_category, candidates) = 2 here.
  REQUIRE(per_cat[0].relevance.size() == 1);
  CHECK(per_cat[0].relevance[0].size() <= 2);
  double sum = std::accumulate(per_cat[0].relevance[0].begin(), per_cat[0].relevance[0].end(), 0.0);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // Category 1 = {c3}: need 1; only f3 qualifies; one type holds everything.
  REQUIRE(per_cat[1].assignment.size() == 1);
  CHECK(per_cat[1].assignment.count(3) == 1);
  CHECK(per_cat[1].relevance[0] == std::vector<double>{1.0});
}

TEST_CASE("categories with no members or no candidates get empty clusterings") {
  auto set = tiny_set(2, 2, {{0, {0, 0, 0}}, {1, {1, 1, 1}}});
  AssocMatrix a = build_assoc(set, 0);
  Categorization cat;
  cat.num_categories = 3;
  cat.category_of = {0, 0};  // category 1 and 2 empty
  auto per_cat = cooc_feature_types(a, cat, 4, 1);
  REQUIRE(per_cat.size() == 3);
  CHECK(per_cat[1].assignment.empty());
  CHECK(per_cat[1].relevance.empty());
  CHECK(per_cat[2].assignment.empty());
}

// ---- admixture baseline ----------------------------------------------------

namespace {

// Force a state into the given assignment via the public remove/add pair.
void force_assignments(BayesCatState& st, const std::vector<int>& z) {
  for (int d = 0; d < st.D; ++d) {
    bayescat_remove(st, d);
    bayescat_add(st, d, z[static_cast<std::size_t>(d)]);
  }
}

}  // namespace

TEST_CASE("admixture conditionals match exhaustive enumeration") {
  for (std::uint64_t trial = 0; trial < 40; ++trial) {
    Rng rng(500 + trial);
    int L = 1 + static_cast<int>(next_below(rng, 3));
    int V = 1 + static_cast<int>(next_below(rng, 4));
    int D = 1 + static_cast<int>(next_below(rng, 5));
    int K = 1 + static_cast<int>(next_below(rng, 3));
    std::vector<std::pair<int, std::vector<int>>> rows;
    for (int d = 0; d < D; ++d) {
      int cid = static_cast<int>(next_below(rng, static_cast<std::uint64_t>(L)));
      std::vector<int> feats;
      int width = 1 + static_cast<int>(next_below(rng, 3));
      for (int i = 0; i < width; ++i)
        feats.push_back(static_cast<int>(next_below(rng, static_cast<std::uint64_t>(V))));
      rows.emplace_back(cid, feats);
    }
    auto set = tiny_set(L, V, rows);
    std::vector<int> z;
    for (int d = 0; d < D; ++d)
      z.push_back(static_cast<int>(next_below(rng, static_cast<std::uint64_t>(K))));

    for (int d = 0; d < D; ++d) {
      BayesCatState st = bayescat_init(set, K, 0.7, 0.3, 0.2, 1);
      force_assignments(st, z);
      // Oracle: evaluate the collapsed joint at every candidate z_d.
      std::vector<double> lj(static_cast<std::size_t>(K));
      for (int cand = 0; cand < K; ++cand) {
        bayescat_remove(st, d);
        bayescat_add(st, d, cand);
        lj[static_cast<std::size_t>(cand)] = bayescat_log_joint(st);
      }
      auto want = normalize_log_weights(lj);
      // Sampler path.
      bayescat_remove(st, d);
      auto got = normalize_log_weights(bayescat_conditional(st, d));
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("single-category admixture training reduces to smoothed frequencies") {
  auto set = tiny_set(2, 3, {{0, {0, 0, 1}}, {1, {2}}, {0, {1}}});
  double alpha = 0.7, beta = 0.5, gamma = 0.25;
  BayesCatModel m = bayescat_train(set, 1, alpha, beta, gamma, 3, 10);
  CHECK(m.p_z[0] == doctest::Approx(1.0));
  // Concept draws: c0 twice, c1 once; (n + beta) / (3 + 2 beta).
  CHECK(m.p_c_given_z[0][0] == doctest::Approx(2.5 / 4.0).epsilon(1e-12));
  CHECK(m.p_c_given_z[0][1] == doctest::Approx(1.5 / 4.0).epsilon(1e-12));
  // Tokens: f0 x2, f1 x2, f2 x1; (n + gamma) / (5 + 3 gamma).
  CHECK(m.p_f_given_z[0][0] == doctest::Approx(2.25 / 5.75).epsilon(1e-12));
  CHECK(m.p_f_given_z[0][2] == doctest::Approx(1.25 / 5.75).epsilon(1e-12));
}

TEST_CASE("admixture training is deterministic per seed") {
  Rng rng(9);
  std::vector<std::pair<int, std::vector<int>>> rows;
  for (int d = 0; d < 40; ++d)
    rows.emplace_back(static_cast<int>(next_below(rng, 5)),
                      std::vector<int>{static_cast<int>(next_below(rng, 8)),
                                       static_cast<int>(next_below(rng, 8)),
                                       static_cast<int>(next_below(rng, 8))});
  auto set = tiny_set(5, 8, rows);
  BayesCatModel a = bayescat_train(set, 3, 0.7, 0.1, 0.1, 21, 30);
  BayesCatModel b = bayescat_train(set, 3, 0.7, 0.1, 0.1, 21, 30);
  CHECK(a.p_z == b.p_z);
  CHECK(a.p_c_given_z == b.p_c_given_z);
  CHECK(a.p_f_given_z == b.p_f_given_z);
}

TEST_CASE("admixture model files round-trip") {
  auto set = tiny_set(3, 4, {{0, {0, 1, 2}}, {1, {3, 3, 0}}, {2, {1, 2, 3}}});
  BayesCatModel m = bayescat_train(set, 2, 0.7, 0.1, 0.1, 5, 20);
  std::string path = temp_path("bcf_test_bayescat.json");
  save_bayescat_model(m, set.vocab, path);
  auto [back, vocab] = load_bayescat_model(path);
  CHECK(back.p_z == m.p_z);
  CHECK(back.p_c_given_z == m.p_c_given_z);
  CHECK(back.p_f_given_z == m.p_f_given_z);
  CHECK(vocab == set.vocab);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_bayescat_model(temp_path("bcf_missing_model.json")), Error);
}

TEST_CASE("admixture feature typing keeps probability mass per category") {
  auto set = tiny_set(3, 6,
                      {{0, {0, 1, 0}}, {1, {2, 3, 2}}, {2, {4, 5, 4}}, {0, {1, 1, 0}}});
  BayesCatModel m = bayescat_train(set, 2, 0.7, 0.1, 0.1, 13, 25);
  FeatureTypeClustering ftc = bayescat_feature_types(m, 3, 31);
  CHECK(ftc.assignment.size() == 6);  // every feature lands in a type
  for (const auto& [f, g] : ftc.assignment) CHECK((g >= 0 && g < 3));
  REQUIRE(ftc.relevance.size() == 2);
  for (const auto& row : ftc.relevance) {
    CHECK(row.size() == 3);
    CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(bayescat_feature_types(m, 7, 31), Error);  // more types than features
}

TEST_CASE("hard assignment maximizes p(c|z) p(z|c) with ties to the lowest z") {
  BayesCatModel m;
  m.p_z = {0.6, 0.4};
  m.p_c_given_z = {{0.9, 0.1}, {0.2, 0.8}};
  m.p_f_given_z = {{1.0}, {1.0}};
  Categorization cat = bayescat_hard_assign(m);
  CHECK(cat.num_categories == 2);
  CHECK(cat.category_of == std::vector<int>{0, 1});

  // Perfect symmetry: every score ties, so everything goes to z = 0.
  BayesCatModel u;
  u.p_z = {0.5, 0.5};
  u.p_c_given_z = {{0.5, 0.5}, {0.5, 0.5}};
  u.p_f_given_z = {{1.0}, {1.0}};
  Categorization flat = bayescat_hard_assign(u);
  CHECK(flat.category_of == std::vector<int>{0, 0});
}

// ---- control and persistence -----------------------------------------------

TEST_CASE("random categorization is deterministic, in range, and roughly uniform") {
  Categorization a = random_categorize(4000, 4, 17);
  Categorization b = random_categorize(4000, 4, 17);
  CHECK(a.category_of == b.category_of);
  CHECK(a.num_categories == 4);

  std::vector<int> counts(4, 0);
  for (int k : a.category_of) {
    REQUIRE((k >= 0 && k < 4));
    ++counts[static_cast<std::size_t>(k)];
  }
  for (int c : counts) {
    CHECK(c > 1000 - 150);  // ~5.5 sd
    CHECK(c < 1000 + 150);
  }
}

TEST_CASE("categorization files round-trip and reject malformed input") {
  auto set = tiny_set(3, 2, {{0, {0}}, {1, {1}}, {2, {0}}});
  Categorization cat;
  cat.num_categories = 2;
  cat.category_of = {1, 0, 1};
  std::string path = temp_path("bcf_test_cat.tsv");
  save_categorization(cat, set.vocab, path);
  Categorization back = load_categorization(path, set.vocab);
  CHECK(back.category_of == cat.category_of);
  CHECK(back.num_categories == 2);

  {
    std::ofstream os(path);  // c2 missing
    os << "c0\t1\nc1\t0\n";
  }
  CHECK_THROWS_AS(load_categorization(path, set.vocab), Error);
  {
    std::ofstream os(path);  // c0 twice
    os << "c0\t1\nc0\t0\nc1\t0\nc2\t1\n";
  }
  CHECK_THROWS_AS(load_categorization(path, set.vocab), Error);
  {
    std::ofstream os(path);  // unknown concept
    os << "c0\t1\nc1\t0\nc9\t1\n";
  }
  CHECK_THROWS_AS(load_categorization(path, set.vocab), Error);
  std::filesystem::remove(path);
}
