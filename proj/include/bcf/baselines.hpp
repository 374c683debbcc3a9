#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bcf/rng.hpp"
#include "bcf/types.hpp"

namespace bcf {

// ---- concept-feature co-occurrence + k-means ----------------------------

struct AssocMatrix {
  std::vector<std::vector<double>> values;  // L x V co-occurrence counts
  int min_count = 0;
};

// values[c][f] = number of (stimulus of concept c, feature token f) pairs,
// zeroed wherever the count falls below min_count.
AssocMatrix build_assoc(const StimulusSet& stimuli, int min_count);

// Lloyd's algorithm with seeded k-means++ starts. Deterministic: distance
// ties go to the lower index, empty clusters are reseeded from the point
// farthest from its current centroid.
std::vector<int> kmeans(const std::vector<std::vector<double>>& vectors, int k,
                        std::uint64_t seed, int max_iter = 100);

struct Categorization {
  int num_categories = 0;
  std::vector<int> category_of;  // indexed by concept id
};

// TSV (concept string, category id). Loading resolves names through the given
// vocabulary and requires every concept to appear exactly once.
void save_categorization(const Categorization& cat, const Vocabulary& vocab,
                         const std::string& path);
Categorization load_categorization(const std::string& path, const Vocabulary& vocab);

Categorization cooc_categorize(const AssocMatrix& assoc, int K, std::uint64_t seed);

// Feature-to-type assignment plus how strongly each (category, type) pair is
// associated. For the global clustering the relevance matrix has one row per
// category; per-category clusterings carry a single row (their own category).
struct FeatureTypeClustering {
  std::unordered_map<int, int> assignment;     // feature id -> type id
  std::vector<std::vector<double>> relevance;  // [category][type]
};

// Per category: features co-occurring with at least half the member concepts
// are clustered (by their association vector restricted to the members) into
// at most types_per_category types. Categories with no qualifying features get
// an empty clustering.
std::vector<FeatureTypeClustering> cooc_feature_types(const AssocMatrix& assoc,
                                                      const Categorization& cat,
                                                      int types_per_category, std::uint64_t seed);

// ---- admixture-of-categories baseline ------------------------------------

// Each stimulus draws one category z, emits its concept from p(c|z) and every
// feature token from p(f|z). Collapsed state for Gibbs sampling over z.
struct BayesCatState {
  int K = 0, L = 0, V = 0, D = 0;
  double alpha = 0.7, beta = 0.1, gamma = 0.1;
  std::vector<int> z_assign;               // D
  std::vector<int> n_z;                    // K: stimuli per category
  std::vector<std::vector<int>> n_zc;      // K x L: concept draws
  std::vector<std::vector<int>> n_zv;      // K x V: feature tokens
  std::vector<int> n_zv_total;             // K
  Rng rng;
  std::vector<int> concept_of;             // D
  std::vector<std::vector<std::pair<int, int>>> feat_counts;  // D
};

struct BayesCatModel {
  std::vector<double> p_z;                     // K
  std::vector<std::vector<double>> p_c_given_z;  // K x L
  std::vector<std::vector<double>> p_f_given_z;  // K x V
};

BayesCatState bayescat_init(const StimulusSet& stimuli, int K, double alpha, double beta,
                            double gamma, std::uint64_t seed);
void bayescat_remove(BayesCatState& state, int d);
void bayescat_add(BayesCatState& state, int d, int new_z);
// Unnormalized log weights over categories for stimulus d (d's counts removed).
std::vector<double> bayescat_conditional(const BayesCatState& state, int d);
void bayescat_sweep(BayesCatState& state);
// Collapsed joint over (z assignments, concept draws, feature tokens).
double bayescat_log_joint(const BayesCatState& state);
BayesCatModel bayescat_point_estimates(const BayesCatState& state);

BayesCatModel bayescat_train(const StimulusSet& stimuli, int K, double alpha, double beta,
                             double gamma, std::uint64_t seed, int sweeps);

// Single-object JSON carrying the three estimate tables plus both name lists,
// so a saved model predicts without the training stimuli at hand.
void save_bayescat_model(const BayesCatModel& model, const Vocabulary& vocab,
                         const std::string& path);
std::pair<BayesCatModel, Vocabulary> load_bayescat_model(const std::string& path);

// Features represented as p(z|f) (posterior over categories, normalized),
// clustered into G global types; relevance[z][g] = sum of p(f|z) over the
// type's features, so each row sums to 1.
FeatureTypeClustering bayescat_feature_types(const BayesCatModel& model, int G,
                                             std::uint64_t seed);

// Hard assignment z(c) = argmax_z p(c|z) p(z|c), ties to the lowest z.
Categorization bayescat_hard_assign(const BayesCatModel& model);

// ---- control -------------------------------------------------------------

Categorization random_categorize(int L, int K, std::uint64_t seed);

}  // namespace bcf
