#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "bcf/baselines.hpp"
#include "bcf/sampler.hpp"
#include "bcf/types.hpp"

namespace bcf {

struct GoldStandard {
  std::unordered_map<std::string, std::string> label_of;  // concept -> category label
  std::vector<std::string> labels;                        // distinct, in first-seen order
};

// TSV (concept string, label). Duplicate concepts are an error.
GoldStandard load_gold(const std::string& path);

struct ContingencyTable {
  std::vector<std::vector<int>> counts;  // induced x gold
  int N = 0;
};

// Cross-tabulates induced categories against gold labels over the concepts
// both sides cover. Throws if they share none.
ContingencyTable contingency(const Categorization& pred, const Vocabulary& vocab,
                             const GoldStandard& gold);

// Fraction of concepts whose induced cluster "votes" for their gold class:
// (1/N) sum_i max_j counts[i][j].
double purity(const ContingencyTable& table);
// Same with the roles swapped: (1/N) sum_j max_i counts[i][j].
double collocation(const ContingencyTable& table);
// (1+beta)*pu*co / (beta*pu + co); 0 when both inputs are 0. beta > 1 shifts
// weight toward collocation (the limit for large beta is co).
double f_beta(double pu, double co, double beta = 1.0);

struct VMeasure {
  double vh = 0.0;  // homogeneity
  double vc = 0.0;  // completeness
  double vm = 0.0;  // their weighted harmonic mean
};

// Entropy-based agreement (natural log, 0*log 0 = 0). A degenerate side with
// zero entropy scores 1 on its component.
VMeasure v_measure(const ContingencyTable& table, double beta = 1.0);

// One model's ranked guesses for which concept produced a feature bundle.
struct Prediction {
  std::vector<double> score;  // per concept; comparable within this prediction only
  std::vector<int> order;     // concept ids, best first (score desc, id asc)
  int skipped_unknown = 0;    // feature tokens outside the model vocabulary
};

// score(c) = sum_g mu_hat[category of c][g] * prod_f phi_hat[g][f], computed
// in log space. Unknown feature ids are skipped and counted; an all-unknown
// bundle is an error.
Prediction predict_concept_bcf(const PosteriorSummary& summary, const std::vector<int>& k_assign,
                               const std::vector<int>& features);

// score(c) = sum_z p(c|z) * prod_f p(f|z), log space, same unknown handling.
Prediction predict_concept_bayescat(const BayesCatModel& model, const std::vector<int>& features);

// score(c) = sum_f assoc(c, f). Unknown features contribute nothing.
Prediction predict_concept_assoc(const AssocMatrix& assoc, const std::vector<int>& features);

// 1-based position of the concept under the prediction's total order.
int rank_of(const Prediction& pred, int concept_id);

struct RankingResult {
  std::vector<int> ranks;
  double pr_at_1 = 0.0, pr_at_10 = 0.0, pr_at_20 = 0.0;
  double mean_rank = 0.0;
};

RankingResult ranking_metrics(const std::vector<int>& ranks, int L);

// Report writers, 3 decimals, one model per row.
struct MetricsRow {
  std::string model;
  double pu, co, f1, vh, vc, vm;
};
void write_metrics_report(const std::vector<MetricsRow>& rows, const std::string& path);

struct RankingRow {
  std::string model;
  double pr_at_1, pr_at_10, pr_at_20, mean_rank;
};
void write_ranking_report(const std::vector<RankingRow>& rows, const std::string& path);

}  // namespace bcf
