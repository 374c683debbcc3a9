#include "bcf/eval.hpp"

#include <algorithm>
#include <cmath>

#include "bcf/io_util.hpp"

namespace bcf {

GoldStandard load_gold(const std::string& path) {
  GoldStandard gold;
  std::unordered_map<std::string, int> seen_label;
  int lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = tsv_split(line);
    if (fields.size() != 2)
      throw Error("gold file " + path + " line " + std::to_string(lineno) +
                  ": expected 2 tab-separated columns");
    if (gold.label_of.count(fields[0]))
      throw Error("gold file " + path + " line " + std::to_string(lineno) + ": duplicate concept " +
                  fields[0]);
    gold.label_of.emplace(fields[0], fields[1]);
    if (!seen_label.count(fields[1])) {
      seen_label.emplace(fields[1], static_cast<int>(gold.labels.size()));
      gold.labels.push_back(fields[1]);
    }
  }
  if (gold.label_of.empty()) throw Error("gold file " + path + " is empty");
  return gold;
}

ContingencyTable contingency(const Categorization& pred, const Vocabulary& vocab,
                             const GoldStandard& gold) {
  std::unordered_map<std::string, int> gold_id;
  for (std::size_t j = 0; j < gold.labels.size(); ++j)
    gold_id.emplace(gold.labels[j], static_cast<int>(j));

  ContingencyTable table;
  table.counts.assign(static_cast<std::size_t>(pred.num_categories),
                      std::vector<int>(gold.labels.size(), 0));
  for (int l = 0; l < vocab.num_concepts(); ++l) {
    auto it = gold.label_of.find(vocab.concept_name(l));
    if (it == gold.label_of.end()) continue;  // concept not covered by the gold standard
    int i = pred.category_of[static_cast<std::size_t>(l)];
    int j = gold_id.at(it->second);
    ++table.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    ++table.N;
  }
  if (table.N == 0) throw Error("no concepts shared between the categorization and the gold standard");
  return table;
}

double purity(const ContingencyTable& table) {
  long long total = 0;
  for (const auto& row : table.counts)
    total += *std::max_element(row.begin(), row.end());
  return static_cast<double>(total) / table.N;
}

double collocation(const ContingencyTable& table) {
  if (table.counts.empty()) return 0.0;
  std::size_t cols = table.counts[0].size();
  long long total = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    int best = 0;
    for (const auto& row : table.counts) best = std::max(best, row[j]);
    total += best;
  }
  return static_cast<double>(total) / table.N;
}

double f_beta(double pu, double co, double beta) {
  if (pu == 0.0 && co == 0.0) return 0.0;
  return (1.0 + beta) * pu * co / (beta * pu + co);
}

VMeasure v_measure(const ContingencyTable& table, double beta) {
  std::size_t rows = table.counts.size();
  std::size_t cols = rows ? table.counts[0].size() : 0;
  double n = static_cast<double>(table.N);

  std::vector<double> p_c(rows, 0.0), p_g(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      p_c[i] += table.counts[i][j] / n;
      p_g[j] += table.counts[i][j] / n;
    }

  auto ent = [](const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p)
      if (x > 0.0) h -= x * std::log(x);
    return h;
  };
  double h_g = ent(p_g), h_c = ent(p_c);

  double h_g_given_c = 0.0, h_c_given_g = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      double joint = table.counts[i][j] / n;
      if (joint <= 0.0) continue;
      h_g_given_c -= joint * std::log(joint / p_c[i]);
      h_c_given_g -= joint * std::log(joint / p_g[j]);
    }

  VMeasure v;
  v.vh = h_g == 0.0 ? 1.0 : 1.0 - h_g_given_c / h_g;
  v.vc = h_c == 0.0 ? 1.0 : 1.0 - h_c_given_g / h_c;
  v.vm = (v.vh == 0.0 && v.vc == 0.0) ? 0.0 : (1.0 + beta) * v.vh * v.vc / (beta * v.vh + v.vc);
  return v;
}

// Shared ordering step: fill `order` with ids sorted by score desc, id asc.
static void finish_ranking(Prediction& pred) {
  pred.order.resize(pred.score.size());
  for (std::size_t i = 0; i < pred.order.size(); ++i) pred.order[i] = static_cast<int>(i);
  std::stable_sort(pred.order.begin(), pred.order.end(), [&](int a, int b) {
    return pred.score[static_cast<std::size_t>(a)] > pred.score[static_cast<std::size_t>(b)];
  });
}

static double log_sum_exp(const std::vector<double>& xs) {
  double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// Drops ids outside [0, V); returns the survivors and how many were dropped.
static std::vector<int> known_features(const std::vector<int>& features, int V, int& skipped) {
  std::vector<int> known;
  for (int f : features) {
    if (f >= 0 && f < V)
      known.push_back(f);
    else
      ++skipped;
  }
  return known;
}

Prediction predict_concept_bcf(const PosteriorSummary& summary, const std::vector<int>& k_assign,
                               const std::vector<int>& features) {
  int G = static_cast<int>(summary.phi_hat.size());
  int V = G > 0 ? static_cast<int>(summary.phi_hat[0].size()) : 0;
  Prediction pred;
  std::vector<int> known = known_features(features, V, pred.skipped_unknown);
  if (known.empty()) throw Error("no feature in the model vocabulary");

  // Token likelihood under each feature type, then one log-sum-exp per
  // category; concepts inherit their category's score.
  std::vector<double> log_lik(static_cast<std::size_t>(G), 0.0);
  for (int g = 0; g < G; ++g)
    for (int f : known)
      log_lik[static_cast<std::size_t>(g)] +=
          std::log(summary.phi_hat[static_cast<std::size_t>(g)][static_cast<std::size_t>(f)]);

  int K = static_cast<int>(summary.mu_hat.size());
  std::vector<double> cat_score(static_cast<std::size_t>(K));
  std::vector<double> terms(static_cast<std::size_t>(G));
  for (int k = 0; k < K; ++k) {
    for (int g = 0; g < G; ++g)
      terms[static_cast<std::size_t>(g)] =
          std::log(summary.mu_hat[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)]) +
          log_lik[static_cast<std::size_t>(g)];
    cat_score[static_cast<std::size_t>(k)] = log_sum_exp(terms);
  }

  pred.score.resize(k_assign.size());
  for (std::size_t l = 0; l < k_assign.size(); ++l)
    pred.score[l] = cat_score[static_cast<std::size_t>(k_assign[l])];
  finish_ranking(pred);
  return pred;
}

Prediction predict_concept_bayescat(const BayesCatModel& model, const std::vector<int>& features) {
  int K = static_cast<int>(model.p_f_given_z.size());
  int V = K > 0 ? static_cast<int>(model.p_f_given_z[0].size()) : 0;
  int L = K > 0 ? static_cast<int>(model.p_c_given_z[0].size()) : 0;
  Prediction pred;
  std::vector<int> known = known_features(features, V, pred.skipped_unknown);
  if (known.empty()) throw Error("no feature in the model vocabulary");

  std::vector<double> log_lik(static_cast<std::size_t>(K), 0.0);
  for (int z = 0; z < K; ++z)
    for (int f : known)
      log_lik[static_cast<std::size_t>(z)] +=
          std::log(model.p_f_given_z[static_cast<std::size_t>(z)][static_cast<std::size_t>(f)]);

  pred.score.resize(static_cast<std::size_t>(L));
  std::vector<double> terms(static_cast<std::size_t>(K));
  for (int c = 0; c < L; ++c) {
    for (int z = 0; z < K; ++z)
      terms[static_cast<std::size_t>(z)] =
          std::log(model.p_c_given_z[static_cast<std::size_t>(z)][static_cast<std::size_t>(c)]) +
          log_lik[static_cast<std::size_t>(z)];
    pred.score[static_cast<std::size_t>(c)] = log_sum_exp(terms);
  }
  finish_ranking(pred);
  return pred;
}

Prediction predict_concept_assoc(const AssocMatrix& assoc, const std::vector<int>& features) {
  int L = static_cast<int>(assoc.values.size());
  int V = L > 0 ? static_cast<int>(assoc.values[0].size()) : 0;
  Prediction pred;
  pred.score.assign(static_cast<std::size_t>(L), 0.0);
  for (int f : features) {
    if (f < 0 || f >= V) {
      ++pred.skipped_unknown;  // contributes nothing, but the caller hears about it
      continue;
    }
    for (int c = 0; c < L; ++c)
      pred.score[static_cast<std::size_t>(c)] +=
          assoc.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(f)];
  }
  finish_ranking(pred);
  return pred;
}

int rank_of(const Prediction& pred, int concept_id) {
  for (std::size_t i = 0; i < pred.order.size(); ++i)
    if (pred.order[i] == concept_id) return static_cast<int>(i) + 1;
  throw Error("concept id absent from prediction");
}

RankingResult ranking_metrics(const std::vector<int>& ranks, int L) {
  if (ranks.empty()) throw Error("no ranks to aggregate");
  RankingResult r;
  r.ranks = ranks;
  long long sum = 0;
  int at1 = 0, at10 = 0, at20 = 0;
  for (int rank : ranks) {
    if (rank < 1 || rank > L) throw Error("rank outside [1, L]");
    sum += rank;
    if (rank <= 1) ++at1;
    if (rank <= 10) ++at10;
    if (rank <= 20) ++at20;
  }
  double n = static_cast<double>(ranks.size());
  r.pr_at_1 = at1 / n;
  r.pr_at_10 = at10 / n;
  r.pr_at_20 = at20 / n;
  r.mean_rank = static_cast<double>(sum) / n;
  return r;
}

void write_metrics_report(const std::vector<MetricsRow>& rows, const std::string& path) {
  atomic_write(path, [&](std::ostream& out) {
    out << "model\tpu\tco\tF1\tVH\tVC\tVM\n";
    for (const auto& r : rows)
      out << r.model << '\t' << fmt3(r.pu) << '\t' << fmt3(r.co) << '\t' << fmt3(r.f1) << '\t'
          << fmt3(r.vh) << '\t' << fmt3(r.vc) << '\t' << fmt3(r.vm) << '\n';
  });
}

void write_ranking_report(const std::vector<RankingRow>& rows, const std::string& path) {
  atomic_write(path, [&](std::ostream& out) {
    out << "model\tpr@1\tpr@10\tpr@20\tavg_rank\n";
    for (const auto& r : rows)
      out << r.model << '\t' << fmt3(r.pr_at_1) << '\t' << fmt3(r.pr_at_10) << '\t'
          << fmt3(r.pr_at_20) << '\t' << fmt3(r.mean_rank) << '\n';
  });
}

}  // namespace bcf
