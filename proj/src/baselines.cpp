#include "bcf/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "bcf/io_util.hpp"

namespace bcf {

AssocMatrix build_assoc(const StimulusSet& stimuli, int min_count) {
  if (min_count < 0) throw Error("min_count must be >= 0");
  int L = stimuli.vocab.num_concepts(), V = stimuli.vocab.num_features();
  AssocMatrix m;
  m.min_count = min_count;
  m.values.assign(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(V), 0.0));
  for (const auto& s : stimuli.stimuli)
    for (int f : s.features)
      m.values[static_cast<std::size_t>(s.concept_id)][static_cast<std::size_t>(f)] += 1.0;
  for (auto& row : m.values)
    for (auto& x : row)
      if (x < min_count) x = 0.0;
  return m;
}

static double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<int> kmeans(const std::vector<std::vector<double>>& vectors, int k,
                        std::uint64_t seed, int max_iter) {
  int n = static_cast<int>(vectors.size());
  if (k < 1) throw Error("k must be >= 1");
  if (k > n) throw Error("k exceeds number of points");
  std::size_t dim = vectors[0].size();
  for (const auto& v : vectors)
    if (v.size() != dim) throw Error("k-means points differ in dimension");

  Rng rng(seed);
  // k-means++ seeding: first centroid uniform, the rest by squared-distance
  // weight. When every remaining point duplicates a chosen centroid the weight
  // mass is zero; fall back to the first unchosen index.
  std::vector<std::vector<double>> centroids;
  centroids.push_back(vectors[next_below(rng, static_cast<std::uint64_t>(n))]);
  std::vector<double> d2(static_cast<std::size_t>(n));
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centroids) best = std::min(best, sq_dist(vectors[static_cast<std::size_t>(i)], c));
      d2[static_cast<std::size_t>(i)] = best;
      total += best;
    }
    int pick;
    if (total > 0.0) {
      pick = sample_discrete(rng, d2);
    } else {
      pick = 0;
      while (d2[static_cast<std::size_t>(pick)] == 0.0 && pick + 1 < n) ++pick;
    }
    centroids.push_back(vectors[static_cast<std::size_t>(pick)]);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment step; nearest centroid, ties to the lower cluster id.
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(vectors[static_cast<std::size_t>(i)], centroids[0]);
      for (int c = 1; c < k; ++c) {
        double d = sq_dist(vectors[static_cast<std::size_t>(i)], centroids[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    // Update step.
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      int c = assign[static_cast<std::size_t>(i)];
      ++sizes[static_cast<std::size_t>(c)];
      for (std::size_t j = 0; j < dim; ++j) sums[static_cast<std::size_t>(c)][j] += vectors[static_cast<std::size_t>(i)][j];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] == 0) {
        // Empty cluster: reseed from the point farthest from its centroid.
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          double d = sq_dist(vectors[static_cast<std::size_t>(i)],
                             centroids[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids[static_cast<std::size_t>(c)] = vectors[static_cast<std::size_t>(far)];
        assign[static_cast<std::size_t>(far)] = c;
        changed = true;
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j)
        centroids[static_cast<std::size_t>(c)][j] =
            sums[static_cast<std::size_t>(c)][j] / sizes[static_cast<std::size_t>(c)];
    }
    if (!changed && iter > 0) break;
  }
  return assign;
}

void save_categorization(const Categorization& cat, const Vocabulary& vocab,
                         const std::string& path) {
  if (static_cast<int>(cat.category_of.size()) != vocab.num_concepts())
    throw Error("categorization length differs from concept count");
  atomic_write(path, [&](std::ostream& out) {
    for (int l = 0; l < vocab.num_concepts(); ++l)
      out << vocab.concept_name(l) << '\t' << cat.category_of[static_cast<std::size_t>(l)] << '\n';
  });
}

Categorization load_categorization(const std::string& path, const Vocabulary& vocab) {
  Categorization cat;
  cat.category_of.assign(static_cast<std::size_t>(vocab.num_concepts()), -1);
  int lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = tsv_split(line);
    if (fields.size() != 2)
      throw Error("categorization file " + path + " line " + std::to_string(lineno) +
                  ": expected 2 tab-separated columns");
    int l = vocab.concept_id(fields[0]);
    if (l < 0)
      throw Error("categorization file " + path + " line " + std::to_string(lineno) +
                  ": unknown concept " + fields[0]);
    if (cat.category_of[static_cast<std::size_t>(l)] != -1)
      throw Error("categorization file " + path + " line " + std::to_string(lineno) +
                  ": duplicate concept " + fields[0]);
    try {
      cat.category_of[static_cast<std::size_t>(l)] = std::stoi(fields[1]);
    } catch (const std::exception&) {
      throw Error("categorization file " + path + " line " + std::to_string(lineno) +
                  ": bad category id " + fields[1]);
    }
  }
  for (int l = 0; l < vocab.num_concepts(); ++l)
    if (cat.category_of[static_cast<std::size_t>(l)] < 0)
      throw Error("categorization file " + path + ": no entry for concept " + vocab.concept_name(l));
  cat.num_categories = 1 + *std::max_element(cat.category_of.begin(), cat.category_of.end());
  return cat;
}

Categorization cooc_categorize(const AssocMatrix& assoc, int K, std::uint64_t seed) {
  int L = static_cast<int>(assoc.values.size());
  if (K > L) throw Error("K exceeds number of concepts");
  Categorization cat;
  cat.num_categories = K;
  cat.category_of = kmeans(assoc.values, K, seed);
  return cat;
}

std::vector<FeatureTypeClustering> cooc_feature_types(const AssocMatrix& assoc,
                                                      const Categorization& cat,
                                                      int types_per_category, std::uint64_t seed) {
  if (types_per_category < 1) throw Error("types_per_category must be >= 1");
  int L = static_cast<int>(assoc.values.size());
  int V = L > 0 ? static_cast<int>(assoc.values[0].size()) : 0;
  std::vector<FeatureTypeClustering> out(static_cast<std::size_t>(cat.num_categories));
  for (int c = 0; c < cat.num_categories; ++c) {
    std::vector<int> members;
    for (int l = 0; l < L; ++l)
      if (cat.category_of[static_cast<std::size_t>(l)] == c) members.push_back(l);
    if (members.empty()) continue;
    int need = (static_cast<int>(members.size()) + 1) / 2;  // at least half
    std::vector<int> candidates;
    for (int f = 0; f < V; ++f) {
      int support = 0;
      for (int l : members)
        if (assoc.values[static_cast<std::size_t>(l)][static_cast<std::size_t>(f)] > 0.0) ++support;
      if (support >= need) candidates.push_back(f);
    }
    if (candidates.empty()) continue;  // recorded as an empty clustering
    // Each candidate represented by its association counts to the members.
    std::vector<std::vector<double>> reps;
    reps.reserve(candidates.size());
    for (int f : candidates) {
      std::vector<double> rep;
      rep.reserve(members.size());
      for (int l : members)
        rep.push_back(assoc.values[static_cast<std::size_t>(l)][static_cast<std::size_t>(f)]);
      reps.push_back(std::move(rep));
    }
    int k = std::min(types_per_category, static_cast<int>(candidates.size()));
    std::vector<int> assign = kmeans(reps, k, seed + static_cast<std::uint64_t>(c));
    auto& ftc = out[static_cast<std::size_t>(c)];
    std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      int g = assign[i];
      ftc.assignment[candidates[i]] = g;
      double w = 0.0;
      for (int l : members)
        w += assoc.values[static_cast<std::size_t>(l)][static_cast<std::size_t>(candidates[i])];
      mass[static_cast<std::size_t>(g)] += w;
      total += w;
    }
    if (total > 0.0)
      for (auto& x : mass) x /= total;
    ftc.relevance.push_back(std::move(mass));
  }
  return out;
}

// ---- admixture baseline ----------------------------------------------------

BayesCatState bayescat_init(const StimulusSet& stimuli, int K, double alpha, double beta,
                            double gamma, std::uint64_t seed) {
  if (K < 1) throw Error("K must be >= 1");
  if (!(alpha > 0.0 && beta > 0.0 && gamma > 0.0)) throw Error("hyperparameters must be > 0");
  if (stimuli.stimuli.empty()) throw Error("empty stimulus set");
  BayesCatState st;
  st.K = K;
  st.L = stimuli.vocab.num_concepts();
  st.V = stimuli.vocab.num_features();
  st.D = stimuli.num_stimuli();
  st.alpha = alpha;
  st.beta = beta;
  st.gamma = gamma;
  st.rng.seed(seed);
  st.concept_of.resize(static_cast<std::size_t>(st.D));
  st.feat_counts.resize(static_cast<std::size_t>(st.D));
  for (int d = 0; d < st.D; ++d) {
    const Stimulus& s = stimuli.stimuli[static_cast<std::size_t>(d)];
    st.concept_of[static_cast<std::size_t>(d)] = s.concept_id;
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
  st.z_assign.resize(static_cast<std::size_t>(st.D));
  for (int d = 0; d < st.D; ++d)
    st.z_assign[static_cast<std::size_t>(d)] = static_cast<int>(next_below(st.rng, static_cast<std::uint64_t>(K)));
  st.n_z.assign(static_cast<std::size_t>(K), 0);
  st.n_zc.assign(static_cast<std::size_t>(K), std::vector<int>(static_cast<std::size_t>(st.L), 0));
  st.n_zv.assign(static_cast<std::size_t>(K), std::vector<int>(static_cast<std::size_t>(st.V), 0));
  st.n_zv_total.assign(static_cast<std::size_t>(K), 0);
  for (int d = 0; d < st.D; ++d) {
    int z = st.z_assign[static_cast<std::size_t>(d)];
    ++st.n_z[static_cast<std::size_t>(z)];
    ++st.n_zc[static_cast<std::size_t>(z)][static_cast<std::size_t>(st.concept_of[static_cast<std::size_t>(d)])];
    for (auto [v, c] : st.feat_counts[static_cast<std::size_t>(d)]) {
      st.n_zv[static_cast<std::size_t>(z)][static_cast<std::size_t>(v)] += c;
      st.n_zv_total[static_cast<std::size_t>(z)] += c;
    }
  }
  return st;
}

void bayescat_remove(BayesCatState& state, int d) {
  if (d < 0 || d >= state.D) throw Error("stimulus index out of range");
  int z = state.z_assign[static_cast<std::size_t>(d)];
  if (--state.n_z[static_cast<std::size_t>(z)] < 0) throw Error("count went negative: n_z");
  if (--state.n_zc[static_cast<std::size_t>(z)][static_cast<std::size_t>(state.concept_of[static_cast<std::size_t>(d)])] < 0)
    throw Error("count went negative: n_zc");
  for (auto [v, c] : state.feat_counts[static_cast<std::size_t>(d)]) {
    auto& cell = state.n_zv[static_cast<std::size_t>(z)][static_cast<std::size_t>(v)];
    cell -= c;
    if (cell < 0) throw Error("count went negative: n_zv");
    state.n_zv_total[static_cast<std::size_t>(z)] -= c;
  }
}

void bayescat_add(BayesCatState& state, int d, int new_z) {
  state.z_assign[static_cast<std::size_t>(d)] = new_z;
  ++state.n_z[static_cast<std::size_t>(new_z)];
  ++state.n_zc[static_cast<std::size_t>(new_z)][static_cast<std::size_t>(state.concept_of[static_cast<std::size_t>(d)])];
  for (auto [v, c] : state.feat_counts[static_cast<std::size_t>(d)]) {
    state.n_zv[static_cast<std::size_t>(new_z)][static_cast<std::size_t>(v)] += c;
    state.n_zv_total[static_cast<std::size_t>(new_z)] += c;
  }
}

// log of the rising factorial, shared with the main sampler's form.
static double log_rising_bc(double x, int n) {
  if (n == 0) return 0.0;
  if (n == 1) return std::log(x);
  return std::lgamma(x + n) - std::lgamma(x);
}

std::vector<double> bayescat_conditional(const BayesCatState& state, int d) {
  if (d < 0 || d >= state.D) throw Error("stimulus index out of range");
  int cid = state.concept_of[static_cast<std::size_t>(d)];
  const auto& fc = state.feat_counts[static_cast<std::size_t>(d)];
  int f_star = 0;
  for (auto [v, c] : fc) f_star += c;
  std::vector<double> logw(static_cast<std::size_t>(state.K));
  for (int z = 0; z < state.K; ++z) {
    double w = std::log(state.n_z[static_cast<std::size_t>(z)] + state.alpha);
    w += std::log(state.n_zc[static_cast<std::size_t>(z)][static_cast<std::size_t>(cid)] + state.beta) -
         std::log(state.n_z[static_cast<std::size_t>(z)] + state.L * state.beta);
    for (auto [v, c] : fc)
      w += log_rising_bc(state.n_zv[static_cast<std::size_t>(z)][static_cast<std::size_t>(v)] + state.gamma, c);
    w -= log_rising_bc(state.n_zv_total[static_cast<std::size_t>(z)] + state.V * state.gamma, f_star);
    logw[static_cast<std::size_t>(z)] = w;
  }
  return logw;
}

void bayescat_sweep(BayesCatState& state) {
  for (int d = 0; d < state.D; ++d) {
    bayescat_remove(state, d);
    int z = state.K == 1 ? 0 : sample_from_log_weights(state.rng, bayescat_conditional(state, d));
    bayescat_add(state, d, z);
  }
}

static double dir_mult_log_bc(const std::vector<int>& counts, double conc, int dim, int total) {
  double lj = std::lgamma(conc * dim) - std::lgamma(conc * dim + total);
  double lg_conc = std::lgamma(conc);
  for (int c : counts)
    if (c > 0) lj += std::lgamma(c + conc) - lg_conc;
  return lj;
}

double bayescat_log_joint(const BayesCatState& state) {
  double lj = dir_mult_log_bc(state.n_z, state.alpha, state.K, state.D);
  for (int z = 0; z < state.K; ++z) {
    lj += dir_mult_log_bc(state.n_zc[static_cast<std::size_t>(z)], state.beta, state.L,
                          state.n_z[static_cast<std::size_t>(z)]);
    lj += dir_mult_log_bc(state.n_zv[static_cast<std::size_t>(z)], state.gamma, state.V,
                          state.n_zv_total[static_cast<std::size_t>(z)]);
  }
  return lj;
}

static std::vector<double> smoothed(const std::vector<int>& counts, double conc) {
  double total = conc * static_cast<double>(counts.size());
  for (int c : counts) total += c;
  std::vector<double> row(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) row[i] = (counts[i] + conc) / total;
  return row;
}

BayesCatModel bayescat_point_estimates(const BayesCatState& state) {
  BayesCatModel m;
  m.p_z = smoothed(state.n_z, state.alpha);
  m.p_c_given_z.reserve(static_cast<std::size_t>(state.K));
  m.p_f_given_z.reserve(static_cast<std::size_t>(state.K));
  for (int z = 0; z < state.K; ++z) {
    m.p_c_given_z.push_back(smoothed(state.n_zc[static_cast<std::size_t>(z)], state.beta));
    m.p_f_given_z.push_back(smoothed(state.n_zv[static_cast<std::size_t>(z)], state.gamma));
  }
  return m;
}

BayesCatModel bayescat_train(const StimulusSet& stimuli, int K, double alpha, double beta,
                             double gamma, std::uint64_t seed, int sweeps) {
  BayesCatState st = bayescat_init(stimuli, K, alpha, beta, gamma, seed);
  for (int s = 0; s < sweeps; ++s) bayescat_sweep(st);
  return bayescat_point_estimates(st);
}

void save_bayescat_model(const BayesCatModel& model, const Vocabulary& vocab,
                         const std::string& path) {
  nlohmann::json j;
  j["format"] = "bayescat-model";
  j["version"] = 1;
  j["concepts"] = vocab.concept_names();
  j["features"] = vocab.feature_names();
  j["p_z"] = model.p_z;
  j["p_c_given_z"] = model.p_c_given_z;
  j["p_f_given_z"] = model.p_f_given_z;
  atomic_write(path, [&](std::ostream& out) { out << j.dump() << '\n'; });
}

std::pair<BayesCatModel, Vocabulary> load_bayescat_model(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("model file " + path + " unreadable: " + e.what());
  }
  if (j.value("format", "") != "bayescat-model" || j.value("version", -1) != 1)
    throw Error("not a supported model file: " + path);
  BayesCatModel m;
  m.p_z = j.at("p_z").get<std::vector<double>>();
  m.p_c_given_z = j.at("p_c_given_z").get<std::vector<std::vector<double>>>();
  m.p_f_given_z = j.at("p_f_given_z").get<std::vector<std::vector<double>>>();
  Vocabulary vocab;
  for (const auto& n : j.at("concepts")) vocab.add_concept(n.get<std::string>());
  for (const auto& n : j.at("features")) vocab.add_feature(n.get<std::string>());
  if (m.p_z.size() != m.p_c_given_z.size() || m.p_z.size() != m.p_f_given_z.size())
    throw Error("model file " + path + ": table sizes disagree");
  return {std::move(m), std::move(vocab)};
}

FeatureTypeClustering bayescat_feature_types(const BayesCatModel& model, int G,
                                             std::uint64_t seed) {
  int K = static_cast<int>(model.p_f_given_z.size());
  int V = K > 0 ? static_cast<int>(model.p_f_given_z[0].size()) : 0;
  if (G > V) throw Error("G exceeds feature vocabulary size");
  // p(z|f) proportional to p(f|z) p(z), one K-vector per feature.
  std::vector<std::vector<double>> reps(static_cast<std::size_t>(V),
                                        std::vector<double>(static_cast<std::size_t>(K)));
  for (int f = 0; f < V; ++f) {
    double total = 0.0;
    for (int z = 0; z < K; ++z) {
      double p = model.p_f_given_z[static_cast<std::size_t>(z)][static_cast<std::size_t>(f)] *
                 model.p_z[static_cast<std::size_t>(z)];
      reps[static_cast<std::size_t>(f)][static_cast<std::size_t>(z)] = p;
      total += p;
    }
    for (auto& x : reps[static_cast<std::size_t>(f)]) x /= total;
  }
  std::vector<int> assign = kmeans(reps, G, seed);
  FeatureTypeClustering ftc;
  ftc.relevance.assign(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(G), 0.0));
  for (int f = 0; f < V; ++f) {
    int g = assign[static_cast<std::size_t>(f)];
    ftc.assignment[f] = g;
    for (int z = 0; z < K; ++z)
      ftc.relevance[static_cast<std::size_t>(z)][static_cast<std::size_t>(g)] +=
          model.p_f_given_z[static_cast<std::size_t>(z)][static_cast<std::size_t>(f)];
  }
  return ftc;
}

Categorization bayescat_hard_assign(const BayesCatModel& model) {
  int K = static_cast<int>(model.p_c_given_z.size());
  int L = K > 0 ? static_cast<int>(model.p_c_given_z[0].size()) : 0;
  Categorization cat;
  cat.num_categories = K;
  cat.category_of.resize(static_cast<std::size_t>(L));
  for (int c = 0; c < L; ++c) {
    // p(z|c) normalized over z, then score p(c|z) * p(z|c).
    std::vector<double> pzc(static_cast<std::size_t>(K));
    double total = 0.0;
    for (int z = 0; z < K; ++z) {
      pzc[static_cast<std::size_t>(z)] = model.p_c_given_z[static_cast<std::size_t>(z)][static_cast<std::size_t>(c)] *
                                         model.p_z[static_cast<std::size_t>(z)];
      total += pzc[static_cast<std::size_t>(z)];
    }
    int best = 0;
    double best_score = -1.0;
    for (int z = 0; z < K; ++z) {
      double score = model.p_c_given_z[static_cast<std::size_t>(z)][static_cast<std::size_t>(c)] *
                     (pzc[static_cast<std::size_t>(z)] / total);
      if (score > best_score) {
        best_score = score;
        best = z;
      }
    }
    cat.category_of[static_cast<std::size_t>(c)] = best;
  }
  return cat;
}

Categorization random_categorize(int L, int K, std::uint64_t seed) {
  if (K < 1) throw Error("K must be >= 1");
  Rng rng(seed);
  Categorization cat;
  cat.num_categories = K;
  cat.category_of.resize(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l)
    cat.category_of[static_cast<std::size_t>(l)] = static_cast<int>(next_below(rng, static_cast<std::uint64_t>(K)));
  return cat;
}

}  // namespace bcf
