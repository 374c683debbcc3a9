// Command-line front end: ingest, synth, train, eval, predict, tasks, score.
// Every command is a pure function of (inputs, config, seed); outputs go
// through write-then-rename so a failed run never leaves partial files.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <thread>

#include <CLI11.hpp>

#include "bcf/baselines.hpp"
#include "bcf/checkpoint.hpp"
#include "bcf/config.hpp"
#include "bcf/corpus.hpp"
#include "bcf/eval.hpp"
#include "bcf/intruder.hpp"
#include "bcf/io_util.hpp"
#include "bcf/rng.hpp"
#include "bcf/sampler.hpp"
#include "bcf/types.hpp"

using namespace bcf;

namespace {

// Flag values override config-file values; both land in one Config so every
// setting has a single lookup path.
struct OptMerge {
  std::vector<std::pair<std::string, CLI::Option*>> options;
  std::vector<std::pair<std::string, CLI::Option*>> flags;

  CLI::Option* add(CLI::App* cmd, const std::string& key, const std::string& help) {
    std::string name = "--" + key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* o = cmd->add_option(name, help);
    options.emplace_back(key, o);
    return o;
  }
  CLI::Option* add_flag(CLI::App* cmd, const std::string& key, const std::string& help) {
    std::string name = "--" + key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* o = cmd->add_flag(name, help);
    flags.emplace_back(key, o);
    return o;
  }
  void merge_into(Config& cfg) const {
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) cfg.set(key, opt->as<std::string>());
    for (const auto& [key, opt] : flags)
      if (opt->count() > 0) cfg.set(key, "true");
  }
};

std::string out_path(const Config& cfg, const std::string& key, const std::string& basename) {
  std::string dir = cfg.get_str("out_dir", "out");
  return cfg.get_str(key, (std::filesystem::path(dir) / basename).string());
}

Hyperparams hyper_from(const Config& cfg) {
  Hyperparams h;
  h.K = cfg.get_int("K", 40);
  h.G = cfg.get_int("G", 50);
  h.alpha = cfg.get_double("alpha", 0.7);
  h.beta = cfg.get_double("beta", 0.1);
  h.gamma = cfg.get_double("gamma", 0.1);
  h.validate();
  return h;
}

// ---- ingest ---------------------------------------------------------------

int cmd_ingest(const Config& cfg) {
  auto docs = load_documents(cfg.need_str("documents"));
  auto lexicon = ConceptLexicon::load(cfg.need_str("lexicon"));
  ExtractConfig ec;
  ec.keep_fraction = cfg.get_double("keep_fraction", 0.5);
  ec.min_ctx = cfg.get_int("min_ctx", 3);
  ec.max_ctx = cfg.get_int("max_ctx", 20);
  ec.max_per_concept = cfg.get_int("max_per_concept", 1000);
  ec.sample_cap = cfg.get_bool("sample_cap", false);
  ec.seed = cfg.get_u64("seed", 1);
  if (cfg.has("stopwords")) ec.stopwords = load_stopwords(cfg.need_str("stopwords"));
  StimulusSet set = extract_stimuli(docs, lexicon, ec);
  std::string out = out_path(cfg, "out", "stimuli.jsonl");
  save_stimuli(set, out);
  std::printf("wrote %d stimuli (%d concepts, %d features) -> %s\n", set.num_stimuli(),
              set.vocab.num_concepts(), set.vocab.num_features(), out.c_str());
  return 0;
}

// ---- synth ----------------------------------------------------------------

int cmd_synth(const Config& cfg) {
  Hyperparams h = hyper_from(cfg);
  SynthDims dims;
  dims.L = cfg.get_int("L", 50);
  dims.V = cfg.get_int("V", 100);
  dims.D = cfg.get_int("D", 5000);
  dims.I = cfg.get_int("I", 8);
  bool any_width = cfg.get_bool("allow_any_width", false);
  auto [set, truth] = generate_synthetic(h, dims, cfg.get_u64("seed", 1), any_width);

  std::string out = out_path(cfg, "out", "synthetic.jsonl");
  save_stimuli(set, out);
  std::string truth_path = out_path(cfg, "truth", "truth.tsv");
  atomic_write(truth_path, [&](std::ostream& os) {
    for (int l = 0; l < dims.L; ++l)
      os << set.vocab.concept_name(l) << '\t' << "cat_" << truth.true_k[static_cast<std::size_t>(l)]
         << '\n';
  });
  std::printf("wrote %d stimuli -> %s\nwrote true categories -> %s\n", set.num_stimuli(),
              out.c_str(), truth_path.c_str());
  return 0;
}

// ---- train ----------------------------------------------------------------

// Seeded draw of `count` distinct indices out of n, emitted in ascending order.
std::vector<char> pick_test_mask(int n, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int j = 0; j < count; ++j) {
    std::size_t pick = static_cast<std::size_t>(j) +
                       static_cast<std::size_t>(next_below(rng, static_cast<std::uint64_t>(n - j)));
    std::swap(idx[static_cast<std::size_t>(j)], idx[pick]);
  }
  std::vector<char> is_test(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < count; ++j) is_test[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] = 1;
  return is_test;
}

// Writes the subset picked by `keep` as a stimulus file.
void save_subset(const StimulusSet& set, const std::vector<char>& keep, bool invert,
                 const std::string& path) {
  StimulusSet sub;
  for (std::size_t i = 0; i < set.stimuli.size(); ++i) {
    if (static_cast<bool>(keep[i]) == invert) continue;
    const Stimulus& s = set.stimuli[i];
    Stimulus copy;
    copy.concept_id = sub.vocab.add_concept(set.vocab.concept_name(s.concept_id));
    for (int f : s.features) copy.features.push_back(sub.vocab.add_feature(set.vocab.feature_name(f)));
    copy.doc_id = s.doc_id;
    copy.sentence_index = s.sentence_index;
    sub.stimuli.push_back(std::move(copy));
  }
  if (sub.stimuli.empty()) throw Error("split produced an empty stimulus set");
  sub.per_concept_counts.assign(static_cast<std::size_t>(sub.vocab.num_concepts()), 0);
  for (const auto& s : sub.stimuli) ++sub.per_concept_counts[static_cast<std::size_t>(s.concept_id)];
  save_stimuli(sub, path);
}

int cmd_train(const Config& cfg) {
  StimulusSet full = load_stimuli(cfg.need_str("stimuli"));
  std::uint64_t seed = cfg.get_u64("seed", 1);
  std::string model = cfg.get_str("model", "bcf");

  // Hold out test stimuli before any model sees the data.
  int test_split = cfg.get_int("test_split", 300);
  StimulusSet train;
  if (test_split > 0) {
    if (test_split >= full.num_stimuli())
      throw Error("test_split must be smaller than the stimulus count");
    auto mask = pick_test_mask(full.num_stimuli(), test_split, seed ^ 0x7e57u);
    std::string train_path = out_path(cfg, "train_out", "train_stimuli.jsonl");
    std::string test_path = out_path(cfg, "test_out", "test_stimuli.jsonl");
    save_subset(full, mask, true, train_path);
    save_subset(full, mask, false, test_path);
    train = load_stimuli(train_path);
    std::printf("split: %d train -> %s, %d test -> %s\n", train.num_stimuli(), train_path.c_str(),
                test_split, test_path.c_str());
  } else {
    train = std::move(full);
  }

  if (model == "bcf") {
    Hyperparams h = hyper_from(cfg);
    RunConfig rc;
    rc.sweeps = cfg.get_int("sweeps", 1000);
    rc.early_stop = cfg.get_bool("early_stop", false);
    int chains = cfg.get_int("chains", 10);
    int threads = std::max(1, cfg.get_int("threads", 1));
    if (chains < 1) throw Error("chains must be >= 1");

    std::vector<ChainResult> results(static_cast<std::size_t>(chains));
    std::vector<std::string> errors(static_cast<std::size_t>(chains));
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        int c = next.fetch_add(1);
        if (c >= chains) return;
        try {
          results[static_cast<std::size_t>(c)] =
              run_chain(train, h, seed + static_cast<std::uint64_t>(c), rc);
        } catch (const std::exception& e) {
          errors[static_cast<std::size_t>(c)] = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, chains); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (int c = 0; c < chains; ++c)
      if (!errors[static_cast<std::size_t>(c)].empty())
        throw Error("chain " + std::to_string(c) + ": " + errors[static_cast<std::size_t>(c)]);

    std::string dir = cfg.get_str("out_dir", "out");
    int best_chain = 0;
    for (int c = 0; c < chains; ++c) {
      const ChainResult& r = results[static_cast<std::size_t>(c)];
      std::string stem = (std::filesystem::path(dir) / ("bcf_chain_" + std::to_string(c))).string();
      save_checkpoint(make_checkpoint(r, train.vocab, seed + static_cast<std::uint64_t>(c)),
                      stem + ".ckpt");
      atomic_write(stem + "_trace.csv", [&](std::ostream& os) {
        os << "sweep,log_joint\n";
        for (auto [s, lj] : r.trace) os << s << ',' << fmt12(lj) << '\n';
      });
      if (r.best_log_joint > results[static_cast<std::size_t>(best_chain)].best_log_joint)
        best_chain = c;
    }
    atomic_write((std::filesystem::path(dir) / "bcf_summary.tsv").string(), [&](std::ostream& os) {
      os << "chain\tseed\tsweeps_run\tbest_sweep\tbest_log_joint\tcheckpoint\n";
      for (int c = 0; c < chains; ++c) {
        const ChainResult& r = results[static_cast<std::size_t>(c)];
        os << c << '\t' << seed + static_cast<std::uint64_t>(c) << '\t' << r.sweeps_run << '\t'
           << r.best_sweep << '\t' << fmt12(r.best_log_joint) << '\t'
           << "bcf_chain_" + std::to_string(c) + ".ckpt" << '\n';
      }
      os << "best\t" << best_chain << '\n';
    });
    const ModelState& best = results[static_cast<std::size_t>(best_chain)].best_state;
    Categorization cat;
    cat.num_categories = h.K;
    cat.category_of = best.k_assign;
    save_categorization(cat, train.vocab, out_path(cfg, "categorization", "categorization_bcf.tsv"));
    std::printf("best chain %d (log joint %s after sweep %d); categorization -> %s\n", best_chain,
                fmt3(results[static_cast<std::size_t>(best_chain)].best_log_joint).c_str(),
                results[static_cast<std::size_t>(best_chain)].best_sweep,
                out_path(cfg, "categorization", "categorization_bcf.tsv").c_str());
    return 0;
  }

  if (model == "bayescat") {
    int K = cfg.get_int("K", 40);
    BayesCatModel m = bayescat_train(train, K, cfg.get_double("alpha", 0.7),
                                     cfg.get_double("beta", 0.1), cfg.get_double("gamma", 0.1),
                                     seed, cfg.get_int("sweeps", 1000));
    std::string model_path = out_path(cfg, "model_out", "bayescat_model.json");
    save_bayescat_model(m, train.vocab, model_path);
    save_categorization(bayescat_hard_assign(m), train.vocab,
                        out_path(cfg, "categorization", "categorization_bayescat.tsv"));
    std::printf("model -> %s\n", model_path.c_str());
    return 0;
  }

  if (model == "cooc") {
    AssocMatrix assoc = build_assoc(train, cfg.get_int("min_count", 2));
    Categorization cat = cooc_categorize(assoc, cfg.get_int("K", 40), seed);
    save_categorization(cat, train.vocab, out_path(cfg, "categorization", "categorization_cooc.tsv"));
    auto per_cat = cooc_feature_types(assoc, cat, cfg.get_int("types_per_category", 5), seed);
    std::string dir = cfg.get_str("out_dir", "out");
    atomic_write((std::filesystem::path(dir) / "cooc_types.tsv").string(), [&](std::ostream& os) {
      for (std::size_t c = 0; c < per_cat.size(); ++c) {
        std::vector<std::pair<int, int>> rows(per_cat[c].assignment.begin(),
                                              per_cat[c].assignment.end());
        std::sort(rows.begin(), rows.end());
        for (auto [f, g] : rows)
          os << train.vocab.feature_name(f) << '\t' << c << '\t' << g << '\n';
      }
    });
    atomic_write((std::filesystem::path(dir) / "cooc_relevance.tsv").string(), [&](std::ostream& os) {
      for (std::size_t c = 0; c < per_cat.size(); ++c)
        if (!per_cat[c].relevance.empty())
          for (std::size_t g = 0; g < per_cat[c].relevance[0].size(); ++g)
            os << c << '\t' << g << '\t' << fmt12(per_cat[c].relevance[0][g]) << '\n';
    });
    std::printf("categorization -> %s\n",
                out_path(cfg, "categorization", "categorization_cooc.tsv").c_str());
    return 0;
  }

  if (model == "random") {
    Categorization cat = random_categorize(train.vocab.num_concepts(), cfg.get_int("K", 40), seed);
    save_categorization(cat, train.vocab,
                        out_path(cfg, "categorization", "categorization_random.tsv"));
    return 0;
  }

  throw Error("unknown model \"" + model + "\" (expected bcf, bayescat, cooc or random)");
}

// ---- eval -----------------------------------------------------------------

int cmd_eval(const Config& cfg, const std::vector<std::string>& pred_args) {
  StimulusSet set = load_stimuli(cfg.need_str("stimuli"));
  GoldStandard gold = load_gold(cfg.need_str("gold"));

  std::vector<std::pair<std::string, std::string>> preds;  // (name, path)
  auto add_pred = [&](const std::string& arg) {
    std::size_t eq = arg.find('=');
    if (eq == std::string::npos) throw Error("--pred expects name=path, got \"" + arg + "\"");
    preds.emplace_back(arg.substr(0, eq), arg.substr(eq + 1));
  };
  for (const auto& a : pred_args) add_pred(a);
  if (preds.empty() && cfg.has("pred")) add_pred(cfg.need_str("pred"));
  if (preds.empty()) throw Error("no categorization given (use --pred name=path)");

  std::vector<MetricsRow> rows;
  for (const auto& [name, path] : preds) {
    Categorization cat = load_categorization(path, set.vocab);
    ContingencyTable table = contingency(cat, set.vocab, gold);
    MetricsRow r;
    r.model = name;
    r.pu = purity(table);
    r.co = collocation(table);
    r.f1 = f_beta(r.pu, r.co);
    VMeasure v = v_measure(table);
    r.vh = v.vh;
    r.vc = v.vc;
    r.vm = v.vm;
    rows.push_back(r);
    std::printf("%s\tpu %s\tco %s\tF1 %s\tVH %s\tVC %s\tVM %s\n", name.c_str(), fmt3(r.pu).c_str(),
                fmt3(r.co).c_str(), fmt3(r.f1).c_str(), fmt3(r.vh).c_str(), fmt3(r.vc).c_str(),
                fmt3(r.vm).c_str());
  }
  std::string out = out_path(cfg, "out", "metrics.tsv");
  write_metrics_report(rows, out);
  std::printf("report -> %s\n", out.c_str());
  return 0;
}

// ---- predict ----------------------------------------------------------------

// Maps a test stimulus into a model vocabulary: concept id (or -1) and feature
// ids with unknown tokens kept as -1 for the predictors to count.
struct MappedStimulus {
  int concept_id;
  std::vector<int> features;
};

MappedStimulus map_stimulus(const Stimulus& s, const Vocabulary& test_vocab,
                            const Vocabulary& model_vocab) {
  MappedStimulus m;
  m.concept_id = model_vocab.concept_id(test_vocab.concept_name(s.concept_id));
  for (int f : s.features) m.features.push_back(model_vocab.feature_id(test_vocab.feature_name(f)));
  return m;
}

int cmd_predict(const Config& cfg) {
  StimulusSet test = load_stimuli(cfg.need_str("test"));
  std::string model = cfg.get_str("model", "bcf");
  std::uint64_t seed = cfg.get_u64("seed", 1);

  std::function<Prediction(const std::vector<int>&)> predict;
  const Vocabulary* model_vocab = nullptr;
  StimulusSet train;          // kept alive when the model needs it
  PosteriorSummary summary;   // bcf
  std::vector<int> k_assign;  // bcf
  BayesCatModel bc_model;
  Vocabulary bc_vocab;
  AssocMatrix assoc;
  Rng random_rng(seed);

  if (model == "bcf") {
    Checkpoint ckpt = load_checkpoint(cfg.need_str("checkpoint"));
    train = load_stimuli(cfg.need_str("stimuli"));
    ModelState best = best_state(ckpt, train);
    summary = posterior_means(best);
    k_assign = best.k_assign;
    model_vocab = &train.vocab;
    predict = [&](const std::vector<int>& fs) { return predict_concept_bcf(summary, k_assign, fs); };
  } else if (model == "bayescat") {
    std::tie(bc_model, bc_vocab) = load_bayescat_model(cfg.need_str("model_file"));
    model_vocab = &bc_vocab;
    predict = [&](const std::vector<int>& fs) { return predict_concept_bayescat(bc_model, fs); };
  } else if (model == "assoc") {
    train = load_stimuli(cfg.need_str("stimuli"));
    assoc = build_assoc(train, cfg.get_int("min_count", 2));
    model_vocab = &train.vocab;
    predict = [&](const std::vector<int>& fs) { return predict_concept_assoc(assoc, fs); };
  } else if (model == "random") {
    train = load_stimuli(cfg.need_str("stimuli"));
    model_vocab = &train.vocab;
    int L = train.vocab.num_concepts();
    predict = [&, L](const std::vector<int>&) {
      Prediction p;
      p.score.resize(static_cast<std::size_t>(L));
      for (auto& x : p.score) x = next_unit(random_rng);
      p.order.resize(static_cast<std::size_t>(L));
      for (int i = 0; i < L; ++i) p.order[static_cast<std::size_t>(i)] = i;
      std::stable_sort(p.order.begin(), p.order.end(),
                       [&](int a, int b) { return p.score[static_cast<std::size_t>(a)] > p.score[static_cast<std::size_t>(b)]; });
      return p;
    };
  } else {
    throw Error("unknown model \"" + model + "\" (expected bcf, bayescat, assoc or random)");
  }

  std::vector<int> ranks;
  int skipped_concept = 0, skipped_features = 0;
  long long unknown_tokens = 0;
  for (const auto& s : test.stimuli) {
    MappedStimulus m = map_stimulus(s, test.vocab, *model_vocab);
    if (m.concept_id < 0) {
      ++skipped_concept;
      continue;
    }
    try {
      Prediction p = predict(m.features);
      unknown_tokens += p.skipped_unknown;
      ranks.push_back(rank_of(p, m.concept_id));
    } catch (const Error&) {
      ++skipped_features;  // every token unknown to the model
    }
  }
  if (ranks.empty()) throw Error("no test stimulus could be scored");
  RankingResult r = ranking_metrics(ranks, model_vocab->num_concepts());

  std::string out = out_path(cfg, "out", "ranking.tsv");
  write_ranking_report({{model, r.pr_at_1, r.pr_at_10, r.pr_at_20, r.mean_rank}}, out);
  std::printf("%s\tpr@1 %s\tpr@10 %s\tpr@20 %s\tavg rank %s\n", model.c_str(),
              fmt3(r.pr_at_1).c_str(), fmt3(r.pr_at_10).c_str(), fmt3(r.pr_at_20).c_str(),
              fmt3(r.mean_rank).c_str());
  std::printf("scored %zu stimuli; skipped %d (unknown concept) + %d (no known features); "
              "%lld unknown feature tokens ignored\nreport -> %s\n",
              ranks.size(), skipped_concept, skipped_features, unknown_tokens, out.c_str());
  return 0;
}

// ---- tasks ------------------------------------------------------------------

int cmd_tasks(const Config& cfg) {
  std::string model = cfg.get_str("model", "bcf");
  std::uint64_t seed = cfg.get_u64("seed", 1);
  int top_n = cfg.get_int("top_n", 5);
  int types_shown = cfg.get_int("types_shown", 6);
  int words_per_type = cfg.get_int("words_per_type", 5);
  int window = std::max(3 * top_n, words_per_type);

  std::vector<std::vector<std::string>> type_words;
  std::vector<std::vector<std::string>> members;
  std::vector<std::vector<double>> relevance;

  if (model == "bcf") {
    Checkpoint ckpt = load_checkpoint(cfg.need_str("checkpoint"));
    StimulusSet train = load_stimuli(cfg.need_str("stimuli"));
    ModelState best = best_state(ckpt, train);
    PosteriorSummary summary = posterior_means(best);
    for (int g = 0; g < best.G; ++g) {
      std::vector<std::string> words;
      for (const auto& wp : top_features(summary, train.vocab, g, window)) words.push_back(wp.first);
      type_words.push_back(std::move(words));
    }
    auto all_members = category_members(best, train.vocab);
    for (int k = 0; k < best.K; ++k) {
      if (all_members[static_cast<std::size_t>(k)].empty()) continue;  // nothing to show
      members.push_back(all_members[static_cast<std::size_t>(k)]);
      relevance.push_back(summary.mu_hat[static_cast<std::size_t>(k)]);
    }
  } else if (model == "bayescat") {
    auto [m, vocab] = load_bayescat_model(cfg.need_str("model_file"));
    int K = static_cast<int>(m.p_z.size());
    int V = vocab.num_features();
    FeatureTypeClustering ftc = bayescat_feature_types(m, cfg.get_int("G", 50), seed);
    // Rank each type's features by their marginal probability.
    std::vector<double> marginal(static_cast<std::size_t>(V), 0.0);
    for (int z = 0; z < K; ++z)
      for (int f = 0; f < V; ++f)
        marginal[static_cast<std::size_t>(f)] +=
            m.p_z[static_cast<std::size_t>(z)] * m.p_f_given_z[static_cast<std::size_t>(z)][static_cast<std::size_t>(f)];
    int G = cfg.get_int("G", 50);
    std::vector<std::vector<int>> by_type(static_cast<std::size_t>(G));
    for (const auto& [f, g] : ftc.assignment) by_type[static_cast<std::size_t>(g)].push_back(f);
    for (auto& fs : by_type) {
      std::stable_sort(fs.begin(), fs.end(), [&](int a, int b) {
        if (marginal[static_cast<std::size_t>(a)] != marginal[static_cast<std::size_t>(b)])
          return marginal[static_cast<std::size_t>(a)] > marginal[static_cast<std::size_t>(b)];
        return a < b;
      });
      std::vector<std::string> words;
      for (std::size_t i = 0; i < fs.size() && i < static_cast<std::size_t>(window); ++i)
        words.push_back(vocab.feature_name(fs[i]));
      type_words.push_back(std::move(words));
    }
    Categorization cat = bayescat_hard_assign(m);
    std::vector<std::vector<std::string>> all_members(static_cast<std::size_t>(K));
    for (int c = 0; c < vocab.num_concepts(); ++c)
      all_members[static_cast<std::size_t>(cat.category_of[static_cast<std::size_t>(c)])].push_back(
          vocab.concept_name(c));
    for (int z = 0; z < K; ++z) {
      if (all_members[static_cast<std::size_t>(z)].empty()) continue;
      members.push_back(all_members[static_cast<std::size_t>(z)]);
      relevance.push_back(ftc.relevance[static_cast<std::size_t>(z)]);
    }
  } else if (model == "cooc") {
    StimulusSet train = load_stimuli(cfg.need_str("stimuli"));
    AssocMatrix assoc = build_assoc(train, cfg.get_int("min_count", 2));
    Categorization cat = load_categorization(cfg.need_str("categorization"), train.vocab);
    auto per_cat = cooc_feature_types(assoc, cat, cfg.get_int("types_per_category", 5), seed);
    // Flatten per-category types into one global list; each category's
    // relevance covers its own types and is zero elsewhere.
    std::vector<std::vector<std::string>> all_members(static_cast<std::size_t>(cat.num_categories));
    for (int c = 0; c < train.vocab.num_concepts(); ++c)
      all_members[static_cast<std::size_t>(cat.category_of[static_cast<std::size_t>(c)])].push_back(
          train.vocab.concept_name(c));
    std::vector<std::pair<int, int>> global_types;  // (category, local type)
    for (std::size_t c = 0; c < per_cat.size(); ++c) {
      if (per_cat[c].relevance.empty()) continue;
      for (std::size_t g = 0; g < per_cat[c].relevance[0].size(); ++g)
        global_types.emplace_back(static_cast<int>(c), static_cast<int>(g));
    }
    for (auto [c, g] : global_types) {
      // Member features of this local type, ranked by association mass.
      std::vector<std::pair<double, int>> scored;
      for (const auto& [f, fg] : per_cat[static_cast<std::size_t>(c)].assignment) {
        if (fg != g) continue;
        double w = 0.0;
        for (int l = 0; l < train.vocab.num_concepts(); ++l)
          if (cat.category_of[static_cast<std::size_t>(l)] == c)
            w += assoc.values[static_cast<std::size_t>(l)][static_cast<std::size_t>(f)];
        scored.emplace_back(-w, f);
      }
      std::sort(scored.begin(), scored.end());
      std::vector<std::string> words;
      for (std::size_t i = 0; i < scored.size() && i < static_cast<std::size_t>(window); ++i)
        words.push_back(train.vocab.feature_name(scored[i].second));
      type_words.push_back(std::move(words));
    }
    for (std::size_t c = 0; c < per_cat.size(); ++c) {
      if (all_members[c].empty()) continue;
      std::vector<double> row(global_types.size(), 0.0);
      for (std::size_t t = 0; t < global_types.size(); ++t)
        if (global_types[t].first == static_cast<int>(c))
          row[t] = per_cat[c].relevance[0][static_cast<std::size_t>(global_types[t].second)];
      members.push_back(all_members[c]);
      relevance.push_back(std::move(row));
    }
  } else {
    throw Error("unknown model \"" + model + "\" (expected bcf, bayescat or cooc)");
  }

  std::vector<std::string> warnings;
  std::vector<IntruderTask> tasks = gen_coherence_tasks(type_words, top_n, seed, &warnings);
  std::vector<IntruderTask> rel =
      gen_relevance_tasks(members, relevance, type_words, types_shown, words_per_type,
                          seed + 1, &warnings);
  tasks.insert(tasks.end(), rel.begin(), rel.end());
  for (const auto& w : warnings) std::fprintf(stderr, "note: %s\n", w.c_str());

  std::string tasks_out = out_path(cfg, "out", "tasks.csv");
  std::string keys_out = out_path(cfg, "keys", "keys.csv");
  save_tasks(tasks, tasks_out);
  save_keys(tasks, keys_out);
  std::printf("%zu tasks -> %s (answers -> %s)\n", tasks.size(), tasks_out.c_str(),
              keys_out.c_str());
  return 0;
}

// ---- score ------------------------------------------------------------------

int cmd_score(const Config& cfg) {
  auto tasks = load_tasks(cfg.need_str("tasks"), cfg.need_str("keys"));
  ResponseSet responses = load_responses(cfg.need_str("responses"));

  struct KindReport {
    std::string name;
    double accuracy;
    double kappa;
    int n_tasks;
  };
  std::vector<KindReport> reports;
  for (TaskKind kind : {TaskKind::coherence, TaskKind::relevance}) {
    std::vector<IntruderTask> subset;
    for (const auto& t : tasks)
      if (t.kind == kind) subset.push_back(t);
    if (subset.empty()) continue;
    std::size_t items = subset[0].display_items.size();
    for (const auto& t : subset)
      if (t.display_items.size() != items)
        throw Error("tasks of one kind must share an item count for agreement scoring");
    ResponseSet sub_resp;
    for (const auto& t : subset) {
      auto it = responses.choices_of.find(t.task_id);
      if (it == responses.choices_of.end()) continue;
      sub_resp.task_ids.push_back(t.task_id);
      sub_resp.choices_of.emplace(t.task_id, it->second);
    }
    if (sub_resp.task_ids.empty()) continue;
    std::vector<std::string> warnings;
    KindReport r;
    r.name = kind == TaskKind::coherence ? "coherence" : "relevance";
    r.accuracy = score_accuracy(subset, sub_resp);
    r.kappa = fleiss_kappa(sub_resp, static_cast<int>(items), &warnings);
    r.n_tasks = static_cast<int>(sub_resp.task_ids.size());
    for (const auto& w : warnings) std::fprintf(stderr, "note: %s\n", w.c_str());
    reports.push_back(r);
  }
  if (reports.empty()) throw Error("no responses matched any task");

  std::string out = out_path(cfg, "out", "score.tsv");
  atomic_write(out, [&](std::ostream& os) {
    os << "kind\ttasks\taccuracy\tkappa\n";
    for (const auto& r : reports)
      os << r.name << '\t' << r.n_tasks << '\t' << fmt3(r.accuracy) << '\t' << fmt3(r.kappa)
         << '\n';
  });
  for (const auto& r : reports)
    std::printf("%s\t%d tasks\taccuracy %s\tkappa %s\n", r.name.c_str(), r.n_tasks,
                fmt3(r.accuracy).c_str(), fmt3(r.kappa).c_str());
  std::printf("report -> %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"category and feature-type induction toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "flat key = value settings file")->expected(1);
  auto* g_seed = app.add_option("--seed", "seed for every random choice (default 1)");
  auto* g_out_dir = app.add_option("--out-dir", "directory for outputs (default out)");
  auto* g_threads = app.add_option("--threads", "worker threads for multi-chain training");

  std::map<std::string, OptMerge> merges;
  auto* ingest = app.add_subcommand("ingest", "turn documents + lexicon into stimuli");
  {
    OptMerge& m = merges["ingest"];
    m.add(ingest, "documents", "JSON-lines documents file");
    m.add(ingest, "lexicon", "concept surface forms, one per line");
    m.add(ingest, "stopwords", "stopword list, one per line");
    m.add(ingest, "keep_fraction", "fraction of context words kept by tf-idf rank (0.5)");
    m.add(ingest, "min_ctx", "minimum surviving context words (3)");
    m.add(ingest, "max_ctx", "maximum context words kept (20)");
    m.add(ingest, "max_per_concept", "stimulus cap per concept (1000)");
    m.add_flag(ingest, "sample_cap", "sample the cap uniformly instead of keeping the earliest");
    m.add(ingest, "out", "output stimulus file");
  }
  auto* synth = app.add_subcommand("synth", "generate stimuli from the generative story");
  {
    OptMerge& m = merges["synth"];
    for (const char* k : {"K", "G", "alpha", "beta", "gamma", "L", "V", "D", "I"})
      m.add(synth, k, "");
    m.add_flag(synth, "allow_any_width", "permit I outside [3,20]");
    m.add(synth, "out", "output stimulus file");
    m.add(synth, "truth", "output true-category TSV");
  }
  auto* train = app.add_subcommand("train", "train a model (bcf | bayescat | cooc | random)");
  {
    OptMerge& m = merges["train"];
    m.add(train, "stimuli", "training stimulus file");
    m.add(train, "model", "bcf | bayescat | cooc | random (bcf)");
    for (const char* k : {"K", "G", "alpha", "beta", "gamma"}) m.add(train, k, "");
    m.add(train, "sweeps", "sampling sweeps (1000)");
    m.add(train, "chains", "independent chains, seeds seed..seed+chains-1 (10)");
    m.add_flag(train, "early_stop", "stop when the log joint plateaus");
    m.add(train, "test_split", "held-out stimuli reserved before training (300)");
    m.add(train, "min_count", "assoc threshold for cooc (2)");
    m.add(train, "types_per_category", "feature types per category for cooc (5)");
    m.add(train, "categorization", "output categorization TSV");
    m.add(train, "train_out", "output path for the training split");
    m.add(train, "test_out", "output path for the held-out split");
    m.add(train, "model_out", "output model file (bayescat)");
  }
  auto* eval_cmd = app.add_subcommand("eval", "score categorizations against a gold standard");
  std::vector<std::string> pred_args;
  {
    OptMerge& m = merges["eval"];
    m.add(eval_cmd, "stimuli", "stimulus file the categorization was trained on");
    m.add(eval_cmd, "gold", "gold TSV (concept, label)");
    m.add(eval_cmd, "out", "output metrics TSV");
    eval_cmd->add_option("--pred", pred_args, "name=path of a categorization TSV (repeatable)");
  }
  auto* predict = app.add_subcommand("predict", "rank concepts for held-out stimuli");
  {
    OptMerge& m = merges["predict"];
    m.add(predict, "model", "bcf | bayescat | assoc | random (bcf)");
    m.add(predict, "test", "held-out stimulus file");
    m.add(predict, "stimuli", "training stimulus file (bcf, assoc, random)");
    m.add(predict, "checkpoint", "trained chain checkpoint (bcf)");
    m.add(predict, "model_file", "trained model JSON (bayescat)");
    m.add(predict, "min_count", "assoc threshold (2)");
    m.add(predict, "out", "output ranking TSV");
  }
  auto* tasks_cmd = app.add_subcommand("tasks", "emit intruder task sheets");
  {
    OptMerge& m = merges["tasks"];
    m.add(tasks_cmd, "model", "bcf | bayescat | cooc (bcf)");
    m.add(tasks_cmd, "stimuli", "training stimulus file (bcf, cooc)");
    m.add(tasks_cmd, "checkpoint", "trained chain checkpoint (bcf)");
    m.add(tasks_cmd, "model_file", "trained model JSON (bayescat)");
    m.add(tasks_cmd, "categorization", "categorization TSV (cooc)");
    m.add(tasks_cmd, "G", "feature type count for bayescat clustering (50)");
    m.add(tasks_cmd, "min_count", "assoc threshold for cooc (2)");
    m.add(tasks_cmd, "types_per_category", "cooc types per category (5)");
    m.add(tasks_cmd, "top_n", "words shown per coherence task before the intruder (5)");
    m.add(tasks_cmd, "types_shown", "rows per relevance task including the intruder (6)");
    m.add(tasks_cmd, "words_per_type", "words rendered per relevance row (5)");
    m.add(tasks_cmd, "out", "output task CSV");
    m.add(tasks_cmd, "keys", "output answer-key CSV");
  }
  auto* score = app.add_subcommand("score", "grade annotator responses");
  {
    OptMerge& m = merges["score"];
    m.add(score, "tasks", "task CSV");
    m.add(score, "keys", "answer-key CSV");
    m.add(score, "responses", "response CSV (task_id, annotator_id, choice)");
    m.add(score, "out", "output score TSV");
  }

  // Global flags may come after the subcommand name; let them reach the app.
  for (CLI::App* sub : {ingest, synth, train, eval_cmd, predict, tasks_cmd, score})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg;
    if (!config_path.empty()) cfg = Config::load(config_path);
    if (g_seed->count()) cfg.set("seed", g_seed->as<std::string>());
    if (g_out_dir->count()) cfg.set("out_dir", g_out_dir->as<std::string>());
    if (g_threads->count()) cfg.set("threads", g_threads->as<std::string>());

    CLI::App* sub = app.get_subcommands().front();
    merges[sub->get_name()].merge_into(cfg);

    if (sub == ingest) return cmd_ingest(cfg);
    if (sub == synth) return cmd_synth(cfg);
    if (sub == train) return cmd_train(cfg);
    if (sub == eval_cmd) return cmd_eval(cfg, pred_args);
    if (sub == predict) return cmd_predict(cfg);
    if (sub == tasks_cmd) return cmd_tasks(cfg);
    if (sub == score) return cmd_score(cfg);
    throw Error("unhandled subcommand");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
