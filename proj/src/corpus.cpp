#include "bcf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "bcf/io_util.hpp"
#include "bcf/rng.hpp"

using nlohmann::json;

namespace bcf {

TfIdfTable compute_tfidf(const std::vector<TokenizedDocument>& documents) {
  if (documents.empty()) throw Error("no documents");
  // df pass
  std::unordered_map<std::string, int> df;
  for (const auto& doc : documents) {
    std::unordered_set<std::string> seen;
    for (const auto& sent : doc.sentences)
      for (const auto& tok : sent) seen.insert(tok);
    for (const auto& tok : seen) ++df[tok];
  }
  double n_docs = static_cast<double>(documents.size());
  TfIdfTable table;
  for (const auto& doc : documents) {
    std::unordered_map<std::string, int> tf;
    for (const auto& sent : doc.sentences)
      for (const auto& tok : sent) ++tf[tok];
    auto& row = table[doc.doc_id];
    for (const auto& [tok, count] : tf)
      row[tok] = count * std::log(n_docs / df[tok]);
  }
  return table;
}

namespace {

// Lexicon surface forms split into token sequences, grouped by first token so
// the scanner can try the longest candidate at each position.
struct MentionMatcher {
  std::unordered_map<std::string, std::vector<std::pair<std::vector<std::string>, int>>> by_head;

  explicit MentionMatcher(const ConceptLexicon& lexicon) {
    for (int id = 0; id < lexicon.size(); ++id) {
      std::vector<std::string> toks;
      const std::string& form = lexicon.form(id);
      std::size_t start = 0;
      while (start <= form.size()) {
        std::size_t sp = form.find(' ', start);
        if (sp == std::string::npos) {
          toks.push_back(form.substr(start));
          break;
        }
        toks.push_back(form.substr(start, sp - start));
        start = sp + 1;
      }
      by_head[toks.front()].emplace_back(std::move(toks), id);
    }
    for (auto& [head, cands] : by_head)
      std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
        return a.first.size() > b.first.size();  // longest match first
      });
  }

  // Returns (concept id, span length) for a mention starting at pos, or
  // (-1, 0) if none.
  std::pair<int, int> match(const std::vector<std::string>& sent, std::size_t pos) const {
    auto it = by_head.find(sent[pos]);
    if (it == by_head.end()) return {-1, 0};
    for (const auto& [toks, id] : it->second) {
      if (pos + toks.size() > sent.size()) continue;
      bool ok = true;
      for (std::size_t j = 1; j < toks.size() && ok; ++j)
        if (sent[pos + j] != toks[j]) ok = false;
      if (ok) return {id, static_cast<int>(toks.size())};
    }
    return {-1, 0};
  }
};

struct Candidate {
  int concept_id;  // lexicon id
  std::vector<std::string> features;  // in sentence order
  std::string doc_id;
  int sentence_index;
};

}  // namespace

StimulusSet extract_stimuli(const std::vector<TokenizedDocument>& documents,
                            const ConceptLexicon& lexicon, const ExtractConfig& config) {
  if (lexicon.size() == 0) throw Error("empty lexicon");
  if (!(config.keep_fraction > 0.0 && config.keep_fraction <= 1.0))
    throw Error("keep_fraction must be in (0, 1]");
  TfIdfTable tfidf = compute_tfidf(documents);
  MentionMatcher matcher(lexicon);

  std::vector<Candidate> candidates;
  for (const auto& doc : documents) {
    const auto& scores = tfidf.at(doc.doc_id);
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      const auto& sent = doc.sentences[si];
      // Locate all mentions first; a token inside one mention's span may still
      // be context for another mention in the same sentence.
      std::vector<std::pair<int, int>> mentions;  // (start, span) per mention
      std::vector<int> mention_concepts;
      for (std::size_t p = 0; p < sent.size();) {
        auto [id, span] = matcher.match(sent, p);
        if (id >= 0) {
          mentions.emplace_back(static_cast<int>(p), span);
          mention_concepts.push_back(id);
          p += static_cast<std::size_t>(span);
        } else {
          ++p;
        }
      }
      for (std::size_t m = 0; m < mentions.size(); ++m) {
        auto [start, span] = mentions[m];
        // Context tokens: everything outside this mention's span, stopwords out.
        std::vector<int> positions;
        for (int p = 0; p < static_cast<int>(sent.size()); ++p) {
          if (p >= start && p < start + span) continue;
          if (config.stopwords.count(sent[static_cast<std::size_t>(p)])) continue;
          positions.push_back(p);
        }
        int n = static_cast<int>(positions.size());
        if (n == 0) continue;
        int keep = static_cast<int>(std::ceil(config.keep_fraction * n));
        keep = std::min(keep, config.max_ctx);
        if (keep < n) {
          // Highest tf-idf first; ties to the earlier sentence position.
          std::vector<int> order = positions;
          std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            double sa = scores.at(sent[static_cast<std::size_t>(a)]);
            double sb = scores.at(sent[static_cast<std::size_t>(b)]);
            if (sa != sb) return sa > sb;
            return a < b;
          });
          order.resize(static_cast<std::size_t>(keep));
          std::sort(order.begin(), order.end());  // back to sentence order
          positions = order;
        }
        if (static_cast<int>(positions.size()) < config.min_ctx) continue;
        Candidate cand;
        cand.concept_id = mention_concepts[m];
        for (int p : positions) cand.features.push_back(sent[static_cast<std::size_t>(p)]);
        cand.doc_id = doc.doc_id;
        cand.sentence_index = static_cast<int>(si);
        candidates.push_back(std::move(cand));
      }
    }
  }

  // Per-concept cap. Default keeps the earliest candidates; the sampling mode
  // draws a uniform subset but still emits it in corpus order.
  std::vector<char> keep_flag(candidates.size(), 1);
  std::unordered_map<int, std::vector<std::size_t>> by_concept;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    by_concept[candidates[i].concept_id].push_back(i);
  for (auto& [cid, idxs] : by_concept) {
    if (static_cast<int>(idxs.size()) <= config.max_per_concept) continue;
    if (config.sample_cap) {
      Rng rng(config.seed + static_cast<std::uint64_t>(cid));
      // Partial Fisher-Yates: the first max_per_concept slots are the sample.
      std::vector<std::size_t> pool = idxs;
      for (int j = 0; j < config.max_per_concept; ++j) {
        std::size_t pick = static_cast<std::size_t>(j) +
                           next_below(rng, pool.size() - static_cast<std::size_t>(j));
        std::swap(pool[static_cast<std::size_t>(j)], pool[pick]);
      }
      std::unordered_set<std::size_t> chosen(pool.begin(),
                                             pool.begin() + config.max_per_concept);
      for (std::size_t i : idxs)
        if (!chosen.count(i)) keep_flag[i] = 0;
    } else {
      for (std::size_t j = static_cast<std::size_t>(config.max_per_concept); j < idxs.size(); ++j)
        keep_flag[idxs[j]] = 0;
    }
  }

  StimulusSet set;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!keep_flag[i]) continue;
    const Candidate& cand = candidates[i];
    Stimulus s;
    s.concept_id = set.vocab.add_concept(lexicon.form(cand.concept_id));
    for (const auto& tok : cand.features) s.features.push_back(set.vocab.add_feature(tok));
    s.doc_id = cand.doc_id;
    s.sentence_index = cand.sentence_index;
    set.stimuli.push_back(std::move(s));
  }
  if (set.stimuli.empty()) throw Error("empty stimulus set");
  set.per_concept_counts.assign(static_cast<std::size_t>(set.vocab.num_concepts()), 0);
  for (const auto& s : set.stimuli) ++set.per_concept_counts[static_cast<std::size_t>(s.concept_id)];
  set.validate(config.min_ctx, config.max_ctx, config.max_per_concept);
  return set;
}

void save_stimuli(const StimulusSet& set, const std::string& path) {
  atomic_write(path, [&](std::ostream& out) {
    for (const auto& s : set.stimuli) {
      json j;
      j["concept"] = set.vocab.concept_name(s.concept_id);
      json feats = json::array();
      for (int f : s.features) feats.push_back(set.vocab.feature_name(f));
      j["features"] = std::move(feats);
      if (!s.doc_id.empty()) j["source"] = json::array({s.doc_id, s.sentence_index});
      out << j.dump() << '\n';
    }
  });
}

StimulusSet load_stimuli(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  StimulusSet set;
  int lineno = 0;
  for (const auto& line : lines) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("stimulus file " + path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("concept") || !j.contains("features") ||
        !j["concept"].is_string() || !j["features"].is_array())
      throw Error("stimulus file " + path + " line " + std::to_string(lineno) +
                  ": expected {\"concept\", \"features\"}");
    Stimulus s;
    s.concept_id = set.vocab.add_concept(j["concept"].get<std::string>());
    for (const auto& f : j["features"]) {
      if (!f.is_string())
        throw Error("stimulus file " + path + " line " + std::to_string(lineno) +
                    ": feature entries must be strings");
      s.features.push_back(set.vocab.add_feature(f.get<std::string>()));
    }
    if (j.contains("source")) {
      const auto& src = j["source"];
      if (!src.is_array() || src.size() != 2 || !src[0].is_string() || !src[1].is_number_integer())
        throw Error("stimulus file " + path + " line " + std::to_string(lineno) +
                    ": source must be [doc_id, sentence_index]");
      s.doc_id = src[0].get<std::string>();
      s.sentence_index = src[1].get<int>();
    }
    int w = static_cast<int>(s.features.size());
    if (w < 3 || w > 20)
      throw Error("stimulus file " + path + " line " + std::to_string(lineno) + ": context width " +
                  std::to_string(w) + " outside [3,20]");
    set.stimuli.push_back(std::move(s));
  }
  if (set.stimuli.empty()) throw Error("empty stimulus set");
  set.per_concept_counts.assign(static_cast<std::size_t>(set.vocab.num_concepts()), 0);
  for (const auto& s : set.stimuli) ++set.per_concept_counts[static_cast<std::size_t>(s.concept_id)];
  return set;
}

std::vector<TokenizedDocument> load_documents(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  std::vector<TokenizedDocument> docs;
  int lineno = 0;
  for (const auto& line : lines) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("document file " + path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("doc_id") || !j.contains("sentences"))
      throw Error("document file " + path + " line " + std::to_string(lineno) +
                  ": expected {\"doc_id\", \"sentences\"}");
    TokenizedDocument doc;
    doc.doc_id = j["doc_id"].get<std::string>();
    for (const auto& sent : j["sentences"]) {
      std::vector<std::string> toks;
      for (const auto& tok : sent) toks.push_back(tok.get<std::string>());
      if (!toks.empty()) doc.sentences.push_back(std::move(toks));
    }
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw Error("no documents");
  return docs;
}

void save_documents(const std::vector<TokenizedDocument>& docs, const std::string& path) {
  atomic_write(path, [&](std::ostream& out) {
    for (const auto& doc : docs) {
      json j;
      j["doc_id"] = doc.doc_id;
      j["sentences"] = doc.sentences;
      out << j.dump() << '\n';
    }
  });
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::unordered_set<std::string> words;
  for (auto& line : read_lines(path))
    if (!line.empty()) words.insert(line);
  return words;
}

}  // namespace bcf
