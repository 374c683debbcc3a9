#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bcf/types.hpp"

namespace bcf {

// doc_id -> term -> tf(t,d) * ln(N_docs / df(t)). Terms absent from a doc
// simply have no entry (score 0).
using TfIdfTable = std::unordered_map<std::string, std::unordered_map<std::string, double>>;

TfIdfTable compute_tfidf(const std::vector<TokenizedDocument>& documents);

struct ExtractConfig {
  double keep_fraction = 0.5;  // fraction of context words retained, by tf-idf rank
  int min_ctx = 3;
  int max_ctx = 20;
  int max_per_concept = 1000;
  std::unordered_set<std::string> stopwords;
  // Cap enforcement: earliest-first by default; uniform seeded sampling when set.
  bool sample_cap = false;
  std::uint64_t seed = 0;
};

// One candidate stimulus per (sentence, concept mention). Context words are
// the sentence's other tokens, minus stopwords, ranked by tf-idf in the source
// document; the top ceil(keep_fraction * n) survive, clipped to max_ctx, and
// candidates left with fewer than min_ctx words are dropped. Tf-idf ties go to
// the earlier sentence position. Surviving words keep sentence order.
StimulusSet extract_stimuli(const std::vector<TokenizedDocument>& documents,
                            const ConceptLexicon& lexicon, const ExtractConfig& config);

// JSON-lines, one stimulus per line:
//   {"concept": "...", "features": ["...", ...], "source": ["doc", 4]}
// Names rather than ids, so files stand alone; load rebuilds both id spaces
// by first occurrence, making save/load a strict round trip.
void save_stimuli(const StimulusSet& set, const std::string& path);
StimulusSet load_stimuli(const std::string& path);

// JSON-lines documents: {"doc_id": "...", "sentences": [["tok", ...], ...]}.
std::vector<TokenizedDocument> load_documents(const std::string& path);
void save_documents(const std::vector<TokenizedDocument>& docs, const std::string& path);

std::unordered_set<std::string> load_stopwords(const std::string& path);

}  // namespace bcf
