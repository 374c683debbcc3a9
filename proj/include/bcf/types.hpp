#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace bcf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A pre-tokenized document: lowercase tokens grouped into sentences.
// Tokenization, tagging and lemmatization happen upstream.
struct TokenizedDocument {
  std::string doc_id;
  std::vector<std::vector<std::string>> sentences;
};

// Target concept inventory. Ids are dense and 0-based, in insertion order.
// Multi-token surface forms are stored with single spaces between tokens and
// matched as contiguous token sequences.
class ConceptLexicon {
 public:
  int add(const std::string& surface_form);
  int id_of(const std::string& surface_form) const;  // -1 if absent
  const std::string& form(int id) const { return forms_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(forms_.size()); }
  const std::vector<std::string>& forms() const { return forms_; }

  // One surface form per line; blank lines ignored.
  static ConceptLexicon load(const std::string& path);

 private:
  std::vector<std::string> forms_;
  std::unordered_map<std::string, int> by_form_;
};

// String <-> dense id maps for concepts and features. Ids are assigned by
// first occurrence, which pins vocabulary order for reproducibility.
class Vocabulary {
 public:
  int add_concept(const std::string& name);
  int add_feature(const std::string& name);
  int concept_id(const std::string& name) const;  // -1 if absent
  int feature_id(const std::string& name) const;
  const std::string& concept_name(int id) const { return concept_names_.at(static_cast<std::size_t>(id)); }
  const std::string& feature_name(int id) const { return feature_names_.at(static_cast<std::size_t>(id)); }
  int num_concepts() const { return static_cast<int>(concept_names_.size()); }
  int num_features() const { return static_cast<int>(feature_names_.size()); }
  const std::vector<std::string>& concept_names() const { return concept_names_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  // Content digest over both name lists; used to detect model/data mismatches.
  std::uint64_t digest() const;

  bool operator==(const Vocabulary& other) const {
    return concept_names_ == other.concept_names_ && feature_names_ == other.feature_names_;
  }

 private:
  std::vector<std::string> concept_names_, feature_names_;
  std::unordered_map<std::string, int> concept_ids_, feature_ids_;
};

// One concept mention with its filtered context words. Feature ids may repeat
// (a context word occurring twice contributes two tokens).
struct Stimulus {
  int concept_id = -1;
  std::vector<int> features;
  // Optional provenance.
  std::string doc_id;
  int sentence_index = -1;

  bool operator==(const Stimulus& other) const {
    return concept_id == other.concept_id && features == other.features &&
           doc_id == other.doc_id && sentence_index == other.sentence_index;
  }
};

struct StimulusSet {
  std::vector<Stimulus> stimuli;
  Vocabulary vocab;
  std::vector<int> per_concept_counts;  // indexed by concept id

  int num_stimuli() const { return static_cast<int>(stimuli.size()); }

  // Checks the corpus invariants: context width bounds, per-concept cap, and
  // id ranges. Throws Error naming the first offender.
  void validate(int min_ctx = 3, int max_ctx = 20, int max_per_concept = 1000) const;

  bool operator==(const StimulusSet& other) const {
    return stimuli == other.stimuli && vocab == other.vocab &&
           per_concept_counts == other.per_concept_counts;
  }
};

}  // namespace bcf
