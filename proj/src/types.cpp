#include "bcf/types.hpp"

#include <fstream>

#include "bcf/io_util.hpp"

namespace bcf {

int ConceptLexicon::add(const std::string& surface_form) {
  auto it = by_form_.find(surface_form);
  if (it != by_form_.end()) return it->second;
  int id = static_cast<int>(forms_.size());
  forms_.push_back(surface_form);
  by_form_.emplace(surface_form, id);
  return id;
}

int ConceptLexicon::id_of(const std::string& surface_form) const {
  auto it = by_form_.find(surface_form);
  return it == by_form_.end() ? -1 : it->second;
}

ConceptLexicon ConceptLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon file: " + path);
  ConceptLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lex.add(line);
  }
  return lex;
}

int Vocabulary::add_concept(const std::string& name) {
  auto it = concept_ids_.find(name);
  if (it != concept_ids_.end()) return it->second;
  int id = static_cast<int>(concept_names_.size());
  concept_names_.push_back(name);
  concept_ids_.emplace(name, id);
  return id;
}

int Vocabulary::add_feature(const std::string& name) {
  auto it = feature_ids_.find(name);
  if (it != feature_ids_.end()) return it->second;
  int id = static_cast<int>(feature_names_.size());
  feature_names_.push_back(name);
  feature_ids_.emplace(name, id);
  return id;
}

int Vocabulary::concept_id(const std::string& name) const {
  auto it = concept_ids_.find(name);
  return it == concept_ids_.end() ? -1 : it->second;
}

int Vocabulary::feature_id(const std::string& name) const {
  auto it = feature_ids_.find(name);
  return it == feature_ids_.end() ? -1 : it->second;
}

std::uint64_t Vocabulary::digest() const {
  // Hash both name lists with a separator byte that cannot occur inside a
  // name, so ["ab","c"] and ["a","bc"] do not collide.
  std::uint64_t h = kFnvOffset;
  for (const auto& n : concept_names_) {
    h = fnv1a(h, n);
    h = fnv1a_byte(h, '\n');
  }
  h = fnv1a_byte(h, 0x1f);
  for (const auto& n : feature_names_) {
    h = fnv1a(h, n);
    h = fnv1a_byte(h, '\n');
  }
  return h;
}

void StimulusSet::validate(int min_ctx, int max_ctx, int max_per_concept) const {
  std::vector<int> counts(static_cast<std::size_t>(vocab.num_concepts()), 0);
  for (std::size_t i = 0; i < stimuli.size(); ++i) {
    const Stimulus& s = stimuli[i];
    if (s.concept_id < 0 || s.concept_id >= vocab.num_concepts())
      throw Error("stimulus " + std::to_string(i) + ": concept id out of range");
    int w = static_cast<int>(s.features.size());
    if (w < min_ctx || w > max_ctx)
      throw Error("stimulus " + std::to_string(i) + ": context width " + std::to_string(w) +
                  " outside [" + std::to_string(min_ctx) + "," + std::to_string(max_ctx) + "]");
    for (int f : s.features)
      if (f < 0 || f >= vocab.num_features())
        throw Error("stimulus " + std::to_string(i) + ": feature id out of range");
    ++counts[static_cast<std::size_t>(s.concept_id)];
  }
  for (int c = 0; c < vocab.num_concepts(); ++c)
    if (counts[static_cast<std::size_t>(c)] > max_per_concept)
      throw Error("concept " + vocab.concept_name(c) + ": " +
                  std::to_string(counts[static_cast<std::size_t>(c)]) +
                  " stimuli exceeds cap " + std::to_string(max_per_concept));
  if (per_concept_counts != counts)
    throw Error("per_concept_counts out of sync with stimuli");
}

}  // namespace bcf
