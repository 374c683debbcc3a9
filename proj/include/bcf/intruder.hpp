#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "bcf/types.hpp"

namespace bcf {

enum class TaskKind { coherence, relevance };

struct IntruderTask {
  std::string task_id;
  TaskKind kind = TaskKind::coherence;
  // Words for coherence tasks; space-joined word lists for relevance tasks.
  std::vector<std::string> display_items;
  int answer_index = -1;  // the planted intruder's position
  // For relevance tasks: the category's member concepts, shown alongside.
  std::string context;
};

// Annotator choices per task, in file order.
struct ResponseSet {
  std::vector<std::string> task_ids;  // first-seen order
  std::unordered_map<std::string, std::vector<int>> choices_of;
};

// One task per feature type: its top_n words plus one word planted from a
// different type. The intruder is drawn from a randomly chosen other type's
// top_n words and must sit outside the source type's top 3*top_n, so it reads
// as genuinely foreign. type_words holds each type's words, best first. Types
// where no such intruder exists are skipped, with a note in *warnings.
std::vector<IntruderTask> gen_coherence_tasks(const std::vector<std::vector<std::string>>& type_words,
                                              int top_n, std::uint64_t seed,
                                              std::vector<std::string>* warnings = nullptr);

// One task per category: its types_shown-1 most relevant feature types plus
// one type with zero or bottom-quartile relevance, each rendered as its
// words_per_type best words. members supplies the concept list displayed as
// the category context. Categories without enough associated types or without
// any eligible intruder are skipped, with a note in *warnings.
std::vector<IntruderTask> gen_relevance_tasks(const std::vector<std::vector<std::string>>& members,
                                              const std::vector<std::vector<double>>& relevance,
                                              const std::vector<std::vector<std::string>>& type_words,
                                              int types_shown, int words_per_type,
                                              std::uint64_t seed,
                                              std::vector<std::string>* warnings = nullptr);

// Fraction of (task, annotator) pairs whose choice hits the planted intruder.
double score_accuracy(const std::vector<IntruderTask>& tasks, const ResponseSet& responses);

// Fleiss' kappa over the response matrix with n_items_per_task choice
// categories. Tasks must have equal annotator counts; unequal counts are
// trimmed to the smallest (noted in *warnings).
double fleiss_kappa(const ResponseSet& responses, int n_items_per_task,
                    std::vector<std::string>* warnings = nullptr);

// Task CSV: task_id, kind, context, item_1..item_k (annotator-facing, no
// answers). Keyfile CSV: task_id, answer_index. Response CSV: task_id,
// annotator_id, choice_index.
void save_tasks(const std::vector<IntruderTask>& tasks, const std::string& path);
void save_keys(const std::vector<IntruderTask>& tasks, const std::string& path);
std::vector<IntruderTask> load_tasks(const std::string& tasks_path, const std::string& keys_path);
ResponseSet load_responses(const std::string& path);
void save_responses(const std::vector<std::pair<std::string, std::vector<int>>>& by_task,
                    const std::string& path);

}  // namespace bcf
