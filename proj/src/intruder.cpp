#include "bcf/intruder.hpp"

#include <algorithm>
#include <unordered_set>

#include "bcf/io_util.hpp"
#include "bcf/rng.hpp"

namespace bcf {

static void note(std::vector<std::string>* warnings, const std::string& msg) {
  if (warnings) warnings->push_back(msg);
}

// Fisher-Yates with our own uniform draws, so shuffles replay across platforms.
static void shuffle_items(std::vector<std::string>& items, int& tracked_index, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(next_below(rng, i));
    std::swap(items[i - 1], items[j]);
    if (tracked_index == static_cast<int>(i - 1))
      tracked_index = static_cast<int>(j);
    else if (tracked_index == static_cast<int>(j))
      tracked_index = static_cast<int>(i - 1);
  }
}

std::vector<IntruderTask> gen_coherence_tasks(const std::vector<std::vector<std::string>>& type_words,
                                              int top_n, std::uint64_t seed,
                                              std::vector<std::string>* warnings) {
  int T = static_cast<int>(type_words.size());
  if (T < 2) throw Error("need at least 2 feature types for coherence tasks");
  if (top_n < 1) throw Error("top_n must be >= 1");

  Rng rng(seed);
  std::vector<IntruderTask> tasks;
  for (int g = 0; g < T; ++g) {
    const auto& words = type_words[static_cast<std::size_t>(g)];
    if (static_cast<int>(words.size()) < top_n) {
      note(warnings, "type " + std::to_string(g) + ": fewer than " + std::to_string(top_n) +
                         " words, skipped");
      continue;
    }
    // The exclusion window: nothing from the source type's own theme.
    std::unordered_set<std::string> excluded;
    for (std::size_t i = 0; i < words.size() && i < static_cast<std::size_t>(3 * top_n); ++i)
      excluded.insert(words[i]);

    // Types that can contribute at least one eligible intruder word.
    std::vector<int> donors;
    for (int h = 0; h < T; ++h) {
      if (h == g) continue;
      const auto& other = type_words[static_cast<std::size_t>(h)];
      for (std::size_t i = 0; i < other.size() && i < static_cast<std::size_t>(top_n); ++i)
        if (!excluded.count(other[i])) {
          donors.push_back(h);
          break;
        }
    }
    if (donors.empty()) {
      note(warnings, "type " + std::to_string(g) + ": no eligible intruder word, skipped");
      continue;
    }
    int donor = donors[next_below(rng, donors.size())];
    std::vector<std::string> pool;
    const auto& donor_words = type_words[static_cast<std::size_t>(donor)];
    for (std::size_t i = 0; i < donor_words.size() && i < static_cast<std::size_t>(top_n); ++i)
      if (!excluded.count(donor_words[i])) pool.push_back(donor_words[i]);
    std::string intruder = pool[next_below(rng, pool.size())];

    IntruderTask task;
    task.task_id = "coh_" + std::to_string(g);
    task.kind = TaskKind::coherence;
    task.display_items.assign(words.begin(), words.begin() + top_n);
    task.display_items.push_back(intruder);
    task.answer_index = top_n;
    shuffle_items(task.display_items, task.answer_index, rng);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

static std::string join_words(const std::vector<std::string>& words, int n) {
  std::string out;
  for (int i = 0; i < n && i < static_cast<int>(words.size()); ++i) {
    if (i) out += ' ';
    out += words[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<IntruderTask> gen_relevance_tasks(const std::vector<std::vector<std::string>>& members,
                                              const std::vector<std::vector<double>>& relevance,
                                              const std::vector<std::vector<std::string>>& type_words,
                                              int types_shown, int words_per_type,
                                              std::uint64_t seed,
                                              std::vector<std::string>* warnings) {
  if (types_shown < 2) throw Error("types_shown must be >= 2");
  if (words_per_type < 1) throw Error("words_per_type must be >= 1");
  if (members.size() != relevance.size())
    throw Error("members and relevance disagree on category count");
  int T = static_cast<int>(type_words.size());
  int shown = types_shown - 1;  // associated types; the last slot is the intruder

  Rng rng(seed);
  std::vector<IntruderTask> tasks;
  for (std::size_t cat = 0; cat < relevance.size(); ++cat) {
    const auto& rel = relevance[cat];
    if (static_cast<int>(rel.size()) != T)
      throw Error("relevance row size differs from type count");

    // Types by descending relevance, ties to the lower id.
    std::vector<int> order(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) order[static_cast<std::size_t>(t)] = t;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rel[static_cast<std::size_t>(a)] > rel[static_cast<std::size_t>(b)]; });

    std::vector<int> associated;
    for (int t : order) {
      if (rel[static_cast<std::size_t>(t)] <= 0.0) break;
      if (static_cast<int>(associated.size()) == shown) break;
      if (static_cast<int>(type_words[static_cast<std::size_t>(t)].size()) < words_per_type) continue;
      associated.push_back(t);
    }
    if (static_cast<int>(associated.size()) < shown) {
      note(warnings, "category " + std::to_string(cat) + ": fewer than " + std::to_string(shown) +
                         " displayable associated types, skipped");
      continue;
    }

    // Intruder pool: zero relevance, or the bottom quartile by relevance.
    int quartile = (T + 3) / 4;
    std::unordered_set<int> pool_set;
    for (int t = 0; t < T; ++t)
      if (rel[static_cast<std::size_t>(t)] <= 0.0) pool_set.insert(t);
    for (int i = 0; i < quartile; ++i) pool_set.insert(order[static_cast<std::size_t>(T - 1 - i)]);
    for (int t : associated) pool_set.erase(t);
    std::vector<int> pool;
    for (int t : pool_set)
      if (static_cast<int>(type_words[static_cast<std::size_t>(t)].size()) >= words_per_type)
        pool.push_back(t);
    std::sort(pool.begin(), pool.end());
    if (pool.empty()) {
      note(warnings, "category " + std::to_string(cat) + ": no eligible intruder type, skipped");
      continue;
    }
    int intruder = pool[next_below(rng, pool.size())];

    IntruderTask task;
    task.task_id = "rel_" + std::to_string(cat);
    task.kind = TaskKind::relevance;
    for (int t : associated)
      task.display_items.push_back(join_words(type_words[static_cast<std::size_t>(t)], words_per_type));
    task.display_items.push_back(join_words(type_words[static_cast<std::size_t>(intruder)], words_per_type));
    task.answer_index = shown;
    task.context = join_words(members[cat], static_cast<int>(members[cat].size()));
    shuffle_items(task.display_items, task.answer_index, rng);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

double score_accuracy(const std::vector<IntruderTask>& tasks, const ResponseSet& responses) {
  std::unordered_map<std::string, int> answer_of;
  for (const auto& t : tasks) answer_of.emplace(t.task_id, t.answer_index);
  long long correct = 0, total = 0;
  for (const auto& id : responses.task_ids) {
    auto it = answer_of.find(id);
    if (it == answer_of.end()) throw Error("response for unknown task " + id);
    for (int choice : responses.choices_of.at(id)) {
      ++total;
      if (choice == it->second) ++correct;
    }
  }
  if (total == 0) throw Error("no responses");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double fleiss_kappa(const ResponseSet& responses, int n_items_per_task,
                    std::vector<std::string>* warnings) {
  if (responses.task_ids.empty()) throw Error("no responses");
  if (n_items_per_task < 2) throw Error("need at least 2 choice categories");

  std::size_t n = SIZE_MAX;
  bool unequal = false;
  for (const auto& id : responses.task_ids) {
    std::size_t count = responses.choices_of.at(id).size();
    if (n != SIZE_MAX && count != n) unequal = true;
    n = std::min(n, count);
  }
  if (unequal)
    note(warnings, "unequal annotator counts; trimmed every task to " + std::to_string(n));
  if (n < 2) throw Error("need at least 2 annotators per task");

  double p_bar = 0.0;
  std::vector<double> pooled(static_cast<std::size_t>(n_items_per_task), 0.0);
  for (const auto& id : responses.task_ids) {
    const auto& choices = responses.choices_of.at(id);
    std::vector<int> n_ic(static_cast<std::size_t>(n_items_per_task), 0);
    for (std::size_t a = 0; a < n; ++a) {
      int c = choices[a];
      if (c < 0 || c >= n_items_per_task) throw Error("choice index out of range in task " + id);
      ++n_ic[static_cast<std::size_t>(c)];
      pooled[static_cast<std::size_t>(c)] += 1.0;
    }
    double agree = 0.0;
    for (int cnt : n_ic) agree += static_cast<double>(cnt) * cnt;
    p_bar += (agree - static_cast<double>(n)) / (static_cast<double>(n) * (static_cast<double>(n) - 1.0));
  }
  double tasks_n = static_cast<double>(responses.task_ids.size());
  p_bar /= tasks_n;

  double p_e = 0.0;
  for (double& c : pooled) {
    c /= tasks_n * static_cast<double>(n);
    p_e += c * c;
  }
  if (p_e >= 1.0) {
    if (p_bar >= 1.0) return 1.0;
    throw Error("degenerate marginals");
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

static std::string kind_name(TaskKind kind) {
  return kind == TaskKind::coherence ? "coherence" : "relevance";
}

void save_tasks(const std::vector<IntruderTask>& tasks, const std::string& path) {
  atomic_write(path, [&](std::ostream& out) {
    for (const auto& t : tasks) {
      std::vector<std::string> row{t.task_id, kind_name(t.kind), t.context};
      row.insert(row.end(), t.display_items.begin(), t.display_items.end());
      out << csv_join(row) << '\n';
    }
  });
}

void save_keys(const std::vector<IntruderTask>& tasks, const std::string& path) {
  atomic_write(path, [&](std::ostream& out) {
    for (const auto& t : tasks)
      out << csv_join({t.task_id, std::to_string(t.answer_index)}) << '\n';
  });
}

std::vector<IntruderTask> load_tasks(const std::string& tasks_path, const std::string& keys_path) {
  std::vector<IntruderTask> tasks;
  int lineno = 0;
  for (const auto& line : read_lines(tasks_path)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = csv_split(line);
    if (fields.size() < 5)
      throw Error("task file " + tasks_path + " line " + std::to_string(lineno) +
                  ": expected task_id, kind, context and at least 2 items");
    IntruderTask t;
    t.task_id = fields[0];
    if (fields[1] == "coherence")
      t.kind = TaskKind::coherence;
    else if (fields[1] == "relevance")
      t.kind = TaskKind::relevance;
    else
      throw Error("task file " + tasks_path + " line " + std::to_string(lineno) + ": unknown kind " +
                  fields[1]);
    t.context = fields[2];
    t.display_items.assign(fields.begin() + 3, fields.end());
    tasks.push_back(std::move(t));
  }
  std::unordered_map<std::string, int> key;
  lineno = 0;
  for (const auto& line : read_lines(keys_path)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = csv_split(line);
    if (fields.size() != 2)
      throw Error("keyfile " + keys_path + " line " + std::to_string(lineno) +
                  ": expected task_id, answer_index");
    try {
      key[fields[0]] = std::stoi(fields[1]);
    } catch (const std::exception&) {
      throw Error("keyfile " + keys_path + " line " + std::to_string(lineno) + ": bad index " +
                  fields[1]);
    }
  }
  for (auto& t : tasks) {
    auto it = key.find(t.task_id);
    if (it == key.end()) throw Error("keyfile has no answer for task " + t.task_id);
    if (it->second < 0 || it->second >= static_cast<int>(t.display_items.size()))
      throw Error("answer index out of range for task " + t.task_id);
    t.answer_index = it->second;
  }
  return tasks;
}

ResponseSet load_responses(const std::string& path) {
  ResponseSet rs;
  int lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = csv_split(line);
    if (fields.size() != 3)
      throw Error("response file " + path + " line " + std::to_string(lineno) +
                  ": expected task_id, annotator_id, choice_index");
    int choice;
    try {
      choice = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw Error("response file " + path + " line " + std::to_string(lineno) + ": bad choice " +
                  fields[2]);
    }
    auto [it, fresh] = rs.choices_of.try_emplace(fields[0]);
    if (fresh) rs.task_ids.push_back(fields[0]);
    it->second.push_back(choice);
  }
  if (rs.task_ids.empty()) throw Error("response file " + path + " is empty");
  return rs;
}

void save_responses(const std::vector<std::pair<std::string, std::vector<int>>>& by_task,
                    const std::string& path) {
  atomic_write(path, [&](std::ostream& out) {
    for (const auto& [task_id, choices] : by_task)
      for (std::size_t a = 0; a < choices.size(); ++a)
        out << csv_join({task_id, "ann_" + std::to_string(a), std::to_string(choices[a])}) << '\n';
  });
}

}  // namespace bcf
