// Turn-level attribute detection: instead of exact spans, predict whether a
// speaker turn contains each of six attribute classes. One-vs-rest averaged
// perceptrons over turn unigrams and bigrams; turns are treated as
// independent inputs. Trades precision for recall against the span tagger,
// which is the point of the comparison.
#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dialanno/io.hpp"
#include "dialanno/rng.hpp"
#include "dialanno/types.hpp"
#include "dialanno/util.hpp"

namespace dialanno {

enum class TurnClass {
  Frequency,
  Duration,
  Location,
  Severity,
  AlleviatingFactor,
  ProvokingFactor,
};

constexpr int kTurnClassCount = 6;
constexpr std::array<TurnClass, kTurnClassCount> kTurnClasses = {
    TurnClass::Frequency,        TurnClass::Duration,
    TurnClass::Location,         TurnClass::Severity,
    TurnClass::AlleviatingFactor, TurnClass::ProvokingFactor,
};

inline const char* to_string(TurnClass c) {
  switch (c) {
    case TurnClass::Frequency: return "Frequency";
    case TurnClass::Duration: return "Duration";
    case TurnClass::Location: return "Location";
    case TurnClass::Severity: return "Severity";
    case TurnClass::AlleviatingFactor: return "Alleviating Factor";
    default: return "Provoking Factor";
  }
}

// Maps an attribute tag to its detection class; "Property:Severity/Amount"
// counts as Severity. Attributes outside the six classes map to nothing.
inline std::optional<TurnClass> attribute_turn_class(const std::string& tag) {
  std::string local = tag;
  if (local.rfind("Property:", 0) == 0) local = local.substr(9);
  if (local == "Frequency") return TurnClass::Frequency;
  if (local == "Duration") return TurnClass::Duration;
  if (local == "Location") return TurnClass::Location;
  if (local == "Severity" || local == "Severity/Amount") return TurnClass::Severity;
  if (local == "Alleviating Factor") return TurnClass::AlleviatingFactor;
  if (local == "Provoking Factor") return TurnClass::ProvokingFactor;
  return std::nullopt;
}

enum class TurnMerge { AllTasks, PerTask };

inline std::vector<std::string> turn_detector_features(const Turn& turn) {
  std::vector<std::string> f;
  f.reserve(2 * turn.tokens.size());
  std::vector<std::string> lowered;
  lowered.reserve(turn.tokens.size());
  for (const auto& tok : turn.tokens) lowered.push_back(lowercase(tok));
  for (const auto& w : lowered) f.push_back("u=" + w);
  for (std::size_t i = 0; i + 1 < lowered.size(); ++i)
    f.push_back("b=" + lowered[i] + " " + lowered[i + 1]);
  return f;
}

struct TurnModel {
  std::array<std::unordered_map<std::string, double>, kTurnClassCount> weights;
  std::array<double, kTurnClassCount> threshold{};  // default 0 per class
  TurnMerge merge = TurnMerge::AllTasks;
  std::optional<Task> task;  // set in per-task mode
  int epochs = 0;
  std::uint64_t seed = 0;

  double score(int cls, const std::vector<std::string>& features) const {
    double s = 0;
    for (const auto& f : features) {
      auto it = weights[cls].find(f);
      if (it != weights[cls].end()) s += it->second;
    }
    return s;
  }
};

using TurnClassSets = std::vector<std::set<TurnClass>>;  // one set per turn

// Gold classes per turn: class c is positive for a turn iff any attribute
// span of kind c lies in it. Annotation sets for other tasks are skipped in
// per-task mode.
inline TurnClassSets project_spans_to_turns(
    const std::vector<const AnnotationSet*>& sets, std::size_t turn_count) {
  TurnClassSets out(turn_count);
  for (const AnnotationSet* a : sets)
    for (const auto& span : a->spans)
      if (auto cls = attribute_turn_class(span.tag))
        if (span.turn_index >= 0 &&
            span.turn_index < static_cast<int>(turn_count))
          out[span.turn_index].insert(*cls);
  return out;
}

inline TurnModel train_turns(const std::vector<Conversation>& conversations,
                             const std::vector<AnnotationSet>& annotations,
                             int epochs, std::uint64_t seed,
                             TurnMerge merge = TurnMerge::AllTasks,
                             std::optional<Task> task = std::nullopt) {
  if (conversations.empty())
    throw std::invalid_argument("train_turns: empty corpus");
  if (epochs < 1) throw std::invalid_argument("train_turns: epochs must be >= 1");
  if (merge == TurnMerge::PerTask && !task)
    throw std::invalid_argument("train_turns: per-task mode needs a task");

  std::map<std::string, std::vector<const AnnotationSet*>> by_conv;
  for (const auto& a : annotations) {
    if (merge == TurnMerge::PerTask && a.task != *task) continue;
    by_conv[a.conversation_id].push_back(&a);
  }

  struct TurnExample {
    std::vector<std::string> features;
    std::array<bool, kTurnClassCount> positive{};
  };
  std::vector<TurnExample> examples;
  for (const auto& conv : conversations) {
    auto it = by_conv.find(conv.id);
    static const std::vector<const AnnotationSet*> kNone;
    TurnClassSets gold = project_spans_to_turns(
        it == by_conv.end() ? kNone : it->second, conv.turns.size());
    for (std::size_t turn = 0; turn < conv.turns.size(); ++turn) {
      TurnExample ex;
      ex.features = turn_detector_features(conv.turns[turn]);
      for (int c = 0; c < kTurnClassCount; ++c)
        ex.positive[c] = gold[turn].count(kTurnClasses[c]) > 0;
      examples.push_back(std::move(ex));
    }
  }

  TurnModel model;
  model.merge = merge;
  model.task = task;
  model.epochs = epochs;
  model.seed = seed;

  struct Entry {
    double w = 0, u = 0;
  };
  std::array<std::unordered_map<std::string, Entry>, kTurnClassCount> rows;

  Rng rng(seed);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const long long total_steps =
      static_cast<long long>(epochs) * static_cast<long long>(examples.size());
  long long step = 0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t oi : order) {
      ++step;
      const TurnExample& ex = examples[oi];
      for (int c = 0; c < kTurnClassCount; ++c) {
        double s = 0;
        for (const auto& f : ex.features) {
          auto it = rows[c].find(f);
          if (it != rows[c].end()) s += it->second.w;
        }
        const double y = ex.positive[c] ? 1.0 : -1.0;
        if (y * s <= 0) {
          for (const auto& f : ex.features) {
            Entry& e = rows[c][f];
            e.w += y;
            e.u += static_cast<double>(step - 1) * y;
          }
        }
      }
    }
  }

  for (int c = 0; c < kTurnClassCount; ++c)
    for (const auto& [f, e] : rows[c]) {
      double avg = e.w - e.u / static_cast<double>(total_steps);
      if (avg != 0.0) model.weights[c].emplace(f, avg);
    }
  return model;
}

// Class c is assigned iff its score clears the class threshold. With an
// untrained (all-zero) model and the default threshold 0, every class fires
// on every turn; callers wanting silence should raise the threshold.
inline TurnClassSets predict_turns(const TurnModel& model,
                                   const Conversation& conversation) {
  TurnClassSets out(conversation.turns.size());
  for (std::size_t turn = 0; turn < conversation.turns.size(); ++turn) {
    auto features = turn_detector_features(conversation.turns[turn]);
    for (int c = 0; c < kTurnClassCount; ++c)
      if (model.score(c, features) >= model.threshold[c])
        out[turn].insert(kTurnClasses[c]);
  }
  return out;
}

struct TurnClassScore {
  double precision = 1, recall = 1, f1 = 1;
  long long tp = 0, fp = 0, fn = 0;
  long long support = 0;  // gold-positive turns
};

using TurnEval = std::map<TurnClass, TurnClassScore>;

// Turn-level P/R/F1 per class, pooled over all turns of all conversations.
// predictions and gold are parallel: one TurnClassSets per conversation.
inline TurnEval eval_turns(const std::vector<TurnClassSets>& predictions,
                           const std::vector<TurnClassSets>& gold) {
  if (predictions.size() != gold.size())
    throw std::invalid_argument("eval_turns: conversation count mismatch");
  TurnEval eval;
  for (TurnClass c : kTurnClasses) eval[c] = {};
  for (std::size_t ci = 0; ci < gold.size(); ++ci) {
    if (predictions[ci].size() != gold[ci].size())
      throw std::invalid_argument("eval_turns: turn count mismatch");
    for (std::size_t t = 0; t < gold[ci].size(); ++t) {
      for (TurnClass c : kTurnClasses) {
        bool g = gold[ci][t].count(c) > 0;
        bool p = predictions[ci][t].count(c) > 0;
        auto& sc = eval[c];
        sc.support += g;
        if (g && p) ++sc.tp;
        if (!g && p) ++sc.fp;
        if (g && !p) ++sc.fn;
      }
    }
  }
  for (auto& [c, sc] : eval) {
    sc.precision = (sc.tp + sc.fp) ? static_cast<double>(sc.tp) / (sc.tp + sc.fp) : 1.0;
    sc.recall = (sc.tp + sc.fn) ? static_cast<double>(sc.tp) / (sc.tp + sc.fn) : 1.0;
    sc.f1 = (sc.precision + sc.recall) > 0
                ? 2 * sc.precision * sc.recall / (sc.precision + sc.recall)
                : 0.0;
  }
  return eval;
}

// ---- model file ----

inline void save_turn_model(const std::string& path, const TurnModel& model) {
  json classes = json::object();
  for (int c = 0; c < kTurnClassCount; ++c) {
    std::vector<std::string> feats;
    for (const auto& [f, w] : model.weights[c]) feats.push_back(f);
    std::sort(feats.begin(), feats.end());
    json jw = json::object();
    for (const auto& f : feats) jw[f] = model.weights[c].at(f);
    classes[to_string(kTurnClasses[c])] = {{"weights", jw},
                                           {"threshold", model.threshold[c]}};
  }
  json j = {{"format", "dialanno-turns"},
            {"version", 1},
            {"merge", model.merge == TurnMerge::AllTasks ? "all_tasks" : "per_task"},
            {"epochs", model.epochs},
            {"seed", model.seed},
            {"classes", classes}};
  if (model.task) j["task"] = to_string(*model.task);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

inline TurnModel load_turn_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError(path, 1, "invalid JSON");
  if (j.value("format", "") != "dialanno-turns")
    throw std::runtime_error(path + ": not a turn model file");
  TurnModel model;
  model.merge = j.value("merge", "all_tasks") == "per_task" ? TurnMerge::PerTask
                                                            : TurnMerge::AllTasks;
  model.epochs = j.value("epochs", 0);
  model.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("task"))
    model.task = task_from_string(j.at("task").get<std::string>());
  for (int c = 0; c < kTurnClassCount; ++c) {
    const json& jc = j.at("classes").at(to_string(kTurnClasses[c]));
    model.threshold[c] = jc.value("threshold", 0.0);
    for (const auto& [f, w] : jc.at("weights").items())
      model.weights[c][f] = w.get<double>();
  }
  return model;
}

}  // namespace dialanno
