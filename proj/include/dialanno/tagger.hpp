// Linear-chain span tagger: an averaged structured perceptron over simple
// lexical features with exact Viterbi decoding under BIO transition
// constraints (I_x may only follow B_x or I_x). Deterministic given the seed
// and input order. Entities and attributes train in one label space of
// status-composed tags; a task filter carves out attribute-only or
// entity-only models.
#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dialanno/bio.hpp"
#include "dialanno/io.hpp"
#include "dialanno/ontology.hpp"
#include "dialanno/rng.hpp"
#include "dialanno/types.hpp"
#include "dialanno/util.hpp"

namespace dialanno {

enum class TaskFilter { All, EntitiesOnly, AttributesOnly };

inline std::vector<std::string> token_features(const Turn& turn, std::size_t t) {
  const std::string lower = lowercase(turn.tokens[t]);
  std::vector<std::string> f;
  f.reserve(12);
  f.push_back("w=" + lower);
  for (std::size_t n = 1; n <= 3 && n <= lower.size(); ++n) {
    f.push_back("p" + std::to_string(n) + "=" + lower.substr(0, n));
    f.push_back("s" + std::to_string(n) + "=" + lower.substr(lower.size() - n));
  }
  f.push_back("prev=" + (t > 0 ? lowercase(turn.tokens[t - 1]) : std::string("<s>")));
  f.push_back("next=" + (t + 1 < turn.tokens.size()
                             ? lowercase(turn.tokens[t + 1])
                             : std::string("</s>")));
  f.push_back(std::string("spk=") + to_string(turn.speaker));
  if (has_digit(lower)) f.push_back("isdig");
  return f;
}

// Label space: index 0 is O; tag i (sorted) owns B at 1+2i and I at 2+2i.
// That ordering is also the decoding tie-break: O first, then
// lexicographically by tag, B before I.
struct TaggerModel {
  Task task = Task::Symptoms;
  std::vector<std::string> tags;  // composed tags, sorted, no "O"
  std::unordered_map<std::string, std::vector<double>> weights;
  int epochs = 0;
  std::uint64_t seed = 0;

  int label_count() const { return 1 + 2 * static_cast<int>(tags.size()); }

  TokenLabel label(int index) const {
    if (index == 0) return {"O", Bio::O};
    const std::string& tag = tags[(index - 1) / 2];
    return {tag, (index - 1) % 2 == 0 ? Bio::B : Bio::I};
  }

  int label_index(const TokenLabel& lab) const {
    if (lab.tag == "O") return 0;
    auto it = std::lower_bound(tags.begin(), tags.end(), lab.tag);
    if (it == tags.end() || *it != lab.tag)
      throw std::invalid_argument("tagger: unknown tag " + lab.tag);
    int ti = static_cast<int>(it - tags.begin());
    return 1 + 2 * ti + (lab.bio == Bio::I ? 1 : 0);
  }
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline bool is_inside_label(int l) { return l > 0 && (l - 1) % 2 == 1; }

// Raw weights plus the correction sum for averaging (u accumulates
// (step-1) * delta; averaged weight = w - u / total_steps).
struct AveragedRow {
  std::vector<double> w;
  std::vector<double> u;

  explicit AveragedRow(int n) : w(n, 0.0), u(n, 0.0) {}

  double operator[](int l) const { return w[l]; }

  void update(int l, double delta, long long step) {
    w[l] += delta;
    u[l] += static_cast<double>(step - 1) * delta;
  }
};

template <typename WeightMap>
std::vector<double> emission_scores(const WeightMap& weights, int label_count,
                                    const std::vector<std::string>& features) {
  std::vector<double> emit(label_count, 0.0);
  for (const auto& f : features) {
    auto it = weights.find(f);
    if (it == weights.end()) continue;
    const auto& row = it->second;
    for (int l = 0; l < label_count; ++l) emit[l] += row[l];
  }
  return emit;
}

// Exact argmax sequence under per-token scores and the BIO constraint.
// Scanning labels in index order with strict > implements the tie-break.
inline std::vector<int> viterbi(const std::vector<std::vector<double>>& emit,
                                int label_count) {
  const int n = static_cast<int>(emit.size());
  std::vector<int> path;
  if (n == 0) return path;

  std::vector<std::vector<double>> dp(n, std::vector<double>(label_count, kNegInf));
  std::vector<std::vector<int>> back(n, std::vector<int>(label_count, -1));

  for (int l = 0; l < label_count; ++l)
    if (!is_inside_label(l)) dp[0][l] = emit[0][l];

  for (int t = 1; t < n; ++t) {
    double best_any = kNegInf;
    int best_any_l = 0;
    for (int l = 0; l < label_count; ++l) {
      if (dp[t - 1][l] > best_any) {
        best_any = dp[t - 1][l];
        best_any_l = l;
      }
    }
    for (int l = 0; l < label_count; ++l) {
      if (is_inside_label(l)) {
        const int b = l - 1;  // the matching B label
        int prev = dp[t - 1][b] >= dp[t - 1][l] ? b : l;
        if (dp[t - 1][prev] == kNegInf) continue;
        dp[t][l] = dp[t - 1][prev] + emit[t][l];
        back[t][l] = prev;
      } else {
        dp[t][l] = best_any + emit[t][l];
        back[t][l] = best_any_l;
      }
    }
  }

  int best = 0;
  for (int l = 1; l < label_count; ++l)
    if (dp[n - 1][l] > dp[n - 1][best]) best = l;
  path.assign(n, 0);
  path[n - 1] = best;
  for (int t = n - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
  return path;
}

}  // namespace detail

inline TurnLabels viterbi_decode(const TaggerModel& model, const Turn& turn) {
  std::vector<std::vector<double>> emit;
  emit.reserve(turn.tokens.size());
  for (std::size_t t = 0; t < turn.tokens.size(); ++t)
    emit.push_back(detail::emission_scores(model.weights, model.label_count(),
                                           token_features(turn, t)));
  std::vector<int> path = detail::viterbi(emit, model.label_count());
  TurnLabels out;
  out.reserve(path.size());
  for (int l : path) out.push_back(model.label(l));
  return out;
}

// Trains on every conversation that has a gold set for the task. The seed
// only drives epoch shuffling.
inline TaggerModel train_tagger(const std::vector<Conversation>& conversations,
                                const std::vector<AnnotationSet>& gold,
                                Task task, int epochs, std::uint64_t seed,
                                TaskFilter filter = TaskFilter::All,
                                const Ontology* ontology = nullptr) {
  if (epochs < 1) throw std::invalid_argument("train_tagger: epochs must be >= 1");
  if (filter != TaskFilter::All && !ontology)
    throw std::invalid_argument("train_tagger: task filter needs an ontology");

  std::map<std::string, const AnnotationSet*> gold_by_conv;
  for (const auto& a : gold) {
    if (a.task != task) continue;
    if (!gold_by_conv.emplace(a.conversation_id, &a).second)
      throw std::invalid_argument("train_tagger: duplicate gold for " +
                                  a.conversation_id);
  }

  auto keep_span = [&](const LabeledSpan& s) {
    if (filter == TaskFilter::All) return true;
    TagKind kind = ontology->kind(s.tag);
    return filter == TaskFilter::EntitiesOnly ? kind == TagKind::Entity
                                              : kind == TagKind::Attribute;
  };

  struct TurnData {
    std::vector<TokenLabel> gold;
    std::vector<std::vector<std::string>> feats;
  };
  std::vector<std::vector<TurnData>> examples;
  std::set<std::string> tag_set;
  long long turn_count = 0;
  for (const auto& conv : conversations) {
    auto git = gold_by_conv.find(conv.id);
    if (git == gold_by_conv.end()) continue;
    std::vector<LabeledSpan> spans;
    for (const auto& s : git->second->spans)
      if (keep_span(s)) spans.push_back(s);
    for (const auto& s : spans) tag_set.insert(compose_tag(s.tag, s.status));

    ConversationLabels labels = encode_bio(spans, turn_lengths(conv), true);
    std::vector<TurnData> conv_data(conv.turns.size());
    for (std::size_t turn = 0; turn < conv.turns.size(); ++turn) {
      conv_data[turn].gold = labels[turn];
      conv_data[turn].feats.resize(conv.turns[turn].tokens.size());
      for (std::size_t t = 0; t < conv.turns[turn].tokens.size(); ++t)
        conv_data[turn].feats[t] = token_features(conv.turns[turn], t);
    }
    turn_count += static_cast<long long>(conv.turns.size());
    examples.push_back(std::move(conv_data));
  }
  if (examples.empty() || tag_set.empty())
    throw std::invalid_argument("train_tagger: empty training set");

  TaggerModel model;
  model.task = task;
  model.tags.assign(tag_set.begin(), tag_set.end());
  model.epochs = epochs;
  model.seed = seed;
  const int L = model.label_count();

  std::unordered_map<std::string, detail::AveragedRow> rows;
  auto row_of = [&](const std::string& f) -> detail::AveragedRow& {
    auto it = rows.find(f);
    if (it == rows.end()) it = rows.emplace(f, detail::AveragedRow(L)).first;
    return it->second;
  };

  Rng rng(seed);
  const long long total_steps = static_cast<long long>(epochs) * turn_count;
  long long step = 0;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t oi : order) {
      for (const TurnData& td : examples[oi]) {
        ++step;
        if (td.gold.empty()) continue;
        std::vector<std::vector<double>> emit;
        emit.reserve(td.gold.size());
        for (const auto& feats : td.feats)
          emit.push_back(detail::emission_scores(rows, L, feats));
        std::vector<int> pred = detail::viterbi(emit, L);
        for (std::size_t t = 0; t < td.gold.size(); ++t) {
          int gold_l = model.label_index(td.gold[t]);
          if (pred[t] == gold_l) continue;
          for (const auto& f : td.feats[t]) {
            detail::AveragedRow& row = row_of(f);
            row.update(gold_l, +1.0, step);
            row.update(pred[t], -1.0, step);
          }
        }
      }
    }
  }

  for (const auto& [f, row] : rows) {
    std::vector<double> avg(L, 0.0);
    bool any = false;
    for (int l = 0; l < L; ++l) {
      avg[l] = row.w[l] - row.u[l] / static_cast<double>(total_steps);
      any = any || avg[l] != 0.0;
    }
    if (any) model.weights.emplace(f, std::move(avg));
  }
  return model;
}

inline AnnotationSet predict(const TaggerModel& model,
                             const Conversation& conversation) {
  ConversationLabels labels;
  labels.reserve(conversation.turns.size());
  for (const auto& turn : conversation.turns)
    labels.push_back(viterbi_decode(model, turn));
  AnnotationSet out;
  out.conversation_id = conversation.id;
  out.labeler_id = "MODEL";
  out.task = model.task;
  out.spans = decode_bio(labels, true, "m");
  return out;
}

// ---- model file ----

inline void save_tagger(const std::string& path, const TaggerModel& model) {
  json weights = json::object();
  std::vector<std::string> feats;
  feats.reserve(model.weights.size());
  for (const auto& [f, row] : model.weights) feats.push_back(f);
  std::sort(feats.begin(), feats.end());
  for (const auto& f : feats) {
    const auto& row = model.weights.at(f);
    json jr = json::object();
    for (int l = 0; l < model.label_count(); ++l) {
      if (row[l] == 0.0) continue;
      TokenLabel lab = model.label(l);
      jr[std::string(to_string(lab.bio)) + " " + lab.tag] = row[l];
    }
    weights[f] = jr;
  }
  json j = {{"format", "dialanno-tagger"}, {"version", 1},
            {"task", to_string(model.task)}, {"epochs", model.epochs},
            {"seed", model.seed},           {"tags", model.tags},
            {"weights", weights}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

inline TaggerModel load_tagger(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError(path, 1, "invalid JSON");
  if (j.value("format", "") != "dialanno-tagger")
    throw std::runtime_error(path + ": not a tagger model file");
  TaggerModel model;
  model.task = task_from_string(j.at("task").get<std::string>());
  model.epochs = j.value("epochs", 0);
  model.seed = j.value("seed", std::uint64_t{0});
  model.tags = j.at("tags").get<std::vector<std::string>>();
  for (const auto& [f, jr] : j.at("weights").items()) {
    std::vector<double> row(model.label_count(), 0.0);
    for (const auto& [name, w] : jr.items()) {
      auto sp = name.find(' ');
      if (sp == std::string::npos)
        throw std::runtime_error(path + ": bad label name " + name);
      std::string bio = name.substr(0, sp);
      std::string tag = name.substr(sp + 1);
      TokenLabel lab{tag, bio == "B" ? Bio::B : bio == "I" ? Bio::I : Bio::O};
      row[model.label_index(lab)] = w.get<double>();
    }
    model.weights.emplace(f, std::move(row));
  }
  return model;
}

}  // namespace dialanno
