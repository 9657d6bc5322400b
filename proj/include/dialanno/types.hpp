// Core corpus types: conversations, labeled spans, annotation sets, and the
// per-token (tag, BIO) pair used by voting and scoring. All types are plain
// values, immutable by convention after load, and safe to share across
// threads.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dialanno {

enum class Speaker { DR, PT, OTHER };
enum class Task { Symptoms, Medications, Conditions };
enum class Bio { B, I, O };

inline const char* to_string(Speaker s) {
  switch (s) {
    case Speaker::DR: return "DR";
    case Speaker::PT: return "PT";
    default: return "OTHER";
  }
}

inline const char* to_string(Task t) {
  switch (t) {
    case Task::Symptoms: return "symptoms";
    case Task::Medications: return "medications";
    default: return "conditions";
  }
}

inline const char* to_string(Bio b) {
  switch (b) {
    case Bio::B: return "B";
    case Bio::I: return "I";
    default: return "O";
  }
}

inline Speaker speaker_from_string(const std::string& s) {
  if (s == "DR") return Speaker::DR;
  if (s == "PT") return Speaker::PT;
  if (s == "OTHER") return Speaker::OTHER;
  throw std::invalid_argument("unknown speaker: " + s);
}

inline Task task_from_string(const std::string& s) {
  if (s == "symptoms") return Task::Symptoms;
  if (s == "medications") return Task::Medications;
  if (s == "conditions") return Task::Conditions;
  throw std::invalid_argument("unknown task: " + s);
}

constexpr const Task kAllTasks[] = {Task::Symptoms, Task::Medications,
                                    Task::Conditions};

struct Turn {
  Speaker speaker = Speaker::OTHER;
  std::vector<std::string> tokens;

  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += ' ';
      out += tokens[i];
    }
    return out;
  }
};

struct Conversation {
  std::string id;
  std::vector<Turn> turns;
};

// One labeled token range inside a single turn. [start, end) is half-open
// over token indices, so end - start is the span length.
struct LabeledSpan {
  std::string span_id;
  int turn_index = 0;
  int start = 0;
  int end = 0;
  std::string tag;
  std::optional<std::string> status;

  int length() const { return end - start; }

  bool same_extent(const LabeledSpan& o) const {
    return turn_index == o.turn_index && start == o.start && end == o.end;
  }

  bool same_label(const LabeledSpan& o) const {
    return tag == o.tag && status == o.status;
  }
};

// One labeler's complete annotation of one conversation for one task.
struct AnnotationSet {
  std::string conversation_id;
  std::string labeler_id;
  Task task = Task::Symptoms;
  std::vector<LabeledSpan> spans;
  std::vector<std::pair<std::string, std::string>> relations;

  const LabeledSpan* find_span(const std::string& span_id) const {
    for (const auto& s : spans)
      if (s.span_id == span_id) return &s;
    return nullptr;
  }
};

// (Y1, Y2) for one token: the task tag and its BIO mark. tag == "O" iff
// bio == O.
struct TokenLabel {
  std::string tag = "O";
  Bio bio = Bio::O;

  bool operator==(const TokenLabel&) const = default;
};

using TurnLabels = std::vector<TokenLabel>;
using ConversationLabels = std::vector<TurnLabels>;  // one entry per turn

inline constexpr char kStatusSeparator = '|';

// "GI:Nausea" + Experienced -> "GI:Nausea|Experienced".
inline std::string compose_tag(const std::string& tag,
                               const std::optional<std::string>& status) {
  if (!status) return tag;
  return tag + kStatusSeparator + *status;
}

inline std::pair<std::string, std::optional<std::string>> decompose_tag(
    const std::string& composed) {
  auto pos = composed.find(kStatusSeparator);
  if (pos == std::string::npos) return {composed, std::nullopt};
  return {composed.substr(0, pos), composed.substr(pos + 1)};
}

inline std::string composed_span_tag(const LabeledSpan& span,
                                     bool with_status) {
  return with_status ? compose_tag(span.tag, span.status) : span.tag;
}

}  // namespace dialanno
