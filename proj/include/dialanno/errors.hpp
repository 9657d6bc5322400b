// Aligns predictions against a reference into Deletion / Insertion /
// Substitution records, and manages the manual categorization that raters
// attach to each record (error cause and clinical relevance). Categories are
// data entered by people, never inferred here.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialanno/io.hpp"
#include "dialanno/types.hpp"
#include "dialanno/util.hpp"

namespace dialanno {

enum class ErrorType { Deletion, Insertion, Substitution };

enum class ErrorCause {
  AgreeWithModel,
  IncorrectSpan,
  AmbiguousTag,
  IrrelevantAttribute,
  FailToUseContext,
  NeedClinicalExpertise,
  BreakInConversationFlow,
  ClinicallyEquivalent,
  NoClearReason,
};

// Also known as ErrorImpact in parts of the guidelines; the field name here
// is clinical_relevance.
enum class ClinicalRelevance { Relevant, NotRelevant, NA };

inline const char* to_string(ErrorType t) {
  switch (t) {
    case ErrorType::Deletion: return "Deletion";
    case ErrorType::Insertion: return "Insertion";
    default: return "Substitution";
  }
}

inline const char* to_string(ErrorCause c) {
  switch (c) {
    case ErrorCause::AgreeWithModel: return "Agree with model";
    case ErrorCause::IncorrectSpan: return "Incorrect span";
    case ErrorCause::AmbiguousTag: return "Ambiguous tag";
    case ErrorCause::IrrelevantAttribute: return "Irrelevant attribute";
    case ErrorCause::FailToUseContext: return "Fail to use context";
    case ErrorCause::NeedClinicalExpertise: return "Need clinical expertise";
    case ErrorCause::BreakInConversationFlow: return "Break in conversation flow";
    case ErrorCause::ClinicallyEquivalent: return "Clinically equivalent";
    default: return "No clear reason";
  }
}

inline const char* to_string(ClinicalRelevance r) {
  switch (r) {
    case ClinicalRelevance::Relevant: return "Relevant";
    case ClinicalRelevance::NotRelevant: return "Not relevant";
    default: return "N/A";
  }
}

inline ErrorType error_type_from_string(const std::string& s) {
  if (s == "Deletion") return ErrorType::Deletion;
  if (s == "Insertion") return ErrorType::Insertion;
  if (s == "Substitution") return ErrorType::Substitution;
  throw std::invalid_argument("unknown error type: " + s);
}

inline ErrorCause error_cause_from_string(const std::string& s) {
  for (ErrorCause c :
       {ErrorCause::AgreeWithModel, ErrorCause::IncorrectSpan,
        ErrorCause::AmbiguousTag, ErrorCause::IrrelevantAttribute,
        ErrorCause::FailToUseContext, ErrorCause::NeedClinicalExpertise,
        ErrorCause::BreakInConversationFlow, ErrorCause::ClinicallyEquivalent,
        ErrorCause::NoClearReason})
    if (s == to_string(c)) return c;
  throw std::invalid_argument("unknown error cause: " + s);
}

inline ClinicalRelevance clinical_relevance_from_string(const std::string& s) {
  for (ClinicalRelevance r : {ClinicalRelevance::Relevant,
                              ClinicalRelevance::NotRelevant,
                              ClinicalRelevance::NA})
    if (s == to_string(r)) return r;
  throw std::invalid_argument("unknown clinical relevance: " + s);
}

struct AuditEntry {
  std::string rater_id;
  ErrorCause cause = ErrorCause::NoClearReason;
  ClinicalRelevance relevance = ClinicalRelevance::NA;
  std::string timestamp;
};

struct ErrorRecord {
  std::string record_id;
  std::string conversation_id;
  Task task = Task::Symptoms;
  ErrorType type = ErrorType::Deletion;
  std::optional<LabeledSpan> ref_span;   // Deletion and Substitution
  std::optional<LabeledSpan> pred_span;  // Insertion and Substitution
  std::string context;
  std::optional<ErrorCause> cause;
  std::optional<ClinicalRelevance> relevance;
  std::optional<std::string> rater_id;
  std::vector<AuditEntry> audit;
};

struct Alignment {
  std::vector<std::pair<LabeledSpan, LabeledSpan>> correct;  // (ref, pred)
  std::vector<ErrorRecord> records;
};

namespace detail {

inline int span_overlap(const LabeledSpan& a, const LabeledSpan& b) {
  if (a.turn_index != b.turn_index) return 0;
  return std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

inline std::string span_key(const std::optional<LabeledSpan>& s) {
  if (!s) return "-";
  return std::to_string(s->turn_index) + ":" + std::to_string(s->start) + ":" +
         std::to_string(s->end) + ":" + composed_span_tag(*s, true);
}

// Speaker-prefixed text of the span's turn plus one turn either side.
inline std::string turn_window(const Conversation& conv, int turn_index) {
  std::string out;
  for (int t = std::max(0, turn_index - 1);
       t <= std::min(static_cast<int>(conv.turns.size()) - 1, turn_index + 1);
       ++t) {
    if (!out.empty()) out += " / ";
    out += std::string(to_string(conv.turns[t].speaker)) + ": " +
           conv.turns[t].text();
  }
  return out;
}

}  // namespace detail

inline std::string error_record_id(const std::string& conversation_id, Task task,
                                   ErrorType type,
                                   const std::optional<LabeledSpan>& ref,
                                   const std::optional<LabeledSpan>& pred) {
  std::string key = conversation_id + "\x1f" + to_string(task) + "\x1f" +
                    to_string(type) + "\x1f" + detail::span_key(ref) + "\x1f" +
                    detail::span_key(pred);
  return hex64(fnv1a64(key));
}

// Greedy maximum-overlap matching between reference and predicted spans.
// A matched pair with the same composed tag is correct; with different tags
// it is a Substitution. Reference spans left unmatched are Deletions,
// predicted spans Insertions. Each span joins at most one pair; ties prefer
// the larger overlap, then the earlier pair.
inline Alignment align_errors(const AnnotationSet& reference,
                              const AnnotationSet& predicted,
                              const Conversation& conversation) {
  if (reference.conversation_id != predicted.conversation_id ||
      reference.task != predicted.task)
    throw std::invalid_argument("align_errors: annotations not comparable");

  struct Candidate {
    int overlap;
    std::size_t ri, pi;
  };
  std::vector<Candidate> candidates;
  for (std::size_t ri = 0; ri < reference.spans.size(); ++ri)
    for (std::size_t pi = 0; pi < predicted.spans.size(); ++pi) {
      int ov = detail::span_overlap(reference.spans[ri], predicted.spans[pi]);
      if (ov > 0) candidates.push_back({ov, ri, pi});
    }
  std::sort(candidates.begin(), candidates.end(),
            [&](const Candidate& a, const Candidate& b) {
              if (a.overlap != b.overlap) return a.overlap > b.overlap;
              const LabeledSpan& ra = reference.spans[a.ri];
              const LabeledSpan& rb = reference.spans[b.ri];
              if (ra.turn_index != rb.turn_index)
                return ra.turn_index < rb.turn_index;
              if (ra.start != rb.start) return ra.start < rb.start;
              const LabeledSpan& pa = predicted.spans[a.pi];
              const LabeledSpan& pb = predicted.spans[b.pi];
              if (pa.turn_index != pb.turn_index)
                return pa.turn_index < pb.turn_index;
              return pa.start < pb.start;
            });

  std::vector<bool> ref_used(reference.spans.size(), false);
  std::vector<bool> pred_used(predicted.spans.size(), false);
  Alignment out;

  auto make_record = [&](ErrorType type, const std::optional<LabeledSpan>& ref,
                         const std::optional<LabeledSpan>& pred) {
    ErrorRecord rec;
    rec.conversation_id = reference.conversation_id;
    rec.task = reference.task;
    rec.type = type;
    rec.ref_span = ref;
    rec.pred_span = pred;
    rec.record_id =
        error_record_id(rec.conversation_id, rec.task, type, ref, pred);
    int turn = ref ? ref->turn_index : pred->turn_index;
    rec.context = detail::turn_window(conversation, turn);
    return rec;
  };

  for (const auto& c : candidates) {
    if (ref_used[c.ri] || pred_used[c.pi]) continue;
    ref_used[c.ri] = true;
    pred_used[c.pi] = true;
    const LabeledSpan& r = reference.spans[c.ri];
    const LabeledSpan& p = predicted.spans[c.pi];
    if (composed_span_tag(r, true) == composed_span_tag(p, true))
      out.correct.emplace_back(r, p);
    else
      out.records.push_back(make_record(ErrorType::Substitution, r, p));
  }
  for (std::size_t ri = 0; ri < reference.spans.size(); ++ri)
    if (!ref_used[ri])
      out.records.push_back(
          make_record(ErrorType::Deletion, reference.spans[ri], std::nullopt));
  for (std::size_t pi = 0; pi < predicted.spans.size(); ++pi)
    if (!pred_used[pi])
      out.records.push_back(
          make_record(ErrorType::Insertion, std::nullopt, predicted.spans[pi]));

  std::sort(out.records.begin(), out.records.end(),
            [](const ErrorRecord& a, const ErrorRecord& b) {
              const LabeledSpan& sa = a.ref_span ? *a.ref_span : *a.pred_span;
              const LabeledSpan& sb = b.ref_span ? *b.ref_span : *b.pred_span;
              if (sa.turn_index != sb.turn_index)
                return sa.turn_index < sb.turn_index;
              if (sa.start != sb.start) return sa.start < sb.start;
              return a.record_id < b.record_id;
            });
  return out;
}

// Applies one rater's categorization. Earlier categorizations stay in the
// audit trail; the latest one wins in aggregates.
inline ErrorRecord& record_category(std::vector<ErrorRecord>& records,
                                    const std::string& record_id,
                                    ErrorCause cause, ClinicalRelevance relevance,
                                    const std::string& rater_id,
                                    const std::string& timestamp) {
  for (auto& rec : records) {
    if (rec.record_id != record_id) continue;
    rec.cause = cause;
    rec.relevance = relevance;
    rec.rater_id = rater_id;
    rec.audit.push_back({rater_id, cause, relevance, timestamp});
    return rec;
  }
  throw std::invalid_argument("record_category: unknown record " + record_id);
}

struct ErrorAggregate {
  std::map<ErrorType, long long> counts_by_type;
  std::map<ErrorCause, double> cause_proportions;
  std::map<ClinicalRelevance, double> relevance_proportions;
  long long categorized = 0;
  long long uncategorized = 0;
};

// Proportions are over categorized records only; uncategorized ones are
// counted separately.
inline ErrorAggregate aggregate_report(const std::vector<ErrorRecord>& records) {
  ErrorAggregate agg;
  std::map<ErrorCause, long long> cause_counts;
  std::map<ClinicalRelevance, long long> rel_counts;
  for (const auto& rec : records) {
    agg.counts_by_type[rec.type] += 1;
    if (rec.cause && rec.relevance) {
      agg.categorized += 1;
      cause_counts[*rec.cause] += 1;
      rel_counts[*rec.relevance] += 1;
    } else {
      agg.uncategorized += 1;
    }
  }
  if (agg.categorized > 0) {
    for (const auto& [c, n] : cause_counts)
      agg.cause_proportions[c] =
          static_cast<double>(n) / static_cast<double>(agg.categorized);
    for (const auto& [r, n] : rel_counts)
      agg.relevance_proportions[r] =
          static_cast<double>(n) / static_cast<double>(agg.categorized);
  }
  return agg;
}

// ---- record file (JSON lines) ----

inline json to_json(const LabeledSpan& s) {
  json j = {{"span_id", s.span_id}, {"turn", s.turn_index},
            {"start", s.start},     {"end", s.end},
            {"tag", s.tag}};
  if (s.status) j["status"] = *s.status;
  return j;
}

inline LabeledSpan span_from_json(const json& j) {
  LabeledSpan s;
  s.span_id = j.at("span_id").get<std::string>();
  s.turn_index = j.at("turn").get<int>();
  s.start = j.at("start").get<int>();
  s.end = j.at("end").get<int>();
  s.tag = j.at("tag").get<std::string>();
  if (j.contains("status") && !j.at("status").is_null())
    s.status = j.at("status").get<std::string>();
  return s;
}

inline json to_json(const ErrorRecord& rec) {
  json j = {{"record_id", rec.record_id},
            {"conversation_id", rec.conversation_id},
            {"task", to_string(rec.task)},
            {"error_type", to_string(rec.type)},
            {"context", rec.context}};
  if (rec.ref_span) j["ref_span"] = to_json(*rec.ref_span);
  if (rec.pred_span) j["pred_span"] = to_json(*rec.pred_span);
  if (rec.cause) j["error_cause"] = to_string(*rec.cause);
  if (rec.relevance) j["clinical_relevance"] = to_string(*rec.relevance);
  if (rec.rater_id) j["rater_id"] = *rec.rater_id;
  if (!rec.audit.empty()) {
    json audit = json::array();
    for (const auto& e : rec.audit)
      audit.push_back({{"rater_id", e.rater_id},
                       {"error_cause", to_string(e.cause)},
                       {"clinical_relevance", to_string(e.relevance)},
                       {"timestamp", e.timestamp}});
    j["audit"] = audit;
  }
  return j;
}

inline std::vector<ErrorRecord> load_error_records(const std::string& path) {
  std::vector<ErrorRecord> out;
  detail::for_each_record(path, [&](std::size_t line_no, const json& j) {
    try {
      ErrorRecord rec;
      rec.record_id = j.at("record_id").get<std::string>();
      rec.conversation_id = j.at("conversation_id").get<std::string>();
      rec.task = task_from_string(j.at("task").get<std::string>());
      rec.type = error_type_from_string(j.at("error_type").get<std::string>());
      rec.context = j.value("context", "");
      if (j.contains("ref_span")) rec.ref_span = span_from_json(j.at("ref_span"));
      if (j.contains("pred_span"))
        rec.pred_span = span_from_json(j.at("pred_span"));
      if (j.contains("error_cause"))
        rec.cause = error_cause_from_string(j.at("error_cause").get<std::string>());
      if (j.contains("clinical_relevance"))
        rec.relevance = clinical_relevance_from_string(
            j.at("clinical_relevance").get<std::string>());
      if (j.contains("rater_id")) rec.rater_id = j.at("rater_id").get<std::string>();
      if (j.contains("audit")) {
        for (const auto& ja : j.at("audit")) {
          AuditEntry e;
          e.rater_id = ja.at("rater_id").get<std::string>();
          e.cause = error_cause_from_string(ja.at("error_cause").get<std::string>());
          e.relevance = clinical_relevance_from_string(
              ja.at("clinical_relevance").get<std::string>());
          e.timestamp = ja.value("timestamp", "");
          rec.audit.push_back(std::move(e));
        }
      }
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ParseError(path, line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(path, line_no, e.what());
    }
  });
  return out;
}

inline void save_error_records(const std::string& path,
                               const std::vector<ErrorRecord>& records) {
  std::vector<std::string> lines;
  for (const auto& rec : records) lines.push_back(to_json(rec).dump());
  detail::write_lines(path, lines);
}

}  // namespace dialanno
