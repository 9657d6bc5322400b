// Relaxed and strict weighted F-scores over spans, conversation-level set
// scoring for closed-class tasks, and relation scoring.
//
// Relaxed: a ground-truth span scores the fraction of its tokens whose
// predicted per-token tag equals the span's tag (and symmetrically for
// predicted spans against the reference). Overall recall/precision are
// unweighted means over spans. Strict replaces the fraction with the product
// of the per-token indicators, so a span scores 1 only when every one of its
// tokens matches. Note the product form still credits a predicted span fully
// contained in a larger same-tag reference span on the precision side; that
// is intentional, not exact-boundary matching.
//
// Zero-denominator conventions: no reference spans -> recall 1; no predicted
// spans -> precision 1; F1 from the standard formula (1 when both sides are
// empty, 0 when P + R = 0).
#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialanno/io.hpp"
#include "dialanno/types.hpp"

namespace dialanno {

enum class ScoreMode { Relaxed, Strict };
enum class LabelKey { Tag, TagPlusStatus };
enum class Granularity { Span, ConversationSet, Relation };

inline const char* to_string(ScoreMode m) {
  return m == ScoreMode::Relaxed ? "relaxed" : "strict";
}
inline const char* to_string(LabelKey k) {
  return k == LabelKey::Tag ? "tag" : "tag_plus_status";
}
inline const char* to_string(Granularity g) {
  switch (g) {
    case Granularity::Span: return "span";
    case Granularity::ConversationSet: return "conversation_set";
    default: return "relation";
  }
}

struct ScoreLine {
  double recall = 1.0;
  double precision = 1.0;
  double f1 = 1.0;
  long long n = 0;  // reference units
  long long m = 0;  // predicted units
};

struct ScoreReport {
  ScoreMode mode = ScoreMode::Relaxed;
  LabelKey key = LabelKey::TagPlusStatus;
  Granularity granularity = Granularity::Span;
  std::map<std::string, ScoreLine> per_label;
  ScoreLine overall;
};

inline json to_json(const ScoreReport& r) {
  auto line = [](const ScoreLine& l) {
    return json{{"recall", l.recall}, {"precision", l.precision},
                {"f1", l.f1},         {"n", l.n},
                {"m", l.m}};
  };
  json per_label = json::object();
  for (const auto& [tag, l] : r.per_label) per_label[tag] = line(l);
  return {{"mode", to_string(r.mode)},
          {"key", to_string(r.key)},
          {"granularity", to_string(r.granularity)},
          {"per_label", per_label},
          {"overall", line(r.overall)}};
}

namespace detail {

inline double f1_of(double p, double r) {
  return (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

struct Cell {
  double r_sum = 0;
  long long n = 0;
  double p_sum = 0;
  long long m = 0;

  void merge(const Cell& o) {
    r_sum += o.r_sum;
    n += o.n;
    p_sum += o.p_sum;
    m += o.m;
  }

  ScoreLine finalize() const {
    ScoreLine l;
    l.n = n;
    l.m = m;
    l.recall = n ? r_sum / static_cast<double>(n) : 1.0;
    l.precision = m ? p_sum / static_cast<double>(m) : 1.0;
    l.f1 = f1_of(l.precision, l.recall);
    return l;
  }
};

}  // namespace detail

// Per-token composed tag for every position of the conversation; "O" outside
// spans. Overlapping spans are an error naming the colliding ids.
inline std::vector<std::vector<std::string>> project_tokens(
    const AnnotationSet& annotation, const Conversation& conversation,
    LabelKey key = LabelKey::TagPlusStatus) {
  std::vector<std::vector<std::string>> out(conversation.turns.size());
  std::vector<std::vector<const LabeledSpan*>> owner(conversation.turns.size());
  for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
    out[i].assign(conversation.turns[i].tokens.size(), "O");
    owner[i].assign(conversation.turns[i].tokens.size(), nullptr);
  }
  for (const auto& span : annotation.spans) {
    if (span.turn_index < 0 ||
        span.turn_index >= static_cast<int>(out.size()) || span.start < 0 ||
        span.end > static_cast<int>(out[span.turn_index].size()))
      throw std::invalid_argument("project_tokens: span " + span.span_id +
                                  " out of range");
    const std::string tag =
        composed_span_tag(span, key == LabelKey::TagPlusStatus);
    for (int t = span.start; t < span.end; ++t) {
      if (const LabeledSpan* prev = owner[span.turn_index][t])
        throw std::runtime_error("project_tokens: overlapping spans " +
                                 prev->span_id + " and " + span.span_id);
      owner[span.turn_index][t] = &span;
      out[span.turn_index][t] = tag;
    }
  }
  return out;
}

// Accumulates one conversation's span scores; mergeable across conversations.
struct SpanScoreAccumulator {
  std::map<std::string, detail::Cell> per_label;
  detail::Cell overall;

  void merge(const SpanScoreAccumulator& o) {
    overall.merge(o.overall);
    for (const auto& [tag, cell] : o.per_label) per_label[tag].merge(cell);
  }

  ScoreReport finalize(ScoreMode mode, LabelKey key) const {
    ScoreReport r;
    r.mode = mode;
    r.key = key;
    r.granularity = Granularity::Span;
    r.overall = overall.finalize();
    for (const auto& [tag, cell] : per_label) r.per_label[tag] = cell.finalize();
    return r;
  }
};

inline SpanScoreAccumulator score_spans(const AnnotationSet& reference,
                                        const AnnotationSet& predicted,
                                        const Conversation& conversation,
                                        ScoreMode mode,
                                        LabelKey key = LabelKey::TagPlusStatus) {
  if (reference.task != predicted.task)
    throw std::invalid_argument("score_spans: task mismatch");
  if (reference.conversation_id != predicted.conversation_id ||
      reference.conversation_id != conversation.id)
    throw std::invalid_argument("score_spans: conversation mismatch");

  const auto ref_tags = project_tokens(reference, conversation, key);
  const auto pred_tags = project_tokens(predicted, conversation, key);

  SpanScoreAccumulator acc;
  auto span_score = [&](const LabeledSpan& span,
                        const std::vector<std::vector<std::string>>& other) {
    const std::string tag = composed_span_tag(span, key == LabelKey::TagPlusStatus);
    long long matched = 0;
    for (int t = span.start; t < span.end; ++t)
      if (other[span.turn_index][t] == tag) ++matched;
    if (mode == ScoreMode::Strict)
      return matched == span.length() ? 1.0 : 0.0;
    return static_cast<double>(matched) / static_cast<double>(span.length());
  };

  for (const auto& span : reference.spans) {
    const std::string tag = composed_span_tag(span, key == LabelKey::TagPlusStatus);
    double v = span_score(span, pred_tags);
    acc.overall.r_sum += v;
    acc.overall.n += 1;
    acc.per_label[tag].r_sum += v;
    acc.per_label[tag].n += 1;
  }
  for (const auto& span : predicted.spans) {
    const std::string tag = composed_span_tag(span, key == LabelKey::TagPlusStatus);
    double v = span_score(span, ref_tags);
    acc.overall.p_sum += v;
    acc.overall.m += 1;
    acc.per_label[tag].p_sum += v;
    acc.per_label[tag].m += 1;
  }
  return acc;
}

// Conversation-level set scoring for closed-class tasks: each side reduces to
// its set of distinct keys, and P/R/F1 are macro-averaged over conversations.
// Repeats of the same key (a symptom restated with the same status) do not
// count twice.
struct SetScoreAccumulator {
  double r_sum = 0, p_sum = 0, f_sum = 0;
  long long conversations = 0;
  long long n = 0, m = 0;
  std::map<std::string, detail::Cell> per_label;

  void merge(const SetScoreAccumulator& o) {
    r_sum += o.r_sum;
    p_sum += o.p_sum;
    f_sum += o.f_sum;
    conversations += o.conversations;
    n += o.n;
    m += o.m;
    for (const auto& [tag, cell] : o.per_label) per_label[tag].merge(cell);
  }

  ScoreReport finalize(LabelKey key) const {
    ScoreReport r;
    r.mode = ScoreMode::Relaxed;
    r.key = key;
    r.granularity = Granularity::ConversationSet;
    r.overall.n = n;
    r.overall.m = m;
    r.overall.recall = conversations ? r_sum / conversations : 1.0;
    r.overall.precision = conversations ? p_sum / conversations : 1.0;
    r.overall.f1 = conversations ? f_sum / conversations : 1.0;
    for (const auto& [tag, cell] : per_label) r.per_label[tag] = cell.finalize();
    return r;
  }
};

inline SetScoreAccumulator score_conversation_set(const AnnotationSet& reference,
                                                  const AnnotationSet& predicted,
                                                  LabelKey key) {
  if (reference.task == Task::Medications)
    throw std::invalid_argument(
        "score_conversation_set: needs a closed-class task");
  if (reference.task != predicted.task)
    throw std::invalid_argument("score_conversation_set: task mismatch");

  auto keys_of = [&](const AnnotationSet& a) {
    std::set<std::string> keys;
    for (const auto& s : a.spans)
      keys.insert(composed_span_tag(s, key == LabelKey::TagPlusStatus));
    return keys;
  };
  const auto ref_keys = keys_of(reference);
  const auto pred_keys = keys_of(predicted);

  long long tp = 0;
  SetScoreAccumulator acc;
  for (const auto& k : ref_keys) {
    bool hit = pred_keys.count(k) > 0;
    tp += hit;
    acc.per_label[k].n += 1;
    acc.per_label[k].r_sum += hit ? 1.0 : 0.0;
  }
  for (const auto& k : pred_keys) {
    acc.per_label[k].m += 1;
    acc.per_label[k].p_sum += ref_keys.count(k) ? 1.0 : 0.0;
  }
  double r = ref_keys.empty() ? 1.0 : static_cast<double>(tp) / ref_keys.size();
  double p = pred_keys.empty() ? 1.0 : static_cast<double>(tp) / pred_keys.size();
  acc.r_sum = r;
  acc.p_sum = p;
  acc.f_sum = detail::f1_of(p, r);
  acc.conversations = 1;
  acc.n = static_cast<long long>(ref_keys.size());
  acc.m = static_cast<long long>(pred_keys.size());
  return acc;
}

// Relation scoring: a predicted link is correct iff both endpoint spans
// strictly match (same extent, tag, and status) reference spans that are
// themselves linked.
struct RelationScoreAccumulator {
  long long covered = 0;  // reference relations matched by some prediction
  long long correct = 0;  // predicted relations matching some reference link
  long long n = 0, m = 0;

  void merge(const RelationScoreAccumulator& o) {
    covered += o.covered;
    correct += o.correct;
    n += o.n;
    m += o.m;
  }

  ScoreReport finalize() const {
    ScoreReport r;
    r.granularity = Granularity::Relation;
    r.overall.n = n;
    r.overall.m = m;
    r.overall.recall = n ? static_cast<double>(covered) / n : 1.0;
    r.overall.precision = m ? static_cast<double>(correct) / m : 1.0;
    r.overall.f1 = detail::f1_of(r.overall.precision, r.overall.recall);
    return r;
  }
};

inline RelationScoreAccumulator score_relations(const AnnotationSet& reference,
                                                const AnnotationSet& predicted) {
  if (reference.task != predicted.task)
    throw std::invalid_argument("score_relations: task mismatch");

  auto strict_match = [](const LabeledSpan& a, const LabeledSpan& b) {
    return a.same_extent(b) && a.same_label(b);
  };
  auto link_matches = [&](const AnnotationSet& in_a,
                          const std::pair<std::string, std::string>& ra,
                          const AnnotationSet& in_b,
                          const std::pair<std::string, std::string>& rb) {
    const LabeledSpan* a1 = in_a.find_span(ra.first);
    const LabeledSpan* a2 = in_a.find_span(ra.second);
    const LabeledSpan* b1 = in_b.find_span(rb.first);
    const LabeledSpan* b2 = in_b.find_span(rb.second);
    if (!a1 || !a2 || !b1 || !b2) return false;
    return (strict_match(*a1, *b1) && strict_match(*a2, *b2)) ||
           (strict_match(*a1, *b2) && strict_match(*a2, *b1));
  };

  RelationScoreAccumulator acc;
  acc.n = static_cast<long long>(reference.relations.size());
  acc.m = static_cast<long long>(predicted.relations.size());
  for (const auto& rr : reference.relations) {
    for (const auto& pr : predicted.relations) {
      if (link_matches(reference, rr, predicted, pr)) {
        acc.covered += 1;
        break;
      }
    }
  }
  for (const auto& pr : predicted.relations) {
    for (const auto& rr : reference.relations) {
      if (link_matches(predicted, pr, reference, rr)) {
        acc.correct += 1;
        break;
      }
    }
  }
  return acc;
}

namespace detail {

inline AnnotationSet empty_like(const AnnotationSet& a, const std::string& labeler) {
  AnnotationSet e;
  e.conversation_id = a.conversation_id;
  e.labeler_id = labeler;
  e.task = a.task;
  return e;
}

// Pairs reference and predicted sets per (task, conversation); a side with no
// record for a conversation scores against an empty annotation.
template <typename Fn>
void for_each_pair(const std::vector<AnnotationSet>& refs,
                   const std::vector<AnnotationSet>& preds, Fn&& fn) {
  std::map<std::pair<Task, std::string>, std::pair<const AnnotationSet*, const AnnotationSet*>>
      pairs;
  for (const auto& r : refs) {
    auto& slot = pairs[{r.task, r.conversation_id}];
    if (slot.first)
      throw std::invalid_argument("duplicate reference annotation for " +
                                  r.conversation_id);
    slot.first = &r;
  }
  for (const auto& p : preds) {
    auto& slot = pairs[{p.task, p.conversation_id}];
    if (slot.second)
      throw std::invalid_argument("duplicate predicted annotation for " +
                                  p.conversation_id);
    slot.second = &p;
  }
  for (const auto& [key, slot] : pairs) {
    AnnotationSet empty;
    empty.conversation_id = key.second;
    empty.task = key.first;
    const AnnotationSet* r = slot.first;
    const AnnotationSet* p = slot.second;
    if (!r) {
      empty.labeler_id = "EMPTY_REF";
      fn(empty, *p);
    } else if (!p) {
      empty.labeler_id = "EMPTY_PRED";
      fn(*r, empty);
    } else {
      fn(*r, *p);
    }
  }
}

}  // namespace detail

// Corpus-level reports, one per task present in either side. Span reports
// pool all spans; set reports macro-average per conversation.
inline std::map<Task, ScoreReport> score_corpus(
    const std::vector<AnnotationSet>& refs, const std::vector<AnnotationSet>& preds,
    const std::vector<Conversation>& conversations, Granularity granularity,
    ScoreMode mode, LabelKey key) {
  auto idx = index_conversations(conversations);
  std::map<Task, SpanScoreAccumulator> span_acc;
  std::map<Task, SetScoreAccumulator> set_acc;
  std::map<Task, RelationScoreAccumulator> rel_acc;

  detail::for_each_pair(refs, preds, [&](const AnnotationSet& r, const AnnotationSet& p) {
    switch (granularity) {
      case Granularity::Span: {
        auto it = idx.find(r.conversation_id);
        if (it == idx.end())
          throw std::invalid_argument("score_corpus: unknown conversation " +
                                      r.conversation_id);
        span_acc[r.task].merge(score_spans(r, p, *it->second, mode, key));
        break;
      }
      case Granularity::ConversationSet:
        set_acc[r.task].merge(score_conversation_set(r, p, key));
        break;
      case Granularity::Relation:
        rel_acc[r.task].merge(score_relations(r, p));
        break;
    }
  });

  std::map<Task, ScoreReport> out;
  for (const auto& [task, acc] : span_acc) out[task] = acc.finalize(mode, key);
  for (const auto& [task, acc] : set_acc) out[task] = acc.finalize(key);
  for (const auto& [task, acc] : rel_acc) out[task] = acc.finalize();
  return out;
}

}  // namespace dialanno
