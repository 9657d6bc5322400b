// Inter-labeler agreement. Kappa is computed at the token unit over
// status-composed tags with O included in the category distribution; a
// strict span-level agreement rate and a relation-link agreement rate are
// reported alongside. Also the QA scoring used to pick reviewers: relaxed F1
// against a reference set, averaged per conversation.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dialanno/ontology.hpp"
#include "dialanno/score.hpp"
#include "dialanno/types.hpp"

namespace dialanno {

enum class AgreementUnit { Token };
enum class AgreementCategory { Entities, Attributes, Relations };

inline const char* to_string(AgreementCategory c) {
  switch (c) {
    case AgreementCategory::Entities: return "entities";
    case AgreementCategory::Attributes: return "attributes";
    default: return "relations";
  }
}

struct KappaResult {
  double kappa = 0;
  double p_observed = 0;
  double p_chance = 0;
  long long units = 0;
};

// Cohen's kappa over two aligned category streams. When chance agreement is
// total (both raters constant and identical), kappa is 1 if they agree and 0
// otherwise.
inline KappaResult kappa_from_streams(const std::vector<std::string>& a,
                                      const std::vector<std::string>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("kappa_from_streams: length mismatch");
  KappaResult r;
  r.units = static_cast<long long>(a.size());
  if (a.empty()) {
    r.kappa = 1;
    r.p_observed = 1;
    r.p_chance = 1;
    return r;
  }
  std::map<std::string, long long> ca, cb;
  long long agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    agree += a[i] == b[i];
  }
  const double total = static_cast<double>(a.size());
  r.p_observed = agree / total;
  for (const auto& [cat, na] : ca) {
    auto it = cb.find(cat);
    if (it != cb.end()) r.p_chance += (na / total) * (it->second / total);
  }
  if (r.p_chance >= 1.0)
    r.kappa = r.p_observed >= 1.0 ? 1.0 : 0.0;
  else
    r.kappa = (r.p_observed - r.p_chance) / (1.0 - r.p_chance);
  return r;
}

namespace detail {

// Flattens the conversation's composed per-token tags, keeping only spans of
// the requested kind (all spans when kind is unset).
inline std::vector<std::string> token_stream(
    const AnnotationSet& a, const Conversation& conversation,
    const std::optional<TagKind>& kind, const Ontology* ontology) {
  AnnotationSet filtered = a;
  if (kind) {
    filtered.spans.clear();
    for (const auto& s : a.spans)
      if (ontology && ontology->kind(s.tag) == *kind) filtered.spans.push_back(s);
  }
  auto per_turn = project_tokens(filtered, conversation, LabelKey::TagPlusStatus);
  std::vector<std::string> out;
  for (auto& turn : per_turn)
    for (auto& tag : turn) out.push_back(std::move(tag));
  return out;
}

}  // namespace detail

inline KappaResult pairwise_kappa(const AnnotationSet& a, const AnnotationSet& b,
                                  const Conversation& conversation,
                                  AgreementUnit = AgreementUnit::Token) {
  if (a.conversation_id != b.conversation_id || a.task != b.task)
    throw std::invalid_argument("pairwise_kappa: annotations not comparable");
  return kappa_from_streams(
      detail::token_stream(a, conversation, std::nullopt, nullptr),
      detail::token_stream(b, conversation, std::nullopt, nullptr));
}

namespace detail {

// (exact matches, max(|a|, |b|)) for one conversation pair.
inline std::pair<long long, long long> strict_match_counts(
    const AnnotationSet& a, const AnnotationSet& b) {
  std::vector<bool> used(b.spans.size(), false);
  long long matched = 0;
  for (const auto& sa : a.spans) {
    for (std::size_t j = 0; j < b.spans.size(); ++j) {
      if (used[j]) continue;
      if (sa.same_extent(b.spans[j]) && sa.same_label(b.spans[j])) {
        used[j] = true;
        ++matched;
        break;
      }
    }
  }
  return {matched,
          static_cast<long long>(std::max(a.spans.size(), b.spans.size()))};
}

}  // namespace detail

// Share of strictly matched spans: |exact matches| / max(|a|, |b|).
inline double strict_span_agreement(const AnnotationSet& a, const AnnotationSet& b) {
  auto [matched, denom] = detail::strict_match_counts(a, b);
  return denom ? static_cast<double>(matched) / static_cast<double>(denom) : 1.0;
}

struct AgreementReport {
  // category -> (labeler_a, labeler_b) -> result
  std::map<AgreementCategory,
           std::map<std::pair<std::string, std::string>, KappaResult>>
      per_pair;
  // unset when a category never had comparable material
  std::map<AgreementCategory, std::optional<double>> mean_kappa;
  // exact-extent-and-label match rate, reported alongside kappa (not
  // chance-corrected)
  std::map<std::pair<std::string, std::string>, double> strict_span_rate;
  std::optional<double> mean_strict_span_rate;
};

namespace detail {

// Relation agreement for one labeler pair in one conversation: over all
// pairs of strictly matched spans, the fraction linked identically by both
// labelers. Returns (agreements, comparable pairs).
inline std::pair<long long, long long> relation_agreement(
    const AnnotationSet& a, const AnnotationSet& b) {
  std::vector<std::pair<const LabeledSpan*, const LabeledSpan*>> matched;
  std::vector<bool> used(b.spans.size(), false);
  for (const auto& sa : a.spans) {
    for (std::size_t j = 0; j < b.spans.size(); ++j) {
      if (used[j]) continue;
      if (sa.same_extent(b.spans[j]) && sa.same_label(b.spans[j])) {
        used[j] = true;
        matched.emplace_back(&sa, &b.spans[j]);
        break;
      }
    }
  }
  auto linked = [](const AnnotationSet& set, const std::string& x,
                   const std::string& y) {
    for (const auto& r : set.relations)
      if ((r.first == x && r.second == y) || (r.first == y && r.second == x))
        return true;
    return false;
  };
  long long agree = 0, total = 0;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    for (std::size_t j = i + 1; j < matched.size(); ++j) {
      bool la = linked(a, matched[i].first->span_id, matched[j].first->span_id);
      bool lb = linked(b, matched[i].second->span_id, matched[j].second->span_id);
      agree += la == lb;
      ++total;
    }
  }
  return {agree, total};
}

}  // namespace detail

// Mean pairwise agreement per category over a conversation set, pooling each
// labeler pair's tokens across the conversations they share.
inline AgreementReport agreement_matrix(
    const std::vector<AnnotationSet>& annotations,
    const std::vector<Conversation>& conversations, const Ontology& ontology) {
  auto idx = index_conversations(conversations);
  std::map<std::string, std::vector<const AnnotationSet*>> by_conv;
  std::set<std::string> labelers;
  for (const auto& a : annotations) {
    if (a.task != ontology.task) continue;
    by_conv[a.conversation_id].push_back(&a);
    labelers.insert(a.labeler_id);
  }

  AgreementReport report;
  std::vector<std::string> ids(labelers.begin(), labelers.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      std::vector<std::string> ent_a, ent_b, attr_a, attr_b;
      long long rel_agree = 0, rel_total = 0;
      long long strict_matched = 0, strict_denom = 0;
      bool has_ent = false, has_attr = false;
      for (const auto& [conv_id, sets] : by_conv) {
        const AnnotationSet* a = nullptr;
        const AnnotationSet* b = nullptr;
        for (const AnnotationSet* s : sets) {
          if (s->labeler_id == ids[i]) a = s;
          if (s->labeler_id == ids[j]) b = s;
        }
        if (!a || !b) continue;
        auto cit = idx.find(conv_id);
        if (cit == idx.end())
          throw std::invalid_argument("agreement_matrix: unknown conversation " +
                                      conv_id);
        for (const AnnotationSet* s : {a, b}) {
          for (const auto& span : s->spans) {
            TagKind kind = ontology.kind(span.tag);
            has_ent = has_ent || kind == TagKind::Entity;
            has_attr = has_attr || kind == TagKind::Attribute;
          }
        }
        auto append = [](std::vector<std::string>& dst, std::vector<std::string> src) {
          for (auto& s : src) dst.push_back(std::move(s));
        };
        append(ent_a, detail::token_stream(*a, *cit->second, TagKind::Entity, &ontology));
        append(ent_b, detail::token_stream(*b, *cit->second, TagKind::Entity, &ontology));
        append(attr_a, detail::token_stream(*a, *cit->second, TagKind::Attribute, &ontology));
        append(attr_b, detail::token_stream(*b, *cit->second, TagKind::Attribute, &ontology));
        auto [agree, total] = detail::relation_agreement(*a, *b);
        rel_agree += agree;
        rel_total += total;
        auto [matched, denom] = detail::strict_match_counts(*a, *b);
        strict_matched += matched;
        strict_denom += denom;
      }
      if (ent_a.empty()) continue;  // pair shares no conversations
      auto pair_key = std::make_pair(ids[i], ids[j]);
      report.strict_span_rate[pair_key] =
          strict_denom ? static_cast<double>(strict_matched) /
                             static_cast<double>(strict_denom)
                       : 1.0;
      if (has_ent)
        report.per_pair[AgreementCategory::Entities][pair_key] =
            kappa_from_streams(ent_a, ent_b);
      if (has_attr)
        report.per_pair[AgreementCategory::Attributes][pair_key] =
            kappa_from_streams(attr_a, attr_b);
      if (rel_total > 0) {
        KappaResult rel;
        rel.kappa = static_cast<double>(rel_agree) / static_cast<double>(rel_total);
        rel.p_observed = rel.kappa;
        rel.units = rel_total;
        report.per_pair[AgreementCategory::Relations][pair_key] = rel;
      }
    }
  }

  for (auto cat : {AgreementCategory::Entities, AgreementCategory::Attributes,
                   AgreementCategory::Relations}) {
    auto it = report.per_pair.find(cat);
    if (it == report.per_pair.end() || it->second.empty()) {
      report.mean_kappa[cat] = std::nullopt;
      continue;
    }
    double sum = 0;
    for (const auto& [pair, r] : it->second) sum += r.kappa;
    report.mean_kappa[cat] = sum / static_cast<double>(it->second.size());
  }
  if (!report.strict_span_rate.empty()) {
    double sum = 0;
    for (const auto& [pair, rate] : report.strict_span_rate) sum += rate;
    report.mean_strict_span_rate =
        sum / static_cast<double>(report.strict_span_rate.size());
  }
  return report;
}

// One-vs-rest token-level kappa per entity tag, averaged over labeler pairs.
// Feeds ontology pruning; tags no labeler ever used get 0.
inline std::map<std::string, double> per_entity_tag_kappas(
    const std::vector<AnnotationSet>& annotations,
    const std::vector<Conversation>& conversations, const Ontology& ontology) {
  auto idx = index_conversations(conversations);
  std::map<std::string, std::vector<const AnnotationSet*>> by_conv;
  std::set<std::string> labelers;
  for (const auto& a : annotations) {
    if (a.task != ontology.task) continue;
    by_conv[a.conversation_id].push_back(&a);
    labelers.insert(a.labeler_id);
  }
  std::vector<std::string> ids(labelers.begin(), labelers.end());

  std::map<std::string, double> out;
  for (const auto& e : ontology.entities) out[e.tag] = 0.0;

  std::map<std::string, std::pair<double, int>> sums;  // tag -> (kappa sum, pairs)
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      std::vector<std::string> sa, sb;
      for (const auto& [conv_id, sets] : by_conv) {
        const AnnotationSet* a = nullptr;
        const AnnotationSet* b = nullptr;
        for (const AnnotationSet* s : sets) {
          if (s->labeler_id == ids[i]) a = s;
          if (s->labeler_id == ids[j]) b = s;
        }
        if (!a || !b) continue;
        auto cit = idx.find(conv_id);
        if (cit == idx.end()) continue;
        AnnotationSet pa = *a, pb = *b;
        for (auto& s : pa.spans) s.status.reset();
        for (auto& s : pb.spans) s.status.reset();
        auto ta = detail::token_stream(pa, *cit->second, std::nullopt, nullptr);
        auto tb = detail::token_stream(pb, *cit->second, std::nullopt, nullptr);
        for (auto& t : ta) sa.push_back(std::move(t));
        for (auto& t : tb) sb.push_back(std::move(t));
      }
      if (sa.empty()) continue;
      std::set<std::string> present(sa.begin(), sa.end());
      present.insert(sb.begin(), sb.end());
      for (const auto& e : ontology.entities) {
        if (!present.count(e.tag)) continue;
        std::vector<std::string> ba(sa.size()), bb(sb.size());
        for (std::size_t t = 0; t < sa.size(); ++t) {
          ba[t] = sa[t] == e.tag ? "1" : "0";
          bb[t] = sb[t] == e.tag ? "1" : "0";
        }
        auto r = kappa_from_streams(ba, bb);
        auto& slot = sums[e.tag];
        slot.first += r.kappa;
        slot.second += 1;
      }
    }
  }
  for (const auto& [tag, slot] : sums)
    if (slot.second > 0) out[tag] = slot.first / slot.second;
  return out;
}

// Relaxed F1 of a labeler against the reference, averaged over the labeler's
// conversations. Every labeled conversation must have a reference.
inline double qa_score(const std::vector<AnnotationSet>& labeler_sets,
                       const std::vector<AnnotationSet>& reference_sets,
                       const std::vector<Conversation>& conversations) {
  if (labeler_sets.empty())
    throw std::invalid_argument("qa_score: labeler has no annotations");
  auto idx = index_conversations(conversations);
  double sum = 0;
  for (const auto& a : labeler_sets) {
    const AnnotationSet* ref = nullptr;
    for (const auto& r : reference_sets)
      if (r.conversation_id == a.conversation_id && r.task == a.task) ref = &r;
    if (!ref)
      throw std::invalid_argument("qa_score: no reference for conversation " +
                                  a.conversation_id);
    auto cit = idx.find(a.conversation_id);
    if (cit == idx.end())
      throw std::invalid_argument("qa_score: unknown conversation " +
                                  a.conversation_id);
    sum += score_spans(*ref, a, *cit->second, ScoreMode::Relaxed,
                       LabelKey::TagPlusStatus)
               .finalize(ScoreMode::Relaxed, LabelKey::TagPlusStatus)
               .overall.f1;
  }
  return sum / static_cast<double>(labeler_sets.size());
}

// Top-k labelers by score; ties at the cutoff go to the lexicographically
// smaller id. Deterministic.
inline std::vector<std::string> select_reviewers(
    const std::map<std::string, double>& scores, std::size_t k) {
  if (k > scores.size())
    throw std::invalid_argument("select_reviewers: k exceeds labeler count");
  std::vector<std::pair<std::string, double>> order(scores.begin(), scores.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(order[i].first);
  return out;
}

}  // namespace dialanno
