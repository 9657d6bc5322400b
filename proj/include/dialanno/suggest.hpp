// Dictionary-based mention suggestions: a local lexicon of surface forms
// stands in for an external knowledge-base lookup, so suggestion runs are
// reproducible offline. Suggestions are assistance for labeling the training
// split only; when a split manifest is in play, asking for suggestions on a
// dev or test conversation is refused outright.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialanno/io.hpp"
#include "dialanno/ontology.hpp"
#include "dialanno/rng.hpp"
#include "dialanno/score.hpp"
#include "dialanno/types.hpp"
#include "dialanno/util.hpp"

namespace dialanno {

class Lexicon {
 public:
  void add(const std::string& surface, const std::string& tag) {
    std::vector<std::string> tokens = split_ws(lowercase(surface));
    if (tokens.empty())
      throw std::invalid_argument("lexicon: empty surface form");
    entries_[tokens] = tag;
    max_len_ = std::max(max_len_, tokens.size());
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t max_length() const { return max_len_; }

  // Longest entry matching the token window starting at pos; nullopt if none.
  std::optional<std::pair<std::size_t, std::string>> longest_match(
      const std::vector<std::string>& lowered_tokens, std::size_t pos) const {
    std::size_t limit = std::min(max_len_, lowered_tokens.size() - pos);
    for (std::size_t len = limit; len >= 1; --len) {
      std::vector<std::string> window(lowered_tokens.begin() + pos,
                                      lowered_tokens.begin() + pos + len);
      auto it = entries_.find(window);
      if (it != entries_.end()) return std::make_pair(len, it->second);
    }
    return std::nullopt;
  }

  const std::map<std::vector<std::string>, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::vector<std::string>, std::string> entries_;
  std::size_t max_len_ = 0;
};

inline Lexicon load_lexicon(const std::string& path) {
  Lexicon lex;
  detail::for_each_record(path, [&](std::size_t line_no, const json& j) {
    try {
      lex.add(j.at("surface").get<std::string>(), j.at("tag").get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError(path, line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(path, line_no, e.what());
    }
  });
  return lex;
}

inline void save_lexicon(const std::string& path, const Lexicon& lexicon) {
  std::vector<std::string> lines;
  for (const auto& [tokens, tag] : lexicon.entries())
    lines.push_back(json{{"surface", join(tokens, " ")}, {"tag", tag}}.dump());
  detail::write_lines(path, lines);
}

// Every entity alias in the ontology, mapped to its tag.
inline Lexicon lexicon_from_ontology(const Ontology& ontology) {
  Lexicon lex;
  for (const auto& e : ontology.entities)
    for (const auto& alias : e.aliases) lex.add(alias, e.tag);
  return lex;
}

// Greedy longest-match scan per turn, case-insensitive, non-overlapping.
// Hits become optional annotations with the lexicon tag and no status.
inline std::vector<LabeledSpan> suggest(const Conversation& conversation,
                                        const Lexicon& lexicon,
                                        const std::string& id_prefix = "g") {
  std::vector<LabeledSpan> out;
  int next_id = 0;
  for (std::size_t turn = 0; turn < conversation.turns.size(); ++turn) {
    std::vector<std::string> lowered;
    lowered.reserve(conversation.turns[turn].tokens.size());
    for (const auto& tok : conversation.turns[turn].tokens)
      lowered.push_back(lowercase(tok));
    std::size_t pos = 0;
    while (pos < lowered.size()) {
      auto hit = lexicon.longest_match(lowered, pos);
      if (!hit) {
        ++pos;
        continue;
      }
      LabeledSpan s;
      s.span_id = id_prefix + std::to_string(next_id++);
      s.turn_index = static_cast<int>(turn);
      s.start = static_cast<int>(pos);
      s.end = static_cast<int>(pos + hit->first);
      s.tag = hit->second;
      out.push_back(std::move(s));
      pos += hit->first;
    }
  }
  return out;
}

// Split-guarded variant: with a manifest present, only training conversations
// may be suggested on, which keeps assistance out of evaluation references.
inline std::vector<LabeledSpan> suggest_guarded(
    const Conversation& conversation, const Lexicon& lexicon,
    const std::optional<Split>& split, const std::string& id_prefix = "g") {
  if (split && !split->in_train(conversation.id))
    throw std::invalid_argument("suggest: conversation " + conversation.id +
                                " is not in the train split");
  return suggest(conversation, lexicon, id_prefix);
}

struct RecallExperimentResult {
  double recall_without = 0;
  double recall_with = 0;
  double delta = 0;
  long long gold_spans = 0;
  long long recoverable = 0;  // gold spans the suggester can surface
  double expected_delta = 0;  // closed form: p * q * recoverable / gold_spans
  double delta_stddev = 0;    // binomial sd of the measured delta
};

// Simulates the labeling-assistance study: a labeler who misses each gold
// span with probability p, against the same labeler shown suggestions and
// accepting, with probability q, each one that lands exactly on a span they
// missed. Recall is relaxed span recall against gold, pooled over the corpus.
inline RecallExperimentResult recall_experiment(
    const std::vector<AnnotationSet>& gold,
    const std::vector<Conversation>& conversations, const Lexicon& lexicon,
    double miss_rate, double accept_rate, std::uint64_t seed) {
  if (miss_rate < 0 || miss_rate > 1 || accept_rate < 0 || accept_rate > 1)
    throw std::invalid_argument("recall_experiment: rates must be in [0,1]");
  auto idx = index_conversations(conversations);
  Rng root(seed);

  SpanScoreAccumulator without_acc, with_acc;
  RecallExperimentResult result;

  for (std::size_t gi = 0; gi < gold.size(); ++gi) {
    const AnnotationSet& g = gold[gi];
    auto cit = idx.find(g.conversation_id);
    if (cit == idx.end())
      throw std::invalid_argument("recall_experiment: unknown conversation " +
                                  g.conversation_id);
    const Conversation& conv = *cit->second;

    std::set<std::pair<int, std::pair<int, int>>> suggested;
    for (const auto& s : suggest(conv, lexicon))
      suggested.insert({s.turn_index, {s.start, s.end}});

    Rng rng = root.derive(gi);
    AnnotationSet without = detail::empty_like(g, "SIM");
    AnnotationSet with = detail::empty_like(g, "SIM+SUGGEST");
    for (const auto& span : g.spans) {
      result.gold_spans += 1;
      bool recoverable =
          suggested.count({span.turn_index, {span.start, span.end}}) > 0;
      result.recoverable += recoverable;
      bool dropped = rng.bernoulli(miss_rate);
      if (!dropped) {
        without.spans.push_back(span);
        with.spans.push_back(span);
      } else if (recoverable && rng.bernoulli(accept_rate)) {
        with.spans.push_back(span);
      }
    }
    without_acc.merge(
        score_spans(g, without, conv, ScoreMode::Relaxed, LabelKey::TagPlusStatus));
    with_acc.merge(
        score_spans(g, with, conv, ScoreMode::Relaxed, LabelKey::TagPlusStatus));
  }

  result.recall_without =
      without_acc.finalize(ScoreMode::Relaxed, LabelKey::TagPlusStatus).overall.recall;
  result.recall_with =
      with_acc.finalize(ScoreMode::Relaxed, LabelKey::TagPlusStatus).overall.recall;
  result.delta = result.recall_with - result.recall_without;
  if (result.gold_spans > 0) {
    double pq = miss_rate * accept_rate;
    result.expected_delta =
        pq * static_cast<double>(result.recoverable) / result.gold_spans;
    result.delta_stddev =
        std::sqrt(static_cast<double>(result.recoverable) * pq * (1 - pq)) /
        static_cast<double>(result.gold_spans);
  }
  return result;
}

}  // namespace dialanno
