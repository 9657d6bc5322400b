// Builds a single voted reference from K labelers. Per token, the task tag
// is chosen by plurality; the BIO mark is then chosen to maximize the
// empirical transition probability P(bio | tag, previous tag), estimated
// from the annotation pool itself. Direct per-cell majority voting mishandles
// boundary disagreements (it drops tokens and leaves ties); the chain keeps
// the span intact.
#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dialanno/bio.hpp"
#include "dialanno/io.hpp"
#include "dialanno/types.hpp"

namespace dialanno {

// Counts of (previous tag, current tag, bio) over labeler sequences. The
// previous tag of a turn-initial token is the start symbol.
struct TransitionStats {
  static constexpr const char* kStart = "<s>";

  std::map<std::pair<std::string, std::string>, std::array<long long, 3>> counts;
  double alpha = 1.0;  // add-one smoothing so unseen contexts stay defined

  void add(const std::string& prev, const std::string& cur, Bio bio) {
    counts[{prev, cur}][static_cast<int>(bio)] += 1;
  }

  long long count(const std::string& prev, const std::string& cur, Bio bio) const {
    auto it = counts.find({prev, cur});
    return it == counts.end() ? 0 : it->second[static_cast<int>(bio)];
  }

  void merge(const TransitionStats& other) {
    for (const auto& [key, arr] : other.counts) {
      auto& mine = counts[key];
      for (int i = 0; i < 3; ++i) mine[i] += arr[i];
    }
  }

  void add_sequence(const ConversationLabels& labels) {
    for (const auto& turn : labels) {
      std::string prev = kStart;
      for (const auto& lab : turn) {
        add(prev, lab.tag, lab.bio);
        prev = lab.tag;
      }
    }
  }
};

// Accumulates transition counts from every labeler sequence in the pool,
// using status-composed tags.
inline TransitionStats estimate_transition_stats(
    const std::vector<AnnotationSet>& annotations,
    const std::vector<Conversation>& conversations, double alpha = 1.0) {
  auto idx = index_conversations(conversations);
  TransitionStats stats;
  stats.alpha = alpha;
  for (const auto& a : annotations) {
    auto it = idx.find(a.conversation_id);
    if (it == idx.end())
      throw std::invalid_argument("estimate_transition_stats: unknown conversation " +
                                  a.conversation_id);
    stats.add_sequence(encode_bio(a.spans, turn_lengths(*it->second), true));
  }
  return stats;
}

namespace detail {

inline void check_aligned(const std::vector<ConversationLabels>& per_labeler) {
  if (per_labeler.empty())
    throw std::invalid_argument("vote: need at least one labeler");
  for (const auto& labels : per_labeler) {
    if (labels.size() != per_labeler[0].size())
      throw std::invalid_argument("vote: labelers disagree on turn count");
    for (std::size_t turn = 0; turn < labels.size(); ++turn)
      if (labels[turn].size() != per_labeler[0][turn].size())
        throw std::invalid_argument("vote: labelers disagree on turn length");
  }
}

}  // namespace detail

// Step 1 of voting: the plurality tag at one token position. Ties prefer a
// non-O tag, then the lexicographically smallest.
inline std::string plurality_tag(const std::vector<std::string>& votes) {
  std::map<std::string, int> tally;
  for (const auto& v : votes) tally[v] += 1;
  int best = 0;
  for (const auto& [tag, n] : tally) best = std::max(best, n);
  std::string winner;
  bool have = false;
  for (const auto& [tag, n] : tally) {
    if (n != best) continue;
    if (!have) {
      winner = tag;
      have = true;
    } else if (winner == "O" && tag != "O") {
      winner = tag;  // prefer non-O; map order already gives lexicographic min
    }
  }
  return winner;
}

// Voted (tag, bio) sequence for one conversation from K aligned labeler
// sequences. The chain state resets to the start symbol at each turn
// boundary. When the smoothed B/I counts tie (or vanish with alpha = 0), a
// tag change starts a span and a repeat continues one.
inline ConversationLabels vote(const std::vector<ConversationLabels>& per_labeler,
                               const TransitionStats& stats) {
  detail::check_aligned(per_labeler);
  const std::size_t k = per_labeler.size();
  ConversationLabels out(per_labeler[0].size());
  for (std::size_t turn = 0; turn < out.size(); ++turn) {
    const std::size_t len = per_labeler[0][turn].size();
    out[turn].assign(len, TokenLabel{});
    std::string prev = TransitionStats::kStart;
    for (std::size_t t = 0; t < len; ++t) {
      std::vector<std::string> votes;
      votes.reserve(k);
      for (std::size_t l = 0; l < k; ++l)
        votes.push_back(per_labeler[l][turn][t].tag);
      const std::string tag = plurality_tag(votes);
      if (tag == "O") {
        out[turn][t] = {"O", Bio::O};
      } else {
        double b = stats.count(prev, tag, Bio::B) + stats.alpha;
        double i = stats.count(prev, tag, Bio::I) + stats.alpha;
        Bio bio;
        if (b > i)
          bio = Bio::B;
        else if (i > b)
          bio = Bio::I;
        else
          bio = (tag != prev) ? Bio::B : Bio::I;
        out[turn][t] = {tag, bio};
      }
      prev = tag;
    }
  }
  return out;
}

// Per-cell independent majority over the full (tag, bio) pair, for contrast
// with the chain method. Returns, per token, every pair tied at the maximum
// vote count (singleton = a clear winner).
inline std::vector<std::vector<std::vector<TokenLabel>>> naive_majority(
    const std::vector<ConversationLabels>& per_labeler) {
  detail::check_aligned(per_labeler);
  std::vector<std::vector<std::vector<TokenLabel>>> out(per_labeler[0].size());
  for (std::size_t turn = 0; turn < out.size(); ++turn) {
    const std::size_t len = per_labeler[0][turn].size();
    out[turn].resize(len);
    for (std::size_t t = 0; t < len; ++t) {
      std::map<std::pair<std::string, int>, int> tally;
      for (const auto& labels : per_labeler) {
        const TokenLabel& lab = labels[turn][t];
        tally[{lab.tag, static_cast<int>(lab.bio)}] += 1;
      }
      int best = 0;
      for (const auto& [key, n] : tally) best = std::max(best, n);
      for (const auto& [key, n] : tally)
        if (n == best)
          out[turn][t].push_back({key.first, static_cast<Bio>(key.second)});
    }
  }
  return out;
}

// Voted reference for one conversation and task. Relations are not voted:
// they pass through from the designated senior labeler, remapped onto voted
// spans by exact extent+label match (links whose endpoints did not survive
// the vote are dropped).
inline AnnotationSet build_voted_reference(
    const std::vector<AnnotationSet>& labeler_sets, const Conversation& conversation,
    const TransitionStats& stats,
    const std::optional<std::string>& senior_labeler = std::nullopt) {
  if (labeler_sets.empty())
    throw std::invalid_argument("build_voted_reference: no labelers");
  for (const auto& a : labeler_sets) {
    if (a.conversation_id != conversation.id)
      throw std::invalid_argument("build_voted_reference: conversation mismatch");
    if (a.task != labeler_sets[0].task)
      throw std::invalid_argument("build_voted_reference: task mismatch");
  }

  std::vector<const AnnotationSet*> ordered;
  for (const auto& a : labeler_sets) ordered.push_back(&a);
  std::sort(ordered.begin(), ordered.end(),
            [](const AnnotationSet* a, const AnnotationSet* b) {
              return a->labeler_id < b->labeler_id;
            });

  const std::vector<int> lengths = turn_lengths(conversation);
  std::vector<ConversationLabels> per_labeler;
  per_labeler.reserve(ordered.size());
  for (const AnnotationSet* a : ordered)
    per_labeler.push_back(encode_bio(a->spans, lengths, true));

  AnnotationSet voted;
  voted.conversation_id = conversation.id;
  voted.labeler_id = "VOTED";
  voted.task = labeler_sets[0].task;
  voted.spans = decode_bio(vote(per_labeler, stats), true, "v");

  // Falls back to the first labeler (by id) when the designated senior did
  // not annotate this conversation.
  const AnnotationSet* senior = ordered.front();
  if (senior_labeler)
    for (const AnnotationSet* a : ordered)
      if (a->labeler_id == *senior_labeler) senior = a;
  auto voted_match = [&](const LabeledSpan& s) -> const LabeledSpan* {
    for (const auto& v : voted.spans)
      if (v.same_extent(s) && v.same_label(s)) return &v;
    return nullptr;
  };
  for (const auto& rel : senior->relations) {
    const LabeledSpan* a = senior->find_span(rel.first);
    const LabeledSpan* b = senior->find_span(rel.second);
    if (!a || !b) continue;
    const LabeledSpan* va = voted_match(*a);
    const LabeledSpan* vb = voted_match(*b);
    if (va && vb && va != vb)
      voted.relations.emplace_back(va->span_id, vb->span_id);
  }
  return voted;
}

// Corpus-level driver: groups annotations by (task, conversation), estimates
// transition statistics per task from the whole pool, and votes every group.
inline std::vector<AnnotationSet> vote_corpus(
    const std::vector<AnnotationSet>& annotations,
    const std::vector<Conversation>& conversations,
    const std::optional<std::string>& senior_labeler = std::nullopt,
    double alpha = 1.0) {
  auto idx = index_conversations(conversations);
  std::map<Task, std::vector<AnnotationSet>> by_task;
  for (const auto& a : annotations) by_task[a.task].push_back(a);

  std::vector<AnnotationSet> out;
  for (auto& [task, task_sets] : by_task) {
    TransitionStats stats = estimate_transition_stats(task_sets, conversations, alpha);
    std::map<std::string, std::vector<AnnotationSet>> by_conv;
    for (auto& a : task_sets) by_conv[a.conversation_id].push_back(std::move(a));
    for (auto& [conv_id, group] : by_conv) {
      auto it = idx.find(conv_id);
      if (it == idx.end())
        throw std::invalid_argument("vote_corpus: unknown conversation " + conv_id);
      out.push_back(build_voted_reference(group, *it->second, stats, senior_labeler));
    }
  }
  return out;
}

}  // namespace dialanno
