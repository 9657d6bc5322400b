#include <gtest/gtest.h>

#include <algorithm>

#include "dialanno/adjudicate.hpp"
#include "dialanno/rng.hpp"
#include "dialanno/synth.hpp"

using namespace dialanno;

namespace {

// The three-labeler boundary-disagreement case over "The pain medication":
//   L1: Drug_B Drug_I O
//   L2: O      Drug_B Drug_I
//   L3: O      O      Drug_B
Conversation pain_medication_conversation() {
  Conversation conv;
  conv.id = "c1";
  conv.turns.push_back({Speaker::PT, {"The", "pain", "medication"}});
  return conv;
}

std::vector<AnnotationSet> pain_medication_labelers() {
  auto make = [](const std::string& labeler, int start, int end) {
    AnnotationSet a;
    a.conversation_id = "c1";
    a.labeler_id = labeler;
    a.task = Task::Medications;
    a.spans.push_back({"s1", 0, start, end, "Drug", std::nullopt});
    return a;
  };
  return {make("L1", 0, 2), make("L2", 1, 3), make("L3", 2, 3)};
}

TEST(TransitionStats, HandCountedFromThreeLabelers) {
  auto conv = pain_medication_conversation();
  auto stats = estimate_transition_stats(pain_medication_labelers(), {conv});
  // Hand count of the 9 cells:
  //   L1: (<s>,Drug,B) (Drug,Drug,I) (Drug,O,O)
  //   L2: (<s>,O,O)    (O,Drug,B)    (Drug,Drug,I)
  //   L3: (<s>,O,O)    (O,O,O)       (O,Drug,B)
  EXPECT_EQ(stats.count("Drug", "Drug", Bio::I), 2);
  EXPECT_EQ(stats.count("O", "Drug", Bio::B), 2);
  EXPECT_EQ(stats.count(TransitionStats::kStart, "Drug", Bio::B), 1);
  EXPECT_EQ(stats.count(TransitionStats::kStart, "O", Bio::O), 2);
  EXPECT_EQ(stats.count("O", "O", Bio::O), 1);
  EXPECT_EQ(stats.count("Drug", "O", Bio::O), 1);
  EXPECT_EQ(stats.count("O", "Drug", Bio::I), 0);
}

TEST(TransitionStats, EmptyAndSingleSpan) {
  auto conv = pain_medication_conversation();
  auto stats = estimate_transition_stats({}, {conv});
  EXPECT_TRUE(stats.counts.empty());

  AnnotationSet one;
  one.conversation_id = "c1";
  one.labeler_id = "L1";
  one.task = Task::Medications;
  one.spans.push_back({"s1", 0, 0, 3, "Drug", std::nullopt});
  stats = estimate_transition_stats({one}, {conv});
  EXPECT_EQ(stats.count(TransitionStats::kStart, "Drug", Bio::B), 1);
  EXPECT_EQ(stats.count("Drug", "Drug", Bio::I), 2);  // span_len - 1
}

TEST(Vote, ReproducesThePaperedBoundaryExample) {
  auto conv = pain_medication_conversation();
  auto labelers = pain_medication_labelers();
  auto stats = estimate_transition_stats(labelers, {conv});

  std::vector<ConversationLabels> per_labeler;
  for (const auto& a : labelers)
    per_labeler.push_back(encode_bio(a.spans, {3}, true));

  ConversationLabels voted = vote(per_labeler, stats);
  ASSERT_EQ(voted.size(), 1u);
  ASSERT_EQ(voted[0].size(), 3u);
  EXPECT_EQ(voted[0][0], (TokenLabel{"O", Bio::O}));
  EXPECT_EQ(voted[0][1], (TokenLabel{"Drug", Bio::B}));
  EXPECT_EQ(voted[0][2], (TokenLabel{"Drug", Bio::I}));
}

TEST(Vote, NaiveMajorityDropsTheSpanAndTies) {
  // The defect that motivates the chain: per-cell majority keeps O at token 0
  // (2 of 3 votes) and leaves three-way ties at tokens 1 and 2, so it cannot
  // produce the adjudicated span deterministically.
  auto labelers = pain_medication_labelers();
  std::vector<ConversationLabels> per_labeler;
  for (const auto& a : labelers)
    per_labeler.push_back(encode_bio(a.spans, {3}, true));

  auto winners = naive_majority(per_labeler);
  ASSERT_EQ(winners[0][0].size(), 1u);
  EXPECT_EQ(winners[0][0][0], (TokenLabel{"O", Bio::O}));
  EXPECT_EQ(winners[0][1].size(), 3u);  // Drug_B, Drug_I, O all tied
  EXPECT_EQ(winners[0][2].size(), 3u);
}

TEST(Vote, UnanimityPreserved) {
  auto conv = pain_medication_conversation();
  AnnotationSet a;
  a.conversation_id = "c1";
  a.labeler_id = "L1";
  a.task = Task::Medications;
  a.spans.push_back({"s1", 0, 1, 3, "Drug", std::nullopt});
  AnnotationSet b = a;
  b.labeler_id = "L2";
  AnnotationSet c = a;
  c.labeler_id = "L3";

  auto stats = estimate_transition_stats({a, b, c}, {conv});
  std::vector<ConversationLabels> per_labeler(3, encode_bio(a.spans, {3}, true));
  ConversationLabels voted = vote(per_labeler, stats);
  EXPECT_EQ(voted, per_labeler[0]);
}

TEST(Vote, SingleLabelerIsIdentity) {
  auto conv = pain_medication_conversation();
  auto labelers = pain_medication_labelers();
  auto stats = estimate_transition_stats(labelers, {conv});
  auto encoded = encode_bio(labelers[0].spans, {3}, true);
  EXPECT_EQ(vote({encoded}, stats), encoded);
}

TEST(Vote, PermutationInvariant) {
  auto conv = pain_medication_conversation();
  auto labelers = pain_medication_labelers();
  auto stats = estimate_transition_stats(labelers, {conv});

  std::vector<ConversationLabels> per_labeler;
  for (const auto& a : labelers)
    per_labeler.push_back(encode_bio(a.spans, {3}, true));

  ConversationLabels expected = vote(per_labeler, stats);
  std::vector<std::size_t> order = {0, 1, 2};
  std::sort(order.begin(), order.end());
  do {
    std::vector<ConversationLabels> shuffled;
    for (std::size_t i : order) shuffled.push_back(per_labeler[i]);
    EXPECT_EQ(vote(shuffled, stats), expected);
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(Vote, ShapeMismatchThrows) {
  auto conv = pain_medication_conversation();
  auto labelers = pain_medication_labelers();
  auto stats = estimate_transition_stats(labelers, {conv});
  auto good = encode_bio(labelers[0].spans, {3}, true);
  auto bad = encode_bio({}, {2}, true);
  EXPECT_THROW(vote({good, bad}, stats), std::invalid_argument);
  EXPECT_THROW(vote({}, stats), std::invalid_argument);
}

TEST(VotedReference, BoundaryExampleYieldsOneSpan) {
  auto conv = pain_medication_conversation();
  auto labelers = pain_medication_labelers();
  auto stats = estimate_transition_stats(labelers, {conv});

  AnnotationSet voted = build_voted_reference(labelers, conv, stats);
  EXPECT_EQ(voted.labeler_id, "VOTED");
  ASSERT_EQ(voted.spans.size(), 1u);
  EXPECT_EQ(voted.spans[0].turn_index, 0);
  EXPECT_EQ(voted.spans[0].start, 1);
  EXPECT_EQ(voted.spans[0].end, 3);
  EXPECT_EQ(voted.spans[0].tag, "Drug");
}

TEST(VotedReference, DisjointSingletonsVoteToNothing) {
  Conversation conv;
  conv.id = "c1";
  conv.turns.push_back({Speaker::PT, {"a", "b", "c"}});
  std::vector<AnnotationSet> labelers;
  for (int i = 0; i < 3; ++i) {
    AnnotationSet a;
    a.conversation_id = "c1";
    a.labeler_id = "L" + std::to_string(i + 1);
    a.task = Task::Medications;
    a.spans.push_back({"s1", 0, i, i + 1, "Drug", std::nullopt});
    labelers.push_back(a);
  }
  auto stats = estimate_transition_stats(labelers, {conv});
  AnnotationSet voted = build_voted_reference(labelers, conv, stats);
  EXPECT_TRUE(voted.spans.empty());
}

TEST(VotedReference, TwoOfThreeAgreeSpanSurvives) {
  Conversation conv;
  conv.id = "c1";
  conv.turns.push_back({Speaker::PT, {"a", "b", "c", "d"}});
  auto make = [](const std::string& labeler, int start, int end) {
    AnnotationSet a;
    a.conversation_id = "c1";
    a.labeler_id = labeler;
    a.task = Task::Medications;
    a.spans.push_back({"s1", 0, start, end, "Drug", std::nullopt});
    return a;
  };
  std::vector<AnnotationSet> labelers = {make("L1", 1, 3), make("L2", 1, 3),
                                         make("L3", 0, 1)};
  auto stats = estimate_transition_stats(labelers, {conv});
  AnnotationSet voted = build_voted_reference(labelers, conv, stats);
  ASSERT_EQ(voted.spans.size(), 1u);
  EXPECT_EQ(voted.spans[0].start, 1);
  EXPECT_EQ(voted.spans[0].end, 3);
}

TEST(VotedReference, RelationsPassThroughFromSenior) {
  Conversation conv;
  conv.id = "c1";
  conv.turns.push_back(
      {Speaker::PT, {"tylenol", "one", "pill", "every", "day"}});
  auto make = [](const std::string& labeler) {
    AnnotationSet a;
    a.conversation_id = "c1";
    a.labeler_id = labeler;
    a.task = Task::Medications;
    a.spans.push_back({"d", 0, 0, 1, "Drug", std::nullopt});
    a.spans.push_back({"f", 0, 3, 5, "Property:Frequency", std::nullopt});
    a.relations.push_back({"d", "f"});
    return a;
  };
  std::vector<AnnotationSet> labelers = {make("L1"), make("L2"), make("L3")};
  auto stats = estimate_transition_stats(labelers, {conv});
  AnnotationSet voted = build_voted_reference(labelers, conv, stats, "L2");
  ASSERT_EQ(voted.spans.size(), 2u);
  ASSERT_EQ(voted.relations.size(), 1u);
  const LabeledSpan* x = voted.find_span(voted.relations[0].first);
  const LabeledSpan* y = voted.find_span(voted.relations[0].second);
  ASSERT_TRUE(x && y);
  EXPECT_NE(x->tag, y->tag);
}

TEST(VotedReference, StatusVotesWithTheTag) {
  Conversation conv;
  conv.id = "c1";
  conv.turns.push_back({Speaker::PT, {"queasy"}});
  auto make = [](const std::string& labeler, const std::string& status) {
    AnnotationSet a;
    a.conversation_id = "c1";
    a.labeler_id = labeler;
    a.task = Task::Symptoms;
    a.spans.push_back({"s1", 0, 0, 1, "GI:Nausea", status});
    return a;
  };
  std::vector<AnnotationSet> labelers = {make("L1", "Experienced"),
                                         make("L2", "Experienced"),
                                         make("L3", "Not Experienced")};
  auto stats = estimate_transition_stats(labelers, {conv});
  AnnotationSet voted = build_voted_reference(labelers, conv, stats);
  ASSERT_EQ(voted.spans.size(), 1u);
  EXPECT_EQ(voted.spans[0].tag, "GI:Nausea");
  EXPECT_EQ(voted.spans[0].status, std::optional<std::string>("Experienced"));
}

}  // namespace
