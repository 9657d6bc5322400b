#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dialanno/rng.hpp"
#include "dialanno/score.hpp"

using namespace dialanno;

namespace {

LabeledSpan span(const std::string& id, int turn, int start, int end,
                 const std::string& tag,
                 std::optional<std::string> status = std::nullopt) {
  return {id, turn, start, end, tag, std::move(status)};
}

Conversation conversation(const std::vector<int>& lengths) {
  Conversation conv;
  conv.id = "c1";
  for (int len : lengths) {
    Turn t;
    t.speaker = Speaker::PT;
    for (int i = 0; i < len; ++i) t.tokens.push_back("t" + std::to_string(i));
    conv.turns.push_back(std::move(t));
  }
  return conv;
}

AnnotationSet annotation(std::vector<LabeledSpan> spans,
                         const std::string& labeler = "L",
                         Task task = Task::Symptoms) {
  AnnotationSet a;
  a.conversation_id = "c1";
  a.labeler_id = labeler;
  a.task = task;
  a.spans = std::move(spans);
  return a;
}

// ---- independent oracle: explicit per-token arrays and plain loops ----

struct OracleReport {
  std::map<std::string, ScoreLine> per_label;
  ScoreLine overall;
};

std::vector<std::vector<std::string>> oracle_project(
    const AnnotationSet& a, const std::vector<int>& lengths, bool with_status) {
  std::vector<std::vector<std::string>> tags;
  for (int len : lengths) tags.push_back(std::vector<std::string>(len, "O"));
  for (const auto& s : a.spans) {
    std::string tag = s.tag;
    if (with_status && s.status) tag += "|" + *s.status;
    for (int t = s.start; t < s.end; ++t) tags[s.turn_index][t] = tag;
  }
  return tags;
}

OracleReport oracle_score(const AnnotationSet& ref, const AnnotationSet& pred,
                          const std::vector<int>& lengths, bool strict,
                          bool with_status) {
  auto ref_tags = oracle_project(ref, lengths, with_status);
  auto pred_tags = oracle_project(pred, lengths, with_status);

  struct Sums {
    double r = 0, p = 0;
    long long n = 0, m = 0;
  };
  std::map<std::string, Sums> per_label;
  Sums overall;

  for (const auto& s : ref.spans) {
    std::string tag = s.tag;
    if (with_status && s.status) tag += "|" + *s.status;
    double value;
    if (strict) {
      value = 1.0;
      for (int t = s.start; t < s.end; ++t)
        value = value * (pred_tags[s.turn_index][t] == tag ? 1.0 : 0.0);
    } else {
      double hits = 0;
      for (int t = s.start; t < s.end; ++t)
        if (pred_tags[s.turn_index][t] == tag) hits += 1;
      value = hits / (s.end - s.start);
    }
    per_label[tag].r += value;
    per_label[tag].n += 1;
    overall.r += value;
    overall.n += 1;
  }
  for (const auto& s : pred.spans) {
    std::string tag = s.tag;
    if (with_status && s.status) tag += "|" + *s.status;
    double value;
    if (strict) {
      value = 1.0;
      for (int t = s.start; t < s.end; ++t)
        value = value * (ref_tags[s.turn_index][t] == tag ? 1.0 : 0.0);
    } else {
      double hits = 0;
      for (int t = s.start; t < s.end; ++t)
        if (ref_tags[s.turn_index][t] == tag) hits += 1;
      value = hits / (s.end - s.start);
    }
    per_label[tag].p += value;
    per_label[tag].m += 1;
    overall.p += value;
    overall.m += 1;
  }

  auto finish = [](const Sums& s) {
    ScoreLine l;
    l.n = s.n;
    l.m = s.m;
    l.recall = s.n ? s.r / s.n : 1.0;
    l.precision = s.m ? s.p / s.m : 1.0;
    l.f1 = (l.precision + l.recall) > 0
               ? 2 * l.precision * l.recall / (l.precision + l.recall)
               : 0.0;
    return l;
  };
  OracleReport rep;
  rep.overall = finish(overall);
  for (const auto& [tag, s] : per_label) rep.per_label[tag] = finish(s);
  return rep;
}

// ---- hand-worked examples ----

TEST(ScoreSpans, PartialOverlapHandExample) {
  // reference: "upper abdomen" (2 tokens); prediction covers only "abdomen".
  auto conv = conversation({4});
  auto ref = annotation({span("r1", 0, 1, 3, "Property:Location")});
  auto pred = annotation({span("p1", 0, 2, 3, "Property:Location")}, "M");

  auto relaxed = score_spans(ref, pred, conv, ScoreMode::Relaxed)
                     .finalize(ScoreMode::Relaxed, LabelKey::TagPlusStatus);
  EXPECT_DOUBLE_EQ(relaxed.overall.recall, 0.5);
  EXPECT_DOUBLE_EQ(relaxed.overall.precision, 1.0);

  auto strict = score_spans(ref, pred, conv, ScoreMode::Strict)
                    .finalize(ScoreMode::Strict, LabelKey::TagPlusStatus);
  EXPECT_DOUBLE_EQ(strict.overall.recall, 0.0);
  // The contained prediction still gets full precision credit under the
  // product form; this is the stated construction, not a bug.
  EXPECT_DOUBLE_EQ(strict.overall.precision, 1.0);
}

TEST(ScoreSpans, IdentityIsPerfect) {
  auto conv = conversation({5, 3});
  auto ref = annotation({span("r1", 0, 0, 2, "GI:Nausea", "Experienced"),
                         span("r2", 1, 1, 3, "Property:Duration")});
  for (ScoreMode mode : {ScoreMode::Relaxed, ScoreMode::Strict}) {
    auto rep = score_spans(ref, ref, conv, mode).finalize(mode, LabelKey::TagPlusStatus);
    EXPECT_DOUBLE_EQ(rep.overall.recall, 1.0);
    EXPECT_DOUBLE_EQ(rep.overall.precision, 1.0);
    EXPECT_DOUBLE_EQ(rep.overall.f1, 1.0);
  }
}

TEST(ScoreSpans, ZeroPredictionsConvention) {
  auto conv = conversation({4});
  auto ref = annotation({span("r1", 0, 0, 2, "Const:Fever", "Experienced")});
  auto pred = annotation({}, "M");
  auto rep = score_spans(ref, pred, conv, ScoreMode::Relaxed)
                 .finalize(ScoreMode::Relaxed, LabelKey::TagPlusStatus);
  EXPECT_DOUBLE_EQ(rep.overall.recall, 0.0);
  EXPECT_DOUBLE_EQ(rep.overall.precision, 1.0);  // m = 0
  EXPECT_DOUBLE_EQ(rep.overall.f1, 0.0);

  auto empty_both = score_spans(annotation({}), annotation({}, "M"), conv,
                                ScoreMode::Relaxed)
                        .finalize(ScoreMode::Relaxed, LabelKey::TagPlusStatus);
  EXPECT_DOUBLE_EQ(empty_both.overall.f1, 1.0);
}

TEST(ScoreSpans, KeyControlsStatusMatching) {
  auto conv = conversation({2});
  auto ref = annotation({span("r1", 0, 0, 2, "GI:Nausea", "Experienced")});
  auto pred = annotation({span("p1", 0, 0, 2, "GI:Nausea", "Not Experienced")}, "M");
  auto with_status = score_spans(ref, pred, conv, ScoreMode::Relaxed,
                                 LabelKey::TagPlusStatus)
                         .finalize(ScoreMode::Relaxed, LabelKey::TagPlusStatus);
  EXPECT_DOUBLE_EQ(with_status.overall.f1, 0.0);
  auto bare = score_spans(ref, pred, conv, ScoreMode::Relaxed, LabelKey::Tag)
                  .finalize(ScoreMode::Relaxed, LabelKey::Tag);
  EXPECT_DOUBLE_EQ(bare.overall.f1, 1.0);
}

TEST(ProjectTokens, BasicAndErrors) {
  auto conv = conversation({4});
  auto proj = project_tokens(annotation({span("s1", 0, 1, 3, "Drug")}), conv,
                             LabelKey::Tag);
  EXPECT_EQ(proj[0], (std::vector<std::string>{"O", "Drug", "Drug", "O"}));

  EXPECT_TRUE(project_tokens(annotation({}), conv)[0] ==
              std::vector<std::string>(4, "O"));

  // adjacent spans do not merge
  auto adj = project_tokens(
      annotation({span("a", 0, 0, 2, "Drug"), span("b", 0, 2, 4, "Drug")}), conv,
      LabelKey::Tag);
  EXPECT_EQ(adj[0], (std::vector<std::string>{"Drug", "Drug", "Drug", "Drug"}));

  EXPECT_THROW(project_tokens(annotation({span("a", 0, 0, 2, "Drug"),
                                          span("b", 0, 1, 3, "Drug")}),
                              conv),
               std::runtime_error);
}

TEST(ScoreSpans, TaskMismatchThrows) {
  auto conv = conversation({2});
  auto ref = annotation({}, "L", Task::Symptoms);
  auto pred = annotation({}, "M", Task::Medications);
  EXPECT_THROW(score_spans(ref, pred, conv, ScoreMode::Relaxed),
               std::invalid_argument);
}

// ---- conversation-set scoring ----

TEST(ConversationSet, HandSetArithmetic) {
  auto ref = annotation({span("r1", 0, 0, 1, "GI:Nausea", "Experienced"),
                         span("r2", 0, 2, 3, "Const:Fever", "Experienced")});
  auto pred = annotation({span("p1", 0, 0, 1, "GI:Nausea", "Experienced")}, "M");
  auto rep = score_conversation_set(ref, pred, LabelKey::TagPlusStatus)
                 .finalize(LabelKey::TagPlusStatus);
  EXPECT_DOUBLE_EQ(rep.overall.recall, 0.5);
  EXPECT_DOUBLE_EQ(rep.overall.precision, 1.0);
  EXPECT_NEAR(rep.overall.f1, 2.0 / 3.0, 1e-12);
}

TEST(ConversationSet, DuplicatesDoNotCount) {
  // The same symptom mentioned twice with the same status reduces to one key.
  auto ref = annotation({span("r1", 0, 0, 1, "GI:Nausea", "Experienced"),
                         span("r2", 0, 2, 3, "GI:Nausea", "Experienced")});
  auto pred = annotation({span("p1", 0, 0, 1, "GI:Nausea", "Experienced")}, "M");
  auto rep = score_conversation_set(ref, pred, LabelKey::TagPlusStatus)
                 .finalize(LabelKey::TagPlusStatus);
  EXPECT_DOUBLE_EQ(rep.overall.recall, 1.0);
  EXPECT_DOUBLE_EQ(rep.overall.precision, 1.0);
  EXPECT_DOUBLE_EQ(rep.overall.f1, 1.0);
}

TEST(ConversationSet, EmptyBothIsPerfectAndMedicationsRejected) {
  auto rep = score_conversation_set(annotation({}), annotation({}, "M"),
                                    LabelKey::TagPlusStatus)
                 .finalize(LabelKey::TagPlusStatus);
  EXPECT_DOUBLE_EQ(rep.overall.f1, 1.0);

  auto meds_ref = annotation({}, "L", Task::Medications);
  auto meds_pred = annotation({}, "M", Task::Medications);
  EXPECT_THROW(score_conversation_set(meds_ref, meds_pred, LabelKey::Tag),
               std::invalid_argument);
}

TEST(ConversationSet, MacroAveragesOverConversations) {
  auto ref1 = annotation({span("r1", 0, 0, 1, "GI:Nausea", "Experienced")});
  auto pred1 = annotation({span("p1", 0, 0, 1, "GI:Nausea", "Experienced")}, "M");
  auto ref2 = annotation({span("r1", 0, 0, 1, "Const:Fever", "Experienced")});
  ref2.conversation_id = "c2";
  auto pred2 = annotation({}, "M");
  pred2.conversation_id = "c2";

  auto acc = score_conversation_set(ref1, pred1, LabelKey::TagPlusStatus);
  acc.merge(score_conversation_set(ref2, pred2, LabelKey::TagPlusStatus));
  auto rep = acc.finalize(LabelKey::TagPlusStatus);
  EXPECT_DOUBLE_EQ(rep.overall.recall, 0.5);   // (1 + 0) / 2
  EXPECT_DOUBLE_EQ(rep.overall.precision, 1.0);  // (1 + 1) / 2, empty pred => 1
}

// ---- relations ----

TEST(Relations, IdenticalPerfectAndInsertionCosts) {
  auto make = [](bool with_link) {
    auto a = annotation({span("e", 0, 0, 1, "GI:Nausea", "Experienced"),
                         span("t", 0, 2, 3, "Property:Duration")});
    if (with_link) a.relations.push_back({"e", "t"});
    return a;
  };
  auto rep = score_relations(make(true), make(true)).finalize();
  EXPECT_DOUBLE_EQ(rep.overall.f1, 1.0);

  // endpoints strictly match but the reference has no link: an insertion
  auto rep2 = score_relations(make(false), make(true)).finalize();
  EXPECT_DOUBLE_EQ(rep2.overall.precision, 0.0);
  EXPECT_DOUBLE_EQ(rep2.overall.recall, 1.0);  // n = 0 convention

  // reference link whose endpoint does not strictly match: a miss
  auto pred = make(true);
  pred.spans[1].end = 4;  // different extent
  auto rep3 = score_relations(make(true), pred).finalize();
  EXPECT_DOUBLE_EQ(rep3.overall.recall, 0.0);
  EXPECT_DOUBLE_EQ(rep3.overall.precision, 0.0);
}

// ---- invariants and oracle equivalence ----

AnnotationSet random_annotation(Rng& rng, const std::vector<int>& lengths,
                                const std::string& labeler) {
  static const std::vector<std::string> tags = {
      "GI:Nausea", "Const:Fever", "Property:Duration", "Property:Location"};
  static const std::vector<std::string> statuses = {"Experienced",
                                                    "Not Experienced"};
  std::vector<LabeledSpan> spans;
  int id = 0;
  for (std::size_t turn = 0; turn < lengths.size(); ++turn) {
    int pos = 0;
    while (pos < lengths[turn] && spans.size() < 6) {
      if (rng.bernoulli(0.45)) {
        int len = 1 + static_cast<int>(rng.below(3));
        len = std::min(len, lengths[turn] - pos);
        std::string tag = tags[rng.below(tags.size())];
        std::optional<std::string> status;
        if (tag.rfind("Property:", 0) != 0 && rng.bernoulli(0.8))
          status = statuses[rng.below(statuses.size())];
        spans.push_back(span(labeler + std::to_string(id++),
                             static_cast<int>(turn), pos, pos + len, tag,
                             status));
        pos += len + static_cast<int>(rng.below(2));
      } else {
        ++pos;
      }
    }
  }
  return annotation(std::move(spans), labeler);
}

TEST(ScorerOracle, MatchesBruteForceOnRandomInstances) {
  Rng rng(7771);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> lengths;
    int turns = 1 + static_cast<int>(rng.below(3));
    for (int t = 0; t < turns; ++t)
      lengths.push_back(2 + static_cast<int>(rng.below(9)));
    auto conv = conversation(lengths);
    auto ref = random_annotation(rng, lengths, "r");
    auto pred = random_annotation(rng, lengths, "p");

    for (bool strict : {false, true}) {
      for (bool with_status : {false, true}) {
        ScoreMode mode = strict ? ScoreMode::Strict : ScoreMode::Relaxed;
        LabelKey key = with_status ? LabelKey::TagPlusStatus : LabelKey::Tag;
        auto got = score_spans(ref, pred, conv, mode, key).finalize(mode, key);
        auto want = oracle_score(ref, pred, lengths, strict, with_status);

        ASSERT_NEAR(got.overall.recall, want.overall.recall, 1e-12);
        ASSERT_NEAR(got.overall.precision, want.overall.precision, 1e-12);
        ASSERT_NEAR(got.overall.f1, want.overall.f1, 1e-12);
        ASSERT_EQ(got.overall.n, want.overall.n);
        ASSERT_EQ(got.overall.m, want.overall.m);
        ASSERT_EQ(got.per_label.size(), want.per_label.size());
        for (const auto& [tag, line] : want.per_label) {
          ASSERT_TRUE(got.per_label.count(tag)) << tag;
          ASSERT_NEAR(got.per_label.at(tag).recall, line.recall, 1e-12);
          ASSERT_NEAR(got.per_label.at(tag).precision, line.precision, 1e-12);
          ASSERT_NEAR(got.per_label.at(tag).f1, line.f1, 1e-12);
        }
      }
    }
  }
}

TEST(ScorerInvariants, StrictNeverExceedsRelaxedAndSymmetry) {
  Rng rng(555);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> lengths = {3 + static_cast<int>(rng.below(8)),
                                3 + static_cast<int>(rng.below(8))};
    auto conv = conversation(lengths);
    auto ref = random_annotation(rng, lengths, "r");
    auto pred = random_annotation(rng, lengths, "p");

    auto relaxed = score_spans(ref, pred, conv, ScoreMode::Relaxed)
                       .finalize(ScoreMode::Relaxed, LabelKey::TagPlusStatus);
    auto strict = score_spans(ref, pred, conv, ScoreMode::Strict)
                      .finalize(ScoreMode::Strict, LabelKey::TagPlusStatus);
    EXPECT_LE(strict.overall.recall, relaxed.overall.recall + 1e-15);
    EXPECT_LE(strict.overall.precision, relaxed.overall.precision + 1e-15);
    EXPECT_LE(strict.overall.f1, relaxed.overall.f1 + 1e-15);
    for (const auto& [tag, line] : strict.per_label) {
      EXPECT_LE(line.recall, relaxed.per_label.at(tag).recall + 1e-15);
      EXPECT_LE(line.precision, relaxed.per_label.at(tag).precision + 1e-15);
    }

    // Swapping reference and prediction swaps P and R exactly.
    auto swapped = score_spans(pred, ref, conv, ScoreMode::Relaxed)
                       .finalize(ScoreMode::Relaxed, LabelKey::TagPlusStatus);
    EXPECT_DOUBLE_EQ(swapped.overall.recall, relaxed.overall.precision);
    EXPECT_DOUBLE_EQ(swapped.overall.precision, relaxed.overall.recall);
    EXPECT_DOUBLE_EQ(swapped.overall.f1, relaxed.overall.f1);
  }
}

}  // namespace
