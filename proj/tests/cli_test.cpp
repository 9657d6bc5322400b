#include <gtest/gtest.h>

#include <filesystem>

#include "dialanno/cli.hpp"
#include "test_util.hpp"

using namespace dialanno;

namespace {

int run(std::vector<std::string> args) { return run_cli(std::move(args)); }

struct CliFixture : ::testing::Test {
  CliFixture() : dir("cli") {
    EXPECT_EQ(run({"synth", "--out", dir.file("data"), "--seed", "5", "--train",
                   "20", "--dev", "4", "--test", "4", "--labelers", "3"}),
              0);
  }
  std::string data(const std::string& name) const {
    return (std::filesystem::path(dir.file("data")) / name).string();
  }
  testutil::TempDir dir;
};

TEST_F(CliFixture, SynthWritesTheStandardFiles) {
  for (const char* name :
       {"conversations.jsonl", "gold.jsonl", "labelers.jsonl", "split.json",
        "lexicon.jsonl", "ontology.symptoms.json", "ontology.medications.json",
        "ontology.conditions.json"})
    EXPECT_TRUE(std::filesystem::exists(data(name))) << name;
}

TEST_F(CliFixture, SynthIsByteDeterministic) {
  EXPECT_EQ(run({"synth", "--out", dir.file("data2"), "--seed", "5", "--train",
                 "20", "--dev", "4", "--test", "4", "--labelers", "3"}),
            0);
  for (const char* name : {"conversations.jsonl", "gold.jsonl", "labelers.jsonl",
                           "split.json"}) {
    auto a = testutil::read_file(data(name));
    auto b = testutil::read_file(
        (std::filesystem::path(dir.file("data2")) / name).string());
    EXPECT_EQ(a, b) << name;
  }
}

TEST_F(CliFixture, ValidateCleanGoldExitsZero) {
  EXPECT_EQ(run({"validate", "--annotations", data("gold.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--out",
                 dir.file("violations.jsonl")}),
            0);
  EXPECT_TRUE(testutil::read_file(dir.file("violations.jsonl")).empty());
}

TEST_F(CliFixture, ValidateCatchesInjectedDefect) {
  // strip one relation from the gold file: the orphaned attribute trips R1
  auto gold = load_annotations(data("gold.jsonl"));
  bool injected = false;
  for (auto& g : gold) {
    if (!injected && !g.relations.empty()) {
      g.relations.pop_back();
      injected = true;
    }
  }
  ASSERT_TRUE(injected);
  save_annotations(dir.file("broken.jsonl"), gold);
  EXPECT_EQ(run({"validate", "--annotations", dir.file("broken.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--out",
                 dir.file("violations.jsonl")}),
            1);
  auto body = testutil::read_file(dir.file("violations.jsonl"));
  EXPECT_NE(body.find("\"R1\""), std::string::npos);
}

TEST_F(CliFixture, VoteScoreRoundTrip) {
  EXPECT_EQ(run({"vote", "--annotations", data("labelers.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--out",
                 dir.file("voted.jsonl")}),
            0);
  auto voted = load_annotations(dir.file("voted.jsonl"));
  ASSERT_FALSE(voted.empty());
  for (const auto& v : voted) EXPECT_EQ(v.labeler_id, "VOTED");

  // score the voted reference against gold: table and json forms
  EXPECT_EQ(run({"score", "--ref", data("gold.jsonl"), "--pred",
                 dir.file("voted.jsonl"), "--conversations",
                 data("conversations.jsonl"), "--mode", "relaxed",
                 "--granularity", "span", "--out", dir.file("table.txt")}),
            0);
  auto table = testutil::read_file(dir.file("table.txt"));
  EXPECT_NE(table.find("Performance F1 (Precision, Recall)"), std::string::npos);
  EXPECT_NE(table.find("symptoms"), std::string::npos);

  EXPECT_EQ(run({"score", "--ref", data("gold.jsonl"), "--pred",
                 dir.file("voted.jsonl"), "--conversations",
                 data("conversations.jsonl"), "--mode", "strict", "--format",
                 "json", "--out", dir.file("score.json")}),
            0);
  auto parsed = json::parse(testutil::read_file(dir.file("score.json")));
  ASSERT_TRUE(parsed.contains("symptoms"));
  EXPECT_EQ(parsed["symptoms"]["mode"], "strict");
  double f1 = parsed["symptoms"]["overall"]["f1"].get<double>();
  EXPECT_GE(f1, 0.0);
  EXPECT_LE(f1, 1.0);
}

TEST_F(CliFixture, VoteIsDeterministicAndWorkerInvariant) {
  ASSERT_EQ(run({"vote", "--annotations", data("labelers.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--out",
                 dir.file("v1.jsonl")}),
            0);
  ASSERT_EQ(run({"vote", "--annotations", data("labelers.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--out",
                 dir.file("v2.jsonl")}),
            0);
  ASSERT_EQ(run({"vote", "--annotations", data("labelers.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--workers",
                 "3", "--out", dir.file("v3.jsonl")}),
            0);
  auto v1 = testutil::read_file(dir.file("v1.jsonl"));
  EXPECT_EQ(v1, testutil::read_file(dir.file("v2.jsonl")));
  EXPECT_EQ(v1, testutil::read_file(dir.file("v3.jsonl")));
}

TEST_F(CliFixture, ScoreConversationSetAndRelations) {
  ASSERT_EQ(run({"vote", "--annotations", data("labelers.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--out",
                 dir.file("voted.jsonl")}),
            0);
  // conversation-set scoring is only defined for the closed-class tasks
  auto gold = load_annotations(data("gold.jsonl"));
  std::vector<AnnotationSet> closed, meds;
  for (const auto& g : gold)
    (g.task == Task::Medications ? meds : closed).push_back(g);
  save_annotations(dir.file("closed.jsonl"), closed);
  save_annotations(dir.file("meds.jsonl"), meds);

  EXPECT_EQ(run({"score", "--ref", dir.file("closed.jsonl"), "--pred",
                 dir.file("closed.jsonl"), "--conversations",
                 data("conversations.jsonl"), "--granularity",
                 "conversation_set", "--format", "json", "--out",
                 dir.file("cs.json")}),
            0);
  auto cs = json::parse(testutil::read_file(dir.file("cs.json")));
  EXPECT_DOUBLE_EQ(cs["symptoms"]["overall"]["f1"].get<double>(), 1.0);
  EXPECT_EQ(cs["symptoms"]["granularity"], "conversation_set");

  EXPECT_EQ(run({"score", "--ref", dir.file("meds.jsonl"), "--pred",
                 dir.file("meds.jsonl"), "--conversations",
                 data("conversations.jsonl"), "--granularity",
                 "conversation_set"}),
            2);

  EXPECT_EQ(run({"score", "--ref", data("gold.jsonl"), "--pred",
                 dir.file("voted.jsonl"), "--conversations",
                 data("conversations.jsonl"), "--granularity", "relations",
                 "--format", "json", "--out", dir.file("rel.json")}),
            0);
  auto rel = json::parse(testutil::read_file(dir.file("rel.json")));
  EXPECT_EQ(rel["medications"]["granularity"], "relation");
}

TEST_F(CliFixture, ScoreWorkersDoNotChangeBytes) {
  ASSERT_EQ(run({"vote", "--annotations", data("labelers.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--out",
                 dir.file("voted.jsonl")}),
            0);
  ASSERT_EQ(run({"score", "--ref", data("gold.jsonl"), "--pred",
                 dir.file("voted.jsonl"), "--conversations",
                 data("conversations.jsonl"), "--format", "json", "--per-label",
                 "--out", dir.file("s1.json")}),
            0);
  ASSERT_EQ(run({"score", "--ref", data("gold.jsonl"), "--pred",
                 dir.file("voted.jsonl"), "--conversations",
                 data("conversations.jsonl"), "--format", "json", "--per-label",
                 "--workers", "4", "--out", dir.file("s2.json")}),
            0);
  EXPECT_EQ(testutil::read_file(dir.file("s1.json")),
            testutil::read_file(dir.file("s2.json")));
}

TEST_F(CliFixture, KappaEmitsPerCategoryCsv) {
  EXPECT_EQ(run({"kappa", "--annotations", data("labelers.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--out",
                 dir.file("kappa.csv")}),
            0);
  auto csv = testutil::read_file(dir.file("kappa.csv"));
  EXPECT_NE(csv.find("task,category,pair,kappa"), std::string::npos);
  EXPECT_NE(csv.find("entities"), std::string::npos);
  EXPECT_NE(csv.find("L1~L2"), std::string::npos);
  EXPECT_NE(csv.find("MEAN"), std::string::npos);
}

TEST_F(CliFixture, QaRanksLabelersAndSelectsReviewers) {
  EXPECT_EQ(run({"qa", "--annotations", data("labelers.jsonl"), "--reference",
                 data("gold.jsonl"), "--conversations",
                 data("conversations.jsonl"), "--select", "2", "--out",
                 dir.file("qa.csv")}),
            0);
  auto csv = testutil::read_file(dir.file("qa.csv"));
  EXPECT_NE(csv.find("labeler,score,reviewer"), std::string::npos);
  // three labelers, two marked reviewer
  int reviewers = 0;
  for (std::size_t pos = 0; (pos = csv.find(",1\n", pos)) != std::string::npos;
       ++pos)
    ++reviewers;
  EXPECT_EQ(reviewers, 2);
}

TEST_F(CliFixture, PruneWritesOntologyAndRemap) {
  EXPECT_EQ(run({"prune", "--ontology", data("ontology.symptoms.json"),
                 "--annotations", data("gold.jsonl"), "--conversations",
                 data("conversations.jsonl"), "--min-count", "1",
                 "--min-kappa", "0.0", "--out", dir.file("pruned.json"),
                 "--remap-out", dir.file("remap.json"), "--apply",
                 dir.file("remapped.jsonl")}),
            0);
  Ontology pruned = load_ontology(dir.file("pruned.json"));
  EXPECT_LT(pruned.entities.size(),
            default_symptoms_ontology().entities.size());
  auto remapped = load_annotations(dir.file("remapped.jsonl"));
  for (const auto& a : remapped) {
    if (a.task != Task::Symptoms) continue;
    for (const auto& s : a.spans) {
      EXPECT_TRUE(pruned.has_tag(s.tag)) << s.tag;
    }
  }
}

TEST_F(CliFixture, SuggestHonorsSplitGuard) {
  EXPECT_EQ(run({"suggest", "--conversations", data("conversations.jsonl"),
                 "--lexicon", data("lexicon.jsonl"), "--task", "conditions",
                 "--split", data("split.json"), "--out",
                 dir.file("suggestions.jsonl")}),
            0);
  auto suggestions = load_annotations(dir.file("suggestions.jsonl"));
  Split split = load_split(data("split.json"));
  EXPECT_EQ(suggestions.size(), split.train.size());
  for (const auto& s : suggestions) {
    EXPECT_TRUE(split.in_train(s.conversation_id));
    EXPECT_EQ(s.labeler_id, "SUGGEST");
  }
}

TEST_F(CliFixture, TagTrainPredictPipeline) {
  EXPECT_EQ(run({"train-tagger", "--conversations", data("conversations.jsonl"),
                 "--annotations", data("gold.jsonl"), "--task", "medications",
                 "--epochs", "5", "--seed", "3", "--split", data("split.json"),
                 "--out", dir.file("model.json")}),
            0);
  EXPECT_EQ(run({"tag", "--model", dir.file("model.json"), "--conversations",
                 data("conversations.jsonl"), "--split", data("split.json"),
                 "--subset", "dev", "--out", dir.file("pred.jsonl")}),
            0);
  auto preds = load_annotations(dir.file("pred.jsonl"));
  EXPECT_EQ(preds.size(), 4u);  // dev conversations
  for (const auto& p : preds) EXPECT_EQ(p.labeler_id, "MODEL");

  // workers produce identical bytes
  EXPECT_EQ(run({"tag", "--model", dir.file("model.json"), "--conversations",
                 data("conversations.jsonl"), "--split", data("split.json"),
                 "--subset", "dev", "--workers", "4", "--out",
                 dir.file("pred2.jsonl")}),
            0);
  EXPECT_EQ(testutil::read_file(dir.file("pred.jsonl")),
            testutil::read_file(dir.file("pred2.jsonl")));
}

TEST_F(CliFixture, TurnDetectorPipeline) {
  EXPECT_EQ(run({"train-turns", "--conversations", data("conversations.jsonl"),
                 "--annotations", data("gold.jsonl"), "--epochs", "5", "--seed",
                 "2", "--split", data("split.json"), "--out",
                 dir.file("turns.json")}),
            0);
  // span model whose projection rides along in the comparison table
  ASSERT_EQ(run({"train-tagger", "--conversations", data("conversations.jsonl"),
                 "--annotations", data("gold.jsonl"), "--task", "symptoms",
                 "--epochs", "5", "--seed", "3", "--split", data("split.json"),
                 "--out", dir.file("sym_model.json")}),
            0);
  ASSERT_EQ(run({"tag", "--model", dir.file("sym_model.json"),
                 "--conversations", data("conversations.jsonl"), "--split",
                 data("split.json"), "--subset", "dev", "--out",
                 dir.file("sym_pred.jsonl")}),
            0);
  EXPECT_EQ(run({"detect-turns", "--model", dir.file("turns.json"),
                 "--conversations", data("conversations.jsonl"), "--split",
                 data("split.json"), "--subset", "dev", "--gold",
                 data("gold.jsonl"), "--project", dir.file("sym_pred.jsonl"),
                 "--out", dir.file("turn_pred.jsonl"), "--report",
                 dir.file("turn_eval.csv")}),
            0);
  auto csv = testutil::read_file(dir.file("turn_eval.csv"));
  EXPECT_NE(csv.find("task,class,model,precision,recall,f1"), std::string::npos);
  EXPECT_NE(csv.find("turn_model"), std::string::npos);
  EXPECT_NE(csv.find("span_projection"), std::string::npos);
  EXPECT_NE(csv.find("Duration"), std::string::npos);
}

TEST_F(CliFixture, ErrorsAlignAnnotateReport) {
  ASSERT_EQ(run({"vote", "--annotations", data("labelers.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--out",
                 dir.file("voted.jsonl")}),
            0);
  EXPECT_EQ(run({"errors", "align", "--ref", data("gold.jsonl"), "--pred",
                 dir.file("voted.jsonl"), "--conversations",
                 data("conversations.jsonl"), "--out", dir.file("records.jsonl")}),
            0);
  auto records = load_error_records(dir.file("records.jsonl"));
  if (records.empty()) GTEST_SKIP() << "voted reference was perfect";

  EXPECT_EQ(run({"errors", "annotate", "--records", dir.file("records.jsonl"),
                 "--record-id", records[0].record_id, "--cause",
                 "Fail to use context", "--relevance", "Relevant", "--rater",
                 "r1", "--timestamp", "2024-05-05T00:00:00Z", "--out",
                 dir.file("records2.jsonl")}),
            0);
  auto updated = load_error_records(dir.file("records2.jsonl"));
  EXPECT_EQ(updated[0].cause, ErrorCause::FailToUseContext);

  EXPECT_EQ(run({"errors", "annotate", "--records", dir.file("records2.jsonl"),
                 "--record-id", "doesnotexist", "--cause", "Ambiguous tag",
                 "--relevance", "N/A", "--rater", "r1", "--out",
                 dir.file("never.jsonl")}),
            2);

  EXPECT_EQ(run({"errors", "report", "--records", dir.file("records2.jsonl"),
                 "--format", "json", "--out", dir.file("report.json")}),
            0);
  auto report = json::parse(testutil::read_file(dir.file("report.json")));
  EXPECT_EQ(report["categorized"].get<int>(), 1);
}

TEST_F(CliFixture, StatsCountsUniqueSurfaces) {
  EXPECT_EQ(run({"stats", "--annotations", data("gold.jsonl"),
                 "--conversations", data("conversations.jsonl"), "--unique",
                 "--out", dir.file("stats.csv")}),
            0);
  auto csv = testutil::read_file(dir.file("stats.csv"));
  EXPECT_NE(csv.find("task,category,total,per_conversation"), std::string::npos);
  EXPECT_NE(csv.find("medications,entities,"), std::string::npos);
  EXPECT_NE(csv.find("symptoms,attributes,"), std::string::npos);

  // --unique without conversations is a usage error
  EXPECT_EQ(run({"stats", "--annotations", data("gold.jsonl"), "--unique"}), 2);
}

TEST(CliErrors, UsageAndDataExitCodes) {
  EXPECT_EQ(run({"definitely-not-a-command"}), 2);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"score", "--ref", "/nonexistent/x.jsonl", "--pred",
                 "/nonexistent/y.jsonl", "--conversations",
                 "/nonexistent/z.jsonl"}),
            1);
  EXPECT_EQ(run({"--help"}), 0);
}

}  // namespace
