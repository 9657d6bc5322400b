// End-to-end library walkthrough: generate a small synthetic corpus, simulate
// three noisy labelers, adjudicate them into a voted reference, and score the
// reference against gold both relaxed and strict.
#include <cstdio>

#include "dialanno/adjudicate.hpp"
#include "dialanno/agreement.hpp"
#include "dialanno/score.hpp"
#include "dialanno/synth.hpp"

using namespace dialanno;

int main() {
  SynthConfig config;
  config.seed = 7;
  config.n_train = 40;
  config.n_dev = 0;
  config.n_test = 0;

  std::map<Task, Ontology> ontologies;
  for (Task t : kAllTasks) ontologies.emplace(t, default_ontology(t));

  SynthCorpus corpus = generate_corpus(config, ontologies);
  auto labelers = simulate_labelers(corpus, 3, config.noise, ontologies, 99);
  auto voted = vote_corpus(labelers, corpus.conversations);
  auto idx = index_conversations(corpus.conversations);

  std::printf("%zu conversations, %zu labeler sets, %zu voted references\n",
              corpus.conversations.size(), labelers.size(), voted.size());

  for (Task task : kAllTasks) {
    for (ScoreMode mode : {ScoreMode::Relaxed, ScoreMode::Strict}) {
      SpanScoreAccumulator acc;
      for (const auto& gold : corpus.gold) {
        if (gold.task != task) continue;
        const AnnotationSet* mine = nullptr;
        for (const auto& v : voted)
          if (v.conversation_id == gold.conversation_id && v.task == task)
            mine = &v;
        if (!mine) continue;
        acc.merge(score_spans(gold, *mine, *idx.at(gold.conversation_id), mode,
                              LabelKey::TagPlusStatus));
      }
      auto report = acc.finalize(mode, LabelKey::TagPlusStatus);
      std::printf("%-12s %-7s F1 %.3f (P %.3f, R %.3f) over %lld gold spans\n",
                  to_string(task), to_string(mode), report.overall.f1,
                  report.overall.precision, report.overall.recall,
                  report.overall.n);
    }
  }

  // agreement among the simulated labelers, per category
  AgreementReport agreement = agreement_matrix(
      labelers, corpus.conversations, ontologies.at(Task::Symptoms));
  for (auto cat : {AgreementCategory::Entities, AgreementCategory::Attributes,
                   AgreementCategory::Relations}) {
    auto mean = agreement.mean_kappa.at(cat);
    if (mean)
      std::printf("symptoms %-10s mean pairwise agreement %.3f\n",
                  to_string(cat), *mean);
  }
  return 0;
}
