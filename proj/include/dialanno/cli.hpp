// Every pipeline stage as a subcommand of one binary, for batch use and CI.
// All randomness funnels through explicit --seed flags; with the same flags,
// every subcommand writes identical bytes. Exit codes: 0 success, 1 data or
// validation failure, 2 usage error.
#pragma once

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dialanno/adjudicate.hpp"
#include "dialanno/agreement.hpp"
#include "dialanno/errors.hpp"
#include "dialanno/io.hpp"
#include "dialanno/ontology.hpp"
#include "dialanno/score.hpp"
#include "dialanno/suggest.hpp"
#include "dialanno/synth.hpp"
#include "dialanno/tagger.hpp"
#include "dialanno/turns.hpp"
#include "dialanno/validate.hpp"

namespace dialanno {

// Inconsistent input data (as opposed to bad usage); maps to exit code 1.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace cli {

inline std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

inline void write_text(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
}

inline std::string iso8601_utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Default ontologies, overridden per task by any --ontology files.
inline std::map<Task, Ontology> resolve_ontologies(
    const std::vector<std::string>& ontology_paths) {
  std::map<Task, Ontology> out;
  for (Task t : kAllTasks) out.emplace(t, default_ontology(t));
  for (const auto& path : ontology_paths) {
    Ontology o = load_ontology(path);
    out.insert_or_assign(o.task, std::move(o));
  }
  return out;
}

inline void require_consistent(const std::vector<AnnotationSet>& annotations,
                               const std::vector<Conversation>& conversations,
                               const std::map<Task, Ontology>& ontologies) {
  auto violations = cross_validate(annotations, conversations, ontologies);
  if (violations.empty()) return;
  std::string msg = "inconsistent annotations (" +
                    std::to_string(violations.size()) + " violations), e.g. " +
                    to_string(violations[0].kind) + " " + violations[0].target +
                    " in " + violations[0].conversation_id + ": " +
                    violations[0].message;
  throw DataError(msg);
}

inline std::vector<AnnotationSet> filter_labeler(
    std::vector<AnnotationSet> annotations, const std::string& labeler) {
  if (labeler.empty()) return annotations;
  std::vector<AnnotationSet> out;
  for (auto& a : annotations)
    if (a.labeler_id == labeler) out.push_back(std::move(a));
  return out;
}

inline std::set<std::string> subset_ids(const Split& split,
                                        const std::string& subset) {
  const std::vector<std::string>* ids = nullptr;
  if (subset == "train") ids = &split.train;
  else if (subset == "dev") ids = &split.dev;
  else if (subset == "test") ids = &split.test;
  else throw std::invalid_argument("unknown split subset: " + subset);
  return {ids->begin(), ids->end()};
}

// ---- synth ----

inline int cmd_synth(const std::string& outdir, std::uint64_t seed, int n_train,
                     int n_dev, int n_test, int min_turns, int max_turns,
                     int labelers, const NoiseConfig& noise) {
  SynthConfig config;
  config.seed = seed;
  config.n_train = n_train;
  config.n_dev = n_dev;
  config.n_test = n_test;
  config.min_turns = min_turns;
  config.max_turns = max_turns;
  config.noise = noise;
  config.labelers = labelers;

  std::map<Task, Ontology> ontologies;
  for (Task t : kAllTasks) ontologies.emplace(t, default_ontology(t));

  SynthCorpus corpus = generate_corpus(config, ontologies);

  namespace fs = std::filesystem;
  fs::create_directories(outdir);
  auto at = [&](const std::string& name) { return (fs::path(outdir) / name).string(); };

  save_conversations(at("conversations.jsonl"), corpus.conversations);
  save_annotations(at("gold.jsonl"), corpus.gold);
  save_split(at("split.json"), corpus.split);
  for (Task t : kAllTasks)
    save_ontology(at(std::string("ontology.") + to_string(t) + ".json"),
                  ontologies.at(t));

  Lexicon lexicon;
  for (Task t : kAllTasks)
    for (const auto& e : ontologies.at(t).entities)
      for (const auto& alias : e.aliases) lexicon.add(alias, e.tag);
  save_lexicon(at("lexicon.jsonl"), lexicon);

  if (labelers > 0) {
    auto sets = simulate_labelers(corpus, labelers, noise, ontologies, seed);
    save_annotations(at("labelers.jsonl"), sets);
  }
  std::cerr << "wrote " << corpus.conversations.size() << " conversations, "
            << corpus.gold.size() << " gold sets to " << outdir << "\n";
  return 0;
}

// ---- validate ----

inline int cmd_validate(const std::string& annotations_path,
                        const std::string& conversations_path,
                        const std::vector<std::string>& ontology_paths,
                        const std::string& out) {
  auto conversations = load_conversations(conversations_path);
  auto annotations = load_annotations(annotations_path);
  auto ontologies = resolve_ontologies(ontology_paths);

  std::string lines;
  bool any_error = false;
  for (const auto& v : cross_validate(annotations, conversations, ontologies)) {
    any_error = true;
    lines += json{{"rule_id", std::string("XREF:") + to_string(v.kind)},
                  {"severity", "error"},
                  {"conversation_id", v.conversation_id},
                  {"labeler_id", v.labeler_id},
                  {"task", to_string(v.task)},
                  {"target", v.target},
                  {"message", v.message}}
                 .dump() +
             "\n";
  }
  for (const auto& a : annotations) {
    for (const auto& v : validate_annotation(a, ontologies.at(a.task))) {
      any_error = any_error || v.severity == RuleSeverity::Error;
      lines += json{{"rule_id", v.rule_id},
                    {"severity", v.severity == RuleSeverity::Error ? "error"
                                                                   : "warning"},
                    {"conversation_id", a.conversation_id},
                    {"labeler_id", a.labeler_id},
                    {"task", to_string(a.task)},
                    {"target", v.target},
                    {"message", v.message}}
                   .dump() +
               "\n";
    }
  }
  write_text(out, lines);
  return any_error ? 1 : 0;
}

// ---- vote ----

inline int cmd_vote(const std::string& annotations_path,
                    const std::string& conversations_path, const std::string& out,
                    const std::string& senior, double alpha, int workers) {
  auto conversations = load_conversations(conversations_path);
  auto annotations = load_annotations(annotations_path);
  auto ontologies = resolve_ontologies({});
  require_consistent(annotations, conversations, ontologies);

  auto idx = index_conversations(conversations);
  std::optional<std::string> senior_opt;
  if (!senior.empty()) senior_opt = senior;

  // Stats per task over the full pool, then per-conversation voting.
  std::map<Task, std::vector<AnnotationSet>> by_task;
  for (const auto& a : annotations) by_task[a.task].push_back(a);

  std::vector<AnnotationSet> voted;
  for (const auto& [task, task_sets] : by_task) {
    TransitionStats stats =
        estimate_transition_stats(task_sets, conversations, alpha);
    std::map<std::string, std::vector<const AnnotationSet*>> groups;
    for (const auto& a : task_sets) groups[a.conversation_id].push_back(&a);
    std::vector<std::pair<const std::string*, const std::vector<const AnnotationSet*>*>>
        order;
    for (const auto& [conv_id, group] : groups) order.push_back({&conv_id, &group});
    std::vector<AnnotationSet> results(order.size());
    parallel_for(order.size(), workers, [&](std::size_t i) {
      std::vector<AnnotationSet> group;
      for (const AnnotationSet* a : *order[i].second) group.push_back(*a);
      results[i] = build_voted_reference(group, *idx.at(*order[i].first), stats,
                                         senior_opt);
    });
    for (auto& r : results) voted.push_back(std::move(r));
  }
  save_annotations(out, voted);
  return 0;
}

// ---- score ----

inline std::string render_score_table(
    const std::map<Task, ScoreReport>& reports, bool per_label) {
  std::string out = "Performance F1 (Precision, Recall)\n";
  for (const auto& [task, r] : reports) {
    out += fmt("%-12s  %.2f (%.2f, %.2f)   [n=%lld m=%lld %s/%s/%s]\n",
               to_string(task), r.overall.f1, r.overall.precision,
               r.overall.recall, r.overall.n, r.overall.m, to_string(r.mode),
               to_string(r.granularity), to_string(r.key));
    if (per_label)
      for (const auto& [label, l] : r.per_label)
        out += fmt("  %-34s  %.2f (%.2f, %.2f)   [n=%lld m=%lld]\n",
                   label.c_str(), l.f1, l.precision, l.recall, l.n, l.m);
  }
  return out;
}

inline std::string render_score_csv(const std::map<Task, ScoreReport>& reports,
                                    bool per_label) {
  std::string out = "task,label,recall,precision,f1,n,m\n";
  for (const auto& [task, r] : reports) {
    out += fmt("%s,__overall__,%.6f,%.6f,%.6f,%lld,%lld\n", to_string(task),
               r.overall.recall, r.overall.precision, r.overall.f1, r.overall.n,
               r.overall.m);
    if (per_label)
      for (const auto& [label, l] : r.per_label)
        out += fmt("%s,%s,%.6f,%.6f,%.6f,%lld,%lld\n", to_string(task),
                   label.c_str(), l.recall, l.precision, l.f1, l.n, l.m);
  }
  return out;
}

inline int cmd_score(const std::string& ref_path, const std::string& pred_path,
                     const std::string& conversations_path,
                     const std::string& mode_name, const std::string& gran_name,
                     const std::string& key_name, const std::string& ref_labeler,
                     const std::string& pred_labeler, bool per_label,
                     const std::string& format, const std::string& out,
                     int workers) {
  ScoreMode mode = mode_name == "strict" ? ScoreMode::Strict : ScoreMode::Relaxed;
  LabelKey key = key_name == "tag" ? LabelKey::Tag : LabelKey::TagPlusStatus;
  Granularity gran = gran_name == "conversation_set" ? Granularity::ConversationSet
                     : gran_name == "relations"      ? Granularity::Relation
                                                     : Granularity::Span;

  auto conversations = load_conversations(conversations_path);
  auto refs = filter_labeler(load_annotations(ref_path), ref_labeler);
  auto preds = filter_labeler(load_annotations(pred_path), pred_labeler);
  auto ontologies = resolve_ontologies({});
  require_consistent(refs, conversations, ontologies);
  require_consistent(preds, conversations, ontologies);

  std::map<Task, ScoreReport> reports;
  if (gran == Granularity::Span && workers > 1) {
    // Parallel per conversation pair with an index-ordered merge.
    auto idx = index_conversations(conversations);
    std::map<std::pair<Task, std::string>,
             std::pair<const AnnotationSet*, const AnnotationSet*>>
        pairs;
    for (const auto& r : refs) pairs[{r.task, r.conversation_id}].first = &r;
    for (const auto& p : preds) pairs[{p.task, p.conversation_id}].second = &p;
    std::vector<std::pair<Task, std::pair<const AnnotationSet*, const AnnotationSet*>>>
        order;
    std::vector<AnnotationSet> empties;
    empties.reserve(pairs.size() * 2);
    for (const auto& [tc, slot] : pairs) {
      auto s = slot;
      if (!s.first) {
        AnnotationSet e;
        e.conversation_id = tc.second;
        e.task = tc.first;
        e.labeler_id = "EMPTY_REF";
        empties.push_back(std::move(e));
        s.first = &empties.back();
      }
      if (!s.second) {
        AnnotationSet e;
        e.conversation_id = tc.second;
        e.task = tc.first;
        e.labeler_id = "EMPTY_PRED";
        empties.push_back(std::move(e));
        s.second = &empties.back();
      }
      order.push_back({tc.first, s});
    }
    std::vector<SpanScoreAccumulator> accs(order.size());
    parallel_for(order.size(), workers, [&](std::size_t i) {
      const auto& [task, slot] = order[i];
      accs[i] = score_spans(*slot.first, *slot.second,
                            *idx.at(slot.first->conversation_id), mode, key);
    });
    std::map<Task, SpanScoreAccumulator> merged;
    for (std::size_t i = 0; i < order.size(); ++i)
      merged[order[i].first].merge(accs[i]);
    for (const auto& [task, acc] : merged) reports[task] = acc.finalize(mode, key);
  } else {
    reports = score_corpus(refs, preds, conversations, gran, mode, key);
  }

  if (format == "json") {
    json j = json::object();
    for (const auto& [task, r] : reports) j[to_string(task)] = to_json(r);
    write_text(out, j.dump(2) + "\n");
  } else if (format == "csv") {
    write_text(out, render_score_csv(reports, per_label));
  } else {
    write_text(out, render_score_table(reports, per_label));
  }
  return 0;
}

// ---- kappa ----

inline int cmd_kappa(const std::string& annotations_path,
                     const std::string& conversations_path,
                     const std::vector<std::string>& ontology_paths,
                     const std::string& format, const std::string& out) {
  auto conversations = load_conversations(conversations_path);
  auto annotations = load_annotations(annotations_path);
  auto ontologies = resolve_ontologies(ontology_paths);
  require_consistent(annotations, conversations, ontologies);

  std::set<Task> tasks;
  for (const auto& a : annotations) tasks.insert(a.task);

  json jout = json::object();
  std::string csv = "task,category,pair,kappa\n";
  for (Task task : tasks) {
    AgreementReport report =
        agreement_matrix(annotations, conversations, ontologies.at(task));
    json jtask = json::object();
    for (auto cat : {AgreementCategory::Entities, AgreementCategory::Attributes,
                     AgreementCategory::Relations}) {
      json jcat = json::object();
      auto it = report.per_pair.find(cat);
      if (it != report.per_pair.end()) {
        for (const auto& [pair, k] : it->second) {
          std::string pair_name = pair.first + "~" + pair.second;
          csv += fmt("%s,%s,%s,%.6f\n", to_string(task), to_string(cat),
                     pair_name.c_str(), k.kappa);
          jcat[pair_name] = {{"kappa", k.kappa},
                             {"p_observed", k.p_observed},
                             {"p_chance", k.p_chance},
                             {"units", k.units}};
        }
      }
      auto mean = report.mean_kappa.count(cat) ? report.mean_kappa.at(cat)
                                               : std::nullopt;
      if (mean) {
        csv += fmt("%s,%s,MEAN,%.6f\n", to_string(task), to_string(cat), *mean);
        jcat["mean"] = *mean;
      } else {
        csv += fmt("%s,%s,MEAN,NA\n", to_string(task), to_string(cat));
        jcat["mean"] = nullptr;
      }
      jtask[to_string(cat)] = jcat;
    }
    // not chance-corrected, reported alongside the kappas
    json jstrict = json::object();
    for (const auto& [pair, rate] : report.strict_span_rate) {
      std::string pair_name = pair.first + "~" + pair.second;
      csv += fmt("%s,strict_span,%s,%.6f\n", to_string(task), pair_name.c_str(),
                 rate);
      jstrict[pair_name] = rate;
    }
    if (report.mean_strict_span_rate) {
      csv += fmt("%s,strict_span,MEAN,%.6f\n", to_string(task),
                 *report.mean_strict_span_rate);
      jstrict["mean"] = *report.mean_strict_span_rate;
    }
    jtask["strict_span"] = jstrict;
    jout[to_string(task)] = jtask;
  }
  write_text(out, format == "json" ? jout.dump(2) + "\n" : csv);
  return 0;
}

// ---- qa ----

inline int cmd_qa(const std::string& annotations_path,
                  const std::string& reference_path,
                  const std::string& conversations_path, int select_k,
                  const std::string& format, const std::string& out) {
  auto conversations = load_conversations(conversations_path);
  auto annotations = load_annotations(annotations_path);
  auto references = load_annotations(reference_path);
  auto ontologies = resolve_ontologies({});
  require_consistent(annotations, conversations, ontologies);
  require_consistent(references, conversations, ontologies);

  std::map<std::string, std::vector<AnnotationSet>> by_labeler;
  for (const auto& a : annotations) by_labeler[a.labeler_id].push_back(a);

  std::map<std::string, double> scores;
  for (const auto& [labeler, sets] : by_labeler)
    scores[labeler] = qa_score(sets, references, conversations);

  std::set<std::string> reviewers;
  if (select_k > 0) {
    if (static_cast<std::size_t>(select_k) > scores.size())
      throw std::invalid_argument("qa: --select exceeds labeler count");
    auto picked = select_reviewers(scores, static_cast<std::size_t>(select_k));
    reviewers.insert(picked.begin(), picked.end());
  }

  std::vector<std::pair<std::string, double>> order(scores.begin(), scores.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  if (format == "json") {
    json j = json::object();
    for (const auto& [labeler, score] : order) {
      j[labeler] = {{"score", score}};
      if (select_k > 0) j[labeler]["reviewer"] = reviewers.count(labeler) > 0;
    }
    write_text(out, j.dump(2) + "\n");
  } else {
    std::string csv = select_k > 0 ? "labeler,score,reviewer\n" : "labeler,score\n";
    for (const auto& [labeler, score] : order) {
      if (select_k > 0)
        csv += fmt("%s,%.6f,%d\n", labeler.c_str(), score,
                   reviewers.count(labeler) ? 1 : 0);
      else
        csv += fmt("%s,%.6f\n", labeler.c_str(), score);
    }
    write_text(out, csv);
  }
  return 0;
}

// ---- prune ----

inline int cmd_prune(const std::string& ontology_path,
                     const std::string& annotations_path,
                     const std::string& conversations_path, long long min_count,
                     double min_kappa, const std::string& out,
                     const std::string& remap_out, const std::string& apply_out) {
  Ontology ontology = load_ontology(ontology_path);
  auto conversations = load_conversations(conversations_path);
  auto annotations = load_annotations(annotations_path);
  require_consistent(annotations, conversations,
                     resolve_ontologies({ontology_path}));

  std::map<std::string, long long> counts;
  for (const auto& e : ontology.entities) counts[e.tag] = 0;
  for (const auto& a : annotations) {
    if (a.task != ontology.task) continue;
    for (const auto& s : a.spans)
      if (ontology.kind(s.tag) == TagKind::Entity) counts[s.tag] += 1;
  }
  auto kappas = per_entity_tag_kappas(annotations, conversations, ontology);

  PruneResult result = prune(ontology, counts, kappas, min_count, min_kappa);
  save_ontology(out, result.ontology);
  if (!remap_out.empty()) {
    json j = json::object();
    for (const auto& [from, to] : result.remap) j[from] = to;
    write_text(remap_out, j.dump(2) + "\n");
  }
  if (!apply_out.empty()) {
    std::vector<AnnotationSet> remapped;
    for (const auto& a : annotations)
      remapped.push_back(a.task == ontology.task ? apply_remap(a, result.remap) : a);
    save_annotations(apply_out, remapped);
  }
  std::cerr << "kept " << result.ontology.entities.size() << " of "
            << ontology.entities.size() << " entity tags\n";
  return 0;
}

// ---- suggest ----

inline int cmd_suggest(const std::string& conversations_path,
                       const std::string& lexicon_path, const std::string& task_name,
                       const std::string& split_path, const std::string& out) {
  auto conversations = load_conversations(conversations_path);
  Lexicon lexicon = load_lexicon(lexicon_path);
  Task task = task_from_string(task_name);

  std::optional<Split> split;
  if (!split_path.empty()) split = load_split(split_path);

  std::vector<AnnotationSet> suggestions;
  std::size_t skipped = 0;
  for (const auto& conv : conversations) {
    if (split && !split->in_train(conv.id)) {
      ++skipped;  // assistance never touches dev or test conversations
      continue;
    }
    AnnotationSet s;
    s.conversation_id = conv.id;
    s.labeler_id = "SUGGEST";
    s.task = task;
    s.spans = suggest_guarded(conv, lexicon, split);
    suggestions.push_back(std::move(s));
  }
  save_annotations(out, suggestions);
  if (skipped)
    std::cerr << "skipped " << skipped << " non-train conversations\n";
  return 0;
}

// ---- train-tagger / tag ----

inline int cmd_train_tagger(const std::string& conversations_path,
                            const std::string& annotations_path,
                            const std::string& task_name, int epochs,
                            std::uint64_t seed, const std::string& labeler,
                            const std::string& filter_name,
                            const std::string& split_path,
                            const std::vector<std::string>& ontology_paths,
                            const std::string& out) {
  auto conversations = load_conversations(conversations_path);
  auto gold = filter_labeler(load_annotations(annotations_path), labeler);
  Task task = task_from_string(task_name);
  auto ontologies = resolve_ontologies(ontology_paths);
  require_consistent(gold, conversations, ontologies);

  if (!split_path.empty()) {
    auto train_ids = subset_ids(load_split(split_path), "train");
    std::vector<Conversation> kept;
    for (auto& c : conversations)
      if (train_ids.count(c.id)) kept.push_back(std::move(c));
    conversations = std::move(kept);
  }

  TaskFilter filter = filter_name == "entities"     ? TaskFilter::EntitiesOnly
                      : filter_name == "attributes" ? TaskFilter::AttributesOnly
                                                    : TaskFilter::All;
  TaggerModel model = train_tagger(conversations, gold, task, epochs, seed,
                                   filter, &ontologies.at(task));
  save_tagger(out, model);
  std::cerr << "trained " << model.tags.size() << " tags, "
            << model.weights.size() << " features\n";
  return 0;
}

inline int cmd_tag(const std::string& model_path,
                   const std::string& conversations_path,
                   const std::string& split_path, const std::string& subset,
                   const std::string& out, int workers) {
  TaggerModel model = load_tagger(model_path);
  auto conversations = load_conversations(conversations_path);
  if (!split_path.empty()) {
    auto ids = subset_ids(load_split(split_path), subset);
    std::vector<Conversation> kept;
    for (auto& c : conversations)
      if (ids.count(c.id)) kept.push_back(std::move(c));
    conversations = std::move(kept);
  }
  std::vector<AnnotationSet> predictions(conversations.size());
  parallel_for(conversations.size(), workers, [&](std::size_t i) {
    predictions[i] = predict(model, conversations[i]);
  });
  save_annotations(out, predictions);
  return 0;
}

// ---- train-turns / detect-turns ----

inline int cmd_train_turns(const std::string& conversations_path,
                           const std::vector<std::string>& annotation_paths,
                           int epochs, std::uint64_t seed,
                           const std::string& merge_name,
                           const std::string& task_name,
                           const std::string& split_path, const std::string& out) {
  auto conversations = load_conversations(conversations_path);
  std::vector<AnnotationSet> annotations;
  for (const auto& path : annotation_paths)
    for (auto& a : load_annotations(path)) annotations.push_back(std::move(a));
  auto ontologies = resolve_ontologies({});
  require_consistent(annotations, conversations, ontologies);

  if (!split_path.empty()) {
    auto train_ids = subset_ids(load_split(split_path), "train");
    std::vector<Conversation> kept;
    for (auto& c : conversations)
      if (train_ids.count(c.id)) kept.push_back(std::move(c));
    conversations = std::move(kept);
  }

  TurnMerge merge =
      merge_name == "per_task" ? TurnMerge::PerTask : TurnMerge::AllTasks;
  std::optional<Task> task;
  if (merge == TurnMerge::PerTask) {
    if (task_name.empty())
      throw std::invalid_argument("train-turns: per_task merge needs --task");
    task = task_from_string(task_name);
  }
  TurnModel model = train_turns(conversations, annotations, epochs, seed, merge, task);
  save_turn_model(out, model);
  return 0;
}

inline std::string render_turn_eval_csv(
    const std::vector<std::pair<std::string, TurnEval>>& evals,
    const std::string& task_name) {
  std::string csv = "task,class,model,precision,recall,f1\n";
  for (const auto& [model_name, eval] : evals)
    for (const auto& [cls, sc] : eval)
      csv += fmt("%s,%s,%s,%.6f,%.6f,%.6f\n", task_name.c_str(), to_string(cls),
                 model_name.c_str(), sc.precision, sc.recall, sc.f1);
  return csv;
}

inline int cmd_detect_turns(const std::string& model_path,
                            const std::string& conversations_path,
                            const std::string& split_path, const std::string& subset,
                            const std::string& gold_path,
                            const std::string& project_path,
                            const std::string& out, const std::string& report_out,
                            std::optional<double> threshold) {
  TurnModel model = load_turn_model(model_path);
  if (threshold)
    for (int c = 0; c < kTurnClassCount; ++c) model.threshold[c] = *threshold;
  auto conversations = load_conversations(conversations_path);
  if (!split_path.empty()) {
    auto ids = subset_ids(load_split(split_path), subset);
    std::vector<Conversation> kept;
    for (auto& c : conversations)
      if (ids.count(c.id)) kept.push_back(std::move(c));
    conversations = std::move(kept);
  }

  std::vector<TurnClassSets> predictions;
  std::string lines;
  for (const auto& conv : conversations) {
    TurnClassSets sets = predict_turns(model, conv);
    predictions.push_back(sets);
    for (std::size_t t = 0; t < sets.size(); ++t) {
      json classes = json::array();
      for (TurnClass c : kTurnClasses)
        if (sets[t].count(c)) classes.push_back(to_string(c));
      lines += json{{"conversation_id", conv.id},
                    {"turn", t},
                    {"classes", classes}}
                   .dump() +
               "\n";
    }
  }
  write_text(out, lines);

  if (!gold_path.empty()) {
    auto gold_sets = load_annotations(gold_path);
    auto gather = [&](const std::vector<AnnotationSet>& sets,
                      const Conversation& conv) {
      std::vector<const AnnotationSet*> mine;
      for (const auto& a : sets)
        if (a.conversation_id == conv.id) mine.push_back(&a);
      return project_spans_to_turns(mine, conv.turns.size());
    };
    std::vector<TurnClassSets> gold;
    for (const auto& conv : conversations) gold.push_back(gather(gold_sets, conv));

    std::vector<std::pair<std::string, TurnEval>> evals;
    evals.emplace_back("turn_model", eval_turns(predictions, gold));
    if (!project_path.empty()) {
      auto span_sets = load_annotations(project_path);
      std::vector<TurnClassSets> projected;
      for (const auto& conv : conversations)
        projected.push_back(gather(span_sets, conv));
      evals.emplace_back("span_projection", eval_turns(projected, gold));
    }
    std::string task_name =
        model.task ? to_string(*model.task) : std::string("all");
    write_text(report_out, render_turn_eval_csv(evals, task_name));
  }
  return 0;
}

// ---- errors ----

inline int cmd_errors_align(const std::string& ref_path, const std::string& pred_path,
                            const std::string& conversations_path,
                            const std::string& ref_labeler,
                            const std::string& pred_labeler,
                            const std::string& out) {
  auto conversations = load_conversations(conversations_path);
  auto refs = filter_labeler(load_annotations(ref_path), ref_labeler);
  auto preds = filter_labeler(load_annotations(pred_path), pred_labeler);
  auto ontologies = resolve_ontologies({});
  require_consistent(refs, conversations, ontologies);
  require_consistent(preds, conversations, ontologies);
  auto idx = index_conversations(conversations);

  std::map<std::pair<Task, std::string>,
           std::pair<const AnnotationSet*, const AnnotationSet*>>
      pairs;
  for (const auto& r : refs) pairs[{r.task, r.conversation_id}].first = &r;
  for (const auto& p : preds) pairs[{p.task, p.conversation_id}].second = &p;

  std::vector<ErrorRecord> records;
  for (const auto& [tc, slot] : pairs) {
    AnnotationSet empty;
    empty.conversation_id = tc.second;
    empty.task = tc.first;
    const AnnotationSet& r = slot.first ? *slot.first : empty;
    const AnnotationSet& p = slot.second ? *slot.second : empty;
    Alignment alignment = align_errors(r, p, *idx.at(tc.second));
    for (auto& rec : alignment.records) records.push_back(std::move(rec));
  }
  save_error_records(out, records);
  std::cerr << records.size() << " error records\n";
  return 0;
}

inline int cmd_errors_annotate(const std::string& records_path,
                               const std::string& record_id,
                               const std::string& cause_name,
                               const std::string& relevance_name,
                               const std::string& rater,
                               std::string timestamp, const std::string& out) {
  auto records = load_error_records(records_path);
  if (timestamp.empty()) timestamp = iso8601_utc_now();
  record_category(records, record_id, error_cause_from_string(cause_name),
                  clinical_relevance_from_string(relevance_name), rater,
                  timestamp);
  save_error_records(out.empty() ? records_path : out, records);
  return 0;
}

inline int cmd_errors_report(const std::string& records_path,
                             const std::string& format, const std::string& out) {
  auto records = load_error_records(records_path);
  ErrorAggregate agg = aggregate_report(records);

  if (format == "json") {
    json counts = json::object();
    for (const auto& [t, n] : agg.counts_by_type) counts[to_string(t)] = n;
    json causes = json::object();
    for (const auto& [c, p] : agg.cause_proportions) causes[to_string(c)] = p;
    json rel = json::object();
    for (const auto& [r, p] : agg.relevance_proportions) rel[to_string(r)] = p;
    json j = {{"counts_by_type", counts},
              {"cause_proportions", causes},
              {"relevance_proportions", rel},
              {"categorized", agg.categorized},
              {"uncategorized", agg.uncategorized}};
    write_text(out, j.dump(2) + "\n");
  } else {
    std::string text;
    text += "error counts by type\n";
    for (const auto& [t, n] : agg.counts_by_type)
      text += fmt("  %-13s %lld\n", to_string(t), n);
    text += fmt("categorized %lld, uncategorized %lld\n", agg.categorized,
                agg.uncategorized);
    if (agg.categorized) {
      text += "proportion by cause\n";
      for (const auto& [c, p] : agg.cause_proportions)
        text += fmt("  %-28s %.3f\n", to_string(c), p);
      text += "proportion by clinical relevance\n";
      for (const auto& [r, p] : agg.relevance_proportions)
        text += fmt("  %-28s %.3f\n", to_string(r), p);
    }
    write_text(out, text);
  }
  return 0;
}

// ---- stats ----

inline int cmd_stats(const std::string& annotations_path,
                     const std::string& conversations_path, bool unique,
                     const std::vector<std::string>& ontology_paths,
                     const std::string& format, const std::string& out) {
  auto annotations = load_annotations(annotations_path);
  auto ontologies = resolve_ontologies(ontology_paths);
  if (unique && conversations_path.empty())
    throw std::invalid_argument("stats: --unique needs --conversations");
  std::vector<Conversation> conversations;
  if (!conversations_path.empty())
    conversations = load_conversations(conversations_path);
  auto idx = index_conversations(conversations);

  struct Row {
    long long conversations = 0;
    long long entities = 0, attributes = 0, relations = 0;
    std::set<std::string> unique_entities, unique_attributes;
    long long unique_entities_per_conv = 0, unique_attributes_per_conv = 0;
  };
  std::map<Task, Row> rows;
  for (const auto& a : annotations) {
    Row& row = rows[a.task];
    row.conversations += 1;
    row.relations += static_cast<long long>(a.relations.size());
    const Ontology& onto = ontologies.at(a.task);
    std::set<std::string> conv_ent, conv_attr;
    for (const auto& s : a.spans) {
      TagKind kind = onto.kind(s.tag);
      std::string surface;
      if (unique) {
        auto cit = idx.find(a.conversation_id);
        if (cit != idx.end() &&
            s.turn_index < static_cast<int>(cit->second->turns.size())) {
          const auto& tokens = cit->second->turns[s.turn_index].tokens;
          std::vector<std::string> lowered;
          for (int t = s.start; t < s.end && t < static_cast<int>(tokens.size()); ++t)
            lowered.push_back(lowercase(tokens[t]));
          surface = join(lowered, " ");
        }
      }
      if (kind == TagKind::Attribute) {
        row.attributes += 1;
        if (unique) {
          conv_attr.insert(surface + "\x1f" + s.tag);
          row.unique_attributes.insert(surface + "\x1f" + s.tag);
        }
      } else {
        row.entities += 1;
        if (unique) {
          conv_ent.insert(surface + "\x1f" + composed_span_tag(s, true));
          row.unique_entities.insert(surface + "\x1f" + composed_span_tag(s, true));
        }
      }
    }
    row.unique_entities_per_conv += static_cast<long long>(conv_ent.size());
    row.unique_attributes_per_conv += static_cast<long long>(conv_attr.size());
  }

  if (format == "json") {
    json j = json::object();
    for (const auto& [task, row] : rows) {
      json jt = {{"conversations", row.conversations},
                 {"entities", row.entities},
                 {"attributes", row.attributes},
                 {"relations", row.relations}};
      if (row.conversations) {
        jt["entities_per_conversation"] =
            static_cast<double>(row.entities) / row.conversations;
        jt["attributes_per_conversation"] =
            static_cast<double>(row.attributes) / row.conversations;
        jt["relations_per_conversation"] =
            static_cast<double>(row.relations) / row.conversations;
      }
      if (unique) {
        jt["unique_entities"] = row.unique_entities.size();
        jt["unique_attributes"] = row.unique_attributes.size();
        if (row.conversations) {
          jt["unique_entities_per_conversation"] =
              static_cast<double>(row.unique_entities_per_conv) / row.conversations;
          jt["unique_attributes_per_conversation"] =
              static_cast<double>(row.unique_attributes_per_conv) /
              row.conversations;
        }
      }
      j[to_string(task)] = jt;
    }
    write_text(out, j.dump(2) + "\n");
  } else {
    std::string csv =
        unique ? "task,category,total,per_conversation,unique_per_conversation,"
                 "unique_corpus\n"
               : "task,category,total,per_conversation\n";
    for (const auto& [task, row] : rows) {
      double nc = row.conversations ? static_cast<double>(row.conversations) : 1.0;
      auto line = [&](const char* cat, long long total, long long uniq_pc,
                      std::size_t uniq_corpus, bool has_unique) {
        if (unique && has_unique)
          csv += fmt("%s,%s,%lld,%.3f,%.3f,%zu\n", to_string(task), cat, total,
                     total / nc, uniq_pc / nc, uniq_corpus);
        else if (unique)
          csv += fmt("%s,%s,%lld,%.3f,,\n", to_string(task), cat, total, total / nc);
        else
          csv += fmt("%s,%s,%lld,%.3f\n", to_string(task), cat, total, total / nc);
      };
      line("entities", row.entities, row.unique_entities_per_conv,
           row.unique_entities.size(), true);
      line("attributes", row.attributes, row.unique_attributes_per_conv,
           row.unique_attributes.size(), true);
      line("relations", row.relations, 0, 0, false);
    }
    write_text(out, csv);
  }
  return 0;
}

}  // namespace cli

inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"annotation adjudication, scoring, and analysis toolkit for "
               "two-party clinical conversations"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  struct {
    std::string out;
    std::uint64_t seed = 1;
    int train = 100, dev = 10, test = 10;
    int min_turns = 6, max_turns = 14;
    int labelers = 3;
    NoiseConfig noise;
  } sy;
  synth->add_option("--out", sy.out, "output directory")->required();
  synth->add_option("--seed", sy.seed, "random seed");
  synth->add_option("--train", sy.train, "train conversations");
  synth->add_option("--dev", sy.dev, "dev conversations");
  synth->add_option("--test", sy.test, "test conversations");
  synth->add_option("--min-turns", sy.min_turns, "min turns per conversation");
  synth->add_option("--max-turns", sy.max_turns, "max turns per conversation");
  synth->add_option("--labelers", sy.labelers, "simulated labelers (0 = none)");
  synth->add_option("--p-miss", sy.noise.p_miss, "span miss probability");
  synth->add_option("--jitter", sy.noise.jitter, "max boundary shift");
  synth->add_option("--p-conf", sy.noise.p_conf, "tag confusion probability");
  synth->add_option("--p-flip", sy.noise.p_flip, "status flip probability");

  // validate
  auto* validate = app.add_subcommand("validate", "run validation rules");
  struct {
    std::string annotations, conversations, out;
    std::vector<std::string> ontologies;
  } va;
  validate->add_option("--annotations", va.annotations)->required();
  validate->add_option("--conversations", va.conversations)->required();
  validate->add_option("--ontology", va.ontologies, "ontology file (repeatable)");
  validate->add_option("--out", va.out, "violations JSONL (default stdout)");

  // vote
  auto* vote = app.add_subcommand("vote", "build the voted reference");
  struct {
    std::string annotations, conversations, out, senior;
    double alpha = 1.0;
    int workers = 1;
  } vo;
  vote->add_option("--annotations", vo.annotations)->required();
  vote->add_option("--conversations", vo.conversations)->required();
  vote->add_option("--out", vo.out)->required();
  vote->add_option("--senior", vo.senior, "labeler whose relations pass through");
  vote->add_option("--alpha", vo.alpha, "transition smoothing");
  vote->add_option("--workers", vo.workers, "worker threads (1 = sequential)");

  // score
  auto* score = app.add_subcommand("score", "score predictions against a reference");
  struct {
    std::string ref, pred, conversations;
    std::string mode = "relaxed", granularity = "span", key = "tag_plus_status";
    std::string ref_labeler, pred_labeler, format = "table", out;
    bool per_label = false;
    int workers = 1;
  } sc;
  score->add_option("--ref", sc.ref)->required();
  score->add_option("--pred", sc.pred)->required();
  score->add_option("--conversations", sc.conversations)->required();
  score->add_option("--mode", sc.mode)->check(CLI::IsMember({"relaxed", "strict"}));
  score->add_option("--granularity", sc.granularity)
      ->check(CLI::IsMember({"span", "conversation_set", "relations"}));
  score->add_option("--key", sc.key)
      ->check(CLI::IsMember({"tag", "tag_plus_status"}));
  score->add_option("--ref-labeler", sc.ref_labeler);
  score->add_option("--pred-labeler", sc.pred_labeler);
  score->add_flag("--per-label", sc.per_label, "include per-label rows");
  score->add_option("--format", sc.format)
      ->check(CLI::IsMember({"table", "json", "csv"}));
  score->add_option("--out", sc.out, "output file (default stdout)");
  score->add_option("--workers", sc.workers, "worker threads (1 = sequential)");

  // kappa
  auto* kappa = app.add_subcommand("kappa", "inter-labeler agreement");
  struct {
    std::string annotations, conversations, format = "csv", out;
    std::vector<std::string> ontologies;
  } ka;
  kappa->add_option("--annotations", ka.annotations)->required();
  kappa->add_option("--conversations", ka.conversations)->required();
  kappa->add_option("--ontology", ka.ontologies, "ontology file (repeatable)");
  kappa->add_option("--format", ka.format)->check(CLI::IsMember({"csv", "json"}));
  kappa->add_option("--out", ka.out, "output file (default stdout)");

  // qa
  auto* qa = app.add_subcommand("qa", "score labelers against a reference set");
  struct {
    std::string annotations, reference, conversations, format = "csv", out;
    int select = 0;
  } qo;
  qa->add_option("--annotations", qo.annotations)->required();
  qa->add_option("--reference", qo.reference)->required();
  qa->add_option("--conversations", qo.conversations)->required();
  qa->add_option("--select", qo.select, "pick top-k reviewers");
  qa->add_option("--format", qo.format)->check(CLI::IsMember({"csv", "json"}));
  qa->add_option("--out", qo.out, "output file (default stdout)");

  // prune
  auto* prune_cmd = app.add_subcommand("prune", "prune low-quality entity tags");
  struct {
    std::string ontology, annotations, conversations, out, remap_out, apply_out;
    long long min_count = 1;
    double min_kappa = 0.0;
  } pr;
  prune_cmd->add_option("--ontology", pr.ontology)->required();
  prune_cmd->add_option("--annotations", pr.annotations)->required();
  prune_cmd->add_option("--conversations", pr.conversations)->required();
  prune_cmd->add_option("--min-count", pr.min_count)->required();
  prune_cmd->add_option("--min-kappa", pr.min_kappa)->required();
  prune_cmd->add_option("--out", pr.out, "pruned ontology file")->required();
  prune_cmd->add_option("--remap-out", pr.remap_out, "tag remap JSON");
  prune_cmd->add_option("--apply", pr.apply_out, "write remapped annotations here");

  // suggest
  auto* suggest_cmd = app.add_subcommand("suggest", "dictionary span suggestions");
  struct {
    std::string conversations, lexicon, task, split, out;
  } su;
  suggest_cmd->add_option("--conversations", su.conversations)->required();
  suggest_cmd->add_option("--lexicon", su.lexicon)->required();
  suggest_cmd->add_option("--task", su.task)
      ->required()
      ->check(CLI::IsMember({"symptoms", "medications", "conditions"}));
  suggest_cmd->add_option("--split", su.split,
                          "split manifest; restricts suggestions to train");
  suggest_cmd->add_option("--out", su.out)->required();

  // train-tagger
  auto* train_tagger_cmd = app.add_subcommand("train-tagger", "train the span tagger");
  struct {
    std::string conversations, annotations, task, labeler = "GOLD";
    std::string filter = "all", split, out;
    std::vector<std::string> ontologies;
    int epochs = 10;
    std::uint64_t seed = 1;
  } tt;
  train_tagger_cmd->add_option("--conversations", tt.conversations)->required();
  train_tagger_cmd->add_option("--annotations", tt.annotations)->required();
  train_tagger_cmd->add_option("--task", tt.task)
      ->required()
      ->check(CLI::IsMember({"symptoms", "medications", "conditions"}));
  train_tagger_cmd->add_option("--epochs", tt.epochs);
  train_tagger_cmd->add_option("--seed", tt.seed);
  train_tagger_cmd->add_option("--labeler", tt.labeler, "gold labeler id");
  train_tagger_cmd->add_option("--task-filter", tt.filter)
      ->check(CLI::IsMember({"all", "entities", "attributes"}));
  train_tagger_cmd->add_option("--split", tt.split, "train on the train subset only");
  train_tagger_cmd->add_option("--ontology", tt.ontologies, "ontology file (repeatable)");
  train_tagger_cmd->add_option("--out", tt.out)->required();

  // tag
  auto* tag_cmd = app.add_subcommand("tag", "predict spans with a trained model");
  struct {
    std::string model, conversations, split, subset = "dev", out;
    int workers = 1;
  } tg;
  tag_cmd->add_option("--model", tg.model)->required();
  tag_cmd->add_option("--conversations", tg.conversations)->required();
  tag_cmd->add_option("--split", tg.split, "split manifest to filter by");
  tag_cmd->add_option("--subset", tg.subset)
      ->check(CLI::IsMember({"train", "dev", "test"}));
  tag_cmd->add_option("--out", tg.out)->required();
  tag_cmd->add_option("--workers", tg.workers, "worker threads (1 = sequential)");

  // train-turns
  auto* train_turns_cmd =
      app.add_subcommand("train-turns", "train the turn-level attribute detector");
  struct {
    std::string conversations, merge = "all_tasks", task, split, out;
    std::vector<std::string> annotations;
    int epochs = 10;
    std::uint64_t seed = 1;
  } tu;
  train_turns_cmd->add_option("--conversations", tu.conversations)->required();
  train_turns_cmd->add_option("--annotations", tu.annotations)
      ->required()
      ->expected(-1);
  train_turns_cmd->add_option("--epochs", tu.epochs);
  train_turns_cmd->add_option("--seed", tu.seed);
  train_turns_cmd->add_option("--merge", tu.merge)
      ->check(CLI::IsMember({"all_tasks", "per_task"}));
  train_turns_cmd->add_option("--task", tu.task,
                              "task for per_task merge")
      ->check(CLI::IsMember({"symptoms", "medications", "conditions"}));
  train_turns_cmd->add_option("--split", tu.split, "train on the train subset only");
  train_turns_cmd->add_option("--out", tu.out)->required();

  // detect-turns
  auto* detect_cmd = app.add_subcommand("detect-turns", "turn-level detection");
  struct {
    std::string model, conversations, split, subset = "dev", gold, project, out;
    std::string report;
    double threshold = 0.0;
  } dt;
  detect_cmd->add_option("--model", dt.model)->required();
  detect_cmd->add_option("--conversations", dt.conversations)->required();
  detect_cmd->add_option("--split", dt.split);
  detect_cmd->add_option("--subset", dt.subset)
      ->check(CLI::IsMember({"train", "dev", "test"}));
  detect_cmd->add_option("--gold", dt.gold, "gold annotations for evaluation");
  detect_cmd->add_option("--project", dt.project,
                         "span predictions to project for comparison");
  detect_cmd->add_option("--out", dt.out, "per-turn predictions JSONL")->required();
  detect_cmd->add_option("--report", dt.report, "evaluation CSV (default stdout)");
  auto* threshold_opt = detect_cmd->add_option(
      "--threshold", dt.threshold,
      "decision threshold for every class (default: the model's)");

  // errors
  auto* errors = app.add_subcommand("errors", "error record management");
  errors->require_subcommand(1);
  auto* err_align = errors->add_subcommand("align", "align predictions to reference");
  struct {
    std::string ref, pred, conversations, ref_labeler, pred_labeler, out;
  } ea;
  err_align->add_option("--ref", ea.ref)->required();
  err_align->add_option("--pred", ea.pred)->required();
  err_align->add_option("--conversations", ea.conversations)->required();
  err_align->add_option("--ref-labeler", ea.ref_labeler);
  err_align->add_option("--pred-labeler", ea.pred_labeler);
  err_align->add_option("--out", ea.out)->required();

  auto* err_annotate = errors->add_subcommand("annotate", "categorize one record");
  struct {
    std::string records, record_id, cause, relevance, rater, timestamp, out;
  } en;
  err_annotate->add_option("--records", en.records)->required();
  err_annotate->add_option("--record-id", en.record_id)->required();
  err_annotate->add_option("--cause", en.cause)->required();
  err_annotate->add_option("--relevance", en.relevance)->required();
  err_annotate->add_option("--rater", en.rater)->required();
  err_annotate->add_option("--timestamp", en.timestamp,
                           "ISO-8601; defaults to the current time");
  err_annotate->add_option("--out", en.out, "output file (default: in place)");

  auto* err_report = errors->add_subcommand("report", "aggregate categorized records");
  struct {
    std::string records, format = "table", out;
  } er;
  err_report->add_option("--records", er.records)->required();
  err_report->add_option("--format", er.format)
      ->check(CLI::IsMember({"table", "json"}));
  err_report->add_option("--out", er.out, "output file (default stdout)");

  // stats
  auto* stats = app.add_subcommand("stats", "label count statistics");
  struct {
    std::string annotations, conversations, format = "csv", out;
    std::vector<std::string> ontologies;
    bool unique = false;
  } st;
  stats->add_option("--annotations", st.annotations)->required();
  stats->add_option("--conversations", st.conversations);
  stats->add_flag("--unique", st.unique, "also count unique span surfaces");
  stats->add_option("--ontology", st.ontologies, "ontology file (repeatable)");
  stats->add_option("--format", st.format)->check(CLI::IsMember({"csv", "json"}));
  stats->add_option("--out", st.out, "output file (default stdout)");

  std::vector<const char*> argv;
  argv.push_back("dialanno");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth)
      return cli::cmd_synth(sy.out, sy.seed, sy.train, sy.dev, sy.test,
                            sy.min_turns, sy.max_turns, sy.labelers, sy.noise);
    if (*validate)
      return cli::cmd_validate(va.annotations, va.conversations, va.ontologies,
                               va.out);
    if (*vote)
      return cli::cmd_vote(vo.annotations, vo.conversations, vo.out, vo.senior,
                           vo.alpha, vo.workers);
    if (*score)
      return cli::cmd_score(sc.ref, sc.pred, sc.conversations, sc.mode,
                            sc.granularity, sc.key, sc.ref_labeler,
                            sc.pred_labeler, sc.per_label, sc.format, sc.out,
                            sc.workers);
    if (*kappa)
      return cli::cmd_kappa(ka.annotations, ka.conversations, ka.ontologies,
                            ka.format, ka.out);
    if (*qa)
      return cli::cmd_qa(qo.annotations, qo.reference, qo.conversations,
                         qo.select, qo.format, qo.out);
    if (*prune_cmd)
      return cli::cmd_prune(pr.ontology, pr.annotations, pr.conversations,
                            pr.min_count, pr.min_kappa, pr.out, pr.remap_out,
                            pr.apply_out);
    if (*suggest_cmd)
      return cli::cmd_suggest(su.conversations, su.lexicon, su.task, su.split,
                              su.out);
    if (*train_tagger_cmd)
      return cli::cmd_train_tagger(tt.conversations, tt.annotations, tt.task,
                                   tt.epochs, tt.seed, tt.labeler, tt.filter,
                                   tt.split, tt.ontologies, tt.out);
    if (*tag_cmd)
      return cli::cmd_tag(tg.model, tg.conversations, tg.split, tg.subset,
                          tg.out, tg.workers);
    if (*train_turns_cmd)
      return cli::cmd_train_turns(tu.conversations, tu.annotations, tu.epochs,
                                  tu.seed, tu.merge, tu.task, tu.split, tu.out);
    if (*detect_cmd)
      return cli::cmd_detect_turns(
          dt.model, dt.conversations, dt.split, dt.subset, dt.gold, dt.project,
          dt.out, dt.report,
          threshold_opt->count() ? std::optional<double>(dt.threshold)
                                 : std::nullopt);
    if (*errors) {
      if (*err_align)
        return cli::cmd_errors_align(ea.ref, ea.pred, ea.conversations,
                                     ea.ref_labeler, ea.pred_labeler, ea.out);
      if (*err_annotate)
        return cli::cmd_errors_annotate(en.records, en.record_id, en.cause,
                                        en.relevance, en.rater, en.timestamp,
                                        en.out);
      if (*err_report)
        return cli::cmd_errors_report(er.records, er.format, er.out);
    }
    if (*stats)
      return cli::cmd_stats(st.annotations, st.conversations, st.unique,
                            st.ontologies, st.format, st.out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dialanno
