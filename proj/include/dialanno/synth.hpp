// Synthetic conversation generator and noisy-labeler simulator. Utterance
// templates carry gold span markup inline: "[surface](key|tag|status)" marks
// a span, "[*](key|tag|status)" samples a surface from the tag's ontology
// aliases, and template-level relations reference the keys. The noise
// channels mirror the disagreement patterns real labelers produce: whole-span
// misses, one-token boundary jitter, within-system tag confusion, and status
// flips.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dialanno/io.hpp"
#include "dialanno/ontology.hpp"
#include "dialanno/rng.hpp"
#include "dialanno/types.hpp"
#include "dialanno/util.hpp"

namespace dialanno {

struct TemplateSlot {
  std::string key;
  std::string tag;
  std::optional<std::string> status;
  std::vector<std::string> surface;  // empty when sampled from aliases
  bool sample_alias = false;
};

struct TemplateTurn {
  Speaker speaker = Speaker::PT;
  struct Part {
    std::string token;  // literal token when slot is unset
    std::optional<TemplateSlot> slot;
  };
  std::vector<Part> parts;
};

struct ConversationTemplate {
  Task task = Task::Symptoms;
  std::vector<TemplateTurn> turns;
  std::vector<std::pair<std::string, std::string>> relations;  // key pairs
};

// Parses "text with [a span](key|tag|status) markup" into template parts.
inline TemplateTurn parse_template_turn(Speaker speaker, const std::string& text) {
  TemplateTurn turn;
  turn.speaker = speaker;
  std::size_t pos = 0;
  auto flush_literal = [&](const std::string& chunk) {
    for (auto& tok : split_ws(chunk)) turn.parts.push_back({tok, std::nullopt});
  };
  while (pos < text.size()) {
    std::size_t open = text.find('[', pos);
    if (open == std::string::npos) {
      flush_literal(text.substr(pos));
      break;
    }
    flush_literal(text.substr(pos, open - pos));
    std::size_t close = text.find(']', open);
    if (close == std::string::npos)
      throw std::invalid_argument("template markup: unterminated '[' in: " + text);
    if (close + 1 >= text.size() || text[close + 1] != '(')
      throw std::invalid_argument("template markup: '[...]' without '(...)' in: " +
                                  text);
    std::size_t spec_end = text.find(')', close + 2);
    if (spec_end == std::string::npos)
      throw std::invalid_argument("template markup: unterminated '(' in: " + text);

    std::string surface = text.substr(open + 1, close - open - 1);
    std::string spec = text.substr(close + 2, spec_end - close - 2);
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t bar = spec.find('|', start);
      if (bar == std::string::npos) {
        fields.push_back(spec.substr(start));
        break;
      }
      fields.push_back(spec.substr(start, bar - start));
      start = bar + 1;
    }
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty())
      throw std::invalid_argument("template markup: need (key|tag[|status]) in: " +
                                  text);
    TemplateSlot slot;
    slot.key = fields[0];
    slot.tag = fields[1];
    if (fields.size() >= 3 && !fields[2].empty()) slot.status = fields[2];
    if (surface == "*") {
      slot.sample_alias = true;
    } else {
      slot.surface = split_ws(surface);
      if (slot.surface.empty())
        throw std::invalid_argument("template markup: empty span surface in: " +
                                    text);
    }
    TemplateTurn::Part part;
    part.slot = std::move(slot);
    turn.parts.push_back(std::move(part));
    pos = spec_end + 1;
  }
  return turn;
}

inline ConversationTemplate make_template(
    Task task,
    const std::vector<std::pair<Speaker, std::string>>& marked_turns,
    const std::vector<std::pair<std::string, std::string>>& relations) {
  ConversationTemplate t;
  t.task = task;
  std::set<std::string> keys;
  for (const auto& [speaker, text] : marked_turns) {
    t.turns.push_back(parse_template_turn(speaker, text));
    for (const auto& part : t.turns.back().parts)
      if (part.slot) keys.insert(part.slot->key);
  }
  for (const auto& [a, b] : relations)
    if (!keys.count(a) || !keys.count(b))
      throw std::invalid_argument("template markup: relation references unknown key " +
                                  a + "~" + b);
  t.relations = relations;
  return t;
}

// Hand-written exchanges covering every attribute class, both statuses, and
// all three tasks.
inline std::vector<ConversationTemplate> default_templates() {
  using P = std::pair<Speaker, std::string>;
  std::vector<ConversationTemplate> out;

  // symptoms
  out.push_back(make_template(
      Task::Symptoms,
      {P{Speaker::PT,
         "I have been having [stomach issues](e1|GI:Other|Experienced) for the "
         "last [2 weeks](a1|Property:Duration|) . It is "
         "[bad](a2|Property:Severity/Amount|) ."},
       P{Speaker::DR,
         "Okay , in the [upper abdomen](a3|Property:Location|) . What does it "
         "feel like ?"},
       P{Speaker::PT,
         "It [comes and goes](a4|Property:Frequency|) and "
         "[hurts](e2|GI:Abdominal Pain|Experienced) . "
         "[Sometimes](a5|Property:Frequency|) I feel "
         "[queasy](e3|GI:Nausea|Experienced) ."}},
      {{"e1", "a1"}, {"e1", "a2"}, {"e1", "a3"}, {"e2", "a4"}, {"e3", "a5"}}));
  out.push_back(make_template(
      Task::Symptoms,
      {P{Speaker::DR,
         "Any [fever](e1|Const:Fever|Not Experienced) or "
         "[chills](e2|Const:Chills|Not Experienced) ?"},
       P{Speaker::PT,
         "No , but I get a [headache](e3|Neuro:Headache|Experienced) "
         "[every night](a1|Property:Frequency|) . "
         "[Resting](a2|Property:Alleviating Factor|) helps ."}},
      {{"e3", "a1"}, {"e3", "a2"}}));
  out.push_back(make_template(
      Task::Symptoms,
      {P{Speaker::PT,
         "I feel [dizzy](e1|Neuro:Dizziness|Experienced) "
         "[when I stand up](a1|Property:Provoking Factor|) ."},
       P{Speaker::DR, "How long has that been going on ?"},
       P{Speaker::PT,
         "About [three days](a2|Property:Duration|) . It is "
         "[mild](a3|Property:Severity/Amount|) ."}},
      {{"e1", "a1"}, {"e1", "a2"}, {"e1", "a3"}}));
  out.push_back(make_template(
      Task::Symptoms,
      {P{Speaker::DR, "Any trouble breathing ?"},
       P{Speaker::PT,
         "It gets [hard to breathe](e1|Resp:Shortness of Breath|Experienced) "
         "[when I climb stairs](a1|Property:Provoking Factor|) . "
         "[Sitting down](a2|Property:Alleviating Factor|) helps ."}},
      {{"e1", "a1"}, {"e1", "a2"}}));
  out.push_back(make_template(
      Task::Symptoms,
      {P{Speaker::PT,
         "My [back aches](e1|MSK:Back Pain|Experienced) in the "
         "[lower back](a1|Property:Location|) , "
         "[really bad](a2|Property:Severity/Amount|) ."}},
      {{"e1", "a1"}, {"e1", "a2"}}));
  out.push_back(make_template(
      Task::Symptoms,
      {P{Speaker::PT,
         "I have been [*](e1|GI:Nausea|Experienced) "
         "[off and on](a1|Property:Frequency|) ."}},
      {{"e1", "a1"}}));
  out.push_back(make_template(
      Task::Symptoms,
      {P{Speaker::DR, "Any [seizures](e1|Neuro:Seizure|Not Experienced) ?"},
       P{Speaker::PT, "No , never ."}},
      {}));

  // medications
  out.push_back(make_template(
      Task::Medications,
      {P{Speaker::DR, "Are you taking any [diabetes medication](e1|Drug|) ?"},
       P{Speaker::PT, "My kidney doctor just changed [the pill](a1|Property:Mode|) ."},
       P{Speaker::DR,
         "Oh , like [Amaryl](e2|Drug|) ? The generic name is "
         "[glimepiride](e3|Drug|) ."},
       P{Speaker::PT,
         "Yup , she started me on [1mg](a2|Property:Dose|) "
         "[everyday](a3|Property:Frequency|) ."}},
      {{"e1", "a1"}, {"e3", "a2"}, {"e3", "a3"}}));
  out.push_back(make_template(
      Task::Medications,
      {P{Speaker::DR, "Do you use [insulin](e1|Drug|) ?"},
       P{Speaker::PT, "[The shot](a1|Property:Mode|) ? Only my brother does ."}},
      {{"e1", "a1"}}));
  out.push_back(make_template(
      Task::Medications,
      {P{Speaker::PT,
         "I take [metformin](e1|Drug|) [twice a day](a1|Property:Frequency|) , "
         "[500 mg](a2|Property:Dose|) each time ."}},
      {{"e1", "a1"}, {"e1", "a2"}}));
  out.push_back(make_template(
      Task::Medications,
      {P{Speaker::DR,
         "I will give you a [90 day](a1|Property:Quantity|) supply of "
         "[lisinopril](e1|Drug|) , [10 mg](a2|Property:Dose|) "
         "[daily](a3|Property:Frequency|) ."}},
      {{"e1", "a1"}, {"e1", "a2"}, {"e1", "a3"}}));
  out.push_back(make_template(
      Task::Medications,
      {P{Speaker::PT,
         "I took [tylenol](e1|Drug|) for [two weeks](a1|Property:Duration|) "
         "after the surgery ."}},
      {{"e1", "a1"}}));
  out.push_back(make_template(
      Task::Medications,
      {P{Speaker::PT,
         "I ran out of [the pain medication](e1|Drug|) last month ."}},
      {}));

  // conditions
  out.push_back(make_template(
      Task::Conditions,
      {P{Speaker::DR, "Any history of [diabetes](e1|Condition:Patient|Experienced) ?"},
       P{Speaker::PT, "I have [diabetes](e2|Condition:Patient|Experienced) ."},
       P{Speaker::DR, "When was that diagnosed ?"},
       P{Speaker::PT, "[10 years ago](a1|Property:Onset/Diagnosis|) ."},
       P{Speaker::DR,
         "And it seems [well controlled](a2|Property:Severity/Amount|) . Any "
         "[high blood pressure](e3|Condition:Family History|Experienced) in "
         "the family ?"},
       P{Speaker::PT,
         "My brother has [early onset](a3|Property:Onset/Diagnosis|) "
         "[high blood pressure](e4|Condition:Family History|Experienced) ."}},
      {{"e2", "a1"}, {"e2", "a2"}, {"e4", "a3"}}));
  out.push_back(make_template(
      Task::Conditions,
      {P{Speaker::DR, "Any [asthma](e1|Condition:Patient|Not Experienced) ?"},
       P{Speaker::PT,
         "No . My mother had [migraines](e2|Condition:Family History|Experienced) "
         "[for years](a1|Property:Duration|) ."}},
      {{"e2", "a1"}}));
  out.push_back(make_template(
      Task::Conditions,
      {P{Speaker::PT,
         "They found [high cholesterol](e1|Condition:Patient|Experienced) "
         "[last spring](a1|Property:Onset/Diagnosis|) ."}},
      {{"e1", "a1"}}));
  out.push_back(make_template(
      Task::Conditions,
      {P{Speaker::PT,
         "The [arthritis](e1|Condition:Patient|Experienced) flares "
         "[in my hands](a1|Property:Location|) "
         "[in cold weather](a2|Property:Provoking Factor|) ."}},
      {{"e1", "a1"}, {"e1", "a2"}}));

  return out;
}

inline std::vector<std::pair<Speaker, std::string>> default_filler_turns() {
  return {
      {Speaker::DR, "Okay ."},
      {Speaker::DR, "I see ."},
      {Speaker::PT, "Alright ."},
      {Speaker::DR, "Let me write that down ."},
      {Speaker::PT, "Thank you ."},
      {Speaker::DR, "Anything else ?"},
      {Speaker::PT, "That is all ."},
  };
}

struct NoiseConfig {
  double p_miss = 0.1;   // drop a span entirely
  int jitter = 1;        // max token shift per span edge
  double p_conf = 0.05;  // confuse an entity tag within its organ system
  double p_flip = 0.05;  // flip a status to another allowed value
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int n_train = 100;
  int n_dev = 10;
  int n_test = 10;
  int min_turns = 6;
  int max_turns = 14;
  std::vector<ConversationTemplate> templates = default_templates();
  std::vector<std::pair<Speaker, std::string>> fillers = default_filler_turns();
  NoiseConfig noise;
  int labelers = 3;
};

struct SynthCorpus {
  std::vector<Conversation> conversations;
  std::vector<AnnotationSet> gold;  // labeler_id GOLD, one set per (conv, task)
  Split split;
  std::map<std::string, std::string> providers;  // conversation id -> provider
};

namespace detail {

struct Instantiation {
  std::vector<Turn> turns;
  std::vector<LabeledSpan> spans;  // span_id left empty; filled by caller
  std::vector<std::pair<int, int>> relations;  // indices into spans
};

inline Instantiation instantiate(const ConversationTemplate& tmpl,
                                 const Ontology& ontology, Rng& rng) {
  Instantiation inst;
  std::map<std::string, int> key_to_span;
  for (std::size_t ti = 0; ti < tmpl.turns.size(); ++ti) {
    Turn turn;
    turn.speaker = tmpl.turns[ti].speaker;
    for (const auto& part : tmpl.turns[ti].parts) {
      if (!part.slot) {
        turn.tokens.push_back(part.token);
        continue;
      }
      const TemplateSlot& slot = *part.slot;
      std::vector<std::string> surface = slot.surface;
      if (slot.sample_alias) {
        const OntologyEntity* e = ontology.entity(slot.tag);
        if (!e || e->aliases.empty())
          throw std::invalid_argument("template markup: no aliases for tag " +
                                      slot.tag);
        surface = split_ws(rng.pick(e->aliases));
      }
      LabeledSpan span;
      span.turn_index = static_cast<int>(ti);
      span.start = static_cast<int>(turn.tokens.size());
      span.end = span.start + static_cast<int>(surface.size());
      span.tag = slot.tag;
      span.status = slot.status;
      key_to_span[slot.key] = static_cast<int>(inst.spans.size());
      inst.spans.push_back(span);
      for (auto& tok : surface) turn.tokens.push_back(tok);
    }
    inst.turns.push_back(std::move(turn));
  }
  for (const auto& [a, b] : tmpl.relations)
    inst.relations.emplace_back(key_to_span.at(a), key_to_span.at(b));
  return inst;
}

}  // namespace detail

// Deterministic corpus: given the same config, every byte of output is
// identical. Dev and test conversations draw from disjoint provider pools.
inline SynthCorpus generate_corpus(const SynthConfig& config,
                                   const std::map<Task, Ontology>& ontologies) {
  if (config.min_turns < 1 || config.max_turns < config.min_turns)
    throw std::invalid_argument("generate_corpus: bad turn range");
  if (config.templates.empty())
    throw std::invalid_argument("generate_corpus: no templates");
  for (const auto& t : config.templates)
    if (static_cast<int>(t.turns.size()) > config.max_turns)
      throw std::invalid_argument("generate_corpus: template longer than max_turns");

  SynthCorpus corpus;
  Rng root(config.seed);
  const int total = config.n_train + config.n_dev + config.n_test;

  for (int ci = 0; ci < total; ++ci) {
    std::string split_name = ci < config.n_train ? "tr"
                             : ci < config.n_train + config.n_dev ? "dv"
                                                                  : "te";
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "%s%05d", split_name.c_str(), ci);
    Conversation conv;
    conv.id = idbuf;

    Rng rng = root.derive(static_cast<std::uint64_t>(ci));
    const int target =
        static_cast<int>(rng.uniform_int(config.min_turns, config.max_turns));

    std::map<Task, std::vector<LabeledSpan>> spans_by_task;
    std::map<Task, std::vector<std::pair<int, int>>> rels_by_task;

    while (static_cast<int>(conv.turns.size()) < target) {
      const int remaining = target - static_cast<int>(conv.turns.size());
      std::vector<const ConversationTemplate*> fitting;
      for (const auto& t : config.templates)
        if (static_cast<int>(t.turns.size()) <= remaining) fitting.push_back(&t);
      if (fitting.empty() || rng.bernoulli(0.35)) {
        const auto& [speaker, text] = config.fillers[rng.below(config.fillers.size())];
        Turn turn;
        turn.speaker = speaker;
        turn.tokens = split_ws(text);
        conv.turns.push_back(std::move(turn));
        continue;
      }
      const ConversationTemplate* tmpl = fitting[rng.below(fitting.size())];
      auto oit = ontologies.find(tmpl->task);
      if (oit == ontologies.end())
        throw std::invalid_argument("generate_corpus: missing ontology for task");
      detail::Instantiation inst = detail::instantiate(*tmpl, oit->second, rng);
      const int offset = static_cast<int>(conv.turns.size());
      auto& spans = spans_by_task[tmpl->task];
      auto& rels = rels_by_task[tmpl->task];
      const int base = static_cast<int>(spans.size());
      for (auto span : inst.spans) {
        span.turn_index += offset;
        spans.push_back(span);
      }
      for (const auto& [a, b] : inst.relations)
        rels.emplace_back(base + a, base + b);
      for (auto& turn : inst.turns) conv.turns.push_back(std::move(turn));
    }

    for (auto& [task, spans] : spans_by_task) {
      AnnotationSet gold;
      gold.conversation_id = conv.id;
      gold.labeler_id = "GOLD";
      gold.task = task;
      for (std::size_t si = 0; si < spans.size(); ++si) {
        spans[si].span_id = "g" + std::to_string(si);
        gold.spans.push_back(spans[si]);
      }
      for (const auto& [a, b] : rels_by_task[task])
        gold.relations.emplace_back(gold.spans[a].span_id, gold.spans[b].span_id);
      corpus.gold.push_back(std::move(gold));
    }

    if (split_name == "tr") {
      corpus.split.train.push_back(conv.id);
      corpus.providers[conv.id] = "prov_tr" + std::to_string(ci % 8);
    } else if (split_name == "dv") {
      corpus.split.dev.push_back(conv.id);
      corpus.providers[conv.id] = "prov_dv" + std::to_string(ci % 3);
    } else {
      corpus.split.test.push_back(conv.id);
      corpus.providers[conv.id] = "prov_te" + std::to_string(ci % 3);
    }
    corpus.conversations.push_back(std::move(conv));
  }
  return corpus;
}

inline SynthCorpus generate_corpus(const SynthConfig& config) {
  std::map<Task, Ontology> ontologies;
  for (Task t : kAllTasks) ontologies.emplace(t, default_ontology(t));
  return generate_corpus(config, ontologies);
}

// One noisy view of a gold annotation. Spans are processed left to right;
// jittered boundaries are clipped to the turn and to the previous placed
// span, so the output still cross-validates.
inline AnnotationSet simulate_labeler(const AnnotationSet& gold,
                                      const Conversation& conversation,
                                      const NoiseConfig& noise,
                                      const Ontology& ontology, Rng& rng,
                                      const std::string& labeler_id) {
  AnnotationSet out;
  out.conversation_id = gold.conversation_id;
  out.labeler_id = labeler_id;
  out.task = gold.task;

  std::vector<LabeledSpan> ordered = gold.spans;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const LabeledSpan& a, const LabeledSpan& b) {
                     if (a.turn_index != b.turn_index)
                       return a.turn_index < b.turn_index;
                     return a.start < b.start;
                   });

  std::set<std::string> kept;
  int cursor_turn = -1;
  int cursor = 0;
  for (const auto& span : ordered) {
    if (rng.bernoulli(noise.p_miss)) continue;
    if (span.turn_index != cursor_turn) {
      cursor_turn = span.turn_index;
      cursor = 0;
    }
    const int turn_len =
        static_cast<int>(conversation.turns[span.turn_index].tokens.size());
    int s = span.start, e = span.end;
    if (noise.jitter > 0) {
      s += static_cast<int>(rng.uniform_int(-noise.jitter, noise.jitter));
      e += static_cast<int>(rng.uniform_int(-noise.jitter, noise.jitter));
    }
    s = std::max(s, cursor);
    e = std::min(e, turn_len);
    if (s >= turn_len) continue;  // squeezed out entirely
    if (e <= s) e = s + 1;
    LabeledSpan placed = span;
    placed.start = s;
    placed.end = e;
    cursor = e;

    const OntologyEntity* ent = ontology.entity(placed.tag);
    if (ent && ent->system && rng.bernoulli(noise.p_conf)) {
      std::vector<std::string> same_system;
      for (const auto& other : ontology.entities)
        if (other.system == ent->system && other.tag != placed.tag)
          same_system.push_back(other.tag);
      if (!same_system.empty()) placed.tag = rng.pick(same_system);
    }
    if (placed.status && ontology.statuses.size() > 1 &&
        rng.bernoulli(noise.p_flip)) {
      std::vector<std::string> others;
      for (const auto& st : ontology.statuses)
        if (st != *placed.status) others.push_back(st);
      placed.status = rng.pick(others);
    }
    kept.insert(placed.span_id);
    out.spans.push_back(std::move(placed));
  }
  for (const auto& rel : gold.relations)
    if (kept.count(rel.first) && kept.count(rel.second))
      out.relations.push_back(rel);
  return out;
}

// K independent noisy labelers (L1..LK) over every gold set. The random
// stream is derived per (conversation, task, labeler), so output does not
// depend on iteration order.
inline std::vector<AnnotationSet> simulate_labelers(
    const SynthCorpus& corpus, int k, const NoiseConfig& noise,
    const std::map<Task, Ontology>& ontologies, std::uint64_t seed) {
  auto idx = index_conversations(corpus.conversations);
  Rng root(seed);
  std::vector<AnnotationSet> out;
  for (const auto& gold : corpus.gold) {
    const Conversation& conv = *idx.at(gold.conversation_id);
    const Ontology& onto = ontologies.at(gold.task);
    for (int li = 1; li <= k; ++li) {
      std::string labeler = "L" + std::to_string(li);
      Rng rng = root.derive(fnv1a64(gold.conversation_id + "\x1f" +
                                    to_string(gold.task) + "\x1f" + labeler));
      out.push_back(simulate_labeler(gold, conv, noise, onto, rng, labeler));
    }
  }
  return out;
}

}  // namespace dialanno
