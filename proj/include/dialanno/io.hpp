// Line-delimited JSON file formats for conversations and annotations, a JSON
// ontology format, the split manifest, and cross-file referential checks.
// Loading is syntax-level: anything that needs another file to verify
// (turn indices, tags, relation targets) is reported by cross_validate
// instead of failing the parse.
#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialanno/ontology.hpp"
#include "dialanno/types.hpp"
#include "dialanno/util.hpp"

namespace dialanno {

using json = nlohmann::json;

namespace detail {

inline json parse_line(const std::string& path, std::size_t line_no,
                       const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded())
    throw ParseError(path, line_no, "invalid JSON");
  if (!j.is_object())
    throw ParseError(path, line_no, "expected a JSON object");
  return j;
}

template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    fn(line_no, parse_line(path, line_no, line));
  }
}

inline void write_lines(const std::string& path,
                        const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace detail

// ---- conversations ----

inline Conversation conversation_from_json(const json& j, const std::string& path,
                                           std::size_t line_no) {
  try {
    Conversation c;
    c.id = j.at("id").get<std::string>();
    if (c.id.empty()) throw std::invalid_argument("empty conversation id");
    for (const auto& jt : j.at("turns")) {
      Turn t;
      t.speaker = speaker_from_string(jt.at("speaker").get<std::string>());
      t.tokens = jt.at("tokens").get<std::vector<std::string>>();
      if (t.tokens.empty()) throw std::invalid_argument("turn with no tokens");
      for (const auto& tok : t.tokens)
        if (tok.empty() || tok.find_first_of(" \t\n\r") != std::string::npos)
          throw std::invalid_argument("bad token: '" + tok + "'");
      c.turns.push_back(std::move(t));
    }
    if (c.turns.empty()) throw std::invalid_argument("conversation with no turns");
    return c;
  } catch (const json::exception& e) {
    throw ParseError(path, line_no, e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(path, line_no, e.what());
  }
}

inline json to_json(const Conversation& c) {
  json turns = json::array();
  for (const auto& t : c.turns)
    turns.push_back({{"speaker", to_string(t.speaker)}, {"tokens", t.tokens}});
  return {{"id", c.id}, {"turns", turns}};
}

inline std::vector<Conversation> load_conversations(const std::string& path) {
  std::vector<Conversation> out;
  std::set<std::string> ids;
  detail::for_each_record(path, [&](std::size_t line_no, const json& j) {
    Conversation c = conversation_from_json(j, path, line_no);
    if (!ids.insert(c.id).second)
      throw ParseError(path, line_no, "duplicate conversation id: " + c.id);
    out.push_back(std::move(c));
  });
  return out;
}

inline void save_conversations(const std::string& path,
                               const std::vector<Conversation>& conversations) {
  std::vector<std::string> lines;
  for (const auto& c : conversations) lines.push_back(to_json(c).dump());
  detail::write_lines(path, lines);
}

// ---- annotations ----

inline AnnotationSet annotation_from_json(const json& j, const std::string& path,
                                          std::size_t line_no) {
  try {
    AnnotationSet a;
    a.conversation_id = j.at("conversation_id").get<std::string>();
    a.labeler_id = j.at("labeler_id").get<std::string>();
    a.task = task_from_string(j.at("task").get<std::string>());
    std::set<std::string> span_ids;
    if (j.contains("spans")) {
      for (const auto& js : j.at("spans")) {
        LabeledSpan s;
        s.span_id = js.at("span_id").get<std::string>();
        s.turn_index = js.at("turn").get<int>();
        s.start = js.at("start").get<int>();
        s.end = js.at("end").get<int>();
        s.tag = js.at("tag").get<std::string>();
        if (js.contains("status") && !js.at("status").is_null())
          s.status = js.at("status").get<std::string>();
        if (s.turn_index < 0 || s.start < 0 || s.start >= s.end)
          throw std::invalid_argument("bad span extent in " + s.span_id);
        if (!span_ids.insert(s.span_id).second)
          throw std::invalid_argument("duplicate span_id: " + s.span_id);
        a.spans.push_back(std::move(s));
      }
    }
    if (j.contains("relations")) {
      for (const auto& jr : j.at("relations")) {
        if (!jr.is_array() || jr.size() != 2)
          throw std::invalid_argument("relation must be a pair");
        a.relations.emplace_back(jr[0].get<std::string>(),
                                 jr[1].get<std::string>());
      }
    }
    return a;
  } catch (const json::exception& e) {
    throw ParseError(path, line_no, e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(path, line_no, e.what());
  }
}

inline json to_json(const AnnotationSet& a) {
  json spans = json::array();
  for (const auto& s : a.spans) {
    json js = {{"span_id", s.span_id}, {"turn", s.turn_index},
               {"start", s.start},     {"end", s.end},
               {"tag", s.tag}};
    if (s.status) js["status"] = *s.status;
    spans.push_back(js);
  }
  json rels = json::array();
  for (const auto& r : a.relations) rels.push_back({r.first, r.second});
  return {{"conversation_id", a.conversation_id},
          {"labeler_id", a.labeler_id},
          {"task", to_string(a.task)},
          {"spans", spans},
          {"relations", rels}};
}

inline std::vector<AnnotationSet> load_annotations(const std::string& path) {
  std::vector<AnnotationSet> out;
  detail::for_each_record(path, [&](std::size_t line_no, const json& j) {
    out.push_back(annotation_from_json(j, path, line_no));
  });
  return out;
}

inline void save_annotations(const std::string& path,
                             const std::vector<AnnotationSet>& annotations) {
  std::vector<std::string> lines;
  for (const auto& a : annotations) lines.push_back(to_json(a).dump());
  detail::write_lines(path, lines);
}

// ---- ontology ----

inline Ontology ontology_from_json(const json& j) {
  Ontology o;
  o.task = task_from_string(j.at("task").get<std::string>());
  for (const auto& je : j.at("entities")) {
    OntologyEntity e;
    e.tag = je.at("tag").get<std::string>();
    if (je.contains("system") && !je.at("system").is_null())
      e.system = je.at("system").get<std::string>();
    if (je.contains("aliases"))
      e.aliases = je.at("aliases").get<std::vector<std::string>>();
    if (je.contains("synthetic")) e.synthetic = je.at("synthetic").get<bool>();
    o.entities.push_back(std::move(e));
  }
  for (const auto& ja : j.at("attributes")) {
    OntologyAttribute a;
    a.tag = ja.at("tag").get<std::string>();
    if (ja.contains("numeric_like"))
      a.numeric_like = ja.at("numeric_like").get<bool>();
    o.attributes.push_back(std::move(a));
  }
  if (j.contains("statuses"))
    o.statuses = j.at("statuses").get<std::vector<std::string>>();
  if (j.contains("status_required"))
    o.status_required = j.at("status_required").get<bool>();
  if (j.contains("preference_order"))
    o.preference_order = j.at("preference_order").get<std::vector<std::string>>();
  o.check();
  return o;
}

inline json to_json(const Ontology& o) {
  json entities = json::array();
  for (const auto& e : o.entities) {
    json je = {{"tag", e.tag}, {"aliases", e.aliases}};
    if (e.system) je["system"] = *e.system;
    if (e.synthetic) je["synthetic"] = true;
    entities.push_back(je);
  }
  json attributes = json::array();
  for (const auto& a : o.attributes)
    attributes.push_back({{"tag", a.tag}, {"numeric_like", a.numeric_like}});
  return {{"task", to_string(o.task)},
          {"entities", entities},
          {"attributes", attributes},
          {"statuses", o.statuses},
          {"status_required", o.status_required},
          {"preference_order", o.preference_order}};
}

inline Ontology load_ontology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError(path, 1, "invalid JSON");
  try {
    return ontology_from_json(j);
  } catch (const json::exception& e) {
    throw ParseError(path, 1, e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(path, 1, e.what());
  }
}

inline void save_ontology(const std::string& path, const Ontology& o) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << to_json(o).dump(2) << "\n";
}

// ---- split manifest ----

struct Split {
  std::vector<std::string> train, dev, test;

  bool in_train(const std::string& id) const {
    return std::find(train.begin(), train.end(), id) != train.end();
  }
};

inline Split load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError(path, 1, "invalid JSON");
  Split s;
  s.train = j.value("train", std::vector<std::string>{});
  s.dev = j.value("dev", std::vector<std::string>{});
  s.test = j.value("test", std::vector<std::string>{});
  return s;
}

inline void save_split(const std::string& path, const Split& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << json{{"train", s.train}, {"dev", s.dev}, {"test", s.test}}.dump(2)
      << "\n";
}

// ---- cross-file validation ----

enum class RefViolationKind {
  UnknownConversation,
  BadTurnIndex,
  SpanOutOfRange,
  UnknownTag,
  InvalidStatus,
  DanglingRelation,
  SelfRelation,
};

inline const char* to_string(RefViolationKind k) {
  switch (k) {
    case RefViolationKind::UnknownConversation: return "unknown_conversation";
    case RefViolationKind::BadTurnIndex: return "bad_turn_index";
    case RefViolationKind::SpanOutOfRange: return "span_out_of_range";
    case RefViolationKind::UnknownTag: return "unknown_tag";
    case RefViolationKind::InvalidStatus: return "invalid_status";
    case RefViolationKind::DanglingRelation: return "dangling_relation";
    default: return "self_relation";
  }
}

struct RefViolation {
  RefViolationKind kind;
  std::string conversation_id;
  std::string labeler_id;
  Task task;
  std::string target;  // span_id or "a~b" for relations
  std::string message;
};

inline std::map<std::string, const Conversation*> index_conversations(
    const std::vector<Conversation>& conversations) {
  std::map<std::string, const Conversation*> idx;
  for (const auto& c : conversations) idx[c.id] = &c;
  return idx;
}

// Reports every referential breach between an annotation batch, its corpus,
// and the task ontologies. An empty result means the batch is consistent.
inline std::vector<RefViolation> cross_validate(
    const std::vector<AnnotationSet>& annotations,
    const std::vector<Conversation>& conversations,
    const std::map<Task, Ontology>& ontologies) {
  auto idx = index_conversations(conversations);
  std::vector<RefViolation> out;
  auto add = [&](const AnnotationSet& a, RefViolationKind kind,
                 const std::string& target, const std::string& message) {
    out.push_back({kind, a.conversation_id, a.labeler_id, a.task, target, message});
  };

  for (const auto& a : annotations) {
    auto cit = idx.find(a.conversation_id);
    const Conversation* conv = cit == idx.end() ? nullptr : cit->second;
    if (!conv)
      add(a, RefViolationKind::UnknownConversation, "",
          "conversation not in corpus: " + a.conversation_id);
    auto oit = ontologies.find(a.task);
    const Ontology* onto = oit == ontologies.end() ? nullptr : &oit->second;

    std::set<std::string> span_ids;
    for (const auto& s : a.spans) {
      span_ids.insert(s.span_id);
      if (conv) {
        if (s.turn_index >= static_cast<int>(conv->turns.size())) {
          add(a, RefViolationKind::BadTurnIndex, s.span_id,
              "turn " + std::to_string(s.turn_index) + " out of range");
        } else if (s.end > static_cast<int>(conv->turns[s.turn_index].tokens.size())) {
          add(a, RefViolationKind::SpanOutOfRange, s.span_id,
              "span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                  ") exceeds turn length");
        }
      }
      if (onto) {
        if (!onto->has_tag(s.tag))
          add(a, RefViolationKind::UnknownTag, s.span_id,
              "tag not in ontology: " + s.tag);
        if (s.status && !onto->has_status(*s.status))
          add(a, RefViolationKind::InvalidStatus, s.span_id,
              "status not allowed: " + *s.status);
      }
    }
    for (const auto& r : a.relations) {
      std::string target = r.first + "~" + r.second;
      if (r.first == r.second)
        add(a, RefViolationKind::SelfRelation, target,
            "relation endpoints are identical");
      for (const auto& endpoint : {r.first, r.second})
        if (!span_ids.count(endpoint))
          add(a, RefViolationKind::DanglingRelation, target,
              "relation endpoint has no span: " + endpoint);
    }
  }
  return out;
}

inline std::vector<RefViolation> cross_validate(
    const std::vector<AnnotationSet>& annotations,
    const std::vector<Conversation>& conversations, const Ontology& ontology) {
  return cross_validate(annotations, conversations,
                        std::map<Task, Ontology>{{ontology.task, ontology}});
}

}  // namespace dialanno
