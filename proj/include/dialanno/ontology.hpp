// Task schemas: entity and attribute tag inventories, organ systems, status
// requirements, the medication attribute preference order, and pruning of
// low-quality entity tags into per-system Other buckets.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dialanno/types.hpp"

namespace dialanno {

struct OntologyEntity {
  std::string tag;
  std::optional<std::string> system;
  std::vector<std::string> aliases;
  // Filler tags that round out the default inventories; not part of any
  // curated clinical list.
  bool synthetic = false;
};

struct OntologyAttribute {
  std::string tag;
  bool numeric_like = false;
};

enum class TagKind { Entity, Attribute, Unknown };

struct Ontology {
  Task task = Task::Symptoms;
  std::vector<OntologyEntity> entities;
  std::vector<OntologyAttribute> attributes;
  std::vector<std::string> statuses;
  bool status_required = false;
  std::vector<std::string> preference_order;

  TagKind kind(const std::string& tag) const {
    for (const auto& e : entities)
      if (e.tag == tag) return TagKind::Entity;
    for (const auto& a : attributes)
      if (a.tag == tag) return TagKind::Attribute;
    return TagKind::Unknown;
  }

  bool has_tag(const std::string& tag) const {
    return kind(tag) != TagKind::Unknown;
  }

  const OntologyEntity* entity(const std::string& tag) const {
    for (const auto& e : entities)
      if (e.tag == tag) return &e;
    return nullptr;
  }

  bool has_status(const std::string& status) const {
    return std::find(statuses.begin(), statuses.end(), status) != statuses.end();
  }

  // Checks the structural invariants; throws on the first breach.
  void check() const {
    std::set<std::string> seen;
    auto add = [&](const std::string& tag) {
      if (tag.empty()) throw std::invalid_argument("ontology: empty tag");
      if (tag.find(kStatusSeparator) != std::string::npos)
        throw std::invalid_argument("ontology: tag contains '|': " + tag);
      if (!seen.insert(tag).second)
        throw std::invalid_argument("ontology: duplicate tag: " + tag);
    };
    for (const auto& e : entities) add(e.tag);
    for (const auto& a : attributes) add(a.tag);
    for (const auto& p : preference_order)
      if (kind(p) != TagKind::Attribute)
        throw std::invalid_argument(
            "ontology: preference_order entry is not an attribute: " + p);
    if (status_required && statuses.empty())
      throw std::invalid_argument("ontology: status required but no statuses");
    for (const auto& s : statuses)
      if (s.empty() || s.find(kStatusSeparator) != std::string::npos)
        throw std::invalid_argument("ontology: bad status: " + s);
  }
};

// Picks one attribute tag out of a set of equally plausible candidates using
// the task's preference order. Candidates missing from the order rank after
// all listed ones; remaining ties go to the lexicographically smallest tag.
inline std::string resolve_preference(const std::vector<std::string>& candidates,
                                      const Ontology& ontology) {
  if (candidates.empty())
    throw std::invalid_argument("resolve_preference: empty candidate set");
  auto rank = [&](const std::string& tag) -> std::size_t {
    for (std::size_t i = 0; i < ontology.preference_order.size(); ++i)
      if (ontology.preference_order[i] == tag) return i;
    return ontology.preference_order.size();
  };
  const std::string* best = nullptr;
  std::size_t best_rank = 0;
  for (const auto& c : candidates) {
    if (ontology.kind(c) != TagKind::Attribute)
      throw std::invalid_argument("resolve_preference: not an attribute: " + c);
    std::size_t r = rank(c);
    if (!best || r < best_rank || (r == best_rank && c < *best)) {
      best = &c;
      best_rank = r;
    }
  }
  return *best;
}

struct PruneResult {
  Ontology ontology;
  // Removed tag -> replacement tag; "" means the tag is dropped outright.
  // Surviving tags are absent (identity).
  std::map<std::string, std::string> remap;
};

inline std::string system_other_tag(const std::string& tag) {
  auto pos = tag.find(':');
  if (pos == std::string::npos) return tag + ":Other";
  return tag.substr(0, pos) + ":Other";
}

// Removes entity tags whose count or agreement falls below threshold. Tags
// with an organ system collapse into "<System>:Other" (created on demand);
// tags without one are dropped. Attributes are never pruned.
inline PruneResult prune(const Ontology& ontology,
                         const std::map<std::string, long long>& counts,
                         const std::map<std::string, double>& kappas,
                         long long min_count, double min_kappa) {
  auto count_of = [&](const std::string& tag) {
    auto it = counts.find(tag);
    return it == counts.end() ? 0LL : it->second;
  };
  auto kappa_of = [&](const std::string& tag) {
    auto it = kappas.find(tag);
    return it == kappas.end() ? 0.0 : it->second;
  };

  PruneResult out;
  out.ontology = ontology;
  out.ontology.entities.clear();

  std::set<std::string> kept;
  std::vector<const OntologyEntity*> failed;
  for (const auto& e : ontology.entities) {
    bool other_target = e.system && e.tag == system_other_tag(e.tag);
    if (other_target || (count_of(e.tag) >= min_count && kappa_of(e.tag) >= min_kappa)) {
      out.ontology.entities.push_back(e);
      kept.insert(e.tag);
    } else {
      failed.push_back(&e);
    }
  }
  for (const OntologyEntity* e : failed) {
    if (!e->system) {
      out.remap[e->tag] = "";
      continue;
    }
    std::string target = system_other_tag(e->tag);
    out.remap[e->tag] = target;
    if (!kept.count(target)) {
      OntologyEntity other;
      other.tag = target;
      other.system = e->system;
      other.synthetic = true;
      out.ontology.entities.push_back(other);
      kept.insert(target);
    }
  }
  return out;
}

// Rewrites an annotation against a pruned ontology: remapped spans change
// tag, dropped spans disappear along with any relation touching them.
inline AnnotationSet apply_remap(const AnnotationSet& annotation,
                                 const std::map<std::string, std::string>& remap) {
  AnnotationSet out = annotation;
  out.spans.clear();
  out.relations.clear();
  std::set<std::string> dropped;
  for (const auto& span : annotation.spans) {
    auto it = remap.find(span.tag);
    if (it == remap.end()) {
      out.spans.push_back(span);
    } else if (it->second.empty()) {
      dropped.insert(span.span_id);
    } else {
      LabeledSpan s = span;
      s.tag = it->second;
      out.spans.push_back(s);
    }
  }
  for (const auto& rel : annotation.relations)
    if (!dropped.count(rel.first) && !dropped.count(rel.second))
      out.relations.push_back(rel);
  return out;
}

namespace detail {

inline OntologyEntity ent(std::string tag, std::optional<std::string> system,
                          std::vector<std::string> aliases, bool synthetic = false) {
  OntologyEntity e;
  e.tag = std::move(tag);
  e.system = std::move(system);
  e.aliases = std::move(aliases);
  e.synthetic = synthetic;
  return e;
}

}  // namespace detail

// Default symptoms schema: organ-system-prefixed entities (with an Other
// bucket per system) and the HPI-style property attributes. Alias lists feed
// the synthetic generator and the suggestion lexicon.
inline Ontology default_symptoms_ontology() {
  using detail::ent;
  Ontology o;
  o.task = Task::Symptoms;
  o.statuses = {"Experienced", "Not Experienced"};
  o.status_required = true;
  o.entities = {
      ent("Const:Fever", "Constitutional", {"fever", "running a temperature"}),
      ent("Const:Chills", "Constitutional", {"chills", "shivering"}),
      ent("Const:Difficulty Sleeping", "Constitutional",
          {"trouble sleeping", "can not sleep"}),
      ent("Const:Fatigue", "Constitutional", {"tired all the time", "worn out"}, true),
      ent("GI:Abdominal Distension", "Gastrointestinal", {"bloated", "swollen belly"}),
      ent("GI:Abdominal Pain", "Gastrointestinal",
          {"hurts", "stomach ache", "belly pain"}),
      ent("GI:Vomiting", "Gastrointestinal", {"throwing up", "vomiting"}),
      ent("GI:Nausea", "Gastrointestinal", {"queasy", "nauseous"}),
      ent("Neuro:Headache", "Neurologic", {"headache", "my head pounds"}),
      ent("Neuro:Dizziness", "Neurologic", {"dizzy", "lightheaded"}),
      ent("Neuro:Seizure", "Neurologic", {"seizure", "a fit"}),
      ent("Neuro:Numbness", "Neurologic", {"numb", "pins and needles"}, true),
      ent("Resp:Shortness of Breath", "Respiratory",
          {"hard to breathe", "short of breath", "winded"}),
      ent("Resp:Orthopnea", "Respiratory", {"breathless lying down"}),
      ent("Resp:Cough", "Respiratory", {"cough", "coughing"}, true),
      ent("CV:Chest Pain", "Cardiovascular", {"chest pain", "chest tightness"}, true),
      ent("CV:Palpitations", "Cardiovascular", {"heart racing", "palpitations"}, true),
      ent("ENT:Sore Throat", "Ears Nose Throat", {"sore throat", "throat hurts"}, true),
      ent("Eyes:Blurry Vision", "Eyes", {"blurry vision", "trouble seeing"}, true),
      ent("GU:Dysuria", "Genitourinary", {"burning when i pee"}, true),
      ent("MSK:Back Pain", "Musculoskeletal", {"back pain", "my back aches"}, true),
      ent("MSK:Joint Pain", "Musculoskeletal", {"knees ache", "joint pain"}, true),
      ent("Skin:Rash", "Skin", {"rash", "itchy patches"}, true),
      ent("Psych:Anxiety", "Psychiatric", {"anxious", "on edge"}, true),
      ent("Endo:Increased Thirst", "Endocrine", {"always thirsty"}, true),
      ent("Heme:Bruising", "Hematologic", {"bruising easily"}, true),
      ent("Allergy:Sneezing", "Allergic", {"sneezing fits"}, true),
  };
  const std::vector<std::pair<std::string, std::string>> systems = {
      {"Const", "Constitutional"}, {"Eyes", "Eyes"},
      {"ENT", "Ears Nose Throat"}, {"CV", "Cardiovascular"},
      {"Resp", "Respiratory"},     {"GI", "Gastrointestinal"},
      {"GU", "Genitourinary"},     {"MSK", "Musculoskeletal"},
      {"Skin", "Skin"},            {"Neuro", "Neurologic"},
      {"Psych", "Psychiatric"},    {"Endo", "Endocrine"},
      {"Heme", "Hematologic"},     {"Allergy", "Allergic"},
  };
  for (const auto& [prefix, system] : systems)
    o.entities.push_back(ent(prefix + ":Other", system,
                             prefix == "GI" ? std::vector<std::string>{"stomach issues"}
                                            : std::vector<std::string>{},
                             prefix != "GI"));
  o.attributes = {
      {"Property:Duration", true},
      {"Property:Location", false},
      {"Property:Severity/Amount", false},
      {"Property:Frequency", true},
      {"Property:Alleviating Factor", false},
      {"Property:Provoking Factor", false},
  };
  o.check();
  return o;
}

// Medications: one open-class Drug entity plus the property attributes with
// their disambiguation preference order.
inline Ontology default_medications_ontology() {
  using detail::ent;
  Ontology o;
  o.task = Task::Medications;
  o.status_required = false;
  o.entities = {
      ent("Drug", std::nullopt,
          {"tylenol", "amaryl", "glimepiride", "insulin", "metformin",
           "lisinopril", "ibuprofen", "the pain medication", "diabetes medication",
           "the pill", "atorvastatin", "albuterol"}),
  };
  o.attributes = {
      {"Property:Dose", true},
      {"Property:Frequency", true},
      {"Property:Quantity", true},
      {"Property:Duration", true},
      {"Property:Mode", false},
  };
  o.preference_order = {"Property:Dose", "Property:Frequency",
                        "Property:Quantity", "Property:Duration",
                        "Property:Mode"};
  o.check();
  return o;
}

// Conditions: the three condition categories; attributes mirror symptoms plus
// an onset/diagnosis-time property.
inline Ontology default_conditions_ontology() {
  using detail::ent;
  Ontology o;
  o.task = Task::Conditions;
  o.statuses = {"Experienced", "Not Experienced"};
  o.status_required = true;
  o.entities = {
      ent("Condition:Patient", std::nullopt,
          {"diabetes", "high blood pressure", "asthma", "arthritis",
           "migraines", "high cholesterol", "kidney disease"}),
      ent("Condition:Family History", std::nullopt, {}),
      ent("Condition:Other", std::nullopt, {}),
  };
  o.attributes = {
      {"Property:Duration", true},
      {"Property:Location", false},
      {"Property:Severity/Amount", false},
      {"Property:Frequency", true},
      {"Property:Alleviating Factor", false},
      {"Property:Provoking Factor", false},
      {"Property:Onset/Diagnosis", true},
  };
  o.check();
  return o;
}

inline Ontology default_ontology(Task task) {
  switch (task) {
    case Task::Symptoms: return default_symptoms_ontology();
    case Task::Medications: return default_medications_ontology();
    default: return default_conditions_ontology();
  }
}

}  // namespace dialanno
