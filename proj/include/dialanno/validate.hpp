// Task-specific validation rules for annotation quality. The registry is
// keyed by rule id and extensible; the stock rules catch the gross mistakes:
// an attribute left unlinked, an entity missing its required status, a link
// between two spans of the same kind, and a tag outside the ontology.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dialanno/ontology.hpp"
#include "dialanno/types.hpp"

namespace dialanno {

enum class RuleSeverity { Error, Warning };

struct Violation {
  std::string rule_id;
  std::string target;  // span_id, or "a~b" for a relation
  std::string message;
  RuleSeverity severity = RuleSeverity::Error;
};

struct ValidationRule {
  std::string id;
  std::string name;
  RuleSeverity severity;
  std::function<void(const AnnotationSet&, const Ontology&,
                     std::vector<Violation>&)>
      apply;
};

namespace detail {

inline bool linked_to_entity(const AnnotationSet& a, const LabeledSpan& span,
                             const Ontology& ontology) {
  for (const auto& rel : a.relations) {
    std::string other_id;
    if (rel.first == span.span_id)
      other_id = rel.second;
    else if (rel.second == span.span_id)
      other_id = rel.first;
    else
      continue;
    const LabeledSpan* other = a.find_span(other_id);
    if (other && ontology.kind(other->tag) == TagKind::Entity) return true;
  }
  return false;
}

}  // namespace detail

inline std::vector<ValidationRule> default_rules() {
  std::vector<ValidationRule> rules;

  rules.push_back({"R1", "orphan_attribute", RuleSeverity::Error,
                   [](const AnnotationSet& a, const Ontology& o,
                      std::vector<Violation>& out) {
                     for (const auto& s : a.spans)
                       if (o.kind(s.tag) == TagKind::Attribute &&
                           !detail::linked_to_entity(a, s, o))
                         out.push_back({"R1", s.span_id,
                                        "attribute '" + s.tag +
                                            "' not linked to any entity",
                                        RuleSeverity::Error});
                   }});

  rules.push_back({"R2", "missing_status", RuleSeverity::Error,
                   [](const AnnotationSet& a, const Ontology& o,
                      std::vector<Violation>& out) {
                     if (!o.status_required) return;
                     for (const auto& s : a.spans)
                       if (o.kind(s.tag) == TagKind::Entity && !s.status)
                         out.push_back({"R2", s.span_id,
                                        "entity '" + s.tag +
                                            "' missing required status",
                                        RuleSeverity::Error});
                   }});

  // Whether entity-entity links are ever legitimate is unsettled, so this
  // one only warns.
  rules.push_back({"R3", "relation_kind", RuleSeverity::Warning,
                   [](const AnnotationSet& a, const Ontology& o,
                      std::vector<Violation>& out) {
                     for (const auto& rel : a.relations) {
                       const LabeledSpan* x = a.find_span(rel.first);
                       const LabeledSpan* y = a.find_span(rel.second);
                       if (!x || !y) continue;
                       TagKind kx = o.kind(x->tag);
                       TagKind ky = o.kind(y->tag);
                       if (kx == TagKind::Unknown || ky == TagKind::Unknown)
                         continue;
                       if (kx == ky)
                         out.push_back(
                             {"R3", rel.first + "~" + rel.second,
                              std::string("relation links two ") +
                                  (kx == TagKind::Entity ? "entities"
                                                         : "attributes"),
                              RuleSeverity::Warning});
                     }
                   }});

  rules.push_back({"R4", "unknown_tag", RuleSeverity::Error,
                   [](const AnnotationSet& a, const Ontology& o,
                      std::vector<Violation>& out) {
                     for (const auto& s : a.spans)
                       if (!o.has_tag(s.tag))
                         out.push_back({"R4", s.span_id,
                                        "tag not in ontology: " + s.tag,
                                        RuleSeverity::Error});
                   }});

  return rules;
}

inline std::vector<Violation> validate_annotation(
    const AnnotationSet& annotation, const Ontology& ontology,
    const std::vector<ValidationRule>& rules = default_rules()) {
  std::vector<Violation> out;
  for (const auto& rule : rules) rule.apply(annotation, ontology, out);
  return out;
}

inline bool has_errors(const std::vector<Violation>& violations) {
  for (const auto& v : violations)
    if (v.severity == RuleSeverity::Error) return true;
  return false;
}

}  // namespace dialanno
