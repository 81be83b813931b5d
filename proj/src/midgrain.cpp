#include "fc/midgrain.hpp"

#include "json.hpp"

namespace fc {

namespace {

bool contains_entity_placeholder(const SExpr& e) {
  if (e.is_leaf()) return e.symbol == kEntityPlaceholder;
  for (const auto& c : e.children)
    if (contains_entity_placeholder(c)) return true;
  return false;
}

}  // namespace

std::set<ClassRelationPair> build_class_relation_pairs(const std::set<std::string>& classes,
                                                       const std::set<std::string>& relations,
                                                       const KnowledgeBase& kb) {
  std::set<ClassRelationPair> out;
  for (const auto& c : classes) {
    if (!kb.has_class(c)) continue;
    for (const auto& r : relations) {
      auto it = kb.relations().find(r);
      if (it == kb.relations().end()) continue;
      if (it->second.domain == c) out.insert({c, r, PairDirection::Forward});
      if (it->second.range == c) out.insert({c, r, PairDirection::Reverse});
    }
  }
  return out;
}

std::set<RelationPair> build_relation_relation_pairs(const std::set<std::string>& relations,
                                                     const KnowledgeBase& kb,
                                                     const MidgrainOptions& options) {
  std::set<std::string> tokens;
  for (const auto& r : relations) {
    if (!kb.has_relation(r)) continue;
    tokens.insert(r);
    if (auto rev = kb.reverse(r)) tokens.insert(*rev);
  }

  std::set<RelationPair> out;
  for (const auto& r1 : tokens) {
    const RelationInfo& i1 = kb.relations().at(r1);
    if (i1.range.empty()) continue;
    for (const auto& r2 : tokens) {
      const RelationInfo& i2 = kb.relations().at(r2);
      if (i2.domain.empty() || i1.range != i2.domain) continue;
      if (!options.ontology_only_rr) {
        bool witness = false;
        for (const auto& [subject, object] : kb.pairs_of(r1)) {
          (void)subject;
          if (!kb.objects_of(object, r2).empty()) {
            witness = true;
            break;
          }
        }
        if (!witness) continue;
      }
      out.insert({r1, r2});
    }
  }
  return out;
}

std::set<RelationEntityPair> build_relation_entity_pairs(const std::set<std::string>& relations,
                                                         const std::set<std::string>& entities,
                                                         const std::vector<SExpr>& skeletons,
                                                         const KnowledgeBase& kb) {
  bool any_entity_slot = false;
  for (const auto& s : skeletons)
    if (contains_entity_placeholder(s)) any_entity_slot = true;
  std::set<RelationEntityPair> out;
  if (!any_entity_slot) return out;

  for (const auto& e : entities) {
    if (!kb.has_entity(e)) continue;
    const std::set<std::string> incident = kb.incident_relations(e);
    for (const auto& r : relations)
      if (incident.count(r) > 0) out.insert({r, e});
  }
  return out;
}

PairSets build_pair_sets(const std::set<std::string>& classes,
                         const std::set<std::string>& relations,
                         const std::set<std::string>& entities,
                         const std::vector<SExpr>& skeletons, const KnowledgeBase& kb,
                         const MidgrainOptions& options) {
  PairSets sets;
  sets.cr = build_class_relation_pairs(classes, relations, kb);
  sets.rr = build_relation_relation_pairs(relations, kb, options);
  sets.re = build_relation_entity_pairs(relations, entities, skeletons, kb);
  return sets;
}

std::string pairs_to_json(const PairSets& pairs) {
  nlohmann::ordered_json j;
  j["class_relation"] = nlohmann::ordered_json::array();
  for (const auto& p : pairs.cr) {
    j["class_relation"].push_back(
        {{"class", p.class_id},
         {"relation", p.relation},
         {"direction", p.direction == PairDirection::Forward ? "forward" : "reverse"}});
  }
  j["relation_relation"] = nlohmann::ordered_json::array();
  for (const auto& [r1, r2] : pairs.rr) j["relation_relation"].push_back({{"r1", r1}, {"r2", r2}});
  j["relation_entity"] = nlohmann::ordered_json::array();
  for (const auto& [r, e] : pairs.re) j["relation_entity"].push_back({{"relation", r}, {"entity", e}});
  return j.dump(2);
}

}  // namespace fc
