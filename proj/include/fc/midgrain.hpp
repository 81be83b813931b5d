#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fc/kb.hpp"
#include "fc/sexpr.hpp"

namespace fc {

// Direction of a class-relation pair: Forward pairs satisfy domain(r) = c,
// Reverse pairs satisfy range(r) = c and stand for c joined with r's
// reverse.
enum class PairDirection { Forward, Reverse };

struct ClassRelationPair {
  std::string class_id;
  std::string relation;  // base candidate relation id
  PairDirection direction = PairDirection::Forward;
  auto operator<=>(const ClassRelationPair&) const = default;
};

using RelationPair = std::pair<std::string, std::string>;
using RelationEntityPair = std::pair<std::string, std::string>;

struct PairSets {
  std::set<ClassRelationPair> cr;
  std::set<RelationPair> rr;
  std::set<RelationEntityPair> re;
};

struct MidgrainOptions {
  // Keeps ontology-compatible relation pairs that lack a fact witness.
  bool ontology_only_rr = false;
};

// (c, r, Forward) for every candidate class c and relation r with
// domain(r) = c; (c, r, Reverse) when range(r) = c.
std::set<ClassRelationPair> build_class_relation_pairs(const std::set<std::string>& classes,
                                                       const std::set<std::string>& relations,
                                                       const KnowledgeBase& kb);

// Ordered pairs over the candidate relations and their declared reverses
// with range(r1) = domain(r2), kept only when a two-hop fact witness
// (a, r1, b), (b, r2, c) exists (witness check skipped by option).
std::set<RelationPair> build_relation_relation_pairs(const std::set<std::string>& relations,
                                                     const KnowledgeBase& kb,
                                                     const MidgrainOptions& options = {});

// Empty when no skeleton contains an entity placeholder; otherwise every
// (r, e) with r a candidate relation incident to surviving entity e.
std::set<RelationEntityPair> build_relation_entity_pairs(const std::set<std::string>& relations,
                                                         const std::set<std::string>& entities,
                                                         const std::vector<SExpr>& skeletons,
                                                         const KnowledgeBase& kb);

PairSets build_pair_sets(const std::set<std::string>& classes,
                         const std::set<std::string>& relations,
                         const std::set<std::string>& entities,
                         const std::vector<SExpr>& skeletons, const KnowledgeBase& kb,
                         const MidgrainOptions& options = {});

// Diagnostic JSON dump of the three pair sets.
std::string pairs_to_json(const PairSets& pairs);

}  // namespace fc
