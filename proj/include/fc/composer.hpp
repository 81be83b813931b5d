#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fc/exec.hpp"
#include "fc/kb.hpp"
#include "fc/midgrain.hpp"
#include "fc/sexpr.hpp"
#include "fc/skeleton.hpp"

namespace fc {

// Semantic scores of the fine-grained candidates, keyed by component id
// (relations and classes by KB id, entities by entity id, literals by their
// typed lexical form). Reverse relation ids inherit the score of their base
// relation when absent.
struct ComponentScores {
  std::map<std::string, double> relations;
  std::map<std::string, double> classes;
  std::map<std::string, double> entities;
  std::map<std::string, double> literals;
};

// One serialized candidate element: a class-relation pair "[CL]c[REL]r" or
// a relation-relation pair "[REL]r1 [REL]r2", with the summed score of its
// components.
struct OrderedElement {
  std::string text;
  double score = 0.0;
};

// Pair elements sorted by summed component score descending, ties by the
// serialized text. Reverse-direction class pairs serialize the declared
// reverse id and are skipped (with a warning) when none is declared.
std::vector<OrderedElement> order_candidates(const PairSets& pairs, const ComponentScores& scores,
                                             const KnowledgeBase& kb,
                                             std::vector<std::string>* warnings = nullptr);

// Encoder input: question, semicolon-separated elements, then "[ENT]e"
// segments and "[LF]skeleton" segments.
std::string serialize_input(const std::string& question,
                            const std::vector<OrderedElement>& elements,
                            const std::vector<std::string>& entities,
                            const std::vector<SExpr>& skeletons);

// Step-dependent admissible component sets driving constrained composition.
// Relations admissible at the start (and after an entity or literal, which
// resets the chain context) are those appearing in any pair set; after a
// class c they are the pair relations of c in P_cr (reverse-direction pairs
// admit the declared reverse id); after a relation r they are r's
// successors in P_rr.
class DynamicVocabulary {
 public:
  DynamicVocabulary(const PairSets& pairs, std::set<std::string> entities,
                    std::set<std::string> literals, const KnowledgeBase& kb);

  const std::set<std::string>& initial_relations() const { return initial_relations_; }
  const std::set<std::string>& classes() const { return classes_; }
  const std::set<std::string>& entities() const { return entities_; }
  const std::set<std::string>& literals() const { return literals_; }

  std::set<std::string> relations_after_class(const std::string& class_id) const;
  std::set<std::string> relations_after_relation(const std::string& relation_id) const;
  // Entities paired (directly or via the declared reverse) with the
  // relation in P_re; all entities when the relation is empty.
  std::set<std::string> entities_after(const std::string& relation_id) const;

  // Stateful form: current admissible relations, updated by emitting a
  // component. Emitting an inadmissible component throws std::logic_error.
  const std::set<std::string>& current_relations() const { return current_; }
  void step(const std::string& component, LeafKind kind);

 private:
  const KnowledgeBase* kb_;
  std::set<std::string> initial_relations_;
  std::set<std::string> classes_;
  std::set<std::string> entities_;
  std::set<std::string> literals_;
  std::map<std::string, std::set<std::string>> after_class_;
  std::map<std::string, std::set<std::string>> after_relation_;
  std::map<std::string, std::set<std::string>> entities_by_relation_;
  std::set<std::string> current_;
};

// Placeholder slots of a skeleton in composition order: pre-order with the
// class child of an AND visited first and JOIN relations before their
// objects, so each emitted component constrains the next.
std::vector<LeafKind> slot_kinds(const SExpr& skeleton);

// Substitutes concrete component ids for the skeleton's placeholders in
// composition order. The assignment size must match slot_kinds.
SExpr instantiate(const SExpr& skeleton, const std::vector<std::string>& assignment);

struct ComposerConfig {
  std::size_t beam = 8;
  ExecMode exec_mode = ExecMode::Structural;
  bool trace = false;
};

enum class ComposeFailure {
  None,
  NoStates,         // nothing satisfied the vocabulary constraints
  NoneExecutable,   // states existed but none passed the executability check
};

struct CompositionResult {
  bool answerable = false;
  ComposeFailure failure = ComposeFailure::None;
  SExpr expression;  // meaningful only when answerable
  double score = 0.0;
  std::string reason;  // set when unanswerable
  std::vector<std::string> trace;  // JSON lines, one per search step
  std::vector<std::string> warnings;
};

// Constrained beam search over the skeleton candidates in order: every slot
// extension is confined to the dynamic vocabulary, states are scored by the
// sum of softmax-normalized component scores plus the skeleton score, and
// completed expressions are filtered by executability. Returns the highest
// scoring executable expression (ties by printed form) or an unanswerable
// result carrying the trace.
CompositionResult compose(const std::string& question, const SkeletonCandidateSet& skeletons,
                          const PairSets& pairs, const ComponentScores& scores,
                          const KnowledgeBase& kb, const ComposerConfig& config = {});

}  // namespace fc
