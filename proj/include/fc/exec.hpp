#pragma once

#include <set>
#include <string>

#include "fc/kb.hpp"
#include "fc/sexpr.hpp"

namespace fc {

// Result of evaluating an expression bottom-up with set semantics. Values
// are entity ids or literal lexical forms; COUNT queries carry a single
// non-negative integer instead.
struct AnswerSet {
  bool is_count = false;
  long long count = 0;
  std::set<std::string> values;

  // String forms used for F1 scoring and reports: the values themselves, or
  // the decimal count for COUNT queries.
  std::set<std::string> as_strings() const;
  bool empty() const { return is_count ? count == 0 : values.empty(); }
};

enum class ExecStatus {
  Ok,
  UnresolvedRelation,
  UnresolvedClass,
  UnresolvedEntity,
  MalformedLiteral,
  NonNumericComparison,
  MalformedPath,
  EmptyArgDomain,
  EmptyAnswer,  // only produced by the non-emptiness executability mode
};

struct ExecError : std::runtime_error {
  ExecError(ExecStatus status, const std::string& message);
  ExecStatus status;
};

// Stable lowercase name of a status, e.g. "unresolved-relation".
const char* exec_status_name(ExecStatus status);

// Evaluates the expression over the knowledge base. JOIN collects subjects
// whose object lies in the evaluated object set (the declared-reverse
// virtual fact view applies), R flips direction, AND intersects, class
// leaves in set position denote their member sets and in JOIN object
// position the class id itself, ARGMAX/ARGMIN keep all ties, comparisons
// filter subjects by numeric literal value. Throws ExecError.
AnswerSet execute(const SExpr& expr, const KnowledgeBase& kb);

enum class ExecMode {
  Structural,  // identifiers resolve and operator typing holds
  NonEmpty,    // additionally the answer set is non-empty
};

struct Executability {
  bool ok = true;
  ExecStatus status = ExecStatus::Ok;
  std::string detail;
};

// Checks executability without throwing. The structural mode verifies that
// every identifier resolves and that operator typing holds; the non-empty
// mode additionally executes the expression.
Executability is_executable(const SExpr& expr, const KnowledgeBase& kb,
                            ExecMode mode = ExecMode::Structural);

// Deterministic SPARQL rendering of the canonical query graph, for
// interoperability and debugging. Variables are named ?x0, ?x1, ... in
// graph construction order; the answer variable is ?x0.
std::string emit_sparql(const SExpr& expr);

}  // namespace fc
