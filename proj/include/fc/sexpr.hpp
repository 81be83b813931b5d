#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fc {

// Operator inventory for s-expression logical forms. The set is closed:
// unknown head tokens are parse errors.
enum class Op { And, Join, Reverse, Count, ArgMax, ArgMin, Lt, Le, Gt, Ge };

const char* op_name(Op op);
std::optional<Op> op_from_name(std::string_view name);
int op_arity(Op op);

// Leaf role, assigned positionally during parsing. Entities are ids
// beginning "m." or "g.", literals use the lexical form value^^type,
// relation leaves sit in relation positions (first child of JOIN and of
// comparisons, second child of ARGMAX/ARGMIN, child of R), everything else
// in a set or object position is a class.
enum class LeafKind { Relation, Class, Entity, Literal };

// Placeholder tokens used by skeletons.
inline constexpr const char* kRelPlaceholder = "<rel>";
inline constexpr const char* kClassPlaceholder = "<class>";
inline constexpr const char* kEntityPlaceholder = "<entity>";
inline constexpr const char* kLiteralPlaceholder = "<literal>";

struct SExpr {
  std::optional<Op> op;  // operator node when set, leaf otherwise
  LeafKind leaf_kind = LeafKind::Class;
  std::string symbol;  // leaf token, empty for operator nodes
  std::vector<SExpr> children;

  bool is_leaf() const { return !op.has_value(); }
  bool operator==(const SExpr& other) const;

  static SExpr leaf(std::string symbol, LeafKind kind);
  static SExpr node(Op op, std::vector<SExpr> children);
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& message, std::size_t offset);
  std::size_t offset;  // byte offset into the input text
};

// Parses a single s-expression. Throws ParseError on syntax errors (with
// byte offset), arity violations (naming the operator), and unknown
// operator tags.
SExpr parse(std::string_view text);

// Single-line parenthesized form; parse(print(x)) == x.
std::string print(const SExpr& expr);

// Replaces every relation leaf with <rel>, class leaf with <class>, entity
// leaf with <entity> and literal leaf with <literal>. Structure, operator
// multiset and depth are preserved; idempotent.
SExpr skeletonize(const SExpr& expr);

// Sorts commutative (AND) siblings lexicographically by their printed form
// and normalizes (R (R r)) to r.
SExpr canonicalize(const SExpr& expr);

// Query graph built from an expression. JOIN introduces an edge from a
// fresh variable to its object, R flips edge direction, AND merges subject
// nodes, class leaves in set position become type constraints and in JOIN
// object position become value nodes.
struct QueryGraph {
  enum class NodeType { Var, Entity, Class, Literal };
  struct Node {
    NodeType type;
    std::string label;  // empty for variables
    bool operator==(const Node&) const = default;
  };
  struct Edge {
    int from;
    std::string relation;
    int to;
    bool operator==(const Edge&) const = default;
  };
  struct TypeConstraint {
    int node;
    std::string class_id;
    bool operator==(const TypeConstraint&) const = default;
  };
  struct Filter {  // value constraint produced by LT/LE/GT/GE
    int node;
    Op cmp;
    std::string literal;
    bool operator==(const Filter&) const = default;
  };
  enum class Aggregate { None, Count, ArgMax, ArgMin };

  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<TypeConstraint> constraints;
  std::vector<Filter> filters;
  int answer = -1;
  Aggregate aggregate = Aggregate::None;
  int aggregate_node = -1;  // value node extremized by ARGMAX/ARGMIN
};

// Builds the query graph of canonicalize(expr) with variables numbered in
// construction order.
QueryGraph to_query_graph(const SExpr& expr);

// Deterministic line-based serialization of a query graph. Two expressions
// are exact-match equivalent iff their canonical serializations are equal.
std::string serialize_graph(const QueryGraph& graph);

// Equality of canonical query graphs: invariant under permutations of
// commutative arguments and double-reverse elimination.
bool exact_match(const SExpr& a, const SExpr& b);

// Helpers shared by several modules.
bool is_entity_token(std::string_view token);
bool is_literal_token(std::string_view token);
bool is_placeholder_token(std::string_view token);

// Splits a literal lexical form value^^type into its parts. Returns false
// when the token is not a literal.
bool split_literal(std::string_view token, std::string& value, std::string& type);

// Parses the numeric value of an integer/float/year literal lexical form.
std::optional<double> literal_numeric_value(std::string_view token);

}  // namespace fc
