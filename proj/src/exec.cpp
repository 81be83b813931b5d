#include "fc/exec.hpp"

#include <algorithm>
#include <sstream>

namespace fc {

std::set<std::string> AnswerSet::as_strings() const {
  if (is_count) return {std::to_string(count)};
  return values;
}

ExecError::ExecError(ExecStatus status, const std::string& message)
    : std::runtime_error(message), status(status) {}

const char* exec_status_name(ExecStatus status) {
  switch (status) {
    case ExecStatus::Ok: return "ok";
    case ExecStatus::UnresolvedRelation: return "unresolved-relation";
    case ExecStatus::UnresolvedClass: return "unresolved-class";
    case ExecStatus::UnresolvedEntity: return "unresolved-entity";
    case ExecStatus::MalformedLiteral: return "malformed-literal";
    case ExecStatus::NonNumericComparison: return "non-numeric-comparison";
    case ExecStatus::MalformedPath: return "malformed-path";
    case ExecStatus::EmptyArgDomain: return "empty-arg-domain";
    case ExecStatus::EmptyAnswer: return "empty-answer";
  }
  return "unknown";
}

namespace {

using Strings = std::set<std::string>;

void check_relation(const SExpr& path, const KnowledgeBase& kb) {
  if (path.is_leaf()) {
    if (!kb.has_relation(path.symbol)) {
      throw ExecError(ExecStatus::UnresolvedRelation,
                      "unresolved relation '" + path.symbol + "'");
    }
    return;
  }
  for (const auto& c : path.children) check_relation(c, kb);
}

// Entities/values reachable from `sources` by following the path forward.
Strings targets_of(const SExpr& path, const Strings& sources, const KnowledgeBase& kb);

// Entities with a path leading into `objects`.
Strings sources_of(const SExpr& path, const Strings& objects, const KnowledgeBase& kb) {
  if (path.is_leaf()) {
    Strings out;
    for (const auto& o : objects) {
      for (auto& s : kb.subjects_of(path.symbol, o)) out.insert(s);
    }
    return out;
  }
  if (path.op == Op::Reverse) return targets_of(path.children[0], objects, kb);
  // (JOIN p1 p2): s -p1-> m -p2-> o.
  return sources_of(path.children[0], sources_of(path.children[1], objects, kb), kb);
}

Strings targets_of(const SExpr& path, const Strings& sources, const KnowledgeBase& kb) {
  if (path.is_leaf()) {
    Strings out;
    for (const auto& s : sources) {
      for (auto& o : kb.objects_of(s, path.symbol)) out.insert(o);
    }
    return out;
  }
  if (path.op == Op::Reverse) return sources_of(path.children[0], sources, kb);
  return targets_of(path.children[1], targets_of(path.children[0], sources, kb), kb);
}

bool compare(Op op, double lhs, double rhs) {
  switch (op) {
    case Op::Lt: return lhs < rhs;
    case Op::Le: return lhs <= rhs;
    case Op::Gt: return lhs > rhs;
    case Op::Ge: return lhs >= rhs;
    default: return false;
  }
}

Strings eval_set(const SExpr& e, const KnowledgeBase& kb);

Strings eval_object(const SExpr& e, const KnowledgeBase& kb) {
  if (e.is_leaf() && e.leaf_kind == LeafKind::Class) {
    if (!kb.has_class(e.symbol)) {
      throw ExecError(ExecStatus::UnresolvedClass, "unresolved class '" + e.symbol + "'");
    }
    // Class leaf in object position denotes the class id as a fact value.
    return {e.symbol};
  }
  return eval_set(e, kb);
}

Strings eval_set(const SExpr& e, const KnowledgeBase& kb) {
  if (e.is_leaf()) {
    switch (e.leaf_kind) {
      case LeafKind::Class:
        if (!kb.has_class(e.symbol)) {
          throw ExecError(ExecStatus::UnresolvedClass, "unresolved class '" + e.symbol + "'");
        }
        return kb.class_members(e.symbol);
      case LeafKind::Entity:
        if (!kb.has_entity(e.symbol)) {
          throw ExecError(ExecStatus::UnresolvedEntity, "unresolved entity '" + e.symbol + "'");
        }
        return {e.symbol};
      case LeafKind::Literal: {
        std::string value, type;
        if (!split_literal(e.symbol, value, type)) {
          throw ExecError(ExecStatus::MalformedLiteral,
                          "malformed literal '" + e.symbol + "'");
        }
        return {e.symbol};
      }
      case LeafKind::Relation:
        throw ExecError(ExecStatus::MalformedPath, "relation leaf in set position");
    }
  }
  switch (*e.op) {
    case Op::And: {
      Strings a = eval_set(e.children[0], kb);
      Strings b = eval_set(e.children[1], kb);
      Strings out;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                            std::inserter(out, out.begin()));
      return out;
    }
    case Op::Join: {
      check_relation(e.children[0], kb);
      return sources_of(e.children[0], eval_object(e.children[1], kb), kb);
    }
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge: {
      const SExpr& path = e.children[0];
      if (!path.is_leaf()) {
        throw ExecError(ExecStatus::MalformedPath, "comparison path must be a relation");
      }
      check_relation(path, kb);
      auto bound = literal_numeric_value(e.children[1].symbol);
      if (!bound) {
        throw ExecError(ExecStatus::NonNumericComparison,
                        "comparison against non-numeric literal '" + e.children[1].symbol + "'");
      }
      Strings out;
      for (const auto& [s, o] : kb.pairs_of(path.symbol)) {
        auto v = literal_numeric_value(o);
        if (v && compare(*e.op, *v, *bound)) out.insert(s);
      }
      return out;
    }
    default:
      throw ExecError(ExecStatus::MalformedPath,
                      std::string(op_name(*e.op)) + " not valid in set position");
  }
}

Strings eval_extremum(const SExpr& e, const KnowledgeBase& kb) {
  bool is_max = e.op == Op::ArgMax;
  Strings domain = eval_set(e.children[0], kb);
  if (domain.empty()) {
    throw ExecError(ExecStatus::EmptyArgDomain,
                    std::string(op_name(*e.op)) + " over an empty set");
  }
  check_relation(e.children[1], kb);
  std::map<std::string, double> best;
  for (const auto& entity : domain) {
    Strings reached = targets_of(e.children[1], {entity}, kb);
    std::optional<double> extreme;
    for (const auto& value : reached) {
      auto v = literal_numeric_value(value);
      if (!v) continue;
      if (!extreme || (is_max ? *v > *extreme : *v < *extreme)) extreme = *v;
    }
    if (extreme) best[entity] = *extreme;
  }
  Strings out;
  if (best.empty()) return out;
  double global = best.begin()->second;
  for (const auto& [entity, v] : best) {
    if (is_max ? v > global : v < global) global = v;
  }
  for (const auto& [entity, v] : best) {
    if (v == global) out.insert(entity);  // ties keep all
  }
  return out;
}

}  // namespace

AnswerSet execute(const SExpr& expr, const KnowledgeBase& kb) {
  AnswerSet out;
  const SExpr* body = &expr;
  if (!expr.is_leaf() && expr.op == Op::Count) {
    out.is_count = true;
    body = &expr.children[0];
  }
  Strings values;
  if (!body->is_leaf() && (body->op == Op::ArgMax || body->op == Op::ArgMin)) {
    values = eval_extremum(*body, kb);
  } else {
    values = eval_set(*body, kb);
  }
  if (out.is_count) {
    out.count = static_cast<long long>(values.size());
  } else {
    out.values = std::move(values);
  }
  return out;
}

namespace {

void check_structure(const SExpr& e, const KnowledgeBase& kb) {
  if (e.is_leaf()) {
    switch (e.leaf_kind) {
      case LeafKind::Relation:
        if (!kb.has_relation(e.symbol)) {
          throw ExecError(ExecStatus::UnresolvedRelation,
                          "unresolved relation '" + e.symbol + "'");
        }
        return;
      case LeafKind::Class:
        if (!kb.has_class(e.symbol)) {
          throw ExecError(ExecStatus::UnresolvedClass, "unresolved class '" + e.symbol + "'");
        }
        return;
      case LeafKind::Entity:
        if (!kb.has_entity(e.symbol)) {
          throw ExecError(ExecStatus::UnresolvedEntity, "unresolved entity '" + e.symbol + "'");
        }
        return;
      case LeafKind::Literal: {
        std::string value, type;
        if (!split_literal(e.symbol, value, type)) {
          throw ExecError(ExecStatus::MalformedLiteral,
                          "malformed literal '" + e.symbol + "'");
        }
        return;
      }
    }
  }
  switch (*e.op) {
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge:
      if (!e.children[0].is_leaf()) {
        throw ExecError(ExecStatus::MalformedPath, "comparison path must be a relation");
      }
      if (!literal_numeric_value(e.children[1].symbol)) {
        throw ExecError(ExecStatus::NonNumericComparison,
                        "comparison against non-numeric literal '" + e.children[1].symbol + "'");
      }
      break;
    default:
      break;
  }
  for (const auto& c : e.children) check_structure(c, kb);
}

}  // namespace

Executability is_executable(const SExpr& expr, const KnowledgeBase& kb, ExecMode mode) {
  try {
    check_structure(expr, kb);
    if (mode == ExecMode::NonEmpty) {
      AnswerSet answers = execute(expr, kb);
      if (answers.empty()) {
        return {false, ExecStatus::EmptyAnswer, "expression yields no answers"};
      }
    }
  } catch (const ExecError& e) {
    return {false, e.status, e.what()};
  }
  return {};
}

namespace {

std::string sparql_term(const QueryGraph& g, int id, const std::map<int, int>& var_names) {
  const auto& n = g.nodes[id];
  switch (n.type) {
    case QueryGraph::NodeType::Var:
      return "?x" + std::to_string(var_names.at(id));
    case QueryGraph::NodeType::Entity:
    case QueryGraph::NodeType::Class:
      return "<" + n.label + ">";
    case QueryGraph::NodeType::Literal: {
      std::string value, type;
      if (split_literal(n.label, value, type)) return value;
      return n.label;
    }
  }
  return "?";
}

const char* cmp_text(Op op) {
  switch (op) {
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    default: return "?";
  }
}

}  // namespace

std::string emit_sparql(const SExpr& expr) {
  QueryGraph g = to_query_graph(expr);
  std::map<int, int> var_names;
  auto name_var = [&](int id) {
    if (g.nodes[id].type != QueryGraph::NodeType::Var) return;
    if (!var_names.count(id)) {
      int next = static_cast<int>(var_names.size());
      var_names[id] = next;
    }
  };
  name_var(g.answer);
  for (const auto& e : g.edges) {
    name_var(e.from);
    name_var(e.to);
  }
  for (const auto& c : g.constraints) name_var(c.node);
  for (const auto& f : g.filters) name_var(f.node);

  std::string answer = sparql_term(g, g.answer, var_names);
  std::ostringstream out;
  out << "SELECT ";
  if (g.aggregate == QueryGraph::Aggregate::Count) {
    out << "(COUNT(DISTINCT " << answer << ") AS ?cnt)";
  } else {
    out << "DISTINCT " << answer;
  }
  out << " WHERE {";
  for (const auto& e : g.edges) {
    out << " " << sparql_term(g, e.from, var_names) << " <" << e.relation << "> "
        << sparql_term(g, e.to, var_names) << " .";
  }
  for (const auto& c : g.constraints) {
    out << " " << sparql_term(g, c.node, var_names) << " a <" << c.class_id << "> .";
  }
  for (const auto& f : g.filters) {
    std::string value, type;
    std::string lit = f.literal;
    if (split_literal(f.literal, value, type)) lit = value;
    out << " FILTER (" << sparql_term(g, f.node, var_names) << " " << cmp_text(f.cmp) << " "
        << lit << ") .";
  }
  out << " }";
  if (g.aggregate == QueryGraph::Aggregate::ArgMax ||
      g.aggregate == QueryGraph::Aggregate::ArgMin) {
    out << " ORDER BY "
        << (g.aggregate == QueryGraph::Aggregate::ArgMax ? "DESC(" : "ASC(")
        << sparql_term(g, g.aggregate_node, var_names) << ") LIMIT 1";
  }
  return out.str();
}

}  // namespace fc
