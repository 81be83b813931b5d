#include "fc/sexpr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

namespace fc {

namespace {

struct OpEntry {
  Op op;
  const char* name;
  int arity;
};

constexpr std::array<OpEntry, 10> kOps = {{
    {Op::And, "AND", 2},
    {Op::Join, "JOIN", 2},
    {Op::Reverse, "R", 1},
    {Op::Count, "COUNT", 1},
    {Op::ArgMax, "ARGMAX", 2},
    {Op::ArgMin, "ARGMIN", 2},
    {Op::Lt, "LT", 2},
    {Op::Le, "LE", 2},
    {Op::Gt, "GT", 2},
    {Op::Ge, "GE", 2},
}};

}  // namespace

const char* op_name(Op op) {
  for (const auto& e : kOps) {
    if (e.op == op) return e.name;
  }
  return "?";
}

std::optional<Op> op_from_name(std::string_view name) {
  for (const auto& e : kOps) {
    if (name == e.name) return e.op;
  }
  return std::nullopt;
}

int op_arity(Op op) {
  for (const auto& e : kOps) {
    if (e.op == op) return e.arity;
  }
  return 0;
}

bool SExpr::operator==(const SExpr& other) const {
  if (op != other.op) return false;
  if (is_leaf()) return symbol == other.symbol && leaf_kind == other.leaf_kind;
  return children == other.children;
}

SExpr SExpr::leaf(std::string symbol, LeafKind kind) {
  SExpr e;
  e.leaf_kind = kind;
  e.symbol = std::move(symbol);
  return e;
}

SExpr SExpr::node(Op op, std::vector<SExpr> children) {
  SExpr e;
  e.op = op;
  e.children = std::move(children);
  return e;
}

ParseError::ParseError(const std::string& message, std::size_t offset)
    : std::runtime_error(message + " at offset " + std::to_string(offset)), offset(offset) {}

bool is_entity_token(std::string_view token) {
  return token.rfind("m.", 0) == 0 || token.rfind("g.", 0) == 0;
}

bool is_literal_token(std::string_view token) {
  return token.find("^^") != std::string_view::npos;
}

bool is_placeholder_token(std::string_view token) {
  return token == kRelPlaceholder || token == kClassPlaceholder ||
         token == kEntityPlaceholder || token == kLiteralPlaceholder;
}

bool split_literal(std::string_view token, std::string& value, std::string& type) {
  auto pos = token.find("^^");
  if (pos == std::string_view::npos) return false;
  value.assign(token.substr(0, pos));
  type.assign(token.substr(pos + 2));
  return !value.empty() && !type.empty();
}

std::optional<double> literal_numeric_value(std::string_view token) {
  std::string value, type;
  if (!split_literal(token, value, type)) return std::nullopt;
  if (type != "integer" && type != "float" && type != "year") return std::nullopt;
  double out = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return out;
}

namespace {

struct Token {
  enum class Type { Open, Close, Atom, End };
  Type type;
  std::string_view text;
  std::size_t offset;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ >= text_.size()) return {Token::Type::End, {}, text_.size()};
    std::size_t start = pos_;
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      return {Token::Type::Open, text_.substr(start, 1), start};
    }
    if (c == ')') {
      ++pos_;
      return {Token::Type::Close, text_.substr(start, 1), start};
    }
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')') {
      ++pos_;
    }
    return {Token::Type::Atom, text_.substr(start, pos_ - start), start};
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text), lookahead_(lexer_.next()) {}

  SExpr parse_all() {
    SExpr e = parse_expr();
    if (lookahead_.type != Token::Type::End) {
      throw ParseError("trailing input after expression", lookahead_.offset);
    }
    return e;
  }

 private:
  Token take() {
    Token t = lookahead_;
    lookahead_ = lexer_.next();
    return t;
  }

  SExpr parse_expr() {
    Token t = take();
    switch (t.type) {
      case Token::Type::Atom:
        return SExpr::leaf(std::string(t.text), LeafKind::Class);
      case Token::Type::Open: {
        Token head = take();
        if (head.type != Token::Type::Atom) {
          throw ParseError("expected operator after '('", head.offset);
        }
        auto op = op_from_name(head.text);
        if (!op) {
          throw ParseError("unknown operator '" + std::string(head.text) + "'", head.offset);
        }
        std::vector<SExpr> children;
        while (lookahead_.type == Token::Type::Atom || lookahead_.type == Token::Type::Open) {
          children.push_back(parse_expr());
        }
        Token close = take();
        if (close.type != Token::Type::Close) {
          throw ParseError("expected ')'", close.offset);
        }
        if (static_cast<int>(children.size()) != op_arity(*op)) {
          throw ParseError(std::string(op_name(*op)) + " expects " +
                               std::to_string(op_arity(*op)) + " arguments, got " +
                               std::to_string(children.size()),
                           t.offset);
        }
        return SExpr::node(*op, std::move(children));
      }
      case Token::Type::Close:
        throw ParseError("unexpected ')'", t.offset);
      case Token::Type::End:
        throw ParseError("unexpected end of input", t.offset);
    }
    throw ParseError("unreachable", t.offset);
  }

  Lexer lexer_;
  Token lookahead_;
};

enum class Role { Set, Object, Path, LiteralSlot };

void classify_leaf(SExpr& e, Role role) {
  if (is_placeholder_token(e.symbol)) {
    if (e.symbol == kRelPlaceholder) e.leaf_kind = LeafKind::Relation;
    else if (e.symbol == kClassPlaceholder) e.leaf_kind = LeafKind::Class;
    else if (e.symbol == kEntityPlaceholder) e.leaf_kind = LeafKind::Entity;
    else e.leaf_kind = LeafKind::Literal;
    return;
  }
  switch (role) {
    case Role::Path:
      e.leaf_kind = LeafKind::Relation;
      return;
    case Role::LiteralSlot:
      e.leaf_kind = LeafKind::Literal;
      return;
    case Role::Set:
    case Role::Object:
      if (is_literal_token(e.symbol)) e.leaf_kind = LeafKind::Literal;
      else if (is_entity_token(e.symbol)) e.leaf_kind = LeafKind::Entity;
      else e.leaf_kind = LeafKind::Class;
      return;
  }
}

void classify(SExpr& e, Role role, int depth) {
  if (e.is_leaf()) {
    classify_leaf(e, role);
    return;
  }
  switch (*e.op) {
    case Op::Count:
      if (depth != 0) throw ParseError("COUNT is only allowed as the outermost operator", 0);
      classify(e.children[0], Role::Set, 1);
      return;
    case Op::And:
      classify(e.children[0], Role::Set, 2);
      classify(e.children[1], Role::Set, 2);
      return;
    case Op::Join:
      if (role == Role::Path) {
        classify(e.children[0], Role::Path, 2);
        classify(e.children[1], Role::Path, 2);
      } else {
        classify(e.children[0], Role::Path, 2);
        classify(e.children[1], Role::Object, 2);
      }
      return;
    case Op::Reverse:
      if (e.children[0].is_leaf() || e.children[0].op == Op::Reverse ||
          e.children[0].op == Op::Join) {
        classify(e.children[0], Role::Path, 2);
        return;
      }
      throw ParseError("R expects a relation path", 0);
    case Op::ArgMax:
    case Op::ArgMin:
      if (depth > 1) {
        throw ParseError(std::string(op_name(*e.op)) +
                             " is only allowed at the outermost level",
                         0);
      }
      classify(e.children[0], Role::Set, 2);
      classify(e.children[1], Role::Path, 2);
      return;
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge:
      classify(e.children[0], Role::Path, 2);
      classify(e.children[1], Role::LiteralSlot, 2);
      return;
  }
}

void validate_paths(const SExpr& e, Role role) {
  if (e.is_leaf()) return;
  if (role == Role::Path && *e.op != Op::Join && *e.op != Op::Reverse) {
    throw ParseError(std::string(op_name(*e.op)) + " is not a relation path", 0);
  }
  switch (*e.op) {
    case Op::Count:
    case Op::And:
      for (const auto& c : e.children) validate_paths(c, Role::Set);
      return;
    case Op::Join:
      if (role == Role::Path) {
        validate_paths(e.children[0], Role::Path);
        validate_paths(e.children[1], Role::Path);
      } else {
        validate_paths(e.children[0], Role::Path);
        validate_paths(e.children[1], Role::Set);
      }
      return;
    case Op::Reverse:
      validate_paths(e.children[0], Role::Path);
      return;
    case Op::ArgMax:
    case Op::ArgMin:
      validate_paths(e.children[0], Role::Set);
      validate_paths(e.children[1], Role::Path);
      return;
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge:
      validate_paths(e.children[0], Role::Path);
      return;
  }
}

}  // namespace

SExpr parse(std::string_view text) {
  Parser parser(text);
  SExpr e = parser.parse_all();
  classify(e, Role::Set, 0);
  validate_paths(e, Role::Set);
  return e;
}

std::string print(const SExpr& expr) {
  if (expr.is_leaf()) return expr.symbol;
  std::string out = "(";
  out += op_name(*expr.op);
  for (const auto& c : expr.children) {
    out += ' ';
    out += print(c);
  }
  out += ')';
  return out;
}

SExpr skeletonize(const SExpr& expr) {
  if (expr.is_leaf()) {
    switch (expr.leaf_kind) {
      case LeafKind::Relation: return SExpr::leaf(kRelPlaceholder, LeafKind::Relation);
      case LeafKind::Class: return SExpr::leaf(kClassPlaceholder, LeafKind::Class);
      case LeafKind::Entity: return SExpr::leaf(kEntityPlaceholder, LeafKind::Entity);
      case LeafKind::Literal: return SExpr::leaf(kLiteralPlaceholder, LeafKind::Literal);
    }
  }
  SExpr out = expr;
  for (auto& c : out.children) c = skeletonize(c);
  return out;
}

SExpr canonicalize(const SExpr& expr) {
  if (expr.is_leaf()) return expr;
  SExpr out = expr;
  for (auto& c : out.children) c = canonicalize(c);
  if (out.op == Op::Reverse && !out.children[0].is_leaf() &&
      out.children[0].op == Op::Reverse) {
    return out.children[0].children[0];
  }
  if (out.op == Op::And) {
    std::sort(out.children.begin(), out.children.end(),
              [](const SExpr& a, const SExpr& b) { return print(a) < print(b); });
  }
  return out;
}

namespace {

// Incremental query-graph builder with union-find over variable nodes.
class GraphBuilder {
 public:
  QueryGraph finish(int answer, QueryGraph::Aggregate agg, int agg_node) {
    QueryGraph g;
    g.nodes = nodes_;
    for (auto& e : edges_) g.edges.push_back({find(e.from), e.relation, find(e.to)});
    for (auto& c : constraints_) g.constraints.push_back({find(c.node), c.class_id});
    for (auto& f : filters_) g.filters.push_back({find(f.node), f.cmp, f.literal});
    g.answer = find(answer);
    g.aggregate = agg;
    g.aggregate_node = agg_node >= 0 ? find(agg_node) : -1;
    return g;
  }

  int fresh_var() {
    nodes_.push_back({QueryGraph::NodeType::Var, ""});
    parent_.push_back(static_cast<int>(nodes_.size()) - 1);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int value_node(QueryGraph::NodeType type, const std::string& label) {
    auto key = std::make_pair(type, label);
    auto it = value_nodes_.find(key);
    if (it != value_nodes_.end()) return it->second;
    nodes_.push_back({type, label});
    parent_.push_back(static_cast<int>(nodes_.size()) - 1);
    value_nodes_[key] = static_cast<int>(nodes_.size()) - 1;
    return static_cast<int>(nodes_.size()) - 1;
  }

  void add_edge(int from, const std::string& rel, int to) { edges_.push_back({from, rel, to}); }
  void add_constraint(int node, const std::string& cls) { constraints_.push_back({node, cls}); }
  void add_filter(int node, Op cmp, const std::string& lit) { filters_.push_back({node, cmp, lit}); }

  int find(int a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }

  // Merges two nodes; a non-variable representative wins over a variable.
  int merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    bool a_var = nodes_[a].type == QueryGraph::NodeType::Var;
    bool b_var = nodes_[b].type == QueryGraph::NodeType::Var;
    if (a_var && !b_var) std::swap(a, b);
    if (a_var == b_var && b < a) std::swap(a, b);
    parent_[b] = a;
    return a;
  }

 private:
  std::vector<QueryGraph::Node> nodes_;
  std::vector<int> parent_;
  std::vector<QueryGraph::Edge> edges_;
  std::vector<QueryGraph::TypeConstraint> constraints_;
  std::vector<QueryGraph::Filter> filters_;
  std::map<std::pair<QueryGraph::NodeType, std::string>, int> value_nodes_;
};

// Adds edges for a relation path from `subject` to `object`.
void add_path(GraphBuilder& b, const SExpr& path, int subject, int object) {
  if (path.is_leaf()) {
    b.add_edge(subject, path.symbol, object);
    return;
  }
  if (path.op == Op::Reverse) {
    add_path(b, path.children[0], object, subject);
    return;
  }
  // Path composition: subject -p1-> mid -p2-> object.
  int mid = b.fresh_var();
  add_path(b, path.children[0], subject, mid);
  add_path(b, path.children[1], mid, object);
}

int build_set(GraphBuilder& b, const SExpr& e);

int build_object(GraphBuilder& b, const SExpr& e) {
  if (e.is_leaf()) {
    switch (e.leaf_kind) {
      case LeafKind::Entity:
        return b.value_node(QueryGraph::NodeType::Entity, e.symbol);
      case LeafKind::Literal:
        return b.value_node(QueryGraph::NodeType::Literal, e.symbol);
      case LeafKind::Class:
        // Class leaf in object position denotes the class as a value.
        return b.value_node(QueryGraph::NodeType::Class, e.symbol);
      case LeafKind::Relation:
        throw std::runtime_error("relation leaf in object position");
    }
  }
  return build_set(b, e);
}

int build_set(GraphBuilder& b, const SExpr& e) {
  if (e.is_leaf()) {
    switch (e.leaf_kind) {
      case LeafKind::Class: {
        int v = b.fresh_var();
        b.add_constraint(v, e.symbol);
        return v;
      }
      case LeafKind::Entity:
        return b.value_node(QueryGraph::NodeType::Entity, e.symbol);
      case LeafKind::Literal:
        return b.value_node(QueryGraph::NodeType::Literal, e.symbol);
      case LeafKind::Relation:
        throw std::runtime_error("relation leaf in set position");
    }
  }
  switch (*e.op) {
    case Op::And: {
      int a = build_set(b, e.children[0]);
      int c = build_set(b, e.children[1]);
      return b.merge(a, c);
    }
    case Op::Join: {
      int subject = b.fresh_var();
      int object = build_object(b, e.children[1]);
      add_path(b, e.children[0], subject, object);
      return subject;
    }
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge: {
      int subject = b.fresh_var();
      int value = b.fresh_var();
      add_path(b, e.children[0], subject, value);
      b.add_filter(value, *e.op, e.children[1].symbol);
      return subject;
    }
    case Op::ArgMax:
    case Op::ArgMin:
      throw std::runtime_error("nested aggregate");
    default:
      throw std::runtime_error("unexpected operator in set position");
  }
}

}  // namespace

QueryGraph to_query_graph(const SExpr& expr) {
  SExpr canon = canonicalize(expr);
  GraphBuilder b;
  QueryGraph::Aggregate agg = QueryGraph::Aggregate::None;
  int agg_node = -1;
  const SExpr* body = &canon;
  if (!canon.is_leaf() && canon.op == Op::Count) {
    agg = QueryGraph::Aggregate::Count;
    body = &canon.children[0];
  }
  int answer = -1;
  if (!body->is_leaf() && (body->op == Op::ArgMax || body->op == Op::ArgMin)) {
    agg = body->op == Op::ArgMax ? QueryGraph::Aggregate::ArgMax : QueryGraph::Aggregate::ArgMin;
    answer = build_set(b, body->children[0]);
    agg_node = b.fresh_var();
    add_path(b, body->children[1], answer, agg_node);
  } else {
    answer = build_set(b, *body);
  }
  return b.finish(answer, agg, agg_node);
}

namespace {

std::string node_label(const QueryGraph& g, int id, const std::map<int, int>& var_names) {
  const auto& n = g.nodes[id];
  switch (n.type) {
    case QueryGraph::NodeType::Var:
      return "?x" + std::to_string(var_names.at(id));
    case QueryGraph::NodeType::Entity:
      return "e:" + n.label;
    case QueryGraph::NodeType::Class:
      return "c:" + n.label;
    case QueryGraph::NodeType::Literal:
      return "l:" + n.label;
  }
  return "?";
}

}  // namespace

std::string serialize_graph(const QueryGraph& g) {
  // Variables are renamed ?x0, ?x1, ... in order of first appearance,
  // starting from the answer node.
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
  if (g.aggregate_node >= 0) name_var(g.aggregate_node);

  std::ostringstream out;
  out << "answer " << node_label(g, g.answer, var_names) << '\n';
  switch (g.aggregate) {
    case QueryGraph::Aggregate::None: break;
    case QueryGraph::Aggregate::Count: out << "aggregate COUNT\n"; break;
    case QueryGraph::Aggregate::ArgMax:
      out << "aggregate ARGMAX " << node_label(g, g.aggregate_node, var_names) << '\n';
      break;
    case QueryGraph::Aggregate::ArgMin:
      out << "aggregate ARGMIN " << node_label(g, g.aggregate_node, var_names) << '\n';
      break;
  }
  std::vector<std::string> lines;
  for (const auto& e : g.edges) {
    lines.push_back("edge " + node_label(g, e.from, var_names) + " " + e.relation + " " +
                    node_label(g, e.to, var_names));
  }
  for (const auto& c : g.constraints) {
    lines.push_back("type " + node_label(g, c.node, var_names) + " " + c.class_id);
  }
  for (const auto& f : g.filters) {
    lines.push_back("filter " + node_label(g, f.node, var_names) + " " +
                    op_name(f.cmp) + " " + f.literal);
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) out << l << '\n';
  return out.str();
}

bool exact_match(const SExpr& a, const SExpr& b) {
  return serialize_graph(to_query_graph(a)) == serialize_graph(to_query_graph(b));
}

}  // namespace fc
