#include "fc/skeleton.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "fc/linking.hpp"
#include "fc/retrieval.hpp"

namespace fc {

namespace {

SExpr rel_leaf() { return SExpr::leaf(kRelPlaceholder, LeafKind::Relation); }
SExpr class_leaf() { return SExpr::leaf(kClassPlaceholder, LeafKind::Class); }
SExpr entity_leaf() { return SExpr::leaf(kEntityPlaceholder, LeafKind::Entity); }
SExpr literal_leaf() { return SExpr::leaf(kLiteralPlaceholder, LeafKind::Literal); }

int rel_count(const SExpr& e) {
  if (e.is_leaf()) return e.symbol == kRelPlaceholder ? 1 : 0;
  int n = 0;
  for (const auto& c : e.children) n += rel_count(c);
  return n;
}

int entity_count(const SExpr& e) {
  if (e.is_leaf()) return e.symbol == kEntityPlaceholder ? 1 : 0;
  int n = 0;
  for (const auto& c : e.children) n += entity_count(c);
  return n;
}

int literal_count(const SExpr& e) {
  if (e.is_leaf()) return e.symbol == kLiteralPlaceholder ? 1 : 0;
  int n = 0;
  for (const auto& c : e.children) n += literal_count(c);
  return n;
}

bool has_class(const SExpr& e) {
  if (e.is_leaf()) return e.symbol == kClassPlaceholder;
  return std::any_of(e.children.begin(), e.children.end(), has_class);
}

struct Gen {
  const SkeletonOptions& opt;
  std::map<std::string, SExpr> out;  // print -> canonical skeleton

  bool allowed(Op op) const { return opt.allowed.count(op) > 0; }

  void add(const SExpr& e) {
    SExpr canon = canonicalize(e);
    out.emplace(print(canon), std::move(canon));
  }

  // A hop is a plain relation slot; reverse traversal is expressed through
  // declared reverse relation ids rather than R-wrapped placeholders, so
  // skeletons never contain semantically duplicate R variants.
  std::vector<SExpr> hops() const { return {rel_leaf()}; }

  // Join chains of exactly h hops ending in an entity or literal.
  std::vector<SExpr> chains(int h) const {
    std::vector<SExpr> v;
    if (!allowed(Op::Join) || h < 1) return v;
    if (h == 1) {
      for (const auto& p : hops()) {
        v.push_back(SExpr::node(Op::Join, {p, entity_leaf()}));
        v.push_back(SExpr::node(Op::Join, {p, literal_leaf()}));
      }
      return v;
    }
    for (const auto& p : hops())
      for (const auto& tail : chains(h - 1)) v.push_back(SExpr::node(Op::Join, {p, tail}));
    return v;
  }

  // Single-hop comparisons against a literal.
  std::vector<SExpr> comparisons() const {
    std::vector<SExpr> v;
    for (Op op : {Op::Lt, Op::Le, Op::Gt, Op::Ge})
      if (allowed(op)) v.push_back(SExpr::node(op, {rel_leaf(), literal_leaf()}));
    return v;
  }

  // Constraints usable inside AND: chains and comparisons, h hops total.
  std::vector<SExpr> constraints(int h) const {
    std::vector<SExpr> v = chains(h);
    if (h == 1)
      for (auto& c : comparisons()) v.push_back(std::move(c));
    return v;
  }

  // All set expressions with exactly h relation placeholders.
  std::vector<SExpr> sets(int h) const {
    std::vector<SExpr> v;
    if (h == 0) {
      v.push_back(class_leaf());
      return v;
    }
    for (auto& c : constraints(h)) v.push_back(std::move(c));
    if (allowed(Op::And)) {
      for (auto& c : constraints(h))
        v.push_back(SExpr::node(Op::And, {class_leaf(), std::move(c)}));
      for (int h1 = 1; h1 <= h - 1; ++h1) {
        int h2 = h - h1;
        if (h1 > h2) break;  // unordered pairs; canonicalization sorts AND
        for (const auto& a : constraints(h1))
          for (const auto& b : constraints(h2)) v.push_back(SExpr::node(Op::And, {a, b}));
      }
    }
    return v;
  }

  // Relation paths of exactly k hops for superlative value access.
  std::vector<SExpr> paths(int k) const {
    if (k == 1) return hops();
    std::vector<SExpr> v;
    if (!allowed(Op::Join)) return v;
    for (const auto& p : hops())
      for (const auto& tail : paths(k - 1)) v.push_back(SExpr::node(Op::Join, {p, tail}));
    return v;
  }

  void run() {
    std::vector<SExpr> all_sets;
    for (int h = 0; h <= opt.max_hops; ++h)
      for (auto& s : sets(h)) all_sets.push_back(std::move(s));

    for (const auto& s : all_sets) {
      if (rel_count(s) >= 1 || s.is_leaf()) add(s);
      if (allowed(Op::Count)) add(SExpr::node(Op::Count, {s}));
    }
    for (Op sup : {Op::ArgMax, Op::ArgMin}) {
      if (!allowed(sup)) continue;
      for (int k = 1; k <= std::min(2, opt.max_hops); ++k) {
        for (const auto& p : paths(k)) {
          for (const auto& s : all_sets) {
            if (rel_count(s) + k > opt.max_hops) continue;
            SExpr e = SExpr::node(sup, {s, p});
            add(e);
            if (allowed(Op::Count)) add(SExpr::node(Op::Count, {e}));
          }
        }
      }
    }
  }
};

bool has_word(const std::vector<std::string>& tokens, const std::string& w) {
  return std::find(tokens.begin(), tokens.end(), w) != tokens.end();
}

bool has_phrase(const std::vector<std::string>& tokens, const std::string& a, const std::string& b) {
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
    if (tokens[i] == a && tokens[i + 1] == b) return true;
  return false;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

const char* const kMaxCues[] = {"largest", "biggest",  "most",   "highest", "longest",
                                "greatest", "maximum", "latest", "newest",  "tallest"};
const char* const kMinCues[] = {"smallest", "least",  "lowest",  "shortest", "minimum",
                                "fewest",   "oldest", "earliest", "first"};
const char* const kMoreCues[] = {"more", "greater", "larger", "longer", "taller",
                                 "higher", "over", "above", "exceeding", "exceeds"};
const char* const kLessCues[] = {"less", "fewer", "under", "below", "shorter",
                                 "smaller", "lower"};

}  // namespace

std::vector<SExpr> enumerate_skeletons(const SkeletonOptions& options) {
  Gen gen{options, {}};
  gen.run();
  std::vector<SExpr> result;
  result.reserve(gen.out.size());
  for (auto& [text, skel] : gen.out) result.push_back(std::move(skel));
  std::stable_sort(result.begin(), result.end(), [](const SExpr& a, const SExpr& b) {
    int ra = rel_count(a), rb = rel_count(b);
    if (ra != rb) return ra < rb;
    return print(a) < print(b);
  });
  return result;
}

double HeuristicSkeletonScorer::score(const std::string& masked_question,
                                      const std::string& skeleton) const {
  const std::vector<std::string> tokens = tokenize(masked_question);
  double s = 0.0;

  const bool count_cue = has_phrase(tokens, "how", "many");
  const bool has_count = contains(skeleton, "(COUNT ");
  s += (count_cue == has_count) ? 4.0 : -4.0;

  bool at_bound = has_phrase(tokens, "at", "least") || has_phrase(tokens, "at", "most");
  bool max_cue = false, min_cue = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    const bool after_at = i > 0 && tokens[i - 1] == "at";
    for (const char* c : kMaxCues)
      if (t == c && !(after_at && t == "most")) max_cue = true;
    for (const char* c : kMinCues)
      if (t == c && !(after_at && t == "least")) min_cue = true;
  }
  s += (max_cue == contains(skeleton, "(ARGMAX ")) ? 4.0 : -4.0;
  s += (min_cue == contains(skeleton, "(ARGMIN ")) ? 4.0 : -4.0;

  const bool cmp_cue = has_word(tokens, "than") || at_bound || has_word(tokens, "over") ||
                       has_word(tokens, "under") || has_word(tokens, "above") ||
                       has_word(tokens, "below");
  const bool has_lt = contains(skeleton, "(LT ") || contains(skeleton, "(LE ");
  const bool has_gt = contains(skeleton, "(GT ") || contains(skeleton, "(GE ");
  s += (cmp_cue == (has_lt || has_gt)) ? 4.0 : -4.0;
  if (cmp_cue && (has_lt || has_gt)) {
    bool more = false, less = false;
    for (const char* c : kMoreCues) more = more || has_word(tokens, c);
    for (const char* c : kLessCues) less = less || has_word(tokens, c);
    if (has_phrase(tokens, "at", "least")) more = true;
    if (has_phrase(tokens, "at", "most")) less = true;
    if ((more && has_gt) || (less && has_lt)) s += 1.0;
  }

  std::size_t question_literals = extract_literals(masked_question).size();
  std::size_t skeleton_literals = 0;
  for (std::size_t p = skeleton.find(kLiteralPlaceholder); p != std::string::npos;
       p = skeleton.find(kLiteralPlaceholder, p + 1))
    ++skeleton_literals;
  s += (question_literals == skeleton_literals) ? 2.0 : -2.0;

  if (contains(skeleton, kClassPlaceholder)) s += 1.0;

  int rels = 0;
  for (std::size_t p = skeleton.find(kRelPlaceholder); p != std::string::npos;
       p = skeleton.find(kRelPlaceholder, p + 1))
    ++rels;
  if (rels > 1) s -= 3.0 * (rels - 1);

  return s;
}

std::size_t masked_entity_count(const std::string& masked_question) {
  std::size_t n = 0;
  std::size_t p = 0;
  while ((p = masked_question.find("<entity", p)) != std::string::npos) {
    std::size_t q = p + 7;
    std::size_t digits = 0;
    while (q < masked_question.size() && std::isdigit(static_cast<unsigned char>(masked_question[q]))) {
      ++q;
      ++digits;
    }
    if (digits > 0 && q < masked_question.size() && masked_question[q] == '>') ++n;
    p = q;
  }
  return n;
}

namespace {

bool is_hop(const SExpr& e) {
  if (e.is_leaf()) return e.symbol == kRelPlaceholder;
  return e.op == Op::Reverse && e.children.size() == 1 && e.children[0].is_leaf() &&
         e.children[0].symbol == kRelPlaceholder;
}

// Expands the unique hop: set joins gain an inner <rel> hop, bare paths
// become a two-hop path composition.
std::optional<SExpr> expand_one(const SExpr& e, bool path_role) {
  if (rel_count(e) == 0) return std::nullopt;
  if (is_hop(e)) {
    if (!path_role) return std::nullopt;
    return SExpr::node(Op::Join, {e, rel_leaf()});
  }
  if (e.op == Op::Join && is_hop(e.children[0]) && rel_count(e.children[1]) == 0)
    return SExpr::node(Op::Join, {e.children[0], SExpr::node(Op::Join, {rel_leaf(), e.children[1]})});
  SExpr copy = e;
  for (std::size_t i = 0; i < copy.children.size(); ++i) {
    bool child_is_path = copy.op == Op::Reverse ||
                         ((copy.op == Op::ArgMax || copy.op == Op::ArgMin) && i == 1) ||
                         ((copy.op == Op::Lt || copy.op == Op::Le || copy.op == Op::Gt ||
                           copy.op == Op::Ge) &&
                          i == 0);
    if (rel_count(copy.children[i]) == 1) {
      auto sub = expand_one(copy.children[i], child_is_path);
      if (!sub) return std::nullopt;
      copy.children[i] = std::move(*sub);
      return copy;
    }
  }
  return std::nullopt;
}

// Collapses the unique two-hop chain back to one hop.
std::optional<SExpr> collapse_one(const SExpr& e) {
  if (e.is_leaf()) return std::nullopt;
  if (e.op == Op::Join && is_hop(e.children[0])) {
    const SExpr& tail = e.children[1];
    if (is_hop(tail)) return e.children[0];  // path composition (JOIN hop hop)
    if (tail.op == Op::Join && is_hop(tail.children[0]) && rel_count(tail.children[1]) == 0)
      return SExpr::node(Op::Join, {e.children[0], tail.children[1]});
  }
  SExpr copy = e;
  for (auto& child : copy.children) {
    if (rel_count(child) == 2) {
      auto sub = collapse_one(child);
      if (!sub) return std::nullopt;
      child = std::move(*sub);
      return copy;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<SExpr> rule_augment(const SExpr& skeleton) {
  const int rels = rel_count(skeleton);
  if (rels == 1) {
    auto e = expand_one(skeleton, false);
    if (e) return canonicalize(*e);
    return std::nullopt;
  }
  if (rels == 2) {
    auto c = collapse_one(skeleton);
    if (c) return canonicalize(*c);
    return std::nullopt;
  }
  return std::nullopt;
}

SkeletonCandidateSet propose(const std::string& masked_question, const SkeletonScorer& scorer,
                             const std::vector<SExpr>& enumerated) {
  const std::size_t mentions = masked_entity_count(masked_question);

  struct Ranked {
    const SExpr* skel;
    std::string text;
    double score;
    int rels;
  };
  std::vector<Ranked> ranked;
  for (const auto& s : enumerated) {
    if (static_cast<std::size_t>(entity_count(s)) != mentions) continue;
    std::string text = print(s);
    double sc = scorer.score(masked_question, text);
    ranked.push_back({&s, std::move(text), sc, rel_count(s)});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.rels != b.rels) return a.rels < b.rels;
    return a.text < b.text;
  });

  SkeletonCandidateSet out;
  if (ranked.empty()) return out;
  out.push_back({*ranked[0].skel, ranked[0].score});

  auto aug = rule_augment(*ranked[0].skel);
  if (aug && !(*aug == *ranked[0].skel)) {
    out.push_back({*aug, scorer.score(masked_question, print(*aug))});
  } else if (ranked.size() > 1) {
    out.push_back({*ranked[1].skel, ranked[1].score});
  }
  return out;
}

SkeletonCandidateSet propose(const std::string& masked_question, const SkeletonScorer& scorer,
                             const SkeletonOptions& options) {
  return propose(masked_question, scorer, enumerate_skeletons(options));
}

}  // namespace fc
