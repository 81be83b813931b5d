#pragma once

// Shared test machinery: a seeded synthetic knowledge-base generator, random
// expression builders, and independent reference implementations (nested-loop
// pair sets, brute-force composition, brute-force mention scan, the hop rule)
// used to cross-check the library against first principles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fc/composer.hpp"
#include "fc/exec.hpp"
#include "fc/kb.hpp"
#include "fc/linking.hpp"
#include "fc/midgrain.hpp"
#include "fc/retrieval.hpp"
#include "fc/sexpr.hpp"

namespace testsupport {

inline int rand_int(std::mt19937& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double rand_real(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline bool chance(std::mt19937& rng, double p) { return rand_real(rng, 0.0, 1.0) < p; }

template <typename T>
const T& pick(std::mt19937& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(rand_int(rng, 0, static_cast<int>(v.size()) - 1))];
}

inline const std::vector<std::string>& noun_pool() {
  static const std::vector<std::string> pool = {
      "river",  "bridge", "harbor",  "forest", "garden",  "castle", "market", "museum",
      "engine", "signal", "tunnel",  "valley", "summit",  "meadow", "orchard", "quarry",
      "anchor", "beacon", "canyon",  "island", "lagoon",  "plateau"};
  return pool;
}

inline const std::vector<std::string>& verb_pool() {
  static const std::vector<std::string> pool = {"serves",  "links",  "feeds",  "guards",
                                                "crosses", "borders", "hosts",  "owns",
                                                "joins",   "covers",  "drains", "marks"};
  return pool;
}

inline const std::vector<std::string>& surname_pool() {
  static const std::vector<std::string> pool = {
      "Arden",  "Briar",  "Calder", "Dorian",  "Ellery", "Fenwick", "Garnet", "Halden",
      "Imber",  "Jasper", "Keller", "Lorcan",  "Merrit", "Norwell", "Orrin",  "Pascal",
      "Quill",  "Rowan",  "Sable",  "Thorne",  "Umber",  "Vesper",  "Winslow", "Yarrow"};
  return pool;
}

// ---------------------------------------------------------------------------
// Random knowledge bases.

struct KbSpec {
  int entity_classes = 4;
  int relations = 10;         // entity-valued relations, reverses included
  int literal_relations = 3;  // relations with a numeric value range
  int entities = 16;
  int facts = 80;             // non-typing fact lines attempted
  bool typing_facts = true;   // emit class-membership facts
  double reverse_fraction = 0.5;
  double untyped_fraction = 0.1;  // chance a relation end stays undeclared
};

struct GeneratedKb {
  std::string tsv;
  fc::KnowledgeBase kb;
  std::vector<std::string> class_ids;     // entity classes only
  std::vector<std::string> relation_ids;  // every declared relation id
  std::vector<std::string> entity_ids;
  std::vector<std::string> literal_tokens;  // lexical forms used in facts
};

inline GeneratedKb make_random_kb(std::mt19937& rng, const KbSpec& spec = {}) {
  GeneratedKb g;
  const std::vector<std::string> groupings = {"aqua", "terra", "volt"};

  struct RelRow {
    std::string id, name, domain, range, reverse;
  };
  std::vector<RelRow> rels;
  std::vector<std::pair<std::string, std::string>> class_rows;  // id, name

  for (int i = 0; i < spec.entity_classes; ++i) {
    std::string id = pick(rng, groupings) + ".k" + std::to_string(i);
    std::string name = pick(rng, noun_pool());
    if (chance(rng, 0.4)) name += " " + pick(rng, noun_pool());
    class_rows.push_back({id, name});
    g.class_ids.push_back(id);
  }
  const std::vector<std::pair<std::string, std::string>> value_classes = {
      {"t.integer", "integer value"}, {"t.float", "float value"}, {"t.year", "year value"}};
  for (const auto& vc : value_classes) class_rows.push_back(vc);

  auto maybe_class = [&](double skip_p) {
    return chance(rng, skip_p) ? std::string() : pick(rng, g.class_ids);
  };

  int serial = 0;
  while (static_cast<int>(rels.size()) < spec.relations) {
    std::string grp = pick(rng, groupings);
    std::string id = grp + ".r" + std::to_string(serial++);
    std::string name = pick(rng, verb_pool());
    if (chance(rng, 0.6)) name += " " + pick(rng, noun_pool());
    std::string domain = maybe_class(spec.untyped_fraction);
    std::string range = maybe_class(spec.untyped_fraction);
    if (chance(rng, spec.reverse_fraction) && static_cast<int>(rels.size()) + 1 < spec.relations) {
      std::string rid = grp + ".r" + std::to_string(serial++);
      std::string rname = pick(rng, noun_pool()) + " " + pick(rng, verb_pool());
      rels.push_back({id, name, domain, range, rid});
      rels.push_back({rid, rname, range, domain, id});
    } else {
      rels.push_back({id, name, domain, range, ""});
    }
  }
  for (int i = 0; i < spec.literal_relations; ++i) {
    static const std::vector<std::string> measures = {"count", "level", "score", "size"};
    std::string grp = pick(rng, groupings);
    std::string id = grp + ".v" + std::to_string(i);
    std::string name = pick(rng, noun_pool()) + " " + pick(rng, measures);
    std::string domain = maybe_class(spec.untyped_fraction);
    std::string range = pick(rng, value_classes).first;
    rels.push_back({id, name, domain, range, ""});
  }
  if (spec.typing_facts) rels.push_back({"type.object.type", "type", "", "", ""});
  for (const auto& r : rels) g.relation_ids.push_back(r.id);

  struct EntRow {
    std::string id, names, home;
    int popularity;
  };
  std::vector<EntRow> ents;
  for (int i = 0; i < spec.entities; ++i) {
    std::string id = "m.x" + std::to_string(i);
    std::string names = pick(rng, surname_pool());
    if (chance(rng, 0.4)) {
      std::string second = pick(rng, surname_pool()) + " " + pick(rng, surname_pool());
      names += "|" + second;
    }
    ents.push_back({id, names, pick(rng, g.class_ids), rand_int(rng, 0, 9)});
    g.entity_ids.push_back(id);
  }
  std::map<std::string, std::vector<std::string>> by_class;
  for (const auto& e : ents) by_class[e.home].push_back(e.id);

  auto member_or_any = [&](const std::string& cls) -> const std::string& {
    auto it = by_class.find(cls);
    if (cls.empty() || it == by_class.end() || it->second.empty())
      return pick(rng, g.entity_ids);
    return pick(rng, it->second);
  };

  std::set<std::string> fact_lines;
  std::set<std::string> literal_seen;
  for (int i = 0; i < spec.facts; ++i) {
    const RelRow& r = rels[static_cast<std::size_t>(
        rand_int(rng, 0, static_cast<int>(rels.size()) - 1 - (spec.typing_facts ? 1 : 0)))];
    std::string subject = member_or_any(r.domain);
    std::string object;
    if (r.range == "t.integer") {
      object = std::to_string(rand_int(rng, 1, 500)) + "^^integer";
    } else if (r.range == "t.float") {
      object = std::to_string(rand_int(rng, 1, 99)) + "." + std::to_string(rand_int(rng, 0, 9)) +
               "^^float";
    } else if (r.range == "t.year") {
      object = std::to_string(rand_int(rng, 1200, 2050)) + "^^year";
    } else {
      object = member_or_any(r.range);
    }
    if (object.find("^^") != std::string::npos && literal_seen.insert(object).second)
      g.literal_tokens.push_back(object);
    fact_lines.insert(subject + "\t" + r.id + "\t" + object);
  }
  if (spec.typing_facts)
    for (const auto& e : ents) fact_lines.insert(e.id + "\ttype.object.type\t" + e.home);

  std::string tsv = "#classes\n";
  for (const auto& [id, name] : class_rows) tsv += id + "\t" + name + "\n";
  tsv += "#relations\n";
  auto dash = [](const std::string& s) { return s.empty() ? "-" : s; };
  for (const auto& r : rels)
    tsv += r.id + "\t" + r.name + "\t" + dash(r.domain) + "\t" + dash(r.range) + "\t" +
           dash(r.reverse) + "\n";
  tsv += "#entities\n";
  for (const auto& e : ents)
    tsv += e.id + "\t" + std::to_string(e.popularity) + "\t" + e.names + "\n";
  tsv += "#facts\n";
  for (const auto& line : fact_lines) tsv += line + "\n";

  g.tsv = tsv;
  g.kb = fc::KnowledgeBase::load_string(tsv);
  return g;
}

// ---------------------------------------------------------------------------
// Nested-loop pair-set oracles, working only from kb.facts() and the declared
// relation rows (no use of the library's adjacency indexes).

struct RawFacts {
  const fc::KnowledgeBase* kb;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> direct;
  std::map<std::string, std::string> reverse_of;

  explicit RawFacts(const fc::KnowledgeBase& base) : kb(&base) {
    for (const auto& f : kb->facts()) direct[f.relation].push_back({f.subject, f.object});
    for (const auto& [id, rel] : kb->relations())
      if (!rel.reverse.empty()) reverse_of[id] = rel.reverse;
  }

  // (subject, object) pairs under the virtual reverse view.
  std::set<std::pair<std::string, std::string>> pairs(const std::string& r) const {
    std::set<std::pair<std::string, std::string>> out;
    if (auto it = direct.find(r); it != direct.end())
      for (const auto& p : it->second) out.insert(p);
    if (auto rv = reverse_of.find(r); rv != reverse_of.end())
      if (auto it = direct.find(rv->second); it != direct.end())
        for (const auto& [s, o] : it->second) out.insert({o, s});
    return out;
  }

  std::map<std::string, std::set<std::string>> incident() const {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& f : kb->facts()) {
      out[f.subject].insert(f.relation);
      if (f.object_kind == fc::ObjectKind::Entity) {
        out[f.object].insert(f.relation);
        if (auto rv = reverse_of.find(f.relation); rv != reverse_of.end())
          out[f.object].insert(rv->second);
      }
    }
    return out;
  }
};

inline std::set<fc::ClassRelationPair> oracle_cr(const std::set<std::string>& classes,
                                                 const std::set<std::string>& relations,
                                                 const fc::KnowledgeBase& kb) {
  std::set<fc::ClassRelationPair> out;
  for (const auto& c : classes) {
    if (kb.classes().count(c) == 0) continue;
    for (const auto& r : relations) {
      auto it = kb.relations().find(r);
      if (it == kb.relations().end()) continue;
      if (it->second.domain == c) out.insert({c, r, fc::PairDirection::Forward});
      if (it->second.range == c) out.insert({c, r, fc::PairDirection::Reverse});
    }
  }
  return out;
}

inline std::set<fc::RelationPair> oracle_rr(const std::set<std::string>& relations,
                                            const fc::KnowledgeBase& kb, bool ontology_only) {
  RawFacts raw(kb);
  std::set<std::string> tokens;
  for (const auto& r : relations) {
    if (kb.relations().count(r) == 0) continue;
    tokens.insert(r);
    if (auto it = raw.reverse_of.find(r); it != raw.reverse_of.end()) tokens.insert(it->second);
  }
  std::set<fc::RelationPair> out;
  for (const auto& r1 : tokens) {
    const auto& i1 = kb.relations().at(r1);
    if (i1.range.empty()) continue;
    for (const auto& r2 : tokens) {
      const auto& i2 = kb.relations().at(r2);
      if (i2.domain.empty() || i1.range != i2.domain) continue;
      if (!ontology_only) {
        bool witness = false;
        for (const auto& [a, b] : raw.pairs(r1)) {
          (void)a;
          for (const auto& [c, d] : raw.pairs(r2)) {
            (void)d;
            if (b == c) {
              witness = true;
              break;
            }
          }
          if (witness) break;
        }
        if (!witness) continue;
      }
      out.insert({r1, r2});
    }
  }
  return out;
}

inline bool has_entity_placeholder(const fc::SExpr& e) {
  if (e.is_leaf()) return e.symbol == fc::kEntityPlaceholder;
  for (const auto& c : e.children)
    if (has_entity_placeholder(c)) return true;
  return false;
}

inline std::set<fc::RelationEntityPair> oracle_re(const std::set<std::string>& relations,
                                                  const std::set<std::string>& entities,
                                                  const std::vector<fc::SExpr>& skeletons,
                                                  const fc::KnowledgeBase& kb) {
  bool any_slot = false;
  for (const auto& s : skeletons) any_slot = any_slot || has_entity_placeholder(s);
  std::set<fc::RelationEntityPair> out;
  if (!any_slot) return out;
  const auto incident = RawFacts(kb).incident();
  for (const auto& e : entities) {
    if (kb.entities().count(e) == 0) continue;
    auto it = incident.find(e);
    if (it == incident.end()) continue;
    for (const auto& r : relations)
      if (it->second.count(r) > 0) out.insert({r, e});
  }
  return out;
}

// Relation-aware pruning reference: candidates extended by their declared
// reverses, incidence recomputed from the raw fact list.
inline std::set<std::string> oracle_prune(const std::set<std::string>& entities,
                                          const std::set<std::string>& relations,
                                          const fc::KnowledgeBase& kb) {
  RawFacts raw(kb);
  std::set<std::string> wanted = relations;
  for (const auto& r : relations)
    if (auto it = raw.reverse_of.find(r); it != raw.reverse_of.end()) wanted.insert(it->second);
  const auto incident = raw.incident();
  std::set<std::string> out;
  for (const auto& e : entities) {
    auto it = incident.find(e);
    if (it == incident.end()) continue;
    for (const auto& r : it->second)
      if (wanted.count(r) > 0) {
        out.insert(e);
        break;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force mention detection: every token span whose lowercased text
// equals a surface name is a candidate; selection is leftmost, longest at
// each starting token, non-overlapping.

inline std::vector<fc::MentionSpan> oracle_detect(std::string_view question,
                                                  const fc::KnowledgeBase& kb) {
  const auto toks = fc::tokenize_with_offsets(question);
  std::map<std::vector<std::string>, std::set<std::string>> names;
  for (const auto& [id, info] : kb.entities())
    for (const auto& n : info.names) {
      auto nt = fc::tokenize(n);
      if (!nt.empty()) names[nt].insert(id);
    }
  std::vector<fc::MentionSpan> out;
  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t best = 0;
    const std::set<std::string>* ids = nullptr;
    for (std::size_t len = toks.size() - i; len >= 1; --len) {
      std::vector<std::string> key;
      for (std::size_t k = i; k < i + len; ++k) key.push_back(toks[k].token);
      if (auto it = names.find(key); it != names.end()) {
        best = len;
        ids = &it->second;
        break;
      }
    }
    if (ids == nullptr) {
      ++i;
      continue;
    }
    fc::MentionSpan m;
    m.begin = toks[i].begin;
    m.end = toks[i + best - 1].end;
    m.text = std::string(question.substr(m.begin, m.end - m.begin));
    m.entity_ids.assign(ids->begin(), ids->end());
    out.push_back(std::move(m));
    i += best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force constrained composition. Admissibility is derived from the
// pair sets directly; every admissible assignment is enumerated depth-first
// and scored exactly like the composer (skeleton score first, then one
// softmax weight per slot, added in slot order), and the best executable
// instantiation wins with ties broken by printed form.

inline void oracle_slot_kinds(const fc::SExpr& e, std::vector<fc::LeafKind>& out) {
  if (e.is_leaf()) {
    if (fc::is_placeholder_token(e.symbol)) out.push_back(e.leaf_kind);
    return;
  }
  if (e.op == fc::Op::And && e.children.size() == 2) {
    const bool second_class =
        e.children[1].is_leaf() && e.children[1].symbol == fc::kClassPlaceholder;
    const bool first_class =
        e.children[0].is_leaf() && e.children[0].symbol == fc::kClassPlaceholder;
    if (second_class && !first_class) {
      oracle_slot_kinds(e.children[1], out);
      oracle_slot_kinds(e.children[0], out);
      return;
    }
  }
  for (const auto& c : e.children) oracle_slot_kinds(c, out);
}

struct OracleComposeResult {
  bool answerable = false;
  double score = 0.0;
  std::string text;
  std::size_t finals = 0;  // distinct printed forms seen
};

inline OracleComposeResult oracle_compose(const fc::SkeletonCandidateSet& skeletons,
                                          const fc::PairSets& pairs,
                                          const fc::ComponentScores& scores,
                                          const fc::KnowledgeBase& kb, fc::ExecMode mode) {
  std::set<std::string> initial, classes, literals, all_entities;
  std::map<std::string, std::set<std::string>> after_class, after_rel, ents_by_rel;
  for (const auto& p : pairs.cr) {
    classes.insert(p.class_id);
    std::string token = p.relation;
    if (p.direction == fc::PairDirection::Reverse) {
      auto rev = kb.reverse(p.relation);
      if (!rev) continue;
      token = *rev;
    }
    after_class[p.class_id].insert(token);
    initial.insert(token);
  }
  for (const auto& [r1, r2] : pairs.rr) {
    after_rel[r1].insert(r2);
    initial.insert(r1);
    initial.insert(r2);
  }
  for (const auto& [r, e] : pairs.re) {
    ents_by_rel[r].insert(e);
    initial.insert(r);
  }
  for (const auto& [id, s] : scores.entities) all_entities.insert(id);
  for (const auto& [id, s] : scores.literals) literals.insert(id);

  std::vector<double> rel_pool, cls_pool, ent_pool, lit_pool;
  for (const auto& [id, s] : scores.relations) rel_pool.push_back(s);
  for (const auto& [id, s] : scores.classes) cls_pool.push_back(s);
  for (const auto& [id, s] : scores.entities) ent_pool.push_back(s);
  for (const auto& [id, s] : scores.literals) lit_pool.push_back(s);

  auto weight = [&](fc::LeafKind kind, const std::string& comp) -> double {
    switch (kind) {
      case fc::LeafKind::Relation: {
        auto it = scores.relations.find(comp);
        if (it == scores.relations.end()) {
          auto rel = kb.relations().find(comp);
          if (rel != kb.relations().end() && !rel->second.reverse.empty())
            it = scores.relations.find(rel->second.reverse);
          if (it == scores.relations.end() || rel == kb.relations().end()) return 0.0;
        }
        return fc::softmax_weight(it->second, rel_pool);
      }
      case fc::LeafKind::Class: {
        auto it = scores.classes.find(comp);
        return it == scores.classes.end() ? 0.0 : fc::softmax_weight(it->second, cls_pool);
      }
      case fc::LeafKind::Entity: {
        auto it = scores.entities.find(comp);
        return it == scores.entities.end() ? 0.0 : fc::softmax_weight(it->second, ent_pool);
      }
      case fc::LeafKind::Literal: {
        auto it = scores.literals.find(comp);
        return it == scores.literals.end() ? 0.0 : fc::softmax_weight(it->second, lit_pool);
      }
      default:
        return 0.0;
    }
  };

  struct Final {
    double score;
    std::string text;
    fc::SExpr expr;
  };
  std::vector<Final> finals;
  std::set<std::string> seen;

  for (const auto& cand : skeletons) {
    std::vector<fc::LeafKind> kinds;
    oracle_slot_kinds(cand.skeleton, kinds);

    // Distinct assignments of one skeleton can canonicalize to the same
    // printed form (symmetric AND); the best-scoring one survives, matching
    // the composer's score-ordered deduplication.
    std::map<std::string, Final> best;
    std::vector<std::string> assignment;
    std::function<void(double, const std::string&, fc::LeafKind)> rec =
        [&](double score, const std::string& last, fc::LeafKind last_kind) {
          if (assignment.size() == kinds.size()) {
            fc::SExpr expr = fc::canonicalize(fc::instantiate(cand.skeleton, assignment));
            std::string text = fc::print(expr);
            auto it = best.find(text);
            if (it == best.end())
              best.emplace(text, Final{score, text, std::move(expr)});
            else if (score > it->second.score)
              it->second.score = score;
            return;
          }
          const fc::LeafKind kind = kinds[assignment.size()];
          std::set<std::string> adm;
          switch (kind) {
            case fc::LeafKind::Relation:
              if (last.empty() || last_kind == fc::LeafKind::Entity ||
                  last_kind == fc::LeafKind::Literal) {
                adm = initial;
              } else if (last_kind == fc::LeafKind::Class) {
                if (auto it = after_class.find(last); it != after_class.end()) adm = it->second;
              } else {
                if (auto it = after_rel.find(last); it != after_rel.end()) adm = it->second;
              }
              break;
            case fc::LeafKind::Class:
              adm = classes;
              break;
            case fc::LeafKind::Entity:
              if (last_kind == fc::LeafKind::Relation && !last.empty()) {
                if (auto it = ents_by_rel.find(last); it != ents_by_rel.end())
                  adm.insert(it->second.begin(), it->second.end());
                if (auto rev = kb.reverse(last))
                  if (auto it = ents_by_rel.find(*rev); it != ents_by_rel.end())
                    adm.insert(it->second.begin(), it->second.end());
              } else {
                adm = all_entities;
              }
              break;
            case fc::LeafKind::Literal:
              adm = literals;
              break;
            default:
              break;
          }
          for (const auto& comp : adm) {
            assignment.push_back(comp);
            rec(score + weight(kind, comp), comp, kind);
            assignment.pop_back();
          }
        };
    rec(cand.score, "", fc::LeafKind::Class);
    for (auto& [text, fin] : best)
      if (seen.insert(text).second) finals.push_back(std::move(fin));
  }

  OracleComposeResult result;
  result.finals = finals.size();
  std::sort(finals.begin(), finals.end(), [](const Final& a, const Final& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  for (const auto& f : finals) {
    if (fc::is_executable(f.expr, kb, mode).ok) {
      result.answerable = true;
      result.score = f.score;
      result.text = f.text;
      return result;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Hop-rule reference used against the skeleton proposer: the unique <rel> of
// a one-hop skeleton doubles into a chain in set positions or a two-hop path
// in path positions; a two-hop chain or path composition collapses back.

inline int oracle_rels(const fc::SExpr& e) {
  if (e.is_leaf()) return e.symbol == fc::kRelPlaceholder ? 1 : 0;
  int n = 0;
  for (const auto& c : e.children) n += oracle_rels(c);
  return n;
}

inline std::optional<fc::SExpr> oracle_hop_rule(const fc::SExpr& skeleton) {
  using fc::Op;
  using fc::SExpr;
  const SExpr rel = SExpr::leaf(fc::kRelPlaceholder, fc::LeafKind::Relation);
  auto is_rel = [](const SExpr& e) { return e.is_leaf() && e.symbol == fc::kRelPlaceholder; };

  std::function<std::optional<SExpr>(const SExpr&, bool)> expand =
      [&](const SExpr& e, bool path) -> std::optional<SExpr> {
    if (e.is_leaf()) {
      if (is_rel(e) && path) return SExpr::node(Op::Join, {rel, rel});
      return std::nullopt;
    }
    if (e.op == Op::Join && is_rel(e.children[0]) && oracle_rels(e.children[1]) == 0)
      return SExpr::node(Op::Join, {rel, SExpr::node(Op::Join, {rel, e.children[1]})});
    SExpr copy = e;
    for (std::size_t i = 0; i < copy.children.size(); ++i) {
      if (oracle_rels(copy.children[i]) != 1) continue;
      bool child_path = false;
      if ((copy.op == Op::ArgMax || copy.op == Op::ArgMin) && i == 1) child_path = true;
      if ((copy.op == Op::Lt || copy.op == Op::Le || copy.op == Op::Gt || copy.op == Op::Ge) &&
          i == 0)
        child_path = true;
      auto sub = expand(copy.children[i], child_path);
      if (!sub) return std::nullopt;
      copy.children[i] = std::move(*sub);
      return copy;
    }
    return std::nullopt;
  };

  std::function<std::optional<SExpr>(const SExpr&)> collapse =
      [&](const SExpr& e) -> std::optional<SExpr> {
    if (e.is_leaf()) return std::nullopt;
    if (e.op == Op::Join && is_rel(e.children[0])) {
      const SExpr& tail = e.children[1];
      if (is_rel(tail)) return rel;
      if (tail.op == Op::Join && is_rel(tail.children[0]) && oracle_rels(tail.children[1]) == 0)
        return SExpr::node(Op::Join, {rel, tail.children[1]});
    }
    SExpr copy = e;
    for (auto& child : copy.children) {
      if (oracle_rels(child) != 2) continue;
      auto sub = collapse(child);
      if (!sub) return std::nullopt;
      child = std::move(*sub);
      return copy;
    }
    return std::nullopt;
  };

  const int rels = oracle_rels(skeleton);
  std::optional<SExpr> out;
  if (rels == 1) out = expand(skeleton, false);
  if (rels == 2) out = collapse(skeleton);
  if (out) return fc::canonicalize(*out);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Random well-formed expressions for exact-match testing.

struct ExprPools {
  std::vector<std::string> relations = {"aqua.k0.r0", "aqua.k0.r1", "terra.k1.r2",
                                        "terra.k1.r3", "volt.k2.r4", "volt.k2.r5"};
  std::vector<std::string> classes = {"aqua.k0", "terra.k1", "volt.k2", "ember.k3"};
  std::vector<std::string> entities = {"m.x0", "m.x1", "m.x2", "m.x3", "m.x4"};
  std::vector<std::string> literals = {"3^^integer", "7^^integer", "1950^^year", "2.5^^float"};
};

inline fc::SExpr random_set(std::mt19937& rng, const ExprPools& pools, int depth) {
  using fc::LeafKind;
  using fc::Op;
  using fc::SExpr;
  const int roll = rand_int(rng, 0, depth <= 0 ? 1 : 9);
  auto rel = [&] { return SExpr::leaf(pick(rng, pools.relations), LeafKind::Relation); };
  if (roll <= 1) {
    if (roll == 0 || depth <= 0)
      return SExpr::node(Op::Join, {rel(), SExpr::leaf(pick(rng, pools.entities),
                                                       LeafKind::Entity)});
    return SExpr::leaf(pick(rng, pools.classes), LeafKind::Class);
  }
  switch (roll) {
    case 2:
      return SExpr::node(Op::Join,
                         {rel(), SExpr::leaf(pick(rng, pools.literals), LeafKind::Literal)});
    case 3:
      return SExpr::node(Op::Join,
                         {rel(), SExpr::leaf(pick(rng, pools.classes), LeafKind::Class)});
    case 4:
      return SExpr::node(Op::Join, {SExpr::node(Op::Reverse, {rel()}),
                                    SExpr::leaf(pick(rng, pools.entities), LeafKind::Entity)});
    case 5:
      return SExpr::node(Op::Join, {rel(), random_set(rng, pools, depth - 1)});
    case 6: {
      static const std::vector<Op> cmps = {Op::Lt, Op::Le, Op::Gt, Op::Ge};
      return SExpr::node(pick(rng, cmps),
                         {rel(), SExpr::leaf(pick(rng, pools.literals), LeafKind::Literal)});
    }
    default:
      return SExpr::node(Op::And,
                         {random_set(rng, pools, depth - 1), random_set(rng, pools, depth - 1)});
  }
}

inline fc::SExpr random_expression(std::mt19937& rng, const ExprPools& pools, int depth = 3) {
  using fc::LeafKind;
  using fc::Op;
  using fc::SExpr;
  SExpr set = random_set(rng, pools, depth);
  const int roll = rand_int(rng, 0, 9);
  if (roll == 0) return SExpr::node(Op::Count, {std::move(set)});
  if (roll == 1 || roll == 2) {
    Op agg = roll == 1 ? Op::ArgMax : Op::ArgMin;
    SExpr path = SExpr::leaf(pick(rng, pools.relations), LeafKind::Relation);
    if (chance(rng, 0.3))
      path = SExpr::node(Op::Join,
                         {path, SExpr::leaf(pick(rng, pools.relations), LeafKind::Relation)});
    return SExpr::node(agg, {std::move(set), std::move(path)});
  }
  return set;
}

// Randomly swaps AND children throughout; exact-match equivalent by
// commutativity.
inline fc::SExpr shuffle_commutative(std::mt19937& rng, const fc::SExpr& e) {
  fc::SExpr copy = e;
  if (copy.is_leaf()) return copy;
  for (auto& c : copy.children) c = shuffle_commutative(rng, c);
  if (copy.op == fc::Op::And && chance(rng, 0.5)) std::swap(copy.children[0], copy.children[1]);
  return copy;
}

inline void collect_leaves(fc::SExpr& e, std::vector<fc::SExpr*>& out) {
  if (e.is_leaf()) {
    out.push_back(&e);
    return;
  }
  for (auto& c : e.children) collect_leaves(c, out);
}

// Replaces one leaf with a different symbol of the same kind; the result is
// never exact-match equivalent to the input.
inline fc::SExpr mutate_leaf(std::mt19937& rng, const fc::SExpr& e, const ExprPools& pools) {
  fc::SExpr copy = e;
  std::vector<fc::SExpr*> leaves;
  collect_leaves(copy, leaves);
  fc::SExpr* leaf = leaves[static_cast<std::size_t>(
      rand_int(rng, 0, static_cast<int>(leaves.size()) - 1))];
  const std::vector<std::string>* pool = nullptr;
  switch (leaf->leaf_kind) {
    case fc::LeafKind::Relation: pool = &pools.relations; break;
    case fc::LeafKind::Class: pool = &pools.classes; break;
    case fc::LeafKind::Entity: pool = &pools.entities; break;
    case fc::LeafKind::Literal: pool = &pools.literals; break;
  }
  std::string replacement = leaf->symbol;
  while (replacement == leaf->symbol) replacement = pick(rng, *pool);
  leaf->symbol = replacement;
  return copy;
}

// ---------------------------------------------------------------------------
// Direct contrastive-loss evaluation in extended precision.

inline double contrastive_reference(double positive, const std::vector<double>& negatives) {
  long double denom = std::exp(static_cast<long double>(positive));
  for (double n : negatives) denom += std::exp(static_cast<long double>(n));
  return static_cast<double>(
      -std::log(std::exp(static_cast<long double>(positive)) / denom));
}

// ---------------------------------------------------------------------------
// Question crafting over a generated knowledge base: mixes relation and
// class name tokens with a surface name so the lexical stages have traction.

inline std::string random_question(std::mt19937& rng, const GeneratedKb& g) {
  std::string q = chance(rng, 0.5) ? "which" : "what";
  const auto& kb = g.kb;
  if (chance(rng, 0.25)) q = "how many";
  const std::string& cls = pick(rng, g.class_ids);
  q += " " + kb.classes().at(cls).name;
  const std::string& rel = pick(rng, g.relation_ids);
  q += " " + kb.relations().at(rel).name;
  if (chance(rng, 0.7)) {
    const std::string& ent = pick(rng, g.entity_ids);
    q += " " + pick(rng, kb.entities().at(ent).names);
  } else if (chance(rng, 0.5)) {
    q += chance(rng, 0.5) ? " at least " : " at most ";
    q += std::to_string(rand_int(rng, 1, 500));
  }
  return q + "?";
}

}  // namespace testsupport
