#include "fc/composer.hpp"

#include <algorithm>

#include "fc/retrieval.hpp"
#include "json.hpp"

namespace fc {

namespace {

// Relation scores fall back to the declared base relation for reverse ids.
std::optional<double> relation_score(const std::string& token, const ComponentScores& scores,
                                     const KnowledgeBase& kb) {
  auto it = scores.relations.find(token);
  if (it != scores.relations.end()) return it->second;
  auto rel = kb.relations().find(token);
  if (rel != kb.relations().end() && !rel->second.reverse.empty()) {
    auto base = scores.relations.find(rel->second.reverse);
    if (base != scores.relations.end()) return base->second;
  }
  return std::nullopt;
}

void warn(std::vector<std::string>* warnings, const std::string& message) {
  if (warnings) warnings->push_back(message);
}

}  // namespace

std::vector<OrderedElement> order_candidates(const PairSets& pairs, const ComponentScores& scores,
                                             const KnowledgeBase& kb,
                                             std::vector<std::string>* warnings) {
  std::vector<OrderedElement> out;
  auto rel_score = [&](const std::string& token) {
    auto s = relation_score(token, scores, kb);
    if (!s) warn(warnings, "no score for relation " + token + ", treated as 0");
    return s.value_or(0.0);
  };
  auto cls_score = [&](const std::string& id) {
    auto it = scores.classes.find(id);
    if (it == scores.classes.end()) {
      warn(warnings, "no score for class " + id + ", treated as 0");
      return 0.0;
    }
    return it->second;
  };

  for (const auto& p : pairs.cr) {
    std::string rel_token = p.relation;
    if (p.direction == PairDirection::Reverse) {
      auto rev = kb.reverse(p.relation);
      if (!rev) {
        warn(warnings, "reverse pair (" + p.class_id + ", " + p.relation +
                           ") has no declared reverse, skipped");
        continue;
      }
      rel_token = *rev;
    }
    out.push_back({"[CL]" + p.class_id + "[REL]" + rel_token,
                   cls_score(p.class_id) + rel_score(rel_token)});
  }
  for (const auto& [r1, r2] : pairs.rr)
    out.push_back({"[REL]" + r1 + " [REL]" + r2, rel_score(r1) + rel_score(r2)});

  std::sort(out.begin(), out.end(), [](const OrderedElement& a, const OrderedElement& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  return out;
}

std::string serialize_input(const std::string& question,
                            const std::vector<OrderedElement>& elements,
                            const std::vector<std::string>& entities,
                            const std::vector<SExpr>& skeletons) {
  std::string out = question;
  for (const auto& e : elements) out += ";" + e.text;
  for (const auto& e : entities) out += ";[ENT]" + e;
  for (const auto& s : skeletons) out += ";[LF]" + print(s);
  return out;
}

DynamicVocabulary::DynamicVocabulary(const PairSets& pairs, std::set<std::string> entities,
                                     std::set<std::string> literals, const KnowledgeBase& kb)
    : kb_(&kb), entities_(std::move(entities)), literals_(std::move(literals)) {
  for (const auto& p : pairs.cr) {
    classes_.insert(p.class_id);
    std::string token = p.relation;
    if (p.direction == PairDirection::Reverse) {
      auto rev = kb.reverse(p.relation);
      if (!rev) continue;  // no declared reverse, pair admits nothing
      token = *rev;
    }
    after_class_[p.class_id].insert(token);
    initial_relations_.insert(token);
  }
  for (const auto& [r1, r2] : pairs.rr) {
    after_relation_[r1].insert(r2);
    initial_relations_.insert(r1);
    initial_relations_.insert(r2);
  }
  for (const auto& [r, e] : pairs.re) {
    entities_by_relation_[r].insert(e);
    initial_relations_.insert(r);
  }
  current_ = initial_relations_;
}

std::set<std::string> DynamicVocabulary::relations_after_class(const std::string& class_id) const {
  auto it = after_class_.find(class_id);
  return it == after_class_.end() ? std::set<std::string>{} : it->second;
}

std::set<std::string> DynamicVocabulary::relations_after_relation(
    const std::string& relation_id) const {
  auto it = after_relation_.find(relation_id);
  return it == after_relation_.end() ? std::set<std::string>{} : it->second;
}

std::set<std::string> DynamicVocabulary::entities_after(const std::string& relation_id) const {
  if (relation_id.empty()) return entities_;
  std::set<std::string> out;
  auto add = [&](const std::string& token) {
    auto it = entities_by_relation_.find(token);
    if (it != entities_by_relation_.end()) out.insert(it->second.begin(), it->second.end());
  };
  add(relation_id);
  if (auto rev = kb_->reverse(relation_id)) add(*rev);
  return out;
}

void DynamicVocabulary::step(const std::string& component, LeafKind kind) {
  switch (kind) {
    case LeafKind::Relation:
      if (current_.count(component) == 0)
        throw std::logic_error("relation not admissible: " + component);
      current_ = relations_after_relation(component);
      return;
    case LeafKind::Class:
      if (classes_.count(component) == 0)
        throw std::logic_error("class not admissible: " + component);
      current_ = relations_after_class(component);
      return;
    case LeafKind::Entity:
      if (entities_.count(component) == 0)
        throw std::logic_error("entity not admissible: " + component);
      current_ = initial_relations_;
      return;
    case LeafKind::Literal:
      if (literals_.count(component) == 0)
        throw std::logic_error("literal not admissible: " + component);
      current_ = initial_relations_;
      return;
    default:
      throw std::logic_error("component has no vocabulary kind");
  }
}

namespace {

void collect_slots(SExpr& e, std::vector<SExpr*>& out) {
  if (e.is_leaf()) {
    if (is_placeholder_token(e.symbol)) out.push_back(&e);
    return;
  }
  if (e.op == Op::And && e.children.size() == 2) {
    const bool second_is_class =
        e.children[1].is_leaf() && e.children[1].symbol == kClassPlaceholder;
    const bool first_is_class = e.children[0].is_leaf() && e.children[0].symbol == kClassPlaceholder;
    if (second_is_class && !first_is_class) {
      collect_slots(e.children[1], out);
      collect_slots(e.children[0], out);
      return;
    }
  }
  for (auto& c : e.children) collect_slots(c, out);
}

const char* kind_name(LeafKind kind) {
  switch (kind) {
    case LeafKind::Relation: return "relation";
    case LeafKind::Class: return "class";
    case LeafKind::Entity: return "entity";
    case LeafKind::Literal: return "literal";
    default: return "none";
  }
}

}  // namespace

std::vector<LeafKind> slot_kinds(const SExpr& skeleton) {
  SExpr copy = skeleton;
  std::vector<SExpr*> slots;
  collect_slots(copy, slots);
  std::vector<LeafKind> kinds;
  kinds.reserve(slots.size());
  for (const SExpr* s : slots) kinds.push_back(s->leaf_kind);
  return kinds;
}

SExpr instantiate(const SExpr& skeleton, const std::vector<std::string>& assignment) {
  SExpr copy = skeleton;
  std::vector<SExpr*> slots;
  collect_slots(copy, slots);
  if (slots.size() != assignment.size())
    throw std::invalid_argument("assignment size does not match skeleton slots");
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i]->symbol = assignment[i];
  return copy;
}

namespace {

struct BeamState {
  std::vector<std::string> assignment;
  double score = 0.0;
  std::string last;  // last emitted component, empty at the start
  LeafKind last_kind = LeafKind::Class;  // meaningful only when last is set
};

struct FinalCandidate {
  SExpr expr;
  std::string text;
  double score = 0.0;
};

class Weights {
 public:
  Weights(const ComponentScores& scores, const KnowledgeBase& kb)
      : scores_(&scores), kb_(&kb) {
    for (const auto& [id, s] : scores.relations) relation_pool_.push_back(s);
    for (const auto& [id, s] : scores.classes) class_pool_.push_back(s);
    for (const auto& [id, s] : scores.entities) entity_pool_.push_back(s);
    for (const auto& [id, s] : scores.literals) literal_pool_.push_back(s);
  }

  // Softmax-normalized weight of a component within its kind's pool; zero
  // (with a warning) for components missing from the pool.
  double weight(LeafKind kind, const std::string& component,
                std::vector<std::string>* warnings) const {
    switch (kind) {
      case LeafKind::Relation: {
        auto s = relation_score(component, *scores_, *kb_);
        if (!s) break;
        return softmax_weight(*s, relation_pool_);
      }
      case LeafKind::Class: {
        auto it = scores_->classes.find(component);
        if (it == scores_->classes.end()) break;
        return softmax_weight(it->second, class_pool_);
      }
      case LeafKind::Entity: {
        auto it = scores_->entities.find(component);
        if (it == scores_->entities.end()) break;
        return softmax_weight(it->second, entity_pool_);
      }
      case LeafKind::Literal: {
        auto it = scores_->literals.find(component);
        if (it == scores_->literals.end()) break;
        return softmax_weight(it->second, literal_pool_);
      }
      default:
        break;
    }
    warn(warnings, std::string(kind_name(kind)) + " " + component +
                       " missing from its score pool, weight 0");
    return 0.0;
  }

 private:
  const ComponentScores* scores_;
  const KnowledgeBase* kb_;
  std::vector<double> relation_pool_;
  std::vector<double> class_pool_;
  std::vector<double> entity_pool_;
  std::vector<double> literal_pool_;
};

std::string join_assignment(const std::vector<std::string>& assignment) {
  std::string out;
  for (const auto& a : assignment) {
    if (!out.empty()) out += "|";
    out += a;
  }
  return out;
}

}  // namespace

CompositionResult compose(const std::string& question, const SkeletonCandidateSet& skeletons,
                          const PairSets& pairs, const ComponentScores& scores,
                          const KnowledgeBase& kb, const ComposerConfig& config) {
  CompositionResult result;
  (void)question;

  std::set<std::string> entity_ids, literal_ids;
  for (const auto& [id, s] : scores.entities) entity_ids.insert(id);
  for (const auto& [id, s] : scores.literals) literal_ids.insert(id);
  const DynamicVocabulary vocab(pairs, entity_ids, literal_ids, kb);
  const Weights weights(scores, kb);

  std::vector<FinalCandidate> pool;
  std::set<std::string> seen;

  for (std::size_t k = 0; k < skeletons.size(); ++k) {
    const SExpr& skeleton = skeletons[k].skeleton;
    const std::vector<LeafKind> kinds = slot_kinds(skeleton);

    std::vector<BeamState> states{{{}, skeletons[k].score, "", LeafKind::Class}};
    for (std::size_t slot = 0; slot < kinds.size() && !states.empty(); ++slot) {
      const LeafKind kind = kinds[slot];
      std::vector<BeamState> next;
      for (const BeamState& st : states) {
        std::set<std::string> admissible;
        switch (kind) {
          case LeafKind::Relation:
            if (st.last.empty() || st.last_kind == LeafKind::Entity ||
                st.last_kind == LeafKind::Literal)
              admissible = vocab.initial_relations();
            else if (st.last_kind == LeafKind::Class)
              admissible = vocab.relations_after_class(st.last);
            else
              admissible = vocab.relations_after_relation(st.last);
            break;
          case LeafKind::Class:
            admissible = vocab.classes();
            break;
          case LeafKind::Entity:
            admissible =
                vocab.entities_after(st.last_kind == LeafKind::Relation ? st.last : "");
            break;
          case LeafKind::Literal:
            admissible = vocab.literals();
            break;
          default:
            break;
        }
        for (const auto& comp : admissible) {
          BeamState ext = st;
          ext.assignment.push_back(comp);
          ext.score += weights.weight(kind, comp, &result.warnings);
          ext.last = comp;
          ext.last_kind = kind;
          if (config.trace) {
            nlohmann::ordered_json j{{"skeleton", print(skeleton)},
                                     {"slot", slot},
                                     {"kind", kind_name(kind)},
                                     {"state", join_assignment(st.assignment)},
                                     {"admissible", admissible.size()},
                                     {"chosen", comp},
                                     {"score", ext.score}};
            result.trace.push_back(j.dump());
          }
          next.push_back(std::move(ext));
        }
      }
      std::sort(next.begin(), next.end(), [](const BeamState& a, const BeamState& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.assignment < b.assignment;
      });
      if (next.size() > config.beam) next.resize(config.beam);
      states = std::move(next);
    }

    for (const BeamState& st : states) {
      if (st.assignment.size() != kinds.size()) continue;
      SExpr expr = canonicalize(instantiate(skeleton, st.assignment));
      std::string text = print(expr);
      if (!seen.insert(text).second) continue;
      pool.push_back({std::move(expr), std::move(text), st.score});
    }
  }

  std::sort(pool.begin(), pool.end(), [](const FinalCandidate& a, const FinalCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });

  for (const FinalCandidate& c : pool) {
    Executability ex = is_executable(c.expr, kb, config.exec_mode);
    if (config.trace) {
      nlohmann::ordered_json j{{"final", c.text},
                               {"score", c.score},
                               {"executable", ex.ok},
                               {"status", exec_status_name(ex.status)}};
      result.trace.push_back(j.dump());
    }
    if (ex.ok) {
      result.answerable = true;
      result.expression = c.expr;
      result.score = c.score;
      return result;
    }
  }

  if (pool.empty()) {
    result.failure = ComposeFailure::NoStates;
    result.reason = "no composition satisfies the vocabulary constraints";
  } else {
    result.failure = ComposeFailure::NoneExecutable;
    result.reason = "no executable composition under the candidates";
  }
  return result;
}

}  // namespace fc
