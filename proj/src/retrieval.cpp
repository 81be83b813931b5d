#include "fc/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace fc {

std::string describe_relation(const RelationInfo& rel, const KnowledgeBase& kb) {
  auto class_name = [&](const std::string& id) -> std::string {
    if (id.empty()) return "";
    auto it = kb.classes().find(id);
    return it == kb.classes().end() ? id : it->second.name;
  };
  return "[D] " + class_name(rel.domain) + " [N] " + rel.name + " [R] " + class_name(rel.range);
}

std::string describe_class(const ClassInfo& cls) {
  return "[D] " + domain_grouping(cls.id) + " [N] " + cls.name;
}

std::vector<ComponentDescription> build_descriptions(const KnowledgeBase& kb) {
  std::vector<ComponentDescription> out;
  for (const auto& [id, rel] : kb.relations()) {
    out.push_back({id, ComponentKind::Relation, describe_relation(rel, kb)});
  }
  for (const auto& [id, cls] : kb.classes()) {
    out.push_back({id, ComponentKind::Class, describe_class(cls)});
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

ComponentIndex::ComponentIndex(const KnowledgeBase& kb) : ComponentIndex(build_descriptions(kb)) {}

ComponentIndex::ComponentIndex(std::vector<ComponentDescription> descriptions)
    : docs_(std::move(descriptions)) {
  std::size_t total = 0;
  for (const auto& doc : docs_) {
    std::map<std::string, int> tf;
    auto tokens = tokenize(doc.text);
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [t, n] : tf) ++df_[t];
    doc_len_.push_back(tokens.size());
    total += tokens.size();
    doc_tf_.push_back(std::move(tf));
  }
  avg_len_ = docs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs_.size());
}

std::size_t ComponentIndex::df(const std::string& token) const {
  auto it = df_.find(token);
  return it == df_.end() ? 0 : it->second;
}

double ComponentIndex::idf(const std::string& token) const {
  double n = static_cast<double>(docs_.size());
  double d = static_cast<double>(df(token));
  return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

namespace {

double bm25_score(const std::set<std::string>& query_tokens,
                  const std::map<std::string, int>& tf, std::size_t len, double avg_len,
                  const ComponentIndex& index, const Bm25Params& params) {
  double score = 0.0;
  for (const auto& t : query_tokens) {
    auto it = tf.find(t);
    if (it == tf.end()) continue;
    double f = static_cast<double>(it->second);
    double norm = params.k1 * (1.0 - params.b +
                               params.b * static_cast<double>(len) / (avg_len > 0 ? avg_len : 1));
    score += index.idf(t) * (f * (params.k1 + 1.0)) / (f + norm);
  }
  return score;
}

}  // namespace

std::vector<ScoredCandidate> ComponentIndex::recall(const std::string& question,
                                                    ComponentKind kind, std::size_t pool,
                                                    const Bm25Params& params) const {
  auto qtokens = tokenize(question);
  std::set<std::string> unique(qtokens.begin(), qtokens.end());
  std::vector<ScoredCandidate> out;
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (docs_[i].kind != kind) continue;
    double s = bm25_score(unique, doc_tf_[i], doc_len_[i], avg_len_, *this, params);
    out.push_back({docs_[i].id, s, 0.0, 0});
  }
  std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.recall_score != b.recall_score) return a.recall_score > b.recall_score;
    return a.id < b.id;
  });
  if (out.size() > pool) out.resize(pool);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

double ComponentIndex::score_document(const std::vector<std::string>& question_tokens,
                                      const std::vector<std::string>& doc_tokens,
                                      const Bm25Params& params) const {
  std::set<std::string> unique(question_tokens.begin(), question_tokens.end());
  std::map<std::string, int> tf;
  for (const auto& t : doc_tokens) ++tf[t];
  return bm25_score(unique, tf, doc_tokens.size(), avg_len_, *this, params);
}

const ComponentDescription* ComponentIndex::find(const std::string& id,
                                                 ComponentKind kind) const {
  for (const auto& doc : docs_) {
    if (doc.kind == kind && doc.id == id) return &doc;
  }
  return nullptr;
}

TfIdfScorer::TfIdfScorer(const ComponentIndex& index) : index_(&index) {}

double TfIdfScorer::score(const std::string& question, const std::string& text) const {
  auto weigh = [&](const std::vector<std::string>& tokens) {
    std::map<std::string, double> w;
    for (const auto& t : tokens) w[t] += 1.0;
    double n = static_cast<double>(index_->doc_count());
    for (auto& [t, tf] : w) {
      double idf =
          std::log((1.0 + n) / (1.0 + static_cast<double>(index_->df(t)))) + 1.0;
      tf *= idf;
    }
    return w;
  };
  auto qa = weigh(tokenize(question));
  auto qb = weigh(tokenize(text));
  if (qa.empty() || qb.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, v] : qa) {
    na += v * v;
    auto it = qb.find(t);
    if (it != qb.end()) dot += v * it->second;
  }
  for (const auto& [t, v] : qb) nb += v * v;
  if (dot == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<ScoredCandidate> top_k_components(const std::string& question, ComponentKind kind,
                                              const ComponentIndex& index, const Scorer& scorer,
                                              const RetrievalConfig& config) {
  auto pool = index.recall(question, kind, config.pool, config.bm25);
  for (auto& cand : pool) {
    const auto* desc = index.find(cand.id, kind);
    cand.semantic_score = desc ? scorer.score(question, desc->text) : 0.0;
  }
  std::sort(pool.begin(), pool.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.semantic_score != b.semantic_score) return a.semantic_score > b.semantic_score;
    if (a.recall_score != b.recall_score) return a.recall_score > b.recall_score;
    return a.id < b.id;
  });
  if (pool.size() > config.top_k) pool.resize(config.top_k);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].rank = static_cast<int>(i) + 1;
  return pool;
}

double contrastive_loss(double positive, std::span<const double> negatives) {
  if (negatives.empty()) return 0.0;
  double m = positive;
  for (double n : negatives) m = std::max(m, n);
  double sum = std::exp(positive - m);
  for (double n : negatives) sum += std::exp(n - m);
  // -ln(e^pos / sum) = ln(sum) + m - pos
  return std::log(sum) + m - positive;
}

double softmax_weight(double s, std::span<const double> pool) {
  if (pool.empty()) return 0.0;
  double m = pool[0];
  for (double v : pool) m = std::max(m, v);
  double sum = 0.0;
  for (double v : pool) sum += std::exp(v - m);
  return std::exp(s - m) / sum;
}

namespace {

void collect_leaves(const SExpr& e, std::vector<const SExpr*>& out) {
  if (e.is_leaf()) {
    out.push_back(&e);
    return;
  }
  for (const auto& c : e.children) collect_leaves(c, out);
}

}  // namespace

double score_expression_fine(const std::string& question, const SExpr& expr,
                             const Scorer& scorer, const FinePools& pools,
                             std::vector<std::string>* warnings) {
  struct Pool {
    std::map<std::string, double> scores;
    std::vector<double> values;
  };
  auto make_pool = [&](const std::vector<std::pair<std::string, std::string>>& entries) {
    Pool p;
    for (const auto& [id, text] : entries) {
      double s = scorer.score(question, text);
      p.scores[id] = s;
      p.values.push_back(s);
    }
    return p;
  };
  Pool rel_pool = make_pool(pools.relations);
  Pool cls_pool = make_pool(pools.classes);
  Pool ent_pool = make_pool(pools.entities);

  double total = 0.0;
  std::vector<const SExpr*> leaves;
  collect_leaves(expr, leaves);
  auto add = [&](const Pool& pool, const std::string& id, const char* kind) {
    if (pool.scores.empty()) return;  // kind not scored
    auto it = pool.scores.find(id);
    if (it == pool.scores.end()) {
      if (warnings) {
        warnings->push_back(std::string(kind) + " '" + id + "' missing from its candidate pool");
      }
      return;  // -inf semantic score normalizes to zero weight
    }
    total += softmax_weight(it->second, pool.values);
  };
  for (const auto* leaf : leaves) {
    switch (leaf->leaf_kind) {
      case LeafKind::Relation: add(rel_pool, leaf->symbol, "relation"); break;
      case LeafKind::Class: add(cls_pool, leaf->symbol, "class"); break;
      case LeafKind::Entity: add(ent_pool, leaf->symbol, "entity"); break;
      case LeafKind::Literal: break;
    }
  }
  if (!pools.skeletons.empty()) {
    Pool skel_pool = make_pool(pools.skeletons);
    add(skel_pool, print(skeletonize(expr)), "skeleton");
  }
  return total;
}

}  // namespace fc
