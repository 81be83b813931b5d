#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fc/kb.hpp"
#include "fc/sexpr.hpp"

namespace fc {

enum class ComponentKind { Relation, Class };

// Serialized description of a relation or class used for lexical matching.
// Relations render as "[D] <domain> [N] <name> [R] <range>" with the domain
// and range class names; classes render as "[D] <domain> [N] <name>" with
// their grouping prefix.
struct ComponentDescription {
  std::string id;
  ComponentKind kind;
  std::string text;
};

std::string describe_relation(const RelationInfo& rel, const KnowledgeBase& kb);
std::string describe_class(const ClassInfo& cls);
std::vector<ComponentDescription> build_descriptions(const KnowledgeBase& kb);

// Lowercases and splits on every non-alphanumeric character, so dots and
// underscores separate tokens.
std::vector<std::string> tokenize(std::string_view text);

struct ScoredCandidate {
  std::string id;
  double recall_score = 0.0;    // BM25 recall score
  double semantic_score = 0.0;  // scorer value over the description text
  int rank = 0;                 // 1-based, a permutation of 1..n
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Inverted index over component descriptions with BM25 recall:
//   score = sum_t IDF(t) * tf*(k1+1) / (tf + k1*(1-b+b*len/avglen))
//   IDF(t) = ln((N-df+0.5)/(df+0.5)+1)
// Document frequency counts all descriptions regardless of kind.
class ComponentIndex {
 public:
  explicit ComponentIndex(const KnowledgeBase& kb);
  explicit ComponentIndex(std::vector<ComponentDescription> descriptions);

  // Top `pool` candidates of the kind, ranked by BM25 score descending with
  // ties by id; zero-scored candidates fill the pool in id order.
  std::vector<ScoredCandidate> recall(const std::string& question, ComponentKind kind,
                                      std::size_t pool, const Bm25Params& params = {}) const;

  // BM25 score of an arbitrary token bag against the index's frozen corpus
  // statistics (N, df, average length).
  double score_document(const std::vector<std::string>& question_tokens,
                        const std::vector<std::string>& doc_tokens,
                        const Bm25Params& params = {}) const;

  double idf(const std::string& token) const;
  std::size_t doc_count() const { return docs_.size(); }
  std::size_t df(const std::string& token) const;
  double average_length() const { return avg_len_; }
  const std::vector<ComponentDescription>& descriptions() const { return docs_; }
  const ComponentDescription* find(const std::string& id, ComponentKind kind) const;

 private:
  std::vector<ComponentDescription> docs_;
  std::vector<std::map<std::string, int>> doc_tf_;
  std::vector<std::size_t> doc_len_;
  std::map<std::string, std::size_t> df_;
  double avg_len_ = 0.0;
};

// Deterministic semantic scorer over (question, description text) pairs.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  virtual double score(const std::string& question, const std::string& text) const = 0;
};

// Token-overlap TF-IDF cosine over the shared tokenizer. IDF uses the
// smoothed form ln((1+N)/(1+df)) + 1 with the index's corpus statistics;
// identical token bags score 1, disjoint ones 0.
class TfIdfScorer : public Scorer {
 public:
  explicit TfIdfScorer(const ComponentIndex& index);
  std::string name() const override { return "tfidf"; }
  double score(const std::string& question, const std::string& text) const override;

 private:
  const ComponentIndex* index_;
};

class UniformScorer : public Scorer {
 public:
  std::string name() const override { return "uniform"; }
  double score(const std::string&, const std::string&) const override { return 0.0; }
};

struct RetrievalConfig {
  std::size_t pool = 100;  // BM25 recall pool size
  std::size_t top_k = 10;  // reranked candidates kept per kind
  Bm25Params bm25;
};

// BM25 recall followed by semantic reranking: sorted by semantic score
// descending, ties by recall score then id; ranks are reassigned 1..n.
std::vector<ScoredCandidate> top_k_components(const std::string& question, ComponentKind kind,
                                              const ComponentIndex& index, const Scorer& scorer,
                                              const RetrievalConfig& config = {});

// -ln(e^pos / (e^pos + sum_i e^neg_i)) evaluated with log-sum-exp
// stabilization; zero negatives give exactly zero loss.
double contrastive_loss(double positive, std::span<const double> negatives);

// Numerically stable softmax weight of score s within the pool of scores.
double softmax_weight(double s, std::span<const double> pool);

// Candidate pools for fine-grained expression scoring, as (id, text) pairs
// handed to the scorer.
struct FinePools {
  std::vector<std::pair<std::string, std::string>> relations;
  std::vector<std::pair<std::string, std::string>> classes;
  std::vector<std::pair<std::string, std::string>> entities;
  std::vector<std::pair<std::string, std::string>> skeletons;
};

// Sums softmax-normalized semantic scores of the expression's components
// within their pools. Kinds without a pool are skipped; a component missing
// from a provided pool contributes zero and appends a warning.
double score_expression_fine(const std::string& question, const SExpr& expr,
                             const Scorer& scorer, const FinePools& pools,
                             std::vector<std::string>* warnings = nullptr);

}  // namespace fc
