#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fc/sexpr.hpp"

namespace fc {

struct SkeletonOptions {
  int max_hops = 4;  // maximum number of <rel> placeholders
  std::set<Op> allowed = {Op::And, Op::Join,  Op::Count, Op::ArgMax,
                          Op::ArgMin, Op::Lt, Op::Le,    Op::Gt,   Op::Ge};
};

// Enumerates every well-formed skeleton with at most max_hops relation
// placeholders over the allowed operators, deduplicated and in canonical
// order (ascending hop count, then printed form).
std::vector<SExpr> enumerate_skeletons(const SkeletonOptions& options = {});

// Deterministic scorer over (masked question, printed skeleton) pairs.
class SkeletonScorer {
 public:
  virtual ~SkeletonScorer() = default;
  virtual std::string name() const = 0;
  virtual double score(const std::string& masked_question, const std::string& skeleton) const = 0;
};

// Feature-rule scorer: aggregation cues ("how many" for COUNT, superlative
// and comparative phrases for ARGMAX/ARGMIN and comparisons), a literal
// count agreement bonus, a small bonus for class-typed answers, and a heavy
// penalty per extra hop so single-hop readings win unless a cue demands
// otherwise.
class HeuristicSkeletonScorer : public SkeletonScorer {
 public:
  std::string name() const override { return "heuristic"; }
  double score(const std::string& masked_question, const std::string& skeleton) const override;
};

struct SkeletonCandidate {
  SExpr skeleton;
  double score = 0.0;
};

// At most two candidates, distinct, best first.
using SkeletonCandidateSet = std::vector<SkeletonCandidate>;

// Number of <entityK> placeholders in a masked question.
std::size_t masked_entity_count(const std::string& masked_question);

// Ranks the enumerated skeletons whose <entity> count equals the masked
// mention count, keeps the top-1, then adds the hop-rule augmentation of
// the top-1 as the second candidate when it applies (falling back to the
// next-ranked skeleton otherwise).
SkeletonCandidateSet propose(const std::string& masked_question, const SkeletonScorer& scorer,
                             const SkeletonOptions& options = {});

// Same, over a caller-supplied enumeration (avoids re-enumerating per call).
SkeletonCandidateSet propose(const std::string& masked_question, const SkeletonScorer& scorer,
                             const std::vector<SExpr>& enumerated);

// Hop rule: a skeleton with exactly one <rel> gets that hop expanded into a
// two-hop JOIN chain; a skeleton whose only two <rel> form a chained
// two-hop JOIN collapses back to one hop; anything else yields nothing.
// The transform is an involution on its domain.
std::optional<SExpr> rule_augment(const SExpr& skeleton);

}  // namespace fc
