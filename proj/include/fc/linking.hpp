#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fc/kb.hpp"

namespace fc {

// Token with its byte span in the original text.
struct TokenSpan {
  std::string token;  // lowercased
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last byte
};

std::vector<TokenSpan> tokenize_with_offsets(std::string_view text);

// Mention span over the question. `text` is the exact question slice;
// `entity_ids` are the KB entities whose surface name matches the slice at
// token level (case-insensitive).
struct MentionSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;
  std::vector<std::string> entity_ids;  // sorted, deduplicated
};

// Token-level trie over KB surface names. Matching is case-insensitive,
// respects token boundaries, and detection returns maximal matches:
// longest at each starting token, leftmost preferred, non-overlapping.
class NameTrie {
 public:
  explicit NameTrie(const KnowledgeBase& kb);

  bool contains(std::string_view name) const;
  std::size_t name_count() const { return name_count_; }
  std::vector<MentionSpan> detect(std::string_view question) const;

 private:
  struct Node {
    std::map<std::string, std::unique_ptr<Node>> children;
    std::set<std::string> entities;  // entities whose name ends here
  };
  Node root_;
  std::size_t name_count_ = 0;
};

enum class LiteralKind { Integer, Float, Year, Date };

struct LiteralSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;     // question slice
  LiteralKind kind = LiteralKind::Integer;
  std::string lexical;  // typed form, e.g. "1994^^year"
};

// Scans for literal mentions: ISO dates, decimals, years (1000-2099, which
// take precedence over bare integers on the same span) and integers, all at
// token boundaries, leftmost and non-overlapping.
std::vector<LiteralSpan> extract_literals(std::string_view question);

// Keeps entities incident (directly or via declared reverses) to at least
// one candidate relation.
std::set<std::string> prune_by_relations(const std::set<std::string>& entities,
                                         const std::set<std::string>& relations,
                                         const KnowledgeBase& kb);

// Convenience form: filters each span's candidate list, dropping spans left
// without candidates.
std::vector<MentionSpan> prune_spans_by_relations(const std::vector<MentionSpan>& spans,
                                                  const std::set<std::string>& relations,
                                                  const KnowledgeBase& kb);

// Highest-popularity candidate of the span; ties pick the lexicographically
// smallest id. The span must have at least one candidate.
std::string select_entity(const MentionSpan& span, const KnowledgeBase& kb);

struct MaskResult {
  std::string masked;
  // placeholder -> span, in appearance order: <entity0>, <entity1>, ...
  std::vector<std::pair<std::string, MentionSpan>> mapping;
};

// Replaces each span with <entityK> in appearance order. Spans must not
// overlap.
MaskResult mask_mentions(std::string_view question, const std::vector<MentionSpan>& spans);

}  // namespace fc
