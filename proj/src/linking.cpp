#include "fc/linking.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "fc/retrieval.hpp"

namespace fc {

std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isalnum(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    std::string token;
    while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
      ++i;
    }
    out.push_back({std::move(token), begin, i});
  }
  return out;
}

NameTrie::NameTrie(const KnowledgeBase& kb) {
  std::set<std::vector<std::string>> seen;
  for (const auto& [id, info] : kb.entities()) {
    for (const auto& name : info.names) {
      auto tokens = tokenize(name);
      if (tokens.empty()) continue;
      Node* node = &root_;
      for (const auto& t : tokens) {
        auto& child = node->children[t];
        if (!child) child = std::make_unique<Node>();
        node = child.get();
      }
      node->entities.insert(id);
      if (seen.insert(tokens).second) ++name_count_;
    }
  }
}

bool NameTrie::contains(std::string_view name) const {
  auto tokens = tokenize(name);
  if (tokens.empty()) return false;
  const Node* node = &root_;
  for (const auto& t : tokens) {
    auto it = node->children.find(t);
    if (it == node->children.end()) return false;
    node = it->second.get();
  }
  return !node->entities.empty();
}

std::vector<MentionSpan> NameTrie::detect(std::string_view question) const {
  auto tokens = tokenize_with_offsets(question);
  std::vector<MentionSpan> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const Node* node = &root_;
    std::size_t best_len = 0;
    const Node* best_node = nullptr;
    for (std::size_t j = i; j < tokens.size(); ++j) {
      auto it = node->children.find(tokens[j].token);
      if (it == node->children.end()) break;
      node = it->second.get();
      if (!node->entities.empty()) {
        best_len = j - i + 1;
        best_node = node;
      }
    }
    if (best_node) {
      MentionSpan span;
      span.begin = tokens[i].begin;
      span.end = tokens[i + best_len - 1].end;
      span.text = std::string(question.substr(span.begin, span.end - span.begin));
      span.entity_ids.assign(best_node->entities.begin(), best_node->entities.end());
      out.push_back(std::move(span));
      i += best_len;  // non-overlapping, leftmost-longest
    } else {
      ++i;
    }
  }
  return out;
}

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool is_year_token(std::string_view s) {
  if (s.size() != 4 || !all_digits(s)) return false;
  return (s[0] == '1' && s[1] >= '0' && s[1] <= '9') || (s[0] == '2' && s[1] == '0');
}

}  // namespace

std::vector<LiteralSpan> extract_literals(std::string_view question) {
  auto tokens = tokenize_with_offsets(question);
  std::vector<LiteralSpan> out;
  auto slice = [&](std::size_t b, std::size_t e) {
    return std::string(question.substr(b, e - b));
  };
  auto negated_begin = [&](std::size_t begin) {
    // A leading minus joins the literal when directly attached.
    if (begin > 0 && question[begin - 1] == '-' &&
        (begin == 1 || !std::isalnum(static_cast<unsigned char>(question[begin - 2])))) {
      return begin - 1;
    }
    return begin;
  };
  std::size_t i = 0;
  while (i < tokens.size()) {
    const auto& t = tokens[i];
    if (!all_digits(t.token)) {
      ++i;
      continue;
    }
    // ISO date: digits '-' digits '-' digits with exact widths.
    if (i + 2 < tokens.size() && t.token.size() == 4 && tokens[i + 1].token.size() == 2 &&
        tokens[i + 2].token.size() == 2 && all_digits(tokens[i + 1].token) &&
        all_digits(tokens[i + 2].token) && tokens[i + 1].begin == t.end + 1 &&
        question[t.end] == '-' && tokens[i + 2].begin == tokens[i + 1].end + 1 &&
        question[tokens[i + 1].end] == '-') {
      LiteralSpan span;
      span.begin = t.begin;
      span.end = tokens[i + 2].end;
      span.text = slice(span.begin, span.end);
      span.kind = LiteralKind::Date;
      span.lexical = span.text + "^^date";
      out.push_back(std::move(span));
      i += 3;
      continue;
    }
    // Decimal: digits '.' digits adjacent around a dot.
    if (i + 1 < tokens.size() && all_digits(tokens[i + 1].token) &&
        tokens[i + 1].begin == t.end + 1 && question[t.end] == '.') {
      LiteralSpan span;
      span.begin = negated_begin(t.begin);
      span.end = tokens[i + 1].end;
      span.text = slice(span.begin, span.end);
      span.kind = LiteralKind::Float;
      span.lexical = span.text + "^^float";
      out.push_back(std::move(span));
      i += 2;
      continue;
    }
    LiteralSpan span;
    span.begin = t.begin;
    span.end = t.end;
    if (is_year_token(t.token)) {
      span.kind = LiteralKind::Year;  // years take precedence over integers
      span.text = slice(span.begin, span.end);
      span.lexical = span.text + "^^year";
    } else {
      span.begin = negated_begin(t.begin);
      span.kind = LiteralKind::Integer;
      span.text = slice(span.begin, span.end);
      span.lexical = span.text + "^^integer";
    }
    out.push_back(std::move(span));
    ++i;
  }
  return out;
}

std::set<std::string> prune_by_relations(const std::set<std::string>& entities,
                                         const std::set<std::string>& relations,
                                         const KnowledgeBase& kb) {
  std::set<std::string> wanted = relations;
  for (const auto& r : relations) {
    if (auto rev = kb.reverse(r)) wanted.insert(*rev);
  }
  std::set<std::string> out;
  for (const auto& e : entities) {
    auto incident = kb.incident_relations(e);
    bool keep = std::any_of(incident.begin(), incident.end(),
                            [&](const std::string& r) { return wanted.count(r) > 0; });
    if (keep) out.insert(e);
  }
  return out;
}

std::vector<MentionSpan> prune_spans_by_relations(const std::vector<MentionSpan>& spans,
                                                  const std::set<std::string>& relations,
                                                  const KnowledgeBase& kb) {
  std::vector<MentionSpan> out;
  for (const auto& span : spans) {
    std::set<std::string> candidates(span.entity_ids.begin(), span.entity_ids.end());
    auto kept = prune_by_relations(candidates, relations, kb);
    if (kept.empty()) continue;
    MentionSpan pruned = span;
    pruned.entity_ids.assign(kept.begin(), kept.end());
    out.push_back(std::move(pruned));
  }
  return out;
}

std::string select_entity(const MentionSpan& span, const KnowledgeBase& kb) {
  if (span.entity_ids.empty()) {
    throw std::invalid_argument("select_entity on a span without candidates");
  }
  std::string best;
  long long best_pop = -1;
  for (const auto& id : span.entity_ids) {
    auto it = kb.entities().find(id);
    long long pop = it == kb.entities().end() ? 0 : it->second.popularity;
    if (pop > best_pop || (pop == best_pop && (best.empty() || id < best))) {
      best = id;
      best_pop = pop;
    }
  }
  return best;
}

MaskResult mask_mentions(std::string_view question, const std::vector<MentionSpan>& spans) {
  std::vector<MentionSpan> ordered = spans;
  std::sort(ordered.begin(), ordered.end(),
            [](const MentionSpan& a, const MentionSpan& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i].begin < ordered[i - 1].end) {
      throw std::invalid_argument("mask_mentions with overlapping spans");
    }
  }
  MaskResult result;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    std::string placeholder = "<entity" + std::to_string(i) + ">";
    result.masked += question.substr(cursor, ordered[i].begin - cursor);
    result.masked += placeholder;
    cursor = ordered[i].end;
    result.mapping.push_back({placeholder, ordered[i]});
  }
  result.masked += question.substr(cursor);
  return result;
}

}  // namespace fc
