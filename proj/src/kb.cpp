#include "fc/kb.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fc/sexpr.hpp"

namespace fc {

LoadError::LoadError(const std::string& message, std::size_t line)
    : std::runtime_error(message + " (line " + std::to_string(line) + ")"), line(line) {}

std::string domain_grouping(std::string_view id) {
  auto pos = id.find('.');
  if (pos == std::string_view::npos) return std::string(id);
  return std::string(id.substr(0, pos));
}

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

enum class Section { None, Classes, Relations, Entities, Ontology, Facts };

std::optional<Section> section_from_header(std::string_view line) {
  if (line == "#classes") return Section::Classes;
  if (line == "#relations") return Section::Relations;
  if (line == "#entities") return Section::Entities;
  if (line == "#ontology") return Section::Ontology;
  if (line == "#facts") return Section::Facts;
  return std::nullopt;
}

std::string dash_to_empty(std::string v) { return v == "-" ? std::string() : v; }

void warn_or_throw(bool strict, const std::string& message, std::size_t line,
                   LoadReport* report) {
  if (strict) throw LoadError(message, line);
  if (report) report->warnings.push_back(message + " (line " + std::to_string(line) + ")");
}

}  // namespace

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path, const LoadOptions& options,
                                  LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open knowledge base file '" + path.string() + "'", 0);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_string(buffer.str(), options, report);
}

KnowledgeBase KnowledgeBase::load_string(std::string_view text, const LoadOptions& options,
                                         LoadReport* report) {
  KnowledgeBase kb;
  Section section = Section::None;
  std::size_t line_no = 0;
  std::vector<std::tuple<std::string, std::string, std::string, std::size_t>> raw_facts;
  std::vector<std::tuple<OntologyTriple, std::size_t>> raw_ontology;

  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    std::string_view line = end == std::string_view::npos
                                ? text.substr(start)
                                : text.substr(start, end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto s = section_from_header(line);
      if (!s) throw LoadError("unknown section header '" + std::string(line) + "'", line_no);
      section = *s;
      continue;
    }
    auto cols = split(line, '\t');
    switch (section) {
      case Section::None:
        throw LoadError("data line before any section header", line_no);
      case Section::Classes: {
        if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
          throw LoadError("malformed class line, expected id<TAB>name", line_no);
        }
        if (kb.classes_.count(cols[0])) {
          throw LoadError("duplicate class id '" + cols[0] + "'", line_no);
        }
        kb.classes_[cols[0]] = {cols[0], cols[1]};
        break;
      }
      case Section::Relations: {
        if (cols.size() != 5 || cols[0].empty() || cols[1].empty()) {
          throw LoadError(
              "malformed relation line, expected id<TAB>name<TAB>domain<TAB>range<TAB>reverse",
              line_no);
        }
        if (kb.relations_.count(cols[0])) {
          throw LoadError("duplicate relation id '" + cols[0] + "'", line_no);
        }
        kb.relations_[cols[0]] = {cols[0], cols[1], dash_to_empty(cols[2]),
                                  dash_to_empty(cols[3]), dash_to_empty(cols[4])};
        break;
      }
      case Section::Entities: {
        if (cols.size() != 3 || cols[0].empty()) {
          throw LoadError("malformed entity line, expected id<TAB>popularity<TAB>names",
                          line_no);
        }
        if (kb.entities_.count(cols[0])) {
          throw LoadError("duplicate entity id '" + cols[0] + "'", line_no);
        }
        long long popularity = 0;
        const char* first = cols[1].data();
        const char* last = cols[1].data() + cols[1].size();
        auto [ptr, ec] = std::from_chars(first, last, popularity);
        if (ec != std::errc() || ptr != last || popularity < 0) {
          throw LoadError("malformed popularity '" + cols[1] + "'", line_no);
        }
        EntityInfo info{cols[0], popularity, {}};
        for (auto& name : split(cols[2], '|')) {
          if (!name.empty()) info.names.push_back(name);
        }
        if (info.names.empty()) {
          throw LoadError("entity '" + cols[0] + "' has no surface name", line_no);
        }
        kb.entities_[cols[0]] = std::move(info);
        break;
      }
      case Section::Ontology: {
        if (cols.size() != 3) {
          throw LoadError("malformed ontology line, expected domain<TAB>relation<TAB>range",
                          line_no);
        }
        raw_ontology.push_back({{cols[0], cols[1], cols[2]}, line_no});
        break;
      }
      case Section::Facts: {
        if (cols.size() != 3 || cols[0].empty() || cols[1].empty() || cols[2].empty()) {
          throw LoadError("malformed fact line, expected subject<TAB>relation<TAB>object",
                          line_no);
        }
        raw_facts.push_back({cols[0], cols[1], cols[2], line_no});
        break;
      }
    }
  }

  for (const auto& [triple, ln] : raw_ontology) {
    if (!kb.has_class(triple.domain)) {
      warn_or_throw(options.strict, "ontology domain class '" + triple.domain + "' undeclared",
                    ln, report);
      continue;
    }
    if (!kb.has_class(triple.range)) {
      warn_or_throw(options.strict, "ontology range class '" + triple.range + "' undeclared", ln,
                    report);
      continue;
    }
    if (!kb.has_relation(triple.relation)) {
      warn_or_throw(options.strict, "ontology relation '" + triple.relation + "' undeclared", ln,
                    report);
      continue;
    }
    const auto& rel = kb.relations_.at(triple.relation);
    if ((!rel.domain.empty() && rel.domain != triple.domain) ||
        (!rel.range.empty() && rel.range != triple.range)) {
      warn_or_throw(options.strict,
                    "ontology triple contradicts declared domain/range of '" + triple.relation +
                        "'",
                    ln, report);
      continue;
    }
    kb.ontology_.push_back(triple);
  }

  for (const auto& [subject, relation, object, ln] : raw_facts) {
    if (!kb.has_entity(subject)) {
      warn_or_throw(options.strict, "fact subject '" + subject + "' undeclared", ln, report);
      continue;
    }
    if (!kb.has_relation(relation)) {
      warn_or_throw(options.strict, "fact relation '" + relation + "' undeclared", ln, report);
      continue;
    }
    Fact fact{subject, relation, object, ObjectKind::Entity};
    if (is_literal_token(object)) {
      std::string value, type;
      if (!split_literal(object, value, type)) {
        warn_or_throw(options.strict, "malformed literal object '" + object + "'", ln, report);
        continue;
      }
      fact.object_kind = ObjectKind::Literal;
    } else if (kb.has_entity(object)) {
      fact.object_kind = ObjectKind::Entity;
    } else if (kb.has_class(object)) {
      fact.object_kind = ObjectKind::Class;
    } else {
      warn_or_throw(options.strict, "fact object '" + object + "' undeclared", ln, report);
      continue;
    }
    kb.facts_.push_back(std::move(fact));
  }

  for (const auto& [id, rel] : kb.relations_) {
    if (!rel.domain.empty() && !kb.has_class(rel.domain)) {
      throw LoadError("relation '" + id + "' has undeclared domain '" + rel.domain + "'", 0);
    }
    if (!rel.range.empty() && !kb.has_class(rel.range)) {
      throw LoadError("relation '" + id + "' has undeclared range '" + rel.range + "'", 0);
    }
    if (!rel.reverse.empty() && !kb.has_relation(rel.reverse)) {
      throw LoadError("relation '" + id + "' has undeclared reverse '" + rel.reverse + "'", 0);
    }
  }

  kb.index();
  kb.check_integrity(options, report);
  return kb;
}

void KnowledgeBase::index() {
  for (const auto& [id, rel] : relations_) {
    if (!rel.domain.empty() && !rel.range.empty()) {
      OntologyTriple derived{rel.domain, id, rel.range};
      if (std::find(ontology_.begin(), ontology_.end(), derived) == ontology_.end()) {
        ontology_.push_back(derived);
      }
    }
  }
  for (const auto& t : ontology_) {
    domain_index_[t.domain].insert(t.relation);
    range_index_[t.range].insert(t.relation);
  }
  for (const auto& f : facts_) {
    facts_by_relation_[f.relation].push_back({f.subject, f.object});
    subject_index_[f.subject][f.relation].insert(f.object);
    object_index_[f.object][f.relation].insert(f.subject);
    if (f.object_kind == ObjectKind::Class) {
      members_[f.object].insert(f.subject);
    }
    incident_[f.subject].insert(f.relation);
    if (f.object_kind == ObjectKind::Entity) {
      incident_[f.object].insert(f.relation);
      const auto& rev = relations_.at(f.relation).reverse;
      if (!rev.empty()) incident_[f.object].insert(rev);
    }
  }
}

void KnowledgeBase::check_integrity(const LoadOptions& options, LoadReport* report) const {
  if (!options.strict || !report) return;
  // Domain/range consistency: facts instantiating an ontology triple must
  // connect declared members of the triple's classes. Violations are
  // reported as warnings.
  for (const auto& f : facts_) {
    const auto& rel = relations_.at(f.relation);
    if (!rel.domain.empty() && members_.count(rel.domain) &&
        !members_.at(rel.domain).count(f.subject)) {
      report->warnings.push_back("fact subject '" + f.subject + "' is not a declared member of '" +
                                 rel.domain + "'");
    }
    if (f.object_kind == ObjectKind::Entity && !rel.range.empty() &&
        members_.count(rel.range) && !members_.at(rel.range).count(f.object)) {
      report->warnings.push_back("fact object '" + f.object + "' is not a declared member of '" +
                                 rel.range + "'");
    }
  }
}

std::set<std::string> KnowledgeBase::relations_with_domain(const std::string& class_id) const {
  auto it = domain_index_.find(class_id);
  return it == domain_index_.end() ? std::set<std::string>{} : it->second;
}

std::set<std::string> KnowledgeBase::relations_with_range(const std::string& class_id) const {
  auto it = range_index_.find(class_id);
  return it == range_index_.end() ? std::set<std::string>{} : it->second;
}

std::optional<std::string> KnowledgeBase::reverse(const std::string& relation_id) const {
  auto it = relations_.find(relation_id);
  if (it == relations_.end() || it->second.reverse.empty()) return std::nullopt;
  return it->second.reverse;
}

std::set<std::string> KnowledgeBase::class_members(const std::string& class_id) const {
  auto it = members_.find(class_id);
  return it == members_.end() ? std::set<std::string>{} : it->second;
}

std::set<std::string> KnowledgeBase::incident_relations(const std::string& entity_id) const {
  auto it = incident_.find(entity_id);
  return it == incident_.end() ? std::set<std::string>{} : it->second;
}

const std::vector<std::pair<std::string, std::string>>& KnowledgeBase::stored_pairs(
    const std::string& relation_id) const {
  static const std::vector<std::pair<std::string, std::string>> kEmpty;
  auto it = facts_by_relation_.find(relation_id);
  return it == facts_by_relation_.end() ? kEmpty : it->second;
}

std::set<std::string> KnowledgeBase::objects_of(const std::string& subject,
                                                const std::string& relation) const {
  std::set<std::string> out;
  if (auto sit = subject_index_.find(subject); sit != subject_index_.end()) {
    if (auto rit = sit->second.find(relation); rit != sit->second.end()) {
      out.insert(rit->second.begin(), rit->second.end());
    }
  }
  if (auto rev = reverse(relation)) {
    // (subject, relation, o) also holds when (o, reverse, subject) is stored.
    if (auto oit = object_index_.find(subject); oit != object_index_.end()) {
      if (auto rit = oit->second.find(*rev); rit != oit->second.end()) {
        out.insert(rit->second.begin(), rit->second.end());
      }
    }
  }
  return out;
}

std::set<std::string> KnowledgeBase::subjects_of(const std::string& relation,
                                                 const std::string& object) const {
  std::set<std::string> out;
  if (auto oit = object_index_.find(object); oit != object_index_.end()) {
    if (auto rit = oit->second.find(relation); rit != oit->second.end()) {
      out.insert(rit->second.begin(), rit->second.end());
    }
  }
  if (auto rev = reverse(relation)) {
    if (auto sit = subject_index_.find(object); sit != subject_index_.end()) {
      if (auto rit = sit->second.find(*rev); rit != sit->second.end()) {
        out.insert(rit->second.begin(), rit->second.end());
      }
    }
  }
  return out;
}

bool KnowledgeBase::has_fact(const std::string& subject, const std::string& relation,
                             const std::string& object) const {
  return objects_of(subject, relation).count(object) > 0;
}

std::vector<std::pair<std::string, std::string>> KnowledgeBase::pairs_of(
    const std::string& relation) const {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [s, o] : stored_pairs(relation)) out.insert({s, o});
  if (auto rev = reverse(relation)) {
    for (const auto& [s, o] : stored_pairs(*rev)) out.insert({o, s});
  }
  return {out.begin(), out.end()};
}

}  // namespace fc
