#include "fc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace fc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

std::vector<DatasetItem> parse_dataset(std::string_view text, const std::string& origin) {
  std::vector<DatasetItem> items;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
    DatasetItem item;
    if (!j.contains("qid") || !j.contains("question") || !j.contains("s_expression"))
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": missing qid/question/s_expression");
    item.qid = j["qid"].is_string() ? j["qid"].get<std::string>() : j["qid"].dump();
    item.question = j["question"].get<std::string>();
    item.s_expression = j["s_expression"].get<std::string>();
    if (j.contains("answers"))
      for (const auto& a : j["answers"])
        item.answers.push_back(a.is_string() ? a.get<std::string>() : a.dump());
    if (j.contains("domain")) item.domain = j["domain"].get<std::string>();
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<DatasetItem> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), path.string());
}

std::set<std::string> expression_components(const SExpr& expr) {
  std::set<std::string> out;
  const QueryGraph g = to_query_graph(expr);
  for (const auto& e : g.edges) out.insert(e.relation);
  for (const auto& c : g.constraints) out.insert(c.class_id);
  for (const auto& n : g.nodes)
    if (n.type == QueryGraph::NodeType::Class) out.insert(n.label);
  return out;
}

std::set<std::pair<std::string, std::string>> expression_compositions(const SExpr& expr) {
  const QueryGraph g = to_query_graph(expr);
  std::map<int, std::set<std::string>> labels_at;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i].type == QueryGraph::NodeType::Class)
      labels_at[static_cast<int>(i)].insert(g.nodes[i].label);
  for (const auto& e : g.edges) {
    labels_at[e.from].insert(e.relation);
    labels_at[e.to].insert(e.relation);
  }
  for (const auto& c : g.constraints) labels_at[c.node].insert(c.class_id);

  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [node, labels] : labels_at) {
    for (auto a = labels.begin(); a != labels.end(); ++a) {
      auto b = a;
      for (++b; b != labels.end(); ++b) out.insert({*a, *b});
    }
  }
  return out;
}

TrainInventory build_inventory(const std::vector<DatasetItem>& train,
                               std::vector<std::string>* warnings) {
  TrainInventory inv;
  for (const auto& item : train) {
    SExpr gold;
    try {
      gold = parse(item.s_expression);
    } catch (const ParseError& e) {
      if (warnings)
        warnings->push_back("train item " + item.qid + " gold does not parse: " + e.what());
      continue;
    }
    const auto comps = expression_components(gold);
    inv.components.insert(comps.begin(), comps.end());
    const auto pairs = expression_compositions(gold);
    inv.compositions.insert(pairs.begin(), pairs.end());
  }
  return inv;
}

const char* split_name(SplitLabel label) {
  switch (label) {
    case SplitLabel::Iid: return "iid";
    case SplitLabel::Compositional: return "compositional";
    case SplitLabel::ZeroShot: return "zero_shot";
  }
  return "unknown";
}

std::optional<SplitLabel> classify_split(const DatasetItem& item, const TrainInventory& train,
                                         std::vector<std::string>* warnings) {
  SExpr gold;
  try {
    gold = parse(item.s_expression);
  } catch (const ParseError& e) {
    if (warnings) warnings->push_back("item " + item.qid + " gold does not parse: " + e.what());
    return std::nullopt;
  }
  for (const auto& c : expression_components(gold))
    if (train.components.count(c) == 0) return SplitLabel::ZeroShot;
  for (const auto& p : expression_compositions(gold))
    if (train.compositions.count(p) == 0) return SplitLabel::Compositional;
  return SplitLabel::Iid;
}

double answer_f1(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
  if (predicted.empty() && gold.empty()) return 1.0;
  if (predicted.empty() || gold.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& p : predicted) hit += gold.count(p);
  if (hit == 0) return 0.0;
  const double precision = static_cast<double>(hit) / predicted.size();
  const double recall = static_cast<double>(hit) / gold.size();
  return 2.0 * precision * recall / (precision + recall);
}

std::unique_ptr<Scorer> make_scorer(const std::string& name, const ComponentIndex& index) {
  if (name == "tfidf") return std::make_unique<TfIdfScorer>(index);
  if (name == "uniform") return std::make_unique<UniformScorer>();
  throw std::invalid_argument("unknown scorer: " + name);
}

std::unique_ptr<SkeletonScorer> make_skeleton_scorer(const std::string& name) {
  if (name == "heuristic") return std::make_unique<HeuristicSkeletonScorer>();
  throw std::invalid_argument("unknown skeleton scorer: " + name);
}

Pipeline::Pipeline(const KnowledgeBase& kb, PipelineConfig config)
    : kb_(&kb),
      config_(std::move(config)),
      index_(kb),
      trie_(kb),
      scorer_(make_scorer(config_.scorer, index_)),
      skeleton_scorer_(make_skeleton_scorer(config_.skeleton_scorer)),
      enumerated_(enumerate_skeletons(config_.skeleton)) {}

Pipeline::Answer Pipeline::answer(const std::string& question) const {
  Answer a;
  const auto t0 = Clock::now();

  a.relations = top_k_components(question, ComponentKind::Relation, index_, *scorer_,
                                 config_.retrieval);
  a.classes = top_k_components(question, ComponentKind::Class, index_, *scorer_,
                               config_.retrieval);
  std::set<std::string> rq, cq;
  for (const auto& c : a.relations) rq.insert(c.id);
  for (const auto& c : a.classes) cq.insert(c.id);

  a.mentions = prune_spans_by_relations(trie_.detect(question), rq, *kb_);
  // Composition works over every surviving candidate; the popularity pick is
  // only the per-span headline answer for diagnostics.
  for (const auto& span : a.mentions) {
    a.entities.insert(span.entity_ids.begin(), span.entity_ids.end());
    a.selected.push_back(select_entity(span, *kb_));
  }
  a.literals = extract_literals(question);
  a.masked_question = mask_mentions(question, a.mentions).masked;
  a.skeletons = propose(a.masked_question, *skeleton_scorer_, enumerated_);

  const auto t1 = Clock::now();

  std::vector<SExpr> skels;
  for (const auto& s : a.skeletons) skels.push_back(s.skeleton);
  a.pairs = build_pair_sets(cq, rq, a.entities, skels, *kb_, config_.midgrain);

  ComponentScores scores;
  for (const auto& c : a.relations) scores.relations[c.id] = c.semantic_score;
  for (const auto& c : a.classes) scores.classes[c.id] = c.semantic_score;
  for (const auto& e : a.entities)
    scores.entities[e] = scorer_->score(question, kb_->entities().at(e).names.front());
  for (const auto& l : a.literals) scores.literals[l.lexical] = 0.0;

  const auto ordered = order_candidates(a.pairs, scores, *kb_, &a.warnings);
  const std::vector<std::string> entity_list(a.entities.begin(), a.entities.end());
  a.serialized_input = serialize_input(question, ordered, entity_list, skels);

  const auto t2 = Clock::now();

  a.composition = compose(question, a.skeletons, a.pairs, scores, *kb_, config_.composer);
  for (const auto& w : a.composition.warnings) a.warnings.push_back(w);
  if (a.composition.answerable) {
    try {
      a.answers = execute(a.composition.expression, *kb_);
    } catch (const ExecError& e) {
      a.warnings.push_back(std::string("execution of composed expression failed: ") + e.what());
    }
  }

  const auto t3 = Clock::now();
  a.timings.candidate_selection = ms_between(t0, t1);
  a.timings.enumeration = ms_between(t1, t2);
  a.timings.composition = ms_between(t2, t3);
  return a;
}

namespace {

struct PerItem {
  bool skipped = false;
  ItemResult result;
  std::vector<std::string> warnings;
};

PerItem eval_one(const Pipeline& pipeline, const DatasetItem& item, const TrainInventory& inv,
                 const EvalOptions& options) {
  PerItem out;
  SExpr gold;
  try {
    gold = parse(item.s_expression);
  } catch (const ParseError& e) {
    out.skipped = true;
    out.warnings.push_back("item " + item.qid + " skipped, gold does not parse: " + e.what());
    return out;
  }
  const auto label = classify_split(item, inv, &out.warnings);

  std::set<std::string> gold_answers(item.answers.begin(), item.answers.end());
  if (gold_answers.empty()) {
    try {
      gold_answers = execute(gold, pipeline.kb()).as_strings();
    } catch (const ExecError& e) {
      out.warnings.push_back("item " + item.qid + " gold does not execute: " + e.what());
    }
  } else if (options.verify_gold) {
    try {
      const auto executed = execute(gold, pipeline.kb()).as_strings();
      if (executed != gold_answers)
        out.warnings.push_back("item " + item.qid +
                               " gold answers differ from gold execution");
    } catch (const ExecError& e) {
      out.warnings.push_back("item " + item.qid + " gold does not execute: " + e.what());
    }
  }

  const Pipeline::Answer ans = pipeline.answer(item.question);

  ItemResult r;
  r.qid = item.qid;
  r.split = label.value_or(SplitLabel::Iid);
  r.timings = ans.timings;
  if (ans.composition.answerable) {
    r.predicted = print(ans.composition.expression);
    r.em = exact_match(ans.composition.expression, gold);
    r.f1 = answer_f1(ans.answers.as_strings(), gold_answers);
    if (!r.em) r.failure = "wrong-expression";
  } else {
    r.em = false;
    r.f1 = answer_f1({}, gold_answers);
    r.failure = ans.composition.failure == ComposeFailure::NoStates
                    ? "no-candidate"
                    : "no-executable-composition";
  }
  out.result = std::move(r);
  return out;
}

void accumulate(SplitMetrics& m, const ItemResult& r) {
  ++m.count;
  m.em += r.em ? 1.0 : 0.0;
  m.f1 += r.f1;
}

void finalize(SplitMetrics& m) {
  if (m.count == 0) return;
  m.em /= static_cast<double>(m.count);
  m.f1 /= static_cast<double>(m.count);
}

}  // namespace

EvalReport evaluate(const Pipeline& pipeline, const std::vector<DatasetItem>& train,
                    const std::vector<DatasetItem>& test, const EvalOptions& options) {
  EvalReport report;
  const TrainInventory inv = build_inventory(train, &report.warnings);

  std::vector<PerItem> per_item(test.size());
  const std::size_t threads = std::max<std::size_t>(1, options.threads);
  if (threads == 1 || test.size() <= 1) {
    for (std::size_t i = 0; i < test.size(); ++i)
      per_item[i] = eval_one(pipeline, test[i], inv, options);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < test.size(); i = next.fetch_add(1))
        per_item[i] = eval_one(pipeline, test[i], inv, options);
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, test.size()); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& p : per_item) {
    for (const auto& w : p.warnings) report.warnings.push_back(w);
    if (p.skipped) continue;
    const ItemResult& r = p.result;
    report.items.push_back(r);
    accumulate(report.overall, r);
    switch (r.split) {
      case SplitLabel::Iid: accumulate(report.iid, r); break;
      case SplitLabel::Compositional: accumulate(report.compositional, r); break;
      case SplitLabel::ZeroShot: accumulate(report.zero_shot, r); break;
    }
    if (!r.failure.empty()) ++report.failures[r.failure];
    report.total.candidate_selection += r.timings.candidate_selection;
    report.total.enumeration += r.timings.enumeration;
    report.total.composition += r.timings.composition;
  }
  finalize(report.overall);
  finalize(report.iid);
  finalize(report.compositional);
  finalize(report.zero_shot);
  return report;
}

namespace {

nlohmann::ordered_json metrics_json(const SplitMetrics& m) {
  return {{"count", m.count}, {"em", m.em}, {"f1", m.f1}};
}

nlohmann::ordered_json timings_json(const StageTimings& t) {
  return {{"candidate_selection", t.candidate_selection},
          {"enumeration", t.enumeration},
          {"composition", t.composition}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["overall"] = metrics_json(report.overall);
  j["splits"] = {{"iid", metrics_json(report.iid)},
                 {"compositional", metrics_json(report.compositional)},
                 {"zero_shot", metrics_json(report.zero_shot)}};
  j["failures"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.failures) j["failures"][k] = v;
  j["items"] = nlohmann::ordered_json::array();
  for (const auto& r : report.items) {
    j["items"].push_back({{"qid", r.qid},
                          {"split", split_name(r.split)},
                          {"em", r.em},
                          {"f1", r.f1},
                          {"predicted", r.predicted},
                          {"failure", r.failure}});
  }
  j["warnings"] = report.warnings;
  j["timings"] = nlohmann::ordered_json::object();
  j["timings"]["total"] = timings_json(report.total);
  j["timings"]["per_item"] = nlohmann::ordered_json::array();
  for (const auto& r : report.items) {
    auto t = timings_json(r.timings);
    t["qid"] = r.qid;
    j["timings"]["per_item"].push_back(t);
  }
  return j.dump(2);
}

std::string report_to_table(const EvalReport& report) {
  std::ostringstream out;
  auto row = [&](const std::string& name, const SplitMetrics& m) {
    out << name;
    for (std::size_t i = name.size(); i < 16; ++i) out << ' ';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%6zu  %7.2f  %7.2f\n", m.count, 100.0 * m.em, 100.0 * m.f1);
    out << buf;
  };
  out << "split            count   EM %     F1 %\n";
  row("overall", report.overall);
  row("iid", report.iid);
  row("compositional", report.compositional);
  row("zero_shot", report.zero_shot);
  if (!report.failures.empty()) {
    out << "failures:\n";
    for (const auto& [k, v] : report.failures) out << "  " << k << ": " << v << "\n";
  }
  return out.str();
}

namespace {

// Scorer over an arbitrary function, used by the pilot runner.
class FnScorer : public Scorer {
 public:
  FnScorer(std::string name, std::function<double(const std::string&, const std::string&)> fn)
      : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  double score(const std::string& q, const std::string& text) const override {
    return fn_(q, text);
  }

 private:
  std::string name_;
  std::function<double(const std::string&, const std::string&)> fn_;
};

std::string component_text(const std::string& id, LeafKind kind, const KnowledgeBase& kb) {
  switch (kind) {
    case LeafKind::Relation: {
      auto it = kb.relations().find(id);
      return it == kb.relations().end() ? id : describe_relation(it->second, kb);
    }
    case LeafKind::Class: {
      auto it = kb.classes().find(id);
      return it == kb.classes().end() ? id : describe_class(it->second);
    }
    case LeafKind::Entity: {
      auto it = kb.entities().find(id);
      return it == kb.entities().end() ? id : it->second.names.front();
    }
    case LeafKind::Literal:
      return id;
  }
  return id;
}

void collect_leaves(const SExpr& e, std::vector<std::pair<std::string, LeafKind>>& out) {
  if (e.is_leaf()) {
    out.push_back({e.symbol, e.leaf_kind});
    return;
  }
  for (const auto& c : e.children) collect_leaves(c, out);
}

int count_relation_leaves(const SExpr& e) {
  std::vector<std::pair<std::string, LeafKind>> leaves;
  collect_leaves(e, leaves);
  int n = 0;
  for (const auto& [sym, kind] : leaves)
    if (kind == LeafKind::Relation) ++n;
  return n;
}

std::string expression_domain(const DatasetItem& item, const SExpr& expr) {
  if (!item.domain.empty()) return item.domain;
  std::vector<std::pair<std::string, LeafKind>> leaves;
  collect_leaves(expr, leaves);
  for (const auto& [sym, kind] : leaves)
    if (kind == LeafKind::Relation) return domain_grouping(sym);
  return "";
}

}  // namespace

PilotReport run_pilot(const std::vector<DatasetItem>& train,
                      const std::vector<DatasetItem>& test_compositional,
                      const std::vector<DatasetItem>& test_zero_shot, const Scorer& scorer,
                      const KnowledgeBase& kb, std::size_t pool_cap) {
  PilotReport report;

  std::map<std::string, std::set<std::string>> by_domain;  // domain -> canonical prints
  std::map<std::string, SExpr> parsed;                     // canonical print -> expression
  auto ingest = [&](const std::vector<DatasetItem>& items) {
    for (const auto& item : items) {
      SExpr e;
      try {
        e = canonicalize(parse(item.s_expression));
      } catch (const ParseError& ex) {
        report.notes.push_back("item " + item.qid + " gold does not parse: " + ex.what());
        continue;
      }
      const std::string text = print(e);
      by_domain[expression_domain(item, e)].insert(text);
      parsed.emplace(text, std::move(e));
    }
  };
  ingest(train);
  ingest(test_compositional);
  ingest(test_zero_shot);

  // Memorization inventory: expression strings and component texts seen in
  // training.
  std::set<std::string> seen;
  for (const auto& item : train) {
    SExpr e;
    try {
      e = canonicalize(parse(item.s_expression));
    } catch (const ParseError&) {
      continue;
    }
    seen.insert(print(e));
    seen.insert(print(skeletonize(e)));
    std::vector<std::pair<std::string, LeafKind>> leaves;
    collect_leaves(e, leaves);
    for (const auto& [sym, kind] : leaves) seen.insert(component_text(sym, kind, kb));
  }

  auto gold_texts = std::make_shared<std::set<std::string>>();
  const FnScorer oracle("oracle", [gold_texts](const std::string&, const std::string& text) {
    return gold_texts->count(text) > 0 ? 1.0 : 0.0;
  });
  const FnScorer memorization("memorization", [&seen](const std::string&, const std::string& text) {
    return seen.count(text) > 0 ? 1.0 : 0.0;
  });

  struct Method {
    const Scorer* scorer;
    std::string label;
  };
  const std::vector<Method> methods = {
      {&oracle, "oracle"}, {&memorization, "memorization"}, {&scorer, scorer.name()}};

  auto run_split = [&](const std::vector<DatasetItem>& items, const std::string& split) {
    for (const auto& item : items) {
      SExpr gold;
      try {
        gold = canonicalize(parse(item.s_expression));
      } catch (const ParseError&) {
        continue;  // already noted by ingest
      }
      if (count_relation_leaves(gold) != 1) {
        report.notes.push_back("item " + item.qid + " skipped: not a 1-hop expression");
        continue;
      }
      const std::string gold_text = print(gold);
      const std::string domain = expression_domain(item, gold);
      const auto& domain_pool = by_domain[domain];
      if (domain_pool.size() < 2) {
        report.notes.push_back("item " + item.qid + " skipped: candidate pool has fewer than 2 expressions");
        continue;
      }
      std::vector<std::string> pool{gold_text};
      for (const auto& text : domain_pool) {
        if (pool.size() >= pool_cap) break;
        if (text != gold_text) pool.push_back(text);
      }

      // Fine-grained component pools decomposed from the pool expressions.
      FinePools fine;
      std::set<std::string> added;
      for (const auto& text : pool) {
        const SExpr& e = parsed.at(text);
        std::vector<std::pair<std::string, LeafKind>> leaves;
        collect_leaves(e, leaves);
        for (const auto& [sym, kind] : leaves) {
          if (!added.insert(sym).second) continue;
          const std::string ctext = component_text(sym, kind, kb);
          switch (kind) {
            case LeafKind::Relation: fine.relations.push_back({sym, ctext}); break;
            case LeafKind::Class: fine.classes.push_back({sym, ctext}); break;
            case LeafKind::Entity: fine.entities.push_back({sym, ctext}); break;
            case LeafKind::Literal: break;
          }
        }
        const std::string skel = print(skeletonize(e));
        if (added.insert("[LF]" + skel).second) fine.skeletons.push_back({skel, skel});
      }

      gold_texts->clear();
      gold_texts->insert(gold_text);
      gold_texts->insert(print(skeletonize(gold)));
      std::vector<std::pair<std::string, LeafKind>> gold_leaves;
      collect_leaves(gold, gold_leaves);
      for (const auto& [sym, kind] : gold_leaves)
        gold_texts->insert(component_text(sym, kind, kb));

      for (const auto& method : methods) {
        // Coarse: the whole expression string is the scored unit; correct
        // only when the gold expression is the strict argmax of its pool.
        double gold_coarse = method.scorer->score(item.question, gold_text);
        bool coarse_correct = true;
        for (const auto& text : pool) {
          if (text == gold_text) continue;
          if (method.scorer->score(item.question, text) >= gold_coarse) {
            coarse_correct = false;
            break;
          }
        }
        auto& coarse_cell = report.methods[method.label + "/coarse"][split];
        ++coarse_cell.total;
        if (coarse_correct) ++coarse_cell.correct;

        // Fine: sum of softmax-normalized component scores.
        double gold_fine = score_expression_fine(item.question, gold, *method.scorer, fine);
        bool fine_correct = true;
        for (const auto& text : pool) {
          if (text == gold_text) continue;
          if (score_expression_fine(item.question, parsed.at(text), *method.scorer, fine) >=
              gold_fine) {
            fine_correct = false;
            break;
          }
        }
        auto& fine_cell = report.methods[method.label + "/fine"][split];
        ++fine_cell.total;
        if (fine_correct) ++fine_cell.correct;
      }
    }
  };
  run_split(test_compositional, "compositional");
  run_split(test_zero_shot, "zero_shot");
  return report;
}

std::string pilot_to_json(const PilotReport& report) {
  nlohmann::ordered_json j;
  j["methods"] = nlohmann::ordered_json::object();
  for (const auto& [method, splits] : report.methods) {
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    for (const auto& [split, cell] : splits)
      m[split] = {{"total", cell.total}, {"correct", cell.correct}, {"accuracy", cell.accuracy()}};
    j["methods"][method] = m;
  }
  j["notes"] = report.notes;
  return j.dump(2);
}

std::string pilot_to_table(const PilotReport& report) {
  std::ostringstream out;
  out << "method                    split            total  correct  accuracy %\n";
  for (const auto& [method, splits] : report.methods) {
    for (const auto& [split, cell] : splits) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%-25s %-16s %5zu  %7zu  %9.2f\n", method.c_str(),
                    split.c_str(), cell.total, cell.correct, 100.0 * cell.accuracy());
      out << buf;
    }
  }
  return out.str();
}

std::string export_negatives(const std::vector<DatasetItem>& items, const KnowledgeBase& kb,
                             std::size_t n, unsigned seed) {
  std::mt19937 engine(seed);
  std::string out;
  for (const auto& item : items) {
    nlohmann::ordered_json j;
    j["qid"] = item.qid;
    SExpr gold;
    try {
      gold = parse(item.s_expression);
    } catch (const ParseError& e) {
      j["skipped"] = std::string("gold does not parse: ") + e.what();
      out += j.dump() + "\n";
      continue;
    }
    std::vector<std::pair<std::string, LeafKind>> leaves;
    collect_leaves(gold, leaves);
    std::string gold_relation, gold_class;
    for (const auto& [sym, kind] : leaves) {
      if (kind == LeafKind::Relation && gold_relation.empty()) gold_relation = sym;
      if (kind == LeafKind::Class && gold_class.empty()) gold_class = sym;
    }
    if (gold_relation.empty()) {
      j["skipped"] = "gold has no relation";
      out += j.dump() + "\n";
      continue;
    }
    j["positive_relation"] = gold_relation;
    if (!gold_class.empty()) j["positive_class"] = gold_class;

    const std::string grouping = domain_grouping(gold_relation);
    std::vector<std::string> candidates;
    for (const auto& [id, info] : kb.relations())
      if (id != gold_relation && domain_grouping(id) == grouping) candidates.push_back(id);

    // Fisher-Yates with explicit draws so the bytes are stable across
    // platforms (std::shuffle is implementation-defined).
    for (std::size_t i = candidates.size(); i > 1; --i) {
      const std::size_t k = engine() % i;
      std::swap(candidates[i - 1], candidates[k]);
    }
    if (candidates.size() > n) candidates.resize(n);
    j["negatives"] = candidates;
    if (candidates.size() < n)
      j["note"] = "only " + std::to_string(candidates.size()) + " same-domain negatives available";
    out += j.dump() + "\n";
  }
  return out;
}

BenchReport bench(const Pipeline& pipeline, const std::vector<DatasetItem>& dataset) {
  BenchReport report;
  for (const auto& item : dataset) {
    const auto t0 = Clock::now();
    const Pipeline::Answer ans = pipeline.answer(item.question);
    const auto t1 = Clock::now();
    BenchRow row{item.qid, ans.timings, ms_between(t0, t1)};
    report.aggregate.candidate_selection += row.timings.candidate_selection;
    report.aggregate.enumeration += row.timings.enumeration;
    report.aggregate.composition += row.timings.composition;
    report.total_ms += row.total_ms;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string bench_to_json(const BenchReport& report) {
  nlohmann::ordered_json j;
  j["stages"] = {"candidate_selection", "enumeration", "composition"};
  j["per_question"] = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    auto t = timings_json(row.timings);
    t["qid"] = row.qid;
    t["total"] = row.total_ms;
    j["per_question"].push_back(t);
  }
  j["aggregate"] = timings_json(report.aggregate);
  j["aggregate"]["total"] = report.total_ms;
  return j.dump(2);
}

std::string bench_to_table(const BenchReport& report) {
  std::ostringstream out;
  out << "qid              candidate_selection  enumeration  composition  total (ms)\n";
  auto row = [&](const std::string& qid, const StageTimings& t, double total) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-16s %19.3f  %11.3f  %11.3f  %10.3f\n", qid.c_str(),
                  t.candidate_selection, t.enumeration, t.composition, total);
    out << buf;
  };
  for (const auto& r : report.rows) row(r.qid, r.timings, r.total_ms);
  row("aggregate", report.aggregate, report.total_ms);
  return out.str();
}

}  // namespace fc
