#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "fc/harness.hpp"
#include "fc/kb.hpp"
#include "fc/sexpr.hpp"
#include "json.hpp"

namespace {

const char* kRailKb = R"(#classes
railway.railway	railway
geo.city	city
t.float	float value
#relations
rail.railway.from_city	starts in	railway.railway	geo.city	rail.city.origin_of
rail.city.origin_of	origin of	geo.city	railway.railway	rail.railway.from_city
rail.railway.length_km	length km	railway.railway	t.float	-
type.object.type	type	-	-	-
#entities
m.alpha	5	Alpha City
m.beta	3	Beta City
m.r1	2	Coast Line
m.r2	1	Hill Line
#facts
m.r1	type.object.type	railway.railway
m.r2	type.object.type	railway.railway
m.alpha	type.object.type	geo.city
m.beta	type.object.type	geo.city
m.r1	rail.railway.from_city	m.alpha
m.r2	rail.railway.from_city	m.beta
m.r1	rail.railway.length_km	120.5^^float
m.r2	rail.railway.length_km	80.0^^float
)";

fc::KnowledgeBase rail_kb() { return fc::KnowledgeBase::load_string(kRailKb); }

fc::DatasetItem item(const std::string& qid, const std::string& question,
                     const std::string& expr) {
  fc::DatasetItem it;
  it.qid = qid;
  it.question = question;
  it.s_expression = expr;
  return it;
}

}  // namespace

TEST_CASE("dataset lines parse required and optional fields") {
  const std::string text =
      "{\"qid\":\"q1\",\"question\":\"which railway starts in Alpha City?\","
      "\"s_expression\":\"(AND railway.railway (JOIN rail.railway.from_city m.alpha))\","
      "\"answers\":[\"m.r1\"],\"domain\":\"rail\"}\n"
      "\n"
      "{\"qid\":\"q2\",\"question\":\"how long is Coast Line?\","
      "\"s_expression\":\"(JOIN (R rail.railway.length_km) m.r1)\"}\n";
  const auto items = fc::parse_dataset(text, "inline");
  REQUIRE(items.size() == 2);
  CHECK(items[0].qid == "q1");
  CHECK(items[0].question == "which railway starts in Alpha City?");
  CHECK(items[0].answers == std::vector<std::string>{"m.r1"});
  CHECK(items[0].domain == "rail");
  CHECK(items[1].qid == "q2");
  CHECK(items[1].answers.empty());
  CHECK(items[1].domain.empty());
}

TEST_CASE("components and compositions come from the canonical graph") {
  const fc::SExpr anchored =
      fc::parse("(AND railway.railway (JOIN rail.railway.from_city m.alpha))");
  CHECK(fc::expression_components(anchored) ==
        std::set<std::string>{"rail.railway.from_city", "railway.railway"});
  CHECK(fc::expression_compositions(anchored) ==
        std::set<std::pair<std::string, std::string>>{
            {"rail.railway.from_city", "railway.railway"}});

  const fc::SExpr chained =
      fc::parse("(JOIN rail.railway.from_city (JOIN rail.city.origin_of m.r1))");
  CHECK(fc::expression_compositions(chained) ==
        std::set<std::pair<std::string, std::string>>{
            {"rail.city.origin_of", "rail.railway.from_city"}});

  const fc::SExpr single = fc::parse("(JOIN (R rail.railway.length_km) m.r1)");
  CHECK(fc::expression_components(single) ==
        std::set<std::string>{"rail.railway.length_km"});
  CHECK(fc::expression_compositions(single).empty());
}

TEST_CASE("splits are labeled by unseen components, then unseen compositions") {
  const std::vector<fc::DatasetItem> train = {
      item("t1", "", "(AND railway.railway (JOIN rail.railway.from_city m.alpha))"),
      item("t2", "", "(JOIN (R rail.railway.length_km) m.r1)"),
  };
  const fc::TrainInventory inv = fc::build_inventory(train);
  CHECK(inv.components == std::set<std::string>{"rail.railway.from_city",
                                                "rail.railway.length_km", "railway.railway"});
  CHECK(inv.compositions == std::set<std::pair<std::string, std::string>>{
                                {"rail.railway.from_city", "railway.railway"}});

  auto label = [&](const std::string& expr) {
    return fc::classify_split(item("x", "", expr), inv);
  };
  CHECK(label("(AND railway.railway (JOIN rail.railway.from_city m.beta))") ==
        fc::SplitLabel::Iid);
  // Seen components meeting at a new node make it compositional.
  CHECK(label("(AND railway.railway (JOIN rail.railway.length_km 120.5^^float))") ==
        fc::SplitLabel::Compositional);
  // Any unseen component wins over the composition check.
  CHECK(label("(AND railway.railway (JOIN rail.city.origin_of m.alpha))") ==
        fc::SplitLabel::ZeroShot);

  std::vector<std::string> warnings;
  CHECK_FALSE(fc::classify_split(item("bad", "", "((("), inv, &warnings).has_value());
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("bad") != std::string::npos);

  CHECK(std::string(fc::split_name(fc::SplitLabel::Iid)) == "iid");
  CHECK(std::string(fc::split_name(fc::SplitLabel::Compositional)) == "compositional");
  CHECK(std::string(fc::split_name(fc::SplitLabel::ZeroShot)) == "zero_shot");
}

TEST_CASE("answer F1 handles empty sets and partial overlap") {
  CHECK(fc::answer_f1({}, {}) == 1.0);
  CHECK(fc::answer_f1({"a"}, {}) == 0.0);
  CHECK(fc::answer_f1({}, {"a"}) == 0.0);
  CHECK(fc::answer_f1({"a", "b"}, {"b", "c"}) == 0.5);
  CHECK(fc::answer_f1({"a", "b", "c"}, {"b", "c"}) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(fc::answer_f1({"a"}, {"b"}) == 0.0);
}

TEST_CASE("scorer registries resolve known names and reject others") {
  const fc::KnowledgeBase kb = rail_kb();
  const fc::ComponentIndex index(kb);
  CHECK(fc::make_scorer("tfidf", index)->name() == "tfidf");
  CHECK(fc::make_scorer("uniform", index)->name() == "uniform");
  CHECK_THROWS_AS(fc::make_scorer("neural", index), std::invalid_argument);
  CHECK(fc::make_skeleton_scorer("heuristic")->name() == "heuristic");
  CHECK_THROWS_AS(fc::make_skeleton_scorer("neural"), std::invalid_argument);
}

TEST_CASE("evaluation scores expression match and answer overlap separately") {
  const fc::KnowledgeBase kb = rail_kb();
  const fc::Pipeline pipeline(kb);

  fc::DatasetItem q1 = item("q1", "which railway starts in Alpha City?",
                            "(AND railway.railway (JOIN rail.railway.from_city m.alpha))");
  q1.answers = {"m.r1"};
  // The gold uses a reverse traversal the composer spells with the declared
  // reverse relation and a type constraint: same answers, different graph.
  const fc::DatasetItem q4 = item("q4", "which city is the origin of Coast Line?",
                                  "(JOIN (R rail.railway.from_city) m.r1)");

  const std::vector<fc::DatasetItem> train = {q1};
  const fc::EvalReport report = fc::evaluate(pipeline, train, {q1, q4});

  REQUIRE(report.items.size() == 2);
  CHECK(report.items[0].qid == "q1");
  CHECK(report.items[0].em);
  CHECK(report.items[0].f1 == 1.0);
  CHECK(report.items[0].failure.empty());
  CHECK(report.items[0].predicted ==
        "(AND (JOIN rail.railway.from_city m.alpha) railway.railway)");

  CHECK(report.items[1].qid == "q4");
  CHECK_FALSE(report.items[1].em);
  CHECK(report.items[1].f1 == 1.0);
  CHECK(report.items[1].failure == "wrong-expression");
  CHECK(report.items[1].predicted == "(AND (JOIN rail.city.origin_of m.r1) geo.city)");

  CHECK(report.overall.count == 2);
  CHECK(report.overall.em == 0.5);
  CHECK(report.overall.f1 == 1.0);
  CHECK(report.iid.count == 2);
  CHECK(report.compositional.count == 0);
  CHECK(report.zero_shot.count == 0);
  CHECK(report.failures == std::map<std::string, std::size_t>{{"wrong-expression", 1}});
}

TEST_CASE("evaluation reports are byte-stable apart from timings") {
  const fc::KnowledgeBase kb = rail_kb();
  const fc::Pipeline pipeline(kb);
  fc::DatasetItem q1 = item("q1", "which railway starts in Alpha City?",
                            "(AND railway.railway (JOIN rail.railway.from_city m.alpha))");
  q1.answers = {"m.r1"};
  const std::vector<fc::DatasetItem> train = {q1};

  const std::string first = fc::report_to_json(fc::evaluate(pipeline, train, {q1}));
  const std::string second = fc::report_to_json(fc::evaluate(pipeline, train, {q1}));

  auto a = nlohmann::ordered_json::parse(first);
  auto b = nlohmann::ordered_json::parse(second);
  REQUIRE(a.contains("timings"));
  a.erase("timings");
  b.erase("timings");
  CHECK(a.dump() == b.dump());
  CHECK(a.contains("overall"));
  CHECK(a.contains("splits"));
  CHECK(a.contains("items"));
}

TEST_CASE("the pilot separates coarse and fine scoring per split") {
  const fc::KnowledgeBase kb = rail_kb();
  const std::vector<fc::DatasetItem> train = {
      item("t1", "", "(AND railway.railway (JOIN rail.railway.from_city m.alpha))"),
      item("t2", "", "(JOIN rail.railway.from_city m.beta)"),
  };
  const std::vector<fc::DatasetItem> comp = {
      item("c1", "", "(AND railway.railway (JOIN rail.railway.length_km 120.5^^float))"),
  };
  const std::vector<fc::DatasetItem> zero = {
      item("z1", "", "(JOIN rail.city.origin_of m.r1)"),
      item("z2", "", "(JOIN rail.railway.from_city (JOIN rail.city.origin_of m.r1))"),
  };

  const fc::UniformScorer uniform;
  const fc::PilotReport report = fc::run_pilot(train, comp, zero, uniform, kb);

  REQUIRE(report.methods.count("oracle/coarse"));
  REQUIRE(report.methods.count("oracle/fine"));
  REQUIRE(report.methods.count("memorization/coarse"));
  REQUIRE(report.methods.count("uniform/coarse"));

  // The two-hop zero-shot item is excluded from every method.
  const auto& oracle_coarse = report.methods.at("oracle/coarse");
  CHECK(oracle_coarse.at("compositional").total == 1);
  CHECK(oracle_coarse.at("zero_shot").total == 1);
  CHECK(oracle_coarse.at("compositional").correct == 1);
  CHECK(oracle_coarse.at("zero_shot").correct == 1);
  CHECK(report.methods.at("oracle/fine").at("compositional").correct == 1);
  CHECK(report.methods.at("oracle/fine").at("zero_shot").correct == 1);

  // A constant scorer never ranks the gold strictly first.
  CHECK(report.methods.at("uniform/coarse").at("compositional").correct == 0);
  CHECK(report.methods.at("uniform/coarse").at("zero_shot").correct == 0);

  bool noted = false;
  for (const auto& n : report.notes)
    if (n.find("z2") != std::string::npos && n.find("not a 1-hop") != std::string::npos)
      noted = true;
  CHECK(noted);

  CHECK(fc::pilot_to_json(report) == fc::pilot_to_json(fc::run_pilot(train, comp, zero, uniform, kb)));
}

TEST_CASE("negative export is deterministic and stays in the gold's grouping") {
  const fc::KnowledgeBase kb = rail_kb();
  const std::vector<fc::DatasetItem> items = {
      item("q1", "", "(AND railway.railway (JOIN rail.railway.from_city m.alpha))"),
      item("bad", "", "((("),
  };

  const std::string out = fc::export_negatives(items, kb, 48, 7);
  CHECK(out == fc::export_negatives(items, kb, 48, 7));

  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < out.size()) {
    const std::size_t end = out.find('\n', start);
    lines.push_back(out.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  REQUIRE(lines.size() == 2);

  const auto first = nlohmann::json::parse(lines[0]);
  CHECK(first.at("qid") == "q1");
  CHECK(first.at("positive_relation") == "rail.railway.from_city");
  CHECK(first.at("positive_class") == "railway.railway");
  const std::set<std::string> negatives(first.at("negatives").begin(),
                                        first.at("negatives").end());
  // Only two same-grouping relations exist besides the gold.
  CHECK(negatives ==
        std::set<std::string>{"rail.city.origin_of", "rail.railway.length_km"});
  CHECK(first.at("note").get<std::string>().find("only 2 same-domain negatives") !=
        std::string::npos);

  const auto second = nlohmann::json::parse(lines[1]);
  CHECK(second.at("qid") == "bad");
  CHECK(second.contains("skipped"));

  // A tighter budget samples a strict, still deterministic subset.
  const std::string small = fc::export_negatives(items, kb, 1, 7);
  const auto line = nlohmann::json::parse(small.substr(0, small.find('\n')));
  CHECK(line.at("negatives").size() == 1);
}
