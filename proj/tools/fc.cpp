#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fc/harness.hpp"

namespace {

int g_log_level = 1;  // 0 quiet, 1 normal, 2 verbose

void init_log_level() {
  const char* env = std::getenv("FC_LOG");
  if (!env) return;
  try {
    g_log_level = std::stoi(env);
  } catch (...) {
  }
}

void log_warnings(const std::vector<std::string>& warnings) {
  if (g_log_level < 2) return;
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

fc::KnowledgeBase load_kb(const std::string& path) {
  fc::LoadReport report;
  fc::KnowledgeBase kb = fc::KnowledgeBase::load(path, {}, &report);
  if (g_log_level >= 2) log_warnings(report.warnings);
  return kb;
}

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct CommonFlags {
  std::string scorer = "tfidf";
  std::string skeleton_scorer = "heuristic";
  std::size_t beam = 8;
  bool require_nonempty = false;
  bool ontology_only_rr = false;

  fc::PipelineConfig pipeline_config() const {
    fc::PipelineConfig config;
    config.scorer = scorer;
    config.skeleton_scorer = skeleton_scorer;
    config.composer.beam = beam;
    config.composer.exec_mode =
        require_nonempty ? fc::ExecMode::NonEmpty : fc::ExecMode::Structural;
    config.midgrain.ontology_only_rr = ontology_only_rr;
    return config;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--scorer", scorer, "semantic scorer (tfidf|uniform)");
    cmd->add_option("--skeleton-scorer", skeleton_scorer, "skeleton scorer (heuristic)");
    cmd->add_option("--beam", beam, "composition beam width");
    cmd->add_flag("--require-nonempty", require_nonempty,
                  "only accept compositions with non-empty answers");
    cmd->add_flag("--ontology-only-rr", ontology_only_rr,
                  "skip the fact-witness check for relation pairs");
  }
};

}  // namespace

int main(int argc, char** argv) {
  init_log_level();
  CLI::App app{"fine-to-coarse KBQA pipeline"};
  app.require_subcommand(1);

  // answer
  auto* answer_cmd = app.add_subcommand("answer", "answer a single question");
  std::string kb_path, question;
  bool trace = false;
  CommonFlags answer_flags;
  answer_cmd->add_option("--kb", kb_path, "knowledge base TSV file")->required();
  answer_cmd->add_option("--question", question, "natural language question")->required();
  answer_cmd->add_flag("--trace", trace, "print composition trace to stderr");
  answer_flags.attach(answer_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate on a dataset");
  std::string eval_kb, train_path, test_path, report_path;
  bool verify_gold = false;
  std::size_t threads = 1;
  CommonFlags eval_flags;
  eval_cmd->add_option("--kb", eval_kb, "knowledge base TSV file")->required();
  eval_cmd->add_option("--train", train_path, "training split JSONL")->required();
  eval_cmd->add_option("--test", test_path, "test split JSONL")->required();
  eval_cmd->add_option("--report", report_path, "write the JSON report here");
  eval_cmd->add_flag("--verify-gold", verify_gold,
                     "check stored answers against gold execution");
  eval_cmd->add_option("--threads", threads, "evaluation worker threads");
  eval_flags.attach(eval_cmd);

  // pilot
  auto* pilot_cmd = app.add_subcommand("pilot", "run the retrieval pilot study");
  std::string pilot_kb, pilot_train, pilot_comp, pilot_zero, pilot_report, pilot_scorer = "tfidf";
  pilot_cmd->add_option("--kb", pilot_kb, "knowledge base TSV file")->required();
  pilot_cmd->add_option("--train", pilot_train, "training split JSONL")->required();
  pilot_cmd->add_option("--test-comp", pilot_comp, "compositional split JSONL")->required();
  pilot_cmd->add_option("--test-zero", pilot_zero, "zero-shot split JSONL")->required();
  pilot_cmd->add_option("--scorer", pilot_scorer, "semantic scorer (tfidf|uniform)");
  pilot_cmd->add_option("--report", pilot_report, "write the JSON report here");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "time the pipeline stages");
  std::string bench_kb, bench_data, bench_report;
  CommonFlags bench_flags;
  bench_cmd->add_option("--kb", bench_kb, "knowledge base TSV file")->required();
  bench_cmd->add_option("--data", bench_data, "questions JSONL")->required();
  bench_cmd->add_option("--report", bench_report, "write the JSON report here");
  bench_flags.attach(bench_cmd);

  // export-negatives
  auto* neg_cmd = app.add_subcommand("export-negatives",
                                     "sample contrastive negatives for each item");
  std::string neg_kb, neg_data, neg_out;
  std::size_t neg_n = 48;
  unsigned neg_seed = 7;
  neg_cmd->add_option("--kb", neg_kb, "knowledge base TSV file")->required();
  neg_cmd->add_option("--data", neg_data, "items JSONL")->required();
  neg_cmd->add_option("--out", neg_out, "write the JSONL here");
  neg_cmd->add_option("--n", neg_n, "negatives per item");
  neg_cmd->add_option("--seed", neg_seed, "sampling seed");

  // dump-pairs
  auto* pairs_cmd = app.add_subcommand("dump-pairs",
                                       "print the connectivity pair sets for a question");
  std::string pairs_kb, pairs_question;
  CommonFlags pairs_flags;
  pairs_cmd->add_option("--kb", pairs_kb, "knowledge base TSV file")->required();
  pairs_cmd->add_option("--question", pairs_question, "natural language question")->required();
  pairs_flags.attach(pairs_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*answer_cmd) {
      fc::KnowledgeBase kb = load_kb(kb_path);
      fc::PipelineConfig config = answer_flags.pipeline_config();
      config.composer.trace = trace;
      fc::Pipeline pipeline(kb, config);
      const auto result = pipeline.answer(question);
      log_warnings(result.warnings);
      if (trace)
        for (const auto& line : result.composition.trace) std::cerr << line << "\n";
      if (!result.composition.answerable) {
        std::cout << "unanswerable: " << result.composition.reason << "\n";
        return 2;
      }
      std::cout << fc::print(result.composition.expression) << "\n";
      for (const auto& a : result.answers.as_strings()) std::cout << a << "\n";
      return 0;
    }
    if (*eval_cmd) {
      fc::KnowledgeBase kb = load_kb(eval_kb);
      fc::Pipeline pipeline(kb, eval_flags.pipeline_config());
      const auto train = fc::load_dataset(train_path);
      const auto test = fc::load_dataset(test_path);
      fc::EvalOptions options;
      options.verify_gold = verify_gold;
      options.threads = threads;
      const fc::EvalReport report = fc::evaluate(pipeline, train, test, options);
      log_warnings(report.warnings);
      if (!report_path.empty()) write_or_print(report_path, fc::report_to_json(report));
      std::cout << fc::report_to_table(report);
      return report.overall.em < 1.0 ? 2 : 0;
    }
    if (*pilot_cmd) {
      fc::KnowledgeBase kb = load_kb(pilot_kb);
      fc::ComponentIndex index(kb);
      const auto scorer = fc::make_scorer(pilot_scorer, index);
      const fc::PilotReport report =
          fc::run_pilot(fc::load_dataset(pilot_train), fc::load_dataset(pilot_comp),
                        fc::load_dataset(pilot_zero), *scorer, kb);
      if (!pilot_report.empty()) write_or_print(pilot_report, fc::pilot_to_json(report));
      std::cout << fc::pilot_to_table(report);
      return 0;
    }
    if (*bench_cmd) {
      fc::KnowledgeBase kb = load_kb(bench_kb);
      fc::Pipeline pipeline(kb, bench_flags.pipeline_config());
      const fc::BenchReport report = fc::bench(pipeline, fc::load_dataset(bench_data));
      if (!bench_report.empty()) write_or_print(bench_report, fc::bench_to_json(report));
      std::cout << fc::bench_to_table(report);
      return 0;
    }
    if (*neg_cmd) {
      fc::KnowledgeBase kb = load_kb(neg_kb);
      const std::string jsonl =
          fc::export_negatives(fc::load_dataset(neg_data), kb, neg_n, neg_seed);
      write_or_print(neg_out, jsonl);
      return 0;
    }
    if (*pairs_cmd) {
      fc::KnowledgeBase kb = load_kb(pairs_kb);
      fc::Pipeline pipeline(kb, pairs_flags.pipeline_config());
      const auto result = pipeline.answer(pairs_question);
      log_warnings(result.warnings);
      std::cout << fc::pairs_to_json(result.pairs) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
