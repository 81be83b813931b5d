#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fc/composer.hpp"
#include "fc/exec.hpp"
#include "fc/kb.hpp"
#include "fc/linking.hpp"
#include "fc/midgrain.hpp"
#include "fc/retrieval.hpp"
#include "fc/sexpr.hpp"
#include "fc/skeleton.hpp"

namespace fc {

// One dataset record, read from JSON lines with the fields "qid",
// "question", "s_expression", optional "answers" and optional "domain".
struct DatasetItem {
  std::string qid;
  std::string question;
  std::string s_expression;
  std::vector<std::string> answers;
  std::string domain;
};

std::vector<DatasetItem> load_dataset(const std::filesystem::path& path);
std::vector<DatasetItem> parse_dataset(std::string_view text, const std::string& origin);

// Components are the relation and class ids of a gold expression;
// compositions are unordered adjacent pairs of such labels in its canonical
// query graph (labels meeting at a shared graph node).
struct TrainInventory {
  std::set<std::string> components;
  std::set<std::pair<std::string, std::string>> compositions;
};

std::set<std::string> expression_components(const SExpr& expr);
std::set<std::pair<std::string, std::string>> expression_compositions(const SExpr& expr);
TrainInventory build_inventory(const std::vector<DatasetItem>& train,
                               std::vector<std::string>* warnings = nullptr);

enum class SplitLabel { Iid, Compositional, ZeroShot };
const char* split_name(SplitLabel label);

// Zero-shot when any component is unseen, else compositional when any
// composition is unseen, else iid. Unparseable gold yields nullopt with a
// warning.
std::optional<SplitLabel> classify_split(const DatasetItem& item, const TrainInventory& train,
                                         std::vector<std::string>* warnings = nullptr);

// F1 of two answer sets; both empty scores 1, exactly one empty scores 0.
double answer_f1(const std::set<std::string>& predicted, const std::set<std::string>& gold);

// Per-question stage durations in milliseconds.
struct StageTimings {
  double candidate_selection = 0.0;
  double enumeration = 0.0;
  double composition = 0.0;
  double sum() const { return candidate_selection + enumeration + composition; }
};

// Scorer registry used by the CLI: "tfidf" (default) and "uniform".
std::unique_ptr<Scorer> make_scorer(const std::string& name, const ComponentIndex& index);
// Skeleton scorer registry: "heuristic" (default).
std::unique_ptr<SkeletonScorer> make_skeleton_scorer(const std::string& name);

struct PipelineConfig {
  RetrievalConfig retrieval;
  SkeletonOptions skeleton;
  ComposerConfig composer;
  MidgrainOptions midgrain;
  std::string scorer = "tfidf";
  std::string skeleton_scorer = "heuristic";
};

// The end-to-end fine-to-coarse pipeline over one knowledge base: candidate
// retrieval, entity linking, skeleton proposal, pair building and
// constrained composition.
class Pipeline {
 public:
  Pipeline(const KnowledgeBase& kb, PipelineConfig config = {});

  struct Answer {
    std::vector<ScoredCandidate> relations;  // R_q
    std::vector<ScoredCandidate> classes;    // C_q
    std::vector<MentionSpan> mentions;       // post pruning
    std::set<std::string> entities;          // surviving candidates, all spans
    std::vector<std::string> selected;       // popularity pick, one per mention
    std::vector<LiteralSpan> literals;
    std::string masked_question;
    SkeletonCandidateSet skeletons;
    PairSets pairs;
    std::string serialized_input;
    CompositionResult composition;
    AnswerSet answers;  // execution result when answerable
    StageTimings timings;
    std::vector<std::string> warnings;
  };

  Answer answer(const std::string& question) const;

  const KnowledgeBase& kb() const { return *kb_; }
  const ComponentIndex& index() const { return index_; }
  const Scorer& scorer() const { return *scorer_; }
  const PipelineConfig& config() const { return config_; }

 private:
  const KnowledgeBase* kb_;
  PipelineConfig config_;
  ComponentIndex index_;
  NameTrie trie_;
  std::unique_ptr<Scorer> scorer_;
  std::unique_ptr<SkeletonScorer> skeleton_scorer_;
  std::vector<SExpr> enumerated_;
};

struct EvalOptions {
  bool verify_gold = false;
  std::size_t threads = 1;
};

struct ItemResult {
  std::string qid;
  SplitLabel split = SplitLabel::Iid;
  bool em = false;
  double f1 = 0.0;
  std::string predicted;  // canonical print, empty when unanswerable
  std::string failure;    // "", "no-candidate", "no-executable-composition",
                          // "wrong-expression"
  StageTimings timings;
};

struct SplitMetrics {
  std::size_t count = 0;
  double em = 0.0;  // fractions in [0, 1]
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<ItemResult> items;
  SplitMetrics overall, iid, compositional, zero_shot;
  std::map<std::string, std::size_t> failures;
  StageTimings total;
  std::vector<std::string> warnings;
};

EvalReport evaluate(const Pipeline& pipeline, const std::vector<DatasetItem>& train,
                    const std::vector<DatasetItem>& test, const EvalOptions& options = {});

// Deterministic JSON rendering; all timing data sits under the top-level
// "timings" key so reruns compare byte-exactly after removing it.
std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

// Pilot study: coarse scoring of whole expressions versus fine-grained
// component scoring, on 1-hop items with same-domain candidate pools.
struct PilotCell {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct PilotReport {
  // method key: "<scorer>/<coarse|fine>", e.g. "oracle/fine"
  std::map<std::string, std::map<std::string, PilotCell>> methods;  // -> split -> cell
  std::vector<std::string> notes;
};

PilotReport run_pilot(const std::vector<DatasetItem>& train,
                      const std::vector<DatasetItem>& test_compositional,
                      const std::vector<DatasetItem>& test_zero_shot, const Scorer& scorer,
                      const KnowledgeBase& kb, std::size_t pool_cap = 100);
std::string pilot_to_json(const PilotReport& report);
std::string pilot_to_table(const PilotReport& report);

// Training-pair export: per item the gold relation and class with `n`
// relations sampled (seeded Fisher-Yates, stable across platforms) from the
// same domain grouping as the gold relation.
std::string export_negatives(const std::vector<DatasetItem>& items, const KnowledgeBase& kb,
                             std::size_t n = 48, unsigned seed = 7);

struct BenchRow {
  std::string qid;
  StageTimings timings;
  double total_ms = 0.0;  // independently measured wall time
};

struct BenchReport {
  std::vector<BenchRow> rows;
  StageTimings aggregate;
  double total_ms = 0.0;
};

BenchReport bench(const Pipeline& pipeline, const std::vector<DatasetItem>& dataset);
std::string bench_to_json(const BenchReport& report);
std::string bench_to_table(const BenchReport& report);

}  // namespace fc
