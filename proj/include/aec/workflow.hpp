#pragma once

// Stage-oriented driver: configuration, per-stage artifacts with a digest manifest,
// and report rendering.

#include "aec/corpus.hpp"
#include "aec/features.hpp"
#include "aec/forest.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace aec::workflow {

namespace fs = std::filesystem;

struct Paths {
    std::optional<fs::path> base_dataset;
    fs::path eval_dataset;
    fs::path annotations;
    fs::path lexicon;
    std::optional<fs::path> markers;      // built-in lists when absent
    std::optional<fs::path> predictions;  // built-in base model when absent
    fs::path output_dir;
};

struct Seeds {
    std::uint64_t split = 1;
    std::uint64_t undersample = 2;
    std::uint64_t base = 3;
    std::uint64_t forest = 4;
};

struct RunConfig {
    Paths paths;
    corpus::ColumnFormat dataset_format;
    std::optional<corpus::LabelMapping> label_mapping;
    bool dedup_base = true;
    corpus::DedupConfig dedup;
    double train_ratio = 0.8;
    features::FeatureConfig features;
    bool strict_conllu = true;
    int base_epochs = 30;
    double base_learning_rate = 0.1;
    bool renormalize = false;
    std::vector<forest::ForestParams> grid;
    std::size_t cv_folds = 5;
    unsigned threads = 1;
    std::vector<std::size_t> ks{10, 20, 30, 40, 50};
    std::size_t explain_top = 10;
    std::size_t report_samples = 10;
    std::size_t report_features = 100;
    Seeds seeds;

    /// Canonical JSON of every setting that influences artifacts.
    std::string canonical_json() const;
};

/// Parses a JSON config; relative paths resolve against the config file's directory and
/// the AEC_OUT environment variable overrides the output directory. Throws ConfigError.
RunConfig load_config(const fs::path& path);
RunConfig parse_config(const std::string& json_text, const fs::path& base_dir);

/// Checks referenced inputs exist and numeric settings are in range. Throws ConfigError
/// naming the offending path or key.
void validate(const RunConfig& cfg);

enum class Stage { Prepare, Base, Errorset, Train, Rank, Evaluate, Report };

const std::vector<Stage>& all_stages();
std::string_view stage_name(Stage s);
/// Parses "prepare,base,..."; throws ConfigError on unknown names.
std::vector<Stage> parse_stages(const std::string& list);

struct StageOutcome {
    Stage stage;
    bool skipped = false;  // inputs and outputs matched the manifest
};

/// Runs the requested stages in workflow order. Throws ConfigError when a stage's input
/// artifacts are missing; other aec::Error types signal stage failures.
std::vector<StageOutcome> run(const RunConfig& cfg, const std::vector<Stage>& stages);

/// Renders report.md and report.json from the artifacts in `dir`. Throws ConfigError
/// when required artifacts are missing.
void emit_report(const fs::path& dir, std::size_t report_samples = 10, std::size_t report_features = 100);

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const fs::path& path);
std::string text_digest(const std::string& text);

/// File names of the artifacts written under the output directory.
namespace artifact {
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kSchema = "schema.json";
inline constexpr const char* kPreparedEval = "prepared_eval.jsonl";
inline constexpr const char* kPreparedBase = "prepared_base.jsonl";
inline constexpr const char* kFeatures = "features.jsonl";
inline constexpr const char* kFeatureMatrix = "features.csv";
inline constexpr const char* kBaseModel = "base_model.json";
inline constexpr const char* kPredictions = "predictions.jsonl";
inline constexpr const char* kErrorset = "errorset.json";
inline constexpr const char* kSplit = "split.json";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kRankingsCsv = "rankings.csv";
inline constexpr const char* kRankingsJsonl = "rankings.jsonl";
inline constexpr const char* kUncertaintyCsv = "uncertainty_rankings.csv";
inline constexpr const char* kCandidates = "candidates.json";
inline constexpr const char* kEvaluation = "evaluation.json";
inline constexpr const char* kEvaluationMd = "evaluation.md";
inline constexpr const char* kReportMd = "report.md";
inline constexpr const char* kReportJson = "report.json";
}  // namespace artifact

}  // namespace aec::workflow
