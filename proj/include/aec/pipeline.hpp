#pragma once

// The error-characterization workflow: error dataset construction, balancing, error
// classifier training, label-blind ranking, P@K evaluation and explanations.

#include "aec/base_model.hpp"
#include "aec/corpus.hpp"
#include "aec/features.hpp"
#include "aec/forest.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace aec::pipeline {

using features::FeatureName;
using features::FeatureVector;

struct ErrorRecord {
    std::string instance_id;
    FeatureVector features;
    base::Prediction prediction;
    std::string gold_label;
    bool is_error = false;
};

struct ErrorDataset {
    std::vector<ErrorRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    std::size_t error_count() const;
    std::size_t correct_count() const { return size() - error_count(); }
};

/// One record per prediction; is_error = predicted label differs from gold. Throws
/// JoinError naming the first id missing from `gold` or `vectors`.
ErrorDataset build_error_dataset(std::span<const base::Prediction> preds, const corpus::Dataset& gold,
                                 const std::map<std::string, FeatureVector>& vectors);

/// Fraction of correct predictions. Throws DomainError when empty.
double base_accuracy(const ErrorDataset& eds);
double error_rate(const ErrorDataset& eds);

/// Downsamples the majority class uniformly without replacement to the minority size;
/// the result is sorted by id. Throws DegenerateError when a class is empty.
ErrorDataset balance_by_undersampling(const ErrorDataset& eds, std::uint64_t seed);

struct ErrorSplit {
    ErrorDataset train;
    ErrorDataset test;
};

ErrorSplit split_error_dataset(const ErrorDataset& eds, const corpus::SplitSpec& spec);

struct ErrorTrainConfig {
    features::FeatureConfig features;
    std::vector<forest::ForestParams> grid = forest::default_grid(0);
    std::size_t cv_folds = 5;
    std::uint64_t cv_seed = 0;
    unsigned threads = 1;
};

struct AECModel {
    features::FeatureSpace space;
    forest::ForestModel forest;
    forest::CVReport cv;

    void save(std::ostream& out) const;
    static AECModel load(std::istream& in);
};

/// Builds the feature space from the training vectors, selects forest parameters by
/// cross-validation and retrains on all of `train` with the chosen parameters.
AECModel train_error_classifier(const ErrorDataset& train, const ErrorTrainConfig& cfg);

/// An instance presented for ranking; it carries no label by construction.
struct UnlabeledInstance {
    std::string id;
    FeatureVector features;
};

struct ExplanationItem {
    FeatureName name;
    double value = 0.0;
    double importance = 0.0;
};

struct RankedSample {
    std::string instance_id;
    double error_prob = 0.0;
    std::size_t rank = 0;
    std::vector<ExplanationItem> explanation;
};

/// Features present in `v` with positive global importance, by importance descending
/// (ties by name), truncated to `m`.
std::vector<ExplanationItem> explain_sample(const FeatureVector& v,
                                            const std::map<FeatureName, double>& importances,
                                            std::size_t m);

/// Scores every instance, sorts by error probability descending (ties by id) and
/// attaches an explanation of up to `explain_top` features.
std::vector<RankedSample> rank_errors(const AECModel& model, std::span<const UnlabeledInstance> instances,
                                      std::size_t explain_top = 10);

using Truth = std::map<std::string, bool>;

/// N / K where N counts true errors among the first K ids. Throws RangeError for K
/// outside [1, |ranked|] and JoinError when an id lacks truth.
double precision_at_k(std::span<const std::string> ranked_ids, const Truth& truth, std::size_t k);
double precision_at_k(std::span<const RankedSample> ranked, const Truth& truth, std::size_t k);

inline constexpr std::string_view kUncertaintySampler = "uncertainty";
inline constexpr std::string_view kAecSampler = "aec";

struct EvaluationRow {
    std::size_t k = 0;
    std::map<std::string, double> precision;  // sampler name -> P@K
};

struct EvaluationTable {
    std::vector<EvaluationRow> rows;
};

/// One row per K. Throws ValidationError when the rankings cover different id sets and
/// RangeError when K values are not strictly increasing or exceed the ranking length.
EvaluationTable compare_samplers(std::span<const std::string> aec_ranked,
                                 std::span<const std::string> uncertainty_ranked, const Truth& truth,
                                 std::span<const std::size_t> ks);

std::string evaluation_to_json(const EvaluationTable& table);
EvaluationTable evaluation_from_json(const std::string& text);
std::string evaluation_to_markdown(const EvaluationTable& table);

/// First K ids of the ranking. Throws RangeError when K exceeds its length.
std::vector<std::string> select_informative(std::span<const RankedSample> ranked, std::size_t k);

void write_candidates(std::ostream& out, const std::vector<std::string>& ids);
std::vector<std::string> read_candidates(std::istream& in);

}  // namespace aec::pipeline
