#pragma once

// The black-box base classifier seam: a built-in class-weighted multinomial linear
// classifier, an importer for external predictions, and least-confidence scoring.

#include "aec/corpus.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace aec::base {

using TermCounts = std::map<std::string, int>;

/// Lowercased runs of letters/digits; '@' or '#' directly before a run is kept as a
/// handle prefix (underscores are allowed inside handles).
TermCounts featurize_text(std::string_view text);

struct Prediction {
    std::string instance_id;
    std::vector<double> probs;
    std::string predicted_label;

    bool operator==(const Prediction&) const = default;
};

/// Index of the largest probability; ties go to the lowest index.
std::size_t argmax(std::span<const double> probs);

/// Builds a prediction, setting predicted_label by the argmax rule.
Prediction make_prediction(std::string id, std::vector<double> probs,
                           const std::vector<std::string>& schema);

struct TrainConfig {
    int epochs = 30;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
};

struct TrainingMeta {
    int epochs = 0;
    double learning_rate = 0.0;
    std::vector<double> class_weights;
    std::uint64_t seed = 0;

    bool operator==(const TrainingMeta&) const = default;
};

class BaseModel {
public:
    BaseModel() = default;
    /// Zero-initialised model over `vocabulary` (sorted, unique).
    BaseModel(std::vector<std::string> schema, std::vector<std::string> vocabulary);

    const std::vector<std::string>& schema() const noexcept { return schema_; }
    const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
    std::size_t num_classes() const noexcept { return schema_.size(); }
    std::size_t num_features() const noexcept { return vocab_.size(); }

    /// Column of `token`, or -1 when out of vocabulary.
    std::ptrdiff_t column(const std::string& token) const;

    double weight(std::size_t cls, std::size_t col) const { return weights_[cls * vocab_.size() + col]; }
    double& weight(std::size_t cls, std::size_t col) { return weights_[cls * vocab_.size() + col]; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    std::vector<double>& bias() noexcept { return bias_; }
    const std::vector<double>& bias() const noexcept { return bias_; }

    TrainingMeta& meta() noexcept { return meta_; }
    const TrainingMeta& meta() const noexcept { return meta_; }

    /// Class probabilities for a bag of terms; unseen terms are ignored.
    std::vector<double> probabilities(const TermCounts& terms) const;

    void save(std::ostream& out) const;
    static BaseModel load(std::istream& in);

    bool operator==(const BaseModel&) const = default;

private:
    std::vector<std::string> schema_;
    std::vector<std::string> vocab_;
    std::map<std::string, std::size_t> column_;
    std::vector<double> weights_;  // classes x features, row-major
    std::vector<double> bias_;
    TrainingMeta meta_;
};

/// Inverse-frequency weights n / (|schema| * count(c)).
std::vector<double> class_weights(const corpus::Dataset& train);

/// Stochastic gradient descent on class-weighted cross-entropy; the visiting order of
/// each epoch is a seeded shuffle. Throws DegenerateError when a schema class is absent.
BaseModel train_base(const corpus::Dataset& train, const TrainConfig& cfg);

Prediction predict_base(const BaseModel& model, const corpus::Instance& instance);

struct ImportOptions {
    bool renormalize = false;
    double tolerance = 1e-6;
};

/// Reads {"id": ..., "probs": [...]} lines aligned with `schema`.
std::vector<Prediction> import_predictions(std::istream& in, const std::vector<std::string>& schema,
                                           const ImportOptions& opts = {});
void export_predictions(std::ostream& out, std::span<const Prediction> preds);

/// 1 - max(probs).
double uncertainty_score(const Prediction& p);

/// Ids ordered by uncertainty descending, ties by id ascending; the first k.
std::vector<std::string> rank_by_uncertainty(std::span<const Prediction> preds, std::size_t k);

}  // namespace aec::base
