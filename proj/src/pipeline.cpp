#include "aec/pipeline.hpp"

#include "aec/error.hpp"
#include "aec/rng.hpp"
#include "aec/serialization.hpp"
#include "aec/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace aec::pipeline {

using nlohmann::json;

std::size_t ErrorDataset::error_count() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const ErrorRecord& r) { return r.is_error; }));
}

ErrorDataset build_error_dataset(std::span<const base::Prediction> preds, const corpus::Dataset& gold,
                                 const std::map<std::string, FeatureVector>& vectors) {
    ErrorDataset eds;
    std::set<std::string> seen;
    for (const auto& p : preds) {
        const corpus::Instance* inst = gold.find(p.instance_id);
        if (!inst) {
            throw JoinError("prediction '" + p.instance_id + "' has no gold instance");
        }
        const auto v = vectors.find(p.instance_id);
        if (v == vectors.end()) {
            throw JoinError("prediction '" + p.instance_id + "' has no feature vector");
        }
        if (!seen.insert(p.instance_id).second) {
            throw ValidationError("duplicate prediction id '" + p.instance_id + "'");
        }
        ErrorRecord rec;
        rec.instance_id = p.instance_id;
        rec.features = v->second;
        rec.prediction = p;
        rec.gold_label = inst->gold_label;
        rec.is_error = p.predicted_label != inst->gold_label;
        eds.records.push_back(std::move(rec));
    }
    return eds;
}

double base_accuracy(const ErrorDataset& eds) {
    if (eds.records.empty()) {
        throw DomainError("accuracy of an empty error dataset");
    }
    return static_cast<double>(eds.correct_count()) / static_cast<double>(eds.size());
}

double error_rate(const ErrorDataset& eds) {
    if (eds.records.empty()) {
        throw DomainError("error rate of an empty error dataset");
    }
    return static_cast<double>(eds.error_count()) / static_cast<double>(eds.size());
}

namespace {

void sort_by_id(std::vector<ErrorRecord>& records) {
    std::sort(records.begin(), records.end(),
              [](const ErrorRecord& a, const ErrorRecord& b) { return a.instance_id < b.instance_id; });
}

}  // namespace

ErrorDataset balance_by_undersampling(const ErrorDataset& eds, std::uint64_t seed) {
    std::vector<ErrorRecord> correct;
    std::vector<ErrorRecord> wrong;
    for (const auto& r : eds.records) {
        (r.is_error ? wrong : correct).push_back(r);
    }
    if (correct.empty() || wrong.empty()) {
        throw DegenerateError("balancing needs both correct and incorrect predictions");
    }
    // Sort first so the retained set depends on the seed only, not on input order.
    sort_by_id(correct);
    sort_by_id(wrong);
    auto& majority = correct.size() >= wrong.size() ? correct : wrong;
    const std::size_t target = std::min(correct.size(), wrong.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < target; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(majority.size() - i));
        std::swap(majority[i], majority[j]);
    }
    majority.resize(target);

    ErrorDataset out;
    out.records = std::move(correct);
    out.records.insert(out.records.end(), std::make_move_iterator(wrong.begin()),
                       std::make_move_iterator(wrong.end()));
    sort_by_id(out.records);
    return out;
}

ErrorSplit split_error_dataset(const ErrorDataset& eds, const corpus::SplitSpec& spec) {
    const auto idx = corpus::split_indices(eds.size(), spec);
    ErrorSplit out;
    for (std::size_t i : idx.train) {
        out.train.records.push_back(eds.records[i]);
    }
    for (std::size_t i : idx.test) {
        out.test.records.push_back(eds.records[i]);
    }
    return out;
}

void AECModel::save(std::ostream& out) const {
    json doc;
    doc["forest"] = forest::forest_to_json(forest);
    doc["cv"] = forest::cv_report_to_json(cv);
    out << doc.dump() << '\n';
}

AECModel AECModel::load(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
        AECModel model;
        model.forest = forest::forest_from_json(doc.at("forest"));
        model.space = model.forest.space();
        model.cv = forest::cv_report_from_json(doc.at("cv"));
        return model;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed error-classifier model: ") + e.what());
    }
}

AECModel train_error_classifier(const ErrorDataset& train, const ErrorTrainConfig& cfg) {
    std::vector<std::string> ids;
    std::vector<FeatureVector> vectors;
    std::vector<std::uint8_t> labels;
    for (const auto& r : train.records) {
        ids.push_back(r.instance_id);
        vectors.push_back(r.features);
        labels.push_back(r.is_error ? 1 : 0);
    }
    if (train.error_count() == 0 || train.correct_count() == 0) {
        throw DegenerateError("error classifier training needs both correct and error labels");
    }
    AECModel model;
    model.space = features::build_feature_space(vectors, cfg.features.min_count);
    if (model.space.names.empty()) {
        throw ConfigError("feature space is empty; lower min_count or check the annotations");
    }
    const auto matrix = features::build_matrix(ids, vectors, model.space);
    model.cv = forest::cross_validate(matrix, labels, cfg.cv_folds, cfg.grid, cfg.cv_seed, cfg.threads);
    model.forest = forest::train_forest(matrix, labels, model.cv.chosen_params, cfg.threads);
    return model;
}

std::vector<ExplanationItem> explain_sample(const FeatureVector& v,
                                            const std::map<FeatureName, double>& importances,
                                            std::size_t m) {
    if (m < 1) {
        throw RangeError("explanation size must be at least 1");
    }
    std::vector<ExplanationItem> items;
    for (const auto& [name, value] : v) {
        if (!(value > 0.0)) {
            continue;
        }
        const auto it = importances.find(name);
        if (it == importances.end() || !(it->second > 0.0)) {
            continue;
        }
        items.push_back({name, value, it->second});
    }
    std::sort(items.begin(), items.end(), [](const ExplanationItem& a, const ExplanationItem& b) {
        if (a.importance != b.importance) {
            return a.importance > b.importance;
        }
        return a.name < b.name;
    });
    if (items.size() > m) {
        items.erase(items.begin() + static_cast<std::ptrdiff_t>(m), items.end());
    }
    return items;
}

std::vector<RankedSample> rank_errors(const AECModel& model, std::span<const UnlabeledInstance> instances,
                                      std::size_t explain_top) {
    const auto importances = forest::feature_importances(model.forest);
    std::vector<RankedSample> ranked;
    ranked.reserve(instances.size());
    for (const auto& inst : instances) {
        RankedSample s;
        s.instance_id = inst.id;
        s.error_prob = model.forest.predict_error_prob(features::vectorize(inst.features, model.forest.space()));
        s.explanation = explain_sample(inst.features, importances, std::max<std::size_t>(1, explain_top));
        ranked.push_back(std::move(s));
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedSample& a, const RankedSample& b) {
        if (a.error_prob != b.error_prob) {
            return a.error_prob > b.error_prob;
        }
        return a.instance_id < b.instance_id;
    });
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        ranked[i].rank = i + 1;
    }
    return ranked;
}

double precision_at_k(std::span<const std::string> ranked_ids, const Truth& truth, std::size_t k) {
    if (k < 1 || k > ranked_ids.size()) {
        throw RangeError("K = " + std::to_string(k) + " outside [1, " + std::to_string(ranked_ids.size()) +
                         "]");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto it = truth.find(ranked_ids[i]);
        if (it == truth.end()) {
            throw JoinError("no ground truth for '" + ranked_ids[i] + "'");
        }
        hits += it->second ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double precision_at_k(std::span<const RankedSample> ranked, const Truth& truth, std::size_t k) {
    std::vector<std::string> ids;
    ids.reserve(ranked.size());
    for (const auto& s : ranked) {
        ids.push_back(s.instance_id);
    }
    return precision_at_k(ids, truth, k);
}

EvaluationTable compare_samplers(std::span<const std::string> aec_ranked,
                                 std::span<const std::string> uncertainty_ranked, const Truth& truth,
                                 std::span<const std::size_t> ks) {
    const std::set<std::string> a(aec_ranked.begin(), aec_ranked.end());
    const std::set<std::string> b(uncertainty_ranked.begin(), uncertainty_ranked.end());
    if (a != b || a.size() != aec_ranked.size() || b.size() != uncertainty_ranked.size()) {
        throw ValidationError("the two rankings do not cover the same instances");
    }
    EvaluationTable table;
    std::size_t previous = 0;
    for (std::size_t k : ks) {
        if (k <= previous) {
            throw RangeError("K values must be positive and strictly increasing");
        }
        previous = k;
        EvaluationRow row;
        row.k = k;
        row.precision[std::string(kUncertaintySampler)] = precision_at_k(uncertainty_ranked, truth, k);
        row.precision[std::string(kAecSampler)] = precision_at_k(aec_ranked, truth, k);
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string evaluation_to_json(const EvaluationTable& table) {
    json rows = json::array();
    for (const auto& r : table.rows) {
        json p = json::object();
        for (const auto& [name, v] : r.precision) {
            p[name] = v;
        }
        rows.push_back({{"k", r.k}, {"precision_at_k", p}});
    }
    json doc;
    doc["metric"] = "precision_at_k";
    doc["rows"] = std::move(rows);
    return doc.dump(2) + "\n";
}

EvaluationTable evaluation_from_json(const std::string& text) {
    try {
        const json doc = json::parse(text);
        EvaluationTable table;
        for (const auto& r : doc.at("rows")) {
            EvaluationRow row;
            row.k = r.at("k").get<std::size_t>();
            row.precision = r.at("precision_at_k").get<std::map<std::string, double>>();
            table.rows.push_back(std::move(row));
        }
        return table;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed evaluation table: ") + e.what());
    }
}

std::string evaluation_to_markdown(const EvaluationTable& table) {
    std::ostringstream out;
    out << "| Top K | Uncertainty P@K | AEC P@K |\n";
    out << "|---:|---:|---:|\n";
    for (const auto& r : table.rows) {
        out << "| " << r.k << " | " << text::format_fixed(r.precision.at(std::string(kUncertaintySampler)), 3)
            << " | " << text::format_fixed(r.precision.at(std::string(kAecSampler)), 3) << " |\n";
    }
    return out.str();
}

std::vector<std::string> select_informative(std::span<const RankedSample> ranked, std::size_t k) {
    if (k > ranked.size()) {
        throw RangeError("K = " + std::to_string(k) + " exceeds the " + std::to_string(ranked.size()) +
                         " ranked samples");
    }
    std::vector<std::string> ids;
    ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        ids.push_back(ranked[i].instance_id);
    }
    return ids;
}

void write_candidates(std::ostream& out, const std::vector<std::string>& ids) {
    json doc;
    doc["count"] = ids.size();
    doc["ids"] = ids;
    out << doc.dump(2) << '\n';
}

std::vector<std::string> read_candidates(std::istream& in) {
    try {
        return json::parse(in).at("ids").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed candidate manifest: ") + e.what());
    }
}

}  // namespace aec::pipeline
