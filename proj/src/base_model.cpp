#include "aec/base_model.hpp"

#include "aec/error.hpp"
#include "aec/rng.hpp"
#include "aec/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

namespace aec::base {

using nlohmann::json;

TermCounts featurize_text(std::string_view raw) {
    TermCounts counts;
    const std::u32string cps = text::decode_utf8(raw);
    std::size_t i = 0;
    while (i < cps.size()) {
        const char32_t c = cps[i];
        const bool handle = (c == U'@' || c == U'#') && i + 1 < cps.size() &&
                            (text::is_alnum(cps[i + 1]) || cps[i + 1] == U'_');
        if (!handle && !text::is_alnum(c)) {
            ++i;
            continue;
        }
        std::u32string tok;
        if (handle) {
            tok.push_back(c);
            ++i;
        }
        while (i < cps.size() && (text::is_alnum(cps[i]) || (handle && cps[i] == U'_'))) {
            tok.push_back(text::to_lower(cps[i]));
            ++i;
        }
        ++counts[text::encode_utf8(tok)];
    }
    return counts;
}

std::size_t argmax(std::span<const double> probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) {
            best = i;
        }
    }
    return best;
}

Prediction make_prediction(std::string id, std::vector<double> probs,
                           const std::vector<std::string>& schema) {
    if (probs.size() != schema.size() || probs.empty()) {
        throw ShapeError("prediction '" + id + "' has " + std::to_string(probs.size()) +
                         " probabilities for a schema of " + std::to_string(schema.size()));
    }
    Prediction p;
    p.predicted_label = schema[argmax(probs)];
    p.instance_id = std::move(id);
    p.probs = std::move(probs);
    return p;
}

BaseModel::BaseModel(std::vector<std::string> schema, std::vector<std::string> vocabulary)
    : schema_(std::move(schema)), vocab_(std::move(vocabulary)) {
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        column_.emplace(vocab_[i], i);
    }
    weights_.assign(schema_.size() * vocab_.size(), 0.0);
    bias_.assign(schema_.size(), 0.0);
}

std::ptrdiff_t BaseModel::column(const std::string& token) const {
    const auto it = column_.find(token);
    return it == column_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

namespace {

void softmax_inplace(std::vector<double>& scores) {
    const double mx = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double& s : scores) {
        s = std::exp(s - mx);
        total += s;
    }
    for (double& s : scores) {
        s /= total;
    }
}

using SparseRow = std::vector<std::pair<std::size_t, double>>;

SparseRow to_sparse(const BaseModel& model, const TermCounts& terms) {
    SparseRow row;
    for (const auto& [tok, n] : terms) {
        const auto col = model.column(tok);
        if (col >= 0) {
            row.emplace_back(static_cast<std::size_t>(col), static_cast<double>(n));
        }
    }
    return row;
}

std::vector<double> scores_of(const BaseModel& model, const SparseRow& row) {
    std::vector<double> scores = model.bias();
    for (std::size_t c = 0; c < model.num_classes(); ++c) {
        for (const auto& [col, v] : row) {
            scores[c] += model.weight(c, col) * v;
        }
    }
    return scores;
}

}  // namespace

std::vector<double> BaseModel::probabilities(const TermCounts& terms) const {
    std::vector<double> scores = scores_of(*this, to_sparse(*this, terms));
    softmax_inplace(scores);
    return scores;
}

void BaseModel::save(std::ostream& out) const {
    json doc;
    doc["schema"] = schema_;
    doc["vocabulary"] = vocab_;
    json rows = json::array();
    for (std::size_t c = 0; c < schema_.size(); ++c) {
        rows.push_back(std::vector<double>(weights_.begin() + static_cast<std::ptrdiff_t>(c * vocab_.size()),
                                           weights_.begin() + static_cast<std::ptrdiff_t>((c + 1) * vocab_.size())));
    }
    doc["weights"] = std::move(rows);
    doc["bias"] = bias_;
    doc["training_meta"] = {{"epochs", meta_.epochs},
                            {"learning_rate", meta_.learning_rate},
                            {"class_weights", meta_.class_weights},
                            {"seed", meta_.seed}};
    out << doc.dump() << '\n';
}

BaseModel BaseModel::load(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
        BaseModel model(doc.at("schema").get<std::vector<std::string>>(),
                        doc.at("vocabulary").get<std::vector<std::string>>());
        const auto& rows = doc.at("weights");
        if (rows.size() != model.num_classes()) {
            throw FormatError("base model weight rows do not match the schema");
        }
        for (std::size_t c = 0; c < rows.size(); ++c) {
            const auto row = rows[c].get<std::vector<double>>();
            if (row.size() != model.num_features()) {
                throw FormatError("base model weight row has the wrong width");
            }
            std::copy(row.begin(), row.end(),
                      model.weights_.begin() + static_cast<std::ptrdiff_t>(c * model.num_features()));
        }
        model.bias_ = doc.at("bias").get<std::vector<double>>();
        if (model.bias_.size() != model.num_classes()) {
            throw FormatError("base model bias does not match the schema");
        }
        const auto& meta = doc.at("training_meta");
        model.meta_.epochs = meta.at("epochs").get<int>();
        model.meta_.learning_rate = meta.at("learning_rate").get<double>();
        model.meta_.class_weights = meta.at("class_weights").get<std::vector<double>>();
        model.meta_.seed = meta.at("seed").get<std::uint64_t>();
        return model;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed base model: ") + e.what());
    }
}

std::vector<double> class_weights(const corpus::Dataset& train) {
    const auto counts = train.class_counts();
    const double n = static_cast<double>(train.size());
    const double k = static_cast<double>(counts.size());
    std::vector<double> w(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) {
            throw DegenerateError("class '" + train.schema()[c] + "' has no training instances");
        }
        w[c] = n / (k * static_cast<double>(counts[c]));
    }
    return w;
}

BaseModel train_base(const corpus::Dataset& train, const TrainConfig& cfg) {
    if (train.empty()) {
        throw DegenerateError("training set is empty");
    }
    if (train.schema().size() < 2) {
        throw DegenerateError("training requires at least two classes");
    }
    if (cfg.epochs < 0 || !(cfg.learning_rate > 0.0)) {
        throw DomainError("epochs must be non-negative and learning_rate positive");
    }
    const std::vector<double> weights = class_weights(train);

    std::vector<TermCounts> bags;
    bags.reserve(train.size());
    std::set<std::string> vocab;
    for (const auto& inst : train.instances()) {
        bags.push_back(featurize_text(inst.text));
        for (const auto& [tok, n] : bags.back()) {
            vocab.insert(tok);
        }
    }
    BaseModel model(train.schema(), {vocab.begin(), vocab.end()});
    model.meta() = {cfg.epochs, cfg.learning_rate, weights, cfg.seed};

    std::vector<SparseRow> rows;
    std::vector<std::size_t> labels;
    rows.reserve(bags.size());
    for (std::size_t i = 0; i < bags.size(); ++i) {
        rows.push_back(to_sparse(model, bags[i]));
        labels.push_back(train.class_index(train.instances()[i].gold_label));
    }

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(cfg.seed);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t i : order) {
            std::vector<double> p = scores_of(model, rows[i]);
            softmax_inplace(p);
            const double w = weights[labels[i]];
            for (std::size_t c = 0; c < model.num_classes(); ++c) {
                const double g = w * (p[c] - (c == labels[i] ? 1.0 : 0.0));
                for (const auto& [col, v] : rows[i]) {
                    model.weight(c, col) -= cfg.learning_rate * g * v;
                }
                model.bias()[c] -= cfg.learning_rate * g;
            }
        }
    }
    return model;
}

Prediction predict_base(const BaseModel& model, const corpus::Instance& instance) {
    return make_prediction(instance.id, model.probabilities(featurize_text(instance.text)),
                           model.schema());
}

std::vector<Prediction> import_predictions(std::istream& in, const std::vector<std::string>& schema,
                                           const ImportOptions& opts) {
    std::vector<Prediction> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) {
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object() || !obj.contains("id") || !obj.contains("probs") ||
            !obj["probs"].is_array()) {
            throw ParseError(lineno, "expected {\"id\": ..., \"probs\": [...]}");
        }
        std::string id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
        std::vector<double> probs;
        for (const auto& v : obj["probs"]) {
            if (!v.is_number()) {
                throw ParseError(lineno, "non-numeric probability for '" + id + "'");
            }
            probs.push_back(v.get<double>());
        }
        if (probs.size() != schema.size()) {
            throw ValidationError("line " + std::to_string(lineno) + ": prediction '" + id + "' has " +
                                  std::to_string(probs.size()) + " probabilities, schema has " +
                                  std::to_string(schema.size()));
        }
        double total = 0.0;
        for (double p : probs) {
            if (!std::isfinite(p) || p < 0.0) {
                throw ValidationError("line " + std::to_string(lineno) + ": prediction '" + id +
                                      "' has a negative or non-finite probability");
            }
            total += p;
        }
        if (std::abs(total - 1.0) > opts.tolerance) {
            if (!opts.renormalize || !(total > 0.0)) {
                throw ValidationError("line " + std::to_string(lineno) + ": probabilities of '" + id +
                                      "' sum to " + text::format_double(total));
            }
            for (double& p : probs) {
                p /= total;
            }
        }
        if (!seen.insert(id).second) {
            throw ValidationError("duplicate prediction id '" + id + "'");
        }
        out.push_back(make_prediction(std::move(id), std::move(probs), schema));
    }
    return out;
}

void export_predictions(std::ostream& out, std::span<const Prediction> preds) {
    for (const auto& p : preds) {
        json obj;
        obj["id"] = p.instance_id;
        obj["probs"] = p.probs;
        out << obj.dump() << '\n';
    }
}

double uncertainty_score(const Prediction& p) {
    return 1.0 - *std::max_element(p.probs.begin(), p.probs.end());
}

std::vector<std::string> rank_by_uncertainty(std::span<const Prediction> preds, std::size_t k) {
    if (k > preds.size()) {
        throw RangeError("K = " + std::to_string(k) + " exceeds the " + std::to_string(preds.size()) +
                         " available predictions");
    }
    std::vector<std::pair<double, const std::string*>> scored;
    scored.reserve(preds.size());
    for (const auto& p : preds) {
        scored.emplace_back(uncertainty_score(p), &p.instance_id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) {
            return a.first > b.first;
        }
        return *a.second < *b.second;
    });
    std::vector<std::string> ids;
    ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        ids.push_back(*scored[i].second);
    }
    return ids;
}

}  // namespace aec::base
