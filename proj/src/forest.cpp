#include "aec/forest.hpp"

#include "aec/error.hpp"
#include "aec/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <istream>
#include <numeric>
#include <ostream>
#include <thread>

namespace aec::forest {

using nlohmann::json;

double gini_impurity(std::uint64_t n0, std::uint64_t n1) {
    const std::uint64_t n = n0 + n1;
    if (n == 0) {
        throw DomainError("gini impurity of an empty node");
    }
    const double p0 = static_cast<double>(n0) / static_cast<double>(n);
    const double p1 = static_cast<double>(n1) / static_cast<double>(n);
    return 1.0 - p0 * p0 - p1 * p1;
}

namespace {

using i128 = __int128;

// Sum over children of (c0^2 + c1^2) / n_child, held as an exact fraction. Maximizing it
// minimizes the weighted child impurity.
struct Purity {
    i128 num = 0;
    i128 den = 1;

    bool operator>(const Purity& o) const { return num * o.den > o.num * den; }
};

Purity split_purity(std::uint64_t l0, std::uint64_t l1, std::uint64_t r0, std::uint64_t r1) {
    const i128 nl = static_cast<i128>(l0) + l1;
    const i128 nr = static_cast<i128>(r0) + r1;
    const i128 sl = static_cast<i128>(l0) * l0 + static_cast<i128>(l1) * l1;
    const i128 sr = static_cast<i128>(r0) * r0 + static_cast<i128>(r1) * r1;
    return {sl * nr + sr * nl, nl * nr};
}

struct ValueGroup {
    double value;
    std::uint64_t c0;
    std::uint64_t c1;
};

double midpoint(double a, double b) {
    double t = a + (b - a) / 2.0;
    if (!(t < b)) {
        t = a;
    }
    return t;
}

}  // namespace

std::optional<Split> best_split(const Matrix& x, Labels labels, std::span<const std::size_t> rows,
                                std::span<const std::size_t> feature_subset,
                                std::size_t min_samples_leaf) {
    std::uint64_t n0 = 0;
    std::uint64_t n1 = 0;
    for (std::size_t r : rows) {
        (labels[r] ? n1 : n0) += 1;
    }
    const std::uint64_t n = n0 + n1;
    if (n < 2) {
        return std::nullopt;
    }
    const Purity parent{static_cast<i128>(n0) * n0 + static_cast<i128>(n1) * n1, static_cast<i128>(n)};

    std::vector<std::size_t> subset(feature_subset.begin(), feature_subset.end());
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());

    std::optional<Split> best;
    Purity best_purity = parent;
    std::vector<std::pair<double, std::uint8_t>> nonzero;
    std::vector<ValueGroup> groups;
    for (std::size_t f : subset) {
        if (f >= x.cols()) {
            throw ShapeError("feature index " + std::to_string(f) + " out of range");
        }
        // Feature columns are mostly zero; only nonzero entries need sorting.
        nonzero.clear();
        std::uint64_t z0 = 0;
        std::uint64_t z1 = 0;
        for (std::size_t r : rows) {
            const double v = x(r, f);
            if (v == 0.0) {
                (labels[r] ? z1 : z0) += 1;
            } else {
                nonzero.emplace_back(v, labels[r]);
            }
        }
        std::sort(nonzero.begin(), nonzero.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        groups.clear();
        bool zero_placed = z0 + z1 == 0;
        for (const auto& [v, y] : nonzero) {
            if (!zero_placed && v > 0.0) {
                groups.push_back({0.0, z0, z1});
                zero_placed = true;
            }
            if (groups.empty() || groups.back().value != v) {
                groups.push_back({v, 0, 0});
            }
            (y ? groups.back().c1 : groups.back().c0) += 1;
        }
        if (!zero_placed) {
            groups.push_back({0.0, z0, z1});
        }
        if (groups.size() < 2) {
            continue;
        }
        std::uint64_t l0 = 0;
        std::uint64_t l1 = 0;
        for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
            l0 += groups[g].c0;
            l1 += groups[g].c1;
            const std::uint64_t nl = l0 + l1;
            if (nl < min_samples_leaf || n - nl < min_samples_leaf) {
                continue;
            }
            const Purity p = split_purity(l0, l1, n0 - l0, n1 - l1);
            if (p > best_purity) {
                best_purity = p;
                const long double child = static_cast<long double>(p.num) / static_cast<long double>(p.den);
                const long double par = static_cast<long double>(parent.num) / static_cast<long double>(parent.den);
                best = Split{f, midpoint(groups[g].value, groups[g + 1].value),
                             static_cast<double>((child - par) / static_cast<long double>(n))};
            }
        }
    }
    return best;
}

const Node& Tree::leaf_for(std::span<const double> row) const {
    const Node* node = &nodes.at(0);
    while (!node->is_leaf()) {
        node = &nodes[static_cast<std::size_t>(row[static_cast<std::size_t>(node->feature)] <= node->threshold
                                                   ? node->left
                                                   : node->right)];
    }
    return *node;
}

std::size_t Tree::depth() const {
    if (nodes.empty()) {
        return 0;
    }
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes[i].is_leaf()) {
            level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

std::size_t Tree::split_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return !n.is_leaf(); }));
}

std::size_t ForestParams::resolved_features_per_split(std::size_t d) const {
    if (d == 0) {
        return 0;
    }
    std::size_t k = features_per_split.value_or(
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d)))));
    return std::clamp<std::size_t>(k, 1, d);
}

namespace {

class TreeGrower {
public:
    TreeGrower(const Matrix& x, Labels labels, const ForestParams& params, Rng& rng)
        : x_(x), labels_(labels), params_(params), rng_(rng),
          fps_(params.resolved_features_per_split(x.cols())) {
        all_features_.resize(x.cols());
        std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
    }

    Tree grow(std::span<const std::size_t> rows) {
        tree_.nodes.clear();
        build(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
        return std::move(tree_);
    }

private:
    std::vector<std::size_t> draw_features() {
        if (fps_ >= all_features_.size()) {
            return all_features_;
        }
        std::vector<std::size_t> pool = all_features_;
        for (std::size_t i = 0; i < fps_; ++i) {
            const auto j = i + static_cast<std::size_t>(rng_.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(fps_);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    int build(std::vector<std::size_t> rows, std::size_t depth) {
        Node node;
        for (std::size_t r : rows) {
            (labels_[r] ? node.n_error : node.n_correct) += 1;
        }
        const int index = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back(node);

        const bool pure = node.n_correct == 0 || node.n_error == 0;
        const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
        const bool too_small = rows.size() < 2 * std::max<std::size_t>(1, params_.min_samples_leaf);
        if (pure || depth_reached || too_small || x_.cols() == 0) {
            return index;
        }
        const auto subset = draw_features();
        const auto split = best_split(x_, labels_, rows, subset, params_.min_samples_leaf);
        if (!split) {
            return index;
        }
        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (std::size_t r : rows) {
            (x_(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int left = build(std::move(left_rows), depth + 1);
        const int right = build(std::move(right_rows), depth + 1);
        Node& self = tree_.nodes[static_cast<std::size_t>(index)];
        self.feature = static_cast<int>(split->feature);
        self.threshold = split->threshold;
        self.gain = split->gain;
        self.left = left;
        self.right = right;
        return index;
    }

    const Matrix& x_;
    Labels labels_;
    const ForestParams& params_;
    Rng& rng_;
    std::size_t fps_;
    std::vector<std::size_t> all_features_;
    Tree tree_;
};

// Trains params.n_trees trees on `rows` (a subset of x). Tree t uses its own stream
// derive_seed(seed, t), so the result does not depend on `threads`.
std::vector<Tree> fit_trees(const Matrix& x, Labels labels, std::span<const std::size_t> rows,
                            const ForestParams& params, unsigned threads) {
    if (params.n_trees < 1) {
        throw DomainError("n_trees must be at least 1");
    }
    if (params.features_per_split && (*params.features_per_split < 1 ||
                                      (x.cols() > 0 && *params.features_per_split > x.cols()))) {
        throw DomainError("features_per_split must lie in [1, " + std::to_string(x.cols()) + "]");
    }
    std::vector<Tree> trees(params.n_trees);
    auto fit_one = [&](std::size_t t) {
        Rng rng(derive_seed(params.seed, t));
        std::vector<std::size_t> sample;
        if (params.bootstrap) {
            sample.resize(rows.size());
            for (auto& s : sample) {
                s = rows[static_cast<std::size_t>(rng.below(rows.size()))];
            }
        } else {
            sample.assign(rows.begin(), rows.end());
        }
        TreeGrower grower(x, labels, params, rng);
        trees[t] = grower.grow(sample);
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, params.n_trees));
    if (workers == 1) {
        for (std::size_t t = 0; t < params.n_trees; ++t) {
            fit_one(t);
        }
        return trees;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t t = w; t < params.n_trees; t += workers) {
                    fit_one(t);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return trees;
}

void require_both_classes(Labels labels, std::span<const std::size_t> rows) {
    bool has0 = false;
    bool has1 = false;
    for (std::size_t r : rows) {
        (labels[r] ? has1 : has0) = true;
    }
    if (!has0 || !has1) {
        throw DegenerateError("error classifier training needs both correct and error labels");
    }
}

std::vector<std::size_t> iota_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

}  // namespace

Tree grow_tree(const Matrix& x, Labels labels, std::span<const std::size_t> rows,
               const ForestParams& params, Rng& rng) {
    if (rows.empty()) {
        throw DegenerateError("cannot grow a tree on zero rows");
    }
    TreeGrower grower(x, labels, params, rng);
    return grower.grow(rows);
}

std::vector<double> tree_importances(const Tree& tree, std::size_t n_features) {
    std::vector<double> imp(n_features, 0.0);
    if (tree.nodes.empty()) {
        return imp;
    }
    const double root_n = static_cast<double>(tree.nodes.front().total());
    for (const Node& node : tree.nodes) {
        if (!node.is_leaf()) {
            imp.at(static_cast<std::size_t>(node.feature)) +=
                static_cast<double>(node.total()) / root_n * node.gain;
        }
    }
    return imp;
}

ForestModel::ForestModel(features::FeatureSpace space, ForestParams params, std::vector<Tree> trees)
    : space_(std::move(space)), params_(std::move(params)), trees_(std::move(trees)) {
    const std::size_t d = space_.names.size();
    importances_.assign(d, 0.0);
    for (const Tree& t : trees_) {
        const auto imp = tree_importances(t, d);
        for (std::size_t f = 0; f < d; ++f) {
            importances_[f] += imp[f];
        }
    }
    double total = 0.0;
    for (double& v : importances_) {
        v /= static_cast<double>(std::max<std::size_t>(1, trees_.size()));
        total += v;
    }
    if (total > 0.0) {
        for (double& v : importances_) {
            v /= total;
        }
    }
}

double ForestModel::predict_error_prob(std::span<const double> row) const {
    if (row.size() != space_.names.size()) {
        throw ShapeError("row has " + std::to_string(row.size()) + " values, model expects " +
                         std::to_string(space_.names.size()));
    }
    if (trees_.empty()) {
        throw DomainError("forest has no trees");
    }
    double sum = 0.0;
    for (const Tree& t : trees_) {
        sum += t.error_probability(row);
    }
    return sum / static_cast<double>(trees_.size());
}

namespace {

json node_to_json(const Tree& tree, std::size_t i) {
    const Node& n = tree.nodes[i];
    json j;
    j["counts"] = {n.n_correct, n.n_error};
    if (!n.is_leaf()) {
        j["feature"] = n.feature;
        j["threshold"] = n.threshold;
        j["gain"] = n.gain;
        j["left"] = node_to_json(tree, static_cast<std::size_t>(n.left));
        j["right"] = node_to_json(tree, static_cast<std::size_t>(n.right));
    }
    return j;
}

int node_from_json(const json& j, Tree& tree, std::size_t n_features) {
    Node node;
    node.n_correct = j.at("counts").at(0).get<std::uint64_t>();
    node.n_error = j.at("counts").at(1).get<std::uint64_t>();
    if (node.total() == 0) {
        throw FormatError("tree node with zero samples");
    }
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    if (j.contains("feature")) {
        const int feature = j.at("feature").get<int>();
        if (feature < 0 || static_cast<std::size_t>(feature) >= n_features) {
            throw FormatError("tree split on unknown feature " + std::to_string(feature));
        }
        const int left = node_from_json(j.at("left"), tree, n_features);
        const int right = node_from_json(j.at("right"), tree, n_features);
        Node& self = tree.nodes[static_cast<std::size_t>(index)];
        self.feature = feature;
        self.threshold = j.at("threshold").get<double>();
        self.gain = j.at("gain").get<double>();
        self.left = left;
        self.right = right;
    }
    return index;
}

}  // namespace

nlohmann::json forest_to_json(const ForestModel& model) {
    json doc;
    doc["params"] = params_to_json(model.params());
    json names = json::array();
    for (const auto& n : model.space().names) {
        names.push_back(n.rendered());
    }
    doc["features"] = std::move(names);
    doc["min_count"] = model.space().min_count;
    doc["importances"] = model.importances();
    json trees = json::array();
    for (const Tree& t : model.trees()) {
        trees.push_back(node_to_json(t, 0));
    }
    doc["trees"] = std::move(trees);
    return doc;
}

ForestModel forest_from_json(const nlohmann::json& doc) {
    try {
        features::FeatureSpace space;
        for (const auto& n : doc.at("features")) {
            space.names.push_back(features::FeatureName::parse(n.get<std::string>()));
        }
        space.min_count = doc.value("min_count", std::size_t{1});
        std::vector<Tree> trees;
        for (const auto& tj : doc.at("trees")) {
            Tree t;
            node_from_json(tj, t, space.names.size());
            trees.push_back(std::move(t));
        }
        return ForestModel(std::move(space), params_from_json(doc.at("params")), std::move(trees));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed forest model: ") + e.what());
    }
}

void ForestModel::save(std::ostream& out) const { out << forest_to_json(*this).dump() << '\n'; }

ForestModel ForestModel::load(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed forest model: ") + e.what());
    }
    return forest_from_json(doc);
}

ForestModel train_forest(const features::FeatureMatrix& matrix, Labels labels,
                         const ForestParams& params, unsigned threads) {
    if (labels.size() != matrix.values.rows()) {
        throw ShapeError("label count does not match matrix rows");
    }
    if (matrix.values.rows() < 2) {
        throw DegenerateError("forest training needs at least two rows");
    }
    const auto rows = iota_rows(matrix.values.rows());
    require_both_classes(labels, rows);
    return ForestModel(matrix.space, params, fit_trees(matrix.values, labels, rows, params, threads));
}

std::map<features::FeatureName, double> feature_importances(const ForestModel& model) {
    std::map<features::FeatureName, double> out;
    for (std::size_t f = 0; f < model.space().names.size(); ++f) {
        out.emplace(model.space().names[f], model.importances()[f]);
    }
    return out;
}

std::vector<std::size_t> stratified_folds(Labels labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) {
        throw RangeError("k must be at least 2");
    }
    if (k > labels.size()) {
        throw RangeError("k = " + std::to_string(k) + " exceeds the " + std::to_string(labels.size()) +
                         " rows");
    }
    std::vector<std::size_t> fold(labels.size(), 0);
    Rng rng(seed);
    std::size_t next = 0;
    for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if ((labels[i] != 0) == (cls != 0)) {
                members.push_back(i);
            }
        }
        rng.shuffle(std::span<std::size_t>(members));
        for (std::size_t i : members) {
            fold[i] = next;
            next = (next + 1) % k;
        }
    }
    return fold;
}

namespace {

FoldMetrics score_fold(const Matrix& x, Labels labels, std::span<const std::size_t> rows,
                       const std::vector<Tree>& trees) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t correct = 0;
    for (std::size_t r : rows) {
        double sum = 0.0;
        for (const Tree& t : trees) {
            sum += t.error_probability(x.row(r));
        }
        const bool predicted_error = sum / static_cast<double>(trees.size()) > 0.5;
        const bool actual_error = labels[r] != 0;
        correct += predicted_error == actual_error ? 1 : 0;
        tp += predicted_error && actual_error ? 1 : 0;
        fp += predicted_error && !actual_error ? 1 : 0;
        fn += !predicted_error && actual_error ? 1 : 0;
    }
    FoldMetrics m;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
    m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return m;
}

}  // namespace

CVReport cross_validate(const features::FeatureMatrix& matrix, Labels labels, std::size_t k,
                        std::span<const ForestParams> grid, std::uint64_t seed, unsigned threads) {
    const Matrix& x = matrix.values;
    if (labels.size() != x.rows()) {
        throw ShapeError("label count does not match matrix rows");
    }
    if (grid.empty()) {
        throw DomainError("parameter grid is empty");
    }
    const auto all = iota_rows(x.rows());
    require_both_classes(labels, all);
    const auto fold = stratified_folds(labels, k, seed);

    std::vector<std::vector<std::size_t>> train_rows(k);
    std::vector<std::vector<std::size_t>> test_rows(k);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t f = 0; f < k; ++f) {
            (fold[i] == f ? test_rows[f] : train_rows[f]).push_back(i);
        }
    }

    CVReport report;
    report.k = k;
    double best_mean = -1.0;
    for (const ForestParams& params : grid) {
        std::vector<FoldMetrics> metrics;
        double mean_acc = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            const auto trees = fit_trees(x, labels, train_rows[f], params, threads);
            metrics.push_back(score_fold(x, labels, test_rows[f], trees));
            mean_acc += metrics.back().accuracy;
        }
        mean_acc /= static_cast<double>(k);
        report.grid_mean_accuracy.push_back(mean_acc);
        if (mean_acc > best_mean) {
            best_mean = mean_acc;
            report.chosen_params = params;
            report.fold_metrics = std::move(metrics);
        }
    }

    auto summarize = [&](double FoldMetrics::*field, double& mean_out, double& sd_out) {
        double sum = 0.0;
        for (const auto& m : report.fold_metrics) {
            sum += m.*field;
        }
        const double mean = sum / static_cast<double>(k);
        double var = 0.0;
        for (const auto& m : report.fold_metrics) {
            var += (m.*field - mean) * (m.*field - mean);
        }
        mean_out = mean;
        sd_out = std::sqrt(var / static_cast<double>(k));
    };
    summarize(&FoldMetrics::accuracy, report.mean.accuracy, report.stddev.accuracy);
    summarize(&FoldMetrics::precision, report.mean.precision, report.stddev.precision);
    summarize(&FoldMetrics::recall, report.mean.recall, report.stddev.recall);
    return report;
}

std::vector<ForestParams> default_grid(std::uint64_t seed) {
    std::vector<ForestParams> grid;
    for (std::optional<std::size_t> depth : {std::optional<std::size_t>{}, std::optional<std::size_t>{16}}) {
        for (std::size_t leaf : {std::size_t{1}, std::size_t{5}}) {
            ForestParams p;
            p.n_trees = 100;
            p.max_depth = depth;
            p.min_samples_leaf = leaf;
            p.seed = seed;
            grid.push_back(p);
        }
    }
    return grid;
}

nlohmann::json params_to_json(const ForestParams& p) {
    json j;
    j["n_trees"] = p.n_trees;
    j["max_depth"] = p.max_depth ? json(*p.max_depth) : json(nullptr);
    j["min_samples_leaf"] = p.min_samples_leaf;
    j["features_per_split"] = p.features_per_split ? json(*p.features_per_split) : json(nullptr);
    j["bootstrap"] = p.bootstrap;
    j["seed"] = p.seed;
    return j;
}

ForestParams params_from_json(const nlohmann::json& j, const ForestParams& defaults) {
    if (!j.is_object()) {
        throw ConfigError("forest parameters must be a JSON object");
    }
    ForestParams p = defaults;
    try {
        if (j.contains("n_trees")) {
            p.n_trees = j.at("n_trees").get<std::size_t>();
        }
        if (j.contains("max_depth")) {
            p.max_depth = j.at("max_depth").is_null() ? std::nullopt
                                                      : std::optional(j.at("max_depth").get<std::size_t>());
        }
        if (j.contains("min_samples_leaf")) {
            p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
        }
        if (j.contains("features_per_split")) {
            p.features_per_split = j.at("features_per_split").is_null()
                                       ? std::nullopt
                                       : std::optional(j.at("features_per_split").get<std::size_t>());
        }
        if (j.contains("bootstrap")) {
            p.bootstrap = j.at("bootstrap").get<bool>();
        }
        if (j.contains("seed")) {
            p.seed = j.at("seed").get<std::uint64_t>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid forest parameters: ") + e.what());
    }
    if (p.n_trees < 1 || p.min_samples_leaf < 1) {
        throw ConfigError("n_trees and min_samples_leaf must be at least 1");
    }
    return p;
}

nlohmann::json cv_report_to_json(const CVReport& r) {
    auto metrics = [](const FoldMetrics& m) {
        return json{{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}};
    };
    json folds = json::array();
    for (const auto& m : r.fold_metrics) {
        folds.push_back(metrics(m));
    }
    return json{{"k", r.k},
                {"fold_metrics", folds},
                {"mean", metrics(r.mean)},
                {"stddev", metrics(r.stddev)},
                {"chosen_params", params_to_json(r.chosen_params)},
                {"grid_mean_accuracy", r.grid_mean_accuracy}};
}

CVReport cv_report_from_json(const nlohmann::json& j) {
    auto metrics = [](const json& m) {
        return FoldMetrics{m.at("accuracy").get<double>(), m.at("precision").get<double>(),
                           m.at("recall").get<double>()};
    };
    CVReport r;
    r.k = j.at("k").get<std::size_t>();
    for (const auto& m : j.at("fold_metrics")) {
        r.fold_metrics.push_back(metrics(m));
    }
    r.mean = metrics(j.at("mean"));
    r.stddev = metrics(j.at("stddev"));
    r.chosen_params = params_from_json(j.at("chosen_params"));
    r.grid_mean_accuracy = j.at("grid_mean_accuracy").get<std::vector<double>>();
    return r;
}

}  // namespace aec::forest
