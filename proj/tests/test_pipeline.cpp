#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aec/error.hpp"
#include "aec/pipeline.hpp"

#include <set>
#include <sstream>

using namespace aec::pipeline;
using aec::features::FeatureName;
using aec::features::Namespace;

namespace {

const std::vector<std::string> kSchema{"neg", "neu", "pos"};

aec::base::Prediction pred(const std::string& id, int cls) {
    std::vector<double> p(3, 0.1);
    p[cls] = 0.8;
    return aec::base::make_prediction(id, p, kSchema);
}

ErrorDataset synthetic_errors(std::size_t n_correct, std::size_t n_error) {
    ErrorDataset eds;
    for (std::size_t i = 0; i < n_correct + n_error; ++i) {
        ErrorRecord r;
        r.instance_id = "r" + std::to_string(1000 + i);
        r.is_error = i >= n_correct;
        eds.records.push_back(r);
    }
    return eds;
}

std::set<std::string> ids_of(const ErrorDataset& e) {
    std::set<std::string> out;
    for (const auto& r : e.records) {
        out.insert(r.instance_id);
    }
    return out;
}

FeatureName conv(const std::string& k) { return {Namespace::Conv, k}; }

}  // namespace

TEST_CASE("error dataset counts planted mismatches") {
    aec::corpus::Dataset gold(kSchema, {{"a", "t", "neg", {}},
                                        {"b", "t", "neu", {}},
                                        {"c", "t", "pos", {}},
                                        {"d", "t", "neg", {}},
                                        {"e", "t", "pos", {}}});
    std::map<std::string, FeatureVector> vectors;
    for (auto id : {"a", "b", "c", "d", "e"}) {
        vectors[id] = {{conv("x"), 0.5}};
    }
    const std::vector<aec::base::Prediction> preds{pred("a", 0), pred("b", 2), pred("c", 2), pred("d", 1),
                                                   pred("e", 2)};
    const auto eds = build_error_dataset(preds, gold, vectors);
    CHECK(eds.error_count() == 2);
    CHECK(eds.correct_count() == 3);
    CHECK(base_accuracy(eds) + error_rate(eds) == 1.0);

    const std::vector<aec::base::Prediction> right{pred("a", 0), pred("b", 1)};
    for (const auto& r : build_error_dataset(right, gold, vectors).records) {
        CHECK_FALSE(r.is_error);
    }
    CHECK(base_accuracy(build_error_dataset(right, gold, vectors)) == 1.0);

    const std::vector<aec::base::Prediction> stray{pred("zz", 0)};
    CHECK_THROWS_AS(build_error_dataset(stray, gold, vectors), aec::JoinError);
    vectors.erase("a");
    CHECK_THROWS_AS(build_error_dataset(preds, gold, vectors), aec::JoinError);
}

TEST_CASE("published-count arithmetic") {
    const auto eds = synthetic_errors(7009, 4655);
    CHECK(std::round(base_accuracy(eds) * 10000) / 10000 == 0.6009);
    const auto b = balance_by_undersampling(eds, 5);
    CHECK(b.size() == 9310);
    CHECK(b.error_count() == 4655);
    const auto s = split_error_dataset(b, {0.8, 5});
    CHECK(s.train.size() == 7448);
    CHECK(s.test.size() == 1862);
}

TEST_CASE("balancing") {
    const auto eds = synthetic_errors(30, 10);
    const auto a = balance_by_undersampling(eds, 9);
    CHECK(a.correct_count() == 10);
    CHECK(a.error_count() == 10);
    CHECK(ids_of(a) == ids_of(balance_by_undersampling(eds, 9)));
    CHECK(ids_of(a) != ids_of(balance_by_undersampling(eds, 10)));

    auto reversed = eds;
    std::reverse(reversed.records.begin(), reversed.records.end());
    CHECK(ids_of(balance_by_undersampling(reversed, 9)) == ids_of(a));

    const auto even = synthetic_errors(7, 7);
    CHECK(ids_of(balance_by_undersampling(even, 1)) == ids_of(even));
    CHECK_THROWS_AS(balance_by_undersampling(synthetic_errors(5, 0), 1), aec::DegenerateError);
}

TEST_CASE("error classifier on a planted feature") {
    ErrorDataset train;
    aec::Rng rng(31);
    for (int i = 0; i < 160; ++i) {
        ErrorRecord r;
        r.instance_id = "p" + std::to_string(i);
        r.is_error = i % 2 == 0;
        if (r.is_error || rng.bernoulli(0.05)) {
            r.features[conv("apology")] = 0.2;
        }
        r.features[FeatureName(Namespace::Dep, "ROOT-NN-NN")] = 0.2;
        if (rng.bernoulli(0.5)) {
            r.features[FeatureName(Namespace::Emo, "joy")] = 0.2;
        }
        train.records.push_back(r);
    }
    ErrorTrainConfig cfg;
    aec::forest::ForestParams p;
    p.n_trees = 20;
    cfg.grid = {p};
    cfg.cv_folds = 4;
    const auto model = train_error_classifier(train, cfg);
    const auto imp = aec::forest::feature_importances(model.forest);
    const auto top = std::max_element(imp.begin(), imp.end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; });
    CHECK(top->first == conv("apology"));

    std::ostringstream a;
    std::ostringstream b;
    model.save(a);
    train_error_classifier(train, cfg).save(b);
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    CHECK(AECModel::load(in).forest == model.forest);

    ErrorDataset single;
    single.records = {train.records[0], train.records[2]};
    CHECK_THROWS_AS(train_error_classifier(single, cfg), aec::DegenerateError);

    std::vector<UnlabeledInstance> inst{{"hit", {{conv("apology"), 0.2}}}, {"miss", {{conv("other"), 1.0}}}};
    const auto ranked = rank_errors(model, inst, 3);
    CHECK(ranked[0].instance_id == "hit");
    CHECK(ranked[0].rank == 1);
    CHECK(ranked[0].explanation.at(0).name == conv("apology"));
    CHECK(ranked[1].explanation.empty());
}

TEST_CASE("ranking order and ties") {
    aec::features::FeatureSpace space{{conv("a")}, 1};
    // One split on conv:a: <= 0.5 -> 1 error of 5, > 0.5 -> 9 of 10.
    aec::forest::Tree t;
    aec::forest::Node root;
    root.feature = 0;
    root.threshold = 0.5;
    root.left = 1;
    root.right = 2;
    root.n_correct = 5;
    root.n_error = 10;
    root.gain = 0.1;
    aec::forest::Node l;
    l.n_correct = 4;
    l.n_error = 1;
    aec::forest::Node r;
    r.n_correct = 1;
    r.n_error = 9;
    t.nodes = {root, l, r};
    AECModel model;
    model.space = space;
    model.forest = aec::forest::ForestModel(space, {}, {t});
    std::vector<UnlabeledInstance> inst{{"z-low", {}}, {"b-high", {{conv("a"), 0.9}}}, {"a-low", {}}};
    const auto ranked = rank_errors(model, inst, 5);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].instance_id == "b-high");
    CHECK(ranked[0].error_prob == 0.9);
    CHECK(ranked[1].instance_id == "a-low");
    CHECK(ranked[2].instance_id == "z-low");
    CHECK(ranked[2].error_prob == 0.2);
}

TEST_CASE("explanations") {
    const std::map<FeatureName, double> imp{{conv("a"), 0.5}, {conv("b"), 0.3}, {conv("c"), 0.0},
                                            {FeatureName(Namespace::Ent, "TIME"), 0.2}};
    const FeatureVector v{{conv("b"), 0.1}, {conv("c"), 0.4}, {FeatureName(Namespace::Ent, "TIME"), 0.2}};
    const auto e = explain_sample(v, imp, 10);
    REQUIRE(e.size() == 2);
    CHECK(e[0].name == conv("b"));
    CHECK(e[1].name == FeatureName(Namespace::Ent, "TIME"));
    CHECK(explain_sample(v, imp, 1).size() == 1);
    CHECK(explain_sample({{conv("zzz"), 1.0}}, imp, 3).empty());
    CHECK_THROWS_AS(explain_sample(v, imp, 0), aec::RangeError);
}

TEST_CASE("precision at k") {
    std::vector<std::string> ids;
    Truth truth;
    for (int i = 0; i < 10; ++i) {
        ids.push_back("x" + std::to_string(i));
        truth[ids.back()] = i < 8;
    }
    CHECK(precision_at_k(ids, truth, 10) == 0.8);
    std::reverse(ids.begin(), ids.end());
    CHECK(precision_at_k(ids, truth, 2) == 0.0);
    CHECK_THROWS_AS(precision_at_k(ids, truth, 0), aec::RangeError);
    CHECK_THROWS_AS(precision_at_k(ids, truth, 11), aec::RangeError);
    truth.erase("x9");
    CHECK_THROWS_AS(precision_at_k(ids, truth, 1), aec::JoinError);
}

TEST_CASE("sampler comparison table") {
    std::vector<std::string> ids;
    Truth truth;
    for (int i = 0; i < 60; ++i) {
        ids.push_back("y" + std::to_string(i));
        truth[ids.back()] = i % 3 == 0;
    }
    const std::vector<std::size_t> ks{10, 20, 30, 40, 50};
    const auto table = compare_samplers(ids, ids, truth, ks);
    CHECK(table.rows.size() == 5);
    for (const auto& r : table.rows) {
        CHECK(r.precision.at("aec") == r.precision.at("uncertainty"));
    }
    const auto md = evaluation_to_markdown(table);
    CHECK(md.rfind("| Top K | Uncertainty P@K | AEC P@K |\n", 0) == 0);
    CHECK(md.find("| 10 | 0.400 | 0.400 |") != std::string::npos);
    const auto back = evaluation_from_json(evaluation_to_json(table));
    CHECK(evaluation_to_json(back) == evaluation_to_json(table));

    std::vector<std::string> other(ids.begin(), ids.end() - 1);
    other.push_back("stranger");
    truth["stranger"] = false;
    CHECK_THROWS_AS(compare_samplers(ids, other, truth, ks), aec::ValidationError);
    const std::vector<std::size_t> bad{20, 10};
    CHECK_THROWS_AS(compare_samplers(ids, ids, truth, bad), aec::RangeError);
}

TEST_CASE("informative samples and the candidate manifest") {
    std::vector<RankedSample> ranked;
    for (int i = 0; i < 5; ++i) {
        RankedSample s;
        s.instance_id = "c" + std::to_string(i);
        s.rank = i + 1;
        ranked.push_back(s);
    }
    CHECK(select_informative(ranked, 3) == std::vector<std::string>{"c0", "c1", "c2"});
    CHECK(select_informative(ranked, 5).size() == 5);
    CHECK_THROWS_AS(select_informative(ranked, 6), aec::RangeError);
    std::stringstream io;
    write_candidates(io, select_informative(ranked, 4));
    CHECK(read_candidates(io) == select_informative(ranked, 4));
}
