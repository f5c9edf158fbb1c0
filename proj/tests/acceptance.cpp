// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is the number
// of failures.

#include "aec/annotations.hpp"
#include "aec/error.hpp"
#include "aec/features.hpp"
#include "aec/forest.hpp"
#include "aec/pipeline.hpp"
#include "aec/rng.hpp"
#include "aec/synthetic.hpp"
#include "aec/workflow.hpp"

#include "oracles/cart_oracle.hpp"

#include <json.hpp>

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef AEC_FIXTURE_DIR
#error "AEC_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2fs", secs);
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << " (" << buf << ") " << o.detail
              << std::endl;
    if (!o.pass) {
        ++failures;
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ---------------------------------------------------------------------------------

Outcome count_arithmetic() {
    const auto t0 = std::chrono::steady_clock::now();
    aec::pipeline::ErrorDataset eds;
    char id[16];
    for (int i = 0; i < 11664; ++i) {
        std::snprintf(id, sizeof id, "a%05d", i);
        aec::pipeline::ErrorRecord r;
        r.instance_id = id;
        r.is_error = i >= 7009;
        eds.records.push_back(std::move(r));
    }
    const double acc = aec::pipeline::base_accuracy(eds);
    const auto balanced = aec::pipeline::balance_by_undersampling(eds, 1);
    const auto split = aec::pipeline::split_error_dataset(balanced, {0.8, 1});
    const double secs = seconds_since(t0);

    std::ostringstream d;
    d << "accuracy=" << acc << " balanced=" << balanced.size() << " (" << balanced.error_count() << " err)"
      << " split=" << split.train.size() << "/" << split.test.size() << " t=" << secs << "s";
    const bool ok = std::fabs(acc - 0.6009) <= 0.00005 && balanced.size() == 9310 &&
                    balanced.error_count() == 4655 && split.train.size() == 7448 && split.test.size() == 1862 &&
                    secs < 1.0;
    return {ok, d.str()};
}

// ---- 2, 5, 7 ---------------------------------------------------------------------------

struct PlantedRun {
    fs::path dir;
    double seconds = 0.0;
};

PlantedRun run_planted(const fs::path& dir) {
    fs::remove_all(dir);
    const auto t0 = std::chrono::steady_clock::now();
    aec::synthetic::SyntheticConfig sc;
    sc.n_instances = 2000;
    sc.p_marker_given_error = 0.9;
    aec::synthetic::write_fixture(aec::synthetic::generate(sc), dir);
    auto cfg = aec::workflow::load_config(dir / "config.json");
    cfg.paths.output_dir = dir / "out";
    aec::workflow::validate(cfg);
    aec::workflow::run(cfg, aec::workflow::all_stages());
    return {dir / "out", seconds_since(t0)};
}

Outcome planted_signal(const PlantedRun& run) {
    const auto table = aec::pipeline::evaluation_from_json(slurp(run.dir / aec::workflow::artifact::kEvaluation));
    std::map<std::size_t, std::pair<double, double>> pk;  // k -> (aec, uncertainty)
    for (const auto& row : table.rows) {
        pk[row.k] = {row.precision.at("aec"), row.precision.at("uncertainty")};
    }
    bool ok = pk.count(50) && pk[50].first >= 0.85 && std::fabs(pk[50].second - 0.5) <= 0.10 && run.seconds < 60.0;
    std::ostringstream d;
    for (std::size_t k : {20, 30, 40, 50}) {
        if (!pk.count(k) || pk[k].first < pk[k].second) {
            ok = false;
        }
    }
    for (const auto& [k, v] : pk) {
        d << "K=" << k << " aec=" << v.first << " unc=" << v.second << "; ";
    }
    d << "t=" << run.seconds << "s";
    return {ok, d.str()};
}

void collect_used(const aec::forest::Tree& t, std::set<std::size_t>& used) {
    for (const auto& n : t.nodes) {
        if (!n.is_leaf()) {
            used.insert(static_cast<std::size_t>(n.feature));
        }
    }
}

Outcome importance_properties(const PlantedRun& run) {
    std::ostringstream d;
    bool ok = true;
    // Random small forests, including constant columns that can never be split on.
    aec::Rng rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 8 + rng.below(40);
        const std::size_t f = 2 + rng.below(8);
        aec::features::FeatureMatrix m;
        for (std::size_t j = 0; j < f; ++j) {
            m.space.names.emplace_back(aec::features::Namespace::Dep, "f" + std::to_string(j));
        }
        m.values = aec::features::Matrix(n, f);
        std::vector<std::uint8_t> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            m.row_ids.push_back("r" + std::to_string(i));
            for (std::size_t j = 0; j < f; ++j) {
                m.values(i, j) = (j % 3 == 2) ? 0.25 : (rng.bernoulli(0.5) ? rng.uniform() : 0.0);
            }
            y[i] = static_cast<std::uint8_t>(i % 2);
        }
        aec::forest::ForestParams p;
        p.n_trees = 5;
        p.seed = trial;
        p.max_depth = 1 + rng.below(4);
        const auto model = aec::forest::train_forest(m, y, p);
        std::set<std::size_t> used;
        for (const auto& t : model.trees()) {
            collect_used(t, used);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < f; ++j) {
            sum += model.importances()[j];
            if (!used.count(j) && model.importances()[j] != 0.0) {
                ok = false;
                d << "unused feature " << j << " has importance " << model.importances()[j] << "; ";
            }
        }
        if (!used.empty()) {
            ++checked;
            if (std::fabs(sum - 1.0) > 1e-9) {
                ok = false;
                d << "importances sum to " << sum << "; ";
            }
        }
    }
    d << checked << " random forests checked; ";

    std::istringstream in(slurp(run.dir / aec::workflow::artifact::kModel));
    const auto model = aec::pipeline::AECModel::load(in);
    std::vector<std::pair<double, std::string>> ranked;
    double sum = 0.0;
    for (std::size_t j = 0; j < model.space.names.size(); ++j) {
        ranked.emplace_back(model.forest.importances()[j], model.space.names[j].rendered());
        sum += model.forest.importances()[j];
    }
    std::sort(ranked.rbegin(), ranked.rend());
    std::size_t position = ranked.size();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].second == "conv:apology") {
            position = i;
        }
    }
    if (position >= 3 || std::fabs(sum - 1.0) > 1e-9) {
        ok = false;
    }
    d << "planted feature conv:apology at rank " << position + 1 << " of " << ranked.size();
    return {ok, d.str()};
}

Outcome determinism(const PlantedRun& a, const PlantedRun& b) {
    bool ok = true;
    std::ostringstream d;
    for (const char* name : {aec::workflow::artifact::kRankingsCsv, aec::workflow::artifact::kEvaluation,
                             aec::workflow::artifact::kReportMd}) {
        const std::string x = slurp(a.dir / name);
        const std::string y = slurp(b.dir / name);
        const bool same = !x.empty() && x == y;
        ok = ok && same;
        d << name << (same ? " identical" : " DIFFERS") << " (" << x.size() << " bytes); ";
    }
    return {ok, d.str()};
}

// ---- 3 ---------------------------------------------------------------------------------

Outcome forest_oracle() {
    // Every multiset of at most 12 rows over the 16 (3-bit features, label) row types.
    aec::features::Matrix x(16, 3);
    std::vector<std::uint8_t> labels(16);
    for (std::size_t t = 0; t < 16; ++t) {
        for (std::size_t j = 0; j < 3; ++j) {
            x(t, j) = (t >> j) & 1U;
        }
        labels[t] = static_cast<std::uint8_t>((t >> 3) & 1U);
    }
    aec::forest::ForestParams params;
    params.n_trees = 1;
    params.bootstrap = false;
    params.features_per_split = 3;

    std::size_t datasets = 0;
    std::size_t mismatches = 0;
    std::string first_bad;
    std::vector<std::size_t> rows;
    std::function<void(std::size_t)> rec = [&](std::size_t min_type) {
        if (!rows.empty()) {
            ++datasets;
            aec::Rng rng(datasets);
            const auto tree = aec::forest::grow_tree(x, labels, rows, params, rng);
            std::vector<oracle::Row> orows;
            for (std::size_t r : rows) {
                orows.push_back({{static_cast<int>(x(r, 0)), static_cast<int>(x(r, 1)), static_cast<int>(x(r, 2))},
                                 labels[r]});
            }
            const auto expect = oracle::build(orows, 3);
            bool same = tree.nodes.size() == expect.size();
            for (std::size_t i = 0; same && i < expect.size(); ++i) {
                const auto& a = tree.nodes[i];
                const auto& b = expect[i];
                same = a.feature == b.feature && a.left == b.left && a.right == b.right &&
                       a.n_correct == static_cast<std::uint64_t>(b.n0) &&
                       a.n_error == static_cast<std::uint64_t>(b.n1) && (a.is_leaf() || a.threshold == b.threshold);
            }
            if (!same) {
                if (mismatches++ == 0) {
                    for (std::size_t r : rows) {
                        first_bad += std::to_string(r) + " ";
                    }
                }
            }
        }
        if (rows.size() == 12) {
            return;
        }
        for (std::size_t t = min_type; t < 16; ++t) {
            rows.push_back(t);
            rec(t);
            rows.pop_back();
        }
    };
    rec(0);

    aec::Rng rng(99);
    std::size_t gini_bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t n0 = rng.below(1000);
        const std::uint64_t n1 = (n0 == 0 ? 1 : 0) + rng.below(1000);
        // Probability that two draws with replacement carry different labels.
        const double n = static_cast<double>(n0 + n1);
        const double brute = 2.0 * static_cast<double>(n0) * static_cast<double>(n1) / (n * n);
        if (std::fabs(aec::forest::gini_impurity(n0, n1) - brute) > 1e-12) {
            ++gini_bad;
        }
    }
    std::ostringstream d;
    d << datasets << " datasets, " << mismatches << " tree mismatches";
    if (mismatches) {
        d << " (first: rows " << first_bad << ")";
    }
    d << "; gini mismatches " << gini_bad << "/1000";
    return {mismatches == 0 && gini_bad == 0, d.str()};
}

// ---- 4 ---------------------------------------------------------------------------------

Outcome precision_oracle() {
    aec::Rng rng(4);
    std::size_t bad = 0;
    std::size_t checks = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::string> ids;
        aec::pipeline::Truth truth;
        const double rate = rng.uniform();
        for (int i = 0; i < 200; ++i) {
            ids.push_back("i" + std::to_string(i));
            truth[ids.back()] = rng.bernoulli(rate);
        }
        rng.shuffle(std::span<std::string>(ids));
        for (std::size_t k = 1; k <= 200; ++k) {
            int hits = 0;
            for (std::size_t i = 0; i < k; ++i) {
                if (truth.at(ids[i])) {
                    ++hits;
                }
            }
            ++checks;
            if (aec::pipeline::precision_at_k(ids, truth, k) != static_cast<double>(hits) / static_cast<double>(k)) {
                ++bad;
            }
        }
    }
    return {bad == 0, std::to_string(checks) + " (ranking, K) pairs, " + std::to_string(bad) + " mismatches"};
}

// ---- 6 ---------------------------------------------------------------------------------

std::string fuzz_conllu(std::size_t n_sentences, std::uint64_t seed) {
    static const std::vector<std::string> forms{
        "hello", "Thanks", "thank", "sorry", "you", "your", "no", "!", "?", "great", "bad", "terrible", "happy",
        "flight", "Boston", "@united", "@Delta_Air", "did", "can", "what", "where", "café", "naïve", "😀", "ÉCLAIR",
        "late", "angry", "delay", "crew", "#fail", "ty", "hey", "u", ".", ",", "42", "why"};
    static const std::vector<std::string> tags{"NN", "NNS", "NNP", "VB", "VBD", "JJ", "RB", "UH", "PRP", ".", "CD"};
    static const std::vector<std::string> rels{"nsubj", "dobj", "amod", "advmod", "punct", "intj", "compound"};
    static const std::vector<std::string> ents{"ORG", "GPE", "DATE", "PERSON"};
    aec::Rng rng(seed);
    std::ostringstream out;
    for (std::size_t s = 0; s < n_sentences; ++s) {
        const std::size_t n = 1 + rng.below(25);
        const std::size_t root = 1 + rng.below(n);
        out << "# sent_id = f" << s << "\n";
        for (std::size_t i = 1; i <= n; ++i) {
            std::size_t head = 0;
            if (i != root) {
                do {
                    head = 1 + rng.below(n);
                } while (head == i);
            }
            const std::string& form = forms[rng.below(forms.size())];
            const bool has_xpos = rng.bernoulli(0.8);
            std::string misc = "_";
            if (rng.bernoulli(0.2)) {
                misc = "NER=" + ents[rng.below(ents.size())];
            }
            out << i << '\t' << form << '\t' << form << '\t' << "X" << '\t'
                << (has_xpos ? tags[rng.below(tags.size())] : "_") << "\t_\t" << head << '\t'
                << (i == root ? "root" : rels[rng.below(rels.size())]) << "\t_\t" << misc << '\n';
        }
        out << '\n';
    }
    return out.str();
}

Outcome feature_invariants() {
    const auto sentences = aec::annotations::parse_conllu(fuzz_conllu(500, 6));
    std::istringstream lex_in(
        "great\tjoy\t1\nbad\tnegative\t1\nterrible\tanger\t1\nterrible\tfear\t1\nhappy\tjoy\t1\n"
        "sorry\tsadness\t1\ndelay\tanticipation\t1\ncafé\tjoy\t1\nlate\tnegative\t0\n");
    const auto lex = aec::annotations::load_emotion_lexicon(lex_in);
    const auto markers = aec::annotations::default_markers();

    std::size_t out_of_range = 0;
    std::size_t dep_mismatch = 0;
    std::size_t values = 0;
    const auto seq = aec::features::extract_corpus(sentences, lex, markers, {}, 1);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        for (const auto& [name, v] : seq[i]) {
            ++values;
            if (!(v > 0.0 && v <= 1.0)) {
                ++out_of_range;
            }
        }
        int dep_total = 0;
        for (const auto& [name, c] : aec::features::extract_dependency_features(sentences[i])) {
            dep_total += c;
        }
        if (dep_total != static_cast<int>(sentences[i].tokens.size())) {
            ++dep_mismatch;
        }
    }
    std::vector<std::string> ids;
    for (const auto& s : sentences) {
        ids.push_back(s.instance_id);
    }
    const auto par = aec::features::extract_corpus(sentences, lex, markers, {}, 8);
    std::ostringstream a;
    std::ostringstream b;
    aec::features::write_vectors_jsonl(a, ids, seq);
    aec::features::write_vectors_jsonl(b, ids, par);
    const bool identical = a.str() == b.str();

    std::ostringstream d;
    d << sentences.size() << " sentences, " << values << " values, " << out_of_range << " outside (0,1], "
      << dep_mismatch << " dependency-count mismatches, 8-thread output " << (identical ? "identical" : "DIFFERS");
    return {sentences.size() == 500 && out_of_range == 0 && dep_mismatch == 0 && identical, d.str()};
}

// ---- 8 ---------------------------------------------------------------------------------

template <typename E>
bool raises(const std::function<void()>& f, const std::string& needle, std::string& msg) {
    try {
        f();
    } catch (const E& e) {
        msg = e.what();
        return msg.find(needle) != std::string::npos;
    } catch (const std::exception& e) {
        msg = std::string("wrong error type: ") + e.what();
        return false;
    }
    msg = "accepted silently";
    return false;
}

Outcome parser_robustness() {
    const fs::path fixtures = AEC_FIXTURE_DIR;
    std::ostringstream d;
    bool ok = true;
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(fixtures)) {
        if (entry.path().extension() != ".conllu" || entry.path().filename().string().rfind("bad_", 0) == 0) {
            continue;
        }
        ++files;
        const auto first = aec::annotations::parse_conllu(slurp(entry.path()));
        const std::string s1 = aec::annotations::serialize_conllu(first);
        const auto second = aec::annotations::parse_conllu(s1);
        const std::string s2 = aec::annotations::serialize_conllu(second);
        if (first.empty() || s1 != s2 || second.size() != first.size()) {
            ok = false;
            d << entry.path().filename().string() << " not a fixed point; ";
        }
        for (std::size_t i = 0; i < std::min(first.size(), second.size()); ++i) {
            if (first[i].tokens != second[i].tokens || first[i].instance_id != second[i].instance_id) {
                ok = false;
                d << entry.path().filename().string() << " sentence " << i << " changed; ";
            }
        }
    }
    d << files << " fixtures round-trip; ";

    std::string msg;
    auto parse_file = [&](const char* name) {
        return [&fixtures, name] { aec::annotations::parse_conllu(slurp(fixtures / name)); };
    };
    struct BadCase {
        const char* what;
        bool passed;
    };
    std::vector<BadCase> cases;
    cases.push_back({"column count", raises<aec::ParseError>(parse_file("bad_columns.conllu"), "line 6:", msg)});
    d << "columns -> " << msg << "; ";
    cases.push_back(
        {"multiple roots", raises<aec::ValidationError>(parse_file("bad_two_roots.conllu"), "'twin' (line 4)", msg)});
    d << "roots -> " << msg << "; ";
    cases.push_back({"lexicon flag", raises<aec::ParseError>(
                                         [&] {
                                             std::istringstream in(slurp(fixtures / "bad_lexicon.txt"));
                                             aec::annotations::load_emotion_lexicon(in);
                                         },
                                         "line 3:", msg)});
    d << "lexicon -> " << msg;
    for (const auto& c : cases) {
        ok = ok && c.passed;
    }
    return {ok && files > 0, d.str()};
}

}  // namespace

int main() {
    const fs::path scratch = fs::temp_directory_path() / ("aec_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(scratch);

    report(1, "count arithmetic (accuracy, balanced total, split sizes)", count_arithmetic);

    PlantedRun first;
    PlantedRun second;
    std::string run_error;
    try {
        first = run_planted(scratch / "a");
        second = run_planted(scratch / "b");
    } catch (const std::exception& e) {
        run_error = e.what();
    }
    auto needs_runs = [&](const std::function<Outcome()>& f) {
        return [&, f]() -> Outcome {
            if (!run_error.empty()) {
                return {false, "pipeline run failed: " + run_error};
            }
            return f();
        };
    };

    report(2, "planted signal end to end (P@K vs uncertainty)", needs_runs([&] { return planted_signal(first); }));
    report(3, "forest matches exhaustive CART oracle; gini brute force", forest_oracle);
    report(4, "precision at K matches brute-force counting", precision_oracle);
    report(5, "importance sums, unused features, planted feature rank",
           needs_runs([&] { return importance_properties(first); }));
    report(6, "feature invariants on fuzzed CoNLL-U", feature_invariants);
    report(7, "determinism of two identical runs", needs_runs([&] { return determinism(first, second); }));
    report(8, "parser round trip and malformed-input errors", parser_robustness);

    std::error_code ec;
    fs::remove_all(scratch, ec);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures;
}
