#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aec/error.hpp"
#include "aec/workflow.hpp"

#include <json.hpp>

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace aec::workflow;

namespace {

const fs::path kDemo = fs::path(AEC_FIXTURE_DIR).parent_path().parent_path() / "data" / "demo";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() / ("aec_wf_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

RunConfig demo_config(const fs::path& out, const char* file = "config.json") {
    auto cfg = load_config(kDemo / file);
    cfg.paths.output_dir = out;
    validate(cfg);
    return cfg;
}

int cli(const std::string& args) {
    const int rc = std::system((std::string(AEC_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kArtifacts[] = {artifact::kManifest,      artifact::kSchema,        artifact::kPreparedEval,
                            artifact::kPreparedBase,  artifact::kFeatures,      artifact::kFeatureMatrix,
                            artifact::kPredictions,   artifact::kErrorset,      artifact::kSplit,
                            artifact::kModel,         artifact::kRankingsCsv,   artifact::kRankingsJsonl,
                            artifact::kUncertaintyCsv, artifact::kCandidates,   artifact::kEvaluation,
                            artifact::kEvaluationMd,  artifact::kReportMd,      artifact::kReportJson};

}  // namespace

TEST_CASE("stage names") {
    CHECK(parse_stages("rank, prepare") == std::vector<Stage>{Stage::Prepare, Stage::Rank});
    CHECK(parse_stages("report").size() == 1);
    CHECK_THROWS_AS(parse_stages("prepare,fly"), aec::ConfigError);
    CHECK_THROWS_AS(parse_stages(","), aec::ConfigError);
}

TEST_CASE("config parsing and validation") {
    const auto cfg = load_config(kDemo / "config.json");
    CHECK(cfg.paths.lexicon == (kDemo / "lexicon.txt").lexically_normal());
    CHECK(cfg.seeds.forest == 19);
    CHECK(cfg.grid.size() == 4);
    CHECK(cfg.grid[0].seed == 19);
    CHECK(cfg.ks == std::vector<std::size_t>{10, 20, 30, 40, 50});

    CHECK_THROWS_AS(parse_config("[1,2]", "."), aec::ConfigError);
    CHECK_THROWS_AS(parse_config("{", "."), aec::ConfigError);
    CHECK_THROWS_AS(parse_config("{\"paths\":{}}", "."), aec::ConfigError);

    auto bad = cfg;
    bad.ks = {20, 10};
    CHECK_THROWS_AS(validate(bad), aec::ConfigError);
    bad = cfg;
    bad.paths.lexicon = kDemo / "nope.txt";
    try {
        validate(bad);
        FAIL("accepted");
    } catch (const aec::ConfigError& e) {
        CHECK(std::string(e.what()).find("nope.txt") != std::string::npos);
    }
    CHECK(cfg.canonical_json() == load_config(kDemo / "config.json").canonical_json());
}

TEST_CASE("full run, rerun, report regeneration") {
    Scratch s;
    const auto cfg = demo_config(s.dir / "out");
    const auto first = run(cfg, all_stages());
    CHECK(first.size() == 7);
    for (const auto& o : first) {
        CHECK_FALSE(o.skipped);
    }
    for (const char* name : kArtifacts) {
        CHECK_MESSAGE(fs::exists(s.dir / "out" / name), name);
    }
    std::map<std::string, std::string> before;
    for (const char* name : kArtifacts) {
        before[name] = slurp(s.dir / "out" / name);
    }
    for (const auto& o : run(cfg, all_stages())) {
        CHECK(o.skipped);
    }
    for (const char* name : kArtifacts) {
        CHECK(slurp(s.dir / "out" / name) == before[name]);
    }

    const std::string md = before[artifact::kReportMd];
    for (auto k : {"| 10 |", "| 20 |", "| 30 |", "| 40 |", "| 50 |"}) {
        CHECK(md.find(k) != std::string::npos);
    }
    CHECK(md.find("| Top K | Uncertainty P@K | AEC P@K |") != std::string::npos);
    emit_report(s.dir / "out");
    CHECK(slurp(s.dir / "out" / artifact::kReportMd) == md);

    // Changing a stage parameter reruns that stage and those downstream of changed files.
    auto changed = cfg;
    changed.explain_top = 3;
    const auto third = run(changed, all_stages());
    CHECK(third[0].skipped);
    CHECK(third[3].skipped);
    CHECK_FALSE(third[4].skipped);
}

TEST_CASE("ranking artifacts hold only test ids") {
    Scratch s;
    const auto cfg = demo_config(s.dir / "out");
    run(cfg, all_stages());
    const auto split = nlohmann::json::parse(slurp(s.dir / "out" / artifact::kSplit));
    const auto test = split["test"].get<std::vector<std::string>>();
    const auto cands = nlohmann::json::parse(slurp(s.dir / "out" / artifact::kCandidates));
    CHECK(cands["count"] == 50);
    std::istringstream csv(slurp(s.dir / "out" / artifact::kRankingsCsv));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "rank,id,error_prob");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
    }
    CHECK(rows == test.size());
}

TEST_CASE("built-in base model path") {
    Scratch s;
    const auto cfg = demo_config(s.dir / "out", "config_builtin.json");
    run(cfg, all_stages());
    CHECK(fs::exists(s.dir / "out" / artifact::kBaseModel));
    CHECK(fs::exists(s.dir / "out" / artifact::kReportMd));
}

TEST_CASE("stages refuse missing inputs") {
    Scratch s;
    const auto cfg = demo_config(s.dir / "out");
    CHECK_THROWS_AS(run(cfg, {Stage::Train}), aec::ConfigError);
    CHECK_THROWS_AS(emit_report(s.dir / "out"), aec::ConfigError);
}

TEST_CASE("empty ranking is reported, not fatal") {
    Scratch s;
    const auto cfg = demo_config(s.dir / "out");
    run(cfg, all_stages());
    std::ofstream(s.dir / "out" / artifact::kRankingsJsonl, std::ios::trunc).close();
    emit_report(s.dir / "out");
    CHECK(slurp(s.dir / "out" / artifact::kReportMd).find("no samples ranked") != std::string::npos);
}

TEST_CASE("cli exit codes") {
    Scratch s;
    fs::copy(kDemo, s.dir / "demo");
    const std::string cfg = (s.dir / "demo" / "config.json").string();
    CHECK(cli("run --config " + cfg + " --stages prepare,base,errorset") == 0);
    CHECK(cli("run --config " + cfg) == 0);
    CHECK(cli("report --dir " + (s.dir / "demo" / "out").string()) == 0);
    CHECK(cli("report --dir " + (s.dir / "nowhere").string()) == 2);
    CHECK(cli("run --config " + cfg + " --stages bogus") == 2);
    CHECK(cli("run --config " + (s.dir / "missing.json").string()) == 2);

    auto doc = nlohmann::json::parse(slurp(cfg));
    doc["paths"]["lexicon"] = "no_such_lexicon.txt";
    std::ofstream(s.dir / "demo" / "bad.json") << doc.dump();
    const std::string log = (s.dir / "err.txt").string();
    const int rc = std::system((std::string(AEC_CLI) + " run --config " + (s.dir / "demo" / "bad.json").string() +
                                " >/dev/null 2>" + log)
                                   .c_str());
    CHECK(WEXITSTATUS(rc) == 2);
    CHECK(slurp(log).find("no_such_lexicon.txt") != std::string::npos);

    // A stage failure (K beyond the ranking) exits 1.
    doc = nlohmann::json::parse(slurp(cfg));
    doc["evaluation"]["ks"] = {10, 5000};
    doc["paths"]["output_dir"] = "out_bigk";
    std::ofstream(s.dir / "demo" / "bigk.json") << doc.dump();
    CHECK(cli("run --config " + (s.dir / "demo" / "bigk.json").string()) == 1);
}
