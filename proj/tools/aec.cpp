// aec: error characterization workflow driver.
//
//   aec run --config cfg.json [--stages prepare,base,...] [--renormalize] [--binary-conv]
//   aec report --dir <artifacts>
//   aec synth --out <dir> [--n 2000] [--seed 7]
//
// Exit codes: 0 ok, 1 a stage failed, 2 bad configuration or input validation.

#include "aec/error.hpp"
#include "aec/synthetic.hpp"
#include "aec/workflow.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

namespace {

int run_command(const std::string& config_path, const std::string& stages, bool renormalize, bool binary_conv) {
    using namespace aec::workflow;
    RunConfig cfg;
    std::vector<Stage> selected;
    try {
        cfg = load_config(config_path);
        if (renormalize) {
            cfg.renormalize = true;
        }
        if (binary_conv) {
            cfg.features.binary_conv = true;
        }
        validate(cfg);
        selected = stages.empty() ? all_stages() : parse_stages(stages);
    } catch (const aec::Error& e) {
        std::cerr << "aec: configuration error: " << e.what() << '\n';
        return 2;
    }

    try {
        const auto t0 = std::chrono::steady_clock::now();
        for (const auto& outcome : run(cfg, selected)) {
            std::cout << stage_name(outcome.stage) << ": " << (outcome.skipped ? "up to date" : "done") << '\n';
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "artifacts in " << cfg.paths.output_dir.string() << " (" << secs << " s)\n";
    } catch (const aec::ConfigError& e) {
        std::cerr << "aec: " << e.what() << '\n';
        return 2;
    } catch (const aec::Error& e) {
        std::cerr << "aec: stage failed: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "aec: stage failed: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int report_command(const std::string& dir) {
    try {
        aec::workflow::emit_report(dir);
        std::cout << "wrote " << (std::filesystem::path(dir) / aec::workflow::artifact::kReportMd).string() << '\n';
    } catch (const aec::ConfigError& e) {
        std::cerr << "aec: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "aec: report failed: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int synth_command(const std::string& out, std::size_t n, std::uint64_t seed) {
    try {
        aec::synthetic::SyntheticConfig sc;
        sc.n_instances = n;
        sc.seed = seed;
        aec::synthetic::write_fixture(aec::synthetic::generate(sc), out);
        std::cout << "wrote synthetic fixture to " << out << '\n';
    } catch (const std::exception& e) {
        std::cerr << "aec: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature-based error characterization for text classifiers"};
    app.require_subcommand(1);

    std::string config_path;
    std::string stages;
    bool renormalize = false;
    bool binary_conv = false;
    auto* run = app.add_subcommand("run", "run workflow stages");
    run->add_option("--config", config_path, "JSON run configuration")->required();
    run->add_option("--stages", stages, "comma-separated subset of prepare,base,errorset,train,rank,evaluate,report");
    run->add_flag("--renormalize", renormalize, "rescale imported probabilities that do not sum to 1");
    run->add_flag("--binary-conv", binary_conv, "conversation features as presence indicators");

    std::string dir;
    auto* report = app.add_subcommand("report", "render report.md from existing artifacts");
    report->add_option("--dir", dir, "artifact directory")->required();

    std::string synth_out;
    std::size_t synth_n = 2000;
    std::uint64_t synth_seed = 7;
    auto* synth = app.add_subcommand("synth", "write a synthetic fixture with planted errors");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--n", synth_n, "instances in the evaluation dataset");
    synth->add_option("--seed", synth_seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (*run) {
        return run_command(config_path, stages, renormalize, binary_conv);
    }
    if (*report) {
        return report_command(dir);
    }
    return synth_command(synth_out, synth_n, synth_seed);
}
