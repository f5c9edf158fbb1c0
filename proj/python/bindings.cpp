#include "aec/annotations.hpp"
#include "aec/base_model.hpp"
#include "aec/error.hpp"
#include "aec/features.hpp"
#include "aec/forest.hpp"
#include "aec/pipeline.hpp"
#include "aec/synthetic.hpp"
#include "aec/workflow.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;

namespace {

py::dict token_dict(const aec::annotations::Token& t) {
    py::dict d;
    d["index"] = t.index;
    d["form"] = t.form;
    d["lemma"] = t.lemma;
    d["upos"] = t.upos;
    d["xpos"] = t.xpos ? py::object(py::str(*t.xpos)) : py::object(py::none());
    d["head"] = t.head;
    d["deprel"] = t.deprel;
    d["entity"] = t.entity ? py::object(py::str(*t.entity)) : py::object(py::none());
    return d;
}

std::map<std::string, double> render(const aec::features::FeatureVector& v) {
    std::map<std::string, double> out;
    for (const auto& [name, value] : v) {
        out[name.rendered()] = value;
    }
    return out;
}

std::vector<std::string> run_stages(const std::string& config, const std::string& stages,
                                    const std::optional<std::string>& output_dir) {
    auto cfg = aec::workflow::load_config(config);
    if (output_dir) {
        cfg.paths.output_dir = *output_dir;
    }
    aec::workflow::validate(cfg);
    const auto selected = stages.empty() ? aec::workflow::all_stages() : aec::workflow::parse_stages(stages);
    std::vector<std::string> out;
    {
        py::gil_scoped_release release;
        for (const auto& o : aec::workflow::run(cfg, selected)) {
            out.push_back(std::string(aec::workflow::stage_name(o.stage)) + (o.skipped ? ":skipped" : ":done"));
        }
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_aec, m) {
    m.doc() = "Feature-based error characterization for text classifiers";

    auto base = py::register_exception<aec::Error>(m, "AecError");
    py::register_exception<aec::ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<aec::ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<aec::FormatError>(m, "FormatError", base.ptr());

    m.def("run", &run_stages, py::arg("config"), py::arg("stages") = "", py::arg("output_dir") = py::none(),
          "Run workflow stages from a JSON config; returns 'stage:done' / 'stage:skipped' entries.");
    m.def(
        "report", [](const std::string& dir) { aec::workflow::emit_report(dir); }, py::arg("dir"),
        "Render report.md and report.json from an artifact directory.");
    m.def(
        "synth",
        [](const std::string& out, std::size_t n, std::uint64_t seed) {
            aec::synthetic::SyntheticConfig sc;
            sc.n_instances = n;
            sc.seed = seed;
            aec::synthetic::write_fixture(aec::synthetic::generate(sc), out);
        },
        py::arg("out"), py::arg("n") = 2000, py::arg("seed") = 7, "Write a synthetic fixture with planted errors.");

    m.def(
        "parse_conllu",
        [](const std::string& text, bool strict) {
            py::list out;
            for (const auto& s : aec::annotations::parse_conllu(text, {strict})) {
                py::dict d;
                d["id"] = s.instance_id;
                py::list toks;
                for (const auto& t : s.tokens) {
                    toks.append(token_dict(t));
                }
                d["tokens"] = toks;
                out.append(d);
            }
            return out;
        },
        py::arg("text"), py::arg("strict") = true);

    m.def(
        "extract_features",
        [](const std::string& conllu, const std::string& lexicon, bool binary_conv) {
            const auto sentences = aec::annotations::parse_conllu(conllu);
            std::istringstream lex_in(lexicon);
            const auto lex = aec::annotations::load_emotion_lexicon(lex_in);
            aec::features::FeatureConfig cfg;
            cfg.binary_conv = binary_conv;
            std::vector<std::pair<std::string, std::map<std::string, double>>> out;
            for (const auto& s : sentences) {
                out.emplace_back(s.instance_id,
                                 render(aec::features::extract_all(s, lex, aec::annotations::default_markers(), cfg)));
            }
            return out;
        },
        py::arg("conllu"), py::arg("lexicon") = "", py::arg("binary_conv") = false,
        "Length-normalized features per sentence, keyed by rendered feature name.");

    m.def("gini_impurity", &aec::forest::gini_impurity, py::arg("n0"), py::arg("n1"));
    m.def(
        "precision_at_k",
        [](const std::vector<std::string>& ranked, const std::map<std::string, bool>& truth, std::size_t k) {
            return aec::pipeline::precision_at_k(ranked, truth, k);
        },
        py::arg("ranked_ids"), py::arg("truth"), py::arg("k"));
    m.def(
        "uncertainty_score",
        [](const std::vector<double>& probs) {
            aec::base::Prediction p;
            p.probs = probs;
            return aec::base::uncertainty_score(p);
        },
        py::arg("probs"));
}
