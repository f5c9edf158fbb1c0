#include "aec/workflow.hpp"

#include "aec/annotations.hpp"
#include "aec/base_model.hpp"
#include "aec/error.hpp"
#include "aec/pipeline.hpp"
#include "aec/rng.hpp"
#include "aec/serialization.hpp"
#include "aec/text.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

namespace aec::workflow {

using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FormatError("cannot write '" + tmp.string() + "'");
        }
        out << content;
        if (!out) {
            throw FormatError("failed writing '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError("malformed " + what + ": " + e.what());
    }
}

std::string hex(const unsigned char* data, unsigned len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xF]);
    }
    return out;
}

}  // namespace

std::string text_digest(const std::string& content) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_Digest(content.data(), content.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    return hex(md, len);
}

std::string file_digest(const fs::path& path) { return text_digest(read_file(path)); }

// ---------------------------------------------------------------------------------------
// Configuration

namespace {

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::optional<fs::path> optional_path(const json& paths, const char* key, const fs::path& base) {
    const auto v = get_or<std::string>(paths, key, "");
    if (v.empty()) {
        return std::nullopt;
    }
    return resolve(base, v);
}

fs::path required_path(const json& paths, const char* key, const fs::path& base) {
    auto p = optional_path(paths, key, base);
    if (!p) {
        throw ConfigError(std::string("config is missing paths.") + key);
    }
    return *p;
}

json section(const json& doc, const char* key) {
    if (!doc.contains(key)) {
        return json::object();
    }
    if (!doc.at(key).is_object()) {
        throw ConfigError(std::string("config section '") + key + "' must be an object");
    }
    return doc.at(key);
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    RunConfig cfg;
    const json paths = section(doc, "paths");
    cfg.paths.base_dataset = optional_path(paths, "base_dataset", base_dir);
    cfg.paths.eval_dataset = required_path(paths, "eval_dataset", base_dir);
    cfg.paths.annotations = required_path(paths, "annotations", base_dir);
    cfg.paths.lexicon = required_path(paths, "lexicon", base_dir);
    cfg.paths.markers = optional_path(paths, "markers", base_dir);
    cfg.paths.predictions = optional_path(paths, "predictions", base_dir);
    cfg.paths.output_dir = resolve(base_dir, get_or<std::string>(paths, "output_dir", "aec_out"));
    if (const char* env = std::getenv("AEC_OUT"); env && *env) {
        cfg.paths.output_dir = fs::path(env);
    }

    const json ds = section(doc, "dataset");
    cfg.dataset_format.id_column = get_or<std::string>(ds, "id_column", "id");
    cfg.dataset_format.text_column = get_or<std::string>(ds, "text_column", "text");
    cfg.dataset_format.label_column = get_or<std::string>(ds, "label_column", "label");
    cfg.dataset_format.auto_ids = get_or<bool>(ds, "auto_ids", false);
    if (ds.contains("domain_column")) {
        cfg.dataset_format.domain_column = get_or<std::string>(ds, "domain_column", "");
    }
    cfg.dataset_format.schema = get_or<std::vector<std::string>>(doc, "schema", {});
    if (doc.contains("label_mapping")) {
        cfg.label_mapping = corpus::LabelMapping{
            get_or<std::map<std::string, std::string>>(doc, "label_mapping", {})};
    }

    const json dedup = section(doc, "dedup");
    cfg.dedup_base = get_or<bool>(dedup, "enabled", true);
    cfg.dedup.canonicalize = get_or<bool>(dedup, "canonicalize", true);
    cfg.dedup.jaccard_threshold = get_or<double>(dedup, "jaccard_threshold", 0.9);
    cfg.dedup.shingle_size = get_or<std::size_t>(dedup, "shingle_size", 1);

    cfg.train_ratio = get_or<double>(section(doc, "split"), "train_ratio", 0.8);

    const json feats = section(doc, "features");
    cfg.features.min_count = get_or<std::size_t>(feats, "min_count", 1);
    cfg.features.binary_conv = get_or<bool>(feats, "binary_conv", false);
    cfg.strict_conllu = get_or<bool>(section(doc, "conllu"), "strict", true);

    const json base = section(doc, "base");
    cfg.base_epochs = get_or<int>(base, "epochs", 30);
    cfg.base_learning_rate = get_or<double>(base, "learning_rate", 0.1);
    cfg.renormalize = get_or<bool>(base, "renormalize", false);

    const json seeds = section(doc, "seeds");
    cfg.seeds.split = get_or<std::uint64_t>(seeds, "split", 1);
    cfg.seeds.undersample = get_or<std::uint64_t>(seeds, "undersample", 2);
    cfg.seeds.base = get_or<std::uint64_t>(seeds, "base", 3);
    cfg.seeds.forest = get_or<std::uint64_t>(seeds, "forest", 4);

    const json forest_cfg = section(doc, "forest");
    cfg.cv_folds = get_or<std::size_t>(forest_cfg, "cv_folds", 5);
    cfg.threads = get_or<unsigned>(forest_cfg, "threads", 1);
    if (forest_cfg.contains("grid")) {
        if (!forest_cfg.at("grid").is_array() || forest_cfg.at("grid").empty()) {
            throw ConfigError("forest.grid must be a non-empty array");
        }
        forest::ForestParams defaults;
        defaults.seed = cfg.seeds.forest;
        for (const auto& entry : forest_cfg.at("grid")) {
            cfg.grid.push_back(forest::params_from_json(entry, defaults));
        }
    } else {
        cfg.grid = forest::default_grid(cfg.seeds.forest);
    }

    const json eval = section(doc, "evaluation");
    cfg.ks = get_or<std::vector<std::size_t>>(eval, "ks", cfg.ks);
    cfg.explain_top = get_or<std::size_t>(eval, "explain_top", 10);
    cfg.report_samples = get_or<std::size_t>(eval, "report_samples", 10);
    cfg.report_features = get_or<std::size_t>(eval, "report_features", 100);
    return cfg;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read config '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), fs::absolute(path).parent_path());
}

void validate(const RunConfig& cfg) {
    auto must_exist = [](const fs::path& p, const char* what) {
        if (!fs::is_regular_file(p)) {
            throw ConfigError(std::string(what) + " not found: " + p.string());
        }
    };
    must_exist(cfg.paths.eval_dataset, "eval dataset");
    must_exist(cfg.paths.annotations, "annotations");
    must_exist(cfg.paths.lexicon, "lexicon");
    if (cfg.paths.markers) {
        must_exist(*cfg.paths.markers, "markers");
    }
    if (cfg.paths.predictions) {
        must_exist(*cfg.paths.predictions, "predictions");
    } else if (!cfg.paths.base_dataset) {
        throw ConfigError("either paths.predictions or paths.base_dataset is required");
    }
    if (cfg.paths.base_dataset) {
        must_exist(*cfg.paths.base_dataset, "base dataset");
    }
    if (cfg.ks.empty()) {
        throw ConfigError("evaluation.ks must list at least one K");
    }
    std::size_t previous = 0;
    for (std::size_t k : cfg.ks) {
        if (k <= previous) {
            throw ConfigError("evaluation.ks must be positive and strictly increasing");
        }
        previous = k;
    }
    if (!(cfg.train_ratio > 0.0 && cfg.train_ratio < 1.0)) {
        throw ConfigError("split.train_ratio must lie strictly between 0 and 1");
    }
    if (!(cfg.dedup.jaccard_threshold > 0.0 && cfg.dedup.jaccard_threshold <= 1.0) ||
        cfg.dedup.shingle_size < 1) {
        throw ConfigError("dedup.jaccard_threshold must lie in (0, 1] and shingle_size be >= 1");
    }
    if (cfg.features.min_count < 1) {
        throw ConfigError("features.min_count must be at least 1");
    }
    if (cfg.cv_folds < 2) {
        throw ConfigError("forest.cv_folds must be at least 2");
    }
    if (cfg.base_epochs < 0 || !(cfg.base_learning_rate > 0.0)) {
        throw ConfigError("base.epochs must be >= 0 and base.learning_rate > 0");
    }
    if (cfg.explain_top < 1) {
        throw ConfigError("evaluation.explain_top must be at least 1");
    }
}

std::string RunConfig::canonical_json() const {
    json grid_json = json::array();
    for (const auto& p : grid) {
        grid_json.push_back(forest::params_to_json(p));
    }
    auto opt = [](const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); };
    json doc{{"paths",
              {{"base_dataset", opt(paths.base_dataset)},
               {"eval_dataset", paths.eval_dataset.string()},
               {"annotations", paths.annotations.string()},
               {"lexicon", paths.lexicon.string()},
               {"markers", opt(paths.markers)},
               {"predictions", opt(paths.predictions)}}},
             {"dataset",
              {{"id_column", dataset_format.id_column},
               {"text_column", dataset_format.text_column},
               {"label_column", dataset_format.label_column},
               {"auto_ids", dataset_format.auto_ids}}},
             {"schema", dataset_format.schema},
             {"label_mapping", label_mapping ? json(label_mapping->pairs) : json(nullptr)},
             {"dedup",
              {{"enabled", dedup_base},
               {"canonicalize", dedup.canonicalize},
               {"jaccard_threshold", dedup.jaccard_threshold},
               {"shingle_size", dedup.shingle_size}}},
             {"train_ratio", train_ratio},
             {"features", {{"min_count", features.min_count}, {"binary_conv", features.binary_conv}}},
             {"strict_conllu", strict_conllu},
             {"base", {{"epochs", base_epochs}, {"learning_rate", base_learning_rate}, {"renormalize", renormalize}}},
             {"grid", grid_json},
             {"cv_folds", cv_folds},
             {"ks", ks},
             {"explain_top", explain_top},
             {"report", {{"samples", report_samples}, {"features", report_features}}},
             {"seeds",
              {{"split", seeds.split}, {"undersample", seeds.undersample}, {"base", seeds.base}, {"forest", seeds.forest}}}};
    return doc.dump();
}

// ---------------------------------------------------------------------------------------
// Stages

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> stages{Stage::Prepare, Stage::Base,     Stage::Errorset, Stage::Train,
                                           Stage::Rank,    Stage::Evaluate, Stage::Report};
    return stages;
}

std::string_view stage_name(Stage s) {
    switch (s) {
        case Stage::Prepare:
            return "prepare";
        case Stage::Base:
            return "base";
        case Stage::Errorset:
            return "errorset";
        case Stage::Train:
            return "train";
        case Stage::Rank:
            return "rank";
        case Stage::Evaluate:
            return "evaluate";
        case Stage::Report:
            return "report";
    }
    return "?";
}

std::vector<Stage> parse_stages(const std::string& list) {
    std::set<Stage> chosen;
    for (const auto& raw : text::split(list, ',')) {
        const std::string name{text::trim(raw)};
        if (name.empty()) {
            continue;
        }
        bool found = false;
        for (Stage s : all_stages()) {
            if (stage_name(s) == name) {
                chosen.insert(s);
                found = true;
            }
        }
        if (!found) {
            throw ConfigError("unknown stage '" + name + "'");
        }
    }
    if (chosen.empty()) {
        throw ConfigError("no stages selected");
    }
    std::vector<Stage> out;
    for (Stage s : all_stages()) {
        if (chosen.count(s)) {
            out.push_back(s);
        }
    }
    return out;
}

namespace {

struct StageSpec {
    Stage stage;
    std::vector<fs::path> inputs;
    std::vector<std::string> outputs;
    json params;
    std::function<void()> body;
};

std::vector<std::string> schema_of(const fs::path& out) {
    const json doc = parse_json(read_file(out / artifact::kSchema), "schema artifact");
    return doc.at("schema").get<std::vector<std::string>>();
}

corpus::ColumnFormat prepared_format(const std::vector<std::string>& schema) {
    corpus::ColumnFormat fmt;
    fmt.format = corpus::FileFormat::JsonLines;
    fmt.schema = schema;
    return fmt;
}

std::string dataset_jsonl(const corpus::Dataset& ds) {
    std::ostringstream out;
    corpus::write_dataset(out, ds, prepared_format(ds.schema()));
    return out.str();
}

corpus::Dataset load_prepared(const fs::path& path, const std::vector<std::string>& schema) {
    std::istringstream in(read_file(path));
    return corpus::read_dataset(in, prepared_format(schema));
}

std::map<std::string, features::FeatureVector> load_vectors(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::map<std::string, features::FeatureVector> out;
    for (auto& [id, v] : features::read_vectors_jsonl(in)) {
        out.emplace(std::move(id), std::move(v));
    }
    return out;
}

std::vector<base::Prediction> load_predictions(const fs::path& path, const std::vector<std::string>& schema) {
    std::istringstream in(read_file(path));
    return base::import_predictions(in, schema);
}

corpus::Dataset load_raw(const fs::path& path, const RunConfig& cfg) {
    corpus::ColumnFormat fmt = cfg.dataset_format;
    fmt.format = corpus::format_from_path(path);
    fmt.schema.clear();
    corpus::Dataset ds = corpus::load_dataset(path, fmt);
    if (cfg.label_mapping) {
        ds = corpus::merge_labels(ds, *cfg.label_mapping);
    }
    return ds;
}

corpus::Dataset with_schema(const corpus::Dataset& ds, const std::vector<std::string>& schema) {
    return corpus::Dataset(schema, ds.instances());
}

void stage_prepare(const RunConfig& cfg, const fs::path& out) {
    corpus::Dataset eval = load_raw(cfg.paths.eval_dataset, cfg);
    std::optional<corpus::Dataset> base;
    if (cfg.paths.base_dataset) {
        base = load_raw(*cfg.paths.base_dataset, cfg);
    }
    std::vector<std::string> schema = cfg.dataset_format.schema;
    if (schema.empty()) {
        std::set<std::string> labels(eval.schema().begin(), eval.schema().end());
        if (base) {
            labels.insert(base->schema().begin(), base->schema().end());
        }
        schema.assign(labels.begin(), labels.end());
    }
    eval = with_schema(eval, schema);
    write_file(out / artifact::kSchema, json{{"schema", schema}}.dump(2) + "\n");
    write_file(out / artifact::kPreparedEval, dataset_jsonl(eval));
    if (base) {
        corpus::Dataset b = with_schema(*base, schema);
        if (cfg.dedup_base) {
            const std::size_t before = b.size();
            b = corpus::remove_near_duplicates(b, cfg.dedup);
            std::cerr << "prepare: removed " << (before - b.size()) << " near-duplicate base instances\n";
        }
        write_file(out / artifact::kPreparedBase, dataset_jsonl(b));
    }

    std::vector<std::string> warnings;
    std::vector<annotations::AnnotatedSentence> sentences;
    {
        std::istringstream in(read_file(cfg.paths.annotations));
        sentences = annotations::parse_conllu(in, {cfg.strict_conllu}, &warnings);
    }
    for (const auto& w : warnings) {
        std::cerr << "prepare: warning: " << w << '\n';
    }
    annotations::EmotionLexicon lex;
    {
        std::istringstream in(read_file(cfg.paths.lexicon));
        lex = annotations::load_emotion_lexicon(in);
    }
    annotations::ConversationMarkers markers = annotations::default_markers();
    if (cfg.paths.markers) {
        std::istringstream in(read_file(*cfg.paths.markers));
        markers = annotations::load_markers(in);
    }

    std::map<std::string, const annotations::AnnotatedSentence*> by_id;
    for (const auto& s : sentences) {
        if (!by_id.emplace(s.instance_id, &s).second) {
            throw ValidationError("annotations contain sentence id '" + s.instance_id + "' twice");
        }
    }
    std::vector<annotations::AnnotatedSentence> aligned;
    std::vector<std::string> ids;
    std::size_t missing = 0;
    for (const auto& inst : eval.instances()) {
        const auto it = by_id.find(inst.id);
        if (it == by_id.end()) {
            ++missing;
            continue;
        }
        aligned.push_back(*it->second);
        ids.push_back(inst.id);
    }
    if (missing > 0) {
        std::cerr << "prepare: warning: " << missing << " eval instances have no annotation\n";
    }
    const auto vectors = features::extract_corpus(aligned, lex, markers, cfg.features, cfg.threads);
    {
        std::ostringstream s;
        features::write_vectors_jsonl(s, ids, vectors);
        write_file(out / artifact::kFeatures, s.str());
    }
    {
        const auto space = features::build_feature_space(vectors, cfg.features.min_count);
        std::ostringstream s;
        features::write_matrix_csv(s, features::build_matrix(ids, vectors, space));
        write_file(out / artifact::kFeatureMatrix, s.str());
    }
}

void stage_base(const RunConfig& cfg, const fs::path& out) {
    const auto schema = schema_of(out);
    std::vector<base::Prediction> preds;
    if (cfg.paths.predictions) {
        std::istringstream in(read_file(*cfg.paths.predictions));
        preds = base::import_predictions(in, schema, {cfg.renormalize});
    } else {
        const corpus::Dataset train = load_prepared(out / artifact::kPreparedBase, schema);
        const base::BaseModel model =
            base::train_base(train, {cfg.base_epochs, cfg.base_learning_rate, cfg.seeds.base});
        std::ostringstream m;
        model.save(m);
        write_file(out / artifact::kBaseModel, m.str());
        const corpus::Dataset eval = load_prepared(out / artifact::kPreparedEval, schema);
        for (const auto& inst : eval.instances()) {
            preds.push_back(base::predict_base(model, inst));
        }
    }
    std::ostringstream s;
    base::export_predictions(s, preds);
    write_file(out / artifact::kPredictions, s.str());
}

void stage_errorset(const RunConfig& cfg, const fs::path& out) {
    const auto schema = schema_of(out);
    const auto preds = load_predictions(out / artifact::kPredictions, schema);
    const corpus::Dataset eval = load_prepared(out / artifact::kPreparedEval, schema);
    const auto vectors = load_vectors(out / artifact::kFeatures);
    const pipeline::ErrorDataset full = pipeline::build_error_dataset(preds, eval, vectors);
    const pipeline::ErrorDataset balanced = pipeline::balance_by_undersampling(full, cfg.seeds.undersample);
    const corpus::SplitSpec spec{cfg.train_ratio, cfg.seeds.split};
    const pipeline::ErrorSplit split = pipeline::split_error_dataset(balanced, spec);

    std::map<std::string, std::string> membership;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    for (const auto& r : split.train.records) {
        membership[r.instance_id] = "train";
        train_ids.push_back(r.instance_id);
    }
    for (const auto& r : split.test.records) {
        membership[r.instance_id] = "test";
        test_ids.push_back(r.instance_id);
    }
    json records = json::array();
    for (const auto& r : full.records) {
        const auto m = membership.find(r.instance_id);
        records.push_back({{"id", r.instance_id},
                           {"gold", r.gold_label},
                           {"predicted", r.prediction.predicted_label},
                           {"is_error", r.is_error},
                           {"balanced", m != membership.end()},
                           {"split", m != membership.end() ? json(m->second) : json(nullptr)}});
    }
    json doc;
    doc["schema"] = schema;
    doc["summary"] = {{"total", full.size()},
                      {"correct", full.correct_count()},
                      {"incorrect", full.error_count()},
                      {"accuracy", pipeline::base_accuracy(full)}};
    doc["balanced"] = {{"total", balanced.size()},
                       {"correct", balanced.correct_count()},
                       {"incorrect", balanced.error_count()}};
    doc["split"] = {{"train", split.train.size()}, {"test", split.test.size()}, {"seed", spec.seed},
                    {"train_ratio", spec.train_ratio}};
    doc["records"] = std::move(records);
    write_file(out / artifact::kErrorset, doc.dump(1) + "\n");

    std::ostringstream manifest;
    corpus::write_split_manifest(manifest, train_ids, test_ids, spec);
    write_file(out / artifact::kSplit, manifest.str());
}

void stage_train(const RunConfig& cfg, const fs::path& out) {
    const json doc = parse_json(read_file(out / artifact::kErrorset), "error dataset");
    const auto vectors = load_vectors(out / artifact::kFeatures);
    pipeline::ErrorDataset train;
    for (const auto& r : doc.at("records")) {
        if (r.at("split").is_null() || r.at("split").get<std::string>() != "train") {
            continue;
        }
        pipeline::ErrorRecord rec;
        rec.instance_id = r.at("id").get<std::string>();
        rec.gold_label = r.at("gold").get<std::string>();
        rec.is_error = r.at("is_error").get<bool>();
        rec.features = vectors.at(rec.instance_id);
        train.records.push_back(std::move(rec));
    }
    pipeline::ErrorTrainConfig tc;
    tc.features = cfg.features;
    tc.grid = cfg.grid;
    tc.cv_folds = cfg.cv_folds;
    tc.cv_seed = derive_seed(cfg.seeds.forest, 1);
    tc.threads = cfg.threads;
    const pipeline::AECModel model = pipeline::train_error_classifier(train, tc);
    std::ostringstream s;
    model.save(s);
    write_file(out / artifact::kModel, s.str());
}

std::vector<std::string> test_ids_of(const fs::path& out) {
    const json doc = parse_json(read_file(out / artifact::kSplit), "split manifest");
    return doc.at("test").get<std::vector<std::string>>();
}

void stage_rank(const RunConfig& cfg, const fs::path& out) {
    pipeline::AECModel model;
    {
        std::istringstream in(read_file(out / artifact::kModel));
        model = pipeline::AECModel::load(in);
    }
    const auto test_ids = test_ids_of(out);
    const auto vectors = load_vectors(out / artifact::kFeatures);
    // Ranking sees ids and features only; labels stay in the error dataset.
    std::vector<pipeline::UnlabeledInstance> instances;
    for (const auto& id : test_ids) {
        const auto it = vectors.find(id);
        if (it == vectors.end()) {
            throw JoinError("test instance '" + id + "' has no feature vector");
        }
        instances.push_back({id, it->second});
    }
    const auto ranked = pipeline::rank_errors(model, instances, cfg.explain_top);

    std::ostringstream csv;
    text::write_csv_row(csv, {"rank", "id", "error_prob"});
    std::ostringstream jsonl;
    for (const auto& s : ranked) {
        text::write_csv_row(csv, {std::to_string(s.rank), s.instance_id, text::format_double(s.error_prob)});
        json expl = json::array();
        for (const auto& e : s.explanation) {
            expl.push_back({{"feature", e.name.rendered()}, {"value", e.value}, {"importance", e.importance}});
        }
        jsonl << json{{"rank", s.rank}, {"id", s.instance_id}, {"error_prob", s.error_prob}, {"explanation", expl}}
                     .dump()
              << '\n';
    }
    write_file(out / artifact::kRankingsCsv, csv.str());
    write_file(out / artifact::kRankingsJsonl, jsonl.str());

    const auto schema = schema_of(out);
    const auto all_preds = load_predictions(out / artifact::kPredictions, schema);
    const std::set<std::string> test_set(test_ids.begin(), test_ids.end());
    std::vector<base::Prediction> test_preds;
    for (const auto& p : all_preds) {
        if (test_set.count(p.instance_id)) {
            test_preds.push_back(p);
        }
    }
    const auto unc = base::rank_by_uncertainty(test_preds, test_preds.size());
    std::map<std::string, double> score;
    for (const auto& p : test_preds) {
        score[p.instance_id] = base::uncertainty_score(p);
    }
    std::ostringstream ucsv;
    text::write_csv_row(ucsv, {"rank", "id", "uncertainty"});
    for (std::size_t i = 0; i < unc.size(); ++i) {
        text::write_csv_row(ucsv, {std::to_string(i + 1), unc[i], text::format_double(score[unc[i]])});
    }
    write_file(out / artifact::kUncertaintyCsv, ucsv.str());

    const std::size_t k = std::min(cfg.ks.empty() ? std::size_t{0} : cfg.ks.back(), ranked.size());
    std::ostringstream cand;
    pipeline::write_candidates(cand, pipeline::select_informative(ranked, k));
    write_file(out / artifact::kCandidates, cand.str());
}

std::vector<std::string> ranked_ids_from_csv(const fs::path& path) {
    std::istringstream in(read_file(path));
    text::CsvReader reader(in);
    std::vector<std::string> fields;
    std::vector<std::string> ids;
    if (!reader.next(fields)) {
        return ids;
    }
    while (reader.next(fields)) {
        if (fields.size() < 2) {
            throw ParseError(reader.record_line(), "ranking row needs rank and id");
        }
        ids.push_back(fields[1]);
    }
    return ids;
}

pipeline::Truth truth_of(const fs::path& out) {
    const json doc = parse_json(read_file(out / artifact::kErrorset), "error dataset");
    pipeline::Truth truth;
    for (const auto& r : doc.at("records")) {
        truth[r.at("id").get<std::string>()] = r.at("is_error").get<bool>();
    }
    return truth;
}

void stage_evaluate(const RunConfig& cfg, const fs::path& out) {
    const auto aec_ids = ranked_ids_from_csv(out / artifact::kRankingsCsv);
    const auto unc_ids = ranked_ids_from_csv(out / artifact::kUncertaintyCsv);
    const auto table = pipeline::compare_samplers(aec_ids, unc_ids, truth_of(out), cfg.ks);
    write_file(out / artifact::kEvaluation, pipeline::evaluation_to_json(table));
    write_file(out / artifact::kEvaluationMd, pipeline::evaluation_to_markdown(table));
}

json load_manifest(const fs::path& path) {
    if (!fs::exists(path)) {
        return json{{"stages", json::object()}};
    }
    try {
        json doc = json::parse(read_file(path));
        if (!doc.is_object() || !doc.contains("stages")) {
            return json{{"stages", json::object()}};
        }
        return doc;
    } catch (const json::exception&) {
        return json{{"stages", json::object()}};
    }
}

}  // namespace

std::vector<StageOutcome> run(const RunConfig& cfg, const std::vector<Stage>& stages) {
    const fs::path out = cfg.paths.output_dir;
    fs::create_directories(out);
    const fs::path manifest_path = out / artifact::kManifest;
    json manifest = load_manifest(manifest_path);
    manifest["config_digest"] = text_digest(cfg.canonical_json());

    auto in_out = [&](const char* name) { return out / name; };
    std::vector<StageSpec> specs;
    {
        std::vector<fs::path> inputs{cfg.paths.eval_dataset, cfg.paths.annotations, cfg.paths.lexicon};
        if (cfg.paths.markers) {
            inputs.push_back(*cfg.paths.markers);
        }
        if (cfg.paths.base_dataset) {
            inputs.push_back(*cfg.paths.base_dataset);
        }
        std::vector<std::string> outputs{artifact::kSchema, artifact::kPreparedEval, artifact::kFeatures,
                                         artifact::kFeatureMatrix};
        if (cfg.paths.base_dataset) {
            outputs.push_back(artifact::kPreparedBase);
        }
        json params{{"dataset", json::parse(cfg.canonical_json()).at("dataset")},
                    {"schema", cfg.dataset_format.schema},
                    {"label_mapping", cfg.label_mapping ? json(cfg.label_mapping->pairs) : json(nullptr)},
                    {"dedup", json::parse(cfg.canonical_json()).at("dedup")},
                    {"features", json::parse(cfg.canonical_json()).at("features")},
                    {"strict_conllu", cfg.strict_conllu}};
        specs.push_back({Stage::Prepare, inputs, outputs, params, [&] { stage_prepare(cfg, out); }});
    }
    {
        std::vector<fs::path> inputs{in_out(artifact::kSchema), in_out(artifact::kPreparedEval)};
        std::vector<std::string> outputs{artifact::kPredictions};
        if (cfg.paths.predictions) {
            inputs.push_back(*cfg.paths.predictions);
        } else {
            inputs.push_back(in_out(artifact::kPreparedBase));
            outputs.push_back(artifact::kBaseModel);
        }
        json params{{"epochs", cfg.base_epochs},
                    {"learning_rate", cfg.base_learning_rate},
                    {"renormalize", cfg.renormalize},
                    {"seed", cfg.seeds.base},
                    {"external", cfg.paths.predictions.has_value()}};
        specs.push_back({Stage::Base, inputs, outputs, params, [&] { stage_base(cfg, out); }});
    }
    specs.push_back({Stage::Errorset,
                     {in_out(artifact::kSchema), in_out(artifact::kPredictions), in_out(artifact::kPreparedEval),
                      in_out(artifact::kFeatures)},
                     {artifact::kErrorset, artifact::kSplit},
                     {{"train_ratio", cfg.train_ratio}, {"split", cfg.seeds.split}, {"undersample", cfg.seeds.undersample}},
                     [&] { stage_errorset(cfg, out); }});
    {
        json grid = json::array();
        for (const auto& p : cfg.grid) {
            grid.push_back(forest::params_to_json(p));
        }
        specs.push_back({Stage::Train,
                         {in_out(artifact::kErrorset), in_out(artifact::kFeatures)},
                         {artifact::kModel},
                         {{"grid", grid}, {"cv_folds", cfg.cv_folds}, {"seed", cfg.seeds.forest},
                          {"min_count", cfg.features.min_count}},
                         [&] { stage_train(cfg, out); }});
    }
    specs.push_back({Stage::Rank,
                     {in_out(artifact::kModel), in_out(artifact::kSplit), in_out(artifact::kFeatures),
                      in_out(artifact::kPredictions), in_out(artifact::kSchema)},
                     {artifact::kRankingsCsv, artifact::kRankingsJsonl, artifact::kUncertaintyCsv,
                      artifact::kCandidates},
                     {{"explain_top", cfg.explain_top}, {"ks", cfg.ks}},
                     [&] { stage_rank(cfg, out); }});
    specs.push_back({Stage::Evaluate,
                     {in_out(artifact::kRankingsCsv), in_out(artifact::kUncertaintyCsv), in_out(artifact::kErrorset)},
                     {artifact::kEvaluation, artifact::kEvaluationMd},
                     {{"ks", cfg.ks}},
                     [&] { stage_evaluate(cfg, out); }});
    specs.push_back({Stage::Report,
                     {in_out(artifact::kErrorset), in_out(artifact::kEvaluation), in_out(artifact::kRankingsJsonl),
                      in_out(artifact::kModel), in_out(artifact::kPreparedEval)},
                     {artifact::kReportMd, artifact::kReportJson},
                     {{"samples", cfg.report_samples}, {"features", cfg.report_features}},
                     [&] { emit_report(out, cfg.report_samples, cfg.report_features); }});

    std::vector<StageOutcome> outcomes;
    for (const StageSpec& spec : specs) {
        if (std::find(stages.begin(), stages.end(), spec.stage) == stages.end()) {
            continue;
        }
        const std::string name{stage_name(spec.stage)};
        json inputs = json::object();
        for (const auto& p : spec.inputs) {
            if (!fs::is_regular_file(p)) {
                throw ConfigError("stage '" + name + "' is missing its input " + p.string());
            }
            inputs[p.string()] = file_digest(p);
        }
        const std::string params_digest = text_digest(spec.params.dump());

        bool up_to_date = false;
        if (manifest["stages"].contains(name)) {
            const json& prev = manifest["stages"][name];
            up_to_date = prev.value("inputs", json()) == inputs &&
                         prev.value("params_digest", std::string()) == params_digest;
            if (up_to_date) {
                const json outputs = prev.value("outputs", json::object());
                for (const auto& o : spec.outputs) {
                    const fs::path p = out / o;
                    if (!outputs.contains(o) || !fs::is_regular_file(p) || outputs[o] != file_digest(p)) {
                        up_to_date = false;
                        break;
                    }
                }
            }
        }
        if (up_to_date) {
            outcomes.push_back({spec.stage, true});
            continue;
        }
        spec.body();
        json outputs = json::object();
        for (const auto& o : spec.outputs) {
            outputs[o] = file_digest(out / o);
        }
        manifest["stages"][name] = {{"inputs", inputs}, {"params_digest", params_digest}, {"outputs", outputs}};
        if (spec.stage == Stage::Errorset) {
            manifest["seeds"] = {{"split", cfg.seeds.split}, {"undersample", cfg.seeds.undersample}};
        }
        if (spec.stage == Stage::Train) {
            std::istringstream in(read_file(out / artifact::kModel));
            const auto model = pipeline::AECModel::load(in);
            manifest["chosen_params"] = forest::params_to_json(model.cv.chosen_params);
        }
        write_file(manifest_path, manifest.dump(2) + "\n");
        outcomes.push_back({spec.stage, false});
    }
    return outcomes;
}

// ---------------------------------------------------------------------------------------
// Report

namespace {

std::string md_cell(std::string s) {
    std::string out;
    for (char c : s) {
        if (c == '|') {
            out += "\\|";
        } else if (c == '\n' || c == '\r' || c == '\t') {
            out += ' ';
        } else {
            out.push_back(c);
        }
    }
    return out;
}

struct GroupInfo {
    features::Namespace ns;
    const char* title;
};

const GroupInfo kGroups[] = {{features::Namespace::Conv, "Lexical/Conversation"},
                             {features::Namespace::Emo, "Emotion"},
                             {features::Namespace::Ent, "Entities"},
                             {features::Namespace::Dep, "Dependency"}};

}  // namespace

void emit_report(const fs::path& dir, std::size_t report_samples, std::size_t report_features) {
    for (const char* name : {artifact::kErrorset, artifact::kEvaluation, artifact::kRankingsJsonl,
                             artifact::kModel, artifact::kPreparedEval}) {
        if (!fs::is_regular_file(dir / name)) {
            throw ConfigError("report needs artifact " + (dir / name).string());
        }
    }
    const json eset = parse_json(read_file(dir / artifact::kErrorset), "error dataset");
    const auto schema = eset.at("schema").get<std::vector<std::string>>();
    const auto table = pipeline::evaluation_from_json(read_file(dir / artifact::kEvaluation));
    pipeline::AECModel model;
    {
        std::istringstream in(read_file(dir / artifact::kModel));
        model = pipeline::AECModel::load(in);
    }
    const corpus::Dataset eval = load_prepared(dir / artifact::kPreparedEval, schema);

    std::size_t total = 0;
    std::size_t correct = 0;
    std::map<std::string, std::pair<std::string, std::string>> labels;  // id -> (predicted, gold)
    for (const auto& r : eset.at("records")) {
        ++total;
        correct += r.at("is_error").get<bool>() ? 0 : 1;
        labels[r.at("id").get<std::string>()] = {r.at("predicted").get<std::string>(), r.at("gold").get<std::string>()};
    }

    std::vector<json> ranked;
    {
        std::istringstream in(read_file(dir / artifact::kRankingsJsonl));
        std::string line;
        while (std::getline(in, line)) {
            if (!text::trim(line).empty()) {
                ranked.push_back(parse_json(line, "ranking line"));
            }
        }
    }

    json report;
    std::ostringstream md;
    md << "# Error characterization report\n\n";

    md << "## Base classifier performance\n\n";
    md << "| Dataset | Total instances | Correct pred. | Incorrect pred. | Accuracy |\n";
    md << "|---|---:|---:|---:|---:|\n";
    const double accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    md << "| Evaluation set | " << total << " | " << correct << " | " << (total - correct) << " | "
       << text::format_fixed(accuracy * 100.0, 2) << "% |\n\n";
    md << "Balanced error dataset: " << eset.at("balanced").at("total").get<std::size_t>()
       << " instances; split " << eset.at("split").at("train").get<std::size_t>() << " train / "
       << eset.at("split").at("test").get<std::size_t>() << " test.\n\n";
    report["base_performance"] = {{"total", total},
                                  {"correct", correct},
                                  {"incorrect", total - correct},
                                  {"accuracy", accuracy},
                                  {"balanced_total", eset.at("balanced").at("total")},
                                  {"train", eset.at("split").at("train")},
                                  {"test", eset.at("split").at("test")}};

    md << "## Error classifier cross-validation\n\n";
    md << "| Folds | Mean accuracy | Mean precision | Mean recall |\n|---:|---:|---:|---:|\n";
    md << "| " << model.cv.k << " | " << text::format_fixed(model.cv.mean.accuracy, 4) << " | "
       << text::format_fixed(model.cv.mean.precision, 4) << " | " << text::format_fixed(model.cv.mean.recall, 4)
       << " |\n\n";
    md << "Chosen parameters: `" << forest::params_to_json(model.cv.chosen_params).dump() << "`\n\n";
    report["cross_validation"] = forest::cv_report_to_json(model.cv);

    md << "## Sampler comparison (precision at K)\n\n";
    md << pipeline::evaluation_to_markdown(table) << '\n';
    report["evaluation"] = parse_json(pipeline::evaluation_to_json(table), "evaluation table");

    md << "## Most informative samples\n\n";
    json samples = json::array();
    if (ranked.empty()) {
        md << "(no samples ranked)\n\n";
    } else {
        md << "| Rank | Id | Text | Base pred. | Actual label | Error prob. | Top features |\n";
        md << "|---:|---|---|---|---|---:|---|\n";
        for (std::size_t i = 0; i < std::min(report_samples, ranked.size()); ++i) {
            const json& r = ranked[i];
            const std::string id = r.at("id").get<std::string>();
            const corpus::Instance* inst = eval.find(id);
            const auto lab = labels.find(id);
            std::string feats;
            json feat_list = json::array();
            for (const auto& e : r.at("explanation")) {
                feats += (feats.empty() ? "" : ", ") + e.at("feature").get<std::string>();
                feat_list.push_back(e.at("feature"));
            }
            const std::string predicted = lab == labels.end() ? "" : lab->second.first;
            const std::string gold = lab == labels.end() ? "" : lab->second.second;
            md << "| " << r.at("rank").get<std::size_t>() << " | " << md_cell(id) << " | "
               << md_cell(inst ? inst->text : "") << " | " << md_cell(predicted) << " | " << md_cell(gold) << " | "
               << text::format_fixed(r.at("error_prob").get<double>(), 4) << " | " << md_cell(feats) << " |\n";
            samples.push_back({{"rank", r.at("rank")},
                               {"id", id},
                               {"text", inst ? inst->text : ""},
                               {"predicted", predicted},
                               {"actual", gold},
                               {"error_prob", r.at("error_prob")},
                               {"features", feat_list}});
        }
        md << '\n';
    }
    report["samples"] = std::move(samples);

    md << "## Highly ranked features\n\n";
    std::vector<std::pair<features::FeatureName, double>> ranked_features;
    const auto& names = model.forest.space().names;
    for (std::size_t f = 0; f < names.size(); ++f) {
        if (model.forest.importances()[f] > 0.0) {
            ranked_features.emplace_back(names[f], model.forest.importances()[f]);
        }
    }
    std::sort(ranked_features.begin(), ranked_features.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    if (ranked_features.size() > report_features) {
        ranked_features.erase(ranked_features.begin() + static_cast<std::ptrdiff_t>(report_features), ranked_features.end());
    }
    md << "Top " << ranked_features.size() << " features by importance, grouped by type.\n\n";
    md << "| Feature type | Highly ranked features |\n|---|---|\n";
    json groups = json::array();
    for (const auto& g : kGroups) {
        std::string cell;
        json members = json::array();
        for (const auto& [name, imp] : ranked_features) {
            if (name.ns() != g.ns) {
                continue;
            }
            cell += (cell.empty() ? "" : ", ") + name.key() + " (" + text::format_fixed(imp, 4) + ")";
            members.push_back({{"feature", name.rendered()}, {"importance", imp}});
        }
        md << "| " << g.title << " | " << md_cell(cell.empty() ? "-" : cell) << " |\n";
        groups.push_back({{"type", g.title}, {"features", members}});
    }
    report["feature_groups"] = std::move(groups);

    write_file(dir / artifact::kReportMd, md.str());
    write_file(dir / artifact::kReportJson, report.dump(2) + "\n");
}

}  // namespace aec::workflow
