#include "aec/corpus.hpp"

#include "aec/error.hpp"
#include "aec/rng.hpp"
#include "aec/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

namespace aec::corpus {

using nlohmann::json;

Dataset::Dataset(std::vector<std::string> schema, std::vector<Instance> instances)
    : schema_(std::move(schema)), instances_(std::move(instances)) {
    std::set<std::string> seen_labels;
    for (const auto& label : schema_) {
        if (!seen_labels.insert(label).second) {
            throw ValidationError("duplicate schema label '" + label + "'");
        }
    }
    for (std::size_t row = 0; row < instances_.size(); ++row) {
        const Instance& inst = instances_[row];
        if (text::trim(inst.text).empty()) {
            throw ValidationError("empty text for instance '" + inst.id + "' (row " +
                                  std::to_string(row + 1) + ")");
        }
        if (!seen_labels.count(inst.gold_label)) {
            throw ValidationError("label '" + inst.gold_label + "' of instance '" + inst.id +
                                  "' is not in the schema");
        }
        if (!index_.emplace(inst.id, row).second) {
            throw ValidationError("duplicate id '" + inst.id + "'");
        }
    }
}

Dataset Dataset::with_inferred_schema(std::vector<Instance> instances) {
    std::set<std::string> labels;
    for (const auto& inst : instances) {
        labels.insert(inst.gold_label);
    }
    return Dataset({labels.begin(), labels.end()}, std::move(instances));
}

std::size_t Dataset::class_index(const std::string& label) const {
    const auto it = std::find(schema_.begin(), schema_.end(), label);
    if (it == schema_.end()) {
        throw ValidationError("label '" + label + "' is not in the schema");
    }
    return static_cast<std::size_t>(it - schema_.begin());
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(schema_.size(), 0);
    for (const auto& inst : instances_) {
        ++counts[class_index(inst.gold_label)];
    }
    return counts;
}

const Instance* Dataset::find(const std::string& id) const {
    const auto it = index_.find(id);
    return it == index_.end() ? nullptr : &instances_[it->second];
}

FileFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = text::to_lower(path.extension().string());
    if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") {
        return FileFormat::JsonLines;
    }
    return FileFormat::Csv;
}

namespace {

Dataset finish(std::vector<Instance> instances, const ColumnFormat& fmt) {
    if (fmt.schema.empty()) {
        return Dataset::with_inferred_schema(std::move(instances));
    }
    return Dataset(fmt.schema, std::move(instances));
}

Dataset read_csv(std::istream& in, const ColumnFormat& fmt) {
    text::CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) {
        throw FormatError("CSV input has no header row");
    }
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) {
        header[0].erase(0, 3);
    }
    auto column = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw FormatError("missing column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t text_col = column(fmt.text_column);
    const std::size_t label_col = column(fmt.label_column);
    const std::optional<std::size_t> id_col =
        fmt.auto_ids ? std::nullopt : std::optional<std::size_t>(column(fmt.id_column));
    const std::optional<std::size_t> domain_col =
        fmt.domain_column ? std::optional<std::size_t>(column(*fmt.domain_column)) : std::nullopt;

    std::vector<Instance> instances;
    std::vector<std::string> fields;
    std::size_t row = 0;
    while (reader.next(fields)) {
        if (fields.size() == 1 && text::trim(fields[0]).empty()) {
            continue;
        }
        ++row;
        if (fields.size() != header.size()) {
            throw ParseError(reader.record_line(), "expected " + std::to_string(header.size()) +
                                                       " fields, found " +
                                                       std::to_string(fields.size()));
        }
        Instance inst;
        inst.id = id_col ? fields[*id_col] : "row-" + std::to_string(row);
        inst.text = fields[text_col];
        inst.gold_label = fields[label_col];
        if (domain_col && !fields[*domain_col].empty()) {
            inst.domain_tag = fields[*domain_col];
        }
        if (text::trim(inst.text).empty()) {
            throw ValidationError("empty text at row " + std::to_string(row));
        }
        instances.push_back(std::move(inst));
    }
    return finish(std::move(instances), fmt);
}

std::string json_string_field(const json& obj, const std::string& key, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(line, "missing column '" + key + "'");
    }
    if (it->is_string()) {
        return it->get<std::string>();
    }
    if (it->is_number_integer()) {
        return std::to_string(it->get<long long>());
    }
    throw ParseError(line, "field '" + key + "' must be a string");
}

Dataset read_jsonl(std::istream& in, const ColumnFormat& fmt) {
    std::vector<Instance> instances;
    std::string line;
    std::size_t lineno = 0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) {
            continue;
        }
        ++row;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) {
            throw ParseError(lineno, "expected a JSON object");
        }
        Instance inst;
        inst.id = fmt.auto_ids ? "row-" + std::to_string(row)
                               : json_string_field(obj, fmt.id_column, lineno);
        inst.text = json_string_field(obj, fmt.text_column, lineno);
        inst.gold_label = json_string_field(obj, fmt.label_column, lineno);
        if (fmt.domain_column && obj.contains(*fmt.domain_column) &&
            !obj[*fmt.domain_column].is_null()) {
            inst.domain_tag = json_string_field(obj, *fmt.domain_column, lineno);
        }
        if (text::trim(inst.text).empty()) {
            throw ValidationError("empty text at row " + std::to_string(row));
        }
        instances.push_back(std::move(inst));
    }
    return finish(std::move(instances), fmt);
}

}  // namespace

Dataset read_dataset(std::istream& in, const ColumnFormat& fmt) {
    return fmt.format == FileFormat::Csv ? read_csv(in, fmt) : read_jsonl(in, fmt);
}

Dataset load_dataset(const std::filesystem::path& path, const ColumnFormat& fmt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open dataset '" + path.string() + "'");
    }
    return read_dataset(in, fmt);
}

void write_dataset(std::ostream& out, const Dataset& ds, const ColumnFormat& fmt) {
    if (fmt.format == FileFormat::Csv) {
        std::vector<std::string> header{fmt.id_column, fmt.text_column, fmt.label_column};
        if (fmt.domain_column) {
            header.push_back(*fmt.domain_column);
        }
        text::write_csv_row(out, header);
        for (const auto& inst : ds.instances()) {
            std::vector<std::string> row{inst.id, inst.text, inst.gold_label};
            if (fmt.domain_column) {
                row.push_back(inst.domain_tag.value_or(""));
            }
            text::write_csv_row(out, row);
        }
        return;
    }
    for (const auto& inst : ds.instances()) {
        json obj;
        obj[fmt.id_column] = inst.id;
        obj[fmt.text_column] = inst.text;
        obj[fmt.label_column] = inst.gold_label;
        if (fmt.domain_column && inst.domain_tag) {
            obj[*fmt.domain_column] = *inst.domain_tag;
        }
        out << obj.dump() << '\n';
    }
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds, const ColumnFormat& fmt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write dataset '" + path.string() + "'");
    }
    write_dataset(out, ds, fmt);
}

Dataset merge_labels(const Dataset& ds, const LabelMapping& mapping) {
    std::vector<std::string> schema;
    for (const auto& label : ds.schema()) {
        const auto it = mapping.pairs.find(label);
        if (it == mapping.pairs.end()) {
            throw ValidationError("label mapping is incomplete: no target for '" + label + "'");
        }
        if (std::find(schema.begin(), schema.end(), it->second) == schema.end()) {
            schema.push_back(it->second);
        }
    }
    std::vector<Instance> instances = ds.instances();
    for (auto& inst : instances) {
        inst.gold_label = mapping.pairs.at(inst.gold_label);
    }
    return Dataset(std::move(schema), std::move(instances));
}

namespace {

using Shingles = std::vector<std::string>;  // sorted, unique

Shingles shingles_of(const std::string& raw, const DedupConfig& cfg) {
    const std::string prepared = cfg.canonicalize ? text::canonicalize(raw) : raw;
    const auto tokens = text::split_ws(prepared);
    Shingles out;
    if (tokens.empty()) {
        return out;
    }
    const std::size_t k = std::max<std::size_t>(1, cfg.shingle_size);
    if (tokens.size() <= k) {
        std::string joined;
        for (const auto& t : tokens) {
            joined += (joined.empty() ? "" : " ") + t;
        }
        out.push_back(joined);
        return out;
    }
    for (std::size_t i = 0; i + k <= tokens.size(); ++i) {
        std::string joined = tokens[i];
        for (std::size_t j = 1; j < k; ++j) {
            joined += ' ';
            joined += tokens[i + j];
        }
        out.push_back(std::move(joined));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double jaccard(const Shingles& a, const Shingles& b) {
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    std::size_t common = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace

double shingle_jaccard(const std::string& a, const std::string& b, const DedupConfig& cfg) {
    return jaccard(shingles_of(a, cfg), shingles_of(b, cfg));
}

Dataset remove_near_duplicates(const Dataset& ds, const DedupConfig& cfg) {
    if (!(cfg.jaccard_threshold > 0.0 && cfg.jaccard_threshold <= 1.0)) {
        throw DomainError("jaccard_threshold must lie in (0, 1]");
    }
    if (cfg.shingle_size < 1) {
        throw DomainError("shingle_size must be at least 1");
    }
    std::vector<Instance> kept;
    std::vector<Shingles> kept_shingles;
    std::set<std::string> kept_exact;
    // Shingle -> indices of kept instances containing it; any pair above a positive
    // threshold shares at least one shingle.
    std::unordered_map<std::string, std::vector<std::size_t>> postings;

    for (const auto& inst : ds.instances()) {
        const std::string key = cfg.canonicalize ? text::canonicalize(inst.text) : inst.text;
        if (kept_exact.count(key)) {
            continue;
        }
        Shingles sh = shingles_of(inst.text, cfg);
        std::set<std::size_t> candidates;
        for (const auto& s : sh) {
            const auto it = postings.find(s);
            if (it != postings.end()) {
                candidates.insert(it->second.begin(), it->second.end());
            }
        }
        bool duplicate = false;
        for (std::size_t c : candidates) {
            if (jaccard(sh, kept_shingles[c]) >= cfg.jaccard_threshold) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) {
            continue;
        }
        const std::size_t idx = kept.size();
        for (const auto& s : sh) {
            postings[s].push_back(idx);
        }
        kept_exact.insert(key);
        kept_shingles.push_back(std::move(sh));
        kept.push_back(inst);
    }
    return Dataset(ds.schema(), std::move(kept));
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
    if (!(spec.train_ratio > 0.0 && spec.train_ratio < 1.0)) {
        throw DomainError("train_ratio must lie strictly between 0 and 1");
    }
    // Guard the floor against representation error (0.8 * 9310 must be exactly 7448).
    const double scaled = static_cast<double>(n) * spec.train_ratio;
    auto n_train = static_cast<std::size_t>(std::floor(scaled + 1e-9 * std::max(1.0, scaled)));
    n_train = std::min(n_train, n);
    if (n_train == 0 || n_train == n) {
        throw DegenerateError("split of " + std::to_string(n) + " instances at ratio " +
                              text::format_double(spec.train_ratio) +
                              " leaves an empty train or test side");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    Rng rng(spec.seed);
    rng.shuffle(std::span<std::size_t>(order));
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return out;
}

Split split(const Dataset& ds, const SplitSpec& spec) {
    const auto idx = split_indices(ds.size(), spec);
    std::vector<Instance> train;
    std::vector<Instance> test;
    for (std::size_t i : idx.train) {
        train.push_back(ds.instances()[i]);
    }
    for (std::size_t i : idx.test) {
        test.push_back(ds.instances()[i]);
    }
    return {Dataset(ds.schema(), std::move(train)), Dataset(ds.schema(), std::move(test))};
}

void write_split_manifest(std::ostream& out, const std::vector<std::string>& train_ids,
                          const std::vector<std::string>& test_ids, const SplitSpec& spec) {
    json doc;
    doc["seed"] = spec.seed;
    doc["train_ratio"] = spec.train_ratio;
    doc["train"] = train_ids;
    doc["test"] = test_ids;
    out << doc.dump(2) << '\n';
}

}  // namespace aec::corpus
