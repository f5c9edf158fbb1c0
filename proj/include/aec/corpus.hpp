#pragma once

// Labeled text datasets: loading, label-schema mapping, near-duplicate removal and
// seeded train/test splits.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace aec::corpus {

struct Instance {
    std::string id;
    std::string text;
    std::string gold_label;
    std::optional<std::string> domain_tag;

    bool operator==(const Instance&) const = default;
};

/// Immutable validated dataset. The schema order is the canonical class index.
class Dataset {
public:
    Dataset() = default;

    /// Validates ids, texts and labels. Throws ValidationError.
    Dataset(std::vector<std::string> schema, std::vector<Instance> instances);

    /// Schema inferred as the sorted distinct labels.
    static Dataset with_inferred_schema(std::vector<Instance> instances);

    const std::vector<std::string>& schema() const noexcept { return schema_; }
    const std::vector<Instance>& instances() const noexcept { return instances_; }
    std::size_t size() const noexcept { return instances_.size(); }
    bool empty() const noexcept { return instances_.empty(); }

    /// Index of `label` in the schema; throws ValidationError when absent.
    std::size_t class_index(const std::string& label) const;
    /// Instance count per schema class, in schema order.
    std::vector<std::size_t> class_counts() const;
    const Instance* find(const std::string& id) const;

    bool operator==(const Dataset&) const = default;

private:
    std::vector<std::string> schema_;
    std::vector<Instance> instances_;
    std::map<std::string, std::size_t> index_;
};

enum class FileFormat { Csv, JsonLines };

/// Describes where the fields of an instance live in a dataset file.
struct ColumnFormat {
    FileFormat format = FileFormat::Csv;
    std::string id_column = "id";
    std::string text_column = "text";
    std::string label_column = "label";
    std::optional<std::string> domain_column;
    /// Generate ids "row-<n>" (1-based data row) instead of reading an id column.
    bool auto_ids = false;
    /// Explicit schema; inferred as sorted distinct labels when empty.
    std::vector<std::string> schema;
};

FileFormat format_from_path(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, const ColumnFormat& fmt);
Dataset read_dataset(std::istream& in, const ColumnFormat& fmt);
/// Writes the dataset with the column names of `fmt`. Ids are always written.
void write_dataset(std::ostream& out, const Dataset& ds, const ColumnFormat& fmt);
void save_dataset(const std::filesystem::path& path, const Dataset& ds, const ColumnFormat& fmt);

struct LabelMapping {
    std::map<std::string, std::string> pairs;
};

/// Relabels every instance. The new schema is the image of the old schema under the
/// mapping, deduplicated, in order of first appearance. Throws ValidationError when a
/// schema label has no mapping.
Dataset merge_labels(const Dataset& ds, const LabelMapping& mapping);

struct DedupConfig {
    bool canonicalize = true;
    double jaccard_threshold = 0.9;
    std::size_t shingle_size = 1;
};

/// Token-shingle Jaccard similarity of two texts under `cfg` (canonicalized first when
/// requested). A text shorter than the shingle size is one shingle.
double shingle_jaccard(const std::string& a, const std::string& b, const DedupConfig& cfg);

/// Keeps the first instance of each near-duplicate group in dataset order.
Dataset remove_near_duplicates(const Dataset& ds, const DedupConfig& cfg);

struct SplitSpec {
    double train_ratio = 0.8;
    std::uint64_t seed = 0;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Shuffles 0..n-1 with a generator seeded from spec.seed; the first floor(n * ratio)
/// go to train. Throws DegenerateError when either side would be empty.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

struct Split {
    Dataset train;
    Dataset test;
};

Split split(const Dataset& ds, const SplitSpec& spec);

/// Audit manifest for a split.
void write_split_manifest(std::ostream& out, const std::vector<std::string>& train_ids,
                          const std::vector<std::string>& test_ids, const SplitSpec& spec);

}  // namespace aec::corpus
