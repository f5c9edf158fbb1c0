#pragma once

// Interpretable linguistic features: generalized dependencies, emotion-lexicon hits,
// entity mentions and conversation markers, normalized by sentence length.

#include "aec/annotations.hpp"

#include <compare>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aec::features {

enum class Namespace { Conv, Dep, Emo, Ent };

std::string_view namespace_name(Namespace ns);

/// Rendered as "<namespace>:<key>"; ordering and equality follow the rendered form.
class FeatureName {
public:
    FeatureName(Namespace ns, std::string key);

    /// Parses "ns:key"; throws FormatError on an unknown namespace or bad key.
    static FeatureName parse(std::string_view rendered);

    Namespace ns() const noexcept { return ns_; }
    const std::string& key() const noexcept { return key_; }
    const std::string& rendered() const noexcept { return rendered_; }

    friend bool operator==(const FeatureName& a, const FeatureName& b) { return a.rendered_ == b.rendered_; }
    friend std::strong_ordering operator<=>(const FeatureName& a, const FeatureName& b) {
        return a.rendered_ <=> b.rendered_;
    }

private:
    Namespace ns_;
    std::string key_;
    std::string rendered_;
};

using CountMap = std::map<FeatureName, int>;

/// Sparse map of values in (0, 1]; absent features are 0.
using FeatureVector = std::map<FeatureName, double>;

CountMap extract_dependency_features(const annotations::AnnotatedSentence& s);
CountMap extract_emotion_features(const annotations::AnnotatedSentence& s,
                                  const annotations::EmotionLexicon& lex);
CountMap extract_entity_features(const annotations::AnnotatedSentence& s);
CountMap extract_conversation_features(const annotations::AnnotatedSentence& s,
                                       const annotations::ConversationMarkers& m);

/// count / n for every positive count. Throws DegenerateError for n = 0 and DomainError
/// when a count exceeds n.
FeatureVector normalize_by_length(const CountMap& counts, std::size_t n);

struct FeatureConfig {
    std::size_t min_count = 1;
    /// Conversation features become 0/1 indicators instead of normalized counts.
    bool binary_conv = false;
};

FeatureVector extract_all(const annotations::AnnotatedSentence& s,
                          const annotations::EmotionLexicon& lex,
                          const annotations::ConversationMarkers& m, const FeatureConfig& cfg = {});

/// extract_all over a corpus with up to `threads` workers; output order follows input.
std::vector<FeatureVector> extract_corpus(std::span<const annotations::AnnotatedSentence> sentences,
                                          const annotations::EmotionLexicon& lex,
                                          const annotations::ConversationMarkers& m,
                                          const FeatureConfig& cfg = {}, unsigned threads = 1);

struct FeatureSpace {
    std::vector<FeatureName> names;  // sorted, unique
    std::size_t min_count = 1;

    /// Position of `name`, or -1.
    std::ptrdiff_t index_of(const FeatureName& name) const;
    bool operator==(const FeatureSpace&) const = default;
};

/// Features occurring in at least `min_count` vectors, sorted.
FeatureSpace build_feature_space(std::span<const FeatureVector> vectors, std::size_t min_count);

std::vector<double> vectorize(const FeatureVector& v, const FeatureSpace& space);

/// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct FeatureMatrix {
    std::vector<std::string> row_ids;
    FeatureSpace space;
    Matrix values;
};

/// Throws ValidationError on duplicate ids or a size mismatch.
FeatureMatrix build_matrix(std::span<const std::string> ids, std::span<const FeatureVector> vectors,
                           const FeatureSpace& space);

/// CSV with an "id" column followed by the rendered feature names.
void write_matrix_csv(std::ostream& out, const FeatureMatrix& m);
/// One {"id": ..., "features": {name: value}} object per line.
void write_vectors_jsonl(std::ostream& out, std::span<const std::string> ids,
                         std::span<const FeatureVector> vectors);
std::vector<std::pair<std::string, FeatureVector>> read_vectors_jsonl(std::istream& in);

}  // namespace aec::features
