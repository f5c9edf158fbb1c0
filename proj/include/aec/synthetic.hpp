#pragma once

// Synthetic annotated corpora with planted base-model errors. Errors co-occur with one
// conversation marker; base-model confidence is drawn independently of everything else,
// so least-confidence sampling sits at the error base rate while a feature-based error
// classifier can find the planted signal.

#include "aec/annotations.hpp"
#include "aec/base_model.hpp"
#include "aec/corpus.hpp"
#include "aec/features.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace aec::synthetic {

struct SyntheticConfig {
    std::size_t n_instances = 2000;
    double error_rate = 0.5;
    /// The planted marker token; "sorry" is an apology marker in the default lists.
    std::string planted_marker = "sorry";
    double p_marker_given_error = 0.9;
    double p_marker_given_correct = 0.05;
    /// Size of the separate base-training dataset written alongside the corpus.
    std::size_t n_base_instances = 300;
    std::uint64_t seed = 7;
};

struct SyntheticCorpus {
    corpus::Dataset base_train;  // labeled dataset I
    corpus::Dataset dataset;     // labeled dataset II
    std::vector<annotations::AnnotatedSentence> sentences;  // aligned with dataset
    std::string lexicon_text;
    annotations::EmotionLexicon lexicon;
    annotations::ConversationMarkers markers;
    std::vector<base::Prediction> predictions;  // aligned with dataset
    std::vector<bool> planted_error;            // aligned with dataset
    features::FeatureName planted_feature{features::Namespace::Conv, "apology"};
};

SyntheticCorpus generate(const SyntheticConfig& cfg);

/// Writes dataset_i.csv, dataset_ii.csv, annotations.conllu, lexicon.txt, markers.txt,
/// predictions.jsonl and a ready-to-run config.json into `dir`.
void write_fixture(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace aec::synthetic
