#pragma once

// Readers for linguistic annotations: CoNLL-U sentences, the NRC word-level emotion
// lexicon and conversation-marker lists.

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace aec::annotations {

struct Token {
    int index = 0;  // 1-based
    std::string form;
    std::string lemma = "_";
    std::string upos;
    std::optional<std::string> xpos;
    std::string feats = "_";
    int head = 0;
    std::string deprel;
    std::string deps = "_";
    std::string misc = "_";
    /// Entity type carried in MISC as NER=<TYPE>.
    std::optional<std::string> entity;

    /// xpos when present, else upos.
    const std::string& pos() const noexcept { return xpos ? *xpos : upos; }

    bool operator==(const Token&) const = default;
};

struct AnnotatedSentence {
    std::string instance_id;
    /// Comment lines without the leading '#', in input order.
    std::vector<std::string> comments;
    std::vector<Token> tokens;

    std::size_t length() const noexcept { return tokens.size(); }

    bool operator==(const AnnotatedSentence&) const = default;
};

struct ConlluOptions {
    /// Strict mode rejects sentences without exactly one root. Lenient mode records a
    /// warning and repairs the tree: the first head-0 token stays root and other roots
    /// attach to it; with no head-0 token the first token becomes root.
    bool strict = true;
};

/// Throws ParseError (with line number) for malformed lines and ValidationError for
/// tree violations. Warnings from lenient repairs are appended to `warnings` if given.
std::vector<AnnotatedSentence> parse_conllu(std::istream& in, const ConlluOptions& opts = {},
                                            std::vector<std::string>* warnings = nullptr);
std::vector<AnnotatedSentence> parse_conllu(std::string_view text, const ConlluOptions& opts = {},
                                            std::vector<std::string>* warnings = nullptr);

void serialize_conllu(std::ostream& out, const std::vector<AnnotatedSentence>& sentences);
std::string serialize_conllu(const std::vector<AnnotatedSentence>& sentences);

/// The ten NRC affect labels, sorted.
inline constexpr std::array<std::string_view, 10> kAffectLabels{
    "anger", "anticipation", "disgust", "fear", "joy",
    "negative", "positive", "sadness", "surprise", "trust"};

bool is_affect_label(std::string_view label);

struct EmotionLexicon {
    std::map<std::string, std::set<std::string>> entries;

    const std::set<std::string>* lookup(const std::string& lowered_word) const;
    bool operator==(const EmotionLexicon&) const = default;
};

/// Reads word<TAB>affect<TAB>flag lines; keeps flag-1 associations.
EmotionLexicon load_emotion_lexicon(std::istream& in);

struct ConversationMarkers {
    std::vector<std::string> greetings;
    std::vector<std::string> thanks;
    std::vector<std::string> apology;
    std::vector<std::string> second_person;
    std::vector<std::string> yesno_starters;
    std::vector<std::string> wh_starters;
    std::vector<std::string> standalone;

    bool operator==(const ConversationMarkers&) const = default;
};

ConversationMarkers default_markers();

/// Sectioned list: a "name:" header followed by one marker per line. Markers may also
/// follow the header on the same line, comma-separated. Sections missing from the file
/// keep their built-in defaults.
ConversationMarkers load_markers(std::istream& in);

}  // namespace aec::annotations
