#include "aec/features.hpp"

#include "aec/error.hpp"
#include "aec/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <exception>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

namespace aec::features {

using annotations::AnnotatedSentence;
using nlohmann::json;

std::string_view namespace_name(Namespace ns) {
    switch (ns) {
        case Namespace::Conv:
            return "conv";
        case Namespace::Dep:
            return "dep";
        case Namespace::Emo:
            return "emo";
        case Namespace::Ent:
            return "ent";
    }
    return "?";
}

FeatureName::FeatureName(Namespace ns, std::string key) : ns_(ns), key_(std::move(key)) {
    if (key_.empty()) {
        throw FormatError("feature key must not be empty");
    }
    if (std::any_of(key_.begin(), key_.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
        throw FormatError("feature key '" + key_ + "' contains whitespace");
    }
    rendered_ = std::string(namespace_name(ns_)) + ":" + key_;
}

FeatureName FeatureName::parse(std::string_view rendered) {
    const auto colon = rendered.find(':');
    if (colon == std::string_view::npos) {
        throw FormatError("feature name '" + std::string(rendered) + "' has no namespace");
    }
    const auto ns = rendered.substr(0, colon);
    for (Namespace candidate : {Namespace::Conv, Namespace::Dep, Namespace::Emo, Namespace::Ent}) {
        if (namespace_name(candidate) == ns) {
            return FeatureName(candidate, std::string(rendered.substr(colon + 1)));
        }
    }
    throw FormatError("unknown feature namespace '" + std::string(ns) + "'");
}

namespace {

std::string sanitize_key(std::string_view raw) {
    std::string out(raw);
    for (char& c : out) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            c = '_';
        }
    }
    return out;
}

bool contains(const std::vector<std::string>& list, const std::string& word) {
    return std::find(list.begin(), list.end(), word) != list.end();
}

bool is_mention(const std::string& form) { return form.size() > 1 && form[0] == '@'; }

}  // namespace

CountMap extract_dependency_features(const AnnotatedSentence& s) {
    CountMap counts;
    for (const auto& tok : s.tokens) {
        std::string key;
        if (tok.head == 0) {
            key = "ROOT-" + tok.pos() + "-" + tok.pos();
        } else {
            const auto& head = s.tokens.at(static_cast<std::size_t>(tok.head - 1));
            key = tok.deprel + "-" + head.pos() + "-" + tok.pos();
        }
        ++counts[FeatureName(Namespace::Dep, sanitize_key(key))];
    }
    return counts;
}

CountMap extract_emotion_features(const AnnotatedSentence& s, const annotations::EmotionLexicon& lex) {
    CountMap counts;
    for (const auto& tok : s.tokens) {
        if (const auto* affects = lex.lookup(text::to_lower(tok.form))) {
            for (const auto& affect : *affects) {
                ++counts[FeatureName(Namespace::Emo, affect)];
            }
        }
    }
    return counts;
}

CountMap extract_entity_features(const AnnotatedSentence& s) {
    CountMap counts;
    const std::string* previous = nullptr;
    for (const auto& tok : s.tokens) {
        const std::string* current = tok.entity ? &*tok.entity : nullptr;
        if (current && (!previous || *previous != *current)) {
            ++counts[FeatureName(Namespace::Ent, sanitize_key(*current))];
        }
        previous = current;
    }
    return counts;
}

CountMap extract_conversation_features(const AnnotatedSentence& s,
                                       const annotations::ConversationMarkers& m) {
    CountMap counts;
    std::optional<std::string> first_word;
    for (const auto& tok : s.tokens) {
        const std::string word = text::to_lower(tok.form);
        if (!first_word && !is_mention(word) && tok.upos != "PUNCT" && !text::is_punct_token(word)) {
            first_word = word;
        }
        // A token credits each key at most once, so "thanks" as both a category member and
        // a standalone marker counts one.
        std::set<std::string> keys;
        if (contains(m.greetings, word)) {
            keys.insert("greeting");
        }
        if (contains(m.thanks, word)) {
            keys.insert("thanks");
        }
        if (contains(m.apology, word)) {
            keys.insert("apology");
        }
        if (contains(m.second_person, word)) {
            keys.insert("second_person");
        }
        if (contains(m.standalone, word)) {
            keys.insert(sanitize_key(word));
        }
        for (const auto& key : keys) {
            ++counts[FeatureName(Namespace::Conv, key)];
        }
    }
    if (first_word) {
        if (contains(m.yesno_starters, *first_word)) {
            counts[FeatureName(Namespace::Conv, "question_yesno")] = 1;
        }
        if (contains(m.wh_starters, *first_word)) {
            counts[FeatureName(Namespace::Conv, "question_wh")] = 1;
        }
    }
    return counts;
}

FeatureVector normalize_by_length(const CountMap& counts, std::size_t n) {
    if (n == 0) {
        throw DegenerateError("cannot normalize features of an empty sentence");
    }
    FeatureVector out;
    for (const auto& [name, count] : counts) {
        if (count < 0 || static_cast<std::size_t>(count) > n) {
            throw DomainError("count " + std::to_string(count) + " of " + name.rendered() +
                              " is outside [0, " + std::to_string(n) + "]");
        }
        if (count > 0) {
            out.emplace(name, static_cast<double>(count) / static_cast<double>(n));
        }
    }
    return out;
}

FeatureVector extract_all(const AnnotatedSentence& s, const annotations::EmotionLexicon& lex,
                          const annotations::ConversationMarkers& m, const FeatureConfig& cfg) {
    CountMap counts = extract_dependency_features(s);
    counts.merge(extract_emotion_features(s, lex));
    counts.merge(extract_entity_features(s));
    CountMap conv = extract_conversation_features(s, m);
    if (!cfg.binary_conv) {
        counts.merge(conv);
        return normalize_by_length(counts, s.length());
    }
    FeatureVector out = normalize_by_length(counts, s.length());
    for (const auto& [name, count] : conv) {
        if (count > 0) {
            out.emplace(name, 1.0);
        }
    }
    return out;
}

std::vector<FeatureVector> extract_corpus(std::span<const AnnotatedSentence> sentences,
                                          const annotations::EmotionLexicon& lex,
                                          const annotations::ConversationMarkers& m,
                                          const FeatureConfig& cfg, unsigned threads) {
    std::vector<FeatureVector> out(sentences.size());
    const std::size_t n = sentences.size();
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = extract_all(sentences[i], lex, m, cfg);
        }
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t end = std::min(n, (w + 1) * chunk);
                for (std::size_t i = w * chunk; i < end; ++i) {
                    out[i] = extract_all(sentences[i], lex, m, cfg);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

std::ptrdiff_t FeatureSpace::index_of(const FeatureName& name) const {
    const auto it = std::lower_bound(names.begin(), names.end(), name);
    if (it == names.end() || !(*it == name)) {
        return -1;
    }
    return it - names.begin();
}

FeatureSpace build_feature_space(std::span<const FeatureVector> vectors, std::size_t min_count) {
    if (min_count < 1) {
        throw DomainError("min_count must be at least 1");
    }
    std::map<FeatureName, std::size_t> df;
    for (const auto& v : vectors) {
        for (const auto& [name, value] : v) {
            if (value > 0.0) {
                ++df[name];
            }
        }
    }
    FeatureSpace space;
    space.min_count = min_count;
    for (const auto& [name, count] : df) {
        if (count >= min_count) {
            space.names.push_back(name);
        }
    }
    return space;
}

std::vector<double> vectorize(const FeatureVector& v, const FeatureSpace& space) {
    std::vector<double> row(space.names.size(), 0.0);
    for (const auto& [name, value] : v) {
        const auto idx = space.index_of(name);
        if (idx >= 0) {
            row[static_cast<std::size_t>(idx)] = value;
        }
    }
    return row;
}

FeatureMatrix build_matrix(std::span<const std::string> ids, std::span<const FeatureVector> vectors,
                           const FeatureSpace& space) {
    if (ids.size() != vectors.size()) {
        throw ValidationError("feature matrix needs one id per vector");
    }
    std::set<std::string> seen;
    FeatureMatrix m;
    m.space = space;
    m.values = Matrix(ids.size(), space.names.size());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (!seen.insert(ids[r]).second) {
            throw ValidationError("duplicate feature row id '" + ids[r] + "'");
        }
        m.row_ids.push_back(ids[r]);
        const auto row = vectorize(vectors[r], space);
        std::copy(row.begin(), row.end(), m.values.row(r).begin());
    }
    return m;
}

void write_matrix_csv(std::ostream& out, const FeatureMatrix& m) {
    std::vector<std::string> fields{"id"};
    for (const auto& name : m.space.names) {
        fields.push_back(name.rendered());
    }
    text::write_csv_row(out, fields);
    for (std::size_t r = 0; r < m.values.rows(); ++r) {
        fields.assign(1, m.row_ids[r]);
        for (double v : m.values.row(r)) {
            fields.push_back(text::format_double(v));
        }
        text::write_csv_row(out, fields);
    }
}

void write_vectors_jsonl(std::ostream& out, std::span<const std::string> ids,
                         std::span<const FeatureVector> vectors) {
    if (ids.size() != vectors.size()) {
        throw ValidationError("feature export needs one id per vector");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        json feats = json::object();
        for (const auto& [name, value] : vectors[i]) {
            feats[name.rendered()] = value;
        }
        json obj;
        obj["id"] = ids[i];
        obj["features"] = std::move(feats);
        out << obj.dump() << '\n';
    }
}

std::vector<std::pair<std::string, FeatureVector>> read_vectors_jsonl(std::istream& in) {
    std::vector<std::pair<std::string, FeatureVector>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) {
            continue;
        }
        try {
            const json obj = json::parse(line);
            FeatureVector v;
            for (const auto& [name, value] : obj.at("features").items()) {
                v.emplace(FeatureName::parse(name), value.get<double>());
            }
            out.emplace_back(obj.at("id").get<std::string>(), std::move(v));
        } catch (const json::exception& e) {
            throw ParseError(lineno, std::string("malformed feature vector: ") + e.what());
        }
    }
    return out;
}

}  // namespace aec::features
