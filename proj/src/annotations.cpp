#include "aec/annotations.hpp"

#include "aec/error.hpp"
#include "aec/text.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <sstream>

namespace aec::annotations {

namespace {

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        return std::nullopt;
    }
    return v;
}

std::optional<std::string> entity_from_misc(const std::string& misc) {
    if (misc == "_") {
        return std::nullopt;
    }
    for (const auto& item : text::split(misc, '|')) {
        if (item.rfind("NER=", 0) == 0 && item.size() > 4) {
            return item.substr(4);
        }
    }
    return std::nullopt;
}

std::string sentence_label(const AnnotatedSentence& s, std::size_t first_line) {
    if (!s.instance_id.empty()) {
        return "sentence '" + s.instance_id + "' (line " + std::to_string(first_line) + ")";
    }
    return "sentence starting at line " + std::to_string(first_line);
}

class SentenceBuilder {
public:
    SentenceBuilder(const ConlluOptions& opts, std::vector<std::string>* warnings)
        : opts_(opts), warnings_(warnings) {}

    void comment(const std::string& line, std::size_t lineno) {
        mark_start(lineno);
        std::string body = line.substr(1);
        const std::string_view trimmed = text::trim(body);
        if (trimmed.rfind("sent_id", 0) == 0) {
            const auto eq = trimmed.find('=');
            if (eq != std::string_view::npos) {
                current_.instance_id = std::string(text::trim(trimmed.substr(eq + 1)));
            }
        }
        current_.comments.push_back(std::move(body));
    }

    void token_line(const std::string& line, std::size_t lineno) {
        mark_start(lineno);
        auto cols = text::split(line, '\t');
        if (cols.size() != 10) {
            throw ParseError(lineno, "expected 10 tab-separated columns, found " +
                                         std::to_string(cols.size()));
        }
        const std::string& id = cols[0];
        if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) {
            return;  // multiword range or empty node
        }
        const auto index = parse_int(id);
        if (!index) {
            throw ParseError(lineno, "non-integer token id '" + id + "'");
        }
        const int expected = static_cast<int>(current_.tokens.size()) + 1;
        if (*index != expected) {
            throw ParseError(lineno, "token id " + id + " breaks the contiguous sequence (expected " +
                                         std::to_string(expected) + ")");
        }
        const auto head = parse_int(cols[6]);
        if (!head) {
            throw ParseError(lineno, "non-integer head '" + cols[6] + "'");
        }
        if (*head < 0) {
            throw ParseError(lineno, "negative head " + cols[6]);
        }
        if (*head == *index) {
            throw ParseError(lineno, "token " + id + " is its own head");
        }
        if (cols[7].empty() || cols[7] == "_") {
            throw ParseError(lineno, "empty dependency relation");
        }
        Token tok;
        tok.index = *index;
        tok.form = cols[1];
        tok.lemma = cols[2];
        tok.upos = cols[3];
        if (cols[4] != "_" && !cols[4].empty()) {
            tok.xpos = cols[4];
        }
        tok.feats = cols[5];
        tok.head = *head;
        tok.deprel = cols[7];
        tok.deps = cols[8];
        tok.misc = cols[9];
        tok.entity = entity_from_misc(tok.misc);
        current_.tokens.push_back(std::move(tok));
        token_lines_.push_back(lineno);
    }

    void flush(std::vector<AnnotatedSentence>& out) {
        if (!started_) {
            return;
        }
        if (current_.tokens.empty()) {
            warn(sentence_label(current_, first_line_) + " has no tokens; skipped");
            reset();
            return;
        }
        const int n = static_cast<int>(current_.tokens.size());
        std::vector<std::size_t> roots;
        for (std::size_t i = 0; i < current_.tokens.size(); ++i) {
            const Token& t = current_.tokens[i];
            if (t.head > n) {
                throw ParseError(token_lines_[i], "head " + std::to_string(t.head) +
                                                      " exceeds sentence length " + std::to_string(n));
            }
            if (t.head == 0) {
                roots.push_back(i);
            }
        }
        if (roots.size() != 1) {
            const std::string msg = sentence_label(current_, first_line_) + " has " +
                                    std::to_string(roots.size()) + " roots";
            if (opts_.strict) {
                throw ValidationError(msg);
            }
            warn(msg + "; repaired");
            if (roots.empty()) {
                current_.tokens.front().head = 0;
                current_.tokens.front().deprel = "root";
            } else {
                const int root_index = current_.tokens[roots.front()].index;
                for (std::size_t k = 1; k < roots.size(); ++k) {
                    current_.tokens[roots[k]].head = root_index;
                }
            }
        }
        out.push_back(std::move(current_));
        reset();
    }

private:
    void mark_start(std::size_t lineno) {
        if (!started_) {
            started_ = true;
            first_line_ = lineno;
        }
    }

    void reset() {
        current_ = AnnotatedSentence{};
        token_lines_.clear();
        started_ = false;
    }

    void warn(const std::string& msg) {
        if (warnings_) {
            warnings_->push_back(msg);
        }
    }

    const ConlluOptions& opts_;
    std::vector<std::string>* warnings_;
    AnnotatedSentence current_;
    std::vector<std::size_t> token_lines_;
    bool started_ = false;
    std::size_t first_line_ = 0;
};

std::string misc_with_entity(const Token& t) {
    if (!t.entity || entity_from_misc(t.misc) == t.entity) {
        return t.misc.empty() ? "_" : t.misc;
    }
    const std::string item = "NER=" + *t.entity;
    if (t.misc.empty() || t.misc == "_") {
        return item;
    }
    std::string out;
    for (const auto& part : text::split(t.misc, '|')) {
        if (part.rfind("NER=", 0) == 0) {
            continue;
        }
        out += (out.empty() ? "" : "|") + part;
    }
    return out.empty() ? item : out + "|" + item;
}

std::string or_blank(const std::string& s) { return s.empty() ? "_" : s; }

}  // namespace

std::vector<AnnotatedSentence> parse_conllu(std::istream& in, const ConlluOptions& opts,
                                            std::vector<std::string>* warnings) {
    std::vector<AnnotatedSentence> out;
    SentenceBuilder builder(opts, warnings);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (text::trim(line).empty()) {
            builder.flush(out);
        } else if (line[0] == '#') {
            builder.comment(line, lineno);
        } else {
            builder.token_line(line, lineno);
        }
    }
    builder.flush(out);
    return out;
}

std::vector<AnnotatedSentence> parse_conllu(std::string_view text, const ConlluOptions& opts,
                                            std::vector<std::string>* warnings) {
    std::istringstream in{std::string(text)};
    return parse_conllu(in, opts, warnings);
}

void serialize_conllu(std::ostream& out, const std::vector<AnnotatedSentence>& sentences) {
    for (const auto& s : sentences) {
        bool has_sent_id = false;
        for (const auto& c : s.comments) {
            if (text::trim(c).rfind("sent_id", 0) == 0) {
                has_sent_id = true;
            }
        }
        if (!has_sent_id && !s.instance_id.empty()) {
            out << "# sent_id = " << s.instance_id << '\n';
        }
        for (const auto& c : s.comments) {
            out << '#' << c << '\n';
        }
        for (const auto& t : s.tokens) {
            out << t.index << '\t' << or_blank(t.form) << '\t' << or_blank(t.lemma) << '\t'
                << or_blank(t.upos) << '\t' << (t.xpos ? *t.xpos : "_") << '\t' << or_blank(t.feats)
                << '\t' << t.head << '\t' << t.deprel << '\t' << or_blank(t.deps) << '\t'
                << misc_with_entity(t) << '\n';
        }
        out << '\n';
    }
}

std::string serialize_conllu(const std::vector<AnnotatedSentence>& sentences) {
    std::ostringstream out;
    serialize_conllu(out, sentences);
    return out.str();
}

bool is_affect_label(std::string_view label) {
    return std::binary_search(kAffectLabels.begin(), kAffectLabels.end(), label);
}

const std::set<std::string>* EmotionLexicon::lookup(const std::string& lowered_word) const {
    const auto it = entries.find(lowered_word);
    return it == entries.end() ? nullptr : &it->second;
}

EmotionLexicon load_emotion_lexicon(std::istream& in) {
    EmotionLexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) {
            continue;
        }
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::vector<std::string> fields = line.find('\t') != std::string::npos
                                              ? text::split(line, '\t')
                                              : text::split_ws(line);
        if (fields.size() != 3) {
            throw ParseError(lineno, "expected word<TAB>affect<TAB>flag, found " +
                                         std::to_string(fields.size()) + " fields");
        }
        const std::string word = text::to_lower(text::trim(fields[0]));
        const std::string affect{text::trim(fields[1])};
        const std::string flag{text::trim(fields[2])};
        if (word.empty()) {
            throw ParseError(lineno, "empty word");
        }
        if (!is_affect_label(affect)) {
            throw ParseError(lineno, "unknown affect label '" + affect + "'");
        }
        if (flag == "1") {
            lex.entries[word].insert(affect);
        } else if (flag != "0") {
            throw ParseError(lineno, "flag must be 0 or 1, found '" + flag + "'");
        }
    }
    return lex;
}

ConversationMarkers default_markers() {
    ConversationMarkers m;
    m.greetings = {"hi", "hello", "hey", "greetings", "morning", "evening", "howdy"};
    m.thanks = {"thanks", "thank", "thx", "ty"};
    m.apology = {"sorry", "apologies", "apologize", "apologise", "apology"};
    m.second_person = {"you", "your", "yours", "u"};
    m.yesno_starters = {"do", "did", "can", "could"};
    m.wh_starters = {"who", "what", "where"};
    m.standalone = {"!", "?", "no", "thanks"};
    return m;
}

ConversationMarkers load_markers(std::istream& in) {
    ConversationMarkers m = default_markers();
    const std::map<std::string, std::vector<std::string> ConversationMarkers::*> sections{
        {"greetings", &ConversationMarkers::greetings},
        {"thanks", &ConversationMarkers::thanks},
        {"apology", &ConversationMarkers::apology},
        {"second_person", &ConversationMarkers::second_person},
        {"yesno_starters", &ConversationMarkers::yesno_starters},
        {"wh_starters", &ConversationMarkers::wh_starters},
        {"standalone", &ConversationMarkers::standalone},
    };
    std::vector<std::string>* current = nullptr;
    std::string current_name;
    std::size_t header_line = 0;
    auto close_section = [&] {
        if (current && current->empty()) {
            throw ParseError(header_line, "section '" + current_name + "' lists no markers");
        }
    };
    auto add = [&](std::string_view raw, std::size_t lineno) {
        const std::string_view item = text::trim(raw);
        if (item.empty()) {
            return;
        }
        if (!current) {
            throw ParseError(lineno, "marker outside of any section");
        }
        std::string lowered = text::to_lower(item);
        if (std::find(current->begin(), current->end(), lowered) == current->end()) {
            current->push_back(std::move(lowered));
        }
    };
    auto add_list = [&](std::string_view body, std::size_t lineno) {
        if (text::trim(body) == ",") {
            add(body, lineno);
            return;
        }
        for (const auto& item : text::split(body, ',')) {
            add(item, lineno);
        }
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view trimmed = text::trim(line);
        if (trimmed.empty()) {
            continue;
        }
        const auto colon = trimmed.find(':');
        const bool is_header =
            colon != std::string_view::npos && colon > 0 &&
            std::all_of(trimmed.begin(), trimmed.begin() + static_cast<std::ptrdiff_t>(colon),
                        [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; });
        if (is_header) {
            close_section();
            const std::string name = text::to_lower(trimmed.substr(0, colon));
            const auto it = sections.find(name);
            if (it == sections.end()) {
                throw ParseError(lineno, "unknown marker section '" + name + "'");
            }
            current = &(m.*(it->second));
            current->clear();
            current_name = name;
            header_line = lineno;
            add_list(trimmed.substr(colon + 1), lineno);
            continue;
        }
        add_list(trimmed, lineno);
    }
    close_section();
    return m;
}

}  // namespace aec::annotations
