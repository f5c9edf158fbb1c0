#include "aec/synthetic.hpp"

#include "aec/error.hpp"
#include "aec/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace aec::synthetic {

namespace {

using annotations::AnnotatedSentence;
using annotations::Token;

struct Word {
    const char* form;
    const char* xpos;
    const char* upos;
    const char* entity;  // nullptr when not an entity
};

// Word pools by role. None of them contains a conversation marker, so marker features
// appear only where the generator inserts them.
const Word kNouns[] = {{"flight", "NN", "NOUN", nullptr},   {"plane", "NN", "NOUN", nullptr},
                       {"bag", "NN", "NOUN", nullptr},      {"seat", "NN", "NOUN", nullptr},
                       {"crew", "NN", "NOUN", nullptr},     {"service", "NN", "NOUN", nullptr},
                       {"gate", "NN", "NOUN", nullptr},     {"ticket", "NN", "NOUN", nullptr},
                       {"delay", "NN", "NOUN", nullptr},    {"tonight", "NN", "NOUN", "TIME"},
                       {"flights", "NNS", "NOUN", nullptr}, {"bags", "NNS", "NOUN", nullptr},
                       {"minutes", "NNS", "NOUN", nullptr}, {"hours", "NNS", "NOUN", nullptr}};
const Word kVerbs[] = {{"book", "VB", "VERB", nullptr},    {"fly", "VB", "VERB", nullptr},
                       {"wait", "VB", "VERB", nullptr},    {"change", "VB", "VERB", nullptr},
                       {"waited", "VBD", "VERB", nullptr}, {"lost", "VBD", "VERB", nullptr},
                       {"delayed", "VBN", "VERB", nullptr}, {"made", "VBD", "VERB", nullptr}};
const Word kAdjectives[] = {{"great", "JJ", "ADJ", nullptr},    {"bad", "JJ", "ADJ", nullptr},
                            {"awesome", "JJ", "ADJ", nullptr},  {"late", "JJ", "ADJ", nullptr},
                            {"terrible", "JJ", "ADJ", nullptr}, {"happy", "JJ", "ADJ", nullptr},
                            {"angry", "JJ", "ADJ", nullptr},    {"compassionate", "JJ", "ADJ", nullptr}};
const Word kAdverbs[] = {{"now", "RB", "ADV", nullptr}, {"not", "RB", "PART", nullptr},
                         {"really", "RB", "ADV", nullptr}, {"again", "RB", "ADV", nullptr}};
const Word kProper[] = {{"Boston", "NNP", "PROPN", "GPE"}, {"Denver", "NNP", "PROPN", "GPE"},
                        {"Skyways", "NNP", "PROPN", "ORG"}, {"Monday", "NNP", "PROPN", "DATE"}};
const Word kNumbers[] = {{"90", "CD", "NUM", "CARDINAL"}, {"2", "CD", "NUM", "CARDINAL"},
                         {"three", "CD", "NUM", "CARDINAL"}};
const Word kMarkerNoise[] = {{"you", "PRP", "PRON", nullptr}, {"thanks", "UH", "INTJ", nullptr},
                             {"hello", "UH", "INTJ", nullptr}, {"no", "UH", "INTJ", nullptr},
                             {"!", ".", "PUNCT", nullptr},      {"?", ".", "PUNCT", nullptr}};
const Word kStarters[] = {{"can", "MD", "AUX", nullptr}, {"did", "VBD", "AUX", nullptr},
                          {"what", "WP", "PRON", nullptr}, {"where", "WRB", "ADV", nullptr}};

const char* kLexicon =
    "great\tjoy\t1\ngreat\tpositive\t1\ngreat\ttrust\t1\ngreat\tanger\t0\n"
    "bad\tnegative\t1\nbad\tsadness\t1\nbad\tjoy\t0\n"
    "awesome\tjoy\t1\nawesome\tpositive\t1\nawesome\tsurprise\t1\n"
    "late\tnegative\t1\nlate\tanticipation\t0\n"
    "terrible\tanger\t1\nterrible\tdisgust\t1\nterrible\tfear\t1\nterrible\tnegative\t1\n"
    "happy\tanticipation\t1\nhappy\tjoy\t1\nhappy\tpositive\t1\nhappy\ttrust\t1\n"
    "angry\tanger\t1\nangry\tnegative\t1\n"
    "compassionate\tpositive\t1\ncompassionate\ttrust\t1\n"
    "delay\tnegative\t1\ndelay\tanticipation\t1\n"
    "lost\tsadness\t1\nlost\tnegative\t1\n"
    "crew\ttrust\t1\ncrew\tjoy\t0\n";

const std::vector<std::string> kSchema{"negative", "neutral", "positive"};

template <std::size_t N>
const Word& pick(const Word (&pool)[N], Rng& rng) {
    return pool[rng.below(N)];
}

std::string deprel_for(const Word& w, Rng& rng) {
    const std::string x = w.xpos;
    if (x == "JJ") {
        return "amod";
    }
    if (x == "RB") {
        return std::string(w.form) == "not" ? "neg" : "advmod";
    }
    if (x == "CD") {
        return "nummod";
    }
    if (x == "NN" || x == "NNS") {
        static const char* opts[] = {"nsubj", "dobj", "compound", "pobj"};
        return opts[rng.below(4)];
    }
    if (x == "NNP") {
        return rng.bernoulli(0.5) ? "compound" : "nsubj";
    }
    if (x == "PRP") {
        return "nsubj";
    }
    if (x == "UH") {
        return "intj";
    }
    if (x == ".") {
        return "punct";
    }
    if (x == "MD" || x == "WP" || x == "WRB") {
        return "aux";
    }
    return "xcomp";
}

AnnotatedSentence make_sentence(const std::string& id, bool with_marker, const std::string& marker,
                                Rng& rng) {
    std::vector<Word> words;
    if (rng.bernoulli(0.6)) {
        words.push_back({"@skyways", "NNP", "PROPN", nullptr});
    }
    if (rng.bernoulli(0.25)) {
        words.push_back(pick(kStarters, rng));
    }
    const std::size_t body = 3 + static_cast<std::size_t>(rng.below(8));
    for (std::size_t i = 0; i < body; ++i) {
        const auto roll = rng.below(100);
        if (roll < 30) {
            words.push_back(pick(kNouns, rng));
        } else if (roll < 50) {
            words.push_back(pick(kVerbs, rng));
        } else if (roll < 68) {
            words.push_back(pick(kAdjectives, rng));
        } else if (roll < 78) {
            words.push_back(pick(kAdverbs, rng));
        } else if (roll < 86) {
            words.push_back(pick(kProper, rng));
        } else if (roll < 92) {
            words.push_back(pick(kNumbers, rng));
        } else {
            words.push_back(pick(kMarkerNoise, rng));
        }
    }
    if (with_marker) {
        const std::size_t at = std::min(words.size(), static_cast<std::size_t>(1 + rng.below(words.size())));
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), Word{marker.c_str(), "UH", "INTJ", nullptr});
    }
    if (rng.bernoulli(0.5)) {
        words.push_back({".", ".", "PUNCT", nullptr});
    }

    AnnotatedSentence s;
    s.instance_id = id;
    s.comments.push_back(" sent_id = " + id);
    const int n = static_cast<int>(words.size());
    int root = 1;
    for (int i = 1; i <= n; ++i) {
        const std::string x = words[static_cast<std::size_t>(i - 1)].xpos;
        if (x.rfind("VB", 0) == 0) {
            root = i;
            break;
        }
    }
    std::string sentence_text;
    for (int i = 1; i <= n; ++i) {
        const Word& w = words[static_cast<std::size_t>(i - 1)];
        Token t;
        t.index = i;
        t.form = w.form;
        t.lemma = w.form;
        t.upos = w.upos;
        t.xpos = std::string(w.xpos);
        if (i == root) {
            t.head = 0;
            t.deprel = "root";
        } else {
            // Heads point at the root or an earlier token, which keeps the graph a tree.
            std::vector<int> options{root};
            for (int j = 1; j < i; ++j) {
                if (j != root) {
                    options.push_back(j);
                }
            }
            t.head = rng.bernoulli(0.5) ? root : options[rng.below(options.size())];
            t.deprel = deprel_for(w, rng);
        }
        if (w.entity) {
            t.entity = std::string(w.entity);
            t.misc = "NER=" + std::string(w.entity);
        }
        s.tokens.push_back(std::move(t));
        sentence_text += (sentence_text.empty() ? "" : " ") + std::string(w.form);
    }
    s.comments.push_back(" text = " + sentence_text);
    return s;
}

std::string text_of(const AnnotatedSentence& s) {
    std::string out;
    for (const auto& t : s.tokens) {
        out += (out.empty() ? "" : " ") + t.form;
    }
    return out;
}

features::FeatureName feature_for_marker(const std::string& marker,
                                         const annotations::ConversationMarkers& m) {
    auto in = [&](const std::vector<std::string>& list) {
        return std::find(list.begin(), list.end(), marker) != list.end();
    };
    using features::Namespace;
    if (in(m.apology)) {
        return {Namespace::Conv, "apology"};
    }
    if (in(m.greetings)) {
        return {Namespace::Conv, "greeting"};
    }
    if (in(m.thanks)) {
        return {Namespace::Conv, "thanks"};
    }
    if (in(m.second_person)) {
        return {Namespace::Conv, "second_person"};
    }
    if (in(m.standalone)) {
        return {Namespace::Conv, marker};
    }
    throw DomainError("planted marker '" + marker + "' is not a conversation marker");
}

}  // namespace

SyntheticCorpus generate(const SyntheticConfig& cfg) {
    if (cfg.n_instances < 10) {
        throw DomainError("synthetic corpus needs at least 10 instances");
    }
    SyntheticCorpus out;
    out.markers = annotations::default_markers();
    out.planted_feature = feature_for_marker(cfg.planted_marker, out.markers);
    out.lexicon_text = kLexicon;
    {
        std::istringstream in(out.lexicon_text);
        out.lexicon = annotations::load_emotion_lexicon(in);
    }

    Rng rng(cfg.seed);
    std::vector<corpus::Instance> instances;
    for (std::size_t i = 0; i < cfg.n_instances; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "t%05zu", i + 1);
        const bool is_error = rng.bernoulli(cfg.error_rate);
        const bool marker = rng.bernoulli(is_error ? cfg.p_marker_given_error : cfg.p_marker_given_correct);
        AnnotatedSentence s = make_sentence(id, marker, cfg.planted_marker, rng);

        const std::size_t gold = static_cast<std::size_t>(rng.below(kSchema.size()));
        std::size_t predicted = gold;
        if (is_error) {
            predicted = (gold + 1 + static_cast<std::size_t>(rng.below(kSchema.size() - 1))) % kSchema.size();
        }
        // Confidence in (0.5, 0.98) keeps the predicted class the strict argmax.
        const double confidence = 0.5 + 0.48 * rng.uniform() + 1e-6;
        const double share = rng.uniform();
        std::vector<double> probs(kSchema.size(), 0.0);
        probs[predicted] = confidence;
        const std::size_t other_a = (predicted + 1) % kSchema.size();
        const std::size_t other_b = (predicted + 2) % kSchema.size();
        probs[other_a] = (1.0 - confidence) * share;
        probs[other_b] = 1.0 - confidence - probs[other_a];

        instances.push_back({id, text_of(s), kSchema[gold], std::nullopt});
        out.sentences.push_back(std::move(s));
        out.predictions.push_back(base::make_prediction(id, std::move(probs), kSchema));
        out.planted_error.push_back(is_error);
    }
    out.dataset = corpus::Dataset(kSchema, std::move(instances));

    // Dataset I: short reviews whose sentiment words track the label.
    const char* neg_words[] = {"bad", "terrible", "late", "angry", "awful"};
    const char* neu_words[] = {"flight", "gate", "ticket", "seat", "monday"};
    const char* pos_words[] = {"great", "awesome", "happy", "lovely", "compassionate"};
    std::vector<corpus::Instance> base;
    for (std::size_t i = 0; i < cfg.n_base_instances; ++i) {
        const std::size_t label = i % kSchema.size();
        const char* const* pool = label == 0 ? neg_words : (label == 1 ? neu_words : pos_words);
        std::string textv = "the";
        const std::size_t len = 2 + static_cast<std::size_t>(rng.below(4));
        for (std::size_t k = 0; k < len; ++k) {
            textv += " ";
            textv += pool[rng.below(5)];
            if (rng.bernoulli(0.3)) {
                textv += " ";
                textv += neu_words[rng.below(5)];
            }
        }
        char id[32];
        std::snprintf(id, sizeof(id), "b%05zu", i + 1);
        base.push_back({id, textv, kSchema[label], std::nullopt});
    }
    out.base_train = corpus::Dataset(kSchema, std::move(base));
    return out;
}

void write_fixture(const SyntheticCorpus& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) {
            throw FormatError("cannot write " + (dir / name).string());
        }
        return f;
    };
    corpus::ColumnFormat fmt;
    {
        auto f = open("dataset_i.csv");
        corpus::write_dataset(f, c.base_train, fmt);
    }
    {
        auto f = open("dataset_ii.csv");
        corpus::write_dataset(f, c.dataset, fmt);
    }
    {
        auto f = open("annotations.conllu");
        annotations::serialize_conllu(f, c.sentences);
    }
    {
        auto f = open("lexicon.txt");
        f << c.lexicon_text;
    }
    {
        auto f = open("markers.txt");
        auto section = [&](const char* name, const std::vector<std::string>& items) {
            f << name << ":\n";
            for (const auto& item : items) {
                f << item << '\n';
            }
            f << '\n';
        };
        section("greetings", c.markers.greetings);
        section("thanks", c.markers.thanks);
        section("apology", c.markers.apology);
        section("second_person", c.markers.second_person);
        section("yesno_starters", c.markers.yesno_starters);
        section("wh_starters", c.markers.wh_starters);
        section("standalone", c.markers.standalone);
    }
    {
        auto f = open("predictions.jsonl");
        base::export_predictions(f, c.predictions);
    }
    {
        nlohmann::json cfg;
        cfg["paths"] = {{"base_dataset", "dataset_i.csv"}, {"eval_dataset", "dataset_ii.csv"},
                        {"annotations", "annotations.conllu"}, {"lexicon", "lexicon.txt"},
                        {"markers", "markers.txt"},             {"predictions", "predictions.jsonl"},
                        {"output_dir", "out"}};
        cfg["schema"] = c.dataset.schema();
        cfg["split"] = {{"train_ratio", 0.8}};
        cfg["evaluation"] = {{"ks", {10, 20, 30, 40, 50}}};
        cfg["seeds"] = {{"split", 11}, {"undersample", 13}, {"base", 17}, {"forest", 19}};
        auto f = open("config.json");
        f << cfg.dump(2) << '\n';
    }
}

}  // namespace aec::synthetic
