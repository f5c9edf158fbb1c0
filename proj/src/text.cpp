#include "aec/text.hpp"

#include "aec/error.hpp"

#include <cctype>
#include <charconv>
#include <clocale>
#include <cstdio>
#include <cwctype>
#include <locale.h>

namespace aec::text {

namespace {

// glibc ships full Unicode ctype tables in C.UTF-8; fall back to ASCII rules without it.
locale_t utf8_locale() {
    static const locale_t loc = [] {
        locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
        if (l == static_cast<locale_t>(nullptr)) {
            l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(nullptr));
        }
        return l;
    }();
    return loc;
}

bool have_locale() { return utf8_locale() != static_cast<locale_t>(nullptr); }

}  // namespace

std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b0 = static_cast<unsigned char>(s[i]);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else {
            std::size_t need = 0;
            char32_t init = 0;
            if ((b0 & 0xE0) == 0xC0) {
                need = 1;
                init = b0 & 0x1F;
            } else if ((b0 & 0xF0) == 0xE0) {
                need = 2;
                init = b0 & 0x0F;
            } else if ((b0 & 0xF8) == 0xF0) {
                need = 3;
                init = b0 & 0x07;
            }
            if (need > 0 && i + need < s.size()) {
                bool ok = true;
                char32_t acc = init;
                for (std::size_t k = 1; k <= need; ++k) {
                    const auto b = static_cast<unsigned char>(s[i + k]);
                    if ((b & 0xC0) != 0x80) {
                        ok = false;
                        break;
                    }
                    acc = (acc << 6) | (b & 0x3F);
                }
                if (ok) {
                    cp = acc;
                    len = need + 1;
                }
            }
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t c : s) {
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
        } else if (c < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (c >> 6)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        } else if (c < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (c >> 12)));
            out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (c >> 18)));
            out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        }
    }
    return out;
}

bool is_alnum(char32_t c) {
    if (c < 0x80) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    }
    return have_locale() && iswalnum_l(static_cast<wint_t>(c), utf8_locale());
}

bool is_space(char32_t c) {
    if (c < 0x80) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    }
    return have_locale() && iswspace_l(static_cast<wint_t>(c), utf8_locale());
}

bool is_punct(char32_t c) {
    if (c < 0x80) {
        return c > 0x20 && c < 0x7F && !is_alnum(c);
    }
    return have_locale() && iswpunct_l(static_cast<wint_t>(c), utf8_locale()) &&
           !iswalnum_l(static_cast<wint_t>(c), utf8_locale());
}

char32_t to_lower(char32_t c) {
    if (c < 0x80) {
        return (c >= 'A' && c <= 'Z') ? c + 32 : c;
    }
    if (!have_locale()) {
        return c;
    }
    return static_cast<char32_t>(towlower_l(static_cast<wint_t>(c), utf8_locale()));
}

std::string to_lower(std::string_view s) {
    bool ascii = true;
    for (char ch : s) {
        if (static_cast<unsigned char>(ch) >= 0x80) {
            ascii = false;
            break;
        }
    }
    if (ascii) {
        std::string out(s);
        for (char& ch : out) {
            if (ch >= 'A' && ch <= 'Z') {
                ch = static_cast<char>(ch + 32);
            }
        }
        return out;
    }
    std::u32string cps = decode_utf8(s);
    for (char32_t& c : cps) {
        c = to_lower(c);
    }
    return encode_utf8(cps);
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) {
            ++i;
        }
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) {
            ++j;
        }
        if (j > i) {
            out.emplace_back(s.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

bool is_punct_token(std::string_view s) {
    if (s.empty()) {
        return false;
    }
    for (char32_t c : decode_utf8(s)) {
        if (!is_punct(c)) {
            return false;
        }
    }
    return true;
}

std::string canonicalize(std::string_view s) {
    std::u32string out;
    bool pending_space = false;
    for (char32_t c : decode_utf8(s)) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        const bool punct = is_punct(c);
        if (!out.empty() && (pending_space || punct || is_punct(out.back()))) {
            out.push_back(U' ');
        }
        pending_space = false;
        out.push_back(to_lower(c));
    }
    return encode_utf8(out);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

bool CsvReader::next(std::vector<std::string>& fields) {
    fields.clear();
    std::string line;
    if (!std::getline(in_, line)) {
        return false;
    }
    ++line_;
    record_line_ = line_;
    std::string field;
    bool in_quotes = false;
    bool was_quoted = false;
    std::size_t i = 0;
    while (true) {
        if (i >= line.size()) {
            if (in_quotes) {
                if (!std::getline(in_, line)) {
                    throw ParseError(record_line_, "unterminated quoted field");
                }
                ++line_;
                field.push_back('\n');
                i = 0;
                continue;
            }
            break;
        }
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty() && !was_quoted) {
            in_quotes = true;
            was_quoted = true;
        } else if (c == sep_) {
            fields.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else if (c == '\r' && i + 1 == line.size()) {
            // CRLF line ending
        } else {
            field.push_back(c);
        }
        ++i;
    }
    fields.push_back(std::move(field));
    return true;
}

std::string csv_escape(std::string_view field, char sep) {
    const bool needs = field.find_first_of(std::string{sep, '"', '\n', '\r'}) != std::string_view::npos;
    if (!needs) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields, char sep) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out.put(sep);
        }
        out << csv_escape(fields[i], sep);
    }
    out.put('\n');
}

}  // namespace aec::text
