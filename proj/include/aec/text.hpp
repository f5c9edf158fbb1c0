#pragma once

// Small UTF-8 and delimited-text helpers shared by the readers and extractors.

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace aec::text {

/// Decodes UTF-8; invalid bytes decode to U+FFFD so callers never fail on bad input.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

bool is_alnum(char32_t c);
bool is_space(char32_t c);
/// Unicode punctuation or symbol.
bool is_punct(char32_t c);
char32_t to_lower(char32_t c);

/// Unicode-aware lowercasing.
std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
/// Splits on runs of ASCII whitespace, dropping empty fields.
std::vector<std::string> split_ws(std::string_view s);

/// True when every code point is punctuation or a symbol.
bool is_punct_token(std::string_view s);

/// Lowercase, space-separate punctuation, collapse whitespace.
std::string canonicalize(std::string_view s);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);
/// Fixed-point rendering with `decimals` digits.
std::string format_fixed(double v, int decimals);

/// RFC 4180 CSV: quoted fields may contain separators, quotes ("") and newlines.
class CsvReader {
public:
    explicit CsvReader(std::istream& in, char sep = ',') : in_(in), sep_(sep) {}

    /// Reads the next record; returns false at end of input. Throws ParseError on an
    /// unterminated quote.
    bool next(std::vector<std::string>& fields);
    /// Physical line on which the last returned record started (1-based).
    std::size_t record_line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    char sep_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
};

std::string csv_escape(std::string_view field, char sep = ',');
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields, char sep = ',');

}  // namespace aec::text
