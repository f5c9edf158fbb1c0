#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aec/error.hpp"
#include "aec/text.hpp"

#include <sstream>

using namespace aec::text;

TEST_CASE("utf8 round trip and case folding") {
    const std::string s = "Café ÉCLAIR naïve 😀";
    CHECK(encode_utf8(decode_utf8(s)) == s);
    CHECK(to_lower(s) == "café éclair naïve 😀");
    CHECK(decode_utf8("\xff").size() == 1);
    CHECK(decode_utf8("\xff")[0] == U'�');
}

TEST_CASE("character classes") {
    CHECK(is_alnum(U'é'));
    CHECK(is_alnum(U'7'));
    CHECK_FALSE(is_alnum(U'!'));
    CHECK(is_punct_token("?!"));
    CHECK(is_punct_token("..."));
    CHECK_FALSE(is_punct_token("a."));
    CHECK_FALSE(is_punct_token(""));
}

TEST_CASE("canonicalize") {
    CHECK(canonicalize("Great Movie!") == "great movie !");
    CHECK(canonicalize("  great   movie ! ") == "great movie !");
    CHECK(canonicalize("a,b") == "a , b");
}

TEST_CASE("split helpers") {
    CHECK(split("a\tb\t\tc", '\t') == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(split_ws("  a  b\tc ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(trim("\t x \n") == "x");
}

TEST_CASE("number formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_fixed(0.60090, 4) == "0.6009");
    CHECK(format_fixed(2.0 / 3.0, 3) == "0.667");
}

TEST_CASE("csv reader handles quotes and embedded newlines") {
    std::istringstream in("id,text\n1,\"hello, \"\"world\"\"\"\n2,\"two\nlines\"\n3,plain\n");
    CsvReader r(in);
    std::vector<std::string> f;
    REQUIRE(r.next(f));
    CHECK(f == std::vector<std::string>{"id", "text"});
    REQUIRE(r.next(f));
    CHECK(f[1] == "hello, \"world\"");
    REQUIRE(r.next(f));
    CHECK(f[1] == "two\nlines");
    CHECK(r.record_line() == 3);
    REQUIRE(r.next(f));
    CHECK(r.record_line() == 5);
    CHECK_FALSE(r.next(f));
}

TEST_CASE("csv reader rejects an unterminated quote") {
    std::istringstream in("a,\"open\n");
    CsvReader r(in);
    std::vector<std::string> f;
    CHECK_THROWS_AS(r.next(f), aec::ParseError);
}

TEST_CASE("csv writer escapes what it must") {
    std::ostringstream out;
    write_csv_row(out, {"a", "b,c", "say \"hi\"", "x\ny"});
    CHECK(out.str() == "a,\"b,c\",\"say \"\"hi\"\"\",\"x\ny\"\n");
    std::istringstream in(out.str());
    CsvReader r(in);
    std::vector<std::string> f;
    REQUIRE(r.next(f));
    CHECK(f == std::vector<std::string>{"a", "b,c", "say \"hi\"", "x\ny"});
}
