#include "newstrust/errors.hpp"
#include "newstrust/util.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace newstrust;

TEST_CASE("fnv1a64 matches published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("sha256_hex matches FIPS 180-2 vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("timestamps round-trip with millisecond precision") {
    const auto t = parse_timestamp("2023-05-04T12:30:00.125Z");
    CHECK(format_timestamp(t) == "2023-05-04T12:30:00.125Z");
    CHECK(format_timestamp(parse_timestamp("2023-05-15T00:00:00Z")) == "2023-05-15T00:00:00.000Z");
    CHECK(format_timestamp(Timestamp{}) == "1970-01-01T00:00:00.000Z");
    CHECK_THROWS_AS(parse_timestamp("yesterday"), ValidationError);
}

TEST_CASE("uuid4 has canonical form and is unique") {
    std::set<std::string> seen;
    for (int i = 0; i < 100; ++i) {
        const auto u = uuid4();
        REQUIRE(u.size() == 36);
        CHECK(u[8] == '-');
        CHECK(u[14] == '4');
        CHECK(std::string("89ab").find(u[19]) != std::string::npos);
        seen.insert(u);
    }
    CHECK(seen.size() == 100);
}

TEST_CASE("file helpers") {
    const auto dir = std::filesystem::temp_directory_path() / ("newstrust-util-" + uuid4());
    const auto p = dir / "nested" / "f.txt";
    write_file(p, std::string("a\0b", 3));
    CHECK(read_file(p) == std::string("a\0b", 3));
    CHECK_THROWS_AS(read_file(dir / "missing"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("string helpers") {
    CHECK(to_lower_ascii("AbC-Ü") == "abc-Ü");
    CHECK(trim("  \t x y \n") == "x y");
    CHECK(trim("   ") == "");
}
