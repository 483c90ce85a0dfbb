#include <filesystem>

#include "corvid/io.hpp"
#include "support.hpp"

using namespace corvid;
using testing::throws_kind;

TEST_CASE("base64 round trip over every byte value") {
    std::string bytes;
    for (int i = 0; i < 256; ++i) bytes += static_cast<char>(i);
    for (std::size_t n = 0; n <= bytes.size(); n += 37) {
        auto s = bytes.substr(0, n);
        CHECK(io::base64_decode(io::base64_encode(s)) == s);
    }
    CHECK(io::base64_encode("Man") == "TWFu");
    CHECK(io::base64_encode("Ma") == "TWE=");
    CHECK(throws_kind([] { io::base64_decode("T!Fu"); }, ErrorKind::SchemaError));
}

TEST_CASE("strict number parsing") {
    CHECK(io::parse_int("42", "x") == 42);
    CHECK(io::parse_double("0.25", "x") == 0.25);
    CHECK(throws_kind([] { io::parse_int("4x", "x"); }, ErrorKind::SchemaError));
    CHECK(throws_kind([] { io::parse_double("", "x"); }, ErrorKind::SchemaError));
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678})
        CHECK(io::parse_double(io::format_double(v), "x") == v);
}

TEST_CASE("lines and csv splitting") {
    auto ls = io::lines("a,b\r\nc\n\n");
    REQUIRE(ls.size() == 2);
    CHECK(ls[0] == "a,b");
    CHECK(io::split_csv_line("1,,x").size() == 3);
}

TEST_CASE("atomic write replaces content and leaves no temp files") {
    auto dir = std::filesystem::temp_directory_path() / "corvid_io_test";
    std::filesystem::remove_all(dir);
    io::write_atomic(dir / "sub" / "f.txt", "one");
    io::write_atomic(dir / "sub" / "f.txt", "two");
    CHECK(io::read_text(dir / "sub" / "f.txt") == "two");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir / "sub")) ++files;
    CHECK(files == 1);
    CHECK(throws_kind([&] { io::read_text(dir / "missing"); }, ErrorKind::IoError));
    std::filesystem::remove_all(dir);
}
