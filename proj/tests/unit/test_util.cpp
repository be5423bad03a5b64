#include <doctest.h>

#include <cstddef>
#include <vector>

#include "parc/error.hpp"
#include "parc/util.hpp"
#include "support.hpp"

using namespace parc;

namespace {

std::vector<std::byte> bytes_of(std::string_view s) {
  std::vector<std::byte> out;
  for (char c : s) out.push_back(static_cast<std::byte>(c));
  return out;
}

}  // namespace

TEST_CASE("sha256_hex matches published digests") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  // Computed with Python hashlib.
  CHECK(sha256_hex("h\xc3\xa9llo [MASK]") == "6884cd739880aee6ca6ba7a2828b62f97871272e6698655b5e577d53ad067e79");
}

TEST_CASE("crc32 uses the zlib polynomial") {
  CHECK(crc32(bytes_of("123456789")) == 0xCBF43926u);
  CHECK(crc32({}) == 0u);
  std::vector<std::byte> big;
  for (int rep = 0; rep < 1000; ++rep) {
    for (int b = 0; b < 256; ++b) big.push_back(static_cast<std::byte>(b));
  }
  CHECK(crc32(big) == 0xFC70AF1Au);  // zlib.crc32 in Python
}

TEST_CASE("utf8 validation and length") {
  CHECK(is_valid_utf8("plain"));
  CHECK(is_valid_utf8("\xd8\xa8\xdb\x81\xd8\xaa"));  // Urdu
  CHECK(is_valid_utf8("\xf0\x9f\x98\x80"));
  CHECK_FALSE(is_valid_utf8("\xc3"));              // truncated
  CHECK_FALSE(is_valid_utf8("\xc0\xaf"));          // overlong
  CHECK_FALSE(is_valid_utf8("\xed\xa0\x80"));      // surrogate
  CHECK_FALSE(is_valid_utf8("\xf4\x90\x80\x80"));  // above U+10FFFF
  CHECK_FALSE(is_valid_utf8("\x80"));
  CHECK(utf8_length("abc") == 3);
  CHECK(utf8_length("h\xc3\xa9") == 2);
  CHECK(utf8_length("\xf0\x9f\x98\x80x") == 2);
}

TEST_CASE("count_occurrences does not overlap") {
  CHECK(count_occurrences("[MASK] and [MASK]", "[MASK]") == 2);
  CHECK(count_occurrences("aaaa", "aa") == 2);
  CHECK(count_occurrences("none", "[MASK]") == 0);
}

TEST_CASE("splitmix64 matches the reference mixer") {
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFull);
  CHECK(splitmix64(1) == 0x910A2DEC89025CC1ull);
  CHECK(splitmix64(12345) == 0x22118258A9D111A0ull);
}

TEST_CASE("format_percent rounds half up to one decimal") {
  CHECK(format_percent(50.0) == "50.0");
  CHECK(format_percent(100.0 / 3.0) == "33.3");
  CHECK(format_percent(56.25) == "56.3");
  CHECK(format_percent(48.15) == "48.2");
  CHECK(format_percent(57.35) == "57.4");
  CHECK(format_percent(0.04) == "0.0");
  CHECK(format_percent(0.05) == "0.1");
  CHECK(format_percent(99.96) == "100.0");
}

TEST_CASE("read_file reports missing files as data errors") {
  CHECK_THROWS_AS(read_file("/nonexistent/parc/file"), DataError);
  const auto dir = testing::scratch_dir("util");
  testing::write_text(dir / "x.txt", std::string("a\0b", 3));
  CHECK(read_file(dir / "x.txt") == std::string("a\0b", 3));
}

TEST_CASE("error kinds map to exit codes") {
  CHECK(ConfigError("x").exit_code() == 2);
  CHECK(DataError("x").exit_code() == 3);
  CHECK(BackendError("x").exit_code() == 4);
}
