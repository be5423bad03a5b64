#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace parc {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

// CRC-32 (zlib polynomial) over raw bytes.
std::uint32_t crc32(std::span<const std::byte> bytes);

bool is_valid_utf8(std::string_view text);

// Number of code points in a valid UTF-8 string.
std::size_t utf8_length(std::string_view text);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

// Whole-file read; throws DataError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// 64-bit mixer used to derive independent per-item seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Percent rendering with one decimal, round-half-up ("33.3", "57.4").
std::string format_percent(double value);

}  // namespace parc
