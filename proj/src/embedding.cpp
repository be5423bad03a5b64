#include "parc/embedding.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "parc/error.hpp"
#include "parc/util.hpp"

namespace parc {

namespace {

constexpr std::string_view kMagic = "PARCIDX1";

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw DataError(std::string("index file truncated in ") + what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

EmbeddingIndex::EmbeddingIndex(std::size_t dim, std::vector<std::string> ids, std::vector<float> data)
    : dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
  by_id_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!by_id_.emplace(ids_[i], i).second) throw DataError("duplicate id \"" + ids_[i] + "\"");
  }
}

std::optional<std::size_t> EmbeddingIndex::position(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

bool operator==(const EmbeddingIndex& a, const EmbeddingIndex& b) {
  if (a.dim_ != b.dim_ || a.ids_ != b.ids_ || a.data_.size() != b.data_.size()) return false;
  // Bitwise, so that -0.0f / NaN payload differences are visible.
  return std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

std::vector<float> normalize(std::span<const float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  if (!std::isfinite(sq)) throw DataError("degenerate vector: non-finite component");
  if (sq == 0.0) throw DataError("degenerate vector: zero norm");
  const double norm = std::sqrt(sq);
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

EmbeddingIndex build_index(std::vector<std::string> ids, std::span<const float> raw, std::size_t dim) {
  if (dim == 0) throw DataError("embedding dimension must be positive");
  if (ids.empty()) throw DataError("cannot build an empty index");
  if (raw.size() != ids.size() * dim) {
    throw DataError("dimension mismatch: " + std::to_string(raw.size()) + " floats for " +
                    std::to_string(ids.size()) + " ids of dim " + std::to_string(dim));
  }
  std::vector<float> data;
  data.reserve(raw.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    try {
      auto row = normalize(raw.subspan(i * dim, dim));
      data.insert(data.end(), row.begin(), row.end());
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(i) + " (\"" + ids[i] + "\"): " + e.what());
    }
  }
  return EmbeddingIndex(dim, std::move(ids), std::move(data));
}

EmbeddingIndex build_index(std::vector<std::string> ids, const std::vector<std::vector<float>>& rows) {
  if (ids.size() != rows.size()) {
    throw DataError("id count " + std::to_string(ids.size()) + " != row count " +
                    std::to_string(rows.size()));
  }
  if (rows.empty()) throw DataError("cannot build an empty index");
  const std::size_t dim = rows.front().size();
  std::vector<float> flat;
  flat.reserve(rows.size() * dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) {
      throw DataError("dimension mismatch: row " + std::to_string(i) + " has dim " +
                      std::to_string(rows[i].size()) + ", expected " + std::to_string(dim));
    }
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return build_index(std::move(ids), flat, dim);
}

std::string encode_index(const EmbeddingIndex& index) {
  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(index.dim()));
  put_u32(out, static_cast<std::uint32_t>(index.size()));
  for (const auto& id : index.ids()) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out += id;
  }
  const std::size_t payload_start = out.size();
  for (float f : index.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  const auto payload = std::as_bytes(std::span(out).subspan(payload_start));
  put_u32(out, crc32(payload));
  return out;
}

EmbeddingIndex decode_index(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("not an index file: bad magic bytes");
  }
  r.take(kMagic.size(), "magic");
  const std::uint32_t dim = r.u32("header");
  const std::uint32_t count = r.u32("header");
  if (dim == 0) throw DataError("index header has zero dimension");
  std::vector<std::string> ids;
  ids.reserve(std::min<std::size_t>(count, r.remaining() / 4));
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.u32("ids block");
    auto id = r.take(len, "ids block");
    if (!is_valid_utf8(id)) throw DataError("index id " + std::to_string(i) + " is not valid UTF-8");
    ids.emplace_back(id);
  }
  const std::size_t n = static_cast<std::size_t>(count) * dim;
  if (r.remaining() / 4 < n) throw DataError("index file truncated in payload");
  const auto payload = r.take(n * 4, "payload");
  const auto stored_crc = r.u32("checksum");
  if (r.remaining() != 0) throw DataError("trailing bytes after index checksum");
  if (crc32(std::as_bytes(std::span(payload.data(), payload.size()))) != stored_crc) {
    throw DataError("index checksum mismatch");
  }
  std::vector<float> data(n);
  Reader pr(payload);
  for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<float>(pr.u32("payload"));
  for (std::size_t row = 0; row < count; ++row) {
    double sq = 0.0;
    for (std::size_t c = 0; c < dim; ++c) sq += static_cast<double>(data[row * dim + c]) * data[row * dim + c];
    if (!(std::abs(std::sqrt(sq) - 1.0) <= kUnitNormTolerance)) {
      throw DataError("index row " + std::to_string(row) + " is not unit-norm");
    }
  }
  return EmbeddingIndex(dim, std::move(ids), std::move(data));
}

void save_index(const EmbeddingIndex& index, const std::filesystem::path& path) {
  const auto bytes = encode_index(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write index file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to index file: " + path.string());
}

EmbeddingIndex load_index(const std::filesystem::path& path) {
  try {
    return decode_index(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

EmbeddingIndex parse_tsv_index(std::string_view text) {
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw DataError("line " + std::to_string(line_no) + ": expected id<TAB>values");
    }
    ids.emplace_back(line.substr(0, tab));
    std::vector<float> row;
    auto values = line.substr(tab + 1);
    while (true) {
      const auto comma = values.find(',');
      auto field = values.substr(0, comma);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      float f = 0.0f;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), f);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw DataError("line " + std::to_string(line_no) + ": bad float \"" + std::string(field) + "\"");
      }
      row.push_back(f);
      if (comma == std::string_view::npos) break;
      values.remove_prefix(comma + 1);
    }
    rows.push_back(std::move(row));
  }
  return build_index(std::move(ids), rows);
}

EmbeddingIndex load_tsv_index(const std::filesystem::path& path) {
  try {
    return parse_tsv_index(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

EmbeddingIndex load_any_index(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    if (bytes.compare(0, kMagic.size(), kMagic) == 0) return decode_index(bytes);
    return parse_tsv_index(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace parc
