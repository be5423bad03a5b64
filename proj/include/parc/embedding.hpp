#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace parc {

// Row-normalized sentence embeddings, id-aligned with a corpus. Immutable
// once built; rows keep their insertion order.
class EmbeddingIndex {
 public:
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  // Row-major payload, size() * dim() floats.
  std::span<const float> data() const { return data_; }

  std::optional<std::size_t> position(std::string_view id) const;

  friend bool operator==(const EmbeddingIndex& a, const EmbeddingIndex& b);

 private:
  friend EmbeddingIndex build_index(std::vector<std::string>, std::span<const float>, std::size_t);
  friend EmbeddingIndex decode_index(std::string_view);

  EmbeddingIndex(std::size_t dim, std::vector<std::string> ids, std::vector<float> data);

  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Maximum allowed deviation of a stored row norm from 1.
inline constexpr double kUnitNormTolerance = 1e-5;

// L2-normalizes v (norm accumulated in double). Throws DataError on a zero or
// non-finite vector.
std::vector<float> normalize(std::span<const float> v);

// Builds an index from a row-major matrix of `ids.size()` rows of `dim` floats.
EmbeddingIndex build_index(std::vector<std::string> ids, std::span<const float> raw, std::size_t dim);
EmbeddingIndex build_index(std::vector<std::string> ids, const std::vector<std::vector<float>>& rows);

// Binary format: "PARCIDX1", u32 dim, u32 count, count x (u32 len, UTF-8 id),
// count*dim float32 payload, u32 CRC32 of the payload. All little-endian.
std::string encode_index(const EmbeddingIndex& index);
EmbeddingIndex decode_index(std::string_view bytes);
void save_index(const EmbeddingIndex& index, const std::filesystem::path& path);
EmbeddingIndex load_index(const std::filesystem::path& path);

// TSV ingestion: "id<TAB>v1,v2,..." per line.
EmbeddingIndex parse_tsv_index(std::string_view text);
EmbeddingIndex load_tsv_index(const std::filesystem::path& path);

// Loads either format, sniffing the magic bytes.
EmbeddingIndex load_any_index(const std::filesystem::path& path);

}  // namespace parc
