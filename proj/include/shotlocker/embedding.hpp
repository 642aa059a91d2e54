#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "shotlocker/types.hpp"

namespace shotlocker {

/// N x D row-major matrix of sentence embeddings, row i aligned to ids[i].
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t dim, std::vector<double> values, std::vector<RecordId> ids);

  /// Rows get ids 0..N-1, matching the order of the dataset file they were exported from.
  static EmbeddingMatrix with_sequential_ids(std::size_t dim, std::vector<double> values);

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::span<double> mutable_row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<RecordId>& ids() const { return ids_; }

  /// Row position of a record id, or rows() if absent.
  std::size_t position_of(RecordId id) const;

  /// Keeps only the listed ids, in the order given.
  EmbeddingMatrix select(std::span<const RecordId> ids) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::vector<RecordId> ids_;
};

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

/// Binary little-endian layout: "SLEM", u32 version, u64 count, u32 dim,
/// count*dim float32 row-major. Row i is record id i.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

}  // namespace shotlocker
