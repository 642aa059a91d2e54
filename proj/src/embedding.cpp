#include "shotlocker/embedding.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "shotlocker/error.hpp"

namespace shotlocker {
namespace {

constexpr std::array<char, 4> kMagic{'S', 'L', 'E', 'M'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const std::string& what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw Error(ErrorCode::parse, "truncated embedding file while reading " + what);
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<double> values,
                                 std::vector<RecordId> ids)
    : dim_(dim), values_(std::move(values)), ids_(std::move(ids)) {
  if (dim_ == 0) throw Error(ErrorCode::invalid_argument, "embedding dimension must be positive");
  if (values_.size() != dim_ * ids_.size()) {
    throw Error(ErrorCode::dimension_mismatch, "embedding values do not fill rows x dim");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "non-finite embedding entry");
  }
  std::unordered_set<RecordId> seen;
  for (RecordId id : ids_) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate embedding id " + std::to_string(id));
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::with_sequential_ids(std::size_t dim, std::vector<double> values) {
  const std::size_t rows = dim == 0 ? 0 : values.size() / dim;
  std::vector<RecordId> ids(rows);
  std::iota(ids.begin(), ids.end(), RecordId{0});
  return EmbeddingMatrix(dim, std::move(values), std::move(ids));
}

std::size_t EmbeddingMatrix::position_of(RecordId id) const {
  // Rows exported from a dataset file are id-ordered, so try the direct slot first.
  if (id < ids_.size() && ids_[id] == id) return static_cast<std::size_t>(id);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == id) return i;
  }
  return ids_.size();
}

EmbeddingMatrix EmbeddingMatrix::select(std::span<const RecordId> ids) const {
  std::vector<double> values;
  values.reserve(ids.size() * dim_);
  for (RecordId id : ids) {
    const auto pos = position_of(id);
    if (pos == rows()) {
      throw Error(ErrorCode::unresolved_id, "no embedding row for id " + std::to_string(id));
    }
    auto r = row(pos);
    values.insert(values.end(), r.begin(), r.end());
  }
  return EmbeddingMatrix(dim_, std::move(values), std::vector<RecordId>(ids.begin(), ids.end()));
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open embeddings " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorCode::parse, path.string() + ": bad magic, expected SLEM");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kEmbeddingFormatVersion) {
    throw Error(ErrorCode::parse, path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto count = get_le<std::uint64_t>(in, "count");
  const auto dim = get_le<std::uint32_t>(in, "dim");
  if (dim == 0) throw Error(ErrorCode::parse, path.string() + ": dim is zero");
  constexpr std::uint64_t kHeaderBytes = 4 + 4 + 8 + 4;
  const auto file_bytes = std::filesystem::file_size(path);
  if (count > (file_bytes - kHeaderBytes) / 4 / dim ||
      kHeaderBytes + count * dim * 4 != file_bytes) {
    throw Error(ErrorCode::parse, path.string() + ": size does not match count x dim header");
  }

  std::vector<double> values;
  values.reserve(count * dim);
  for (std::uint64_t i = 0; i < count * dim; ++i) {
    values.push_back(static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in, "values"))));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::parse, path.string() + ": trailing bytes after matrix");
  }
  return EmbeddingMatrix::with_sequential_ids(dim, std::move(values));
}

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    if (matrix.ids()[i] != i) {
      throw Error(ErrorCode::invalid_argument,
                  "embedding file rows must carry sequential ids starting at 0");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write embeddings " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kEmbeddingFormatVersion);
  put_le<std::uint64_t>(out, matrix.rows());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.dim()));
  for (double v : matrix.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw Error(ErrorCode::io, "failed writing embeddings " + path.string());
}

}  // namespace shotlocker
