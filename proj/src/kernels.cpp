#include "shotlocker/kernels.hpp"

#include <cmath>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "first_error.hpp"
#include "shotlocker/error.hpp"

namespace shotlocker::kernels {
namespace {

using detail::FirstError;

void check_shapes(std::span<const double> query, const EmbeddingMatrix& rows,
                  std::span<double> out) {
  if (query.size() != rows.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "query dim " + std::to_string(query.size()) +
                                                   " vs index dim " + std::to_string(rows.dim()));
  }
  if (out.size() != rows.rows()) {
    throw Error(ErrorCode::invalid_argument, "distance output has wrong length");
  }
}

void column_moment(const EmbeddingMatrix& rows, std::size_t j, ColumnMoments& m) {
  const std::size_t n = rows.rows();
  const std::size_t d = rows.dim();
  const auto& values = rows.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += values[i * d + j];
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = values[i * d + j] - mean;
    ss += dev * dev;
  }
  m.mean[j] = mean;
  m.std[j] = std::sqrt(ss / static_cast<double>(n - 1));
}

ColumnMoments empty_moments(const EmbeddingMatrix& rows) {
  if (rows.rows() < 2) {
    throw Error(ErrorCode::insufficient_data, "column moments need at least 2 rows");
  }
  return {Vector(rows.dim(), 0.0), Vector(rows.dim(), 0.0)};
}

void prepare_row(const Measure& m, const Standardizer* s, EmbeddingMatrix& out, std::size_t i) {
  auto prepared = prepare_vector(m, s, out.row(i));
  std::copy(prepared.begin(), prepared.end(), out.mutable_row(i).begin());
}

}  // namespace

namespace serial {

void distances(MeasureKind kind, std::span<const double> query, const EmbeddingMatrix& rows,
               std::span<double> out) {
  check_shapes(query, rows, out);
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = base_distance(kind, query, rows.row(i));
}

ColumnMoments column_moments(const EmbeddingMatrix& rows) {
  auto m = empty_moments(rows);
  for (std::size_t j = 0; j < rows.dim(); ++j) column_moment(rows, j, m);
  return m;
}

EmbeddingMatrix prepare_rows(const Measure& m, const Standardizer* s, const EmbeddingMatrix& rows) {
  EmbeddingMatrix out = rows;
  for (std::size_t i = 0; i < out.rows(); ++i) prepare_row(m, s, out, i);
  return out;
}

}  // namespace serial

namespace omp {

void distances(MeasureKind kind, std::span<const double> query, const EmbeddingMatrix& rows,
               std::span<double> out) {
  check_shapes(query, rows, out);
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
  FirstError error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = base_distance(kind, query, rows.row(i));
    } catch (...) {
      error.capture(static_cast<std::size_t>(i));
    }
  }
  error.rethrow();
}

ColumnMoments column_moments(const EmbeddingMatrix& rows) {
  auto m = empty_moments(rows);
  const auto d = static_cast<std::ptrdiff_t>(rows.dim());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < d; ++j) column_moment(rows, static_cast<std::size_t>(j), m);
  return m;
}

EmbeddingMatrix prepare_rows(const Measure& m, const Standardizer* s, const EmbeddingMatrix& rows) {
  if (m.standardize_first && s == nullptr) {
    throw Error(ErrorCode::invalid_argument, "measure requires a fitted standardizer");
  }
  EmbeddingMatrix out = rows;
  const auto n = static_cast<std::ptrdiff_t>(out.rows());
  FirstError error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      prepare_row(m, s, out, static_cast<std::size_t>(i));
    } catch (...) {
      error.capture(static_cast<std::size_t>(i));
    }
  }
  error.rethrow();
  return out;
}

}  // namespace omp

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace shotlocker::kernels
