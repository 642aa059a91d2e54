#pragma once

#include <span>
#include <utility>

#include "shotlocker/embedding.hpp"
#include "shotlocker/geometry.hpp"

// Data-parallel building blocks. `serial` is the reference implementation;
// `omp` computes every output element with the same arithmetic, so results
// are bitwise identical and tests compare the two directly.
namespace shotlocker::kernels {

struct ColumnMoments {
  Vector mean;
  Vector std;  // unbiased, unfloored
};

namespace serial {

void distances(MeasureKind kind, std::span<const double> query, const EmbeddingMatrix& rows,
               std::span<double> out);
ColumnMoments column_moments(const EmbeddingMatrix& rows);
EmbeddingMatrix prepare_rows(const Measure& m, const Standardizer* s, const EmbeddingMatrix& rows);

}  // namespace serial

namespace omp {

void distances(MeasureKind kind, std::span<const double> query, const EmbeddingMatrix& rows,
               std::span<double> out);
ColumnMoments column_moments(const EmbeddingMatrix& rows);
EmbeddingMatrix prepare_rows(const Measure& m, const Standardizer* s, const EmbeddingMatrix& rows);

}  // namespace omp

int max_threads();

}  // namespace shotlocker::kernels
