#include "shotlocker/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "shotlocker/error.hpp"
#include "shotlocker/kernels.hpp"

namespace shotlocker {
namespace {

void require_same_dim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::dimension_mismatch, "dimension mismatch: " + std::to_string(u.size()) +
                                                   " vs " + std::to_string(v.size()));
  }
}

}  // namespace

Vector mean_pool(std::span<const double> token_vectors, std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::invalid_argument, "pooling dimension must be positive");
  if (token_vectors.empty()) throw Error(ErrorCode::empty_input, "cannot pool zero token vectors");
  if (token_vectors.size() % dim != 0) {
    throw Error(ErrorCode::dimension_mismatch, "token matrix is not a whole number of rows");
  }
  const std::size_t count = token_vectors.size() / dim;
  Vector mean(dim, 0.0);
  for (std::size_t t = 0; t < count; ++t) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += token_vectors[t * dim + j];
  }
  for (double& m : mean) m /= static_cast<double>(count);
  return mean;
}

double dot(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return sum;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double euclidean_distance(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u, v);
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) {
    throw Error(ErrorCode::degenerate_vector, "cosine distance of a zero-norm vector");
  }
  return std::clamp(1.0 - uv / (std::sqrt(uu) * std::sqrt(vv)), 0.0, 2.0);
}

Vector l2_normalize(std::span<const double> v) {
  const double norm = l2_norm(v);
  if (norm == 0.0) throw Error(ErrorCode::degenerate_vector, "cannot normalize a zero vector");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

Standardizer::Standardizer(Vector mean, Vector std, double epsilon)
    : mean_(std::move(mean)), std_(std::move(std)), epsilon_(epsilon) {
  if (!(epsilon_ > 0.0)) throw Error(ErrorCode::invalid_argument, "epsilon must be positive");
  if (mean_.size() != std_.size()) {
    throw Error(ErrorCode::dimension_mismatch, "standardizer mean/std length differ");
  }
  for (double& s : std_) s = std::max(s, epsilon_);
}

Standardizer Standardizer::identity(std::size_t dim) {
  return Standardizer(Vector(dim, 0.0), Vector(dim, 1.0));
}

Vector Standardizer::apply(std::span<const double> v) const {
  Vector out(v.begin(), v.end());
  apply_in_place(out);
  return out;
}

void Standardizer::apply_in_place(std::span<double> v) const {
  if (v.size() != mean_.size()) {
    throw Error(ErrorCode::dimension_mismatch, "standardizer fitted for dim " +
                                                   std::to_string(mean_.size()) + ", got " +
                                                   std::to_string(v.size()));
  }
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = (v[j] - mean_[j]) / std_[j];
}

Standardizer fit_standardizer(const EmbeddingMatrix& train, double epsilon) {
  if (train.rows() < 2) {
    throw Error(ErrorCode::insufficient_data, "standardizer needs at least 2 train rows");
  }
  auto moments = kernels::omp::column_moments(train);
  return Standardizer(std::move(moments.mean), std::move(moments.std), epsilon);
}

Vector apply_standardizer(const Standardizer& s, std::span<const double> v) { return s.apply(v); }

std::string to_string(MeasureKind kind) {
  return kind == MeasureKind::euclidean ? "euclidean" : "cosine";
}

MeasureKind parse_measure_kind(const std::string& name) {
  if (name == "euclidean") return MeasureKind::euclidean;
  if (name == "cosine") return MeasureKind::cosine;
  throw Error(ErrorCode::invalid_argument, "unknown measure '" + name + "'");
}

Vector prepare_vector(const Measure& m, const Standardizer* s, std::span<const double> v) {
  Vector out(v.begin(), v.end());
  if (m.standardize_first) {
    if (s == nullptr) {
      throw Error(ErrorCode::invalid_argument, "measure requires a fitted standardizer");
    }
    s->apply_in_place(out);
  }
  if (m.normalize_first) out = l2_normalize(out);
  return out;
}

double base_distance(MeasureKind kind, std::span<const double> u, std::span<const double> v) {
  return kind == MeasureKind::euclidean ? euclidean_distance(u, v) : cosine_distance(u, v);
}

double measure_distance(const Measure& m, const Standardizer* s, std::span<const double> u,
                        std::span<const double> v) {
  return base_distance(m.kind, prepare_vector(m, s, u), prepare_vector(m, s, v));
}

}  // namespace shotlocker
