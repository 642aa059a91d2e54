#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shotlocker/embedding.hpp"

namespace shotlocker {

using Vector = std::vector<double>;

/// Component-wise mean of `count` rows of width `dim` stored row-major.
Vector mean_pool(std::span<const double> token_vectors, std::size_t dim);

double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> v);

double euclidean_distance(std::span<const double> u, std::span<const double> v);

/// 1 - cos(u, v), clamped to [0, 2]. Throws on zero-norm input.
double cosine_distance(std::span<const double> u, std::span<const double> v);

Vector l2_normalize(std::span<const double> v);

/// Per-dimension (x - mean) / std with std floored at epsilon. Fitted on
/// train rows only; test vectors reuse the train statistics.
class Standardizer {
 public:
  static constexpr double kDefaultEpsilon = 1e-8;

  Standardizer(Vector mean, Vector std, double epsilon = kDefaultEpsilon);

  static Standardizer identity(std::size_t dim);

  const Vector& mean() const { return mean_; }
  const Vector& std() const { return std_; }
  double epsilon() const { return epsilon_; }
  std::size_t dim() const { return mean_.size(); }

  Vector apply(std::span<const double> v) const;
  void apply_in_place(std::span<double> v) const;

 private:
  Vector mean_;
  Vector std_;
  double epsilon_;
};

/// Sample mean and unbiased sample std per dimension. Requires N >= 2.
Standardizer fit_standardizer(const EmbeddingMatrix& train,
                              double epsilon = Standardizer::kDefaultEpsilon);

Vector apply_standardizer(const Standardizer& s, std::span<const double> v);

enum class MeasureKind { euclidean, cosine };

struct Measure {
  MeasureKind kind = MeasureKind::cosine;
  bool normalize_first = false;
  bool standardize_first = false;

  bool operator==(const Measure&) const = default;
};

std::string to_string(MeasureKind kind);
MeasureKind parse_measure_kind(const std::string& name);

/// Applies standardize, then normalize, according to the flags.
Vector prepare_vector(const Measure& m, const Standardizer* s, std::span<const double> v);

/// Distance between already-prepared vectors under the measure's kind.
double base_distance(MeasureKind kind, std::span<const double> u, std::span<const double> v);

double measure_distance(const Measure& m, const Standardizer* s, std::span<const double> u,
                        std::span<const double> v);

}  // namespace shotlocker
