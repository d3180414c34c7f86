#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace peh {

// Geodesic length bound within which the Stiefel exponential map stays a
// diffeomorphism; perturbation steps are beta times this radius.
inline constexpr double kInjectivityRadius = 0.89 * 3.141592653589793238462643383279502884;

enum class ReshapeStrategy { pad, overlap };

// How a length-p series maps onto an m x n matrix (column-major).
// - pad: columns take consecutive length-m segments; the tail beyond p is
//   zero-filled. Requires p <= m*n.
// - overlap: n column start offsets spread evenly over [0, p-m] so the
//   columns cover the series exactly, overlapping slightly when p < m*n.
//   Requires m <= p <= m*n.
struct ReshapePlan {
  std::size_t rows = 0;    // m
  std::size_t cols = 0;    // n
  std::size_t length = 0;  // p
  ReshapeStrategy strategy = ReshapeStrategy::pad;

  std::size_t column_start(std::size_t j) const;
};

// Validates dimensions (m > n >= 1 and the strategy's capacity bounds);
// throws std::invalid_argument otherwise.
ReshapePlan make_reshape_plan(std::size_t length, std::size_t rows, std::size_t cols,
                              ReshapeStrategy strategy = ReshapeStrategy::pad);

Eigen::MatrixXd reshape_to_matrix(std::span<const double> series, const ReshapePlan& plan);

// Inverse of reshape_to_matrix. Overlapped positions take the value written
// by the later column; for matrices produced from a series this reproduces
// the series exactly.
std::vector<double> reshape_to_series(const Eigen::MatrixXd& matrix, const ReshapePlan& plan);

// Thin SVD of the reshaped series: u (m x n, orthonormal columns),
// sigma (n, descending), v (n x n, orthogonal).
struct StiefelFactorization {
  Eigen::MatrixXd u;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd v;
  ReshapePlan plan;
};

StiefelFactorization decompose(std::span<const double> series, const ReshapePlan& plan);

// Random tangent at base (orthonormal columns): ambient Gaussian draw
// projected via Delta = Z - base * sym(base^T Z). Satisfies
// Delta^T base + base^T Delta = 0.
Eigen::MatrixXd sample_tangent(const Eigen::MatrixXd& base, std::mt19937_64& rng);

// Length of a tangent vector under the canonical Stiefel metric:
// sqrt(tr(Delta^T (I - base base^T / 2) Delta)).
double canonical_norm(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& base);

// Riemannian exponential: walks the geodesic leaving base with velocity
// delta; the result again has orthonormal columns.
Eigen::MatrixXd stiefel_exp(const Eigen::MatrixXd& base, const Eigen::MatrixXd& delta);

struct PerturbationConfig {
  double beta = 0.1;  // step = beta * kInjectivityRadius along a unit tangent
  std::uint64_t rng_seed = 0;
  std::size_t rows = 150;
  std::size_t cols = 100;
  ReshapeStrategy strategy = ReshapeStrategy::pad;

  void validate() const;  // throws std::invalid_argument
};

// Full perturbation pipeline: reshape -> SVD -> independent unit-tangent
// steps of length beta * radius on the U and V factors -> reconstruct with
// the original singular values -> flatten back to length p.
std::vector<double> augment(std::span<const double> series, const PerturbationConfig& config,
                            std::mt19937_64& rng);

// Convenience overload seeding the generator from config.rng_seed.
std::vector<double> augment(std::span<const double> series, const PerturbationConfig& config);

}  // namespace peh
