#include "peh/stiefel.hpp"

#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "peh/rng.hpp"

namespace peh {

std::size_t ReshapePlan::column_start(std::size_t j) const {
  if (strategy == ReshapeStrategy::pad) return j * rows;
  if (cols == 1) return 0;
  // Evenly spread starts over [0, p - m]; reduces to j*m when p == m*n.
  const double span = static_cast<double>(length - rows);
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(j) * span / static_cast<double>(cols - 1)));
}

ReshapePlan make_reshape_plan(std::size_t length, std::size_t rows, std::size_t cols,
                              ReshapeStrategy strategy) {
  if (rows <= cols)
    throw std::invalid_argument("reshape: rows must exceed cols (tall matrix required)");
  if (cols < 1 || length < 1) throw std::invalid_argument("reshape: empty dimensions");
  if (length > rows * cols)
    throw std::invalid_argument("reshape: series longer than matrix capacity rows*cols");
  if (strategy == ReshapeStrategy::overlap && length < rows)
    throw std::invalid_argument("reshape: overlap needs series at least one column long");
  ReshapePlan plan;
  plan.rows = rows;
  plan.cols = cols;
  plan.length = length;
  plan.strategy = strategy;
  return plan;
}

Eigen::MatrixXd reshape_to_matrix(std::span<const double> series, const ReshapePlan& plan) {
  if (series.size() != plan.length)
    throw std::invalid_argument("reshape_to_matrix: series length does not match plan");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(plan.rows),
                                            static_cast<Eigen::Index>(plan.cols));
  for (std::size_t j = 0; j < plan.cols; ++j) {
    const std::size_t start = plan.column_start(j);
    for (std::size_t i = 0; i < plan.rows; ++i) {
      const std::size_t idx = start + i;
      if (idx < plan.length)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = series[idx];
    }
  }
  return m;
}

std::vector<double> reshape_to_series(const Eigen::MatrixXd& matrix, const ReshapePlan& plan) {
  if (matrix.rows() != static_cast<Eigen::Index>(plan.rows) ||
      matrix.cols() != static_cast<Eigen::Index>(plan.cols))
    throw std::invalid_argument("reshape_to_series: matrix shape does not match plan");
  std::vector<double> out(plan.length, 0.0);
  for (std::size_t j = 0; j < plan.cols; ++j) {
    const std::size_t start = plan.column_start(j);
    for (std::size_t i = 0; i < plan.rows; ++i) {
      const std::size_t idx = start + i;
      if (idx < plan.length)
        out[idx] = matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

StiefelFactorization decompose(std::span<const double> series, const ReshapePlan& plan) {
  const Eigen::MatrixXd m = reshape_to_matrix(series, plan);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  StiefelFactorization f;
  f.u = svd.matrixU();
  f.sigma = svd.singularValues();
  f.v = svd.matrixV();
  f.plan = plan;
  return f;
}

Eigen::MatrixXd sample_tangent(const Eigen::MatrixXd& base, std::mt19937_64& rng) {
  NormalSampler normal;
  Eigen::MatrixXd z(base.rows(), base.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = normal(rng);
  const Eigen::MatrixXd a = base.transpose() * z;
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  return z - base * sym;
}

double canonical_norm(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& base) {
  const double full = delta.squaredNorm();
  const double projected = (base.transpose() * delta).squaredNorm();
  return std::sqrt(std::max(0.0, full - 0.5 * projected));
}

Eigen::MatrixXd stiefel_exp(const Eigen::MatrixXd& base, const Eigen::MatrixXd& delta) {
  if (base.rows() != delta.rows() || base.cols() != delta.cols())
    throw std::invalid_argument("stiefel_exp: base and delta shapes differ");
  const Eigen::Index n = base.cols();
  const Eigen::MatrixXd a = base.transpose() * delta;

  Eigen::MatrixXd block(2 * n, 2 * n);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, n) = -delta.transpose() * delta;
  block.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  block.bottomRightCorner(n, n) = a;

  const Eigen::MatrixXd big = block.exp();
  const Eigen::MatrixXd small = (-a).exp();

  Eigen::MatrixXd wide(base.rows(), 2 * n);
  wide.leftCols(n) = base;
  wide.rightCols(n) = delta;

  Eigen::MatrixXd result = wide * big.leftCols(n) * small;
  if (!result.allFinite())
    throw std::runtime_error("stiefel_exp: matrix exponential failed to converge");
  return result;
}

void PerturbationConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("PerturbationConfig: beta must lie in [0, 1]");
  // Dimension checks happen in make_reshape_plan against the series length.
}

namespace {

Eigen::MatrixXd perturb_factor(const Eigen::MatrixXd& factor, double step, std::mt19937_64& rng) {
  const Eigen::MatrixXd delta = sample_tangent(factor, rng);
  const double norm = canonical_norm(delta, factor);
  if (step == 0.0 || norm <= 0.0) return factor;
  return stiefel_exp(factor, (step / norm) * delta);
}

}  // namespace

std::vector<double> augment(std::span<const double> series, const PerturbationConfig& config,
                            std::mt19937_64& rng) {
  config.validate();
  const ReshapePlan plan =
      make_reshape_plan(series.size(), config.rows, config.cols, config.strategy);
  const StiefelFactorization f = decompose(series, plan);
  const double step = kInjectivityRadius * config.beta;
  // U side first, then V side: fixed draw order for reproducibility.
  const Eigen::MatrixXd u2 = perturb_factor(f.u, step, rng);
  const Eigen::MatrixXd v2 = perturb_factor(f.v, step, rng);
  const Eigen::MatrixXd m2 = u2 * f.sigma.asDiagonal() * v2.transpose();
  return reshape_to_series(m2, plan);
}

std::vector<double> augment(std::span<const double> series, const PerturbationConfig& config) {
  std::mt19937_64 rng = make_rng(config.rng_seed);
  return augment(series, config, rng);
}

}  // namespace peh
