#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

namespace gfflab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Empirical mean and covariance of a stream of vectors.
class CovarianceAccumulator {
public:
  explicit CovarianceAccumulator(std::size_t dim);

  void add(std::span<const double> x);
  std::size_t count() const { return n_; }
  Eigen::VectorXd mean() const;
  /// Unbiased covariance estimate.
  Eigen::MatrixXd covariance() const;

private:
  std::size_t n_ = 0;
  Eigen::VectorXd shift_;
  Eigen::VectorXd sum_;
  Eigen::MatrixXd sum_outer_;
};

/// Standard error of an empirical Gaussian covariance entry from K
/// samples: sqrt((C_xx C_yy + C_xy^2) / K).
Eigen::MatrixXd covariance_std_error(const Eigen::MatrixXd &C, std::size_t K);

/// Largest |empirical - exact| / std_error over all entries.
double max_standardized_deviation(const Eigen::MatrixXd &empirical,
                                  const Eigen::MatrixXd &exact, std::size_t K);

} // namespace gfflab
