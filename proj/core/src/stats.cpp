#include "gfflab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "gfflab/error.hpp"

namespace gfflab {

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidInput("linear fit needs two or more paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0)
    throw InvalidInput("linear fit needs distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

CovarianceAccumulator::CovarianceAccumulator(std::size_t dim)
    : sum_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))),
      sum_outer_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                       static_cast<Eigen::Index>(dim))) {}

void CovarianceAccumulator::add(std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != sum_.size())
    throw InvalidInput("sample dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), sum_.size());
  // Shift by the first sample to limit cancellation.
  if (n_ == 0)
    shift_ = v;
  const Eigen::VectorXd d = v - shift_;
  sum_ += d;
  sum_outer_.selfadjointView<Eigen::Lower>().rankUpdate(d);
  ++n_;
}

Eigen::VectorXd CovarianceAccumulator::mean() const {
  if (n_ == 0)
    throw InvalidInput("no samples");
  return shift_ + sum_ / static_cast<double>(n_);
}

Eigen::MatrixXd CovarianceAccumulator::covariance() const {
  if (n_ < 2)
    throw InvalidInput("need at least two samples");
  const double n = static_cast<double>(n_);
  Eigen::MatrixXd outer = sum_outer_.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd m = sum_ / n;
  return (outer - n * m * m.transpose()) / (n - 1.0);
}

Eigen::MatrixXd covariance_std_error(const Eigen::MatrixXd &C, std::size_t K) {
  const Eigen::VectorXd d = C.diagonal();
  Eigen::MatrixXd se(C.rows(), C.cols());
  for (Eigen::Index i = 0; i < C.rows(); ++i)
    for (Eigen::Index j = 0; j < C.cols(); ++j)
      se(i, j) = std::sqrt((d[i] * d[j] + C(i, j) * C(i, j)) /
                           static_cast<double>(K));
  return se;
}

double max_standardized_deviation(const Eigen::MatrixXd &empirical,
                                  const Eigen::MatrixXd &exact, std::size_t K) {
  const Eigen::MatrixXd se = covariance_std_error(exact, K);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < exact.rows(); ++i)
    for (Eigen::Index j = 0; j < exact.cols(); ++j)
      worst = std::max(worst, std::abs(empirical(i, j) - exact(i, j)) / se(i, j));
  return worst;
}

} // namespace gfflab
