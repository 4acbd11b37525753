#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gfflab/green.hpp"
#include "gfflab/lattice.hpp"

namespace gfflab {

/// Perfect matching of positions 0..k-1, pairs (i, j) with i < j.
using Matching = std::vector<std::pair<std::size_t, std::size_t>>;

inline constexpr std::size_t kDefaultWickCap = 12;

/// (k - 1)!! for even k, 0 for odd k.
std::size_t matching_count(std::size_t k);

/// Visits the perfect matchings of k positions by repeatedly pairing the
/// smallest unmatched position with each later one.
void for_each_matching(std::size_t k,
                       const std::function<void(const Matching &)> &visit);

struct PairingSum {
  std::size_t k = 0;
  std::size_t matchings = 0;
  double value = 0.0;
};

/// E[X_{i_1} ... X_{i_k}] for a centred Gaussian vector with covariance C:
/// the sum over perfect matchings of products of C entries. Indices may
/// repeat.
PairingSum wick_moment(const Eigen::MatrixXd &C,
                       std::span<const std::size_t> indices,
                       std::size_t cap = kDefaultWickCap);

/// k-point Schwinger function over interior vertices.
double schwinger(std::span<const VertexId> points, const GreensMatrix &G,
                 std::size_t cap = kDefaultWickCap);

struct WeightedMatching {
  Matching pairs;
  double weight = 0.0;
  double probability = 0.0;
};

/// Matchings with weights prod C and their normalised probabilities.
/// Refused (InvalidInput) when any pairing weight is non-positive.
std::vector<WeightedMatching>
matching_partition_weights(const Eigen::MatrixXd &C,
                           std::span<const std::size_t> indices,
                           std::size_t cap = kDefaultWickCap);

/// (field, rho) = sum rho_v field_v.
struct LinearFunctional {
  std::vector<std::pair<VertexId, double>> terms;

  double apply(std::span<const double> field) const;
  static LinearFunctional point(VertexId v) { return {{{v, 1.0}}}; }
};

/// rho_a^T G rho_b over a list of functionals.
Eigen::MatrixXd functional_covariance(const GreensMatrix &G,
                                      std::span<const LinearFunctional> rho);

struct MomentEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Streaming estimator of product moments of functional values.
///
/// Standard errors are delete-one jackknife errors; for a sample mean the
/// jackknife collapses to s / sqrt(n), which is what is accumulated.
class MomentAccumulator {
public:
  explicit MomentAccumulator(std::vector<std::vector<std::size_t>> tuples);

  /// One sample: values of every functional.
  void add(std::span<const double> functional_values);
  std::size_t count() const { return n_; }
  MomentEstimate estimate(std::size_t tuple) const;
  const std::vector<std::vector<std::size_t>> &tuples() const {
    return tuples_;
  }

private:
  std::vector<std::vector<std::size_t>> tuples_;
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  std::size_t n_ = 0;
};

MomentEstimate empirical_moment(std::span<const FieldFunction> samples,
                                std::span<const LinearFunctional> functionals,
                                std::span<const std::size_t> tuple);

} // namespace gfflab
