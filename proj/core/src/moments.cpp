#include "gfflab/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gfflab/error.hpp"

namespace gfflab {

std::size_t matching_count(std::size_t k) {
  if (k % 2 == 1)
    return 0;
  std::size_t c = 1;
  for (std::size_t j = k; j > 1; j -= 2)
    c *= j - 1;
  return c;
}

void for_each_matching(std::size_t k,
                       const std::function<void(const Matching &)> &visit) {
  if (k % 2 == 1)
    return;
  std::vector<bool> used(k, false);
  Matching current;
  current.reserve(k / 2);
  std::function<void()> recurse = [&] {
    std::size_t first = 0;
    while (first < k && used[first])
      ++first;
    if (first == k) {
      visit(current);
      return;
    }
    used[first] = true;
    for (std::size_t j = first + 1; j < k; ++j) {
      if (used[j])
        continue;
      used[j] = true;
      current.emplace_back(first, j);
      recurse();
      current.pop_back();
      used[j] = false;
    }
    used[first] = false;
  };
  recurse();
}

namespace {

void check_covariance(const Eigen::MatrixXd &C,
                      std::span<const std::size_t> indices, std::size_t cap) {
  if (C.rows() != C.cols())
    throw InvalidInput("covariance must be square");
  const double scale = C.cwiseAbs().maxCoeff();
  if ((C - C.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale))
    throw InvalidInput("covariance must be symmetric");
  if (indices.empty())
    throw InvalidInput("moment order must be at least 1");
  if (indices.size() > cap)
    throw ResourceError("moment order " + std::to_string(indices.size()) +
                        " exceeds the cap of " + std::to_string(cap));
  for (std::size_t i : indices)
    if (i >= static_cast<std::size_t>(C.rows()))
      throw InvalidInput("moment index out of range");
}

double entry(const Eigen::MatrixXd &C, std::size_t a, std::size_t b) {
  return C(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
}

} // namespace

PairingSum wick_moment(const Eigen::MatrixXd &C,
                       std::span<const std::size_t> indices, std::size_t cap) {
  check_covariance(C, indices, cap);
  PairingSum out;
  out.k = indices.size();
  if (out.k % 2 == 1)
    return out;
  // The moment is symmetric in its arguments; a canonical order makes the
  // floating-point sum symmetric too.
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  for_each_matching(out.k, [&](const Matching &m) {
    double prod = 1.0;
    for (const auto &[i, j] : m)
      prod *= entry(C, sorted[i], sorted[j]);
    out.value += prod;
    ++out.matchings;
  });
  return out;
}

double schwinger(std::span<const VertexId> points, const GreensMatrix &G,
                 std::size_t cap) {
  std::vector<std::size_t> rows;
  rows.reserve(points.size());
  for (VertexId v : points) {
    if (v >= G.row_of.size() || G.row_of[v] == WeightedGraph::npos)
      throw InvalidInput("Schwinger points must be interior vertices");
    rows.push_back(G.row_of[v]);
  }
  if (rows.size() == 2) {
    check_covariance(G.values, rows, cap);
    return G.at(points[0], points[1]);
  }
  return wick_moment(G.values, rows, cap).value;
}

std::vector<WeightedMatching>
matching_partition_weights(const Eigen::MatrixXd &C,
                           std::span<const std::size_t> indices,
                           std::size_t cap) {
  check_covariance(C, indices, cap);
  if (indices.size() % 2 == 1)
    throw InvalidInput("odd order has no perfect matchings");
  std::vector<WeightedMatching> out;
  double total = 0.0;
  for_each_matching(indices.size(), [&](const Matching &m) {
    double prod = 1.0;
    for (const auto &[i, j] : m) {
      const double c = entry(C, indices[i], indices[j]);
      if (!(c > 0.0))
        throw InvalidInput("non-positive pairing weight; matching "
                           "probabilities are undefined");
      prod *= c;
    }
    out.push_back({m, prod, 0.0});
    total += prod;
  });
  for (auto &wm : out)
    wm.probability = wm.weight / total;
  return out;
}

double LinearFunctional::apply(std::span<const double> field) const {
  double s = 0.0;
  for (const auto &[v, c] : terms) {
    if (v >= field.size())
      throw InvalidInput("functional refers to a vertex outside the field");
    s += c * field[v];
  }
  return s;
}

Eigen::MatrixXd functional_covariance(const GreensMatrix &G,
                                      std::span<const LinearFunctional> rho) {
  const auto n = static_cast<Eigen::Index>(rho.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) {
      double s = 0.0;
      for (const auto &[x, cx] : rho[static_cast<std::size_t>(a)].terms)
        for (const auto &[y, cy] : rho[static_cast<std::size_t>(b)].terms)
          s += cx * cy * G.at(x, y);
      out(a, b) = out(b, a) = s;
    }
  return out;
}

MomentAccumulator::MomentAccumulator(std::vector<std::vector<std::size_t>> tuples)
    : tuples_(std::move(tuples)), sum_(tuples_.size(), 0.0),
      sum_sq_(tuples_.size(), 0.0) {}

void MomentAccumulator::add(std::span<const double> values) {
  for (std::size_t t = 0; t < tuples_.size(); ++t) {
    double prod = 1.0;
    for (std::size_t i : tuples_[t]) {
      if (i >= values.size())
        throw InvalidInput("tuple refers to a missing functional");
      prod *= values[i];
    }
    sum_[t] += prod;
    sum_sq_[t] += prod * prod;
  }
  ++n_;
}

MomentEstimate MomentAccumulator::estimate(std::size_t tuple) const {
  if (n_ < 2)
    throw InvalidInput("need at least two samples");
  const double n = static_cast<double>(n_);
  MomentEstimate e;
  e.n = n_;
  e.estimate = sum_[tuple] / n;
  const double var =
      std::max(0.0, (sum_sq_[tuple] - n * e.estimate * e.estimate) / (n - 1.0));
  e.std_error = std::sqrt(var / n);
  return e;
}

MomentEstimate empirical_moment(std::span<const FieldFunction> samples,
                                std::span<const LinearFunctional> functionals,
                                std::span<const std::size_t> tuple) {
  if (samples.empty())
    throw InvalidInput("empty sample stream");
  MomentAccumulator acc({std::vector<std::size_t>(tuple.begin(), tuple.end())});
  std::vector<double> values(functionals.size());
  for (const FieldFunction &s : samples) {
    for (std::size_t i = 0; i < functionals.size(); ++i)
      values[i] = functionals[i].apply(s);
    acc.add(values);
  }
  return acc.estimate(0);
}

} // namespace gfflab
