#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "gfflab/lattice.hpp"

namespace gfflab {

/// Sparse Cholesky factorization of the reduced form L + mass2 * I.
///
/// On pinned graphs the unknowns are the interior vertices. In zero-mean
/// mode every vertex is free and results are projected to mean zero; with
/// mass2 == 0 the form is grounded at the first vertex, which yields the
/// pseudoinverse after projection.
class LaplacianSolver {
public:
  explicit LaplacianSolver(const WeightedGraph &g, double mass2 = 0.0);
  ~LaplacianSolver();
  LaplacianSolver(LaplacianSolver &&) noexcept;
  LaplacianSolver &operator=(LaplacianSolver &&) noexcept;

  /// Unknown count (free vertices).
  std::size_t size() const { return n_free_; }
  /// Length of the standard-normal vector consumed by correlate().
  std::size_t noise_size() const;

  /// x = (L + m^2)^{-1} b, or L^+ b in zero-mean mode.
  Eigen::VectorXd solve(const Eigen::VectorXd &b) const;

  /// Maps i.i.d. standard normals to a centred Gaussian vector whose
  /// covariance is the inverse (pseudoinverse) of the reduced form.
  Eigen::VectorXd correlate(const Eigen::VectorXd &z) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t n_free_;
  bool zero_mean_;
  bool grounded_;
};

/// Dense covariance G(x, y) over the free vertices of a graph.
struct GreensMatrix {
  std::vector<VertexId> vertices;
  Eigen::MatrixXd values;
  /// Vertices outside `vertices` (boundary) have G = 0.
  std::vector<std::size_t> row_of;

  std::size_t size() const { return vertices.size(); }
  double at(VertexId x, VertexId y) const;
};

/// Dense Green's matrix cap (free vertices).
inline constexpr std::size_t kDenseGreenCap = 4000;

/// G = (reduced Laplacian)^{-1}; the pseudoinverse in zero-mean mode.
GreensMatrix greens_matrix(const WeightedGraph &g);

/// Column G(x, .) over all vertices (zero on the boundary).
FieldFunction greens_column(const WeightedGraph &g, VertexId x);

struct WalkEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Expected time a continuous-time walk from x spends at y before it is
/// absorbed on the boundary. Holding time at v is exponential with rate
/// sum_{e ∋ v} w(e); jumps follow w(e) / sum w. Walks run in blocks of
/// 4096 with one random stream per block, so the result does not depend
/// on `threads`.
WalkEstimate greens_by_walk(const WeightedGraph &g, VertexId x, VertexId y,
                            std::size_t n_walks, std::uint64_t seed,
                            unsigned threads = 1);

/// Monte Carlo estimate of E[values(first boundary vertex hit from x)].
WalkEstimate exit_value_by_walk(const WeightedGraph &g,
                                std::span<const double> values, VertexId x,
                                std::size_t n_walks, std::uint64_t seed,
                                unsigned threads = 1);

/// Discrete Dirichlet problem: boundary values kept, interior values are
/// weighted averages of their neighbours.
FieldFunction harmonic_extension(const WeightedGraph &g,
                                 std::span<const double> boundary_values);

struct OnePointConditional {
  /// Neighbour weights w(e) / sum w; the conditional mean is their
  /// weighted sum of neighbour values.
  std::vector<Neighbor> weights;
  double variance = 0.0;
};

OnePointConditional one_point_conditional(const WeightedGraph &g, VertexId y);

/// CSV: header "vertex,<id>...", then one row per vertex.
void write_greens_csv(std::ostream &os, const GreensMatrix &G);

} // namespace gfflab
