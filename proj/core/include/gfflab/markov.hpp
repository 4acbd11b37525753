#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gfflab/green.hpp"
#include "gfflab/lattice.hpp"

namespace gfflab {

/// Law of the field on U given its values everywhere else.
struct ConditionalLaw {
  /// U, sorted.
  std::vector<VertexId> vertices;
  /// Conditional mean on U, aligned with `vertices`.
  std::vector<double> mean;
  /// Green's matrix of the subproblem on U (depends on (g, U) only).
  GreensMatrix covariance;
  /// Vertices outside U adjacent to U.
  std::vector<VertexId> subproblem_boundary;
};

/// Harmonic extension into U of the exterior values plus an independent
/// field on U with zero boundary. Only boundary-pinned graphs.
ConditionalLaw conditional_law(const WeightedGraph &g,
                               std::span<const VertexId> U,
                               std::span<const double> exterior_values);

/// f off U, harmonic extension of f into U.
FieldFunction harmonic_fill(const WeightedGraph &g,
                            std::span<const VertexId> U,
                            std::span<const double> f);

struct Decomposition {
  /// Agrees with the field off U, discrete-harmonic on U.
  FieldFunction harmonic_part;
  /// field - harmonic_part; vanishes off U.
  FieldFunction remainder;
};

Decomposition decompose(const WeightedGraph &g, std::span<const VertexId> U,
                        std::span<const double> field);

/// Revealed-vertex exploration of a field, with W_k the conditional
/// expectation of (field, f0) given the first k revealed values and
/// t_k = ||P_k f0||^2 the projection norm.
struct ExplorationTrace {
  std::vector<VertexId> ordering;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t steps() const { return ordering.size(); }
};

/// Precomputed projections P_k f0 for one (graph, f0, ordering); running
/// it on a field costs one dot product per step.
class ExplorationPlan {
public:
  /// Dense storage of every projection; free vertex cap.
  static constexpr std::size_t kMaxFree = 2500;

  ExplorationPlan(const WeightedGraph &g, FieldFunction f0,
                  std::vector<VertexId> ordering);

  ExplorationTrace run(std::span<const double> field) const;

  std::size_t steps() const { return ordering_.size(); }
  const std::vector<double> &times() const { return times_; }
  const std::vector<VertexId> &ordering() const { return ordering_; }
  const FieldFunction &f0() const { return f0_; }
  /// P_k f0: f0 on the first k revealed vertices and the boundary,
  /// harmonic elsewhere.
  FieldFunction projection(std::size_t k) const;

private:
  const WeightedGraph *graph_;
  FieldFunction f0_;
  std::vector<VertexId> ordering_;
  std::vector<double> times_;
  Eigen::MatrixXd projections_; // n_vertices x (steps + 1)
  Eigen::MatrixXd loads_;       // L P_k f0, n_vertices x (steps + 1)
};

ExplorationTrace explore(const WeightedGraph &g, std::span<const double> f0,
                         std::span<const VertexId> ordering,
                         std::span<const double> field);

/// Solution of -Δ f0 = c on the interior with zero boundary values,
/// scaled so that ||f0|| = 1.
FieldFunction default_f0(const WeightedGraph &g);

/// Interior vertices row by row, alternating direction (2D positions).
std::vector<VertexId> boustrophedon_ordering(const WeightedGraph &g);

/// Harmonic extension of f from `revealed` plus the boundary.
FieldFunction project_onto_revealed(const WeightedGraph &g,
                                    std::span<const double> f,
                                    std::span<const VertexId> revealed);

/// a * P_s(f0), s a reveal index.
struct ProjectionTerm {
  double a;
  std::size_t s;
};

/// W_f(t_k) = sum_i a_i W(min(s_i, k)) for f = sum_i a_i P_{s_i}(f0).
std::vector<double> explore_functional(const ExplorationTrace &trace,
                                       std::span<const ProjectionTerm> f);

/// CSV rows "k,t,W".
void write_trace_csv(std::ostream &os, const ExplorationTrace &trace);

} // namespace gfflab
