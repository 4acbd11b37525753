#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "gfflab/rng.hpp"

namespace gfflab {

using VertexId = std::size_t;

/// Real value per vertex, indexed by vertex id (boundary vertices included).
using FieldFunction = std::vector<double>;

struct Edge {
  VertexId u;
  VertexId v;
  double w;
};

struct Neighbor {
  VertexId vertex;
  double w;
};

/// Vertex cap: 10^7 unless GFFLAB_MAX_VERTICES is set.
std::size_t default_vertex_cap();

struct GraphOptions {
  /// Verify that the reduced quadratic form is positive definite.
  bool validate_definite = true;
  std::size_t max_vertices = default_vertex_cap();
};

/// Outcome of the positive-definiteness test of the reduced Dirichlet form.
struct DefinitenessReport {
  bool definite = false;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  /// "combinatorial", "dense-eigen" or "sparse-ldlt".
  std::string method;
};

/// Weighted graph carrying a discrete Dirichlet form.
///
/// Either the boundary is non-empty (fields are pinned there) or
/// zero_mean_mode is set (closed surfaces such as the torus, where fields
/// are constrained to mean zero). Weights may be negative as long as the
/// reduced form stays positive definite; that is checked at construction
/// unless GraphOptions::validate_definite is false. Immutable once built.
class WeightedGraph {
public:
  WeightedGraph(std::size_t n_vertices, std::vector<Edge> edges,
                std::vector<VertexId> boundary, bool zero_mean_mode,
                std::vector<double> positions = {}, std::size_t dimension = 0,
                const GraphOptions &options = {});

  std::size_t n_vertices() const { return n_vertices_; }
  const std::vector<Edge> &edges() const { return edges_; }
  const std::vector<VertexId> &boundary() const { return boundary_; }
  const std::vector<VertexId> &interior() const { return interior_; }
  bool zero_mean_mode() const { return zero_mean_mode_; }
  bool is_boundary(VertexId v) const { return is_boundary_[v]; }
  bool has_positions() const { return dimension_ > 0; }
  std::size_t dimension() const { return dimension_; }
  std::span<const double> position(VertexId v) const;
  const std::vector<double> &positions() const { return positions_; }

  std::span<const Neighbor> neighbors(VertexId v) const;
  double weighted_degree(VertexId v) const { return degree_[v]; }
  bool positive_weights() const { return positive_weights_; }

  /// Free vertices: the interior on pinned graphs, every vertex in
  /// zero-mean mode. reduced_index maps a vertex to its row, or npos.
  std::size_t n_free() const { return free_.size(); }
  const std::vector<VertexId> &free_vertices() const { return free_; }
  std::size_t reduced_index(VertexId v) const { return reduced_index_[v]; }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Full graph Laplacian, n_vertices x n_vertices.
  Eigen::SparseMatrix<double> laplacian() const;
  /// Laplacian restricted to free vertices (rows/cols in free_vertices order).
  Eigen::SparseMatrix<double> reduced_laplacian() const;

  /// Boundary contribution to the reduced system: b[i] = sum over
  /// boundary neighbors x of free vertex i of w * values[x].
  Eigen::VectorXd boundary_load(std::span<const double> values) const;

private:
  std::size_t n_vertices_;
  std::size_t dimension_;
  std::vector<Edge> edges_;
  std::vector<VertexId> boundary_;
  std::vector<VertexId> interior_;
  std::vector<VertexId> free_;
  std::vector<std::size_t> reduced_index_;
  std::vector<bool> is_boundary_;
  bool zero_mean_mode_;
  bool positive_weights_;
  std::vector<double> positions_;
  std::vector<std::size_t> adj_offsets_;
  std::vector<Neighbor> adj_;
  std::vector<double> degree_;
};

/// Decide whether the reduced Dirichlet form of a graph is positive
/// definite: smallest eigenvalue > 1e-10 * largest. Graphs with all
/// weights positive are decided combinatorially (every free vertex
/// connected to the boundary, or a connected graph in zero-mean mode).
DefinitenessReport check_definite(const WeightedGraph &g);

/// Direct dense eigenvalue check, regardless of sign pattern or size.
DefinitenessReport check_definite_dense(const WeightedGraph &g);

/// Planar triangulation. Triangles may have either orientation but never
/// zero area. Edges bordering one triangle must join boundary vertices.
class Triangulation {
public:
  using Point = std::array<double, 2>;
  using Triangle = std::array<VertexId, 3>;

  Triangulation(std::vector<Point> vertices, std::vector<Triangle> triangles,
                std::vector<VertexId> boundary);

  const std::vector<Point> &vertices() const { return vertices_; }
  const std::vector<Triangle> &triangles() const { return triangles_; }
  const std::vector<VertexId> &boundary() const { return boundary_; }
  std::size_t n_vertices() const { return vertices_.size(); }

  /// Copy with every coordinate multiplied by c.
  Triangulation scaled(double c) const;

private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<VertexId> boundary_;
};

// Builders.

/// [-n, n]^d with nearest-neighbour edges. Vertex id is lexicographic in
/// the coordinates, first coordinate slowest.
WeightedGraph build_box_lattice(std::size_t d, std::size_t n,
                                double weight = 1.0,
                                const GraphOptions &options = {});

/// m x n torus; vertex (i, j) has id i * n + j.
WeightedGraph build_torus_grid(std::size_t m, std::size_t n,
                               double weight = 1.0,
                               const GraphOptions &options = {});

/// Path 0 - 1 - ... - L, unit weights, boundary {0, L}.
WeightedGraph build_path(std::size_t length, double weight = 1.0);

/// Cycle on n vertices in zero-mean mode.
WeightedGraph build_cycle(std::size_t n, double weight = 1.0);

/// rows x cols vertices on a grid with the given spacing, every cell split
/// by one diagonal. `anti` picks the (i+1,j)-(i,j+1) diagonal.
Triangulation grid_triangulation(std::size_t rows, std::size_t cols,
                                 double spacing = 1.0, bool anti = false);

/// Patch of the equilateral triangular lattice with rows x cols vertices
/// (unit side), outer ring as boundary.
Triangulation equilateral_triangulation(std::size_t rows, std::size_t cols);

/// rows x cols unit grid with interior vertices jittered by up to 0.225 in
/// each coordinate and a random diagonal per cell. The jitter is small
/// enough that no triangle flips.
Triangulation jittered_triangulation(std::size_t rows, std::size_t cols,
                                     Rng &rng);

/// Edge weights (cot a + cot b) / 2 over the angles opposite each edge;
/// boundary edges get cot a / 2.
WeightedGraph cotangent_weights(const Triangulation &tri,
                                const GraphOptions &options = {});

// Energies.

double dirichlet_inner(const WeightedGraph &g, std::span<const double> f1,
                       std::span<const double> f2);
double dirichlet_energy(const WeightedGraph &g, std::span<const double> f);

/// Continuum Dirichlet energy of the piecewise-linear interpolant.
double pl_energy(const Triangulation &tri, std::span<const double> f);

/// pl_energy(tri scaled by c, f) / pl_energy(tri, f).
double dilation_energy_ratio(const Triangulation &tri,
                             std::span<const double> f, double c);

/// One-dimensional analogue: sum of (df)^2 / dx over consecutive nodes.
double pl_energy_1d(std::span<const double> nodes, std::span<const double> f);
double dilation_energy_ratio_1d(std::span<const double> nodes,
                                std::span<const double> f, double c);

// Text formats "GFFG 1" and "GFFT 1".

void write_graph(std::ostream &os, const WeightedGraph &g);
WeightedGraph read_graph(std::istream &is, const GraphOptions &options = {});
void write_triangulation(std::ostream &os, const Triangulation &tri);
Triangulation read_triangulation(std::istream &is);

WeightedGraph load_graph(const std::string &path,
                         const GraphOptions &options = {});
Triangulation load_triangulation(const std::string &path);

} // namespace gfflab
