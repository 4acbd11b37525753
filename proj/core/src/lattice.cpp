#include "gfflab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "gfflab/error.hpp"

namespace gfflab {

namespace {

constexpr double kDefiniteRatio = 1e-10;
constexpr std::size_t kDenseCheckLimit = 2000;

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

} // namespace

std::size_t default_vertex_cap() {
  if (const char *env = std::getenv("GFFLAB_MAX_VERTICES")) {
    char *end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<std::size_t>(v);
  }
  return 10'000'000;
}

WeightedGraph::WeightedGraph(std::size_t n_vertices, std::vector<Edge> edges,
                             std::vector<VertexId> boundary,
                             bool zero_mean_mode, std::vector<double> positions,
                             std::size_t dimension,
                             const GraphOptions &options)
    : n_vertices_(n_vertices), dimension_(dimension), edges_(std::move(edges)),
      boundary_(std::move(boundary)), zero_mean_mode_(zero_mean_mode),
      positions_(std::move(positions)) {
  if (n_vertices_ > options.max_vertices)
    throw ResourceError("graph has " + std::to_string(n_vertices_) +
                        " vertices, cap is " +
                        std::to_string(options.max_vertices));
  if (n_vertices_ == 0)
    throw InvalidInput("graph has no vertices");
  if (positions_.size() != n_vertices_ * dimension_)
    throw InvalidInput("positions do not match vertex count and dimension");

  std::vector<std::pair<VertexId, VertexId>> keys;
  keys.reserve(edges_.size());
  positive_weights_ = true;
  for (const Edge &e : edges_) {
    if (e.u >= n_vertices_ || e.v >= n_vertices_)
      throw InvalidInput("edge endpoint out of range");
    if (e.u == e.v)
      throw InvalidInput("self-loop at vertex " + std::to_string(e.u));
    if (!std::isfinite(e.w))
      throw InvalidInput("non-finite edge weight");
    if (!(e.w > 0.0))
      positive_weights_ = false;
    keys.emplace_back(std::min(e.u, e.v), std::max(e.u, e.v));
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
    throw InvalidInput("more than one edge between a pair of vertices");

  std::sort(boundary_.begin(), boundary_.end());
  boundary_.erase(std::unique(boundary_.begin(), boundary_.end()),
                  boundary_.end());
  if (!boundary_.empty() && boundary_.back() >= n_vertices_)
    throw InvalidInput("boundary vertex out of range");
  if (boundary_.empty() && !zero_mean_mode_)
    throw InvalidInput(
        "graph needs a boundary or zero-mean mode for a definite form");
  if (!boundary_.empty() && zero_mean_mode_)
    throw InvalidInput("zero-mean mode graphs carry no boundary");

  is_boundary_.assign(n_vertices_, false);
  for (VertexId b : boundary_)
    is_boundary_[b] = true;
  reduced_index_.assign(n_vertices_, npos);
  for (VertexId v = 0; v < n_vertices_; ++v) {
    if (!is_boundary_[v])
      interior_.push_back(v);
    if (zero_mean_mode_ || !is_boundary_[v]) {
      reduced_index_[v] = free_.size();
      free_.push_back(v);
    }
  }

  // CSR adjacency.
  adj_offsets_.assign(n_vertices_ + 1, 0);
  for (const Edge &e : edges_) {
    ++adj_offsets_[e.u + 1];
    ++adj_offsets_[e.v + 1];
  }
  std::partial_sum(adj_offsets_.begin(), adj_offsets_.end(),
                   adj_offsets_.begin());
  adj_.resize(adj_offsets_.back());
  std::vector<std::size_t> fill(adj_offsets_.begin(), adj_offsets_.end() - 1);
  degree_.assign(n_vertices_, 0.0);
  for (const Edge &e : edges_) {
    adj_[fill[e.u]++] = {e.v, e.w};
    adj_[fill[e.v]++] = {e.u, e.w};
    degree_[e.u] += e.w;
    degree_[e.v] += e.w;
  }

  if (options.validate_definite) {
    const DefinitenessReport report = check_definite(*this);
    if (!report.definite)
      throw InvalidInput("reduced Dirichlet form is not positive definite (" +
                         report.method + ": min eigenvalue " +
                         format_real(report.min_eigenvalue) + ", max " +
                         format_real(report.max_eigenvalue) + ")");
  }
}

std::span<const double> WeightedGraph::position(VertexId v) const {
  if (dimension_ == 0)
    return {};
  return {positions_.data() + v * dimension_, dimension_};
}

std::span<const Neighbor> WeightedGraph::neighbors(VertexId v) const {
  return {adj_.data() + adj_offsets_[v], adj_offsets_[v + 1] - adj_offsets_[v]};
}

Eigen::SparseMatrix<double> WeightedGraph::laplacian() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * edges_.size());
  for (const Edge &e : edges_) {
    const auto u = static_cast<Eigen::Index>(e.u);
    const auto v = static_cast<Eigen::Index>(e.v);
    t.emplace_back(u, u, e.w);
    t.emplace_back(v, v, e.w);
    t.emplace_back(u, v, -e.w);
    t.emplace_back(v, u, -e.w);
  }
  const auto n = static_cast<Eigen::Index>(n_vertices_);
  Eigen::SparseMatrix<double> lap(n, n);
  lap.setFromTriplets(t.begin(), t.end());
  return lap;
}

Eigen::SparseMatrix<double> WeightedGraph::reduced_laplacian() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * edges_.size());
  for (const Edge &e : edges_) {
    const std::size_t ru = reduced_index_[e.u];
    const std::size_t rv = reduced_index_[e.v];
    const auto iu = static_cast<Eigen::Index>(ru);
    const auto iv = static_cast<Eigen::Index>(rv);
    if (ru != npos)
      t.emplace_back(iu, iu, e.w);
    if (rv != npos)
      t.emplace_back(iv, iv, e.w);
    if (ru != npos && rv != npos) {
      t.emplace_back(iu, iv, -e.w);
      t.emplace_back(iv, iu, -e.w);
    }
  }
  const auto n = static_cast<Eigen::Index>(free_.size());
  Eigen::SparseMatrix<double> lap(n, n);
  lap.setFromTriplets(t.begin(), t.end());
  return lap;
}

Eigen::VectorXd
WeightedGraph::boundary_load(std::span<const double> values) const {
  if (values.size() != n_vertices_)
    throw InvalidInput("boundary values do not match vertex count");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_free()));
  for (const Edge &e : edges_) {
    const std::size_t ru = reduced_index_[e.u];
    const std::size_t rv = reduced_index_[e.v];
    if (ru != npos && rv == npos)
      b[static_cast<Eigen::Index>(ru)] += e.w * values[e.v];
    else if (rv != npos && ru == npos)
      b[static_cast<Eigen::Index>(rv)] += e.w * values[e.u];
  }
  return b;
}

namespace {

DefinitenessReport check_combinatorial(const WeightedGraph &g) {
  DefinitenessReport r;
  r.method = "combinatorial";
  r.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  r.max_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = g.n_vertices();
  std::vector<bool> seen(n, false);
  std::queue<VertexId> queue;
  if (g.zero_mean_mode()) {
    seen[0] = true;
    queue.push(0);
  } else {
    for (VertexId b : g.boundary()) {
      seen[b] = true;
      queue.push(b);
    }
  }
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop();
    for (const Neighbor &nb : g.neighbors(v)) {
      if (!seen[nb.vertex]) {
        seen[nb.vertex] = true;
        queue.push(nb.vertex);
      }
    }
  }
  r.definite = std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
  return r;
}

// Orthonormal basis of the complement of the constant vector, as columns.
Eigen::MatrixXd mean_zero_basis(Eigen::Index n) {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(n - 1);
}

DefinitenessReport check_sparse(const WeightedGraph &g) {
  DefinitenessReport r;
  r.method = "sparse-ldlt";
  Eigen::SparseMatrix<double> lap = g.reduced_laplacian();
  if (g.zero_mean_mode()) {
    // Grounding one vertex is definite iff the form is definite on
    // mean-zero functions (rows of a Laplacian sum to zero).
    const Eigen::Index n = lap.rows();
    Eigen::SparseMatrix<double> grounded = lap.bottomRightCorner(n - 1, n - 1);
    lap = grounded;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(lap);
  if (ldlt.info() != Eigen::Success) {
    r.definite = false;
    return r;
  }
  const Eigen::VectorXd d = ldlt.vectorD();
  if (d.minCoeff() <= 0.0) {
    r.definite = false;
    r.min_eigenvalue = d.minCoeff();
    return r;
  }
  // Power iteration for the top of the spectrum, inverse iteration for
  // the bottom. Fixed start vectors keep the verdict deterministic.
  const Eigen::Index n = lap.rows();
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0).normalized();
  double top = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd y = lap * x;
    top = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0)
      break;
    x = y / norm;
  }
  x = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0).normalized();
  double bottom = 0.0;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd y = ldlt.solve(x);
    x = y.normalized();
    bottom = x.dot(lap * x);
  }
  r.min_eigenvalue = bottom;
  r.max_eigenvalue = top;
  r.definite = bottom > kDefiniteRatio * top;
  return r;
}

} // namespace

DefinitenessReport check_definite_dense(const WeightedGraph &g) {
  DefinitenessReport r;
  r.method = "dense-eigen";
  if (g.n_free() == 0) {
    r.definite = true;
    return r;
  }
  Eigen::MatrixXd lap = Eigen::MatrixXd(g.reduced_laplacian());
  if (g.zero_mean_mode()) {
    if (lap.rows() == 1) {
      r.definite = true;
      return r;
    }
    const Eigen::MatrixXd q = mean_zero_basis(lap.rows());
    lap = q.transpose() * lap * q;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap,
                                                    Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.max_eigenvalue = es.eigenvalues().maxCoeff();
  r.definite = r.max_eigenvalue > 0.0 &&
               r.min_eigenvalue > kDefiniteRatio * r.max_eigenvalue;
  return r;
}

DefinitenessReport check_definite(const WeightedGraph &g) {
  if (g.positive_weights())
    return check_combinatorial(g);
  if (g.n_free() <= kDenseCheckLimit)
    return check_definite_dense(g);
  return check_sparse(g);
}

// Triangulation

namespace {

double signed_area2(const Triangulation::Point &a, const Triangulation::Point &b,
                    const Triangulation::Point &c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

double max_side2(const Triangulation::Point &a, const Triangulation::Point &b,
                 const Triangulation::Point &c) {
  auto d2 = [](const auto &p, const auto &q) {
    return (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]);
  };
  return std::max({d2(a, b), d2(b, c), d2(c, a)});
}

void check_triangle(const Triangulation::Point &a, const Triangulation::Point &b,
                    const Triangulation::Point &c) {
  const double area2 = std::abs(signed_area2(a, b, c));
  if (!(area2 > 1e-12 * max_side2(a, b, c)))
    throw InvalidInput("degenerate triangle");
}

std::pair<VertexId, VertexId> edge_key(VertexId a, VertexId b) {
  return {std::min(a, b), std::max(a, b)};
}

} // namespace

Triangulation::Triangulation(std::vector<Point> vertices,
                             std::vector<Triangle> triangles,
                             std::vector<VertexId> boundary)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)),
      boundary_(std::move(boundary)) {
  const std::size_t n = vertices_.size();
  std::sort(boundary_.begin(), boundary_.end());
  boundary_.erase(std::unique(boundary_.begin(), boundary_.end()),
                  boundary_.end());
  if (!boundary_.empty() && boundary_.back() >= n)
    throw InvalidInput("boundary vertex out of range");
  std::vector<bool> on_boundary(n, false);
  for (VertexId b : boundary_)
    on_boundary[b] = true;

  std::map<std::pair<VertexId, VertexId>, int> edge_count;
  for (const Triangle &t : triangles_) {
    for (VertexId v : t)
      if (v >= n)
        throw InvalidInput("triangle vertex out of range");
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw InvalidInput("triangle repeats a vertex");
    check_triangle(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
    for (int k = 0; k < 3; ++k)
      ++edge_count[edge_key(t[k], t[(k + 1) % 3])];
  }
  for (const auto &[key, count] : edge_count) {
    if (count > 2)
      throw InvalidInput("edge shared by more than two triangles");
    if (count == 1 && !(on_boundary[key.first] && on_boundary[key.second]))
      throw InvalidInput("edge with a single triangle joins non-boundary "
                         "vertices " +
                         std::to_string(key.first) + "-" +
                         std::to_string(key.second));
  }
}

Triangulation Triangulation::scaled(double c) const {
  std::vector<Point> v = vertices_;
  for (Point &p : v) {
    p[0] *= c;
    p[1] *= c;
  }
  return Triangulation(std::move(v), triangles_, boundary_);
}

// Builders

WeightedGraph build_box_lattice(std::size_t d, std::size_t n, double weight,
                                const GraphOptions &options) {
  if (d < 1 || n < 1)
    throw InvalidInput("box lattice needs d >= 1 and n >= 1");
  const std::size_t side = 2 * n + 1;
  std::size_t count = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (count > options.max_vertices / side)
      throw ResourceError("box lattice exceeds the vertex cap");
    count *= side;
  }
  if (count > options.max_vertices)
    throw ResourceError("box lattice exceeds the vertex cap");

  std::vector<double> positions(count * d);
  std::vector<VertexId> boundary;
  std::vector<Edge> edges;
  edges.reserve(count * d);
  std::vector<std::size_t> coord(d, 0);
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t i = d - 1; i-- > 0;)
    stride[i] = stride[i + 1] * side;

  for (VertexId id = 0; id < count; ++id) {
    std::size_t rem = id;
    bool on_boundary = false;
    for (std::size_t i = 0; i < d; ++i) {
      coord[i] = rem / stride[i];
      rem %= stride[i];
      positions[id * d + i] =
          static_cast<double>(coord[i]) - static_cast<double>(n);
      if (coord[i] == 0 || coord[i] == side - 1)
        on_boundary = true;
    }
    if (on_boundary)
      boundary.push_back(id);
    for (std::size_t i = 0; i < d; ++i)
      if (coord[i] + 1 < side)
        edges.push_back({id, id + stride[i], weight});
  }
  return WeightedGraph(count, std::move(edges), std::move(boundary), false,
                       std::move(positions), d, options);
}

WeightedGraph build_torus_grid(std::size_t m, std::size_t n, double weight,
                               const GraphOptions &options) {
  if (m < 3 || n < 3)
    throw InvalidInput("torus grid needs m, n >= 3 (smaller sizes create "
                       "multi-edges)");
  if (m > options.max_vertices / n)
    throw ResourceError("torus exceeds the vertex cap");
  std::vector<Edge> edges;
  edges.reserve(2 * m * n);
  std::vector<double> positions(2 * m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const VertexId id = i * n + j;
      positions[2 * id] = static_cast<double>(i);
      positions[2 * id + 1] = static_cast<double>(j);
      edges.push_back({id, ((i + 1) % m) * n + j, weight});
      edges.push_back({id, i * n + (j + 1) % n, weight});
    }
  }
  return WeightedGraph(m * n, std::move(edges), {}, true, std::move(positions),
                       2, options);
}

WeightedGraph build_path(std::size_t length, double weight) {
  if (length < 1)
    throw InvalidInput("path needs length >= 1");
  std::vector<Edge> edges;
  std::vector<double> positions(length + 1);
  for (std::size_t i = 0; i <= length; ++i) {
    positions[i] = static_cast<double>(i);
    if (i < length)
      edges.push_back({i, i + 1, weight});
  }
  return WeightedGraph(length + 1, std::move(edges), {0, length}, false,
                       std::move(positions), 1);
}

WeightedGraph build_cycle(std::size_t n, double weight) {
  if (n < 3)
    throw InvalidInput("cycle needs n >= 3");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    edges.push_back({i, (i + 1) % n, weight});
  return WeightedGraph(n, std::move(edges), {}, true);
}

Triangulation grid_triangulation(std::size_t rows, std::size_t cols,
                                 double spacing, bool anti) {
  if (rows < 2 || cols < 2)
    throw InvalidInput("grid triangulation needs at least 2 x 2 vertices");
  std::vector<Triangulation::Point> pts;
  std::vector<VertexId> boundary;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      pts.push_back({spacing * static_cast<double>(j),
                     spacing * static_cast<double>(i)});
      if (i == 0 || j == 0 || i + 1 == rows || j + 1 == cols)
        boundary.push_back(i * cols + j);
    }
  std::vector<Triangulation::Triangle> tris;
  for (std::size_t i = 0; i + 1 < rows; ++i)
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      const VertexId a = i * cols + j, b = a + 1, c = a + cols, d = c + 1;
      if (anti) {
        tris.push_back({a, b, c});
        tris.push_back({b, d, c});
      } else {
        tris.push_back({a, b, d});
        tris.push_back({a, d, c});
      }
    }
  return Triangulation(std::move(pts), std::move(tris), std::move(boundary));
}

Triangulation equilateral_triangulation(std::size_t rows, std::size_t cols) {
  if (rows < 2 || cols < 2)
    throw InvalidInput("equilateral patch needs at least 2 x 2 vertices");
  const double h = std::sqrt(3.0) / 2.0;
  std::vector<Triangulation::Point> pts;
  std::vector<VertexId> boundary;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      pts.push_back({static_cast<double>(j) + 0.5 * static_cast<double>(i),
                     h * static_cast<double>(i)});
      if (i == 0 || j == 0 || i + 1 == rows || j + 1 == cols)
        boundary.push_back(i * cols + j);
    }
  std::vector<Triangulation::Triangle> tris;
  for (std::size_t i = 0; i + 1 < rows; ++i)
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      const VertexId a = i * cols + j, b = a + 1, c = a + cols, d = c + 1;
      tris.push_back({a, b, c});
      tris.push_back({b, d, c});
    }
  return Triangulation(std::move(pts), std::move(tris), std::move(boundary));
}

Triangulation jittered_triangulation(std::size_t rows, std::size_t cols,
                                     Rng &rng) {
  if (rows < 2 || cols < 2)
    throw InvalidInput("triangulation needs at least 2 x 2 vertices");
  std::vector<Triangulation::Point> pts;
  std::vector<VertexId> boundary;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const bool edge = i == 0 || j == 0 || i + 1 == rows || j + 1 == cols;
      const double jx = edge ? 0.0 : 0.45 * (rng.uniform() - 0.5);
      const double jy = edge ? 0.0 : 0.45 * (rng.uniform() - 0.5);
      pts.push_back({static_cast<double>(j) + jx, static_cast<double>(i) + jy});
      if (edge)
        boundary.push_back(i * cols + j);
    }
  std::vector<Triangulation::Triangle> tris;
  for (std::size_t i = 0; i + 1 < rows; ++i)
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      const VertexId a = i * cols + j, b = a + 1, c = a + cols, d = c + 1;
      if (rng.uniform() < 0.5) {
        tris.push_back({a, b, d});
        tris.push_back({a, d, c});
      } else {
        tris.push_back({a, b, c});
        tris.push_back({b, d, c});
      }
    }
  return Triangulation(std::move(pts), std::move(tris), std::move(boundary));
}

WeightedGraph cotangent_weights(const Triangulation &tri,
                                const GraphOptions &options) {
  std::map<std::pair<VertexId, VertexId>, double> weight;
  const auto &p = tri.vertices();
  for (const auto &t : tri.triangles()) {
    check_triangle(p[t[0]], p[t[1]], p[t[2]]);
    for (int k = 0; k < 3; ++k) {
      const VertexId i = t[k], j = t[(k + 1) % 3], o = t[(k + 2) % 3];
      const double ax = p[i][0] - p[o][0], ay = p[i][1] - p[o][1];
      const double bx = p[j][0] - p[o][0], by = p[j][1] - p[o][1];
      const double cot = (ax * bx + ay * by) / std::abs(ax * by - ay * bx);
      weight[edge_key(i, j)] += 0.5 * cot;
    }
  }
  std::vector<Edge> edges;
  edges.reserve(weight.size());
  for (const auto &[key, w] : weight)
    edges.push_back({key.first, key.second, w});
  std::vector<double> positions;
  positions.reserve(2 * p.size());
  for (const auto &pt : p) {
    positions.push_back(pt[0]);
    positions.push_back(pt[1]);
  }
  return WeightedGraph(tri.n_vertices(), std::move(edges), tri.boundary(),
                       false, std::move(positions), 2, options);
}

// Energies

double dirichlet_inner(const WeightedGraph &g, std::span<const double> f1,
                       std::span<const double> f2) {
  if (f1.size() != g.n_vertices() || f2.size() != g.n_vertices())
    throw InvalidInput("field length does not match vertex count");
  double sum = 0.0;
  for (const Edge &e : g.edges())
    sum += e.w * (f1[e.v] - f1[e.u]) * (f2[e.v] - f2[e.u]);
  return sum;
}

double dirichlet_energy(const WeightedGraph &g, std::span<const double> f) {
  return dirichlet_inner(g, f, f);
}

double pl_energy(const Triangulation &tri, std::span<const double> f) {
  if (f.size() != tri.n_vertices())
    throw InvalidInput("field length does not match vertex count");
  const auto &p = tri.vertices();
  double sum = 0.0;
  for (const auto &t : tri.triangles()) {
    const auto &a = p[t[0]], &b = p[t[1]], &c = p[t[2]];
    check_triangle(a, b, c);
    // Gradient of the affine interpolant from the two edge constraints.
    const double e1x = b[0] - a[0], e1y = b[1] - a[1];
    const double e2x = c[0] - a[0], e2y = c[1] - a[1];
    const double d1 = f[t[1]] - f[t[0]], d2 = f[t[2]] - f[t[0]];
    const double det = e1x * e2y - e1y * e2x;
    const double gx = (d1 * e2y - d2 * e1y) / det;
    const double gy = (e1x * d2 - e2x * d1) / det;
    sum += 0.5 * std::abs(det) * (gx * gx + gy * gy);
  }
  return sum;
}

double dilation_energy_ratio(const Triangulation &tri,
                             std::span<const double> f, double c) {
  if (!(c > 0.0))
    throw InvalidInput("dilation factor must be positive");
  const double base = pl_energy(tri, f);
  if (base == 0.0)
    throw InvalidInput("energy ratio undefined for a zero-energy field");
  return pl_energy(tri.scaled(c), f) / base;
}

double pl_energy_1d(std::span<const double> nodes, std::span<const double> f) {
  if (nodes.size() != f.size())
    throw InvalidInput("field length does not match node count");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double dx = nodes[i + 1] - nodes[i];
    if (!(dx > 0.0))
      throw InvalidInput("1D nodes must be strictly increasing");
    const double df = f[i + 1] - f[i];
    sum += df * df / dx;
  }
  return sum;
}

double dilation_energy_ratio_1d(std::span<const double> nodes,
                                std::span<const double> f, double c) {
  if (!(c > 0.0))
    throw InvalidInput("dilation factor must be positive");
  const double base = pl_energy_1d(nodes, f);
  if (base == 0.0)
    throw InvalidInput("energy ratio undefined for a zero-energy field");
  std::vector<double> scaled(nodes.begin(), nodes.end());
  for (double &x : scaled)
    x *= c;
  return pl_energy_1d(scaled, f) / base;
}

// I/O

void write_graph(std::ostream &os, const WeightedGraph &g) {
  os << "GFFG 1 " << g.n_vertices() << ' ' << g.edges().size() << ' '
     << (g.zero_mean_mode() ? 1 : 0) << '\n';
  for (VertexId v = 0; v < g.n_vertices(); ++v) {
    os << "V " << v;
    for (double x : g.position(v))
      os << ' ' << format_real(x);
    os << '\n';
  }
  for (VertexId b : g.boundary())
    os << "B " << b << '\n';
  for (const Edge &e : g.edges())
    os << "E " << e.u << ' ' << e.v << ' ' << format_real(e.w) << '\n';
}

namespace {

void expect_header(std::istream &is, const char *magic, std::string &line) {
  if (!std::getline(is, line))
    throw InvalidInput(std::string("empty input, expected ") + magic);
  std::istringstream hs(line);
  std::string tag;
  int version = 0;
  hs >> tag >> version;
  if (tag != magic || version != 1)
    throw InvalidInput(std::string("bad header, expected '") + magic + " 1'");
}

} // namespace

WeightedGraph read_graph(std::istream &is, const GraphOptions &options) {
  std::string line;
  expect_header(is, "GFFG", line);
  std::istringstream hs(line);
  std::string tag;
  int version;
  std::size_t n = 0, m = 0;
  int zero_mean = 0;
  if (!(hs >> tag >> version >> n >> m >> zero_mean))
    throw InvalidInput("malformed GFFG header");
  if (n > options.max_vertices)
    throw ResourceError("graph file exceeds the vertex cap");

  std::vector<double> positions;
  std::size_t dim = 0;
  bool dim_known = false;
  std::vector<bool> seen(n, false);
  std::vector<VertexId> boundary;
  std::vector<Edge> edges;
  edges.reserve(m);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::istringstream ls(line);
    char kind = 0;
    ls >> kind;
    auto fail = [&](const std::string &what) {
      return InvalidInput("line " + std::to_string(lineno) + ": " + what);
    };
    if (kind == 'V') {
      VertexId id;
      if (!(ls >> id) || id >= n)
        throw fail("bad vertex id");
      std::vector<double> coords;
      double x;
      while (ls >> x)
        coords.push_back(x);
      if (!dim_known) {
        dim = coords.size();
        dim_known = true;
        positions.assign(n * dim, 0.0);
      } else if (coords.size() != dim) {
        throw fail("inconsistent coordinate dimension");
      }
      std::copy(coords.begin(), coords.end(), positions.begin() + id * dim);
      seen[id] = true;
    } else if (kind == 'B') {
      VertexId id;
      if (!(ls >> id))
        throw fail("bad boundary line");
      boundary.push_back(id);
    } else if (kind == 'E') {
      Edge e;
      if (!(ls >> e.u >> e.v >> e.w))
        throw fail("bad edge line");
      edges.push_back(e);
    } else {
      throw fail("unknown record type");
    }
  }
  if (edges.size() != m)
    throw InvalidInput("edge count does not match header");
  if (dim > 0 && !std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }))
    throw InvalidInput("missing vertex records");
  return WeightedGraph(n, std::move(edges), std::move(boundary), zero_mean != 0,
                       std::move(positions), dim, options);
}

void write_triangulation(std::ostream &os, const Triangulation &tri) {
  os << "GFFT 1 " << tri.n_vertices() << ' ' << tri.triangles().size()
     << '\n';
  for (VertexId v = 0; v < tri.n_vertices(); ++v)
    os << "V " << v << ' ' << format_real(tri.vertices()[v][0]) << ' '
       << format_real(tri.vertices()[v][1]) << '\n';
  for (VertexId b : tri.boundary())
    os << "B " << b << '\n';
  for (const auto &t : tri.triangles())
    os << "T " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

Triangulation read_triangulation(std::istream &is) {
  std::string line;
  expect_header(is, "GFFT", line);
  std::istringstream hs(line);
  std::string tag;
  int version;
  std::size_t n = 0, nt = 0;
  if (!(hs >> tag >> version >> n >> nt))
    throw InvalidInput("malformed GFFT header");
  std::vector<Triangulation::Point> pts(n);
  std::vector<bool> seen(n, false);
  std::vector<VertexId> boundary;
  std::vector<Triangulation::Triangle> tris;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::istringstream ls(line);
    char kind = 0;
    ls >> kind;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (kind == 'V') {
      VertexId id;
      double x, y;
      if (!(ls >> id >> x >> y) || id >= n)
        throw InvalidInput(where + "bad vertex line");
      pts[id] = {x, y};
      seen[id] = true;
    } else if (kind == 'B') {
      VertexId id;
      if (!(ls >> id))
        throw InvalidInput(where + "bad boundary line");
      boundary.push_back(id);
    } else if (kind == 'T') {
      Triangulation::Triangle t;
      if (!(ls >> t[0] >> t[1] >> t[2]))
        throw InvalidInput(where + "bad triangle line");
      tris.push_back(t);
    } else {
      throw InvalidInput(where + "unknown record type");
    }
  }
  if (tris.size() != nt)
    throw InvalidInput("triangle count does not match header");
  if (!std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }))
    throw InvalidInput("missing vertex records");
  return Triangulation(std::move(pts), std::move(tris), std::move(boundary));
}

WeightedGraph load_graph(const std::string &path, const GraphOptions &options) {
  std::ifstream in(path);
  if (!in)
    throw InvalidInput("cannot open graph file " + path);
  return read_graph(in, options);
}

Triangulation load_triangulation(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw InvalidInput("cannot open triangulation file " + path);
  return read_triangulation(in);
}

} // namespace gfflab
