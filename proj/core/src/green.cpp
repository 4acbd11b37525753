#include "gfflab/green.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include <Eigen/SparseCholesky>

#include "gfflab/error.hpp"
#include "gfflab/rng.hpp"
#include "parallel.hpp"

namespace gfflab {

namespace {

constexpr std::size_t kWalkBlock = 4096;

Eigen::VectorXd centered(Eigen::VectorXd x) {
  if (x.size() > 0)
    x.array() -= x.mean();
  return x;
}

} // namespace

struct LaplacianSolver::Impl {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

LaplacianSolver::LaplacianSolver(const WeightedGraph &g, double mass2)
    : impl_(std::make_unique<Impl>()), n_free_(g.n_free()),
      zero_mean_(g.zero_mean_mode()),
      grounded_(g.zero_mean_mode() && mass2 == 0.0) {
  if (!(mass2 >= 0.0))
    throw InvalidInput("mass2 must be non-negative");
  if (n_free_ == 0)
    return;
  Eigen::SparseMatrix<double> form = g.reduced_laplacian();
  if (mass2 > 0.0) {
    Eigen::SparseMatrix<double> id(form.rows(), form.cols());
    id.setIdentity();
    form += mass2 * id;
  }
  if (grounded_) {
    const Eigen::Index n = form.rows();
    Eigen::SparseMatrix<double> sub = form.bottomRightCorner(n - 1, n - 1);
    form = sub;
  }
  if (form.rows() == 0)
    return;
  impl_->llt.compute(form);
  if (impl_->llt.info() != Eigen::Success) {
    const Eigen::VectorXd diag = form.diagonal();
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "Cholesky factorization failed on %lld unknowns (diagonal "
                  "range [%.3g, %.3g]); form is singular or indefinite",
                  static_cast<long long>(form.rows()), diag.minCoeff(),
                  diag.maxCoeff());
    throw NumericalError(buf);
  }
}

LaplacianSolver::~LaplacianSolver() = default;
LaplacianSolver::LaplacianSolver(LaplacianSolver &&) noexcept = default;
LaplacianSolver &LaplacianSolver::operator=(LaplacianSolver &&) noexcept =
    default;

std::size_t LaplacianSolver::noise_size() const {
  return grounded_ ? n_free_ - 1 : n_free_;
}

Eigen::VectorXd LaplacianSolver::solve(const Eigen::VectorXd &b) const {
  if (static_cast<std::size_t>(b.size()) != n_free_)
    throw InvalidInput("right-hand side length does not match unknowns");
  if (n_free_ == 0)
    return {};
  if (!zero_mean_)
    return impl_->llt.solve(b);
  const Eigen::VectorXd pb = centered(b);
  Eigen::VectorXd x(b.size());
  if (grounded_) {
    x[0] = 0.0;
    if (b.size() > 1)
      x.tail(b.size() - 1) = impl_->llt.solve(pb.tail(b.size() - 1));
  } else {
    x = impl_->llt.solve(pb);
  }
  return centered(std::move(x));
}

Eigen::VectorXd LaplacianSolver::correlate(const Eigen::VectorXd &z) const {
  if (static_cast<std::size_t>(z.size()) != noise_size())
    throw InvalidInput("noise length does not match the factorization");
  if (z.size() == 0)
    return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_free_));
  // Factor P A P^T = L L^T, so P^T L^{-T} z has covariance A^{-1}.
  const Eigen::VectorXd w = impl_->llt.matrixU().solve(z);
  Eigen::VectorXd y = impl_->llt.permutationPinv() * w;
  if (!zero_mean_)
    return y;
  if (grounded_) {
    Eigen::VectorXd x(y.size() + 1);
    x[0] = 0.0;
    x.tail(y.size()) = y;
    return centered(std::move(x));
  }
  return centered(std::move(y));
}

double GreensMatrix::at(VertexId x, VertexId y) const {
  if (x >= row_of.size() || y >= row_of.size())
    throw InvalidInput("vertex out of range");
  const std::size_t rx = row_of[x], ry = row_of[y];
  if (rx == WeightedGraph::npos || ry == WeightedGraph::npos)
    return 0.0;
  return values(static_cast<Eigen::Index>(rx), static_cast<Eigen::Index>(ry));
}

GreensMatrix greens_matrix(const WeightedGraph &g) {
  const std::size_t n = g.n_free();
  if (n > kDenseGreenCap)
    throw ResourceError("dense Green's matrix capped at " +
                        std::to_string(kDenseGreenCap) +
                        " free vertices; use greens_column");
  LaplacianSolver solver(g);
  GreensMatrix G;
  G.vertices = g.free_vertices();
  G.row_of.assign(g.n_vertices(), WeightedGraph::npos);
  for (VertexId v : G.vertices)
    G.row_of[v] = g.reduced_index(v);
  const auto ni = static_cast<Eigen::Index>(n);
  G.values.resize(ni, ni);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    e[i] = 1.0;
    G.values.col(i) = solver.solve(e);
    e[i] = 0.0;
  }
  // Symmetrize away round-off.
  G.values = 0.5 * (G.values + G.values.transpose()).eval();
  return G;
}

FieldFunction greens_column(const WeightedGraph &g, VertexId x) {
  if (x >= g.n_vertices())
    throw InvalidInput("vertex out of range");
  FieldFunction out(g.n_vertices(), 0.0);
  const std::size_t rx = g.reduced_index(x);
  if (rx == WeightedGraph::npos)
    return out;
  LaplacianSolver solver(g);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.n_free()));
  e[static_cast<Eigen::Index>(rx)] = 1.0;
  const Eigen::VectorXd col = solver.solve(e);
  for (std::size_t i = 0; i < g.n_free(); ++i)
    out[g.free_vertices()[i]] = col[static_cast<Eigen::Index>(i)];
  return out;
}

namespace {

void require_walkable(const WeightedGraph &g) {
  if (!g.positive_weights())
    throw UnsupportedGraph(
        "random-walk estimators need strictly positive weights");
  if (g.zero_mean_mode())
    throw UnsupportedGraph("random-walk estimators need an absorbing boundary");
}

VertexId step(const WeightedGraph &g, VertexId v, Rng &rng) {
  const auto nbrs = g.neighbors(v);
  double u = rng.uniform() * g.weighted_degree(v);
  for (const Neighbor &nb : nbrs) {
    u -= nb.w;
    if (u < 0.0)
      return nb.vertex;
  }
  return nbrs.back().vertex;
}

// Runs `walk(rng)` n times in fixed-size blocks, one stream per block, and
// returns mean and standard error of the outcomes.
template <class Walk>
WalkEstimate run_blocks(std::size_t n_walks, std::uint64_t seed,
                        unsigned threads, Walk &&walk) {
  if (n_walks < 2)
    throw InvalidInput("need at least two walks for an error estimate");
  const std::size_t blocks = (n_walks + kWalkBlock - 1) / kWalkBlock;
  std::vector<double> sums(blocks, 0.0), sq(blocks, 0.0);
  detail::parallel_for(blocks, threads, [&](std::size_t b) {
    Rng rng(seed, b);
    const std::size_t begin = b * kWalkBlock;
    const std::size_t end = std::min(n_walks, begin + kWalkBlock);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double x = walk(rng);
      s += x;
      s2 += x * x;
    }
    sums[b] = s;
    sq[b] = s2;
  });
  double s = 0.0, s2 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    s += sums[b];
    s2 += sq[b];
  }
  const double n = static_cast<double>(n_walks);
  WalkEstimate out;
  out.n = n_walks;
  out.estimate = s / n;
  const double var = std::max(0.0, (s2 - n * out.estimate * out.estimate) / (n - 1));
  out.std_error = std::sqrt(var / n);
  return out;
}

} // namespace

WalkEstimate greens_by_walk(const WeightedGraph &g, VertexId x, VertexId y,
                            std::size_t n_walks, std::uint64_t seed,
                            unsigned threads) {
  require_walkable(g);
  if (x >= g.n_vertices() || y >= g.n_vertices())
    throw InvalidInput("vertex out of range");
  if (g.is_boundary(x))
    throw InvalidInput("walk must start at an interior vertex");
  if (g.is_boundary(y)) {
    WalkEstimate zero;
    zero.n = n_walks;
    return zero;
  }
  return run_blocks(n_walks, seed, threads, [&](Rng &rng) {
    VertexId v = x;
    double time_at_y = 0.0;
    while (!g.is_boundary(v)) {
      const double hold = rng.exponential(g.weighted_degree(v));
      if (v == y)
        time_at_y += hold;
      v = step(g, v, rng);
    }
    return time_at_y;
  });
}

WalkEstimate exit_value_by_walk(const WeightedGraph &g,
                                std::span<const double> values, VertexId x,
                                std::size_t n_walks, std::uint64_t seed,
                                unsigned threads) {
  require_walkable(g);
  if (values.size() != g.n_vertices())
    throw InvalidInput("boundary values do not match vertex count");
  if (x >= g.n_vertices())
    throw InvalidInput("vertex out of range");
  return run_blocks(n_walks, seed, threads, [&](Rng &rng) {
    VertexId v = x;
    while (!g.is_boundary(v))
      v = step(g, v, rng);
    return values[v];
  });
}

FieldFunction harmonic_extension(const WeightedGraph &g,
                                 std::span<const double> boundary_values) {
  if (g.zero_mean_mode())
    throw InvalidInput("harmonic extension needs a non-empty boundary");
  if (boundary_values.size() != g.n_vertices())
    throw InvalidInput("boundary values do not match vertex count");
  FieldFunction out(g.n_vertices(), 0.0);
  for (VertexId b : g.boundary())
    out[b] = boundary_values[b];
  if (g.n_free() == 0)
    return out;
  LaplacianSolver solver(g);
  const Eigen::VectorXd x = solver.solve(g.boundary_load(boundary_values));
  for (std::size_t i = 0; i < g.n_free(); ++i)
    out[g.free_vertices()[i]] = x[static_cast<Eigen::Index>(i)];
  return out;
}

OnePointConditional one_point_conditional(const WeightedGraph &g, VertexId y) {
  if (y >= g.n_vertices())
    throw InvalidInput("vertex out of range");
  if (g.is_boundary(y))
    throw InvalidInput("conditional law is defined at interior vertices");
  const auto nbrs = g.neighbors(y);
  if (nbrs.empty())
    throw InvalidInput("isolated vertex " + std::to_string(y));
  const double total = g.weighted_degree(y);
  if (!(total > 0.0))
    throw NumericalError("non-positive total weight at vertex " +
                         std::to_string(y));
  OnePointConditional out;
  out.variance = 1.0 / total;
  out.weights.reserve(nbrs.size());
  for (const Neighbor &nb : nbrs)
    out.weights.push_back({nb.vertex, nb.w / total});
  return out;
}

void write_greens_csv(std::ostream &os, const GreensMatrix &G) {
  char buf[40];
  os << "vertex";
  for (VertexId v : G.vertices)
    os << ',' << v;
  os << '\n';
  for (std::size_t i = 0; i < G.size(); ++i) {
    os << G.vertices[i];
    for (std::size_t j = 0; j < G.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g",
                    G.values(static_cast<Eigen::Index>(i),
                             static_cast<Eigen::Index>(j)));
      os << ',' << buf;
    }
    os << '\n';
  }
}

} // namespace gfflab
