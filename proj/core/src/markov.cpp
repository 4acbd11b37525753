#include "gfflab/markov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include <Eigen/SparseCholesky>

#include "gfflab/error.hpp"

namespace gfflab {

namespace {

// Principal block L_UU of the graph Laplacian and the exterior load.
struct Subproblem {
  std::vector<VertexId> vertices;
  std::vector<std::size_t> local; // vertex -> row, npos outside U
  std::vector<VertexId> exterior_neighbors;
  Eigen::SparseMatrix<double> form;

  Subproblem(const WeightedGraph &g, std::span<const VertexId> U) {
    if (g.zero_mean_mode())
      throw UnsupportedGraph("conditioning needs a boundary-pinned graph");
    vertices.assign(U.begin(), U.end());
    std::sort(vertices.begin(), vertices.end());
    if (std::adjacent_find(vertices.begin(), vertices.end()) != vertices.end())
      throw InvalidInput("vertex subset repeats a vertex");
    local.assign(g.n_vertices(), WeightedGraph::npos);
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      const VertexId v = vertices[i];
      if (v >= g.n_vertices())
        throw InvalidInput("vertex out of range");
      if (g.is_boundary(v))
        throw InvalidInput("vertex subset must be interior");
      local[v] = i;
    }
    std::vector<bool> ext(g.n_vertices(), false);
    std::vector<Eigen::Triplet<double>> t;
    for (const Edge &e : g.edges()) {
      const std::size_t a = local[e.u], b = local[e.v];
      const auto ia = static_cast<Eigen::Index>(a);
      const auto ib = static_cast<Eigen::Index>(b);
      if (a != WeightedGraph::npos)
        t.emplace_back(ia, ia, e.w);
      if (b != WeightedGraph::npos)
        t.emplace_back(ib, ib, e.w);
      if (a != WeightedGraph::npos && b != WeightedGraph::npos) {
        t.emplace_back(ia, ib, -e.w);
        t.emplace_back(ib, ia, -e.w);
      } else if (a != WeightedGraph::npos) {
        ext[e.v] = true;
      } else if (b != WeightedGraph::npos) {
        ext[e.u] = true;
      }
    }
    for (VertexId v = 0; v < g.n_vertices(); ++v)
      if (ext[v])
        exterior_neighbors.push_back(v);
    if (!vertices.empty() && exterior_neighbors.empty())
      throw InvalidInput("vertex subset touches no exterior vertex");
    const auto n = static_cast<Eigen::Index>(vertices.size());
    form.resize(n, n);
    form.setFromTriplets(t.begin(), t.end());
  }

  Eigen::VectorXd load(const WeightedGraph &g,
                       std::span<const double> values) const {
    Eigen::VectorXd b =
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vertices.size()));
    for (const Edge &e : g.edges()) {
      const std::size_t a = local[e.u], c = local[e.v];
      if (a != WeightedGraph::npos && c == WeightedGraph::npos)
        b[static_cast<Eigen::Index>(a)] += e.w * values[e.v];
      else if (c != WeightedGraph::npos && a == WeightedGraph::npos)
        b[static_cast<Eigen::Index>(c)] += e.w * values[e.u];
    }
    return b;
  }
};

using Factor = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>;

void factor(Factor &llt, const Eigen::SparseMatrix<double> &form) {
  llt.compute(form);
  if (llt.info() != Eigen::Success)
    throw NumericalError("subproblem form is not positive definite");
}

} // namespace

ConditionalLaw conditional_law(const WeightedGraph &g,
                               std::span<const VertexId> U,
                               std::span<const double> exterior_values) {
  if (exterior_values.size() != g.n_vertices())
    throw InvalidInput("exterior values do not match vertex count");
  Subproblem sub(g, U);
  if (sub.vertices.size() > kDenseGreenCap)
    throw ResourceError("conditional covariance capped at " +
                        std::to_string(kDenseGreenCap) + " vertices");
  ConditionalLaw law;
  law.vertices = sub.vertices;
  law.subproblem_boundary = sub.exterior_neighbors;
  const auto n = static_cast<Eigen::Index>(sub.vertices.size());
  law.covariance.vertices = sub.vertices;
  law.covariance.row_of = sub.local;
  if (n == 0)
    return law;
  Factor llt;
  factor(llt, sub.form);
  const Eigen::VectorXd mean = llt.solve(sub.load(g, exterior_values));
  law.mean.assign(mean.data(), mean.data() + n);
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
  law.covariance.values = 0.5 * (cov + cov.transpose());
  return law;
}

FieldFunction harmonic_fill(const WeightedGraph &g,
                            std::span<const VertexId> U,
                            std::span<const double> f) {
  if (f.size() != g.n_vertices())
    throw InvalidInput("field length does not match vertex count");
  FieldFunction out(f.begin(), f.end());
  if (U.empty())
    return out;
  Subproblem sub(g, U);
  Factor llt;
  factor(llt, sub.form);
  const Eigen::VectorXd x = llt.solve(sub.load(g, f));
  for (std::size_t i = 0; i < sub.vertices.size(); ++i)
    out[sub.vertices[i]] = x[static_cast<Eigen::Index>(i)];
  return out;
}

Decomposition decompose(const WeightedGraph &g, std::span<const VertexId> U,
                        std::span<const double> field) {
  Decomposition d;
  d.harmonic_part = harmonic_fill(g, U, field);
  d.remainder.resize(field.size());
  for (std::size_t i = 0; i < field.size(); ++i)
    d.remainder[i] = field[i] - d.harmonic_part[i];
  // Exact zeros off U.
  std::vector<bool> in_u(g.n_vertices(), false);
  for (VertexId v : U)
    in_u[v] = true;
  for (VertexId v = 0; v < g.n_vertices(); ++v)
    if (!in_u[v]) {
      d.remainder[v] = 0.0;
      d.harmonic_part[v] = field[v];
    }
  return d;
}

FieldFunction project_onto_revealed(const WeightedGraph &g,
                                    std::span<const double> f,
                                    std::span<const VertexId> revealed) {
  std::vector<bool> known(g.n_vertices(), false);
  for (VertexId v : revealed) {
    if (v >= g.n_vertices())
      throw InvalidInput("vertex out of range");
    known[v] = true;
  }
  std::vector<VertexId> hidden;
  for (VertexId v : g.interior())
    if (!known[v])
      hidden.push_back(v);
  return harmonic_fill(g, hidden, f);
}

namespace {

void check_ordering(const WeightedGraph &g, std::span<const VertexId> ordering) {
  std::vector<bool> seen(g.n_vertices(), false);
  for (VertexId v : ordering) {
    if (v >= g.n_vertices() || g.is_boundary(v) || seen[v])
      throw InvalidInput("ordering is not a permutation of the interior");
    seen[v] = true;
  }
  if (ordering.size() != g.interior().size())
    throw InvalidInput("ordering is not a permutation of the interior");
}

} // namespace

ExplorationPlan::ExplorationPlan(const WeightedGraph &g, FieldFunction f0,
                                 std::vector<VertexId> ordering)
    : graph_(&g), f0_(std::move(f0)), ordering_(std::move(ordering)) {
  if (g.zero_mean_mode())
    throw UnsupportedGraph("exploration needs a boundary-pinned graph");
  if (g.n_free() > kMaxFree)
    throw ResourceError("exploration plan capped at " +
                        std::to_string(kMaxFree) + " interior vertices");
  if (f0_.size() != g.n_vertices())
    throw InvalidInput("f0 length does not match vertex count");
  for (VertexId b : g.boundary())
    if (f0_[b] != 0.0)
      throw InvalidInput("f0 must vanish on the boundary");
  check_ordering(g, ordering_);

  const auto nv = static_cast<Eigen::Index>(g.n_vertices());
  const auto steps = static_cast<Eigen::Index>(ordering_.size());
  projections_.resize(nv, steps + 1);
  loads_.resize(nv, steps + 1);
  times_.resize(ordering_.size() + 1);
  const Eigen::SparseMatrix<double> lap = g.laplacian();
  for (Eigen::Index k = 0; k <= steps; ++k) {
    const FieldFunction p = project_onto_revealed(
        g, f0_, std::span(ordering_).first(static_cast<std::size_t>(k)));
    const Eigen::Map<const Eigen::VectorXd> pv(p.data(), nv);
    projections_.col(k) = pv;
    loads_.col(k) = lap * pv;
    times_[static_cast<std::size_t>(k)] = dirichlet_energy(g, p);
  }
}

FieldFunction ExplorationPlan::projection(std::size_t k) const {
  if (k > ordering_.size())
    throw InvalidInput("reveal index out of range");
  const auto col = projections_.col(static_cast<Eigen::Index>(k));
  return FieldFunction(col.data(), col.data() + col.size());
}

ExplorationTrace ExplorationPlan::run(std::span<const double> field) const {
  if (field.size() != graph_->n_vertices())
    throw InvalidInput("field length does not match vertex count");
  ExplorationTrace trace;
  trace.ordering = ordering_;
  trace.times = times_;
  const Eigen::Map<const Eigen::VectorXd> h(field.data(),
                                            static_cast<Eigen::Index>(field.size()));
  const Eigen::VectorXd w = loads_.transpose() * h;
  trace.values.assign(w.data(), w.data() + w.size());
  return trace;
}

ExplorationTrace explore(const WeightedGraph &g, std::span<const double> f0,
                         std::span<const VertexId> ordering,
                         std::span<const double> field) {
  ExplorationPlan plan(g, FieldFunction(f0.begin(), f0.end()),
                       std::vector<VertexId>(ordering.begin(), ordering.end()));
  return plan.run(field);
}

FieldFunction default_f0(const WeightedGraph &g) {
  if (g.zero_mean_mode())
    throw UnsupportedGraph("default f0 needs a boundary-pinned graph");
  LaplacianSolver solver(g);
  const Eigen::VectorXd x =
      solver.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.n_free())));
  FieldFunction f0(g.n_vertices(), 0.0);
  for (std::size_t i = 0; i < g.n_free(); ++i)
    f0[g.free_vertices()[i]] = x[static_cast<Eigen::Index>(i)];
  const double norm = std::sqrt(dirichlet_energy(g, f0));
  if (!(norm > 0.0))
    throw NumericalError("default f0 has zero energy");
  for (double &v : f0)
    v /= norm;
  return f0;
}

std::vector<VertexId> boustrophedon_ordering(const WeightedGraph &g) {
  if (g.dimension() != 2)
    throw InvalidInput("row sweep ordering needs 2D positions");
  std::vector<VertexId> order = g.interior();
  std::vector<double> rows;
  for (VertexId v : order)
    rows.push_back(g.position(v)[0]);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::sort(order.begin(), order.end(), [&](VertexId a, VertexId b) {
    const auto pa = g.position(a), pb = g.position(b);
    if (pa[0] != pb[0])
      return pa[0] < pb[0];
    const auto row = std::lower_bound(rows.begin(), rows.end(), pa[0]) - rows.begin();
    return row % 2 == 0 ? pa[1] < pb[1] : pa[1] > pb[1];
  });
  return order;
}

std::vector<double> explore_functional(const ExplorationTrace &trace,
                                       std::span<const ProjectionTerm> f) {
  const std::size_t steps = trace.steps();
  for (const ProjectionTerm &term : f)
    if (term.s > steps)
      throw InvalidInput("projection index " + std::to_string(term.s) +
                         " is not a reveal index");
  std::vector<double> out(steps + 1, 0.0);
  for (std::size_t k = 0; k <= steps; ++k)
    for (const ProjectionTerm &term : f)
      out[k] += term.a * trace.values[std::min(term.s, k)];
  return out;
}

void write_trace_csv(std::ostream &os, const ExplorationTrace &trace) {
  char buf[96];
  os << "k,t,W\n";
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k, trace.times[k],
                  trace.values[k]);
    os << buf;
  }
}

} // namespace gfflab
