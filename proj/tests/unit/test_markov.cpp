#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "test_support.hpp"

using namespace gfflab;
namespace gt = gfflab::testing;

namespace {

// Interior vertices of the 7x7 grid in the 3x3 block around the centre.
std::vector<VertexId> centre_block() {
  std::vector<VertexId> U;
  for (std::size_t r = 2; r <= 4; ++r)
    for (std::size_t c = 2; c <= 4; ++c)
      U.push_back(r * 7 + c);
  return U;
}

std::vector<VertexId> random_subset(Rng &rng, const std::vector<VertexId> &from) {
  std::vector<VertexId> U;
  for (VertexId v : from)
    if (rng.uniform() < 0.4)
      U.push_back(v);
  if (U.empty())
    U.push_back(from[rng.next_u64() % from.size()]);
  return U;
}

} // namespace

TEST_CASE("conditional law of one vertex") {
  const WeightedGraph g = build_box_lattice(2, 3);
  Rng rng(1);
  FieldFunction f(g.n_vertices());
  rng.fill_normal(f);
  const VertexId y = 24;
  const ConditionalLaw law = conditional_law(g, std::vector<VertexId>{y}, f);
  const OnePointConditional one = one_point_conditional(g, y);
  double Y = 0.0;
  for (const Neighbor &nb : one.weights)
    Y += nb.w * f[nb.vertex];
  CHECK(law.mean[0] == doctest::Approx(Y).epsilon(1e-13));
  CHECK(law.covariance.values(0, 0) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(law.subproblem_boundary.size() == 4);
}

TEST_CASE("conditional law with zero exterior") {
  const WeightedGraph g = build_box_lattice(2, 3);
  const auto U = centre_block();
  const ConditionalLaw law = conditional_law(g, U, FieldFunction(49, 0.0));
  for (double m : law.mean)
    CHECK(m == 0.0);
  // Independent oracle: invert the principal block of the Laplacian on U.
  const Eigen::MatrixXd L = gt::dense_laplacian(g);
  Eigen::MatrixXd block(9, 9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      block(i, j) = L(static_cast<Eigen::Index>(U[i]), static_cast<Eigen::Index>(U[j]));
  CHECK((law.covariance.values - block.inverse()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("conditional covariance does not depend on the exterior values") {
  const WeightedGraph g = build_box_lattice(2, 3);
  const auto U = centre_block();
  Rng rng(2);
  const ConditionalLaw ref = conditional_law(g, U, FieldFunction(49, 0.0));
  for (int trial = 0; trial < 5; ++trial) {
    FieldFunction ext(49);
    rng.fill_normal(ext);
    const ConditionalLaw law = conditional_law(g, U, ext);
    CHECK(law.covariance.values == ref.covariance.values);
    CHECK(law.vertices == ref.vertices);
  }
}

TEST_CASE("conditional law against sampled residuals") {
  const WeightedGraph g = build_box_lattice(2, 3);
  const auto U = centre_block();
  const GaussianFieldSampler s(g);
  const std::size_t K = 100000;
  CovarianceAccumulator acc(U.size());
  Rng rng(3);
  std::vector<double> residual(U.size());
  for (std::size_t i = 0; i < K; ++i) {
    const FieldFunction f = s.draw(rng);
    const ConditionalLaw law = conditional_law(g, U, f);
    for (std::size_t j = 0; j < U.size(); ++j)
      residual[j] = f[U[j]] - law.mean[j];
    acc.add(residual);
  }
  const ConditionalLaw law = conditional_law(g, U, FieldFunction(49, 0.0));
  CHECK(max_standardized_deviation(acc.covariance(), law.covariance.values, K) < 5.0);
  CHECK(acc.mean().cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("conditional law rejects bad subsets") {
  const WeightedGraph g = build_box_lattice(2, 2);
  CHECK_THROWS_AS(conditional_law(g, std::vector<VertexId>{0}, FieldFunction(25, 0.0)),
                  InvalidInput);
  CHECK_THROWS_AS(conditional_law(build_torus_grid(3, 3), std::vector<VertexId>{0},
                                  FieldFunction(9, 0.0)),
                  UnsupportedGraph);
}

TEST_CASE("decomposition of a harmonic field") {
  const WeightedGraph g = build_box_lattice(2, 3);
  Rng rng(4);
  FieldFunction bv(49);
  rng.fill_normal(bv);
  const FieldFunction h = harmonic_extension(g, bv);
  const Decomposition d = decompose(g, centre_block(), h);
  for (double r : d.remainder)
    CHECK(std::abs(r) < 1e-12);
}

TEST_CASE("orthogonality and Pythagoras on random subsets") {
  const WeightedGraph g = build_box_lattice(2, 4);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto U = random_subset(rng, g.interior());
    FieldFunction f(g.n_vertices());
    rng.fill_normal(f);
    const Decomposition d = decompose(g, U, f);
    const double total = dirichlet_energy(g, f);
    CHECK(std::abs(dirichlet_inner(g, d.harmonic_part, d.remainder)) < 1e-10 * total);
    CHECK(std::abs(dirichlet_energy(g, d.harmonic_part) +
                   dirichlet_energy(g, d.remainder) - total) < 1e-10 * total);
    std::vector<bool> inU(g.n_vertices(), false);
    for (VertexId v : U)
      inU[v] = true;
    for (VertexId v = 0; v < g.n_vertices(); ++v) {
      if (!inU[v]) {
        CHECK(d.remainder[v] == 0.0);
        CHECK(d.harmonic_part[v] == f[v]);
      }
    }
  }
}

TEST_CASE("remainder law under sampling") {
  const WeightedGraph g = build_box_lattice(2, 3);
  const auto U = centre_block();
  const GaussianFieldSampler s(g);
  const std::size_t K = 100000;
  CovarianceAccumulator acc(2 * U.size());
  Rng rng(6);
  std::vector<double> row(2 * U.size());
  for (std::size_t i = 0; i < K; ++i) {
    const FieldFunction f = s.draw(rng);
    const Decomposition d = decompose(g, U, f);
    for (std::size_t j = 0; j < U.size(); ++j) {
      row[j] = d.remainder[U[j]];
      row[U.size() + j] = d.harmonic_part[U[j]];
    }
    acc.add(row);
  }
  const Eigen::MatrixXd C = acc.covariance();
  const auto n = static_cast<Eigen::Index>(U.size());
  const ConditionalLaw law = conditional_law(g, U, FieldFunction(49, 0.0));
  CHECK(max_standardized_deviation(C.topLeftCorner(n, n), law.covariance.values, K) < 5.0);
  const Eigen::MatrixXd SE = covariance_std_error(C, K);
  CHECK((C.topRightCorner(n, n).cwiseAbs().array() /
         SE.topRightCorner(n, n).array())
            .maxCoeff() < 5.0);
}

TEST_CASE("default f0 and ordering") {
  const WeightedGraph g = build_box_lattice(2, 3);
  const FieldFunction f0 = default_f0(g);
  CHECK(dirichlet_energy(g, f0) == doctest::Approx(1.0).epsilon(1e-12));
  // -Laplacian f0 is one constant on the interior.
  const Eigen::VectorXd lf = gt::dense_laplacian(g) *
                             Eigen::Map<const Eigen::VectorXd>(f0.data(), 49);
  for (VertexId v : g.interior())
    CHECK(lf[static_cast<Eigen::Index>(v)] ==
          doctest::Approx(lf[static_cast<Eigen::Index>(g.interior()[0])]).epsilon(1e-10));
  for (VertexId v : g.boundary())
    CHECK(f0[v] == 0.0);

  const auto order = boustrophedon_ordering(g);
  CHECK(order.size() == 25);
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == g.interior());
  CHECK(order[0] == 8);
  CHECK(order[4] == 12);
  CHECK(order[5] == 19);
}

TEST_CASE("exploration endpoints and time change") {
  const WeightedGraph g = build_box_lattice(2, 3);
  const FieldFunction f0 = default_f0(g);
  const auto order = boustrophedon_ordering(g);
  const FieldSample field = sample_dgff_direct(g, 7);
  const ExplorationTrace tr = explore(g, f0, order, field.values);
  REQUIRE(tr.times.size() == 26);
  CHECK(tr.values[0] == 0.0);
  CHECK(tr.times[0] == 0.0);
  CHECK(tr.values.back() ==
        doctest::Approx(dirichlet_inner(g, field.values, f0)).epsilon(1e-10));
  CHECK(std::abs(tr.times.back() - dirichlet_energy(g, f0)) < 1e-10);
  for (std::size_t k = 1; k < tr.times.size(); ++k)
    CHECK(tr.times[k] > tr.times[k - 1]);

  // t_k and W_k from first principles at one step.
  const std::size_t k = 9;
  const FieldFunction Pk = project_onto_revealed(
      g, f0, std::span<const VertexId>(order.data(), k));
  CHECK(tr.times[k] == doctest::Approx(dirichlet_energy(g, Pk)).epsilon(1e-10));
  FieldFunction revealed(49, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    revealed[order[i]] = field.values[order[i]];
  const FieldFunction cond = project_onto_revealed(
      g, revealed, std::span<const VertexId>(order.data(), k));
  CHECK(tr.values[k] == doctest::Approx(dirichlet_inner(g, cond, f0)).epsilon(1e-10));

  auto bad = order;
  bad[1] = bad[0];
  CHECK_THROWS_AS(explore(g, f0, bad, field.values), InvalidInput);
  bad.pop_back();
  CHECK_THROWS_AS(explore(g, f0, bad, field.values), InvalidInput);
}

TEST_CASE("exploration increments are Brownian") {
  const WeightedGraph g = build_box_lattice(2, 2);
  const ExplorationPlan plan(g, default_f0(g), boustrophedon_ordering(g));
  const std::size_t K = 10000, steps = plan.steps();
  const GaussianFieldSampler s(g);
  CovarianceAccumulator inc(steps);
  Rng rng(8);
  std::vector<double> d(steps);
  // Martingale: bin on W_k, mean of W_{k+1} - W_k per bin.
  const std::size_t kb = 4;
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < K; ++i) {
    const ExplorationTrace tr = plan.run(s.draw(rng));
    for (std::size_t k = 0; k < steps; ++k)
      d[k] = tr.values[k + 1] - tr.values[k];
    inc.add(d);
    pairs.push_back({tr.values[kb], tr.values[kb + 1] - tr.values[kb]});
  }
  const Eigen::MatrixXd C = inc.covariance();
  const auto &t = plan.times();
  for (std::size_t k = 0; k < steps; ++k) {
    const double dt = t[k + 1] - t[k];
    CHECK(std::abs(C(k, k) - dt) < 5.0 * dt * std::sqrt(2.0 / K));
    for (std::size_t j = k + 1; j < steps; ++j) {
      const double corr = C(k, j) / std::sqrt(C(k, k) * C(j, j));
      CHECK(std::abs(corr) < 5.0 / std::sqrt(static_cast<double>(K)));
    }
  }

  std::sort(pairs.begin(), pairs.end());
  const std::size_t bins = 5, per = K / bins;
  const double sd = std::sqrt(t[kb + 1] - t[kb]);
  for (std::size_t b = 0; b < bins; ++b) {
    double m = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i)
      m += pairs[i].second;
    m /= static_cast<double>(per);
    CHECK(std::abs(m) < 5.0 * sd / std::sqrt(static_cast<double>(per)));
  }
}

TEST_CASE("explore_functional") {
  const WeightedGraph g = build_box_lattice(2, 2);
  const ExplorationTrace tr = explore(g, default_f0(g), boustrophedon_ordering(g),
                                      sample_dgff_direct(g, 2).values);
  const std::size_t s = 4, last = tr.steps();
  const std::vector<ProjectionTerm> one{{1.0, s}}, two{{2.0, s}}, full{{1.0, last}};
  const auto w1 = explore_functional(tr, one);
  const auto w2 = explore_functional(tr, two);
  const auto wf = explore_functional(tr, full);
  for (std::size_t k = 0; k <= last; ++k) {
    if (k >= s)
      CHECK(w1[k] == tr.values[s]);
    else
      CHECK(w2[k] == 2.0 * tr.values[k]);
    CHECK(wf[k] == tr.values[k]);
  }
  const std::vector<ProjectionTerm> out_of_range{{1.0, last + 1}};
  CHECK_THROWS_AS(explore_functional(tr, out_of_range), InvalidInput);

  // Linearity against a direct pairing: f = 2 P_s f0 - P_last f0.
  const ExplorationPlan plan(g, default_f0(g), boustrophedon_ordering(g));
  const FieldFunction field = sample_dgff_direct(g, 2).values;
  FieldFunction f(g.n_vertices());
  const FieldFunction ps = plan.projection(s), pl = plan.projection(last);
  for (std::size_t v = 0; v < f.size(); ++v)
    f[v] = 2.0 * ps[v] - pl[v];
  const std::vector<ProjectionTerm> combo{{2.0, s}, {-1.0, last}};
  CHECK(explore_functional(tr, combo)[last] ==
        doctest::Approx(dirichlet_inner(g, field, f)).epsilon(1e-10));
}

TEST_CASE("trace CSV") {
  const WeightedGraph g = build_box_lattice(2, 1);
  const ExplorationTrace tr =
      explore(g, default_f0(g), boustrophedon_ordering(g), FieldFunction(9, 0.0));
  std::ostringstream os;
  write_trace_csv(os, tr);
  CHECK(os.str().rfind("k,t,W\n0,0,0\n1,", 0) == 0);
}
