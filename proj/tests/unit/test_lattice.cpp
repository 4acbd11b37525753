#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "test_support.hpp"

using namespace gfflab;
using gfflab::testing::dense_reduced;
using gfflab::testing::random_triangulation;

namespace {

bool dense_says_definite(const WeightedGraph &g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_reduced(g),
                                                    Eigen::EigenvaluesOnly);
  const auto &ev = es.eigenvalues();
  return ev.minCoeff() > 1e-10 * ev.cwiseAbs().maxCoeff();
}

std::vector<double> random_field(Rng &rng, std::size_t n) {
  std::vector<double> f(n);
  rng.fill_normal(f);
  return f;
}

} // namespace

TEST_CASE("box lattice counts") {
  const WeightedGraph path = build_box_lattice(1, 2);
  CHECK(path.n_vertices() == 5);
  CHECK(path.edges().size() == 4);
  CHECK(path.boundary() == std::vector<VertexId>{0, 4});

  const WeightedGraph g = build_box_lattice(2, 1);
  CHECK(g.n_vertices() == 9);
  CHECK(g.boundary().size() == 8);
  CHECK(g.interior() == std::vector<VertexId>{4});
  CHECK(g.edges().size() == 12);

  // Interior count against direct enumeration of coordinates.
  for (std::size_t d = 1; d <= 3; ++d)
    for (std::size_t n : {1u, 2u, 5u}) {
      const WeightedGraph b = build_box_lattice(d, n);
      std::size_t side = 2 * n + 1, total = 1, inner = 0;
      for (std::size_t i = 0; i < d; ++i)
        total *= side;
      for (std::size_t id = 0; id < total; ++id) {
        std::size_t rest = id;
        bool in = true;
        for (std::size_t i = 0; i < d; ++i) {
          const std::size_t c = rest % side;
          rest /= side;
          in = in && c != 0 && c != side - 1;
        }
        inner += in ? 1 : 0;
      }
      CHECK(b.n_vertices() == total);
      CHECK(b.interior().size() == inner);
    }
}

TEST_CASE("box lattice positions follow lexicographic ids") {
  const WeightedGraph g = build_box_lattice(2, 2);
  CHECK(g.dimension() == 2);
  // id = (x0 + n) * 5 + (x1 + n)
  CHECK(g.position(7)[0] == doctest::Approx(-1.0));
  CHECK(g.position(7)[1] == doctest::Approx(0.0));
}

TEST_CASE("vertex cap refuses oversized lattices") {
  GraphOptions opts;
  opts.max_vertices = 100;
  CHECK_THROWS_AS(build_box_lattice(3, 5, 1.0, opts), ResourceError);
  CHECK_NOTHROW(build_box_lattice(2, 4, 1.0, opts));
}

TEST_CASE("torus grid") {
  const WeightedGraph t = build_torus_grid(4, 8);
  CHECK(t.n_vertices() == 32);
  CHECK(t.edges().size() == 64);
  CHECK(t.zero_mean_mode());
  CHECK(t.boundary().empty());
  for (VertexId v = 0; v < t.n_vertices(); ++v)
    CHECK(t.neighbors(v).size() == 4);
  CHECK_THROWS_AS(build_torus_grid(2, 5), InvalidInput);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      gfflab::testing::dense_laplacian(build_torus_grid(4, 4)));
  CHECK(std::abs(es.eigenvalues()[0]) < 1e-12);
  CHECK(es.eigenvalues()[1] > 0.1);
}

TEST_CASE("constructor rejects malformed graphs") {
  CHECK_THROWS_AS(WeightedGraph(3, {{0, 0, 1.0}}, {0}, false), InvalidInput);
  CHECK_THROWS_AS(WeightedGraph(3, {{0, 1, 1.0}, {1, 0, 1.0}}, {0}, false),
                  InvalidInput);
  CHECK_THROWS_AS(WeightedGraph(3, {{0, 5, 1.0}}, {0}, false), InvalidInput);
  CHECK_THROWS_AS(WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}}, {}, false),
                  InvalidInput);
  CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, std::nan("")}}, {0}, false),
                  InvalidInput);
  // Free vertex 2 cut off from the boundary.
  CHECK_THROWS_AS(WeightedGraph(3, {{0, 1, 1.0}}, {0}, false), InvalidInput);
}

TEST_CASE("cotangent weights on square grid") {
  const WeightedGraph g = cotangent_weights(grid_triangulation(5, 5));
  const auto &tri_edges = g.edges();
  for (const Edge &e : tri_edges) {
    const auto pu = g.position(e.u), pv = g.position(e.v);
    const bool diagonal = pu[0] != pv[0] && pu[1] != pv[1];
    const bool outer = g.is_boundary(e.u) && g.is_boundary(e.v) &&
                       (pu[0] == pv[0] ? (pu[0] == 0 || pu[0] == 4)
                                       : (pu[1] == 0 || pu[1] == 4));
    if (diagonal)
      CHECK(std::abs(e.w) < 1e-15);
    else if (outer)
      CHECK(e.w == doctest::Approx(0.5).epsilon(1e-14));
    else
      CHECK(e.w == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("cotangent energy equals square-lattice energy for zero boundary") {
  Rng rng(11);
  for (bool anti : {false, true}) {
    const WeightedGraph cot = cotangent_weights(grid_triangulation(7, 7, 1.0, anti));
    const WeightedGraph sq = build_box_lattice(2, 3);
    auto f = random_field(rng, 49);
    for (VertexId v : sq.boundary())
      f[v] = 0.0;
    CHECK(dirichlet_energy(cot, f) ==
          doctest::Approx(dirichlet_energy(sq, f)).epsilon(1e-12));
  }
}

TEST_CASE("equilateral patch interior weights") {
  const Triangulation tri = equilateral_triangulation(6, 6);
  const WeightedGraph g = cotangent_weights(tri);
  const double w = 1.0 / std::sqrt(3.0);
  std::size_t interior_edges = 0;
  for (const Edge &e : g.edges())
    if (!(g.is_boundary(e.u) && g.is_boundary(e.v))) {
      CHECK(e.w == doctest::Approx(w).epsilon(1e-14));
      ++interior_edges;
    }
  CHECK(interior_edges > 0);

  // Energy of a field vanishing on the boundary against a neighbour sum
  // found from distances alone.
  Rng rng(5);
  auto f = random_field(rng, tri.n_vertices());
  for (VertexId v : tri.boundary())
    f[v] = 0.0;
  double nn = 0.0;
  const auto &p = tri.vertices();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const double d = std::hypot(p[i][0] - p[j][0], p[i][1] - p[j][1]);
      if (std::abs(d - 1.0) < 1e-9)
        nn += (f[i] - f[j]) * (f[i] - f[j]);
    }
  CHECK(dirichlet_energy(g, f) == doctest::Approx(w * nn).epsilon(1e-12));
}

TEST_CASE("right isosceles triangle") {
  Triangulation tri({{{0, 0}}, {{1, 0}}, {{0, 1}}}, {{{0, 1, 2}}}, {0, 1, 2});
  const WeightedGraph g = cotangent_weights(tri);
  REQUIRE(g.edges().size() == 3);
  for (const Edge &e : g.edges()) {
    const bool hyp = (e.u == 1 && e.v == 2) || (e.u == 2 && e.v == 1);
    CHECK(e.w == doctest::Approx(hyp ? 0.0 : 0.5).epsilon(1e-14));
  }
}

TEST_CASE("triangulation validation") {
  CHECK_THROWS_AS(Triangulation({{{0, 0}}, {{1, 0}}, {{2, 0}}}, {{{0, 1, 2}}},
                                {0, 1, 2}),
                  InvalidInput);
  // Open edge 1-2 with an interior endpoint.
  CHECK_THROWS_AS(
      Triangulation({{{0, 0}}, {{1, 0}}, {{0, 1}}}, {{{0, 1, 2}}}, {0, 1}),
      InvalidInput);
}

TEST_CASE("piecewise-linear energy") {
  const Triangulation unit = grid_triangulation(3, 3, 0.5);
  std::vector<double> c(9, 3.0), x(9);
  for (std::size_t v = 0; v < 9; ++v)
    x[v] = unit.vertices()[v][0];
  CHECK(pl_energy(unit, c) == doctest::Approx(0.0));
  CHECK(pl_energy(unit, x) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("cotangent form equals piecewise-linear energy on random meshes") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 3 + rng.next_u64() % 6, cols = 3 + rng.next_u64() % 6;
    const Triangulation tri = random_triangulation(rng, rows, cols);
    GraphOptions loose;
    loose.validate_definite = false;
    const WeightedGraph g = cotangent_weights(tri, loose);
    const auto f = random_field(rng, tri.n_vertices());
    const double pl = pl_energy(tri, f);
    CHECK(std::abs(dirichlet_energy(g, f) - pl) <= 1e-12 * std::abs(pl));
  }
}

TEST_CASE("dilation invariance") {
  Rng rng(9);
  const Triangulation tri = random_triangulation(rng, 6, 6);
  const auto f = random_field(rng, tri.n_vertices());
  for (double c : {2.0, 0.5, 7.3})
    CHECK(std::abs(dilation_energy_ratio(tri, f, c) - 1.0) < 1e-12);

  std::vector<double> nodes{0.0, 0.3, 0.5, 1.1, 2.0}, g{1.0, -2.0, 0.5, 0.0, 4.0};
  double direct = 0.0, scaled = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double df = g[i + 1] - g[i], dx = nodes[i + 1] - nodes[i];
    direct += df * df / dx;
    scaled += df * df / (2.0 * dx);
  }
  CHECK(pl_energy_1d(nodes, g) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(dilation_energy_ratio_1d(nodes, g, 2.0) ==
        doctest::Approx(scaled / direct).epsilon(1e-14));
  CHECK(dilation_energy_ratio_1d(nodes, g, 2.0) == doctest::Approx(0.5));

  const std::vector<double> zero(tri.n_vertices(), 1.0);
  CHECK_THROWS_AS(dilation_energy_ratio(tri, zero, 2.0), InvalidInput);
}

TEST_CASE("obtuse mesh: negative weight, still definite") {
  // Strip of unit squares with one interior vertex pulled sideways so that
  // an adjacent angle becomes obtuse.
  Triangulation base = grid_triangulation(4, 4);
  auto pts = base.vertices();
  pts[5][0] += 0.45;
  pts[5][1] += 0.4;
  Triangulation tri(pts, base.triangles(), base.boundary());
  const WeightedGraph g = cotangent_weights(tri);
  bool negative = false;
  for (const Edge &e : g.edges())
    negative = negative || e.w < 0.0;
  CHECK(negative);
  const DefinitenessReport r = check_definite(g);
  CHECK(r.definite);
  CHECK(r.definite == dense_says_definite(g));
}

TEST_CASE("definiteness validator agrees with eigenvalues") {
  // Vertex 1 and 2 free; negative edge makes the form indefinite.
  GraphOptions loose;
  loose.validate_definite = false;
  const WeightedGraph bad(3, {{0, 1, 1.0}, {1, 2, -0.5}}, {0}, false, {}, 0, loose);
  CHECK_FALSE(check_definite(bad).definite);
  CHECK_FALSE(dense_says_definite(bad));
  CHECK_THROWS_AS(WeightedGraph(3, {{0, 1, 1.0}, {1, 2, -0.5}}, {0}, false),
                  InvalidInput);

  Rng rng(77);
  int agree = 0, definite = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.next_u64() % 10;
    std::vector<Edge> edges;
    for (VertexId u = 0; u < n; ++u)
      for (VertexId v = u + 1; v < n; ++v)
        if (rng.uniform() < 0.5)
          edges.push_back({u, v, rng.uniform() * 2.0 - 0.4});
    edges.push_back({0, n - 1, 1.0 + rng.uniform()});
    std::set<std::pair<VertexId, VertexId>> seen;
    std::vector<Edge> unique;
    for (const Edge &e : edges)
      if (seen.insert({e.u, e.v}).second)
        unique.push_back(e);
    const WeightedGraph g(n, unique, {0}, false, {}, 0, loose);
    const bool mine = check_definite(g).definite;
    const bool ref = dense_says_definite(g);
    agree += mine == ref ? 1 : 0;
    definite += ref ? 1 : 0;
  }
  CHECK(agree == 200);
  CHECK(definite > 10);
  CHECK(definite < 190);
}

TEST_CASE("definiteness on a large signed graph uses the sparse path") {
  // 47 x 47 interior, one weak negative edge: still definite.
  const WeightedGraph base = build_box_lattice(2, 24);
  auto edges = base.edges();
  edges[edges.size() / 2].w = -0.2;
  GraphOptions loose;
  loose.validate_definite = false;
  const WeightedGraph g(base.n_vertices(), edges, base.boundary(), false, {}, 0,
                        loose);
  const DefinitenessReport r = check_definite(g);
  CHECK(r.method == "sparse-ldlt");
  CHECK(r.definite);
  const DefinitenessReport d = check_definite_dense(g);
  CHECK(d.definite);
  CHECK(r.min_eigenvalue == doctest::Approx(d.min_eigenvalue).epsilon(1e-6));
}

TEST_CASE("graph file round trip") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Triangulation tri = random_triangulation(rng, 4 + trial % 3, 5);
    const WeightedGraph g = cotangent_weights(tri);
    std::stringstream ss;
    write_graph(ss, g);
    const WeightedGraph h = read_graph(ss);
    REQUIRE(h.edges().size() == g.edges().size());
    for (std::size_t i = 0; i < g.edges().size(); ++i) {
      CHECK(h.edges()[i].u == g.edges()[i].u);
      CHECK(h.edges()[i].v == g.edges()[i].v);
      CHECK(h.edges()[i].w == g.edges()[i].w);
    }
    CHECK(h.boundary() == g.boundary());
    CHECK(h.positions() == g.positions());

    std::stringstream ts;
    write_triangulation(ts, tri);
    const Triangulation back = read_triangulation(ts);
    CHECK(back.vertices() == tri.vertices());
    CHECK(back.triangles() == tri.triangles());
    CHECK(back.boundary() == tri.boundary());
  }
  std::stringstream torus;
  write_graph(torus, build_torus_grid(3, 4));
  CHECK(read_graph(torus).zero_mean_mode());

  std::stringstream junk("GFFG 2\n");
  CHECK_THROWS_AS(read_graph(junk), InvalidInput);
}
