#include "doctest.h"

#include <cmath>
#include <cstring>
#include <sstream>

#include "test_support.hpp"

using namespace gfflab;
namespace gt = gfflab::testing;

namespace {

// Entrywise deviation of K-sample empirical covariance from `exact`,
// measured in standard errors.
double deviation(const Eigen::MatrixXd &emp, const Eigen::MatrixXd &exact,
                 std::size_t K) {
  return max_standardized_deviation(emp, exact, K);
}

Eigen::MatrixXd sub_matrix(const GreensMatrix &G,
                           const std::vector<VertexId> &vs) {
  const auto n = static_cast<Eigen::Index>(vs.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = G.at(vs[static_cast<std::size_t>(i)], vs[static_cast<std::size_t>(j)]);
  return out;
}

} // namespace

TEST_CASE("direct sampler: path variance") {
  const WeightedGraph g = build_path(4);
  const GaussianFieldSampler s(g);
  Rng rng(1);
  const std::size_t K = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    const double x = s.draw(rng)[2];
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / K, var = sum2 / K - mean * mean;
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / K));
}

TEST_CASE("direct sampler: single interior vertex") {
  const WeightedGraph g = build_box_lattice(2, 1);
  const Eigen::MatrixXd C =
      gt::empirical_free_covariance(GaussianFieldSampler(g), 100000, 2);
  CHECK(std::abs(C(0, 0) - 0.25) < 5.0 * 0.25 * std::sqrt(2.0 / 100000));
  // Boundary stays pinned at zero.
  const FieldSample f = sample_dgff_direct(g, 3);
  for (VertexId v : g.boundary())
    CHECK(f.values[v] == 0.0);
}

TEST_CASE("direct sampler: 5x5 covariance") {
  const WeightedGraph g = build_box_lattice(2, 2);
  const std::size_t K = 100000;
  const Eigen::MatrixXd C =
      gt::empirical_free_covariance(GaussianFieldSampler(g), K, 4);
  CHECK(deviation(C, greens_matrix(g).values, K) < 5.0);
}

TEST_CASE("direct sampler: cotangent graph with a negative weight") {
  Triangulation base = grid_triangulation(4, 4);
  auto pts = base.vertices();
  pts[5][0] += 0.45;
  pts[5][1] += 0.4;
  const WeightedGraph g =
      cotangent_weights(Triangulation(pts, base.triangles(), base.boundary()));
  const std::size_t K = 100000;
  const Eigen::MatrixXd C =
      gt::empirical_free_covariance(GaussianFieldSampler(g), K, 5);
  const Eigen::MatrixXd exact = gt::dense_reduced(g).inverse();
  CHECK(deviation(C, exact, K) < 5.0);
}

TEST_CASE("direct sampler: boundary values give the harmonic mean") {
  const WeightedGraph g = build_box_lattice(2, 2);
  FieldFunction bv(g.n_vertices(), 0.0);
  for (VertexId v : g.boundary())
    bv[v] = static_cast<double>(v % 5);
  const GaussianFieldSampler s(g, 0.0, bv);
  const FieldFunction h = harmonic_extension(g, bv);
  CovarianceAccumulator acc(g.n_vertices());
  Rng rng(6);
  for (int i = 0; i < 20000; ++i)
    acc.add(s.draw(rng));
  const Eigen::VectorXd mean = acc.mean();
  const GreensMatrix G = greens_matrix(g);
  for (VertexId v : g.interior())
    CHECK(std::abs(mean[static_cast<Eigen::Index>(v)] - h[v]) <
          5.0 * std::sqrt(G.at(v, v) / 20000));
  for (VertexId v : g.boundary())
    CHECK(mean[static_cast<Eigen::Index>(v)] == doctest::Approx(bv[v]));
}

TEST_CASE("direct sampler is deterministic") {
  const WeightedGraph g = build_box_lattice(2, 5);
  const FieldSample a = sample_dgff_direct(g, 99), b = sample_dgff_direct(g, 99);
  const FieldSample c = sample_dgff_direct(g, 100);
  CHECK(std::memcmp(a.values.data(), b.values.data(),
                    a.values.size() * sizeof(double)) == 0);
  CHECK(a.values != c.values);
  CHECK(a.seed == 99);
  CHECK(a.method == SampleMethod::direct);
}

TEST_CASE("torus FFT sampler") {
  const FieldSample f = sample_torus_fft(16, 12, 8);
  REQUIRE(f.values.size() == 192);
  double sum = 0.0, sq = 0.0;
  for (double v : f.values) {
    sum += v;
    sq += v * v;
  }
  const double rms = std::sqrt(sq / 192.0);
  CHECK(std::abs(sum / 192.0) <= 1e-12 * rms);
  CHECK(f.method == SampleMethod::fft);

  const FieldSample f2 = sample_torus_fft(16, 12, 8);
  CHECK(f.values == f2.values);
  CHECK_THROWS_AS(sample_torus_fft(2, 8, 1), InvalidInput);

  // Mode-sum covariance against the eigendecomposition pseudoinverse.
  for (auto [m, n] : {std::pair{4u, 4u}, std::pair{5u, 7u}, std::pair{8u, 3u}}) {
    const Eigen::MatrixXd P =
        gt::eigen_pseudoinverse(gt::dense_laplacian(build_torus_grid(m, n)));
    CHECK((torus_fft_covariance(m, n, true) - P).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((torus_fft_covariance(m, n, false) - 2.0 * P).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((greens_matrix(build_torus_grid(m, n)).values -
           torus_fft_covariance(m, n, true))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}

TEST_CASE("torus FFT sampler: empirical covariance and kappa fit") {
  const std::size_t K = 100000;
  const Eigen::MatrixXd P =
      gt::eigen_pseudoinverse(gt::dense_laplacian(build_torus_grid(4, 4)));
  CovarianceAccumulator cal(16), raw(16);
  for (std::size_t i = 0; i < K; ++i) {
    cal.add(sample_torus_fft(4, 4, i, true).values);
    raw.add(sample_torus_fft(4, 4, K + i, false).values);
  }
  CHECK(deviation(cal.covariance(), P, K) < 5.0);
  // Least-squares global constant between raw covariance and P.
  const Eigen::MatrixXd R = raw.covariance();
  const double kappa2 = (R.cwiseProduct(P)).sum() / P.squaredNorm();
  CHECK(1.0 / kappa2 == doctest::Approx(kTorusFftKappa * kTorusFftKappa).epsilon(0.01));
}

TEST_CASE("impose_boundary") {
  const std::size_t m = 8, n = 8;
  const TorusSubdomain sub = torus_block(m, n, 1, 2, 5, 5);
  REQUIRE(sub.graph.n_vertices() == 25);
  REQUIRE(sub.graph.interior().size() == 9);

  const FieldSample torus = sample_torus_fft(m, n, 3);
  FieldFunction own(25);
  for (VertexId v = 0; v < 25; ++v)
    own[v] = torus.values[sub.torus_ids[v]];
  const FieldSample same = impose_boundary(torus, sub, own);
  for (VertexId v = 0; v < 25; ++v)
    CHECK(same.values[v] == doctest::Approx(own[v]).epsilon(1e-12));

  FieldSample zero = torus;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  const FieldFunction c(25, 1.75);
  for (double v : impose_boundary(zero, sub, c).values)
    CHECK(v == doctest::Approx(1.75).epsilon(1e-12));

  // Law on the interior: DGFF on the block with the given boundary values.
  FieldFunction bv(25, 0.0);
  for (VertexId v : sub.graph.boundary())
    bv[v] = 0.3 * static_cast<double>(v % 4) - 0.2;
  const std::size_t K = 100000;
  const auto &in = sub.graph.interior();
  CovarianceAccumulator acc(in.size());
  for (std::size_t i = 0; i < K; ++i) {
    const FieldSample out = impose_boundary(sample_torus_fft(m, n, 1000 + i), sub, bv);
    acc.add(gt::restrict_to(out.values, in));
  }
  const GreensMatrix G = greens_matrix(sub.graph);
  CHECK(deviation(acc.covariance(), sub_matrix(G, in), K) < 5.0);
  const FieldFunction h = harmonic_extension(sub.graph, bv);
  const Eigen::VectorXd mean = acc.mean();
  for (std::size_t i = 0; i < in.size(); ++i)
    CHECK(std::abs(mean[static_cast<Eigen::Index>(i)] - h[in[i]]) <
          5.0 * std::sqrt(G.at(in[i], in[i]) / K));

  // Not induced: torus vertices 1 and 2 are adjacent but the edge is missing.
  TorusSubdomain cut{m, n, 1.0,
                     WeightedGraph(3, {{0, 1, 1.0}}, {0, 2}, false), {0, 1, 2}};
  CHECK_THROWS_AS(impose_boundary(torus, cut, FieldFunction(3, 0.0)), InvalidInput);
  TorusSubdomain ok = induced_torus_subgraph(m, n, {0, 1, 2}, {0, 2});
  CHECK_NOTHROW(impose_boundary(torus, ok, FieldFunction(3, 0.0)));
}

TEST_CASE("massive sampler") {
  const WeightedGraph g = build_box_lattice(2, 3);
  CHECK(sample_massive(g, 0.0, 17).values == sample_dgff_direct(g, 17).values);
  CHECK(sample_massive(g, 0.0, 17).method == SampleMethod::massive);

  const WeightedGraph one = build_box_lattice(2, 1);
  Eigen::VectorXd e(1);
  e[0] = 1.0;
  CHECK(LaplacianSolver(one, 1.0).solve(e)[0] == doctest::Approx(0.2).epsilon(1e-14));

  const WeightedGraph nine = build_box_lattice(2, 4);
  const auto center = nine.reduced_index(40);
  Eigen::VectorXd ec = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nine.n_free()));
  ec[static_cast<Eigen::Index>(center)] = 1.0;
  double prev = 1e9;
  for (double m2 : {0.0, 1.0, 4.0}) {
    const double var = LaplacianSolver(nine, m2).solve(ec)[static_cast<Eigen::Index>(center)];
    CHECK(var < prev);
    prev = var;
  }

  // Empirical covariance against (L + m^2)^{-1}.
  const std::size_t K = 100000;
  const WeightedGraph small = build_box_lattice(2, 2);
  const Eigen::MatrixXd C =
      gt::empirical_free_covariance(GaussianFieldSampler(small, 1.5), K, 21);
  const Eigen::MatrixXd R = gt::dense_reduced(small) +
                            1.5 * Eigen::MatrixXd::Identity(9, 9);
  CHECK(deviation(C, R.inverse(), K) < 5.0);

  CHECK_THROWS_AS(sample_massive(g, -1.0, 1), InvalidInput);
}

TEST_CASE("massive field on a torus is mean-zero") {
  const FieldSample f = sample_massive(build_torus_grid(6, 6), 0.5, 4);
  double sum = 0.0;
  for (double v : f.values)
    sum += v;
  CHECK(std::abs(sum) < 1e-12);
}

TEST_CASE("Gauss-Legendre rule") {
  std::vector<double> x, w;
  gauss_legendre(12, x, w);
  // Exact for polynomials of degree <= 23.
  for (int p = 0; p <= 23; ++p) {
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      q += w[i] * std::pow(x[i], p);
    CHECK(q == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
  }
}

TEST_CASE("spectral basis") {
  const SpectralBasis b(10);
  REQUIRE(b.modes().size() == 100);
  for (std::size_t i = 1; i < b.modes().size(); ++i)
    CHECK(b.modes()[i].eigenvalue <= b.modes()[i - 1].eigenvalue);
  CHECK(b.modes()[0].j == 1);
  CHECK(b.modes()[0].k == 1);
  CHECK(b.modes()[0].eigenvalue == doctest::Approx(-2.0 * M_PI * M_PI));
  CHECK(b.orthonormality_error() < 1e-10);
  CHECK(SpectralBasis(64).orthonormality_error() < 1e-10);
}

TEST_CASE("eigenbasis sampler") {
  const EigenbasisSample a = sample_square_eigenbasis(8, 5);
  const EigenbasisSample b = sample_square_eigenbasis(8, 5);
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.coefficients.size() == 64);
  CHECK(a.evaluate(0.0, 0.3) == doctest::Approx(0.0));

  double direct = 0.0;
  for (std::size_t i = 0; i < a.basis.modes().size(); ++i) {
    const auto &mode = a.basis.modes()[i];
    direct += a.coefficients[i] * SpectralBasis::eigenfunction(mode, 0.3, 0.6) /
              std::sqrt(-mode.eigenvalue);
  }
  CHECK(a.evaluate(0.3, 0.6) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("eigenbasis pairing converges to the series variance") {
  auto rho = [](double x, double y) { return x * (1 - x) * y * (1 - y); };
  // (e_jk, rho) = b_j b_k with b_j = sqrt2 * 2 (1 - (-1)^j) / (j pi)^3.
  auto coef = [](int j) {
    return std::sqrt(2.0) * 2.0 * (1.0 - ((j % 2) ? -1.0 : 1.0)) /
           std::pow(j * M_PI, 3);
  };
  const int big = 2000;
  double reference = 0.0;
  for (int j = 1; j <= big; j += 2)
    for (int k = 1; k <= big; k += 2) {
      const double c = coef(j) * coef(k);
      reference += c * c / (M_PI * M_PI * (j * j + k * k));
    }

  const SpectralBasis b16(16);
  const auto ip = b16.inner_products(rho);
  for (std::size_t i = 0; i < ip.size(); ++i) {
    const auto &m = b16.modes()[i];
    CHECK(std::abs(ip[i] - coef(m.j) * coef(m.k)) < 1e-13);
  }

  double prev_err = 1e9;
  for (int N : {2, 4, 8, 16, 32}) {
    const double err = std::abs(eigenbasis_pair_variance(SpectralBasis(N), rho) - reference);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 1e-8 * reference);

  // Monte Carlo of the pairing itself at N = 16.
  const double exact16 = eigenbasis_pair_variance(b16, rho);
  const std::size_t K = 4000;
  double s2 = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    const EigenbasisSample s = sample_square_eigenbasis(16, 7000 + i);
    double p = 0.0;
    for (std::size_t m = 0; m < ip.size(); ++m)
      p += s.coefficients[m] * ip[m] / std::sqrt(-s.basis.modes()[m].eigenvalue);
    if (i < 3)
      CHECK(s.pair(rho) == doctest::Approx(p).epsilon(1e-12));
    s2 += p * p;
  }
  CHECK(std::abs(s2 / K - exact16) < 4.0 * exact16 * std::sqrt(2.0 / K));
}

TEST_CASE("pointwise eigenbasis variance diverges") {
  std::vector<double> logs, vars;
  for (int N : {4, 8, 16, 32, 64, 128}) {
    logs.push_back(std::log(static_cast<double>(N)));
    vars.push_back(eigenbasis_point_variance(SpectralBasis(N), 0.37, 0.61));
  }
  for (std::size_t i = 1; i < vars.size(); ++i)
    CHECK(vars[i] > vars[i - 1]);
  const LinearFit fit = linear_fit(logs, vars);
  CHECK(fit.slope > 0.1);
  CHECK(fit.r_squared > 0.95);
}

TEST_CASE("Hilbert-Schmidt verdicts") {
  CHECK(hilbert_schmidt_sum(-0.5, 0.1, 2, 1000).converges);
  const HilbertSchmidtResult edge = hilbert_schmidt_sum(-0.5, 0.0, 2, 1000);
  CHECK_FALSE(edge.converges);
  CHECK(edge.exponent == doctest::Approx(-1.0));
  double harmonic = 0.0;
  for (int j = 1; j <= 1000; ++j)
    harmonic += 1.0 / j;
  CHECK(edge.partial_sum == doctest::Approx(harmonic).epsilon(1e-12));
  const HilbertSchmidtResult one = hilbert_schmidt_sum(-0.5, 0.0, 1, 100000);
  CHECK(one.converges);
  CHECK(one.exponent == doctest::Approx(-2.0));
  CHECK(one.partial_sum == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-4));
}

TEST_CASE("Ornstein-Uhlenbeck evolution") {
  const WeightedGraph g = build_box_lattice(2, 2);
  const FieldSample start = sample_dgff_direct(g, 1);
  CHECK(ou_evolve(g, start, 0.0, 2).values == start.values);
  CHECK_THROWS_AS(ou_evolve(g, start, -0.1, 2), InvalidInput);

  const std::size_t K = 100000;
  const auto &in = g.interior();
  CovarianceAccumulator stationary(in.size()), relaxed(in.size());
  FieldSample zero = start;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  for (std::size_t i = 0; i < K; ++i) {
    const FieldSample s = sample_dgff_direct(g, 10 + i);
    stationary.add(gt::restrict_to(ou_evolve(g, s, 0.7, K + 10 + i).values, in));
    relaxed.add(gt::restrict_to(ou_evolve(g, zero, 50.0, 3 * K + i).values, in));
  }
  const Eigen::MatrixXd G = greens_matrix(g).values;
  CHECK(deviation(stationary.covariance(), G, K) < 5.0);
  CHECK(deviation(relaxed.covariance(), G, K) < 5.0);
}

TEST_CASE("FLD1 layout and round trip") {
  FieldSample s;
  s.values = {1.5, -2.0, 0.0};
  s.seed = 0x0102030405060708ULL;
  s.method = SampleMethod::fft;
  std::ostringstream os;
  write_field(os, s);
  const std::string bytes = os.str();
  REQUIRE(bytes.size() == 4 + 4 + 8 + 8 + 1 + 3 * 8);
  CHECK(bytes.substr(0, 4) == "FLD1");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 3);
  CHECK(static_cast<unsigned char>(bytes[16]) == 0x08);
  CHECK(static_cast<unsigned char>(bytes[23]) == 0x01);
  CHECK(bytes[24] == 1);
  double first;
  std::memcpy(&first, bytes.data() + 25, 8);
  CHECK(first == 1.5);

  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    FieldSample r;
    r.values.resize(rng.next_u64() % 50);
    rng.fill_normal(r.values);
    r.seed = rng.next_u64();
    r.method = static_cast<SampleMethod>(rng.next_u64() % 6);
    std::stringstream io;
    write_field(io, r);
    const FieldSample back = read_field(io);
    CHECK(back.values == r.values);
    CHECK(back.seed == r.seed);
    CHECK(back.method == r.method);
  }

  std::istringstream bad("FLD2....");
  CHECK_THROWS_AS(read_field(bad), InvalidInput);
  std::istringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_field(cut), InvalidInput);
}
