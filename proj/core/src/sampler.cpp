#include "gfflab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>

#include <fftw3.h>

#include "gfflab/error.hpp"

namespace gfflab {

const char *to_string(SampleMethod m) {
  switch (m) {
  case SampleMethod::direct:
    return "direct";
  case SampleMethod::fft:
    return "fft";
  case SampleMethod::fft_conditioned:
    return "fft-conditioned";
  case SampleMethod::eigenbasis:
    return "eigenbasis";
  case SampleMethod::massive:
    return "massive";
  case SampleMethod::ou:
    return "ou";
  }
  return "unknown";
}

// Direct sampling

GaussianFieldSampler::GaussianFieldSampler(const WeightedGraph &g,
                                           double mass2,
                                           std::span<const double> boundary_values)
    : graph_(&g), solver_(g, mass2), mean_(g.n_vertices(), 0.0) {
  if (boundary_values.empty())
    return;
  if (g.zero_mean_mode())
    throw InvalidInput("zero-mean graphs take no boundary values");
  if (boundary_values.size() != g.n_vertices())
    throw InvalidInput("boundary values do not match vertex count");
  for (VertexId b : g.boundary())
    mean_[b] = boundary_values[b];
  if (g.n_free() == 0)
    return;
  const Eigen::VectorXd x = solver_.solve(g.boundary_load(boundary_values));
  for (std::size_t i = 0; i < g.n_free(); ++i)
    mean_[g.free_vertices()[i]] = x[static_cast<Eigen::Index>(i)];
}

void GaussianFieldSampler::draw_into(Rng &rng, std::span<double> out) const {
  if (out.size() != mean_.size())
    throw InvalidInput("output length does not match vertex count");
  Eigen::VectorXd z(static_cast<Eigen::Index>(solver_.noise_size()));
  rng.fill_normal({z.data(), static_cast<std::size_t>(z.size())});
  const Eigen::VectorXd x = solver_.correlate(z);
  std::copy(mean_.begin(), mean_.end(), out.begin());
  const auto &free = graph_->free_vertices();
  for (std::size_t i = 0; i < free.size(); ++i)
    out[free[i]] += x[static_cast<Eigen::Index>(i)];
}

FieldFunction GaussianFieldSampler::draw(Rng &rng) const {
  FieldFunction out(mean_.size());
  draw_into(rng, out);
  return out;
}

FieldSample sample_dgff_direct(const WeightedGraph &g, std::uint64_t seed,
                               std::span<const double> boundary_values) {
  GaussianFieldSampler sampler(g, 0.0, boundary_values);
  Rng rng(seed);
  return {sampler.draw(rng), seed, SampleMethod::direct};
}

FieldSample sample_massive(const WeightedGraph &g, double mass2,
                           std::uint64_t seed) {
  if (!(mass2 >= 0.0))
    throw InvalidInput("mass2 must be non-negative");
  GaussianFieldSampler sampler(g, mass2);
  Rng rng(seed);
  return {sampler.draw(rng), seed, SampleMethod::massive};
}

// FFT torus sampler

namespace {

std::mutex &fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

double torus_coefficient(std::size_t j, std::size_t k, std::size_t m,
                         std::size_t n) {
  if (j == 0 && k == 0)
    return 0.0;
  const double sj = std::sin(static_cast<double>(j) * std::numbers::pi /
                             static_cast<double>(m));
  const double sk = std::sin(static_cast<double>(k) * std::numbers::pi /
                             static_cast<double>(n));
  return 1.0 / std::sqrt(sj * sj + sk * sk);
}

void center(std::span<double> v) {
  if (v.empty())
    return;
  double mean = 0.0;
  for (double x : v)
    mean += x;
  mean /= static_cast<double>(v.size());
  for (double &x : v)
    x -= mean;
}

} // namespace

FieldSample sample_torus_fft(std::size_t m, std::size_t n, std::uint64_t seed,
                             bool calibrated) {
  if (m < 3 || n < 3)
    throw InvalidInput("torus grid needs m, n >= 3");
  if (m > default_vertex_cap() / n)
    throw ResourceError("torus exceeds the vertex cap");
  const std::size_t size = m * n;
  std::vector<std::complex<double>> buf(size);
  Rng rng(seed);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      const double re = rng.normal();
      const double im = rng.normal();
      buf[j * n + k] = std::complex<double>(re, im) *
                       (std::numbers::sqrt2 / 2.0 * torus_coefficient(j, k, m, n));
    }
  {
    auto *data = reinterpret_cast<fftw_complex *>(buf.data());
    fftw_plan plan;
    {
      std::lock_guard lock(fftw_planner_mutex());
      plan = fftw_plan_dft_2d(static_cast<int>(m), static_cast<int>(n), data,
                              data, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  const double scale = (calibrated ? kTorusFftKappa : 1.0) /
                       std::sqrt(static_cast<double>(size));
  FieldSample out;
  out.seed = seed;
  out.method = SampleMethod::fft;
  out.values.resize(size);
  for (std::size_t i = 0; i < size; ++i)
    out.values[i] = buf[i].real() * scale;
  center(out.values);
  return out;
}

Eigen::MatrixXd torus_fft_covariance(std::size_t m, std::size_t n,
                                     bool calibrated) {
  if (m < 3 || n < 3)
    throw InvalidInput("torus grid needs m, n >= 3");
  // Re of a circular complex field with E|z|^2 = 1 and unitary transform:
  // Cov = (1 / 2mn) sum_modes c^2 cos(2 pi (j dx / m + k dy / n)).
  const double kappa2 = calibrated ? kTorusFftKappa * kTorusFftKappa : 1.0;
  const double norm = kappa2 / (2.0 * static_cast<double>(m * n));
  Eigen::MatrixXd by_offset = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t dx = 0; dx < m; ++dx)
    for (std::size_t dy = 0; dy < n; ++dy) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < n; ++k) {
          const double c = torus_coefficient(j, k, m, n);
          const double phase =
              2.0 * std::numbers::pi *
              (static_cast<double>(j * dx) / static_cast<double>(m) +
               static_cast<double>(k * dy) / static_cast<double>(n));
          s += c * c * std::cos(phase);
        }
      by_offset(static_cast<Eigen::Index>(dx), static_cast<Eigen::Index>(dy)) =
          norm * s;
    }
  const auto size = static_cast<Eigen::Index>(m * n);
  Eigen::MatrixXd cov(size, size);
  for (std::size_t a = 0; a < m * n; ++a)
    for (std::size_t b = 0; b < m * n; ++b) {
      const std::size_t dx = (b / n + m - a / n) % m;
      const std::size_t dy = (b % n + n - a % n) % n;
      cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          by_offset(static_cast<Eigen::Index>(dx), static_cast<Eigen::Index>(dy));
    }
  return cov;
}

// Boundary conditioning

namespace {

bool torus_adjacent(VertexId a, VertexId b, std::size_t m, std::size_t n) {
  const std::size_t ai = a / n, aj = a % n, bi = b / n, bj = b % n;
  if (ai == bi)
    return (aj + 1) % n == bj || (bj + 1) % n == aj;
  if (aj == bj)
    return (ai + 1) % m == bi || (bi + 1) % m == ai;
  return false;
}

void check_induced(const TorusSubdomain &sub) {
  const std::size_t total = sub.m * sub.n;
  const WeightedGraph &g = sub.graph;
  if (sub.torus_ids.size() != g.n_vertices())
    throw InvalidInput("subdomain vertex map has the wrong length");
  std::set<VertexId> seen;
  for (VertexId t : sub.torus_ids) {
    if (t >= total)
      throw InvalidInput("subdomain maps outside the torus");
    if (!seen.insert(t).second)
      throw InvalidInput("subdomain maps two vertices to one torus vertex");
  }
  std::size_t expected = 0;
  for (VertexId a = 0; a < g.n_vertices(); ++a)
    for (VertexId b = a + 1; b < g.n_vertices(); ++b)
      if (torus_adjacent(sub.torus_ids[a], sub.torus_ids[b], sub.m, sub.n))
        ++expected;
  for (const Edge &e : g.edges()) {
    if (!torus_adjacent(sub.torus_ids[e.u], sub.torus_ids[e.v], sub.m, sub.n))
      throw InvalidInput("subdomain edge is not a torus edge");
    if (e.w != sub.weight)
      throw InvalidInput("subdomain edge weight differs from the torus");
  }
  if (g.edges().size() != expected)
    throw InvalidInput("subdomain is not an induced subgraph of the torus");
}

} // namespace

TorusSubdomain induced_torus_subgraph(std::size_t m, std::size_t n,
                                      std::vector<VertexId> torus_vertices,
                                      const std::vector<VertexId> &boundary,
                                      double weight) {
  if (m < 3 || n < 3)
    throw InvalidInput("torus grid needs m, n >= 3");
  std::map<VertexId, VertexId> local;
  for (std::size_t i = 0; i < torus_vertices.size(); ++i) {
    if (torus_vertices[i] >= m * n)
      throw InvalidInput("vertex outside the torus");
    if (!local.emplace(torus_vertices[i], i).second)
      throw InvalidInput("repeated torus vertex");
  }
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < torus_vertices.size(); ++a)
    for (std::size_t b = a + 1; b < torus_vertices.size(); ++b)
      if (torus_adjacent(torus_vertices[a], torus_vertices[b], m, n))
        edges.push_back({a, b, weight});
  std::vector<VertexId> local_boundary;
  for (VertexId t : boundary) {
    const auto it = local.find(t);
    if (it == local.end())
      throw InvalidInput("boundary vertex not in the subdomain");
    local_boundary.push_back(it->second);
  }
  std::vector<double> positions;
  for (VertexId t : torus_vertices) {
    positions.push_back(static_cast<double>(t / n));
    positions.push_back(static_cast<double>(t % n));
  }
  const std::size_t count = torus_vertices.size();
  WeightedGraph g(count, std::move(edges), std::move(local_boundary), false,
                  std::move(positions), 2);
  return TorusSubdomain{m, n, weight, std::move(g), std::move(torus_vertices)};
}

TorusSubdomain torus_block(std::size_t m, std::size_t n, std::size_t row0,
                           std::size_t col0, std::size_t rows,
                           std::size_t cols) {
  if (rows < 3 || cols < 3 || rows > m || cols > n)
    throw InvalidInput("torus block must be at least 3 x 3 and fit the torus");
  std::vector<VertexId> ids, boundary;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const VertexId t = ((row0 + r) % m) * n + (col0 + c) % n;
      ids.push_back(t);
      if (r == 0 || c == 0 || r + 1 == rows || c + 1 == cols)
        boundary.push_back(t);
    }
  return induced_torus_subgraph(m, n, std::move(ids), boundary);
}

FieldSample impose_boundary(const FieldSample &torus_field,
                            const TorusSubdomain &sub,
                            std::span<const double> boundary_values) {
  check_induced(sub);
  if (torus_field.values.size() != sub.m * sub.n)
    throw InvalidInput("field does not live on the subdomain's torus");
  const WeightedGraph &g = sub.graph;
  if (boundary_values.size() != g.n_vertices())
    throw InvalidInput("boundary values do not match subdomain vertex count");
  FieldFunction restricted(g.n_vertices());
  for (VertexId v = 0; v < g.n_vertices(); ++v)
    restricted[v] = torus_field.values[sub.torus_ids[v]];
  FieldFunction gap(g.n_vertices(), 0.0);
  for (VertexId b : g.boundary())
    gap[b] = boundary_values[b] - restricted[b];
  const FieldFunction correction = harmonic_extension(g, gap);
  FieldSample out;
  out.seed = torus_field.seed;
  out.method = SampleMethod::fft_conditioned;
  out.values.resize(g.n_vertices());
  for (VertexId v = 0; v < g.n_vertices(); ++v)
    out.values[v] = restricted[v] + correction[v];
  // Boundary vertices carry the imposed values exactly.
  for (VertexId b : g.boundary())
    out.values[b] = boundary_values[b];
  return out;
}

// Continuum eigenbasis on the unit square

void gauss_legendre(std::size_t order, std::vector<double> &nodes,
                    std::vector<double> &weights) {
  if (order == 0)
    throw InvalidInput("quadrature order must be positive");
  nodes.assign(order, 0.0);
  weights.assign(order, 0.0);
  const double q = static_cast<double>(order);
  // P_q(x) and P_q'(x) by the three-term recurrence.
  auto legendre = [&](double x) {
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= order; ++k) {
      const double kk = static_cast<double>(k);
      const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, q * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (q + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    const double dp = legendre(x).second;
    const double w = 1.0 / ((1.0 - x * x) * dp * dp);
    // [-1, 1] -> [0, 1]; the factor 2 of the weight cancels the Jacobian.
    nodes[i] = 0.5 * (1.0 - x);
    nodes[order - 1 - i] = 0.5 * (1.0 + x);
    weights[i] = weights[order - 1 - i] = w;
  }
}

SpectralBasis::SpectralBasis(int cutoff) : cutoff_(cutoff) {
  if (cutoff < 1)
    throw InvalidInput("mode cutoff must be at least 1");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int j = 1; j <= cutoff; ++j)
    for (int k = 1; k <= cutoff; ++k)
      modes_.push_back({j, k, -pi2 * static_cast<double>(j * j + k * k)});
  std::stable_sort(modes_.begin(), modes_.end(),
                   [](const Mode &a, const Mode &b) {
                     const int na = a.j * a.j + a.k * a.k;
                     const int nb = b.j * b.j + b.k * b.k;
                     if (na != nb)
                       return na < nb;
                     return a.j != b.j ? a.j < b.j : a.k < b.k;
                   });
  // Smallest order meeting the 1e-10 orthonormality target.
  std::size_t order = static_cast<std::size_t>(cutoff) + 16;
  for (;;) {
    gauss_legendre(order, nodes_, weights_);
    if (orthonormality_error() < 1e-10)
      break;
    order += order / 2;
  }
}

double SpectralBasis::eigenfunction(const Mode &mode, double x, double y) {
  return 2.0 * std::sin(mode.j * std::numbers::pi * x) *
         std::sin(mode.k * std::numbers::pi * y);
}

double SpectralBasis::orthonormality_error() const {
  // The tensor structure reduces every check to 1D integrals of
  // sqrt(2) sin(j pi x) sqrt(2) sin(j' pi x).
  auto inner1d = [&](int a, int b) {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      s += weights_[i] * 2.0 * std::sin(a * std::numbers::pi * nodes_[i]) *
           std::sin(b * std::numbers::pi * nodes_[i]);
    return s;
  };
  const int n = cutoff_;
  double err = 0.0;
  const int probes[][2] = {{n, n}, {n, n - 1}, {n, 1}, {1, 1}, {n - 1, n - 1}};
  for (const auto &p : probes) {
    if (p[0] < 1 || p[1] < 1)
      continue;
    const double v = inner1d(p[0], p[1]);
    err = std::max(err, std::abs(v - (p[0] == p[1] ? 1.0 : 0.0)));
  }
  return err;
}

std::vector<double> SpectralBasis::inner_products(
    const std::function<double(double, double)> &rho) const {
  const std::size_t q = nodes_.size();
  const auto nc = static_cast<std::size_t>(cutoff_);
  // sines[j][i] = sin(j pi x_i)
  std::vector<double> sines(nc * q);
  for (std::size_t j = 0; j < nc; ++j)
    for (std::size_t i = 0; i < q; ++i)
      sines[j * q + i] =
          std::sin(static_cast<double>(j + 1) * std::numbers::pi * nodes_[i]);
  // partial[k][a] = sum_b w_b sin(k pi y_b) rho(x_a, y_b)
  std::vector<double> samples(q * q);
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b)
      samples[a * q + b] = rho(nodes_[a], nodes_[b]);
  std::vector<double> partial(nc * q, 0.0);
  for (std::size_t k = 0; k < nc; ++k)
    for (std::size_t a = 0; a < q; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < q; ++b)
        s += weights_[b] * sines[k * q + b] * samples[a * q + b];
      partial[k * q + a] = s;
    }
  std::vector<double> out;
  out.reserve(modes_.size());
  for (const Mode &mode : modes_) {
    const auto j = static_cast<std::size_t>(mode.j - 1);
    const auto k = static_cast<std::size_t>(mode.k - 1);
    double s = 0.0;
    for (std::size_t a = 0; a < q; ++a)
      s += weights_[a] * sines[j * q + a] * partial[k * q + a];
    out.push_back(2.0 * s);
  }
  return out;
}

double EigenbasisSample::evaluate(double x, double y) const {
  double s = 0.0;
  const auto &modes = basis.modes();
  for (std::size_t i = 0; i < modes.size(); ++i)
    s += coefficients[i] / std::sqrt(-modes[i].eigenvalue) *
         SpectralBasis::eigenfunction(modes[i], x, y);
  return s;
}

double
EigenbasisSample::pair(const std::function<double(double, double)> &rho) const {
  const std::vector<double> ip = basis.inner_products(rho);
  const auto &modes = basis.modes();
  double s = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i)
    s += coefficients[i] / std::sqrt(-modes[i].eigenvalue) * ip[i];
  return s;
}

EigenbasisSample sample_square_eigenbasis(int cutoff, std::uint64_t seed) {
  EigenbasisSample out{SpectralBasis(cutoff), {}, seed};
  Rng rng(seed);
  out.coefficients.resize(out.basis.modes().size());
  rng.fill_normal(out.coefficients);
  return out;
}

double eigenbasis_point_variance(const SpectralBasis &basis, double x,
                                 double y) {
  double s = 0.0;
  for (const auto &mode : basis.modes()) {
    const double e = SpectralBasis::eigenfunction(mode, x, y);
    s += e * e / -mode.eigenvalue;
  }
  return s;
}

double eigenbasis_pair_variance(
    const SpectralBasis &basis,
    const std::function<double(double, double)> &rho) {
  const std::vector<double> ip = basis.inner_products(rho);
  double s = 0.0;
  for (std::size_t i = 0; i < ip.size(); ++i)
    s += ip[i] * ip[i] / -basis.modes()[i].eigenvalue;
  return s;
}

HilbertSchmidtResult hilbert_schmidt_sum(double a, double b, int d,
                                         std::size_t cutoff) {
  if (d < 1)
    throw InvalidInput("dimension must be at least 1");
  if (cutoff < 1)
    throw InvalidInput("cutoff must be at least 1");
  HilbertSchmidtResult r;
  r.exponent = 2.0 * (2.0 * a - 2.0 * b) / static_cast<double>(d);
  r.converges = r.exponent < -1.0;
  // Summed from the small terms up.
  for (std::size_t j = cutoff; j >= 1; --j)
    r.partial_sum += std::pow(static_cast<double>(j), r.exponent);
  return r;
}

// Ornstein-Uhlenbeck dynamics

FieldSample ou_evolve(const WeightedGraph &g, const FieldSample &start,
                      double t, std::uint64_t seed) {
  if (!(t >= 0.0))
    throw InvalidInput("evolution time must be non-negative");
  if (start.values.size() != g.n_vertices())
    throw InvalidInput("start field does not match the graph");
  for (VertexId b : g.boundary())
    if (start.values[b] != 0.0)
      throw InvalidInput("OU dynamics needs zero boundary values");
  FieldSample out{start.values, seed, SampleMethod::ou};
  if (t == 0.0)
    return out;
  const double decay = std::exp(-t);
  const double noise = std::sqrt(-std::expm1(-2.0 * t));
  GaussianFieldSampler sampler(g);
  Rng rng(seed);
  const FieldFunction fresh = sampler.draw(rng);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = decay * start.values[i] + noise * fresh[i];
  return out;
}

// FLD1

namespace {

template <class T> void put_le(std::ostream &os, T value) {
  unsigned char bytes[sizeof(T)];
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    static_assert(sizeof(T) == 8);
    std::memcpy(&bits, &value, 8);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <class T> T get_le(std::istream &is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char *>(bytes), sizeof(T)))
    throw InvalidInput("truncated FLD1 stream");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  if constexpr (std::is_floating_point_v<T>) {
    T value;
    std::memcpy(&value, &bits, 8);
    return value;
  } else {
    return static_cast<T>(bits);
  }
}

} // namespace

void write_field(std::ostream &os, const FieldSample &sample) {
  os.write("FLD1", 4);
  put_le<std::uint32_t>(os, 1);
  put_le<std::uint64_t>(os, sample.values.size());
  put_le<std::uint64_t>(os, sample.seed);
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(sample.method));
  for (double v : sample.values)
    put_le<double>(os, v);
}

FieldSample read_field(std::istream &is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "FLD1", 4) != 0)
    throw InvalidInput("not an FLD1 stream");
  if (get_le<std::uint32_t>(is) != 1)
    throw InvalidInput("unsupported FLD1 version");
  const auto n = get_le<std::uint64_t>(is);
  FieldSample out;
  out.seed = get_le<std::uint64_t>(is);
  const auto tag = get_le<std::uint8_t>(is);
  if (tag > static_cast<std::uint8_t>(SampleMethod::ou))
    throw InvalidInput("unknown FLD1 method tag");
  out.method = static_cast<SampleMethod>(tag);
  if (n > default_vertex_cap())
    throw ResourceError("FLD1 vertex count exceeds the cap");
  out.values.resize(n);
  for (auto &v : out.values)
    v = get_le<double>(is);
  return out;
}

void save_field(const std::string &path, const FieldSample &sample) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InvalidInput("cannot write " + path);
  write_field(out, sample);
}

FieldSample load_field(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InvalidInput("cannot open " + path);
  return read_field(in);
}

void save_field_meta(const std::string &field_path,
                     const std::map<std::string, std::string> &entries) {
  const auto meta = std::filesystem::path(field_path).replace_extension(".meta");
  std::ofstream out(meta);
  if (!out)
    throw InvalidInput("cannot write " + meta.string());
  for (const auto &[k, v] : entries)
    out << k << '=' << v << '\n';
}

} // namespace gfflab
