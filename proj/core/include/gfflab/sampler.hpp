#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gfflab/green.hpp"
#include "gfflab/lattice.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

enum class SampleMethod : std::uint8_t {
  direct = 0,
  fft = 1,
  fft_conditioned = 2,
  eigenbasis = 3,
  massive = 4,
  ou = 5,
};

const char *to_string(SampleMethod m);

/// One realization of a field: a value per vertex in vertex-id order.
struct FieldSample {
  FieldFunction values;
  std::uint64_t seed = 0;
  SampleMethod method = SampleMethod::direct;
};

/// Exact Gaussian sampler for the form L + mass2 * I on a graph.
///
/// Draws mean + C^{1/2} z where C is the inverse (pseudoinverse on
/// zero-mean graphs, projected to mean zero when mass2 > 0) and the mean
/// solves the Dirichlet problem for the given boundary values.
class GaussianFieldSampler {
public:
  explicit GaussianFieldSampler(const WeightedGraph &g, double mass2 = 0.0,
                                std::span<const double> boundary_values = {});

  FieldFunction draw(Rng &rng) const;
  void draw_into(Rng &rng, std::span<double> out) const;
  const FieldFunction &mean() const { return mean_; }
  const WeightedGraph &graph() const { return *graph_; }

private:
  const WeightedGraph *graph_;
  LaplacianSolver solver_;
  FieldFunction mean_;
};

FieldSample sample_dgff_direct(const WeightedGraph &g, std::uint64_t seed,
                               std::span<const double> boundary_values = {});

/// Covariance (L + mass2 * I)^{-1} with unit vertex masses; zero boundary.
FieldSample sample_massive(const WeightedGraph &g, double mass2,
                           std::uint64_t seed);

/// kappa such that kappa times the uncalibrated torus output has the
/// unit-weight torus DGFF law. With a unitary inverse DFT and complex
/// normals of unit total variance the real part carries covariance
/// 2 L^+, hence kappa = 1/sqrt(2).
inline const double kTorusFftKappa = 0.70710678118654752440;

/// m x n torus sampler: complex normals times
/// 1/sqrt(sin^2(pi j/m) + sin^2(pi k/n)) (zero mode dropped), unitary
/// inverse DFT, real part. `calibrated` multiplies by kTorusFftKappa.
FieldSample sample_torus_fft(std::size_t m, std::size_t n, std::uint64_t seed,
                             bool calibrated = true);

/// Covariance of sample_torus_fft summed mode by mode (independent of the
/// FFT code path).
Eigen::MatrixXd torus_fft_covariance(std::size_t m, std::size_t n,
                                     bool calibrated = true);

/// Induced subgraph of an m x n torus with its own boundary.
struct TorusSubdomain {
  std::size_t m = 0;
  std::size_t n = 0;
  double weight = 1.0;
  WeightedGraph graph;
  /// torus_ids[v] is the torus vertex of subdomain vertex v.
  std::vector<VertexId> torus_ids;
};

/// Induced subgraph on `torus_vertices`, with `boundary` given as torus ids.
TorusSubdomain induced_torus_subgraph(std::size_t m, std::size_t n,
                                      std::vector<VertexId> torus_vertices,
                                      const std::vector<VertexId> &boundary,
                                      double weight = 1.0);

/// rows x cols block starting at (row0, col0), outer ring as boundary.
TorusSubdomain torus_block(std::size_t m, std::size_t n, std::size_t row0,
                           std::size_t col0, std::size_t rows,
                           std::size_t cols);

/// h + h~ restricted to the subdomain, where h~ is the discrete harmonic
/// interpolation of boundary_values - h from the subdomain boundary.
/// boundary_values is indexed by subdomain vertex; only boundary entries
/// are read.
FieldSample impose_boundary(const FieldSample &torus_field,
                            const TorusSubdomain &sub,
                            std::span<const double> boundary_values);

/// Laplacian eigenbasis of the unit square with Dirichlet conditions:
/// e_jk(x, y) = 2 sin(j pi x) sin(k pi y), eigenvalue -pi^2 (j^2 + k^2).
/// Modes 1 <= j, k <= N, ordered by increasing j^2 + k^2, ties by (j, k).
class SpectralBasis {
public:
  struct Mode {
    int j;
    int k;
    double eigenvalue;
  };

  explicit SpectralBasis(int cutoff);

  int cutoff() const { return cutoff_; }
  const std::vector<Mode> &modes() const { return modes_; }
  static double eigenfunction(const Mode &mode, double x, double y);

  /// Gauss-Legendre order on [0, 1] per axis.
  std::size_t quadrature_order() const { return nodes_.size(); }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

  /// (e_mode, rho) for every mode, by tensor-product quadrature.
  std::vector<double>
  inner_products(const std::function<double(double, double)> &rho) const;

  /// Largest deviation from orthonormality over a set of probe pairs that
  /// includes the highest modes.
  double orthonormality_error() const;

private:
  int cutoff_;
  std::vector<Mode> modes_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(std::size_t order, std::vector<double> &nodes,
                    std::vector<double> &weights);

/// Partial sum sum alpha_jk (-lambda_jk)^{-1/2} e_jk.
struct EigenbasisSample {
  SpectralBasis basis;
  std::vector<double> coefficients;
  std::uint64_t seed = 0;

  double evaluate(double x, double y) const;
  double pair(const std::function<double(double, double)> &rho) const;
};

EigenbasisSample sample_square_eigenbasis(int cutoff, std::uint64_t seed);

/// Exact variance of the partial sum at (x, y): sum e_jk(x,y)^2 / -lambda_jk.
double eigenbasis_point_variance(const SpectralBasis &basis, double x,
                                 double y);

/// Exact variance of pair(rho): sum (e_jk, rho)^2 / -lambda_jk.
double eigenbasis_pair_variance(const SpectralBasis &basis,
                                const std::function<double(double, double)> &rho);

struct HilbertSchmidtResult {
  double partial_sum = 0.0;
  double exponent = 0.0;
  bool converges = false;
};

/// sum_{j=1}^{J} j^{2(2a - 2b)/d}; converges iff the exponent is below -1.
HilbertSchmidtResult hilbert_schmidt_sum(double a, double b, int d,
                                         std::size_t cutoff);

/// Exact Ornstein-Uhlenbeck transition for time t. Every Dirichlet
/// eigenmode coefficient relaxes at unit rate, so the transition is
/// e^{-t} start + sqrt(1 - e^{-2t}) * (independent DGFF).
FieldSample ou_evolve(const WeightedGraph &g, const FieldSample &start,
                      double t, std::uint64_t seed);

// "FLD1" binary field format.

void write_field(std::ostream &os, const FieldSample &sample);
FieldSample read_field(std::istream &is);
void save_field(const std::string &path, const FieldSample &sample);
FieldSample load_field(const std::string &path);

/// Sidecar "<path>.meta": one "key=value" line per entry, sorted by key.
void save_field_meta(const std::string &field_path,
                     const std::map<std::string, std::string> &entries);

} // namespace gfflab
