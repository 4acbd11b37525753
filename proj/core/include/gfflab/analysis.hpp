#pragma once

#include <algorithm>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "gfflab/lattice.hpp"
#include "gfflab/moments.hpp"
#include "gfflab/stats.hpp"

namespace gfflab {

/// rows x cols lattice with unit spacing; vertex (r, c) has id r * cols + c,
/// which is the id layout of build_box_lattice(2, n) and build_torus_grid.
struct GridShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  /// Domain side length in lattice units.
  double extent() const {
    return static_cast<double>(std::min(rows, cols) - 1);
  }
};

struct GridPoint {
  double row;
  double col;
};

/// Read-only view of a field laid out on a grid.
class GridField {
public:
  GridField(GridShape shape, std::span<const double> values);

  const GridShape &shape() const { return shape_; }
  double at(std::size_t r, std::size_t c) const {
    return values_[r * shape_.cols + c];
  }
  double bilinear(double r, double c) const;

private:
  GridShape shape_;
  std::span<const double> values_;
};

/// Sample angles for a circle: max(64, ceil(8 * radius)).
std::size_t circle_angle_count(double radius);

/// Whether a circle of this radius lies inside the grid.
bool circle_fits(const GridShape &shape, GridPoint center, double radius);

/// Mean of bilinearly interpolated values at equispaced angles.
double circle_average(const GridField &field, GridPoint center, double radius);

/// The circle average as a linear functional of the vertex values.
LinearFunctional circle_average_functional(const GridShape &shape,
                                           GridPoint center, double radius);

/// Radius e^{-t} of the unit domain, in lattice units: extent * e^{-t}.
double radius_at(const GridShape &shape, double t);

/// Lattice cutoff: radius 2 spacings, s_max = log(extent / 2).
double lattice_cutoff(const GridShape &shape);

struct ProfileOptions {
  /// Step of the s-grid used for the disc-average quadrature.
  double ds = 0.05;
};

/// Circle means B(t_i) and disc means
/// A(t) = int_t^{s_max} B(s) e^{t-s} ds / int_t^{s_max} e^{t-s} ds.
struct AverageProfile {
  GridPoint center{};
  std::vector<double> t;
  std::vector<double> radii;
  std::vector<double> circle_means;
  std::vector<double> disc_means;
  double s_max = 0.0;
};

/// Disc average A(t) at one point, trapezoidal in s with renormalised
/// exponential weights.
double disc_average(const GridField &field, GridPoint center, double t,
                    const ProfileOptions &options = {});

AverageProfile disc_average_profile(const GridField &field, GridPoint center,
                                    std::span<const double> t_grid,
                                    const ProfileOptions &options = {});

/// Normalisation of circle averages: slope of the exact variance of B(t)
/// against t (via rho^T G rho), fitted over `t_grid` at `center`.
struct ProfileNormalization {
  double sigma = 0.0;
  LinearFit fit;
  std::vector<double> variances;
};

ProfileNormalization estimate_profile_sigma(const WeightedGraph &g,
                                            const GridShape &shape,
                                            GridPoint center,
                                            std::span<const double> t_grid);

struct ThickPoints {
  /// Sorted vertex ids.
  std::vector<VertexId> points;
  std::size_t eligible = 0;
  double t = 0.0;
  double threshold = 0.0;
};

/// {x : A_x(t) / (sigma t) >= sqrt(a)} over points whose largest disc fits.
ThickPoints thick_points(const GridField &field, double a, double t,
                         double sigma, const ProfileOptions &options = {},
                         unsigned threads = 1);

/// Same, from precomputed disc averages (one per grid vertex, NaN where not
/// eligible). Lets a sweep over a reuse one pass over the field.
ThickPoints thick_points_from_averages(std::span<const double> disc_averages,
                                       double a, double t, double sigma);

/// A_x(t) for every vertex (NaN where the disc does not fit). Rows are
/// split across `threads`; the result does not depend on the split.
std::vector<double> disc_average_map(const GridField &field, double t,
                                     const ProfileOptions &options = {},
                                     unsigned threads = 1);

/// Default thick-point scale: one unit of t above the lattice cutoff, so
/// every disc average integrates circle means over s in [t, t + 1].
double default_thick_t(const GridShape &shape);

struct BoxDimension {
  double estimate = 0.0;
  double r_squared = 0.0;
  std::vector<double> box_sizes;
  std::vector<std::size_t> counts;
};

/// Occupied boxes per size. Boxes tile [0, extent]^2; coordinate == extent
/// falls in the last box.
std::vector<std::size_t> box_counts(std::span<const VertexId> points,
                                    const GridShape &shape,
                                    std::span<const double> box_sizes);

/// Least-squares slope of log(occupied boxes) against log(1 / box size).
BoxDimension box_dimension(std::span<const VertexId> points,
                           const GridShape &shape,
                           std::span<const double> box_sizes);

/// Same fit on the mean count over independent sets (one per field).
/// Lower variance than any single set; counts hold the rounded means.
BoxDimension box_dimension_pooled(std::span<const std::vector<VertexId>> sets,
                                  const GridShape &shape,
                                  std::span<const double> box_sizes);

/// Powers of two from the smallest one >= min_size up to extent / 4.
std::vector<double> dyadic_box_sizes(const GridShape &shape, double min_size);

struct PgmScaling {
  double min = 0.0;
  double max = 0.0;
};

/// 8-bit P5 heatmap, linear min-max scaling.
PgmScaling write_pgm(std::ostream &os, const GridShape &shape,
                     std::span<const double> values);

/// 255 on listed vertices, 0 elsewhere.
void write_mask_pgm(std::ostream &os, const GridShape &shape,
                    std::span<const VertexId> points);

/// CSV "t,radius,B,A".
void write_profile_csv(std::ostream &os, const AverageProfile &profile);

} // namespace gfflab
