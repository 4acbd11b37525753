#include "gfflab/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <string>

#include "gfflab/error.hpp"
#include "gfflab/green.hpp"
#include "parallel.hpp"

namespace gfflab {

GridField::GridField(GridShape shape, std::span<const double> values)
    : shape_(shape), values_(values) {
  if (shape_.rows < 2 || shape_.cols < 2)
    throw InvalidInput("grid must be at least 2 x 2");
  if (values_.size() != shape_.size())
    throw InvalidInput("field length does not match grid shape");
}

namespace {

struct BilinearStencil {
  std::size_t r0, c0;
  double fr, fc;
};

BilinearStencil stencil(const GridShape &shape, double r, double c) {
  const double rmax = static_cast<double>(shape.rows - 2);
  const double cmax = static_cast<double>(shape.cols - 2);
  const double rf = std::min(std::max(std::floor(r), 0.0), rmax);
  const double cf = std::min(std::max(std::floor(c), 0.0), cmax);
  return {static_cast<std::size_t>(rf), static_cast<std::size_t>(cf), r - rf,
          c - cf};
}

void require_circle(const GridShape &shape, GridPoint center, double radius) {
  if (!(radius >= 2.0))
    throw InvalidInput("averaging radius must be at least 2 lattice spacings");
  if (!circle_fits(shape, center, radius))
    throw InvalidInput("averaging circle leaves the domain");
}

} // namespace

double GridField::bilinear(double r, double c) const {
  const BilinearStencil s = stencil(shape_, r, c);
  return (1.0 - s.fr) * (1.0 - s.fc) * at(s.r0, s.c0) +
         (1.0 - s.fr) * s.fc * at(s.r0, s.c0 + 1) +
         s.fr * (1.0 - s.fc) * at(s.r0 + 1, s.c0) +
         s.fr * s.fc * at(s.r0 + 1, s.c0 + 1);
}

std::size_t circle_angle_count(double radius) {
  return std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(8.0 * radius)));
}

bool circle_fits(const GridShape &shape, GridPoint center, double radius) {
  return center.row - radius >= 0.0 &&
         center.row + radius <= static_cast<double>(shape.rows - 1) &&
         center.col - radius >= 0.0 &&
         center.col + radius <= static_cast<double>(shape.cols - 1);
}

double circle_average(const GridField &field, GridPoint center, double radius) {
  require_circle(field.shape(), center, radius);
  const std::size_t n = circle_angle_count(radius);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n);
    s += field.bilinear(center.row + radius * std::sin(theta),
                        center.col + radius * std::cos(theta));
  }
  return s / static_cast<double>(n);
}

LinearFunctional circle_average_functional(const GridShape &shape,
                                           GridPoint center, double radius) {
  require_circle(shape, center, radius);
  const std::size_t n = circle_angle_count(radius);
  const double inv = 1.0 / static_cast<double>(n);
  std::map<VertexId, double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n);
    const BilinearStencil s = stencil(shape, center.row + radius * std::sin(theta),
                                      center.col + radius * std::cos(theta));
    const VertexId base = s.r0 * shape.cols + s.c0;
    weights[base] += inv * (1.0 - s.fr) * (1.0 - s.fc);
    weights[base + 1] += inv * (1.0 - s.fr) * s.fc;
    weights[base + shape.cols] += inv * s.fr * (1.0 - s.fc);
    weights[base + shape.cols + 1] += inv * s.fr * s.fc;
  }
  LinearFunctional out;
  out.terms.assign(weights.begin(), weights.end());
  return out;
}

double radius_at(const GridShape &shape, double t) {
  return shape.extent() * std::exp(-t);
}

double lattice_cutoff(const GridShape &shape) {
  return std::log(shape.extent() / 2.0);
}

namespace {

// Trapezoidal rule in s over [t, s_max] with weights e^{t-s}, normalised,
// plus the sample offsets of every circle.
struct DiscStencil {
  std::vector<double> weight;
  std::vector<std::vector<GridPoint>> offsets;
  double max_radius = 0.0;

  DiscStencil(const GridShape &shape, double t, double ds) {
    if (!(ds > 0.0))
      throw InvalidInput("profile step must be positive");
    const double s_max = lattice_cutoff(shape);
    if (t > s_max)
      throw InvalidInput("disc radius is below the lattice cutoff");
    std::vector<double> s;
    for (double x = t; x < s_max - 1e-12; x += ds)
      s.push_back(x);
    s.push_back(s_max);
    weight.assign(s.size(), 0.0);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      const double h = s[i + 1] - s[i];
      weight[i] += 0.5 * h * std::exp(t - s[i]);
      weight[i + 1] += 0.5 * h * std::exp(t - s[i + 1]);
    }
    if (s.size() == 1)
      weight[0] = 1.0;
    double total = 0.0;
    for (double w : weight)
      total += w;
    for (double &w : weight)
      w /= total;
    max_radius = radius_at(shape, t);
    for (double si : s) {
      const double r = radius_at(shape, si);
      const std::size_t n = circle_angle_count(r);
      std::vector<GridPoint> ring(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) /
                             static_cast<double>(n);
        ring[i] = {r * std::sin(theta), r * std::cos(theta)};
      }
      offsets.push_back(std::move(ring));
    }
  }

  double apply(const GridField &field, GridPoint c) const {
    double a = 0.0;
    for (std::size_t k = 0; k < weight.size(); ++k) {
      double b = 0.0;
      for (const GridPoint &o : offsets[k])
        b += field.bilinear(c.row + o.row, c.col + o.col);
      a += weight[k] * b / static_cast<double>(offsets[k].size());
    }
    return a;
  }
};

} // namespace

double disc_average(const GridField &field, GridPoint center, double t,
                    const ProfileOptions &options) {
  const DiscStencil st(field.shape(), t, options.ds);
  require_circle(field.shape(), center, st.max_radius);
  return st.apply(field, center);
}

AverageProfile disc_average_profile(const GridField &field, GridPoint center,
                                    std::span<const double> t_grid,
                                    const ProfileOptions &options) {
  AverageProfile p;
  p.center = center;
  p.s_max = lattice_cutoff(field.shape());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
      throw InvalidInput("t grid must be strictly increasing");
    const double r = radius_at(field.shape(), t_grid[i]);
    p.t.push_back(t_grid[i]);
    p.radii.push_back(r);
    p.circle_means.push_back(circle_average(field, center, r));
    p.disc_means.push_back(disc_average(field, center, t_grid[i], options));
  }
  return p;
}

ProfileNormalization estimate_profile_sigma(const WeightedGraph &g,
                                            const GridShape &shape,
                                            GridPoint center,
                                            std::span<const double> t_grid) {
  if (g.n_vertices() != shape.size())
    throw InvalidInput("graph does not match grid shape");
  LaplacianSolver solver(g);
  ProfileNormalization out;
  std::vector<double> ts(t_grid.begin(), t_grid.end());
  for (double t : ts) {
    const LinearFunctional rho =
        circle_average_functional(shape, center, radius_at(shape, t));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.n_free()));
    for (const auto &[v, c] : rho.terms) {
      const std::size_t r = g.reduced_index(v);
      if (r != WeightedGraph::npos)
        b[static_cast<Eigen::Index>(r)] += c;
    }
    out.variances.push_back(b.dot(solver.solve(b)));
  }
  out.fit = linear_fit(ts, out.variances);
  if (!(out.fit.slope > 0.0))
    throw NumericalError("circle-average variance does not grow with t");
  out.sigma = std::sqrt(out.fit.slope);
  return out;
}

std::vector<double> disc_average_map(const GridField &field, double t,
                                     const ProfileOptions &options,
                                     unsigned threads) {
  const GridShape &shape = field.shape();
  const DiscStencil st(shape, t, options.ds);
  std::vector<double> out(shape.size(), std::numeric_limits<double>::quiet_NaN());
  detail::parallel_for(shape.rows, threads, [&](std::size_t r) {
    for (std::size_t c = 0; c < shape.cols; ++c) {
      const GridPoint p{static_cast<double>(r), static_cast<double>(c)};
      if (circle_fits(shape, p, st.max_radius))
        out[r * shape.cols + c] = st.apply(field, p);
    }
  });
  return out;
}

double default_thick_t(const GridShape &shape) {
  return lattice_cutoff(shape) - 1.0;
}

ThickPoints thick_points_from_averages(std::span<const double> disc_averages,
                                       double a, double t, double sigma) {
  if (!(a >= 0.0 && a <= 2.0))
    throw InvalidInput("thickness parameter must lie in [0, 2]");
  if (!(sigma > 0.0) || !(t > 0.0))
    throw InvalidInput("thick points need sigma > 0 and t > 0");
  ThickPoints out;
  out.t = t;
  out.threshold = std::sqrt(a) * sigma * t;
  for (std::size_t v = 0; v < disc_averages.size(); ++v) {
    const double x = disc_averages[v];
    if (std::isnan(x))
      continue;
    ++out.eligible;
    if (x >= out.threshold)
      out.points.push_back(v);
  }
  return out;
}

ThickPoints thick_points(const GridField &field, double a, double t,
                         double sigma, const ProfileOptions &options,
                         unsigned threads) {
  const std::vector<double> avg = disc_average_map(field, t, options, threads);
  return thick_points_from_averages(avg, a, t, sigma);
}

std::vector<std::size_t> box_counts(std::span<const VertexId> points,
                                    const GridShape &shape,
                                    std::span<const double> box_sizes) {
  const double extent = shape.extent();
  std::vector<std::size_t> out;
  for (double s : box_sizes) {
    if (!(s > 0.0))
      throw InvalidInput("box sizes must be positive");
    const auto nb = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(extent / s - 1e-9)));
    std::vector<bool> occupied(nb * nb, false);
    std::size_t count = 0;
    for (VertexId v : points) {
      if (v >= shape.size())
        throw InvalidInput("point outside the grid");
      const auto ir = std::min(
          static_cast<std::size_t>(static_cast<double>(v / shape.cols) / s), nb - 1);
      const auto ic = std::min(
          static_cast<std::size_t>(static_cast<double>(v % shape.cols) / s), nb - 1);
      if (!occupied[ir * nb + ic]) {
        occupied[ir * nb + ic] = true;
        ++count;
      }
    }
    out.push_back(count);
  }
  return out;
}

namespace {

BoxDimension fit_counts(std::span<const double> box_sizes,
                        std::span<const double> mean_counts) {
  BoxDimension out;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < box_sizes.size(); ++i) {
    out.box_sizes.push_back(box_sizes[i]);
    out.counts.push_back(static_cast<std::size_t>(std::llround(mean_counts[i])));
    x.push_back(std::log(1.0 / box_sizes[i]));
    y.push_back(std::log(mean_counts[i]));
  }
  const LinearFit fit = linear_fit(x, y);
  out.estimate = fit.slope;
  out.r_squared = fit.r_squared;
  return out;
}

} // namespace

BoxDimension box_dimension(std::span<const VertexId> points,
                           const GridShape &shape,
                           std::span<const double> box_sizes) {
  if (points.empty())
    throw InvalidInput("box dimension of an empty set is undefined");
  if (box_sizes.size() < 2)
    throw InvalidInput("box dimension needs at least two scales");
  const auto counts = box_counts(points, shape, box_sizes);
  const std::vector<double> mean(counts.begin(), counts.end());
  return fit_counts(box_sizes, mean);
}

BoxDimension box_dimension_pooled(std::span<const std::vector<VertexId>> sets,
                                  const GridShape &shape,
                                  std::span<const double> box_sizes) {
  if (box_sizes.size() < 2)
    throw InvalidInput("box dimension needs at least two scales");
  std::vector<double> mean(box_sizes.size(), 0.0);
  for (const auto &set : sets) {
    const auto counts = box_counts(set, shape, box_sizes);
    for (std::size_t i = 0; i < counts.size(); ++i)
      mean[i] += static_cast<double>(counts[i]);
  }
  if (sets.empty() || mean.back() == 0.0)
    throw InvalidInput("box dimension of an empty set is undefined");
  for (double &m : mean)
    m /= static_cast<double>(sets.size());
  return fit_counts(box_sizes, mean);
}

std::vector<double> dyadic_box_sizes(const GridShape &shape, double min_size) {
  if (!(min_size > 0.0))
    throw InvalidInput("minimum box size must be positive");
  std::vector<double> out;
  double s = 1.0;
  while (s < min_size)
    s *= 2.0;
  for (; s <= shape.extent() / 4.0 + 1e-9; s *= 2.0)
    out.push_back(s);
  return out;
}

PgmScaling write_pgm(std::ostream &os, const GridShape &shape,
                     std::span<const double> values) {
  if (values.size() != shape.size())
    throw InvalidInput("field length does not match grid shape");
  PgmScaling sc{std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
  for (double v : values)
    if (std::isfinite(v)) {
      sc.min = std::min(sc.min, v);
      sc.max = std::max(sc.max, v);
    }
  if (!std::isfinite(sc.min))
    sc.min = sc.max = 0.0;
  os << "P5\n" << shape.cols << ' ' << shape.rows << "\n255\n";
  const double span = sc.max - sc.min;
  std::string row(shape.cols, '\0');
  for (std::size_t r = 0; r < shape.rows; ++r) {
    for (std::size_t c = 0; c < shape.cols; ++c) {
      const double v = values[r * shape.cols + c];
      double level = 0.0;
      if (std::isfinite(v) && span > 0.0)
        level = std::round(255.0 * (v - sc.min) / span);
      row[c] = static_cast<char>(static_cast<unsigned char>(level));
    }
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  return sc;
}

void write_mask_pgm(std::ostream &os, const GridShape &shape,
                    std::span<const VertexId> points) {
  std::string data(shape.size(), '\0');
  for (VertexId v : points) {
    if (v >= shape.size())
      throw InvalidInput("point outside the grid");
    data[v] = static_cast<char>(255);
  }
  os << "P5\n" << shape.cols << ' ' << shape.rows << "\n255\n";
  os.write(data.data(), static_cast<std::streamsize>(data.size()));
}

void write_profile_csv(std::ostream &os, const AverageProfile &profile) {
  char buf[128];
  os << "t,radius,B,A\n";
  for (std::size_t i = 0; i < profile.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", profile.t[i],
                  profile.radii[i], profile.circle_means[i],
                  profile.disc_means[i]);
    os << buf;
  }
}

} // namespace gfflab
