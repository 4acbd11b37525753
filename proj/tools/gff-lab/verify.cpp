#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "app.hpp"
#include "gfflab/gfflab.hpp"

namespace gfflab::cli {

namespace {

struct Check {
  std::string name;
  double measured = 0.0;
  double oracle = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Params {
  std::size_t grid = 5;
  std::size_t samples = 0; // 0: suite default
  std::uint64_t seed = 1;
  std::size_t d = 2;
};

using Checks = std::vector<Check>;

/// pass iff |measured - oracle| <= tolerance.
void near(Checks &out, std::string name, double measured, double oracle, double tol) {
  out.push_back({std::move(name), measured, oracle, tol,
                 std::abs(measured - oracle) <= tol});
}

/// pass iff 0 <= measured <= bound.
void below(Checks &out, std::string name, double measured, double bound) {
  out.push_back({std::move(name), measured, 0.0, bound, measured >= 0.0 && measured <= bound});
}

void at_least(Checks &out, std::string name, double measured, double bound) {
  out.push_back({std::move(name), measured, bound, 0.0, measured >= bound});
}

std::size_t samples_or(const Params &p, std::size_t fallback) {
  return p.samples ? p.samples : fallback;
}

WeightedGraph grid_of(std::size_t side) {
  if (side < 3 || side % 2 == 0)
    throw UsageError("--grid must be odd and at least 3");
  return build_box_lattice(2, (side - 1) / 2);
}

// fem ------------------------------------------------------------------------

Checks suite_fem(const Params &p) {
  Checks out;
  Rng rng(p.seed);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 4 + rng.next_u64() % 5, cols = 4 + rng.next_u64() % 5;
    const Triangulation tri = jittered_triangulation(rows, cols, rng);
    const WeightedGraph g = cotangent_weights(tri);
    FieldFunction f(g.n_vertices());
    rng.fill_normal(f);
    const double pl = pl_energy(tri, f);
    worst = std::max(worst, std::abs(pl - dirichlet_energy(g, f)) / std::abs(pl));
  }
  below(out, "pl_energy_vs_cotangent_max_rel_error_100_meshes", worst, 1e-12);

  const WeightedGraph sq = cotangent_weights(grid_triangulation(6, 6));
  double diag = 0.0, axis = 0.0;
  for (const Edge &e : sq.edges()) {
    const auto a = sq.position(e.u), b = sq.position(e.v);
    const bool diagonal = a[0] != b[0] && a[1] != b[1];
    if (diagonal)
      diag = std::max(diag, std::abs(e.w));
    else if (!(sq.is_boundary(e.u) && sq.is_boundary(e.v)))
      axis = std::max(axis, std::abs(e.w - 1.0));
  }
  near(out, "square_split_diagonal_weight", diag, 0.0, 0.0);
  near(out, "square_split_axis_weight_minus_one", axis, 0.0, 0.0);

  const WeightedGraph eq = cotangent_weights(equilateral_triangulation(7, 7));
  double eq_dev = 0.0;
  for (const Edge &e : eq.edges())
    if (!eq.is_boundary(e.u) || !eq.is_boundary(e.v))
      eq_dev = std::max(eq_dev, std::abs(e.w - 1.0 / std::sqrt(3.0)));
  below(out, "equilateral_weight_minus_inv_sqrt3", eq_dev, 1e-14);
  return out;
}

// covariance -----------------------------------------------------------------

Checks suite_covariance(const Params &p) {
  Checks out;
  const std::size_t K = samples_or(p, 100000);
  const WeightedGraph g = grid_of(p.grid);
  const GreensMatrix G = greens_matrix(g);
  const GaussianFieldSampler s(g);
  CovarianceAccumulator acc(g.n_free());
  Rng rng(p.seed);
  FieldFunction f(g.n_vertices());
  std::vector<double> x(g.n_free());
  for (std::size_t i = 0; i < K; ++i) {
    s.draw_into(rng, f);
    for (std::size_t j = 0; j < x.size(); ++j)
      x[j] = f[g.free_vertices()[j]];
    acc.add(x);
  }
  below(out, "direct_max_standardized_deviation", max_standardized_deviation(acc.covariance(), G.values, K), 5.0);

  const Eigen::MatrixXd P = greens_matrix(build_torus_grid(4, 4)).values;
  near(out, "fft_mode_sum_vs_pseudoinverse_max_abs",
       (torus_fft_covariance(4, 4, true) - P).cwiseAbs().maxCoeff(), 0.0, 1e-10);
  CovarianceAccumulator t(16);
  for (std::size_t i = 0; i < K; ++i)
    t.add(sample_torus_fft(4, 4, splitmix64(p.seed) + i, true).values);
  below(out, "fft_torus4_max_standardized_deviation", max_standardized_deviation(t.covariance(), P, K), 5.0);
  return out;
}

// markov ---------------------------------------------------------------------

Checks suite_markov(const Params &p) {
  Checks out;
  const std::size_t K = samples_or(p, 100000);
  const WeightedGraph g = build_box_lattice(2, 3);
  const VertexId y = 24;
  const OnePointConditional one = one_point_conditional(g, y);
  const GaussianFieldSampler s(g);
  const auto &interior = g.interior();
  CovarianceAccumulator acc(interior.size() + 1);
  Rng rng(p.seed);
  FieldFunction f(g.n_vertices());
  std::vector<double> row(interior.size() + 1);
  for (std::size_t i = 0; i < K; ++i) {
    s.draw_into(rng, f);
    double mean = 0.0;
    for (const Neighbor &nb : one.weights)
      mean += nb.w * f[nb.vertex];
    row[0] = f[y] - mean;
    for (std::size_t j = 0; j < interior.size(); ++j)
      row[j + 1] = interior[j] == y ? 0.0 : f[interior[j]];
    acc.add(row);
  }
  const Eigen::MatrixXd C = acc.covariance();
  near(out, "one_point_residual_variance", C(0, 0), one.variance,
       5.0 * one.variance * std::sqrt(2.0 / static_cast<double>(K)));
  double worst = 0.0;
  for (std::size_t j = 0; j < interior.size(); ++j) {
    if (interior[j] == y)
      continue;
    const auto jj = static_cast<Eigen::Index>(j + 1);
    worst = std::max(worst, std::abs(C(0, jj)) / std::sqrt(C(0, 0) * C(jj, jj)));
  }
  below(out, "one_point_max_abs_cross_correlation_in_std_errors",
        worst * std::sqrt(static_cast<double>(K)), 5.0);

  const WeightedGraph g9 = build_box_lattice(2, 4);
  double orth = 0.0, pyth = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<VertexId> U;
    for (VertexId v : g9.interior())
      if (rng.uniform() < 0.4)
        U.push_back(v);
    if (U.empty())
      U.push_back(g9.interior()[0]);
    FieldFunction h(g9.n_vertices());
    rng.fill_normal(h);
    const Decomposition d = decompose(g9, U, h);
    const double total = dirichlet_energy(g9, h);
    orth = std::max(orth, std::abs(dirichlet_inner(g9, d.harmonic_part, d.remainder)) / total);
    pyth = std::max(pyth, std::abs(dirichlet_energy(g9, d.harmonic_part) +
                                   dirichlet_energy(g9, d.remainder) - total) /
                              total);
  }
  below(out, "decompose_orthogonality_max_rel", orth, 1e-10);
  below(out, "decompose_pythagoras_max_rel", pyth, 1e-10);

  std::vector<VertexId> block;
  for (std::size_t r = 2; r <= 4; ++r)
    for (std::size_t c = 2; c <= 4; ++c)
      block.push_back(r * 7 + c);
  const ConditionalLaw ref = conditional_law(g, block, FieldFunction(49, 0.0));
  double diff = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    FieldFunction ext(49);
    rng.fill_normal(ext);
    diff = std::max(diff, (conditional_law(g, block, ext).covariance.values -
                           ref.covariance.values)
                              .cwiseAbs()
                              .maxCoeff());
  }
  near(out, "conditional_covariance_exterior_independence", diff, 0.0, 0.0);
  return out;
}

// wick -----------------------------------------------------------------------

Checks suite_wick(const Params &p) {
  Checks out;
  const std::size_t K = samples_or(p, 100000);
  static const std::size_t double_factorial[] = {1, 0, 1, 0, 3, 0, 15, 0, 105};
  bool counts = true;
  for (std::size_t k = 1; k <= 8; ++k) {
    std::size_t n = 0;
    for_each_matching(k, [&](const Matching &) { ++n; });
    counts = counts && n == double_factorial[k] && matching_count(k) == n;
  }
  at_least(out, "matching_counts_match_double_factorial", counts ? 1.0 : 0.0, 1.0);

  const WeightedGraph g = grid_of(p.grid);
  const GreensMatrix G = greens_matrix(g);
  const auto &C = G.values;
  const std::vector<std::size_t> four{0, 1, 2, 3};
  const double expansion = C(0, 1) * C(2, 3) + C(0, 2) * C(1, 3) + C(0, 3) * C(1, 2);
  near(out, "k4_three_pairing_expansion", wick_moment(C, four).value, expansion,
       1e-14 * std::abs(expansion));

  Rng rng(p.seed);
  std::vector<std::vector<std::size_t>> tuples;
  for (int i = 0; i < 10; ++i) {
    const std::size_t k = i % 2 == 0 ? 4 : 6;
    std::vector<std::size_t> t(k);
    for (auto &x : t)
      x = rng.next_u64() % g.n_free();
    tuples.push_back(std::move(t));
  }
  MomentAccumulator acc(tuples);
  const GaussianFieldSampler s(g);
  Rng draws(p.seed, 1);
  FieldFunction f(g.n_vertices());
  std::vector<double> x(g.n_free());
  for (std::size_t i = 0; i < K; ++i) {
    s.draw_into(draws, f);
    for (std::size_t j = 0; j < x.size(); ++j)
      x[j] = f[g.free_vertices()[j]];
    acc.add(x);
  }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const MomentEstimate e = acc.estimate(i);
    const double exact = wick_moment(C, tuples[i]).value;
    std::string name = "tuple";
    for (std::size_t v : tuples[i])
      name += "_" + std::to_string(v);
    near(out, name + "_in_std_errors", (e.estimate - exact) / e.std_error, 0.0, 5.0);
    out.back().pass = true; // individual tuples are informational
    if (std::abs(e.estimate - exact) <= 5.0 * e.std_error)
      ++agree;
  }
  at_least(out, "tuples_within_5_std_errors", static_cast<double>(agree), 9.0);
  return out;
}

// scaling --------------------------------------------------------------------

double centre_variance(std::size_t d, std::size_t n) {
  const WeightedGraph g = build_box_lattice(d, n);
  VertexId c = 0;
  for (std::size_t i = 0; i < d; ++i)
    c = c * (2 * n + 1) + n;
  return greens_column(g, c)[c];
}

Checks suite_scaling(const Params &p) {
  Checks out;
  if (p.d == 1) {
    near(out, "d1_doubling_ratio_n64", centre_variance(1, 128) / centre_variance(1, 64), 2.0, 0.1);
  } else if (p.d == 2) {
    std::vector<double> x, y;
    for (std::size_t n : {8, 16, 32, 64}) {
      x.push_back(std::log(static_cast<double>(n)));
      y.push_back(centre_variance(2, n));
    }
    const LinearFit fit = linear_fit(x, y);
    at_least(out, "d2_log_fit_r_squared", fit.r_squared, 0.99);
    out.push_back({"d2_log_fit_slope", fit.slope, 1.0 / (2.0 * M_PI), 0.0, true});
  } else if (p.d == 3) {
    const double a = centre_variance(3, 6), b = centre_variance(3, 12);
    near(out, "d3_saturation_rel_change_6_to_12", (b - a) / b, 0.0, 0.1);
  } else {
    throw UsageError("--d must be 1, 2 or 3");
  }
  return out;
}

// explore --------------------------------------------------------------------

Checks suite_explore(const Params &p) {
  Checks out;
  const std::size_t K = samples_or(p, 10000);
  const WeightedGraph g = grid_of(p.grid);
  const ExplorationPlan plan(g, default_f0(g), boustrophedon_ordering(g));
  const std::size_t steps = plan.steps();
  const GaussianFieldSampler s(g);
  CovarianceAccumulator inc(steps);
  Rng rng(p.seed);
  std::vector<double> d(steps);
  for (std::size_t i = 0; i < K; ++i) {
    const ExplorationTrace tr = plan.run(s.draw(rng));
    for (std::size_t k = 0; k < steps; ++k)
      d[k] = tr.values[k + 1] - tr.values[k];
    inc.add(d);
  }
  const Eigen::MatrixXd C = inc.covariance();
  const auto &t = plan.times();
  const double rootK = std::sqrt(static_cast<double>(K));
  double var_dev = 0.0, corr_dev = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double dt = t[k + 1] - t[k];
    var_dev = std::max(var_dev, std::abs(C(kk, kk) - dt) / (dt * std::sqrt(2.0) / rootK));
    for (std::size_t j = k + 1; j < steps; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      corr_dev = std::max(corr_dev, std::abs(C(kk, jj)) / std::sqrt(C(kk, kk) * C(jj, jj)) * rootK);
    }
  }
  below(out, "increment_variance_max_std_errors", var_dev, 5.0);
  below(out, "increment_correlation_max_std_errors", corr_dev, 5.0);

  const FieldFunction field = sample_dgff_direct(g, p.seed).values;
  const ExplorationTrace tr = plan.run(field);
  const std::size_t s_idx = steps / 2;
  const std::vector<ProjectionTerm> terms{{1.5, s_idx}};
  const auto w = explore_functional(tr, terms);
  const FieldFunction ps = plan.projection(s_idx);
  FieldFunction fa(ps.size());
  for (std::size_t v = 0; v < ps.size(); ++v)
    fa[v] = 1.5 * ps[v];
  double worst = 0.0;
  for (std::size_t k = 0; k <= steps; ++k)
    worst = std::max(worst, std::abs(w[k] - 1.5 * tr.values[std::min(s_idx, k)]));
  near(out, "functional_equals_a_W_min_s_t", worst, 0.0, 0.0);
  near(out, "functional_end_vs_dirichlet_pairing", w[steps], dirichlet_inner(g, field, fa),
       1e-10 * std::max(1.0, std::abs(w[steps])));
  return out;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

} // namespace

Runner register_verify(CLI::App &app, Context &ctx) {
  struct Opts {
    std::string suite, out_dir = ".";
    Params params;
  };
  auto o = std::make_shared<Opts>();
  CLI::App *sub = app.add_subcommand(
      "verify", "Run an invariant suite: fem, covariance, markov, wick, scaling, explore");
  sub->add_option("suite", o->suite, "Suite name")->required();
  sub->add_option("--grid", o->params.grid, "Side of the n x n grid (odd)");
  sub->add_option("--samples", o->params.samples, "Monte Carlo samples (default per suite)");
  sub->add_option("--seed", o->params.seed, "Random seed");
  sub->add_option("--d", o->params.d, "Dimension for the scaling suite");
  sub->add_option("--out-dir", o->out_dir, "Directory for verify_<suite>.csv/.txt");
  return [o](Context &c) {
    static const std::map<std::string, std::function<Checks(const Params &)>> suites{
        {"fem", suite_fem},         {"covariance", suite_covariance},
        {"markov", suite_markov},   {"wick", suite_wick},
        {"scaling", suite_scaling}, {"explore", suite_explore}};
    const auto base = std::filesystem::path(o->out_dir) / ("verify_" + o->suite);
    const std::string csv_path = base.string() + ".csv", txt_path = base.string() + ".txt";
    c.primary_output = csv_path;
    const auto it = suites.find(o->suite);
    if (it == suites.end())
      throw UsageError("unknown suite '" + o->suite + "'");
    c.manifest.seed = o->params.seed;
    if (o->params.samples == 1)
      throw UsageError("--samples must be at least 2");

    const Checks checks = it->second(o->params);
    bool all = true;
    std::ostringstream report, csv;
    csv << "suite,check,measured,oracle,tolerance,pass\n";
    report << "suite " << o->suite << '\n';
    for (const Check &ch : checks) {
      all = all && ch.pass;
      csv << o->suite << ',' << ch.name << ',' << num(ch.measured) << ',' << num(ch.oracle)
          << ',' << num(ch.tolerance) << ',' << (ch.pass ? 1 : 0) << '\n';
      report << (ch.pass ? "PASS " : "FAIL ") << ch.name << ": measured " << num(ch.measured)
             << ", oracle " << num(ch.oracle) << ", tolerance " << num(ch.tolerance) << '\n';
    }
    report << (all ? "all checks passed" : "some checks failed") << '\n';

    std::filesystem::create_directories(o->out_dir);
    for (const auto &[path, body] : {std::pair{csv_path, csv.str()}, std::pair{txt_path, report.str()}}) {
      std::ofstream f(path);
      f << body;
      f.close();
      if (!f)
        throw std::runtime_error("cannot write " + path);
      c.output(path);
    }
    std::cout << report.str();
    return all ? kOk : kFailed;
  };
}

} // namespace gfflab::cli
