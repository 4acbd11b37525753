#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "app.hpp"
#include "gfflab/gfflab.hpp"

namespace gfflab::cli {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string &path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out)
    throw std::runtime_error("cannot write " + path);
  return out;
}

void finish(std::ofstream &out, const std::string &path, Context &ctx) {
  out.close();
  if (!out)
    throw std::runtime_error("write failed: " + path);
  ctx.output(path);
}

WeightedGraph load_input_graph(const std::string &path, Context &ctx,
                               bool skip_check = false) {
  ctx.input(path);
  GraphOptions opts;
  opts.validate_definite = !skip_check;
  return load_graph(path, opts);
}

/// n x n grid of the box lattice family: n odd, n >= 3.
WeightedGraph square_grid(std::size_t side) {
  if (side < 3 || side % 2 == 0)
    throw UsageError("grid side must be odd and at least 3");
  return build_box_lattice(2, (side - 1) / 2);
}

std::vector<std::size_t> parse_indices(const std::string &text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception &) {
      throw UsageError("bad index '" + item + "'");
    }
    if (pos != item.size())
      throw UsageError("bad index '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

} // namespace

// lattice ------------------------------------------------------------------

Runner register_lattice(CLI::App &app, Context &ctx) {
  struct Opts {
    std::string kind = "box";
    std::size_t d = 2, n = 4, m = 0, length = 4, rows = 5, cols = 5;
    double weight = 1.0;
    bool anti = false;
    std::string tri, out, tri_out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App *sub = app.add_subcommand("lattice", "Build a weighted graph and write it as GFFG");
  sub->add_option("--kind", o->kind, "Graph family")
      ->check(CLI::IsMember({"box", "torus", "path", "cycle", "grid-mesh",
                             "equilateral", "cotangent"}));
  sub->add_option("--d", o->d, "Box dimension");
  sub->add_option("--n", o->n, "Box radius, torus columns or cycle length");
  sub->add_option("--m", o->m, "Torus rows (default: --n)");
  sub->add_option("--length", o->length, "Path length L (vertices 0..L)");
  sub->add_option("--rows", o->rows, "Mesh rows");
  sub->add_option("--cols", o->cols, "Mesh columns");
  sub->add_flag("--anti", o->anti, "Use the anti-diagonal split for grid-mesh");
  sub->add_option("--weight", o->weight, "Edge weight");
  sub->add_option("--tri", o->tri, "GFFT triangulation (kind cotangent)");
  sub->add_option("--tri-out", o->tri_out, "Also write the mesh as GFFT");
  sub->add_option("--out", o->out, "Output GFFG file")->required();
  return [o](Context &c) {
    c.primary_output = o->out;
    std::optional<Triangulation> tri;
    std::optional<WeightedGraph> g;
    if (o->kind == "box") {
      g.emplace(build_box_lattice(o->d, o->n, o->weight));
    } else if (o->kind == "torus") {
      g.emplace(build_torus_grid(o->m ? o->m : o->n, o->n, o->weight));
    } else if (o->kind == "path") {
      g.emplace(build_path(o->length, o->weight));
    } else if (o->kind == "cycle") {
      g.emplace(build_cycle(o->n, o->weight));
    } else {
      if (o->kind == "grid-mesh")
        tri.emplace(grid_triangulation(o->rows, o->cols, 1.0, o->anti));
      else if (o->kind == "equilateral")
        tri.emplace(equilateral_triangulation(o->rows, o->cols));
      else {
        if (o->tri.empty())
          throw UsageError("--kind cotangent needs --tri");
        c.input(o->tri);
        tri.emplace(load_triangulation(o->tri));
      }
      g.emplace(cotangent_weights(*tri));
    }
    if (!o->tri_out.empty()) {
      if (!tri)
        throw UsageError("--tri-out needs a mesh kind");
      auto out = open_out(o->tri_out);
      write_triangulation(out, *tri);
      finish(out, o->tri_out, c);
    }
    auto out = open_out(o->out);
    write_graph(out, *g);
    finish(out, o->out, c);
    return kOk;
  };
}

// sample -------------------------------------------------------------------

Runner register_sample(CLI::App &app, Context &ctx) {
  struct Opts {
    std::string lattice = "box", method = "direct";
    std::size_t d = 2, n = 16, m = 0;
    std::string tri, graph, out, pgm;
    std::uint64_t seed = 0;
    double mass2 = 0.0;
    bool skip_check = false;
  };
  auto o = std::make_shared<Opts>();
  CLI::App *sub = app.add_subcommand("sample", "Draw one field sample (FLD1 + .meta)");
  sub->add_option("--lattice", o->lattice, "Domain")
      ->check(CLI::IsMember({"box", "torus", "tri-file", "graph"}));
  sub->add_option("--d", o->d, "Box dimension");
  sub->add_option("--n", o->n, "Box radius or torus columns");
  sub->add_option("--m", o->m, "Torus rows (default: --n)");
  sub->add_option("--tri", o->tri, "GFFT triangulation for --lattice tri-file");
  sub->add_option("--graph", o->graph, "GFFG graph for --lattice graph");
  sub->add_flag("--skip-definite-check", o->skip_check,
                "Do not validate the loaded graph's quadratic form");
  sub->add_option("--seed", o->seed, "Random seed");
  sub->add_option("--mass2", o->mass2, "Squared mass m^2 >= 0")->check(CLI::NonNegativeNumber);
  sub->add_option("--method", o->method, "Sampler")->check(CLI::IsMember({"direct", "fft"}));
  sub->add_option("--out", o->out, "Output FLD1 file")->required();
  sub->add_option("--pgm", o->pgm, "Also write a PGM heatmap (2D grids only)");
  return [o](Context &c) {
    c.primary_output = o->out;
    c.manifest.seed = o->seed;
    const bool fft = o->method == "fft";
    if (fft && o->lattice != "torus")
      throw UsageError("--method fft needs --lattice torus");
    if (fft && o->mass2 > 0.0)
      throw UsageError("--method fft samples the massless field only");

    std::map<std::string, std::string> meta{{"lattice", o->lattice},
                                            {"method", o->method},
                                            {"seed", std::to_string(o->seed)},
                                            {"mass2", num(o->mass2)}};
    std::optional<GridShape> shape;
    FieldSample f;
    if (o->lattice == "torus") {
      const std::size_t m = o->m ? o->m : o->n;
      meta["m"] = std::to_string(m);
      meta["n"] = std::to_string(o->n);
      shape = GridShape{m, o->n};
      if (fft) {
        f = sample_torus_fft(m, o->n, o->seed, true);
        meta["kappa"] = num(kTorusFftKappa);
      } else {
        f = sample_massive(build_torus_grid(m, o->n), o->mass2, o->seed);
        f.method = o->mass2 > 0.0 ? SampleMethod::massive : SampleMethod::direct;
      }
    } else {
      std::optional<WeightedGraph> g;
      if (o->lattice == "box") {
        g.emplace(build_box_lattice(o->d, o->n));
        meta["d"] = std::to_string(o->d);
        meta["n"] = std::to_string(o->n);
        if (o->d == 2)
          shape = GridShape{2 * o->n + 1, 2 * o->n + 1};
      } else if (o->lattice == "tri-file") {
        if (o->tri.empty())
          throw UsageError("--lattice tri-file needs --tri");
        c.input(o->tri);
        g.emplace(cotangent_weights(load_triangulation(o->tri)));
        meta["triangulation"] = o->tri;
      } else {
        if (o->graph.empty())
          throw UsageError("--lattice graph needs --graph");
        g.emplace(load_input_graph(o->graph, c, o->skip_check));
        meta["graph"] = o->graph;
      }
      f = o->mass2 > 0.0 ? sample_massive(*g, o->mass2, o->seed)
                         : sample_dgff_direct(*g, o->seed);
    }
    meta["n_vertices"] = std::to_string(f.values.size());
    if (!o->pgm.empty()) {
      if (!shape)
        throw UsageError("--pgm needs a two-dimensional grid");
      auto pg = open_out(o->pgm, true);
      const PgmScaling sc = write_pgm(pg, *shape, f.values);
      finish(pg, o->pgm, c);
      meta["pgm"] = o->pgm;
      meta["pgm_min"] = num(sc.min);
      meta["pgm_max"] = num(sc.max);
    }
    save_field(o->out, f);
    c.output(o->out);
    save_field_meta(o->out, meta);
    c.output(std::filesystem::path(o->out).replace_extension(".meta").string());
    return kOk;
  };
}

// green --------------------------------------------------------------------

Runner register_green(CLI::App &app, Context &ctx) {
  struct Opts {
    std::string graph, out;
    bool exact = false, walk = false, skip_check = false;
    std::size_t x = 0, y = 0, walks = 100000;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  CLI::App *sub = app.add_subcommand("green", "Green's function by solve (--exact) or walks (--walk)");
  sub->add_option("--graph", o->graph, "GFFG graph")->required();
  sub->add_flag("--exact", o->exact, "Dense Green's matrix as CSV");
  sub->add_flag("--walk", o->walk, "Random-walk estimate of G(x, y)");
  sub->add_flag("--skip-definite-check", o->skip_check,
                "Do not validate the graph's quadratic form");
  sub->add_option("--x", o->x, "Walk start vertex");
  sub->add_option("--y", o->y, "Target vertex");
  sub->add_option("--walks", o->walks, "Number of walks");
  sub->add_option("--seed", o->seed, "Random seed");
  sub->add_option("--out", o->out, "Output CSV")->required();
  return [o](Context &c) {
    c.primary_output = o->out;
    if (o->exact == o->walk)
      throw UsageError("pass exactly one of --exact and --walk");
    const WeightedGraph g = load_input_graph(o->graph, c, o->skip_check);
    auto out = open_out(o->out);
    if (o->exact) {
      write_greens_csv(out, greens_matrix(g));
    } else {
      c.manifest.seed = o->seed;
      if (o->x >= g.n_vertices() || o->y >= g.n_vertices())
        throw UsageError("vertex out of range");
      const WalkEstimate e = greens_by_walk(g, o->x, o->y, o->walks, o->seed, c.threads);
      const double solve = greens_column(g, o->x)[o->y];
      out << "x,y,estimate,std_error,walks,solve\n"
          << o->x << ',' << o->y << ',' << num(e.estimate) << ',' << num(e.std_error)
          << ',' << e.n << ',' << num(solve) << '\n';
    }
    finish(out, o->out, c);
    return kOk;
  };
}

// explore ------------------------------------------------------------------

Runner register_explore(CLI::App &app, Context &ctx) {
  struct Opts {
    std::size_t grid = 5;
    std::string graph, ordering = "boustrophedon", out;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  CLI::App *sub = app.add_subcommand("explore", "Exploration martingale trace of one sample");
  sub->add_option("--grid", o->grid, "Side of the n x n grid (odd)");
  sub->add_option("--graph", o->graph, "GFFG graph instead of a grid");
  sub->add_option("--ordering", o->ordering, "Reveal order")
      ->check(CLI::IsMember({"boustrophedon", "interior", "random"}));
  sub->add_option("--seed", o->seed, "Random seed (field on stream 0, order on stream 1)");
  sub->add_option("--out", o->out, "Output trace CSV")->required();
  return [o](Context &c) {
    c.primary_output = o->out;
    c.manifest.seed = o->seed;
    const WeightedGraph g =
        o->graph.empty() ? square_grid(o->grid) : load_input_graph(o->graph, c);
    std::vector<VertexId> order = g.interior();
    if (o->ordering == "boustrophedon") {
      order = boustrophedon_ordering(g);
    } else if (o->ordering == "random") {
      Rng rng(o->seed, 1);
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next_u64() % i]);
    }
    const FieldSample f = sample_dgff_direct(g, o->seed);
    const ExplorationTrace tr = explore(g, default_f0(g), order, f.values);
    auto out = open_out(o->out);
    write_trace_csv(out, tr);
    finish(out, o->out, c);
    return kOk;
  };
}

// moments ------------------------------------------------------------------

Runner register_moments(CLI::App &app, Context &ctx) {
  struct Opts {
    std::size_t k = 0, grid = 5, samples = 100000;
    std::string indices, out;
    std::uint64_t seed = 1;
  };
  auto o = std::make_shared<Opts>();
  CLI::App *sub = app.add_subcommand(
      "moments", "Wick moment of interior values (indices into the interior list)");
  sub->add_option("--k", o->k, "Moment order")->required();
  sub->add_option("--indices", o->indices, "Comma-separated interior indices")->required();
  sub->add_option("--grid", o->grid, "Side of the n x n grid (odd)");
  sub->add_option("--samples", o->samples, "Monte Carlo samples (0: exact only)");
  sub->add_option("--seed", o->seed, "Random seed");
  sub->add_option("--out", o->out, "Output CSV")->required();
  return [o](Context &c) {
    c.primary_output = o->out;
    c.manifest.seed = o->seed;
    const std::vector<std::size_t> idx = parse_indices(o->indices);
    if (idx.size() != o->k)
      throw UsageError("--k does not match the number of indices");
    if (o->samples == 1)
      throw UsageError("--samples must be 0 or at least 2");
    const WeightedGraph g = square_grid(o->grid);
    for (std::size_t i : idx)
      if (i >= g.n_free())
        throw UsageError("index " + std::to_string(i) + " exceeds the " +
                         std::to_string(g.n_free()) + " interior vertices");
    const GreensMatrix G = greens_matrix(g);
    const PairingSum exact = wick_moment(G.values, idx);

    std::string empirical, error;
    if (o->samples > 0) {
      MomentAccumulator acc({idx});
      const GaussianFieldSampler s(g);
      Rng rng(o->seed);
      FieldFunction f(g.n_vertices());
      std::vector<double> vals(g.n_free());
      for (std::size_t i = 0; i < o->samples; ++i) {
        s.draw_into(rng, f);
        for (std::size_t j = 0; j < g.n_free(); ++j)
          vals[j] = f[g.free_vertices()[j]];
        acc.add(vals);
      }
      const MomentEstimate e = acc.estimate(0);
      empirical = num(e.estimate);
      error = num(e.std_error);
    }
    std::string tuple;
    for (std::size_t i = 0; i < idx.size(); ++i)
      tuple += (i ? " " : "") + std::to_string(idx[i]);
    auto out = open_out(o->out);
    out << "tuple,exact,empirical,std_error\n"
        << tuple << ',' << num(exact.value) << ',' << empirical << ',' << error << '\n';
    finish(out, o->out, c);
    std::cout << "matchings " << exact.matchings << ", exact " << num(exact.value) << '\n';
    return kOk;
  };
}

// thick --------------------------------------------------------------------

Runner register_thick(CLI::App &app, Context &ctx) {
  struct Opts {
    double a = 0.0;
    std::size_t size = 513, fields = 1;
    std::optional<double> t;
    std::uint64_t seed = 0;
    std::string out = "thick";
  };
  auto o = std::make_shared<Opts>();
  CLI::App *sub = app.add_subcommand("thick", "Thick points of a DGFF sample and their box dimension");
  sub->add_option("--a", o->a, "Thickness parameter in [0, 2]")->required()->check(CLI::Range(0.0, 2.0));
  sub->add_option("--size", o->size, "Grid side (odd, >= 33)");
  sub->add_option("--t", o->t, "Disc scale t (default: lattice cutoff - 1)");
  sub->add_option("--fields", o->fields, "Independent fields pooled in the box counts")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", o->seed, "Random seed (field i on stream i)");
  sub->add_option("--out", o->out, "Output prefix");
  return [o](Context &c) {
    const std::string mask_path = o->out + "_mask.pgm";
    const std::string dim_path = o->out + "_dimension.csv";
    const std::string box_path = o->out + "_boxes.csv";
    c.primary_output = dim_path;
    c.manifest.seed = o->seed;
    if (o->size < 33 || o->size % 2 == 0)
      throw UsageError("--size must be odd and at least 33");
    const WeightedGraph g = square_grid(o->size);
    const GridShape shape{o->size, o->size};
    const double s_max = lattice_cutoff(shape);
    const double t = o->t.value_or(default_thick_t(shape));
    if (!(t > 0.0 && t < s_max))
      throw UsageError("--t must lie in (0, " + num(s_max) + ")");

    std::vector<double> t_grid;
    for (double x = 1.0; x <= s_max - 0.5 + 1e-9; x += 0.25)
      t_grid.push_back(x);
    const double mid = static_cast<double>(o->size / 2);
    const ProfileNormalization norm = estimate_profile_sigma(g, shape, {mid, mid}, t_grid);

    const GaussianFieldSampler sampler(g);
    std::vector<std::vector<VertexId>> sets;
    std::size_t points = 0, eligible = 0;
    double threshold = 0.0;
    for (std::size_t i = 0; i < o->fields; ++i) {
      Rng rng(o->seed, i);
      const FieldFunction f = sampler.draw(rng);
      const auto avg = disc_average_map(GridField(shape, f), t, {}, c.threads);
      ThickPoints tp = thick_points_from_averages(avg, o->a, t, norm.sigma);
      points += tp.points.size();
      eligible += tp.eligible;
      threshold = tp.threshold;
      if (i == 0) {
        auto mask = open_out(mask_path, true);
        write_mask_pgm(mask, shape, tp.points);
        finish(mask, mask_path, c);
      }
      sets.push_back(std::move(tp.points));
    }

    const auto sizes = dyadic_box_sizes(shape, radius_at(shape, t));
    BoxDimension bd;
    bool defined = points > 0 && sizes.size() >= 2;
    if (defined)
      bd = box_dimension_pooled(sets, shape, sizes);
    else
      std::cerr << "gff-lab: box dimension undefined ("
                << (points == 0 ? "no thick points" : "fewer than two box sizes") << ")\n";

    auto boxes = open_out(box_path);
    boxes << "box_size,mean_count\n";
    for (std::size_t i = 0; i < bd.box_sizes.size(); ++i) {
      double total = 0.0;
      for (const auto &s : sets)
        total += static_cast<double>(box_counts(s, shape, std::span(&bd.box_sizes[i], 1))[0]);
      boxes << num(bd.box_sizes[i]) << ',' << num(total / static_cast<double>(sets.size()))
            << '\n';
    }
    finish(boxes, box_path, c);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto dim = open_out(dim_path);
    dim << "a,t,s_max,sigma,threshold,fields,points,eligible,dimension,r_squared\n"
        << num(o->a) << ',' << num(t) << ',' << num(s_max) << ',' << num(norm.sigma) << ','
        << num(threshold) << ',' << o->fields << ',' << points << ',' << eligible << ','
        << num(defined ? bd.estimate : nan) << ',' << num(defined ? bd.r_squared : nan)
        << '\n';
    finish(dim, dim_path, c);
    std::cout << "a " << o->a << ": " << points << " thick points, dimension "
              << (defined ? num(bd.estimate) : std::string("undefined")) << '\n';
    return kOk;
  };
}

} // namespace gfflab::cli
