#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>

#include "app.hpp"
#include "gfflab/gfflab.hpp"

using namespace gfflab;
using namespace gfflab::cli;

int main(int argc, char **argv) {
  CLI::App app{"Discrete Gaussian free field laboratory", "gff-lab"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx;
  app.add_option("--threads", ctx.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 256u));
  app.add_option("--manifest", ctx.manifest_path,
                 "Manifest path (default: <primary output>.manifest.json)");

  std::map<CLI::App *, Runner> runners;
  auto add = [&](Runner (*reg)(CLI::App &, Context &)) {
    const std::size_t before = app.get_subcommands({}).size();
    Runner r = reg(app, ctx);
    runners[app.get_subcommands({})[before]] = std::move(r);
  };
  add(register_lattice);
  add(register_sample);
  add(register_green);
  add(register_explore);
  add(register_moments);
  add(register_thick);
  add(register_verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  for (int i = 0; i < argc; ++i)
    ctx.manifest.command.emplace_back(argv[i]);
  ctx.manifest.threads = ctx.threads;

  const auto start = std::chrono::steady_clock::now();
  int code = kOk;
  try {
    CLI::App *sub = app.get_subcommands().front();
    code = runners.at(sub)(ctx);
  } catch (const UsageError &e) {
    std::fprintf(stderr, "gff-lab: %s\n", e.what());
    ctx.manifest.error = e.what();
    code = kUsage;
  } catch (const InvalidInput &e) {
    std::fprintf(stderr, "gff-lab: invalid input: %s\n", e.what());
    ctx.manifest.error = e.what();
    code = kUsage;
  } catch (const UnsupportedGraph &e) {
    std::fprintf(stderr, "gff-lab: unsupported graph: %s\n", e.what());
    ctx.manifest.error = e.what();
    code = kUsage;
  } catch (const ResourceError &e) {
    std::fprintf(stderr, "gff-lab: resource limit: %s\n", e.what());
    ctx.manifest.error = e.what();
    code = kUsage;
  } catch (const NumericalError &e) {
    std::fprintf(stderr, "gff-lab: numerical failure: %s\n", e.what());
    ctx.manifest.error = e.what();
    code = kNumerical;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "gff-lab: %s\n", e.what());
    ctx.manifest.error = e.what();
    code = kFailed;
  }
  ctx.manifest.exit_code = code;

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string path = ctx.manifest_path;
  if (path.empty())
    path = (ctx.primary_output.empty() ? std::string("gff-lab") : ctx.primary_output) +
           ".manifest.json";
  try {
    ctx.manifest.write(path, wall);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "gff-lab: %s\n", e.what());
    if (code == kOk)
      code = kFailed;
  }
  return code;
}
