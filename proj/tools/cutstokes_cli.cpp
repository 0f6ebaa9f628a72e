// Command line driver for the cut Stokes benchmark.
//
//   cutstokes convergence --levels 8,16,32,64,128 --correction both --out DIR
//   cutstokes sliding --n 32 --offsets 16 --out DIR
//   cutstokes fields --n 32 --out FILE
//   cutstokes mesh --n 16 --out FILE
//
// Every flag can also come from an INI/TOML file given with --config;
// options set on the command line take precedence over the file.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cutstokes/harness.hpp"

namespace fs = std::filesystem;
using namespace cutstokes;

namespace {

struct MethodFlags {
  double beta = 100;
  double gamma_v = 1e-3;
  double gamma_q = 1e-3;
  double gamma_p = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--beta", beta, "Nitsche penalty")->capture_default_str();
    cmd->add_option("--gamma-v", gamma_v, "velocity ghost penalty")->capture_default_str();
    cmd->add_option("--gamma-q", gamma_q, "pressure ghost penalty")->capture_default_str();
    cmd->add_option("--gamma-p", gamma_p, "extra pressure gradient-jump penalty")->capture_default_str();
  }

  BenchmarkCase make_case() const {
    BenchmarkCase bench;
    bench.params.beta = beta;
    bench.params.gamma_v = gamma_v;
    bench.params.gamma_q = gamma_q;
    bench.params.gamma_p = gamma_p;
    return bench;
  }
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

void print_report(const ErrorReport& report) {
  std::cout << "correction " << (report.correction ? "ON" : "OFF") << '\n';
  std::cout << std::setw(6) << "n" << std::setw(12) << "h" << std::setw(10) << "dofs" << std::setw(14) << "e_u_L2"
            << std::setw(14) << "e_u_H1" << std::setw(14) << "e_p_L2" << std::setw(14) << "delta_h" << '\n';
  std::cout << std::scientific << std::setprecision(4);
  for (const auto& l : report.levels)
    std::cout << std::setw(6) << l.n << std::setw(12) << l.h << std::setw(10) << l.n_dofs << std::setw(14)
              << l.errors.e_u_L2 << std::setw(14) << l.errors.e_u_H1 << std::setw(14) << l.errors.e_p_L2
              << std::setw(14) << l.delta_h << '\n';
  std::cout << std::fixed << std::setprecision(3) << "rates: u_L2 " << report.rates.e_u_L2 << "  u_H1 "
            << report.rates.e_u_H1 << "  p_L2 " << report.rates.e_p_L2 << "  delta_h " << report.rates.delta_h
            << "\n\n";
  std::cout.unsetf(std::ios::floatfield);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cut finite element Stokes solver with boundary value correction"};
  app.set_config("--config", "", "INI/TOML file mirroring the command line flags");
  app.require_subcommand(1);

  // convergence
  auto* conv = app.add_subcommand("convergence", "refinement study with and without boundary correction");
  std::string case_name = "disc-poly";
  std::vector<int> levels{8, 16, 32, 64, 128};
  std::string correction = "both";
  std::string conv_out = "results";
  bool conv_cond = false;
  MethodFlags conv_method;
  conv->add_option("--case", case_name, "benchmark case")->check(CLI::IsMember({"disc-poly"}))->capture_default_str();
  conv->add_option("--levels", levels, "grid subdivisions per level")->delimiter(',')->capture_default_str();
  conv->add_option("--correction", correction, "boundary correction")
      ->check(CLI::IsMember({"on", "off", "both"}))
      ->capture_default_str();
  conv->add_option("--out", conv_out, "output directory")->capture_default_str();
  conv->add_flag("--cond", conv_cond, "also estimate the condition number per level");
  conv_method.add_to(conv);

  // sliding
  auto* slide = app.add_subcommand("sliding", "condition numbers while the disc slides across one cell");
  int slide_n = 32, slide_offsets = 16;
  std::string slide_out = "results";
  MethodFlags slide_method;
  slide->add_option("--n", slide_n, "grid subdivisions")->capture_default_str();
  slide->add_option("--offsets", slide_offsets, "number of offsets")->capture_default_str();
  slide->add_option("--out", slide_out, "output directory")->capture_default_str();
  slide_method.add_to(slide);

  // fields
  auto* fields = app.add_subcommand("fields", "write |u_h| and p_h as a legacy VTK file");
  int fields_n = 32;
  std::string fields_out = "fields.vtk";
  std::string fields_correction = "on";
  MethodFlags fields_method;
  fields->add_option("--n", fields_n, "grid subdivisions")->capture_default_str();
  fields->add_option("--out", fields_out, "output file")->capture_default_str();
  fields->add_option("--correction", fields_correction, "boundary correction")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  fields_method.add_to(fields);

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "dump the background mesh and its cut classification");
  int mesh_n = 16;
  std::string mesh_out = "mesh.txt";
  mesh_cmd->add_option("--n", mesh_n, "grid subdivisions")->capture_default_str();
  mesh_cmd->add_option("--out", mesh_out, "output file")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*conv) {
      const BenchmarkCase bench = conv_method.make_case();
      LevelOptions options;
      options.estimate_condition = conv_cond;
      std::vector<bool> modes;
      if (correction != "off") modes.push_back(true);
      if (correction != "on") modes.push_back(false);
      for (bool on : modes) {
        const ErrorReport report = run_convergence(bench, levels, on, options);
        print_report(report);
        auto os = open_output(fs::path(conv_out) / (on ? "convergence_on.csv" : "convergence_off.csv"));
        write_csv(os, report);
      }
    } else if (*slide) {
      BenchmarkCase bench = slide_method.make_case();
      for (bool stabilized : {true, false}) {
        if (!stabilized) bench.params.gamma_v = bench.params.gamma_q = 0;
        const auto entries = run_sliding_study(bench, slide_n, slide_offsets);
        double lo = std::numeric_limits<double>::infinity(), hi = 0;
        for (const auto& e : entries) {
          lo = std::min(lo, e.condition.condition);
          hi = std::max(hi, e.condition.condition);
        }
        std::cout << (stabilized ? "stabilized" : "unstabilized") << ": condition estimate min " << lo << " max "
                  << hi << " ratio " << hi / lo << '\n';
        auto os = open_output(fs::path(slide_out) /
                              (stabilized ? "sliding_stabilized.csv" : "sliding_unstabilized.csv"));
        write_sliding_csv(os, entries);
      }
    } else if (*fields) {
      BenchmarkCase bench = fields_method.make_case();
      bench.params.taylor_order = fields_correction == "on" ? bench.params.k : 0;
      LevelState state;
      const LevelResult result = run_level(bench, fields_n, {}, &state);
      auto os = open_output(fields_out);
      export_fields(os, state);
      std::cout << "wrote " << fields_out << " (e_u_L2 " << result.errors.e_u_L2 << ", e_p_L2 "
                << result.errors.e_p_L2 << ")\n";
    } else if (*mesh_cmd) {
      const BenchmarkCase bench;
      const auto mesh = build_structured_mesh(bench.background, mesh_n);
      const auto topo = build_cut_topology(mesh, bench.domain());
      auto os = open_output(mesh_out);
      write_mesh_dump(os, mesh, topo);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
