#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "afem/runner.hpp"

namespace {

// afem_cli sweep [--problem ..] [--p-min ..] [--p-max ..] [--out ..]
// Effectivity per polynomial degree on two fixed meshes (one and three
// uniform bisection rounds of the initial mesh, 12 and 48 triangles for the
// L-shape), written to <out>/sweep.csv.
int run_sweep(const std::vector<std::string>& args) {
  std::string problem = "lshape";
  std::string out_dir = "out";
  int p_min = 1, p_max = afem::kMaxDegree;
  CLI::App app{"Effectivity sweep over polynomial degrees on fixed meshes"};
  app.add_option("--problem", problem, "lshape, square, cross, or square-proj")
      ->capture_default_str();
  app.add_option("--p-min", p_min, "first degree")->capture_default_str();
  app.add_option("--p-max", p_max, "last degree")->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::Success&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return std::max(e.get_exit_code(), 1);
  }
  afem::Problem prob = afem::make_problem(problem, p_min);
  std::vector<afem::Mesh> meshes;
  meshes.push_back(afem::uniform_refine(prob.initial, 1));
  meshes.push_back(afem::uniform_refine(prob.initial, 3));
  std::vector<afem::SweepRow> rows = afem::effectivity_sweep(prob, meshes, p_min, p_max);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create '" << out_dir << "': " << ec.message() << "\n";
    return 1;
  }
  std::ofstream out(out_dir + "/sweep.csv", std::ios::binary);
  out << afem::sweep_csv(rows);
  if (!out.flush()) {
    std::cerr << "error: write to '" << out_dir << "/sweep.csv' failed\n";
    return 1;
  }
  for (const afem::SweepRow& r : rows)
    std::printf("n_elem %5d  p %d  dofs %6d  error %.6e  estimator %.6e  effectivity %.4f\n",
                r.n_elem, r.p, r.n_dofs, r.error, r.estimator, r.effectivity);
  std::printf("wrote %s/sweep.csv\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && args.front() == "sweep")
    return run_sweep({args.begin() + 1, args.end()});
  try {
    afem::RunConfig cfg = afem::parse_config(args);
    std::vector<afem::AdaptRecord> records = afem::run_experiment(cfg);
    for (const afem::AdaptRecord& r : records)
      std::printf("level %3d  elems %7d  dofs %7d  error %.6e  estimator %.6e  marked %6d\n",
                  r.level, r.n_elem, r.n_dofs, r.error, r.eta_elem_total, r.marked);
    std::printf("wrote %s/records.csv and %s/summary.json\n", cfg.out_dir.c_str(),
                cfg.out_dir.c_str());
    return 0;
  } catch (const afem::UsageError& e) {
    (e.code == 0 ? std::cout : std::cerr) << e.what() << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
