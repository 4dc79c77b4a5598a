#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "afem/problems.hpp"

namespace afem {

// Command-line failure carrying the process exit status; requests for the
// usage text arrive with code 0.
struct UsageError : std::runtime_error {
  int code;
  UsageError(const std::string& message, int code_) : std::runtime_error(message), code(code_) {}
};

struct RunConfig {
  AdaptConfig adapt;
  std::string out_dir = "out";
  bool dump_meshes = false;
  unsigned long long seed = 0;  // consumed by the property-test harness only
};

// Parses the flag set --problem, --p, --theta, --beta-max, --clb-max,
// --algorithm, --max-dofs, --max-iters, --out, --dump-meshes, --seed, plus an
// optional config file given through --config; flags override file values.
// args excludes the program name. Throws UsageError on unknown flags or
// values rejected by AdaptConfig::validate; --help throws with code 0 and the
// usage text as the message.
RunConfig parse_config(const std::vector<std::string>& args);

// One row per adaptive iteration, '.' decimal, 17 significant digits,
// "nan" where a quantity is not defined for the run. beta1..beta3 count the
// marked vertices refined at each trial depth.
std::string records_csv(const std::vector<AdaptRecord>& records);

// Aggregates of a run: fitted rates of error and estimator vs DoFs, the
// largest recorded C_lb, the effectivity range, and the number of violations
// of the per-step contraction bound (zero on a correct run). Quantities a run
// does not define appear as null.
std::string summary_json(const AdaptConfig& config, const std::vector<AdaptRecord>& records);

// Runs the configured experiment and writes records.csv and summary.json
// (plus one mesh file per level when dump_meshes is set) into out_dir.
// Returns the iteration records. I/O failures throw with the path named.
std::vector<AdaptRecord> run_experiment(const RunConfig& config);

struct SweepRow {
  int n_elem = 0;
  int p = 0;
  int n_dofs = 0;
  double error = 0.0;
  double estimator = 0.0;
  double effectivity = 0.0;
};

// Solves and equilibrates on each fixed mesh for every degree in
// [p_min, p_max]. The effectivity is estimator/error, reported as nan when
// the problem carries no exact solution or reproduces it to roundoff.
// Degrees beyond the basis limit throw std::invalid_argument naming it.
std::vector<SweepRow> effectivity_sweep(const Problem& problem, const std::vector<Mesh>& meshes,
                                        int p_min, int p_max);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace afem
