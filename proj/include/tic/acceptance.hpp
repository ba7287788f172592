#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tic/pde_solver.hpp"

namespace tic {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  std::vector<std::string> files;  ///< CSV outputs, relative to the output directory
};

struct AcceptanceOptions {
  std::filesystem::path out = "acceptance_out";
  std::uint64_t seed = 20240611;
  std::size_t paths = 100000;
  int steps_per_unit = 80;
  ExecPolicy policy = ExecPolicy::openmp;
  std::vector<int> only;  ///< empty: all criteria
};

/// Runs the acceptance criteria, printing one line per criterion to `log`.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream& log);

/// "criterion N [PASS|FAIL] name: detail (t s)"
std::string format_result(const CriterionResult& r);

}  // namespace tic
