// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <CLI11.hpp>

#include <iostream>

#include "tic/acceptance.hpp"

int main(int argc, char** argv) {
  tic::AcceptanceOptions opt;
  std::string out = opt.out.string();
  bool serial = false;
  CLI::App app{"acceptance suite"};
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", opt.seed, "base seed");
  app.add_option("--paths", opt.paths, "Monte Carlo paths");
  app.add_option("--only", opt.only, "criteria to run")->delimiter(',');
  app.add_flag("--serial", serial, "disable OpenMP kernels");
  CLI11_PARSE(app, argc, argv);
  opt.out = out;
  if (serial) opt.policy = tic::ExecPolicy::serial;
  const auto res = tic::run_acceptance(opt, std::cout);
  int failed = 0;
  for (const auto& r : res) failed += r.pass ? 0 : 1;
  std::cout << res.size() - failed << "/" << res.size() << " criteria passed\n";
  return failed ? 1 : 0;
}
