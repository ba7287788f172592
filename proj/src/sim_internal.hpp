#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tic/simulate.hpp"

namespace tic::detail {

/// splitmix64 of seed and stream id; used to give each consumer its own stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct G0Dependence {
  bool y = false, z = false, y0 = false, z0 = false;
};
/// Spot-checks which slots g⁰ reads.
G0Dependence g0_dependence(const ControlProblemSpec& spec, double t, double x);

struct Segment {
  double a = 0.0, b = 0.0;
  std::function<double(double s, double x)> law;
};

CostEstimate deterministic_cost(const ControlProblemSpec& spec, const std::vector<Segment>& segs,
                                double t, double x, const CostOptions& opt);

struct Prepared {
  double rate = 0.0;  ///< g = g(s,x,u,0,0) + rate·y
  bool g0_uses_y = false;
  std::function<double(double s, double x)> theta;
};
Prepared prepare_mc(const ControlProblemSpec& spec, double t, double x, const CostOptions& opt);

/// Ψ outside global steps [k_begin, k_end), the constant u inside.
struct Law {
  const StrategyTable* psi = nullptr;
  int k_begin = -1, k_end = -1;
  double u = 0.0;
};

struct LockstepOut {
  int K = 0;
  std::size_t n_paths = 0;
  std::vector<double> xT, H, G0;  ///< path-major, K per path
};

/// All laws driven by the same normals, path by path.
LockstepOut lockstep(const ControlProblemSpec& spec, const std::vector<Law>& laws, double t, double x,
                     const MCConfig& cfg, const Prepared& prep, std::uint64_t seed);

std::vector<double> influence(const ControlProblemSpec& spec, const LockstepOut& o, int q, double t,
                              double x, const MCConfig& cfg, const std::optional<double>& y_fixed,
                              double& j_mean, double& y_mean, double& y_se);

double std_error(const std::vector<double>& v);

}  // namespace tic::detail
