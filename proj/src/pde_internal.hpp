#pragma once

#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "tic/pde_solver.hpp"

namespace tic::detail {

/// Rethrows `e` with the level time appended, keeping its kind.
[[noreturn]] void rethrow_at(const Error& e, double s);

void check_grid(const ControlProblemSpec& spec, const GridSpec& grid);
void check_strategy_nodes(const std::vector<double>& psi, const GridSpec& grid);

inline std::span<const double> row(const std::vector<double>& v, const GridSpec& g, int j) {
  return {v.data() + static_cast<std::size_t>(j) * g.nx, static_cast<std::size_t>(g.nx)};
}

/// Level-j data shared by every equation stepped from level j+1 to j.
struct LevelCoefficients {
  std::vector<double> a;      ///< a(s_j, x, Ψ_j)
  std::vector<double> drift;  ///< b(s_{j+1}, x, Ψ_{j+1})
  std::vector<double> sigma;  ///< σ(s_{j+1}, x, Ψ_{j+1})
  std::vector<double> u;      ///< Ψ_{j+1}
  std::vector<Vec> y;         ///< Θ(s_{j+1}, x)
  std::vector<Vec> z;         ///< Θ_x σ at s_{j+1}
};

LevelCoefficients level_coefficients(const ControlProblemSpec& spec, const GridSpec& grid,
                                     std::span<const double> psi_j, std::span<const double> psi_next,
                                     const FieldTheta& theta, int j);

/// Computes level j of Θ from level j+1 (writes into theta).
void theta_level(const ControlProblemSpec& spec, const GridSpec& grid, const LevelCoefficients& c,
                 FieldTheta& theta, int j, double lambda0);

/// Level j of one Θ⁰ anchor field from its level j+1 row. `y0` is the diagonal
/// value used in the y⁰-slot at level j+1.
std::vector<double> theta0_level(const ControlProblemSpec& spec, const GridSpec& grid,
                                 const LevelCoefficients& c, double t, double xt,
                                 std::span<const double> next, std::span<const double> y0, int j,
                                 double lambda0);

/// Runs body(0..n-1), in parallel when asked and available. The first
/// exception thrown by any iteration is rethrown after the loop.
template <class Body>
void for_each_index(std::size_t n, ExecPolicy policy, Body&& body, int chunk = 1) {
  std::exception_ptr first;
  std::mutex mu;
  const bool par = policy == ExecPolicy::openmp;
  const long nn = static_cast<long>(n);
#if defined(TIC_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic, chunk) if (par)
#endif
  for (long k = 0; k < nn; ++k) {
    try {
      body(static_cast<std::size_t>(k));
    } catch (...) {
      std::lock_guard lock(mu);
      if (!first) first = std::current_exception();
    }
  }
  (void)par;
  (void)chunk;
  if (first) std::rethrow_exception(first);
}

}  // namespace tic::detail
