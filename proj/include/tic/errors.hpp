#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tic {

enum class ErrorKind {
  evaluation,
  domain,
  degeneracy,
  numeric,
  blow_up,
  singular,
  positivity,
  y_range,
  upper_triangle,
  unsupported,
  config,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every solver failure is reported through this type; `where()` carries the
/// time (or node) at which the failure was detected when that is meaningful.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what,
        double where = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(what), kind_(kind), where_(where) {}

  ErrorKind kind() const noexcept { return kind_; }
  double where() const noexcept { return where_; }

 private:
  ErrorKind kind_;
  double where_;
};

inline void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw Error(ErrorKind::evaluation, std::string("non-finite value of ") + name);
}

}  // namespace tic
