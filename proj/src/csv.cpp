#include <cstdio>
#include <fstream>

#include "tic/io.hpp"

namespace tic {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), width_(header.size()) {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k) buf_ += ',';
    buf_ += header[k];
  }
  buf_ += '\n';
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != width_) throw Error(ErrorKind::numeric, "csv row width mismatch in " + path_.string());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) buf_ += ',';
    buf_ += fmt17(values[k]);
  }
  buf_ += '\n';
}

void CsvWriter::close() {
  if (closed_) return;
  closed_ = true;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream f(path_, std::ios::binary);
  if (!f) throw Error(ErrorKind::config, "cannot write " + path_.string());
  f << buf_;
  if (!f) throw Error(ErrorKind::config, "write failed: " + path_.string());
}

void write_lq_csv(const std::filesystem::path& p, const RiccatiTrajectory& tr) {
  CsvWriter w(p, {"t", "phi1", "phi2", "phi3", "phi4", "phi5", "phi6", "phi7", "psi", "v"});
  for (std::size_t n = 0; n < tr.t.size(); ++n)
    w.row({tr.t[n], tr.phi[0][n], tr.phi[1][n], tr.phi[2][n], tr.phi[3][n], tr.phi[4][n], tr.phi[5][n],
           tr.phi[6][n], tr.psi[n], tr.v[n]});
  w.close();
}

void write_planner_csv(const std::filesystem::path& p, const PlannerSolution& sol) {
  CsvWriter w(p, {"t", "theta1", "theta2", "consumption_coeff"});
  for (std::size_t n = 0; n < sol.t.size(); ++n) w.row({sol.t[n], sol.theta1[n], sol.theta2[n], sol.consumption[n]});
  w.close();
}

void write_theta_csv(const std::filesystem::path& p, const FieldTheta& th) {
  std::vector<std::string> h{"s", "x"};
  for (int c = 0; c < th.m; ++c) h.push_back("theta_" + std::to_string(c + 1));
  CsvWriter w(p, h);
  for (int j = 0; j < th.grid.nt; ++j)
    for (int i = 0; i < th.grid.nx; ++i) {
      std::vector<double> r{th.grid.s(j), th.grid.x(i)};
      for (int c = 0; c < th.m; ++c) r.push_back(th.value(c, j, i));
      w.row(r);
    }
  w.close();
}

void write_theta0_csv(const std::filesystem::path& p, const FieldTheta0& th0, const FieldTheta& th) {
  CsvWriter w(p, {"t", "s", "xtilde", "x", "y", "theta0"});
  const auto& g = th0.grid();
  for (int fk = 0; fk < th0.n_time_anchors(); ++fk)
    for (int fl = 0; fl < th0.n_state_anchors(); ++fl)
      for (int r = 0; r < th0.n_y(); ++r)
        for (int j = th0.start_level(fk); j < g.nt; ++j)
          for (int i = 0; i < g.nx; ++i) {
            const double t = th0.time_anchored() ? g.s(fk) : 0.0;
            const double xt = th0.state_anchored() ? g.x(fl) : 0.0;
            const int k = th0.time_anchored() ? fk : j;
            if (th0.separable()) {
              const Vec y = th.values(j, i);
              w.row({t, g.s(j), xt, g.x(i), y[0], th0.value(k, fl, j, i, y)});
            } else {
              w.row({t, g.s(j), xt, g.x(i), th0.y_nodes()[r], th0.raw(k, fl, r, j, i)});
            }
          }
  w.close();
}

void write_strategy_csv(const std::filesystem::path& p, const GridSpec& g, const std::vector<double>& psi) {
  CsvWriter w(p, {"s", "x", "psi"});
  for (int j = 0; j < g.nt; ++j)
    for (int i = 0; i < g.nx; ++i) w.row({g.s(j), g.x(i), psi[static_cast<std::size_t>(j) * g.nx + i]});
  w.close();
}

void write_iteration_csv(const std::filesystem::path& p, const std::vector<IterationRecord>& log) {
  CsvWriter w(p, {"iter", "residual_D", "residual_Dx", "residual_Dy", "residual_psi"});
  for (const auto& r : log)
    w.row({static_cast<double>(r.iter), r.residual_d, r.residual_dx, r.residual_dy, r.residual_psi});
  w.close();
}

void write_verify_csv(const std::filesystem::path& p, const std::vector<QuotientRow>& rows) {
  CsvWriter w(p, {"t", "eps", "u", "quotient", "stderr"});
  for (const auto& r : rows) w.row({r.t, r.eps, r.u, r.quotient, r.se});
  w.close();
}

void write_gap_csv(const std::filesystem::path& p, const std::vector<GapRow>& rows) {
  CsvWriter w(p, {"tau", "gap"});
  for (const auto& r : rows) w.row({r.tau, r.gap});
  w.close();
}

}  // namespace tic
