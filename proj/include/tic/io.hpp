#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tic/ode_riccati.hpp"
#include "tic/pde_solver.hpp"
#include "tic/simulate.hpp"

namespace tic {

/// %.17g; round-trips every double.
std::string fmt17(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values);
  /// Writes the buffered rows; the destructor calls it if needed.
  void close();

 private:
  std::filesystem::path path_;
  std::string buf_;
  std::size_t width_;
  bool closed_ = false;
};

void write_lq_csv(const std::filesystem::path& p, const RiccatiTrajectory& tr);
void write_planner_csv(const std::filesystem::path& p, const PlannerSolution& sol);
void write_theta_csv(const std::filesystem::path& p, const FieldTheta& th);
/// One row per stored anchor field sample; collapsed anchor coordinates print as 0,
/// separable fields print the full value at the node y = Θ(s, x).
void write_theta0_csv(const std::filesystem::path& p, const FieldTheta0& th0, const FieldTheta& th);
void write_strategy_csv(const std::filesystem::path& p, const GridSpec& g, const std::vector<double>& psi);
void write_iteration_csv(const std::filesystem::path& p, const std::vector<IterationRecord>& log);
void write_verify_csv(const std::filesystem::path& p, const std::vector<QuotientRow>& rows);
void write_gap_csv(const std::filesystem::path& p, const std::vector<GapRow>& rows);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& p);

/// manifest.json: subcommand, argv, config, seed, version, and hashes of `files`
/// (paths relative to `dir`).
void write_manifest(const std::filesystem::path& dir, const std::string& subcommand,
                    const std::vector<std::string>& args, const nlohmann::json& config,
                    std::uint64_t seed, const std::vector<std::string>& files);

const char* library_version() noexcept;

}  // namespace tic
