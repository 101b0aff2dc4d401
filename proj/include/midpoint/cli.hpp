#pragma once

#include "midpoint/schedule.hpp"
#include "midpoint/target.hpp"
#include "midpoint/work.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace midpoint::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kParseError = 2, kBlowUp = 3 };

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr const char* kCsvHeader = "metric,value,stderr,n,config_hash";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StudyConfig {
  std::vector<double> h_grid{0.1, 0.05, 0.025, 0.0125};
  double t_start = 1.0;
  double t_end = 0.5;
  Eigen::Index particles = 100000;
  // Picard study
  double t_n = 1.0;
  double window = 0.25;
  int midpoints = 32;
  int rounds = 0;  // 0: ceil(4 log R) + 4
};

struct RunConfig {
  nlohmann::json raw;
  std::optional<TargetModel> target;
  std::string algorithm = "seq";  // seq, parallel, logconcave, baseline-exp
  double eps = 0.5;
  double beta = 1.0;
  double eps_sc = 0.0;
  Eigen::Index batch = 10000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path out = ".";
  ScheduleConstants constants;
  StudyConfig study;
};

TargetModel parse_target(const nlohmann::json& spec);
/// Throws ConfigError on any schema violation.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical (sorted-key) JSON dump, as 16 hex digits.
/// "out" and "workers" are left out: they do not change the results.
std::string config_hash(const nlohmann::json& doc);

nlohmann::json to_json(const ScheduleConstants& c);
ScheduleConstants constants_from_json(const nlohmann::json& j, ScheduleConstants base = {});
nlohmann::json to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WorkReport& w);

Schedule build_schedule(const RunConfig& config);

/// Row-major little-endian float64, one particle (d values) per row.
void write_samples(const std::filesystem::path& path, const Batch& x);
Batch read_samples(const std::filesystem::path& path, int d);

int cmd_sample(const RunConfig& config);
int cmd_convergence_study(const RunConfig& config);
int cmd_picard_study(const RunConfig& config);
int cmd_verify(const RunConfig& config);

const char* version() noexcept;

}  // namespace midpoint::cli
