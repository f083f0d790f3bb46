#pragma once

// Scenario configuration, run orchestration and deterministic text output.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "quadnls/dichotomy.hpp"
#include "quadnls/groundstate.hpp"
#include "quadnls/propagator.hpp"

namespace quadnls::lab {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kGroundStateFormat = 1;

using json = nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GridSpec {
  std::string kind = "radial";  // radial | cartesian
  int num_points = 4096;
  double outer_radius = 200.0;
  int dim = 1;
  int points_per_axis = 64;
  double box_length = 40.0;
};

struct InitialSpec {
  std::string kind = "ground_state_scaled";  // ground_state_scaled | gaussian_triple | boosted
  double c = 0.5;
  std::array<double, 3> amplitudes{1.0, 1.0, 1.0};
  double width = 1.0;
  std::array<double, 3> phases{0.0, 0.0, 0.0};
  std::vector<double> xi;
  /// Datum that `boosted` is applied to; holds exactly one entry for that kind.
  std::vector<InitialSpec> inner;
};

struct SchemeSpec {
  std::string method;  // empty: chosen from the grid kind
  double dt = 0.0;     // 0: automatic
  int substep_order = 4;
  double growth_factor = 1e3;
  double dt_floor = 0.0;
  bool nonlinear = true;
};

struct MonitorSpec {
  /// Threshold classification (radial grids only).
  bool classify = true;
  bool truncated_weight = true;
  double final_window = 0.25;
  double cauchy_tolerance = 0.01;
  double truncation_factor = 3.0;
  double data_radius_level = 1e-3;
};

struct GroundStateSpec {
  std::string method = "closed_form";  // closed_form | minimize
  double seed_width = 3.0;
  int max_iterations = 5000;
  double tolerance = 1e-7;
};

struct ScenarioConfig {
  std::array<double, 3> kappa{2.0, 2.0, 1.0};
  GridSpec grid;
  InitialSpec initial;
  SchemeSpec scheme;
  double horizon = 1.0;
  MonitorSpec monitors;
  GroundStateSpec groundstate;
  std::string output_dir = "out";
  int record_stride = 1;
  std::uint64_t rng_seed = 1;
  std::vector<double> sweep_c{0.3, 0.5, 0.7, 1.1, 1.3};
};

ScenarioConfig config_from_json(const json& j);
json config_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_config(const std::filesystem::path& path);
/// Canonical serialization: sorted keys, shortest round-trip doubles.
std::string canonical_dump(const ScenarioConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
std::string config_hash(const ScenarioConfig& cfg);
/// Hash of the grid parameters and every node coordinate.
std::string grid_checksum(const Grid& g);

Grid build_grid(const ScenarioConfig& cfg);
KappaTriple build_kappa(const ScenarioConfig& cfg);
/// `gs` is required for ground_state_scaled data.
ComplexField3 build_initial(const InitialSpec& spec, const Grid& g, const KappaTriple& k,
                            const GroundState* gs);
StepScheme build_scheme(const ScenarioConfig& cfg, const ComplexField3& u0, const KappaTriple& k);
ClassifyOptions build_classify_options(const ScenarioConfig& cfg);

/// Writes to `path` and registers the file with the session that owns it.
class OutputSession {
 public:
  explicit OutputSession(std::filesystem::path dir);
  ~OutputSession();
  OutputSession(const OutputSession&) = delete;
  OutputSession& operator=(const OutputSession&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path write(const std::string& name, const std::string& content);
  const std::vector<std::string>& files() const { return files_; }
  /// Keeps the output; without it the destructor removes every file written.
  void commit() { committed_ = true; }

 private:
  std::filesystem::path dir_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<std::string> files_;
  std::vector<std::filesystem::path> created_dirs_;
};

struct RunManifest {
  std::string config_hash;
  std::string version = kVersion;
  std::string grid_checksum;
  std::vector<std::string> files;
  double wall_clock_seconds = 0.0;
  long steps = 0;
  std::string halt;
};

json manifest_to_json(const RunManifest& m);

/// Series CSV: one row per ObservableRecord, 17 significant digits.
std::string series_csv(const Trajectory& traj, const KappaTriple& k, const std::string& hash);
json report_to_json(const ThresholdReport& rep, const std::string& hash);

std::string ground_state_record(const GroundState& gs);
GroundState parse_ground_state_record(const std::string& text);
GroundState read_ground_state(const std::filesystem::path& path);
std::string ground_state_summary(const GroundState& gs, const Certificate& cert);

struct CommandResult {
  int exit_code = 0;
  std::vector<std::string> files;
  std::string summary;
};

CommandResult cmd_groundstate(const ScenarioConfig& cfg);
CommandResult cmd_evolve(const ScenarioConfig& cfg);
CommandResult cmd_sweep(const ScenarioConfig& cfg);

/// Smooth complex triple made of modulated Gaussian bumps well inside the box.
/// Widths and wavenumbers scale with the grid so the spectrum, including
/// boosts up to random_boost's range, stays far below the Nyquist frequency.
ComplexField3 random_localized_field(const CartesianGrid& g, std::mt19937_64& rng);
/// Resonant triple with k1, k2 uniform in [0.5, 2].
KappaTriple random_resonant_kappa(std::mt19937_64& rng);
/// Boost with |xi_a| / k_3 at most 0.08 pi / h on each axis.
std::vector<double> random_boost(const CartesianGrid& g, const KappaTriple& k, std::mt19937_64& rng);

struct CheckItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Property suite on cfg's Cartesian sizes (a 64-point line when the grid is radial).
std::vector<CheckItem> run_checks(const ScenarioConfig& cfg);
CommandResult cmd_check(const ScenarioConfig& cfg);

}  // namespace quadnls::lab
