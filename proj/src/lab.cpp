#include "quadnls/lab.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace quadnls::lab {

namespace fs = std::filesystem;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

InitialSpec initial_from_json(const json& j, const std::string& where) {
  check_keys(j, {"kind", "c", "amplitudes", "width", "phases", "xi", "inner"}, where);
  InitialSpec s;
  read(j, "kind", s.kind, where);
  read(j, "c", s.c, where);
  read(j, "amplitudes", s.amplitudes, where);
  read(j, "width", s.width, where);
  read(j, "phases", s.phases, where);
  read(j, "xi", s.xi, where);
  if (j.contains("inner") && !j.at("inner").is_null())
    s.inner.push_back(initial_from_json(j.at("inner"), where + ".inner"));
  if (s.kind != "ground_state_scaled" && s.kind != "gaussian_triple" && s.kind != "boosted")
    throw ConfigError(where + ".kind must be ground_state_scaled, gaussian_triple or boosted");
  if (s.kind == "boosted" && s.inner.size() != 1)
    throw ConfigError(where + ": boosted data needs an inner datum");
  if (s.kind == "gaussian_triple" && !(s.width > 0.0))
    throw ConfigError(where + ".width must be positive");
  return s;
}

json initial_to_json(const InitialSpec& s) {
  json j = {{"kind", s.kind},         {"c", s.c},   {"amplitudes", s.amplitudes},
            {"width", s.width},       {"phases", s.phases}, {"xi", s.xi},
            {"inner", nullptr}};
  if (!s.inner.empty()) j["inner"] = initial_to_json(s.inner.front());
  return j;
}

std::string fmt17(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ScenarioConfig config_from_json(const json& j) {
  check_keys(j, {"kappa", "grid", "initial_data", "scheme", "horizon", "monitors", "groundstate",
                 "output_dir", "record_stride", "rng_seed", "sweep"},
             "config");
  ScenarioConfig c;
  read(j, "kappa", c.kappa, "config");
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, {"kind", "num_points", "outer_radius", "dim", "points_per_axis", "box_length"},
               "grid");
    read(g, "kind", c.grid.kind, "grid");
    read(g, "num_points", c.grid.num_points, "grid");
    read(g, "outer_radius", c.grid.outer_radius, "grid");
    read(g, "dim", c.grid.dim, "grid");
    read(g, "points_per_axis", c.grid.points_per_axis, "grid");
    read(g, "box_length", c.grid.box_length, "grid");
    if (c.grid.kind != "radial" && c.grid.kind != "cartesian")
      throw ConfigError("grid.kind must be radial or cartesian");
  }
  if (j.contains("initial_data")) c.initial = initial_from_json(j.at("initial_data"), "initial_data");
  if (j.contains("scheme")) {
    const json& s = j.at("scheme");
    check_keys(s, {"method", "dt", "substep_order", "growth_factor", "dt_floor", "nonlinear"},
               "scheme");
    read(s, "method", c.scheme.method, "scheme");
    read(s, "dt", c.scheme.dt, "scheme");
    read(s, "substep_order", c.scheme.substep_order, "scheme");
    read(s, "growth_factor", c.scheme.growth_factor, "scheme");
    read(s, "dt_floor", c.scheme.dt_floor, "scheme");
    read(s, "nonlinear", c.scheme.nonlinear, "scheme");
    if (!c.scheme.method.empty()) step_method_from_string(c.scheme.method);
    if (c.scheme.dt < 0.0) throw ConfigError("scheme.dt must be >= 0");
    if (c.scheme.substep_order != 2 && c.scheme.substep_order != 4)
      throw ConfigError("scheme.substep_order must be 2 or 4");
  }
  read(j, "horizon", c.horizon, "config");
  if (!(c.horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (j.contains("monitors")) {
    const json& m = j.at("monitors");
    check_keys(m, {"classify", "truncated_weight", "final_window", "cauchy_tolerance",
                   "truncation_factor", "data_radius_level"},
               "monitors");
    read(m, "classify", c.monitors.classify, "monitors");
    read(m, "truncated_weight", c.monitors.truncated_weight, "monitors");
    read(m, "final_window", c.monitors.final_window, "monitors");
    read(m, "cauchy_tolerance", c.monitors.cauchy_tolerance, "monitors");
    read(m, "truncation_factor", c.monitors.truncation_factor, "monitors");
    read(m, "data_radius_level", c.monitors.data_radius_level, "monitors");
  }
  if (j.contains("groundstate")) {
    const json& g = j.at("groundstate");
    check_keys(g, {"method", "seed_width", "max_iterations", "tolerance"}, "groundstate");
    read(g, "method", c.groundstate.method, "groundstate");
    read(g, "seed_width", c.groundstate.seed_width, "groundstate");
    read(g, "max_iterations", c.groundstate.max_iterations, "groundstate");
    read(g, "tolerance", c.groundstate.tolerance, "groundstate");
    if (c.groundstate.method != "closed_form" && c.groundstate.method != "minimize")
      throw ConfigError("groundstate.method must be closed_form or minimize");
  }
  read(j, "output_dir", c.output_dir, "config");
  read(j, "record_stride", c.record_stride, "config");
  if (c.record_stride < 1) throw ConfigError("record_stride must be >= 1");
  read(j, "rng_seed", c.rng_seed, "config");
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, {"c_values"}, "sweep");
    read(s, "c_values", c.sweep_c, "sweep");
  }
  return c;
}

json config_to_json(const ScenarioConfig& c) {
  return {
      {"kappa", c.kappa},
      {"grid",
       {{"kind", c.grid.kind},
        {"num_points", c.grid.num_points},
        {"outer_radius", c.grid.outer_radius},
        {"dim", c.grid.dim},
        {"points_per_axis", c.grid.points_per_axis},
        {"box_length", c.grid.box_length}}},
      {"initial_data", initial_to_json(c.initial)},
      {"scheme",
       {{"method", c.scheme.method},
        {"dt", c.scheme.dt},
        {"substep_order", c.scheme.substep_order},
        {"growth_factor", c.scheme.growth_factor},
        {"dt_floor", c.scheme.dt_floor},
        {"nonlinear", c.scheme.nonlinear}}},
      {"horizon", c.horizon},
      {"monitors",
       {{"classify", c.monitors.classify},
        {"truncated_weight", c.monitors.truncated_weight},
        {"final_window", c.monitors.final_window},
        {"cauchy_tolerance", c.monitors.cauchy_tolerance},
        {"truncation_factor", c.monitors.truncation_factor},
        {"data_radius_level", c.monitors.data_radius_level}}},
      {"groundstate",
       {{"method", c.groundstate.method},
        {"seed_width", c.groundstate.seed_width},
        {"max_iterations", c.groundstate.max_iterations},
        {"tolerance", c.groundstate.tolerance}}},
      {"output_dir", c.output_dir},
      {"record_stride", c.record_stride},
      {"rng_seed", c.rng_seed},
      {"sweep", {{"c_values", c.sweep_c}}},
  };
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string canonical_dump(const ScenarioConfig& cfg) { return config_to_json(cfg).dump(); }

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// The output directory names where a run lands, not what it computes.
std::string config_hash(const ScenarioConfig& cfg) {
  ScenarioConfig c = cfg;
  c.output_dir.clear();
  return hex64(fnv1a64(canonical_dump(c)));
}

std::string grid_checksum(const Grid& g) {
  std::uint64_t h = fnv1a64(describe(g));
  const auto r2 = radius_squared(g);
  h = fnv1a64(std::string_view(reinterpret_cast<const char*>(r2.data()), r2.size() * sizeof(double)), h);
  if (is_radial(g)) {
    const auto vol = std::get<RadialGrid6>(g).volumes();
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(vol.data()), vol.size() * sizeof(double)), h);
  }
  return hex64(h);
}

Grid build_grid(const ScenarioConfig& cfg) {
  if (cfg.grid.kind == "radial") return make_radial_grid(cfg.grid.num_points, cfg.grid.outer_radius);
  return make_cartesian_grid(cfg.grid.dim, cfg.grid.points_per_axis, cfg.grid.box_length);
}

KappaTriple build_kappa(const ScenarioConfig& cfg) {
  return validate_kappa(cfg.kappa[0], cfg.kappa[1], cfg.kappa[2]);
}

ComplexField3 build_initial(const InitialSpec& spec, const Grid& g, const KappaTriple& k,
                            const GroundState* gs) {
  if (spec.kind == "ground_state_scaled") {
    if (!gs) throw ConfigError("ground_state_scaled data needs a ground state");
    if (!same_grid(g, gs->W.grid())) throw ConfigError("ground state lives on a different grid");
    return gs->W.scaled(spec.c);
  }
  if (spec.kind == "gaussian_triple") return make_gaussian_triple(g, spec.amplitudes, spec.width, spec.phases);
  if (is_radial(g)) throw ConfigError("boosted data needs a Cartesian grid");
  const auto& cg = std::get<CartesianGrid>(g);
  if (static_cast<int>(spec.xi.size()) != cg.dim) throw ConfigError("boost xi must have one entry per axis");
  return galilean_boost(build_initial(spec.inner.front(), g, k, gs), spec.xi, 0.0, k);
}

StepScheme build_scheme(const ScenarioConfig& cfg, const ComplexField3& u0, const KappaTriple& k) {
  StepScheme s;
  const bool radial = u0.radial();
  s.method = cfg.scheme.method.empty()
                 ? (radial ? StepMethod::radial_imex : StepMethod::strang_spectral)
                 : step_method_from_string(cfg.scheme.method);
  if (radial != (s.method == StepMethod::radial_imex))
    throw ConfigError("scheme " + to_string(s.method) + " does not match grid " + describe(u0.grid()));
  s.dt = cfg.scheme.dt;
  if (s.dt == 0.0) {
    // Explicit radial part: 0.1 dr^2 / max k. The spectral linear flow is exact,
    // so the Cartesian step only has to resolve the nonlinear time 1/max|u|.
    s.dt = radial ? default_radial_dt(u0.radial_grid(), k)
                  : 0.01 / std::max(1.0, sup_norm(u0));
  }
  s.substep_order = cfg.scheme.substep_order;
  s.growth_factor = cfg.scheme.growth_factor;
  s.dt_floor = cfg.scheme.dt_floor;
  s.nonlinear = cfg.scheme.nonlinear;
  s.record_stride = cfg.record_stride;
  return s;
}

ClassifyOptions build_classify_options(const ScenarioConfig& cfg) {
  ClassifyOptions o;
  o.final_window = cfg.monitors.final_window;
  o.cauchy_tolerance = cfg.monitors.cauchy_tolerance;
  o.truncation_factor = cfg.monitors.truncation_factor;
  o.data_radius_level = cfg.monitors.data_radius_level;
  return o;
}

OutputSession::OutputSession(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::exists(dir_)) {
    fs::create_directories(dir_);
    created_dir_ = true;
  } else if (!fs::is_directory(dir_)) {
    throw std::runtime_error(dir_.string() + " exists and is not a directory");
  }
}

OutputSession::~OutputSession() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& f : files_) fs::remove(dir_ / f, ec);
  for (auto it = created_dirs_.rbegin(); it != created_dirs_.rend(); ++it)
    if (fs::is_empty(*it, ec)) fs::remove(*it, ec);
  if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
}

fs::path OutputSession::write(const std::string& name, const std::string& content) {
  const fs::path p = dir_ / name;
  // Record every missing parent, outermost first, so the destructor can unwind them.
  std::vector<fs::path> missing;
  for (fs::path q = p.parent_path(); q != dir_ && !fs::exists(q); q = q.parent_path())
    missing.push_back(q);
  for (auto it = missing.rbegin(); it != missing.rend(); ++it) {
    fs::create_directory(*it);
    created_dirs_.push_back(*it);
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  files_.push_back(name);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + p.string());
  return p;
}

json manifest_to_json(const RunManifest& m) {
  return {{"config_hash", m.config_hash}, {"version", m.version},
          {"grid_checksum", m.grid_checksum}, {"files", m.files},
          {"wall_clock_seconds", m.wall_clock_seconds}, {"steps", m.steps},
          {"halt", m.halt}};
}

std::string series_csv(const Trajectory& traj, const KappaTriple& k, const std::string& hash) {
  std::vector<double> v1(traj.records.size());
  for (std::size_t n = 0; n < v1.size(); ++n) v1[n] = traj.records[n].virial_v1;
  std::map<std::size_t, double> fd;
  {
    const auto series = virial_fd_series(traj, v1, k);
    std::size_t n = 0;
    for (const auto& s : series) {
      while (n < traj.records.size() && traj.records[n].t != s.t) ++n;
      if (n < traj.records.size()) fd[n] = s.v1_dd;
    }
  }
  const bool extra = !traj.extra_v1.empty();
  std::ostringstream os;
  os << "# quadnls series version=" << kVersion << " config_hash=" << hash << " dt=" << fmt17(traj.dt)
     << "\n";
  os << "t,M,Lambda,K,V,E,P1,P2,P3,sup_norm,l3,S_accum,V1,V1_dd_fd,virial_rhs";
  if (extra) os << ",V1_truncated,tail_truncated";
  os << "\n";
  const double kkk = 8.0 * k.product();
  for (std::size_t n = 0; n < traj.records.size(); ++n) {
    const auto& r = traj.records[n];
    os << fmt17(r.t) << ',' << fmt17(r.mass) << ',' << fmt17(r.lambda_inv) << ',' << fmt17(r.kinetic)
       << ',' << fmt17(r.potential) << ',' << fmt17(r.energy) << ',' << fmt17(r.momentum[0]) << ','
       << fmt17(r.momentum[1]) << ',' << fmt17(r.momentum[2]) << ',' << fmt17(r.sup_norm) << ','
       << fmt17(r.l3_norm) << ',' << fmt17(traj.scattering[n]) << ',' << fmt17(r.virial_v1) << ',';
    if (auto it = fd.find(n); it != fd.end()) os << fmt17(it->second);
    os << ',' << fmt17(kkk * (2.0 * r.kinetic - 3.0 * r.potential));
    if (extra) os << ',' << fmt17(traj.extra_v1[0][n]) << ',' << fmt17(traj.extra_tail[0][n]);
    os << "\n";
  }
  return os.str();
}

namespace {

json band_json(const CoercivityBand& b) {
  return {{"rho", b.rho},
          {"rho_prime", b.rho_prime},
          {"rho_double_prime", b.rho_double_prime},
          {"rho_tilde_prime", b.rho_tilde_prime},
          {"rho_tilde_double_prime", b.rho_tilde_double_prime},
          {"valid", b.valid}};
}

json blowup_json(const BlowupResult& b) {
  json series = json::array();
  for (const auto& s : b.series)
    series.push_back({{"t", s.t}, {"v1", s.v1}, {"v1_dd_fd", s.v1_dd}, {"virial_rhs", s.rhs}});
  return {{"pass", b.pass},
          {"violations", b.violations},
          {"weight", b.weight == WeightKind::quadratic ? "quadratic" : "truncated"},
          {"tail_allowance", b.tail_allowance},
          {"bound", b.bound},
          {"kinetic_lower_bound_held", b.kinetic_lower_bound_held},
          {"series", series}};
}

}  // namespace

json report_to_json(const ThresholdReport& rep, const std::string& hash) {
  json j;
  j["config_hash"] = hash;
  j["version"] = kVersion;
  j["amplitude"] = rep.amplitude ? json(*rep.amplitude) : json(nullptr);
  j["e0"] = rep.e0;
  j["k0"] = rep.k0;
  j["v0"] = rep.v0;
  j["e_ratio"] = finite_or_null(rep.e_ratio);
  j["k_ratio"] = finite_or_null(rep.k_ratio);
  j["below_threshold"] = rep.below_threshold;
  j["above_threshold"] = rep.above_threshold;
  j["resonant"] = rep.resonant;
  j["verdict"] = to_string(rep.verdict);
  j["verdict_reason"] = rep.verdict_reason;
  j["band"] = band_json(rep.band);
  j["halt"] = to_string(rep.halt);
  j["halt_detail"] = rep.halt_detail;
  j["t_end"] = rep.t_end;
  j["steps"] = rep.steps;
  j["scattering_final"] = rep.scattering_final;
  j["scattering_window_growth"] = rep.scattering_window_growth;
  j["sup_monotone_final"] = rep.sup_monotone_final;
  j["data_radius"] = rep.data_radius;
  j["truncation_radius"] = rep.truncation_radius;
  j["variance_outer_fraction"] = rep.variance_outer_fraction;
  if (rep.trapping) {
    json series = json::array();
    for (const auto& s : rep.trapping->series)
      series.push_back({{"t", s.t}, {"k_ratio", s.k_ratio}, {"coercivity", s.coercivity},
                        {"energy", s.energy}, {"lower", s.lower}, {"upper", s.upper}});
    j["trapping"] = {{"pass", rep.trapping->pass},
                     {"violations", rep.trapping->violations},
                     {"first_violation_t", rep.trapping->first_violation_t},
                     {"series", series}};
  } else {
    j["trapping"] = nullptr;
  }
  j["blowup_quadratic"] = rep.blowup_quadratic ? blowup_json(*rep.blowup_quadratic) : json(nullptr);
  j["blowup_truncated"] = rep.blowup_truncated ? blowup_json(*rep.blowup_truncated) : json(nullptr);
  return j;
}

std::string ground_state_record(const GroundState& gs) {
  std::ostringstream os;
  os << "quadnls-groundstate " << kGroundStateFormat << "\n";
  os << "grid radial6 " << gs.grid.num_points() << ' ' << fmt17(gs.grid.outer_radius()) << "\n";
  os << "kappa " << fmt17(gs.kappa.kappa1) << ' ' << fmt17(gs.kappa.kappa2) << ' '
     << fmt17(gs.kappa.kappa3) << "\n";
  os << "K_W " << fmt17(gs.K_W) << "\n";
  os << "V_W " << fmt17(gs.V_W) << "\n";
  os << "E_W " << fmt17(gs.E_W) << "\n";
  os << "C_GN " << fmt17(gs.C_GN) << "\n";
  os << "J " << fmt17(gs.J) << "\n";
  os << "residual " << fmt17(gs.residual) << "\n";
  os << "converged " << (gs.converged ? 1 : 0) << "\n";
  os << "iterations " << gs.iterations << "\n";
  os << "sign_pattern " << gs.sign_pattern[0] << ' ' << gs.sign_pattern[1] << ' ' << gs.sign_pattern[2]
     << "\n";
  os << "phi0 " << gs.phi0.size() << "\n";
  for (double v : gs.phi0) os << fmt17(v) << "\n";
  return os.str();
}

GroundState parse_ground_state_record(const std::string& text) {
  std::istringstream in(text);
  auto fail = [](const std::string& what) -> void {
    throw std::runtime_error("ground state record: " + what);
  };
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) fail(std::string("expected '") + key + "'");
  };
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "quadnls-groundstate") fail("not a ground state record");
  if (version != kGroundStateFormat) fail("unsupported format version " + std::to_string(version));
  expect("grid");
  std::string kind;
  int n = 0;
  double R = 0.0;
  in >> kind >> n >> R;
  if (kind != "radial6") fail("unknown grid kind " + kind);
  expect("kappa");
  double k1, k2, k3;
  in >> k1 >> k2 >> k3;
  GroundState gs(make_radial_grid(n, R));
  gs.kappa = validate_kappa(k1, k2, k3);
  int converged = 0;
  expect("K_W"); in >> gs.K_W;
  expect("V_W"); in >> gs.V_W;
  expect("E_W"); in >> gs.E_W;
  expect("C_GN"); in >> gs.C_GN;
  expect("J"); in >> gs.J;
  expect("residual"); in >> gs.residual;
  expect("converged"); in >> converged;
  expect("iterations"); in >> gs.iterations;
  expect("sign_pattern"); in >> gs.sign_pattern[0] >> gs.sign_pattern[1] >> gs.sign_pattern[2];
  gs.converged = converged != 0;
  expect("phi0");
  std::size_t m = 0;
  in >> m;
  if (m != gs.grid.size()) fail("phi0 length does not match the grid");
  gs.phi0.resize(m);
  for (auto& v : gs.phi0) in >> v;
  if (!in) fail("truncated record");
  for (int i = 0; i < 3; ++i) {
    gs.W[i].resize(m);
    const double s = gs.sign_pattern[i] / std::sqrt(gs.kappa[i]);
    for (std::size_t j = 0; j < m; ++j) gs.W[i][j] = s * gs.phi0[j];
  }
  return gs;
}

GroundState read_ground_state(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ground_state_record(ss.str());
}

std::string ground_state_summary(const GroundState& gs, const Certificate& cert) {
  std::ostringstream os;
  const double ratio = cert.k_over_v;
  os << "grid            " << describe(Grid(gs.grid)) << "\n"
     << "kappa           " << fmt17(gs.kappa.kappa1) << ' ' << fmt17(gs.kappa.kappa2) << ' '
     << fmt17(gs.kappa.kappa3) << (gs.kappa.is_resonant ? " (resonant)" : " (non-resonant)") << "\n"
     << "K_W             " << fmt17(gs.K_W) << "\n"
     << "V_W             " << fmt17(gs.V_W) << "\n"
     << "E_W             " << fmt17(gs.E_W) << "\n"
     << "C_GN            " << fmt17(gs.C_GN) << "\n"
     << "J               " << fmt17(gs.J) << "\n"
     << "residual        " << fmt17(gs.residual) << "\n"
     << "K_W/V_W         " << fmt17(ratio) << ((ratio >= 1.499 && ratio <= 1.501) ? "  ok (3:2)" : "  OUT OF [1.499, 1.501]") << "\n"
     << "E_W/K_W         " << fmt17(cert.e_over_k) << "\n"
     << "C_GN sqrt(K_W)  " << fmt17(cert.cgn_sqrt_k) << "\n"
     << "pohozaev        " << fmt17(cert.pohozaev) << "\n"
     << "iterations      " << gs.iterations << "\n"
     << "certified       " << (cert.passed ? "yes" : "no") << "\n";
  return os.str();
}

namespace {

using Clock = std::chrono::steady_clock;

RunManifest base_manifest(const ScenarioConfig& cfg, const Grid& g) {
  RunManifest m;
  m.config_hash = config_hash(cfg);
  m.grid_checksum = grid_checksum(g);
  return m;
}

// Writes the config and the manifest, then keeps the output.
void finish(OutputSession& out, const ScenarioConfig& cfg, RunManifest& m, Clock::time_point t0,
            CommandResult& res) {
  out.write("config.json", config_to_json(cfg).dump(2) + "\n");
  m.files = out.files();
  m.wall_clock_seconds = seconds_since(t0);
  out.write("manifest.json", manifest_to_json(m).dump(2) + "\n");
  out.commit();
  res.files = out.files();
}

GroundState certified_ground_state(const Grid& g, const KappaTriple& k) {
  if (!is_radial(g)) throw ConfigError("the ground state lives on a radial grid");
  return closed_form_phi0(std::get<RadialGrid6>(g), k);
}

std::string verdict_table(const std::vector<ThresholdReport>& reps) {
  std::ostringstream os;
  os << "c,e_ratio,k_ratio,below_threshold,above_threshold,verdict,halt,t_end,trapping_pass,"
        "blowup_quadratic_pass,blowup_truncated_pass,tail_allowance,reason\n";
  auto flag = [](const auto& opt) -> std::string {
    if (!opt) return "";
    return opt->pass ? "1" : "0";
  };
  for (const auto& r : reps) {
    os << fmt17(r.amplitude.value_or(NAN)) << ',' << fmt17(r.e_ratio) << ',' << fmt17(r.k_ratio) << ','
       << r.below_threshold << ',' << r.above_threshold << ',' << to_string(r.verdict) << ','
       << (r.steps > 0 ? to_string(r.halt) : "") << ',' << fmt17(r.t_end) << ',' << flag(r.trapping)
       << ',' << flag(r.blowup_quadratic) << ',' << flag(r.blowup_truncated) << ','
       << (r.blowup_truncated ? fmt17(r.blowup_truncated->tail_allowance) : "") << ",\""
       << r.verdict_reason << "\"\n";
  }
  return os.str();
}

std::string amplitude_dir(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c_%.4f", c);
  return buf;
}

}  // namespace

CommandResult cmd_groundstate(const ScenarioConfig& cfg) {
  const auto t0 = Clock::now();
  const Grid g = build_grid(cfg);
  const KappaTriple k = build_kappa(cfg);
  GroundState gs = certified_ground_state(g, k);
  std::string extra;
  if (cfg.groundstate.method == "minimize") {
    const double Jw = gs.J;
    MinimizerConfig mc;
    mc.max_iterations = cfg.groundstate.max_iterations;
    mc.tolerance = cfg.groundstate.tolerance;
    const ComplexField3 seed = make_gaussian_triple(g, {1.0, 1.0, 1.0}, cfg.groundstate.seed_width, {0, 0, 0});
    gs = minimize_J(seed, mc, k).state;
    std::ostringstream os;
    os << "J/J(W) - 1     " << fmt17(gs.J / Jw - 1.0) << "\n"
       << "aligned error  " << fmt17(aligned_profile_error(gs.W, k)) << "\n";
    extra = os.str();
  }
  const Certificate cert = certify(gs);
  CommandResult res;
  res.summary = ground_state_summary(gs, cert) + extra;
  OutputSession out(cfg.output_dir);
  out.write("groundstate.txt", ground_state_record(gs));
  out.write("summary.txt", res.summary);
  RunManifest m = base_manifest(cfg, g);
  m.steps = gs.iterations;
  m.halt = "completed";
  finish(out, cfg, m, t0, res);
  return res;
}

CommandResult cmd_evolve(const ScenarioConfig& cfg) {
  const auto t0 = Clock::now();
  const Grid g = build_grid(cfg);
  const KappaTriple k = build_kappa(cfg);
  const bool radial = is_radial(g);
  const bool classify_run = radial && cfg.monitors.classify;
  std::optional<GroundState> gs;
  if (classify_run || cfg.initial.kind == "ground_state_scaled") gs = certified_ground_state(g, k);
  const ComplexField3 u0 = build_initial(cfg.initial, g, k, gs ? &*gs : nullptr);
  const StepScheme scheme = build_scheme(cfg, u0, k);
  const ClassifyOptions opts = build_classify_options(cfg);

  EvolveMonitors mon;
  if (classify_run) {
    mon = classification_monitors(u0, opts);
    if (!cfg.monitors.truncated_weight) mon.extra.clear();
  } else {
    mon.primary = make_quadratic_weight(g);
  }
  auto traj = std::make_shared<const Trajectory>(evolve(u0, cfg.horizon, scheme, k, mon));

  ThresholdReport rep;
  if (classify_run) {
    rep = assess_trajectory(u0, *gs, traj, opts);
  } else {
    rep.k0 = kinetic(u0, k);
    rep.v0 = potential(u0);
    rep.e0 = rep.k0 - rep.v0;
    rep.e_ratio = rep.k_ratio = NAN;
    rep.resonant = k.is_resonant;
    rep.halt = traj->halt;
    rep.halt_detail = traj->halt_detail;
    rep.steps = traj->steps;
    rep.t_end = traj->records.back().t;
    rep.scattering_final = traj->scattering.back();
    rep.verdict_reason = radial ? "classification disabled" : "classification needs radial data";
  }
  const std::string hash = config_hash(cfg);
  OutputSession out(cfg.output_dir);
  out.write("series.csv", series_csv(*traj, k, hash));
  out.write("report.json", report_to_json(rep, hash).dump(2) + "\n");
  RunManifest m = base_manifest(cfg, g);
  m.steps = traj->steps;
  m.halt = to_string(traj->halt);
  CommandResult res;
  std::ostringstream os;
  os << "steps " << traj->steps << "  dt " << fmt17(traj->dt) << "  t_end " << fmt17(rep.t_end)
     << "  halt " << to_string(traj->halt) << "\nverdict " << to_string(rep.verdict) << " ("
     << rep.verdict_reason << ")\n";
  res.summary = os.str();
  finish(out, cfg, m, t0, res);
  return res;
}

CommandResult cmd_sweep(const ScenarioConfig& cfg) {
  const auto t0 = Clock::now();
  const Grid g = build_grid(cfg);
  const KappaTriple k = build_kappa(cfg);
  const GroundState gs = certified_ground_state(g, k);
  const StepScheme scheme = build_scheme(cfg, gs.W, k);
  ClassifyOptions opts = build_classify_options(cfg);
  opts.keep_trajectory = true;
  SweepResult sweep = amplitude_sweep(gs, cfg.sweep_c, scheme, cfg.horizon, opts);

  const std::string hash = config_hash(cfg);
  OutputSession out(cfg.output_dir);
  long steps = 0;
  json agg = json::array();
  for (const auto& r : sweep.reports) {
    const std::string dir = amplitude_dir(*r.amplitude);
    if (r.trajectory) out.write(dir + "/series.csv", series_csv(*r.trajectory, k, hash));
    out.write(dir + "/report.json", report_to_json(r, hash).dump(2) + "\n");
    steps += r.steps;
    agg.push_back({{"c", *r.amplitude}, {"verdict", to_string(r.verdict)}, {"dir", dir}});
  }
  out.write("verdicts.csv", verdict_table(sweep.reports));
  out.write("sweep.json", json({{"config_hash", hash},
                                {"version", kVersion},
                                {"monotone", sweep.monotone},
                                {"runs", agg}})
                              .dump(2) +
                              "\n");
  RunManifest m = base_manifest(cfg, g);
  m.steps = steps;
  m.halt = "completed";
  CommandResult res;
  res.summary = verdict_table(sweep.reports) +
                std::string("monotone ") + (sweep.monotone ? "yes" : "no") + "\n";
  finish(out, cfg, m, t0, res);
  return res;
}

ComplexField3 random_localized_field(const CartesianGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.02, 0.03);
  const double L = g.box_length, kmax = 0.05 * kPi / g.spacing();
  ComplexField3 f{Grid(g)};
  for (int i = 0; i < 3; ++i) {
    f[i].assign(g.size(), cplx(0.0));
    for (int b = 0; b < 2; ++b) {
      const cplx amp(u(rng), u(rng));
      const double sigma = w(rng) * L;
      std::array<double, 3> c{0, 0, 0}, kv{0, 0, 0};
      for (int a = 0; a < g.dim; ++a) {
        c[a] = 0.05 * L * u(rng);
        kv[a] = kmax * u(rng);
      }
      for (std::size_t n = 0; n < g.size(); ++n) {
        const auto idx = g.unflatten(n);
        double r2 = 0.0, ph = 0.0;
        for (int a = 0; a < g.dim; ++a) {
          const double x = g.coord(idx[a]);
          r2 += (x - c[a]) * (x - c[a]);
          ph += kv[a] * x;
        }
        f[i][n] += amp * std::exp(-r2 / (2.0 * sigma * sigma)) * std::polar(1.0, ph);
      }
    }
  }
  return f;
}

KappaTriple random_resonant_kappa(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.5, 2.0);
  const double k1 = d(rng), k2 = d(rng);
  return validate_kappa(k1, k2, k1 * k2 / (k1 + k2));
}

std::vector<double> random_boost(const CartesianGrid& g, const KappaTriple& k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double kmin = std::min({k.kappa1, k.kappa2, k.kappa3});
  std::vector<double> xi(g.dim);
  for (auto& x : xi) x = 0.08 * kPi / g.spacing() * kmin * u(rng);
  return xi;
}

namespace {

double rel_drift(double a, double b) { return std::abs(b - a) / std::abs(a); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

std::vector<CheckItem> run_checks(const ScenarioConfig& cfg) {
  std::vector<CheckItem> items;
  std::mt19937_64 rng(cfg.rng_seed);
  CartesianGrid line = cfg.grid.kind == "cartesian"
                           ? make_cartesian_grid(cfg.grid.dim, cfg.grid.points_per_axis, cfg.grid.box_length)
                           : make_cartesian_grid(1, 64, 40.0);
  const KappaTriple res = validate_kappa(2.0, 2.0, 1.0);

  {
    CheckItem it{"resonance_algebra", true, ""};
    std::uniform_real_distribution<double> d(0.1, 10.0);
    std::bernoulli_distribution coin(0.5);
    int bad = 0;
    for (int n = 0; n < 10000; ++n) {
      const double k1 = d(rng), k2 = d(rng);
      const double k3 = coin(rng) ? k1 * k2 / (k1 + k2) : d(rng);
      const KappaTriple k = validate_kappa(k1, k2, k3);
      const double scale = k2 * k3 + k1 * k3 + k1 * k2;
      if (k.is_resonant != (std::abs(k.anomaly) <= 1e-10 * scale)) ++bad;
    }
    it.pass = bad == 0;
    it.detail = std::to_string(bad) + " mismatches in 10000 triples";
    items.push_back(it);
  }

  // Smooth datum resolved on the configured line.
  const double width = 8.0 * line.spacing();
  const ComplexField3 g0 = make_gaussian_triple(Grid(line), {0.6, 0.5, 0.4}, width, {0.0, 0.7, 1.9});

  {
    CheckItem it{"linear_unitarity", true, ""};
    ComplexField3 u = g0;
    const double m0 = mass(u);
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
      const double before = mass(u);
      u = strang_step(u, 0.05, res, 4, false);
      worst = std::max(worst, rel_drift(before, mass(u)));
    }
    it.pass = worst < 1e-12;
    it.detail = "max per-step mass drift " + sci(worst) + " (M0 " + sci(m0) + ")";
    items.push_back(it);
  }

  {
    CheckItem it{"strang_order", true, ""};
    const double T = 1.0, dt = 0.05;
    auto run = [&](double h) {
      ComplexField3 u = g0.scaled(2.0);
      const int n = static_cast<int>(std::lround(T / h));
      for (int s = 0; s < n; ++s) u = strang_step(u, h, res);
      return u;
    };
    const ComplexField3 ref = run(dt / 8), a = run(dt), b = run(dt / 2);
    auto err = [&](const ComplexField3& x) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < x.size(); ++j) acc += std::norm(x[i][j] - ref[i][j]);
      return std::sqrt(acc);
    };
    const double ratio = err(a) / err(b);
    it.pass = ratio >= 3.5 && ratio <= 4.5;
    it.detail = "error ratio " + sci(ratio);
    items.push_back(it);
  }

  {
    CheckItem it{"conservation", true, ""};
    auto drifts = [&](double dt) {
      StepScheme s;
      s.dt = dt;
      s.growth_factor = 1e9;
      s.record_stride = 1000000;
      const ComplexField3 u0 = g0.scaled(2.0);
      const Trajectory tr = evolve(u0, 1.0, s, res);
      const auto& a = tr.records.front();
      const auto& b = tr.records.back();
      return std::array<double, 3>{rel_drift(a.mass, b.mass), rel_drift(a.lambda_inv, b.lambda_inv),
                                   rel_drift(a.energy, b.energy)};
    };
    const auto d1 = drifts(0.005), d2 = drifts(0.0025);
    it.pass = true;
    std::ostringstream os;
    const char* names[3] = {"M", "Lambda", "E"};
    for (int q = 0; q < 3; ++q) {
      it.pass = it.pass && d1[q] < 1e-6;
      os << names[q] << ' ' << sci(d1[q]) << "->" << sci(d2[q]) << ' ';
    }
    // Splitting leaves a second-order energy drift.
    const double ratio = d1[2] / d2[2];
    it.pass = it.pass && ratio >= 3.0 && ratio <= 5.0;
    os << "E ratio " << sci(ratio);
    it.detail = os.str();
    items.push_back(it);
  }

  {
    CheckItem it{"boost_identity", true, ""};
    const CartesianGrid bg = make_cartesian_grid(1, 256, 40.0);
    double worst = 0.0, worst_star = 0.0;
    for (int f = 0; f < 10; ++f) {
      const ComplexField3 u = random_localized_field(bg, rng);
      for (int t = 0; t < 3; ++t) {
        const KappaTriple k = random_resonant_kappa(rng);
        const auto chk = boost_identity_check(u, random_boost(bg, k, rng), k);
        worst = std::max(worst, chk.residual);
        worst_star = std::max(worst_star, chk.minimizer_residual);
      }
    }
    it.pass = worst < 1e-8 && worst_star < 1e-8;
    it.detail = "max residual " + sci(worst) + ", minimizing boost " + sci(worst_star);
    items.push_back(it);
  }

  {
    CheckItem it{"virial_match", true, ""};
    const RadialGrid6 rg = make_radial_grid(256, 16.0);
    const ComplexField3 u0 = make_gaussian_triple(Grid(rg), {0.5, 0.5, 0.5}, 1.5, {0.0, 0.0, 0.0});
    StepScheme s;
    s.method = StepMethod::radial_imex;
    s.dt = default_radial_dt(rg, res);
    s.record_stride = 50;
    EvolveMonitors mon;
    mon.primary = make_quadratic_weight(Grid(rg));
    const Trajectory tr = evolve(u0, 0.2, s, res, mon);
    std::vector<double> v1;
    for (const auto& r : tr.records) v1.push_back(r.virial_v1);
    double worst = 0.0;
    for (const auto& smp : virial_fd_series(tr, v1, res))
      worst = std::max(worst, std::abs(smp.v1_dd - smp.rhs) / std::abs(smp.rhs));
    it.pass = worst < 1e-2;
    it.detail = "max relative mismatch " + sci(worst);
    items.push_back(it);
  }
  return items;
}

CommandResult cmd_check(const ScenarioConfig& cfg) {
  CommandResult res;
  std::ostringstream os;
  bool all = true;
  for (const auto& it : run_checks(cfg)) {
    os << (it.pass ? "PASS " : "FAIL ") << it.name << ": " << it.detail << "\n";
    all = all && it.pass;
  }
  res.exit_code = all ? 0 : 1;
  res.summary = os.str();
  return res;
}

}  // namespace quadnls::lab
