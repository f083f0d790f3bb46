#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "quadnls/lab.hpp"

using namespace quadnls;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
  std::random_device rd;
  const auto p = fs::temp_directory_path() / ("quadnls_test_" + tag + "_" + std::to_string(rd()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

lab::ScenarioConfig line_config() {
  lab::ScenarioConfig cfg;
  cfg.grid.kind = "cartesian";
  cfg.grid.dim = 1;
  cfg.grid.points_per_axis = 128;
  cfg.grid.box_length = 40.0;
  cfg.initial.kind = "gaussian_triple";
  cfg.initial.amplitudes = {1.0, 0.8, 0.6};
  cfg.initial.width = 1.5;
  cfg.initial.phases = {0.0, 0.3, -0.2};
  cfg.horizon = 0.5;
  cfg.scheme.dt = 0.01;
  cfg.record_stride = 5;
  return cfg;
}

}  // namespace

TEST_CASE("config json round trip") {
  auto cfg = line_config();
  cfg.initial.kind = "boosted";
  lab::InitialSpec inner;
  inner.kind = "gaussian_triple";
  inner.width = 0.1 + 0.2;
  cfg.initial.inner = {inner};
  cfg.initial.xi = {0.25};
  cfg.sweep_c = {0.1, 1.0 / 3.0};
  const auto text = lab::canonical_dump(cfg);
  const auto back = lab::config_from_json(lab::json::parse(text));
  CHECK(lab::canonical_dump(back) == text);
  CHECK(back.initial.inner.at(0).width == 0.1 + 0.2);
  CHECK(back.sweep_c[1] == 1.0 / 3.0);
  CHECK(lab::config_hash(back) == lab::config_hash(cfg));

  SUBCASE("unknown keys and bad values are rejected") {
    auto j = lab::config_to_json(cfg);
    j["horizn"] = 2.0;
    CHECK_THROWS_AS(lab::config_from_json(j), lab::ConfigError);
    auto g = lab::config_to_json(cfg);
    g["grid"]["kind"] = "hexagonal";
    CHECK_THROWS(lab::build_grid(lab::config_from_json(g)));
  }
  SUBCASE("hash ignores the output directory only") {
    auto other = cfg;
    other.output_dir = "elsewhere";
    CHECK(lab::config_hash(other) == lab::config_hash(cfg));
    other.horizon = 0.5000000001;
    CHECK(lab::config_hash(other) != lab::config_hash(cfg));
    CHECK(lab::config_hash(cfg).size() == 16);
  }
}

TEST_CASE("fnv1a and grid checksums") {
  CHECK(lab::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(lab::hex64(lab::fnv1a64("a")) == "af63dc4c8601ec8c");
  const Grid a(make_radial_grid(64, 10.0)), b(make_radial_grid(64, 10.5));
  CHECK(lab::grid_checksum(a) == lab::grid_checksum(Grid(make_radial_grid(64, 10.0))));
  CHECK(lab::grid_checksum(a) != lab::grid_checksum(b));
}

TEST_CASE("ground-state record round trip") {
  const auto gs = closed_form_phi0(make_radial_grid(256, 100.0), validate_kappa(2.0, 2.0, 1.0));
  const auto text = lab::ground_state_record(gs);
  const auto back = lab::parse_ground_state_record(text);
  CHECK(back.K_W == gs.K_W);
  CHECK(back.E_W == gs.E_W);
  CHECK(back.C_GN == gs.C_GN);
  CHECK(back.phi0 == gs.phi0);
  for (int i = 0; i < 3; ++i) CHECK(back.W[i][17] == gs.W[i][17]);
  CHECK(lab::ground_state_record(back) == text);
  CHECK_THROWS(lab::parse_ground_state_record("quadnls-groundstate 99\n"));
  CHECK_THROWS(lab::parse_ground_state_record(text.substr(0, text.size() / 2)));
}

TEST_CASE("output sessions remove partial output") {
  const auto dir = scratch_dir("session");
  try {
    lab::OutputSession s(dir);
    s.write("a.txt", "x");
    s.write("nested/b.txt", "y");
    CHECK(fs::exists(dir / "nested" / "b.txt"));
    throw std::runtime_error("abort");
  } catch (const std::runtime_error&) {
  }
  CHECK_FALSE(fs::exists(dir));
  {
    lab::OutputSession s(dir);
    s.write("kept.txt", "z");
    s.commit();
  }
  CHECK(slurp(dir / "kept.txt") == "z");
  fs::remove_all(dir);
}

TEST_CASE("evolve output is byte-identical across runs") {
  auto cfg = line_config();
  const auto d1 = scratch_dir("evolve1"), d2 = scratch_dir("evolve2");
  cfg.output_dir = d1.string();
  const auto r1 = lab::cmd_evolve(cfg);
  cfg.output_dir = d2.string();
  const auto r2 = lab::cmd_evolve(cfg);
  CHECK(r1.exit_code == 0);
  for (const char* f : {"series.csv", "report.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  // config.json records the output directory, which the hash leaves out.
  CHECK(lab::config_hash(lab::load_config(d1 / "config.json")) ==
        lab::config_hash(lab::load_config(d2 / "config.json")));
  const auto csv = slurp(d1 / "series.csv");
  CHECK(csv.rfind("# quadnls series", 0) == 0);
  CHECK(csv.find(lab::config_hash(cfg)) != std::string::npos);
  // 0.5 / 0.01 = 50 steps at stride 5, plus the initial record.
  std::istringstream lines(csv);
  std::string line;
  int rows = -2;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 11);
  const auto manifest = lab::json::parse(slurp(d1 / "manifest.json"));
  CHECK(manifest["config_hash"] == lab::config_hash(cfg));
  CHECK(manifest["steps"] == 50);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("ground-state command") {
  lab::ScenarioConfig cfg;
  cfg.grid.num_points = 512;
  cfg.grid.outer_radius = 100.0;
  const auto dir = scratch_dir("gs");
  cfg.output_dir = dir.string();
  const auto res = lab::cmd_groundstate(cfg);
  CHECK(fs::exists(dir / "groundstate.txt"));
  const auto gs = lab::read_ground_state(dir / "groundstate.txt");
  CHECK(gs.K_W / gs.V_W == doctest::Approx(1.5).epsilon(1e-2));
  CHECK(res.summary.find("K_W") != std::string::npos);
  fs::remove_all(dir);

  SUBCASE("an undersized domain fails without leaving output") {
    cfg.grid.outer_radius = 20.0;
    CHECK_THROWS_AS(lab::cmd_groundstate(cfg), SizingError);
    CHECK_FALSE(fs::exists(dir / "groundstate.txt"));
  }
  SUBCASE("method and grid must agree") {
    auto bad = line_config();
    bad.scheme.method = "radial_imex";
    CHECK_THROWS(lab::cmd_evolve(bad));
  }
}

TEST_CASE("property suite passes quickly") {
  lab::ScenarioConfig cfg;
  const auto t0 = std::chrono::steady_clock::now();
  const auto items = lab::run_checks(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 60.0);
  REQUIRE_FALSE(items.empty());
  for (const auto& it : items) {
    CAPTURE(it.name);
    CAPTURE(it.detail);
    CHECK(it.pass);
  }
  cfg.output_dir = scratch_dir("check").string();
  const auto res = lab::cmd_check(cfg);
  CHECK(res.exit_code == 0);
  fs::remove_all(cfg.output_dir);
}
