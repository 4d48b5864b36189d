#include "doctest.h"
#include "support.hpp"

#include <filesystem>
#include <fstream>

#include "arisac/experiment.hpp"

using namespace arisac;
using testing::rel_err;

namespace {

bool mentions(const ConfigError& e, const std::string& what) {
  return std::string(e.what()).find(what) != std::string::npos;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig quick_config() {
  ExperimentConfig c = default_config();
  c.seeds = {3};
  c.limits.t_max = 2;
  c.limits.t1_max = 3;
  c.limits.t2_max = 3;
  c.samples = 50;
  return c;
}

}  // namespace

TEST_CASE("config defaults are the reference scenario") {
  const ExperimentConfig c = default_config();
  CHECK(c.seeds == std::vector<std::uint64_t>{1});
  CHECK(c.mode == "dfrc");
  CHECK(c.sweep.parameter.empty());
  CHECK_FALSE(c.budget_w.has_value());
  const Scenario& s = c.scenario;
  CHECK(s.m_antennas == 4);
  CHECK(s.n_ris == 12);
  CHECK(s.k_users == 2);
  CHECK(s.p_bs_w == 1.0);
  CHECK(s.p_ris_w == 0.01);
  CHECK(s.a_ris_db == 40.0);
  CHECK(s.xi_db == 10.0);
  CHECK(s.eta == 0.1);
  CHECK(s.carrier_hz == 2.7e9);
  CHECK(s.rcs_m2 == 100.0);
  CHECK(c.limits.t_max == 20);
  CHECK(c.limits.t1_max == 10);
  CHECK(c.limits.t2_max == 10);
  CHECK_NOTHROW(c.validate());
  CHECK(parse_config(R"({"seeds": [1]})") == c);
}

TEST_CASE("config round trip") {
  ExperimentConfig c = default_config();
  c.seeds = {4, 9, 1u << 31};
  c.budget_w = 1.0;
  c.scenario.a_ris_db = std::numeric_limits<double>::infinity();
  c.scenario.sigma_r2_w = 1.0;
  c.scenario.corr_bs = RMatrix::Identity(4, 4) * 0.5 + RMatrix::Constant(4, 4, 0.5);
  c.scenario.ue_pos[1] = {12.5, 48.25};
  c.sweep = {"a_ris_db", {30.0, 40.0, std::numeric_limits<double>::infinity()}};
  c.limits.outer_tol_db = 0.001;
  c.samples = 17;
  c.workers = 3;
  c.output = "out.csv";
  const ExperimentConfig back = parse_config(dump_config(c));
  CHECK(back == c);

  ExperimentConfig modes = default_config();
  modes.sweep = {"mode", {std::string("dfrc"), std::string("sensing_only")}};
  CHECK(parse_config(dump_config(modes)) == modes);

  const auto path = std::filesystem::temp_directory_path() / "arisac_cfg_roundtrip.json";
  save_config(c, path.string());
  CHECK(load_config(path.string()) == c);
  std::filesystem::remove(path);
}

TEST_CASE("config errors name the offending field") {
  CHECK(error_of(R"({"mode": "dfrc"})").find("seeds") != std::string::npos);
  CHECK(error_of(R"({"seeds": [1], "colour": 3})").find("colour") != std::string::npos);
  CHECK(error_of(R"({"seeds": [1], "scenario": {"n_ris": "twelve"}})").find("scenario.n_ris") !=
        std::string::npos);
  CHECK(error_of(R"({"seeds": [1], "scenario": {"p_ris_w": -1}})").find("p_ris_w") !=
        std::string::npos);
  CHECK(error_of(R"({"seeds": [1], "mode": "radar"})").find("mode") != std::string::npos);
  CHECK(error_of(R"({"seeds": [-2]})").find("seeds[0]") != std::string::npos);
  CHECK(error_of(R"({"seeds": [1], "sweep": {"parameter": "eta", "values": [1]}})")
            .find("sweep") != std::string::npos);
  CHECK(error_of(R"({"seeds": [1], "limits": {"t_max": 1.5}})").find("limits.t_max") !=
        std::string::npos);
  CHECK_FALSE(error_of("{ not json").empty());
  try {
    load_config("/nonexistent/arisac.json");
    FAIL("expected error");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "/nonexistent/arisac.json"));
  }
}

TEST_CASE("results CSV round trip") {
  std::vector<ResultRow> rows(3);
  rows[0] = {"", 1, "dfrc", 12.345678901234567, 10.000000001, 1.0, 0.00999999, 7, 1234.5, "ok"};
  rows[1] = {"0.05", 18446744073709551615ull, "sensing_only", -3.0,
             std::numeric_limits<double>::quiet_NaN(), 0.5, 1e-300, 0, 0.0, "converged"};
  rows[2] = {"inf", 2, "passive", std::numeric_limits<double>::quiet_NaN(),
             -std::numeric_limits<double>::infinity(), 1.0, 0.0, 20, 1.0, "infeasible-init"};
  const std::vector<ResultRow> back = parse_results_csv(results_csv(rows));
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ResultRow &a = rows[i], &b = back[i];
    CHECK(a.sweep_value == b.sweep_value);
    CHECK(a.seed == b.seed);
    CHECK(a.mode == b.mode);
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    CHECK(same(a.radar_sinr_db, b.radar_sinr_db));
    CHECK(same(a.min_user_sinr_db, b.min_user_sinr_db));
    CHECK(a.bs_power_w == b.bs_power_w);
    CHECK(a.ris_power_w == b.ris_power_w);
    CHECK(a.outer_iters == b.outer_iters);
    CHECK(a.wall_ms == b.wall_ms);
    CHECK(a.status == b.status);
  }
  CHECK_THROWS_AS(parse_results_csv("a,b\n"), ConfigError);
  CHECK_THROWS_AS(parse_results_csv(results_csv({}) + "1,2\n"), ConfigError);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-300) == "1e-300");
}

TEST_CASE("power budgets") {
  const Scenario s;
  const double p_sw = std::pow(10.0, -3.5), p_dc = 1e-4;
  CHECK(rel_err(s.p_sw_w(), p_sw) < 1e-14);
  CHECK(rel_err(s.p_dc_w(), p_dc) < 1e-14);
  CHECK(rel_err(passive_budget(s), 1.0 + 12.0 * p_sw) < 1e-14);
  CHECK(rel_err(active_budget(s), 1.0 + 0.01 + 12.0 * (p_sw + p_dc)) < 1e-14);
  CHECK(rel_err(bs_power_from_budget(1.0, s, true), 1.0 - 12.0 * p_sw) < 1e-14);
  CHECK(rel_err(bs_power_from_budget(1.0, s, false), 1.0 - 0.01 - 12.0 * (p_sw + p_dc)) < 1e-14);
  // the budget identities invert each other
  Scenario t = s;
  t.p_bs_w = bs_power_from_budget(1.0, s, false);
  CHECK(rel_err(active_budget(t), 1.0) < 1e-14);
  t.p_bs_w = bs_power_from_budget(1.0, s, true);
  CHECK(rel_err(passive_budget(t), 1.0) < 1e-14);
  CHECK_THROWS_AS(bs_power_from_budget(0.01, s, false), ConfigError);
}

TEST_CASE("operating modes") {
  const Scenario s;
  const Scenario so = mode_scenario(s, "sensing_only");
  CHECK(so.k_users == 0);
  CHECK(so.ue_pos.empty());
  const Scenario u2 = mode_scenario(s, "sens_ue2");
  REQUIRE(u2.k_users == 1);
  CHECK(u2.ue_pos[0].x == s.ue_pos[1].x);
  CHECK(u2.ue_pos[0].y == s.ue_pos[1].y);
  const Scenario pas = mode_scenario(s, "passive", 1.0);
  CHECK(pas.k_users == 2);
  CHECK(pas.a_ris_linear() == 1.0);
  CHECK_FALSE(pas.ris_power_constraint);
  CHECK(pas.sigma_ris2() == 0.0);
  CHECK(rel_err(pas.p_bs_w, 1.0 - 12.0 * std::pow(10.0, -3.5)) < 1e-14);
  CHECK(mode_scenario(s, "dfrc") == s);
  CHECK_THROWS_AS(mode_scenario(testing::small_scenario(4, 12, 1), "sens_ue2"), ConfigError);

  Rng rng(1);
  const ChannelSet chan = draw_channels(s, rng);
  const ChannelSet c2 = mode_channels(chan, "sens_ue2");
  REQUIRE(c2.h1.size() == 1);
  CHECK(c2.h1[0] == chan.h1[1]);
  CHECK(c2.h2[0] == chan.h2[1]);
  CHECK(c2.g == chan.g);
  CHECK(mode_channels(chan, "sensing_only").h1.empty());
}

TEST_CASE("RIS placement along the BS-target line") {
  const Scenario s;
  const Point p = ris_position_at(s, 30.0);
  CHECK(p.x == doctest::Approx(0.0));
  CHECK(p.y == doctest::Approx(30.0));
  const Scenario moved = apply_sweep_value(s, "ris_x_m", 30.0);
  CHECK(moved.ris_pos.y == doctest::Approx(30.0));
  // UE 2 keeps its offset from the surface
  CHECK(moved.ue_pos[1].x - moved.ris_pos.x == doctest::Approx(s.ue_pos[1].x - s.ris_pos.x));
  CHECK(moved.ue_pos[1].y - moved.ris_pos.y == doctest::Approx(s.ue_pos[1].y - s.ris_pos.y));
  CHECK(moved.ue_pos[0].y == s.ue_pos[0].y);
  Scenario diag = s;
  diag.target_pos = {30.0, 40.0};
  const Point q = ris_position_at(diag, 10.0);
  CHECK(q.x == doctest::Approx(6.0));
  CHECK(q.y == doctest::Approx(8.0));
  CHECK(apply_sweep_value(s, "n_ris", 24.0).n_ris == 24);
}

TEST_CASE("single-point sweep equals a direct run") {
  ExperimentConfig direct = quick_config();
  ExperimentConfig swept = direct;
  swept.sweep = {"p_ris_w", {0.01}};
  const ExperimentResult a = run_experiment(direct);
  const ExperimentResult b = run_experiment(swept);
  REQUIRE(a.points.size() == 1);
  REQUIRE(b.points.size() == 1);
  REQUIRE(a.all_ok());
  REQUIRE(b.all_ok());
  CHECK(a.points[0].row.radar_sinr_db == b.points[0].row.radar_sinr_db);
  CHECK(a.points[0].trace.state.w == b.points[0].trace.state.w);
  CHECK(b.points[0].row.sweep_value == "0.01");

  const PointResult p = run_point(direct, std::nullopt, 3);
  CHECK(p.row.radar_sinr_db == a.points[0].row.radar_sinr_db);

  const std::vector<Aggregate> agg = b.aggregates();
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].points == 1);
  CHECK(agg[0].ok == 1);
  CHECK(agg[0].mean_db == b.points[0].row.radar_sinr_db);
  CHECK(agg[0].median_db == agg[0].mean_db);
}

TEST_CASE("failing points are recorded and the sweep continues") {
  ExperimentConfig c = quick_config();
  c.sweep = {"p_ris_w", {0.01, 0.5}};
  c.budget_w = 0.3;  // P_RIS = 0.5 leaves no BS power
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].ok());
  CHECK(r.points[1].row.status == "config-error");
  CHECK(r.points[1].message.find("budget_w") != std::string::npos);
  CHECK_FALSE(r.all_ok());
  const auto agg = r.aggregates();
  REQUIRE(agg.size() == 2);
  CHECK(agg[1].ok == 0);
  CHECK(std::isnan(agg[1].mean_db));
}

TEST_CASE("beampattern table") {
  const Scenario s;
  Rng rng(5);
  const ChannelSet chan = draw_channels(s, rng);
  const CVector v = initial_ris(s, chan, rng);
  const BeamformerState st{tightened_init(chan, s, v, s.xi2_db).w0, v};
  const auto rows = beampattern_table(st, chan, s);
  REQUIRE(rows.size() == 181);
  CHECK(rows.front().theta_deg == -90.0);
  CHECK(rows.back().theta_deg == 90.0);
  double peak = -1e300;
  for (const auto& r : rows) {
    CHECK(r.power_db_norm <= 0.0);
    peak = std::max(peak, r.power_db_norm);
  }
  CHECK(peak == 0.0);
  CHECK(beampattern_table(st, chan, s, 0.5).size() == 361);
  CHECK_THROWS_AS(beampattern_table(st, chan, s, 0.0), DomainError);

  const auto path = std::filesystem::temp_directory_path() / "arisac_bp.csv";
  export_beampattern(st, chan, s, path.string());
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  std::getline(in, line);
  CHECK(line == "theta_deg,power,power_db_norm");
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 181);
  std::filesystem::remove(path);
}

TEST_CASE("sensing-only echo maximization without a target echo") {
  const Scenario s;
  Rng rng(6);
  ChannelSet chan = draw_channels(s, rng);
  chan.a.setZero();
  DriverOptions opt;
  opt.limits.t_max = 2;
  opt.limits.t1_max = 2;
  opt.limits.t2_max = 2;
  opt.samples = 20;
  const SimplifiedResult r = simplified_sensing_solve(s, chan, rng, opt);
  CHECK(r.objective == 0.0);
  CHECK(r.bs_power_slack >= -1e-6);
  CHECK(r.ris_power_slack >= -1e-6);
}
