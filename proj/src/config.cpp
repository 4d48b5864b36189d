#include "arisac/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace arisac {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

Point ris_position_at(const Scenario& scen, double x_m) {
  const double dx = scen.target_pos.x - scen.bs_pos.x, dy = scen.target_pos.y - scen.bs_pos.y;
  const double len = std::hypot(dx, dy);
  if (!(len > 0.0)) throw ConfigError("scenario.target_pos_m: coincides with the BS");
  return {scen.bs_pos.x + x_m * dx / len, scen.bs_pos.y + x_m * dy / len};
}

std::string to_string(const SweepValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  return std::get<std::string>(v);
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

// Reads fields of one JSON object, remembering which keys were consumed so
// that leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number()) fail(field(key), "expected a number");
    out = v.get<double>();
  }
  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_integer()) fail(field(key), "expected an integer");
    out = v.get<int>();
  }
  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_boolean()) fail(field(key), "expected true or false");
    out = v.get<bool>();
  }
  void text(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_string()) fail(field(key), "expected a string");
    out = v.get<std::string>();
  }
  void optional_number(const std::string& key, std::optional<double>& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (v.is_null()) {
      out.reset();
      return;
    }
    if (!v.is_number()) fail(field(key), "expected a number or null");
    out = v.get<double>();
  }
  void point(const std::string& key, Point& out) {
    if (!has(key)) return;
    out = to_point(at(key), field(key));
  }

  static Point to_point(const json& v, const std::string& name) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(name, "expected [x, y] in metres");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(field(it.key()), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

double db_field(const json& v, const std::string& name) {
  if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  if (v.is_string() && v.get<std::string>() == "-inf") return -std::numeric_limits<double>::infinity();
  if (!v.is_number()) fail(name, "expected a number (dB), \"inf\" or \"-inf\"");
  return v.get<double>();
}

json db_json(double x) {
  if (std::isinf(x)) return json(x > 0 ? "inf" : "-inf");
  return json(x);
}

std::optional<RMatrix> matrix_field(const json& v, const std::string& name) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_array() || v.empty()) fail(name, "expected a square array of rows");
  const auto n = static_cast<Index>(v.size());
  RMatrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) fail(name, "expected a square array of rows");
    for (Index j = 0; j < n; ++j) {
      const json& e = row[static_cast<std::size_t>(j)];
      if (!e.is_number()) fail(name, "matrix entries must be numbers");
      m(i, j) = e.get<double>();
    }
  }
  return m;
}

json matrix_json(const std::optional<RMatrix>& m) {
  if (!m) return nullptr;
  json rows = json::array();
  for (Index i = 0; i < m->rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m->cols(); ++j) row.push_back((*m)(i, j));
    rows.push_back(row);
  }
  return rows;
}

json point_json(const Point& p) { return json::array({p.x, p.y}); }

void read_scenario(const json& j, Scenario& s) {
  Reader r(j, "scenario");
  r.integer("m_antennas", s.m_antennas);
  r.integer("n_ris", s.n_ris);
  r.integer("k_users", s.k_users);
  r.point("bs_pos_m", s.bs_pos);
  r.point("ris_pos_m", s.ris_pos);
  r.point("target_pos_m", s.target_pos);
  if (r.has("ue_pos_m")) {
    const json& v = r.at("ue_pos_m");
    if (!v.is_array()) fail("scenario.ue_pos_m", "expected an array of [x, y]");
    s.ue_pos.clear();
    for (std::size_t k = 0; k < v.size(); ++k) {
      s.ue_pos.push_back(Reader::to_point(v[k], "scenario.ue_pos_m[" + std::to_string(k) + "]"));
    }
  }
  r.number("p_bs_w", s.p_bs_w);
  r.number("p_ris_w", s.p_ris_w);
  if (r.has("a_ris_db")) s.a_ris_db = db_field(r.at("a_ris_db"), "scenario.a_ris_db");
  r.number("xi_db", s.xi_db);
  r.number("xi2_db", s.xi2_db);
  r.number("eta", s.eta);
  r.number("carrier_hz", s.carrier_hz);
  r.number("bandwidth_hz", s.bandwidth_hz);
  r.number("noise_density_dbm_hz", s.noise_density_dbm_hz);
  r.number("pl0_db", s.pl0_db);
  r.number("alpha", s.alpha);
  r.number("rician_k", s.rician_k);
  r.number("rcs_m2", s.rcs_m2);
  r.number("p_sw_dbm", s.p_sw_dbm);
  r.number("p_dc_dbm", s.p_dc_dbm);
  r.number("element_spacing_lambda", s.element_spacing);
  r.optional_number("sigma_ris2_w", s.sigma_ris2_w);
  r.optional_number("sigma_r2_w", s.sigma_r2_w);
  r.optional_number("sigma_z2_w", s.sigma_z2_w);
  r.boolean("ris_power_constraint", s.ris_power_constraint);
  if (r.has("corr_bs")) s.corr_bs = matrix_field(r.at("corr_bs"), "scenario.corr_bs");
  if (r.has("corr_ris")) s.corr_ris = matrix_field(r.at("corr_ris"), "scenario.corr_ris");
  r.finish();
}

json scenario_json(const Scenario& s) {
  json j;
  j["m_antennas"] = s.m_antennas;
  j["n_ris"] = s.n_ris;
  j["k_users"] = s.k_users;
  j["bs_pos_m"] = point_json(s.bs_pos);
  j["ris_pos_m"] = point_json(s.ris_pos);
  j["target_pos_m"] = point_json(s.target_pos);
  j["ue_pos_m"] = json::array();
  for (const auto& p : s.ue_pos) j["ue_pos_m"].push_back(point_json(p));
  j["p_bs_w"] = s.p_bs_w;
  j["p_ris_w"] = s.p_ris_w;
  j["a_ris_db"] = db_json(s.a_ris_db);
  j["xi_db"] = s.xi_db;
  j["xi2_db"] = s.xi2_db;
  j["eta"] = s.eta;
  j["carrier_hz"] = s.carrier_hz;
  j["bandwidth_hz"] = s.bandwidth_hz;
  j["noise_density_dbm_hz"] = s.noise_density_dbm_hz;
  j["pl0_db"] = s.pl0_db;
  j["alpha"] = s.alpha;
  j["rician_k"] = s.rician_k;
  j["rcs_m2"] = s.rcs_m2;
  j["p_sw_dbm"] = s.p_sw_dbm;
  j["p_dc_dbm"] = s.p_dc_dbm;
  j["element_spacing_lambda"] = s.element_spacing;
  auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  j["sigma_ris2_w"] = opt(s.sigma_ris2_w);
  j["sigma_r2_w"] = opt(s.sigma_r2_w);
  j["sigma_z2_w"] = opt(s.sigma_z2_w);
  j["ris_power_constraint"] = s.ris_power_constraint;
  j["corr_bs"] = matrix_json(s.corr_bs);
  j["corr_ris"] = matrix_json(s.corr_ris);
  return j;
}

void read_sweep(const json& j, SweepSpec& sw) {
  Reader r(j, "sweep");
  r.text("parameter", sw.parameter);
  sw.values.clear();
  if (r.has("values")) {
    const json& v = r.at("values");
    if (!v.is_array()) fail("sweep.values", "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string name = "sweep.values[" + std::to_string(i) + "]";
      if (sw.parameter == "mode") {
        if (!v[i].is_string()) fail(name, "expected a mode name");
        sw.values.emplace_back(v[i].get<std::string>());
      } else if (sw.parameter == "a_ris_db") {
        sw.values.emplace_back(db_field(v[i], name));
      } else {
        if (!v[i].is_number()) fail(name, "expected a number");
        sw.values.emplace_back(v[i].get<double>());
      }
    }
  }
  r.finish();
}

void read_limits(const json& j, Limits& l) {
  Reader r(j, "limits");
  r.integer("t_max", l.t_max);
  r.integer("t1_max", l.t1_max);
  r.integer("t2_max", l.t2_max);
  r.number("inner_rel_tol", l.inner_rel_tol);
  r.number("outer_tol_db", l.outer_tol_db);
  r.finish();
}

bool same_matrix(const std::optional<RMatrix>& a, const std::optional<RMatrix>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->rows() == b->rows() && a->cols() == b->cols() && *a == *b;
}

bool same_point(const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }

}  // namespace

bool operator==(const Scenario& a, const Scenario& b) {
  if (a.ue_pos.size() != b.ue_pos.size()) return false;
  for (std::size_t k = 0; k < a.ue_pos.size(); ++k) {
    if (!same_point(a.ue_pos[k], b.ue_pos[k])) return false;
  }
  return a.m_antennas == b.m_antennas && a.n_ris == b.n_ris && a.k_users == b.k_users &&
         same_point(a.bs_pos, b.bs_pos) && same_point(a.ris_pos, b.ris_pos) &&
         same_point(a.target_pos, b.target_pos) && a.p_bs_w == b.p_bs_w &&
         a.p_ris_w == b.p_ris_w && a.a_ris_db == b.a_ris_db && a.xi_db == b.xi_db &&
         a.xi2_db == b.xi2_db && a.eta == b.eta && a.carrier_hz == b.carrier_hz &&
         a.bandwidth_hz == b.bandwidth_hz && a.noise_density_dbm_hz == b.noise_density_dbm_hz &&
         a.pl0_db == b.pl0_db && a.alpha == b.alpha && a.rician_k == b.rician_k &&
         a.rcs_m2 == b.rcs_m2 && a.p_sw_dbm == b.p_sw_dbm && a.p_dc_dbm == b.p_dc_dbm &&
         a.element_spacing == b.element_spacing && a.sigma_ris2_w == b.sigma_ris2_w &&
         a.sigma_r2_w == b.sigma_r2_w && a.sigma_z2_w == b.sigma_z2_w &&
         a.ris_power_constraint == b.ris_power_constraint && same_matrix(a.corr_bs, b.corr_bs) &&
         same_matrix(a.corr_ris, b.corr_ris);
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  const auto& la = a.limits;
  const auto& lb = b.limits;
  return a.scenario == b.scenario && a.budget_w == b.budget_w && a.sweep == b.sweep &&
         a.seeds == b.seeds && a.mode == b.mode && la.t_max == lb.t_max &&
         la.t1_max == lb.t1_max && la.t2_max == lb.t2_max &&
         la.inner_rel_tol == lb.inner_rel_tol && la.outer_tol_db == lb.outer_tol_db &&
         a.samples == b.samples && a.tightened_init == b.tightened_init &&
         a.workers == b.workers && a.output == b.output;
}

void ExperimentConfig::validate() const {
  scenario.validate();
  if (seeds.empty()) fail("seeds", "must list at least one seed");
  bool known_mode = false;
  for (const auto& m : kModes) known_mode = known_mode || m == mode;
  if (!known_mode) fail("mode", "unknown mode '" + mode + "'");
  if (budget_w && !(*budget_w > 0.0)) fail("budget_w", "must be positive");
  if (limits.t_max < 1) fail("limits.t_max", "must be positive");
  if (limits.t1_max < 1) fail("limits.t1_max", "must be positive");
  if (limits.t2_max < 1) fail("limits.t2_max", "must be positive");
  if (!(limits.inner_rel_tol >= 0.0)) fail("limits.inner_rel_tol", "must be nonnegative");
  if (!(limits.outer_tol_db >= 0.0)) fail("limits.outer_tol_db", "must be nonnegative");
  if (samples < 0) fail("samples", "must be nonnegative");
  if (workers < 1) fail("workers", "must be at least 1");

  const std::string& p = sweep.parameter;
  if (p.empty()) {
    if (!sweep.values.empty()) fail("sweep.parameter", "values given without a parameter");
    return;
  }
  if (p != "n_ris" && p != "p_ris_w" && p != "ris_x_m" && p != "a_ris_db" && p != "mode") {
    fail("sweep.parameter", "unknown sweep parameter '" + p + "'");
  }
  if (sweep.values.empty()) fail("sweep.values", "must not be empty");
  for (std::size_t i = 0; i < sweep.values.size(); ++i) {
    const std::string name = "sweep.values[" + std::to_string(i) + "]";
    const SweepValue& v = sweep.values[i];
    if (p == "mode") {
      const auto* s = std::get_if<std::string>(&v);
      bool ok = false;
      for (const auto& m : kModes) ok = ok || (s && *s == m);
      if (!ok) fail(name, "unknown mode");
      continue;
    }
    const auto* d = std::get_if<double>(&v);
    if (!d) fail(name, "expected a number");
    const double x = *d;
    if (p == "n_ris" && !(x >= 1.0 && x == std::floor(x) && x <= 4096.0)) {
      fail(name, "RIS size must be a positive integer");
    }
    if (p == "p_ris_w" && !(x > 0.0)) fail(name, "RIS power must be positive");
    if (p == "a_ris_db" && !(x >= 0.0 || x == -std::numeric_limits<double>::infinity())) {
      fail(name, "gain cap must be >= 0 dB (or -inf: RIS switched off)");
    }
    if (p == "ris_x_m") {
      const Point ris = ris_position_at(scenario, x);
      if (!(distance(scenario.bs_pos, ris) >= 1.0) || !(distance(ris, scenario.target_pos) > 0.0)) {
        fail(name, "RIS must be at least 1 m from the BS and away from the target");
      }
    }
  }
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.seeds = {1};
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: malformed JSON: ") + e.what());
  }
  ExperimentConfig c;
  Reader r(j, "");
  if (r.has("scenario")) read_scenario(r.at("scenario"), c.scenario);
  r.optional_number("budget_w", c.budget_w);
  if (r.has("sweep")) read_sweep(r.at("sweep"), c.sweep);
  if (!r.has("seeds")) fail("seeds", "required field is missing");
  {
    const json& s = r.at("seeds");
    if (!s.is_array()) fail("seeds", "expected an array of integers");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_number_unsigned() && !(s[i].is_number_integer() && s[i].get<long long>() >= 0)) {
        fail("seeds[" + std::to_string(i) + "]", "expected a nonnegative integer");
      }
      c.seeds.push_back(s[i].get<std::uint64_t>());
    }
  }
  r.text("mode", c.mode);
  if (r.has("limits")) read_limits(r.at("limits"), c.limits);
  r.integer("samples", c.samples);
  r.boolean("tightened_init", c.tightened_init);
  r.integer("workers", c.workers);
  r.text("output", c.output);
  r.finish();
  c.validate();
  return c;
}

std::string dump_config(const ExperimentConfig& c) {
  json j;
  j["scenario"] = scenario_json(c.scenario);
  j["budget_w"] = c.budget_w ? json(*c.budget_w) : json(nullptr);
  json sw;
  sw["parameter"] = c.sweep.parameter;
  sw["values"] = json::array();
  for (const auto& v : c.sweep.values) {
    if (const auto* d = std::get_if<double>(&v)) {
      sw["values"].push_back(db_json(*d));
    } else {
      sw["values"].push_back(std::get<std::string>(v));
    }
  }
  j["sweep"] = sw;
  j["seeds"] = c.seeds;
  j["mode"] = c.mode;
  j["limits"] = {{"t_max", c.limits.t_max},
                 {"t1_max", c.limits.t1_max},
                 {"t2_max", c.limits.t2_max},
                 {"inner_rel_tol", c.limits.inner_rel_tol},
                 {"outer_tol_db", c.limits.outer_tol_db}};
  j["samples"] = c.samples;
  j["tightened_init"] = c.tightened_init;
  j["workers"] = c.workers;
  j["output"] = c.output;
  return j.dump(2);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write config file");
  out << dump_config(cfg) << '\n';
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    out += (i ? "," : "") + kCsvColumns[i];
  }
  out += '\n';
  for (const auto& r : rows) {
    out += r.sweep_value + ',' + std::to_string(r.seed) + ',' + r.mode + ',' +
           format_double(r.radar_sinr_db) + ',' + format_double(r.min_user_sinr_db) + ',' +
           format_double(r.bs_power_w) + ',' + format_double(r.ris_power_w) + ',' +
           std::to_string(r.outer_iters) + ',' + format_double(r.wall_ms) + ',' + r.status + '\n';
  }
  return out;
}

namespace {

double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError(where + ": not a number: '" + s + "'");
  }
  return x;
}

}  // namespace

std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("results: empty file");
  std::string header;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) header += (i ? "," : "") + kCsvColumns[i];
  if (line != header) throw ConfigError("results: unexpected header '" + line + "'");
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    const std::string where = "results line " + std::to_string(lineno);
    if (f.size() != kCsvColumns.size()) throw ConfigError(where + ": wrong number of columns");
    ResultRow r;
    r.sweep_value = f[0];
    r.seed = std::stoull(f[1]);
    r.mode = f[2];
    r.radar_sinr_db = parse_double(f[3], where + " radar_sinr_db");
    r.min_user_sinr_db = parse_double(f[4], where + " min_user_sinr_db");
    r.bs_power_w = parse_double(f[5], where + " bs_power_w");
    r.ris_power_w = parse_double(f[6], where + " ris_power_w");
    r.outer_iters = std::stoi(f[7]);
    r.wall_ms = parse_double(f[8], where + " wall_ms");
    r.status = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

void persist_results(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write results");
  out << results_csv(rows);
}

std::vector<ResultRow> load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot read results");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_results_csv(ss.str());
}

}  // namespace arisac
