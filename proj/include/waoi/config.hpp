#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "waoi/model.hpp"
#include "waoi/threshold.hpp"

namespace waoi {

struct SchedulerConfig {
  int Rd = 1;
  double eps = 1e-6;
  bool calibrate_p = false;
};

struct SimulationConfig {
  long T = 10000;
  double burn_in = 0.1;
  int replications = 5;
};

struct Config {
  std::uint64_t seed = 0;
  PopulationSpec population;
  SchedulerConfig scheduler;
  SolverSettings solver;
  SimulationConfig simulation;
};

// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& tok, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse number '" + tok + "'");
  }
}

inline std::vector<double> parse_row(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(parse_number(tok, key));
  return out;
}

// Matrices are row-lists: entries space-separated, rows ';'-separated.
inline MatrixXd parse_matrix(const std::string& text, const std::string& key) {
  std::vector<std::vector<double>> rows;
  std::string chunk;
  std::istringstream is(text);
  while (std::getline(is, chunk, ';')) rows.push_back(parse_row(chunk, key));
  if (rows.empty() || rows.front().empty())
    throw ConfigError("key '" + key + "': empty matrix");
  const std::size_t cols = rows.front().size();
  MatrixXd m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols)
      throw ConfigError("key '" + key + "': ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

inline std::string matrix_to_string(const MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) out += " ; ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ' ';
      out += format_number(m(r, c));
    }
  }
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("key '" + key + "': expected true or false");
}

struct RawType {
  std::string id;
  MatrixXd A, B, Q, R, K_W, Sigma_x;
  VectorXd nu0;
  bool has_A = false, has_B = false, has_Q = false, has_R = false, has_KW = false,
       has_nu0 = false, has_Sigma = false;
};

}  // namespace detail

// Key-value text with [section] headers; '#' starts a comment line. Sections:
// [population], repeated [type], [scheduler], [solver], [simulation]; `seed`
// at top level. Unknown sections or keys are rejected.
inline Config parse_config(const std::string& text) {
  Config cfg;
  std::vector<detail::RawType> raw_types;
  std::string section;  // "" = top level
  bool have_N = false;

  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
      section = t.substr(1, t.size() - 2);
      if (section == "type")
        raw_types.emplace_back();
      else if (section != "population" && section != "scheduler" && section != "solver" &&
               section != "simulation")
        throw ConfigError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    const std::string qual = section.empty() ? key : section + "." + key;

    if (section.empty()) {
      if (key == "seed") {
        try {
          cfg.seed = std::stoull(value);
        } catch (const std::exception&) {
          throw ConfigError("key 'seed': cannot parse integer '" + value + "'");
        }
      } else {
        throw ConfigError("unknown key '" + qual + "'");
      }
    } else if (section == "population") {
      if (key == "N")
        cfg.population.N = static_cast<int>(detail::parse_number(value, qual)), have_N = true;
      else if (key == "weights")
        cfg.population.weights = detail::parse_row(value, qual);
      else
        throw ConfigError("unknown key '" + qual + "'");
    } else if (section == "type") {
      auto& rt = raw_types.back();
      if (key == "id")
        rt.id = value;
      else if (key == "A")
        rt.A = detail::parse_matrix(value, qual), rt.has_A = true;
      else if (key == "B")
        rt.B = detail::parse_matrix(value, qual), rt.has_B = true;
      else if (key == "Q")
        rt.Q = detail::parse_matrix(value, qual), rt.has_Q = true;
      else if (key == "R")
        rt.R = detail::parse_matrix(value, qual), rt.has_R = true;
      else if (key == "K_W")
        rt.K_W = detail::parse_matrix(value, qual), rt.has_KW = true;
      else if (key == "nu0") {
        const MatrixXd m = detail::parse_matrix(value, qual);
        if (m.rows() != 1) throw ConfigError("key '" + qual + "': nu0 must be a single row");
        rt.nu0 = m.transpose().col(0);
        rt.has_nu0 = true;
      } else if (key == "Sigma_x")
        rt.Sigma_x = detail::parse_matrix(value, qual), rt.has_Sigma = true;
      else
        throw ConfigError("unknown key '" + qual + "'");
    } else if (section == "scheduler") {
      if (key == "Rd")
        cfg.scheduler.Rd = static_cast<int>(detail::parse_number(value, qual));
      else if (key == "eps")
        cfg.scheduler.eps = detail::parse_number(value, qual);
      else if (key == "calibrate_p")
        cfg.scheduler.calibrate_p = detail::parse_bool(value, qual);
      else
        throw ConfigError("unknown key '" + qual + "'");
    } else if (section == "solver") {
      if (key == "delta_max")
        cfg.solver.delta_max = static_cast<int>(detail::parse_number(value, qual));
      else if (key == "vi_tol")
        cfg.solver.vi_tol = detail::parse_number(value, qual);
      else if (key == "discounts")
        cfg.solver.discounts = detail::parse_row(value, qual);
      else
        throw ConfigError("unknown key '" + qual + "'");
    } else if (section == "simulation") {
      if (key == "T")
        cfg.simulation.T = static_cast<long>(detail::parse_number(value, qual));
      else if (key == "burn_in")
        cfg.simulation.burn_in = detail::parse_number(value, qual);
      else if (key == "replications")
        cfg.simulation.replications = static_cast<int>(detail::parse_number(value, qual));
      else
        throw ConfigError("unknown key '" + qual + "'");
    }
  }

  if (raw_types.empty()) throw ConfigError("config declares no [type] sections");
  int idx = 0;
  for (auto& rt : raw_types) {
    if (!rt.has_A) throw ConfigError("type " + std::to_string(idx) + ": missing required key A");
    if (!rt.has_KW)
      throw ConfigError("type " + std::to_string(idx) + ": missing required key K_W");
    AgentType t;
    const auto n = rt.A.rows();
    t.id = rt.id.empty() ? "t" + std::to_string(idx) : rt.id;
    t.A = rt.A;
    t.B = rt.has_B ? rt.B : MatrixXd::Identity(n, n);
    t.Q = rt.has_Q ? rt.Q : MatrixXd::Identity(n, n);
    t.R = rt.has_R ? rt.R : MatrixXd::Identity(t.B.cols(), t.B.cols());
    t.K_W = rt.K_W;
    t.nu0 = rt.has_nu0 ? rt.nu0 : VectorXd::Zero(n);
    t.Sigma_x = rt.has_Sigma ? rt.Sigma_x : MatrixXd::Identity(n, n);
    t.validate();
    cfg.population.types.push_back(std::move(t));
    ++idx;
  }
  for (const auto& t : cfg.population.types)
    if (t.n() != cfg.population.types.front().n() || t.m() != cfg.population.types.front().m())
      throw ConfigError("all types must share state/input dimensions (n, m)");
  if (!have_N) cfg.population.N = static_cast<int>(cfg.population.types.size());
  if (cfg.population.N < 1) throw ConfigError("population.N must be >= 1");
  if (cfg.population.weights.empty())
    cfg.population.weights.assign(cfg.population.types.size(),
                                  1.0 / cfg.population.types.size());
  if (cfg.population.weights.size() != cfg.population.types.size())
    throw ConfigError("population.weights length must equal the number of types");
  double sum = 0.0;
  for (double w : cfg.population.weights) {
    if (w < 0.0) throw ConfigError("population.weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("population.weights must sum to 1");
  if (std::abs(sum - 1.0) > 1e-12)
    for (double& w : cfg.population.weights) w /= sum;
  return cfg;
}

inline std::string dump_config(const Config& cfg) {
  std::string out;
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  out += "\n[population]\n";
  out += "N = " + std::to_string(cfg.population.N) + "\n";
  out += "weights =";
  for (double w : cfg.population.weights) out += " " + format_number(w);
  out += "\n";
  for (const auto& t : cfg.population.types) {
    out += "\n[type]\n";
    out += "id = " + t.id + "\n";
    out += "A = " + detail::matrix_to_string(t.A) + "\n";
    out += "B = " + detail::matrix_to_string(t.B) + "\n";
    out += "Q = " + detail::matrix_to_string(t.Q) + "\n";
    out += "R = " + detail::matrix_to_string(t.R) + "\n";
    out += "K_W = " + detail::matrix_to_string(t.K_W) + "\n";
    out += "nu0 = " + detail::matrix_to_string(t.nu0.transpose()) + "\n";
    out += "Sigma_x = " + detail::matrix_to_string(t.Sigma_x) + "\n";
  }
  out += "\n[scheduler]\n";
  out += "Rd = " + std::to_string(cfg.scheduler.Rd) + "\n";
  out += "eps = " + format_number(cfg.scheduler.eps) + "\n";
  out += std::string("calibrate_p = ") + (cfg.scheduler.calibrate_p ? "true" : "false") + "\n";
  out += "\n[solver]\n";
  out += "delta_max = " + std::to_string(cfg.solver.delta_max) + "\n";
  out += "vi_tol = " + format_number(cfg.solver.vi_tol) + "\n";
  out += "discounts =";
  for (double d : cfg.solver.discounts) out += " " + format_number(d);
  out += "\n";
  out += "\n[simulation]\n";
  out += "T = " + std::to_string(cfg.simulation.T) + "\n";
  out += "burn_in = " + format_number(cfg.simulation.burn_in) + "\n";
  out += "replications = " + std::to_string(cfg.simulation.replications) + "\n";
  return out;
}

inline Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

// FNV-1a over the canonical dump.
inline std::uint64_t config_hash(const Config& cfg) {
  const std::string text = dump_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace waoi
