#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "almlab/errors.hpp"
#include "almlab_cli/cli.hpp"

namespace almlab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<ExperimentSpec>& experiments() {
  static const std::vector<ExperimentSpec> list = {
      {"qp-suite",
       "random strictly convex inequality QPs: semismooth Newton against exhaustive active-set enumeration",
       {{"n", "", "number of random problems", true},
        {"tol", "1e-8", "agreement tolerance in x and lambda"}}},
      {"uzawa",
       "random equality QPs: Uzawa iteration against the direct KKT solve",
       {{"n", "", "number of random problems", true},
        {"gamma", "1", "augmentation parameter"},
        {"rho", "", "Uzawa step (default gamma)"},
        {"tol", "1e-8", "agreement tolerance in x"}}},
      {"poisson-dirichlet",
       "Nitsche Dirichlet Poisson, manufactured sin-sin solution on the unit square",
       {{"levels", "4", "number of refinement levels"},
        {"n0", "8", "cells per side on the coarsest level"},
        {"degree", "1", "polynomial degree (1 or 2)"},
        {"gamma0", "", "Nitsche parameter (default twice the inverse constant)"}}},
      {"poisson-unilateral",
       "unilateral Poisson membrane: f = 1, u <= obstacle on the bottom edge",
       {{"levels", "1", "number of refinement levels"},
        {"n0", "16", "cells per side on the coarsest level"},
        {"variant", "nitsche", "nitsche (P1 or P2, eliminated multiplier) or mixed (P2, facet multiplier)"},
        {"degree", "1", "polynomial degree for the nitsche variant"},
        {"obstacle", "0.05", "obstacle height g"},
        {"gamma0", "", "stabilisation parameter (default twice the inverse constant)"},
        {"tol", "1e-10", "semismooth Newton tolerance"},
        {"max_iter", "100", "semismooth Newton iteration cap"}}},
      {"stokes",
       "Taylor-Hood Stokes, manufactured divergence-free velocity on the closed unit box",
       {{"levels", "4", "number of refinement levels"},
        {"n0", "8", "cells per side on the coarsest level"},
        {"viscosity", "1", "viscosity mu"}}},
      {"cavitation",
       "lid-driven pocket channel with and without the cavitation constraint p >= 0",
       {{"nx", "32", "cells along the channel"},
        {"ny", "8", "cells across the channel"},
        {"gamma0", "0.01", "stabilisation parameter"},
        {"tol", "1e-10", "semismooth Newton tolerance"},
        {"max_iter", "100", "semismooth Newton iteration cap"}}},
      {"contact",
       "elastic half disc on a flexible plane (plane strain)",
       {{"n", "16", "concentric rings of the half-disc mesh"},
        {"alpha", "0", "plane compliance (one value or a comma list)"},
        {"load", "50", "downward body force"},
        {"E", "200", "Young's modulus"},
        {"nu", "0.33", "Poisson ratio"},
        {"gamma0", "", "Nitsche parameter (default 100 E)"},
        {"tol", "1e-10", "semismooth Newton tolerance"},
        {"max_iter", "100", "semismooth Newton iteration cap"}}},
      {"plate",
       "clamped Mindlin-Reissner plate with the augmented-Lagrangian shear constraint",
       {{"levels", "4", "number of refinement levels"},
        {"n0", "4", "cells per side on the coarsest level"},
        {"load", "100", "uniform load f"},
        {"E", "1", "Young's modulus"},
        {"nu", "0", "Poisson ratio"},
        {"t", "1", "thickness"},
        {"gamma_shear", "0.1", "shear scale gamma2, gamma = gamma2 / h^2"}}},
      {"plate-obstacle",
       "clamped plate against the central obstacle g = 100 r^2",
       {{"n", "16", "cells per side"},
        {"variant", "multiplier", "multiplier or eliminated"},
        {"side", "above", "above (u <= g + beta p) or below (u >= g - beta p)"},
        {"load", "100", "uniform load f (sign flips with side = below)"},
        {"beta", "0", "obstacle compliance"},
        {"gamma_obstacle", "10", "obstacle scale gamma1, eps = (h^4 / gamma1 + beta)^-1"},
        {"gamma_shear", "0.1", "shear scale gamma2"},
        {"tol", "1e-10", "semismooth Newton tolerance"},
        {"max_iter", "100", "semismooth Newton iteration cap"}}},
      {"convergence",
       "refinement study with fitted rates for one problem",
       {{"problem", "", "poisson, poisson-p2, stokes or plate-shear", true},
        {"levels", "4", "number of refinement levels"},
        {"n0", "8", "cells per side on the coarsest level"}}},
  };
  return list;
}

const ExperimentSpec& find_experiment(const std::string& name) {
  for (const auto& e : experiments())
    if (e.name == name) return e;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string describe_keys(const ExperimentSpec& spec) {
  std::ostringstream os;
  os << "Keys (--set key=value or config file):\n";
  for (const auto& k : spec.keys) {
    os << "  " << k.name;
    if (k.required)
      os << " (required)";
    else if (!k.default_value.empty())
      os << " = " << k.default_value;
    else
      os << " (automatic)";
    os << "\n      " << k.help << "\n";
  }
  return os.str();
}

std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(no) + ": empty key");
    if (out.count(key)) throw ConfigError(source + ":" + std::to_string(no) + ": duplicate key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_key_values(in, path);
}

Parameters::Parameters(const ExperimentSpec& spec, const std::map<std::string, std::string>& given) {
  for (const auto& [key, value] : given) {
    const bool known = std::any_of(spec.keys.begin(), spec.keys.end(), [&](const KeySpec& k) { return k.name == key; });
    if (!known) throw ConfigError("unknown key '" + key + "' for experiment " + spec.name);
  }
  for (const auto& k : spec.keys) {
    const auto it = given.find(k.name);
    if (it != given.end() && !it->second.empty()) {
      values_[k.name] = it->second;
    } else {
      if (k.required) throw ConfigError("missing required key '" + k.name + "' for experiment " + spec.name);
      values_[k.name] = k.default_value;
    }
  }
}

bool Parameters::is_set(const std::string& key) const { return !str(key).empty(); }

const std::string& Parameters::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("key '" + key + "' is not defined for this experiment");
  return it->second;
}

double Parameters::real(const std::string& key) const {
  const std::string& s = str(key);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE)
    throw ConfigError("key '" + key + "' expects a number, got '" + s + "'");
  return v;
}

int Parameters::integer(const std::string& key) const {
  const std::string& s = str(key);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno == ERANGE || v < -1000000000L || v > 1000000000L)
    throw ConfigError("key '" + key + "' expects an integer, got '" + s + "'");
  return static_cast<int>(v);
}

int thread_cap_from_env() {
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  const char* s = std::getenv("ALMLAB_THREADS");
  if (!s || !*s) return hw;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096)
    throw ConfigError("ALMLAB_THREADS must be a positive integer, got '" + std::string(s) + "'");
  return static_cast<int>(v);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int count = std::max(1, std::min(threads, n));
  std::vector<std::thread> pool;
  for (int t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  for (double v : values) cells.push_back(format_number(v));
  add_row(cells);
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size()) throw std::invalid_argument("csv row width does not match the header");
  rows_.push_back(cells);
}

void CsvTable::write(const std::string& path, const std::vector<std::string>& meta) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "# almlab-csv v1\n";
  for (const auto& m : meta) out << "# " << m << "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace almlab::cli
