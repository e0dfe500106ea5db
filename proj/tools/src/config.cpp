#include "kldobs/bench/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "kldobs/bench/preset.hpp"

namespace kldobs::bench {

namespace {

std::string render(const std::vector<ConfigIssue>& issues) {
  std::ostringstream os;
  os << issues.size() << " configuration problem" << (issues.size() == 1 ? "" : "s") << ":";
  for (const auto& i : issues) {
    os << "\n  ";
    if (i.line > 0) os << "line " << i.line << ": ";
    os << i.field << ": " << i.message;
  }
  return os.str();
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_spaces(const std::string& s) {
  std::string out;
  bool space = false;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(ch);
  }
  return out;
}

double parse_double(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) throw std::invalid_argument("expected a number");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw std::invalid_argument("'" + s + "' is not a number");
  if (!std::isfinite(v)) throw std::invalid_argument("'" + s + "' is not finite");
  return v;
}

template <typename Int>
Int parse_integer(std::string_view text) {
  const std::string s = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("'" + s + "' is not an integer");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  const std::string s = trim(text);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw std::invalid_argument("'" + s + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& text) {
  std::string s = trim(text);
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int bracket_balance(const std::string& s) {
  int depth = 0;
  for (char ch : s) {
    if (ch == '[') ++depth;
    if (ch == ']') --depth;
  }
  return depth;
}

bool valid_instant_name(const std::string& s) {
  return s == "onset" || s == "one-step" || s == "steady" || s == "blend";
}

struct Entry {
  int line = 0;
  std::string key;  ///< section.key
  std::string value;
};

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(ErrorKind::kConfig, render(issues)), issues_(std::move(issues)) {}

std::string_view to_string(MethodChoice m) {
  switch (m) {
    case MethodChoice::kLmi: return "lmi";
    case MethodChoice::kAo: return "ao";
    case MethodChoice::kAdmm: return "admm";
    case MethodChoice::kBlend: return "blend";
    case MethodChoice::kBest: return "best";
  }
  return "best";
}

MethodChoice parse_method_choice(std::string_view text) {
  if (text == "lmi") return MethodChoice::kLmi;
  if (text == "ao") return MethodChoice::kAo;
  if (text == "admm") return MethodChoice::kAdmm;
  if (text == "blend") return MethodChoice::kBlend;
  if (text == "best") return MethodChoice::kBest;
  throw std::invalid_argument("unknown method '" + std::string(text) + "' (lmi, ao, admm, blend, best)");
}

MethodChoice DesignSection::method_at(const std::string& instant) const {
  if (instant == "blend") return MethodChoice::kBlend;
  const auto it = method_for.find(instant);
  return it == method_for.end() ? method : it->second;
}

Matrix parse_matrix(const std::string& text) {
  const std::string s = trim(text);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    throw std::invalid_argument("matrix literal must be enclosed in brackets");
  }
  std::vector<std::vector<double>> rows;
  const std::string inner = trim(std::string_view(s).substr(1, s.size() - 2));
  if (!inner.empty() && inner.front() == '[') {
    std::size_t pos = 0;
    while (pos < inner.size()) {
      const std::size_t open = inner.find('[', pos);
      if (open == std::string::npos) {
        if (!trim(std::string_view(inner).substr(pos)).empty() &&
            trim(std::string_view(inner).substr(pos)) != ",") {
          throw std::invalid_argument("stray text after the last row");
        }
        break;
      }
      const std::string between = trim(std::string_view(inner).substr(pos, open - pos));
      if (!between.empty() && between != ",") throw std::invalid_argument("rows must be separated by commas");
      const std::size_t close = inner.find(']', open);
      if (close == std::string::npos) throw std::invalid_argument("unterminated row");
      if (inner.find('[', open + 1) < close) throw std::invalid_argument("nested brackets inside a row");
      std::vector<double> row;
      for (const auto& tok : split_list(inner.substr(open + 1, close - open - 1))) row.push_back(parse_double(tok));
      rows.push_back(std::move(row));
      pos = close + 1;
    }
  } else {
    std::vector<double> row;
    for (const auto& tok : split_list(inner)) row.push_back(parse_double(tok));
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw std::invalid_argument("empty matrix literal");
  const std::size_t cols = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw std::invalid_argument("row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                                  " entries, expected " + std::to_string(cols));
    }
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

Vector parse_vector(const std::string& text) {
  const auto toks = split_list(text);
  if (toks.empty()) throw std::invalid_argument("empty vector");
  Vector v(static_cast<Eigen::Index>(toks.size()));
  for (std::size_t i = 0; i < toks.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_double(toks[i]);
  return v;
}

LtiSystem build_system(const SystemSection& s) {
  if (!s.preset.empty()) return preset(s.preset);
  if (!s.a || !s.c) raise(ErrorKind::kConfig, "system needs a preset or at least matrices a and c");
  const Eigen::Index nx = s.a->rows();
  const Eigen::Index ny = s.c->rows();
  const Matrix b = s.b ? *s.b : Matrix::Zero(nx, 0);
  const Matrix bw = s.b_omega ? *s.b_omega : Matrix::Zero(nx, 0);
  const Matrix dw = s.d_omega ? *s.d_omega : Matrix::Zero(ny, bw.cols());
  return LtiSystem(*s.a, b, *s.c, bw, dw);
}

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  std::vector<ConfigIssue> issues;
  std::vector<Entry> entries;

  // Pass 1: logical lines.
  {
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    Entry pending;
    bool continuing = false;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::size_t hash = raw.find('#');
      const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (continuing) {
        pending.value += " " + line;
        if (bracket_balance(pending.value) <= 0) {
          continuing = false;
          entries.push_back(pending);
        }
        continue;
      }
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        if (section != "system" && section != "attack" && section != "design" && section != "monitor" &&
            section != "output") {
          issues.push_back({line_no, section, "unknown section"});
        }
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        issues.push_back({line_no, section.empty() ? "<top>" : section, "expected 'key = value'"});
        continue;
      }
      pending = {line_no, (section.empty() ? "" : section + ".") + trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
      if (bracket_balance(pending.value) > 0) {
        continuing = true;
      } else {
        entries.push_back(pending);
      }
    }
    if (continuing) issues.push_back({pending.line, pending.key, "unbalanced brackets"});
  }

  ScenarioConfig cfg;
  cfg.name = source;
  std::map<std::string, int> seen;
  bool sensors_given = false, vector_given = false, target_given = false, target_instant_given = false;

  using Handler = std::function<void(const std::string&)>;
  const auto matrix_into = [](std::optional<Matrix>& dst) {
    return [&dst](const std::string& v) { dst = parse_matrix(v); };
  };
  DesignConfig& dc = cfg.design.cfg;
  const std::map<std::string, Handler> handlers = {
      {"name", [&](const std::string& v) { cfg.name = v; }},
      {"system.preset", [&](const std::string& v) { cfg.system.preset = v; }},
      {"system.a", matrix_into(cfg.system.a)},
      {"system.b", matrix_into(cfg.system.b)},
      {"system.c", matrix_into(cfg.system.c)},
      {"system.b_omega", matrix_into(cfg.system.b_omega)},
      {"system.d_omega", matrix_into(cfg.system.d_omega)},
      {"system.controller_gain", matrix_into(cfg.system.controller_gain)},
      {"attack.sensors",
       [&](const std::string& v) {
         cfg.attack.sensors.clear();
         for (const auto& t : split_list(v)) cfg.attack.sensors.push_back(parse_integer<int>(t));
         if (cfg.attack.sensors.empty()) throw std::invalid_argument("no sensor indices given");
         sensors_given = true;
       }},
      {"attack.weight",
       [&](const std::string& v) {
         if (v == "estimation-error") cfg.attack.weight = WeightKind::kEstimationError;
         else if (v == "state-shift") cfg.attack.weight = WeightKind::kStateShift;
         else if (v == "custom") cfg.attack.weight = WeightKind::kCustom;
         else throw std::invalid_argument("unknown weight '" + v + "' (estimation-error, state-shift, custom)");
       }},
      {"attack.weight_matrix", matrix_into(cfg.attack.weight_matrix)},
      {"attack.epsilon", [&](const std::string& v) { cfg.attack.epsilon = parse_double(v); }},
      {"attack.schedule",
       [&](const std::string& v) {
         if (v == "step") cfg.attack.schedule = ScheduleKind::kStep;
         else if (v == "ramp") cfg.attack.schedule = ScheduleKind::kRamp;
         else if (v == "none") cfg.attack.schedule = ScheduleKind::kNone;
         else throw std::invalid_argument("unknown schedule '" + v + "' (none, step, ramp)");
       }},
      {"attack.onset", [&](const std::string& v) { cfg.attack.onset = parse_integer<int>(v); }},
      {"attack.beta", [&](const std::string& v) { cfg.attack.beta = parse_double(v); }},
      {"attack.target",
       [&](const std::string& v) {
         if (v != "kalman" && v != "own" && !valid_instant_name(v)) {
           throw std::invalid_argument("unknown target '" + v + "' (kalman, own, onset, one-step, steady, blend)");
         }
         cfg.attack.target = v;
         target_given = true;
       }},
      {"attack.target_instant",
       [&](const std::string& v) {
         cfg.attack.target_instant = parse_instant(v);
         target_instant_given = true;
       }},
      {"attack.vector",
       [&](const std::string& v) {
         cfg.attack.vector = parse_vector(v);
         vector_given = true;
       }},
      {"attack.random", [&](const std::string& v) { cfg.attack.random = parse_bool(v); }},
      {"design.instants",
       [&](const std::string& v) {
         cfg.design.instants.clear();
         for (const auto& t : split_list(v)) {
           if (!valid_instant_name(t)) throw std::invalid_argument("unknown instant '" + t + "'");
           cfg.design.instants.push_back(t);
         }
       }},
      {"design.method", [&](const std::string& v) { cfg.design.method = parse_method_choice(v); }},
      {"design.method.one-step",
       [&](const std::string& v) { cfg.design.method_for["one-step"] = parse_method_choice(v); }},
      {"design.method.steady",
       [&](const std::string& v) { cfg.design.method_for["steady"] = parse_method_choice(v); }},
      {"design.gamma_grid",
       [&](const std::string& v) {
         dc.gamma_grid.clear();
         for (const auto& t : split_list(v)) dc.gamma_grid.push_back(parse_double(t));
       }},
      {"design.max_iters", [&](const std::string& v) { dc.max_iters = parse_integer<int>(v); }},
      {"design.conv_tol", [&](const std::string& v) { dc.conv_tol = parse_double(v); }},
      {"design.coupling_tol", [&](const std::string& v) { dc.coupling_tol = parse_double(v); }},
      {"design.admm_step", [&](const std::string& v) { dc.admm_step = parse_double(v); }},
      {"design.admm_q0",
       [&](const std::string& v) {
         if (v == "error-covariance") dc.admm_q0 = AdmmQ0::kErrorCovariance;
         else if (v == "inverse-error-covariance") dc.admm_q0 = AdmmQ0::kInverseErrorCovariance;
         else throw std::invalid_argument("unknown admm_q0 '" + v + "'");
       }},
      {"design.alpha", [&](const std::string& v) { dc.alpha = parse_double(v); }},
      {"design.initializer",
       [&](const std::string& v) {
         if (v == "lmi") dc.initializer = Initializer::kLmi;
         else if (v == "kalman") dc.initializer = Initializer::kKalman;
         else if (v == "custom") dc.initializer = Initializer::kCustom;
         else throw std::invalid_argument("unknown initializer '" + v + "' (lmi, kalman, custom)");
       }},
      {"design.custom_gain", [&](const std::string& v) { dc.custom_gain = parse_matrix(v); }},
      {"design.strict_margin", [&](const std::string& v) { dc.strict_margin = parse_double(v); }},
      {"monitor.false_alarm", [&](const std::string& v) { cfg.monitor.false_alarm = parse_double(v); }},
      {"monitor.horizon", [&](const std::string& v) { cfg.monitor.horizon = parse_integer<int>(v); }},
      {"monitor.trials", [&](const std::string& v) { cfg.monitor.trials = parse_integer<int>(v); }},
      {"monitor.base_seed", [&](const std::string& v) { cfg.monitor.base_seed = parse_integer<std::uint64_t>(v); }},
      {"monitor.workers", [&](const std::string& v) { cfg.monitor.workers = parse_integer<int>(v); }},
      {"output.directory", [&](const std::string& v) { cfg.output.directory = v; }},
      {"output.decimate", [&](const std::string& v) { cfg.output.decimate = parse_integer<int>(v); }},
      {"output.timings", [&](const std::string& v) { cfg.output.timings = parse_bool(v); }},
  };

  std::map<std::string, int> line_of;
  for (const Entry& e : entries) {
    const auto h = handlers.find(e.key);
    if (h == handlers.end()) {
      issues.push_back({e.line, e.key, "unknown key"});
      continue;
    }
    if (seen[e.key]++ > 0) {
      issues.push_back({e.line, e.key, "given more than once (first on line " + std::to_string(line_of[e.key]) + ")"});
      continue;
    }
    line_of[e.key] = e.line;
    try {
      h->second(e.value);
      cfg.echo.emplace_back(e.key, collapse_spaces(e.value));
    } catch (const std::exception& ex) {
      issues.push_back({e.line, e.key, ex.what()});
    }
  }
  const auto line = [&](const std::string& key) {
    const auto it = line_of.find(key);
    return it == line_of.end() ? 0 : it->second;
  };

  // Cross-field validation.
  int n_y = -1;
  const bool inline_system = cfg.system.a || cfg.system.b || cfg.system.c || cfg.system.b_omega || cfg.system.d_omega;
  if (!cfg.system.preset.empty() && inline_system) {
    issues.push_back({line("system.preset"), "system", "give either a preset or inline matrices, not both"});
  } else if (cfg.system.preset.empty() && !inline_system) {
    issues.push_back({0, "system", "no system given (set system.preset or system.a/b/c/b_omega/d_omega)"});
  } else if (!cfg.system.preset.empty()) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), cfg.system.preset) == names.end()) {
      issues.push_back({line("system.preset"), "system.preset", "unknown preset '" + cfg.system.preset + "'"});
    } else {
      n_y = preset(cfg.system.preset).n_y();
    }
  } else {
    for (const char* key : {"a", "c"}) {
      const bool present = std::string(key) == "a" ? cfg.system.a.has_value() : cfg.system.c.has_value();
      if (!present) issues.push_back({0, std::string("system.") + key, "required when no preset is given"});
    }
    if (cfg.system.a && cfg.system.c) {
      try {
        n_y = build_system(cfg.system).n_y();
      } catch (const Error& e) {
        issues.push_back({line("system.a"), "system", e.what()});
      }
    }
  }
  if (cfg.system.controller_gain && n_y > 0) {
    // K is n_u x n_y; the plant check happens when the weight is built.
    if (cfg.system.controller_gain->cols() != n_y) {
      issues.push_back({line("system.controller_gain"), "system.controller_gain",
                        "expected " + std::to_string(n_y) + " columns (n_y)"});
    }
  }

  if (!sensors_given) {
    issues.push_back({0, "attack.sensors", "missing (list the 1-based indices of compromised sensors)"});
  } else {
    for (std::size_t i = 0; i < cfg.attack.sensors.size(); ++i) {
      const int s = cfg.attack.sensors[i];
      if (s < 1 || (n_y > 0 && s > n_y)) {
        issues.push_back({line("attack.sensors"), "attack.sensors",
                          "index " + std::to_string(s) + " outside [1, " + (n_y > 0 ? std::to_string(n_y) : "n_y") + "]"});
      }
      if (i > 0 && s <= cfg.attack.sensors[i - 1]) {
        issues.push_back({line("attack.sensors"), "attack.sensors", "indices must be strictly increasing"});
      }
    }
  }
  if (cfg.attack.weight == WeightKind::kCustom && !cfg.attack.weight_matrix) {
    issues.push_back({line("attack.weight"), "attack.weight_matrix", "required when weight = custom"});
  }
  if (cfg.attack.weight_matrix && cfg.attack.weight != WeightKind::kCustom) {
    issues.push_back({line("attack.weight_matrix"), "attack.weight_matrix", "only used with weight = custom"});
  }
  if (cfg.attack.weight == WeightKind::kStateShift && !cfg.system.controller_gain) {
    issues.push_back({line("attack.weight"), "system.controller_gain", "required when weight = state-shift"});
  }
  if (cfg.attack.weight_matrix && n_y > 0 &&
      (cfg.attack.weight_matrix->rows() != n_y || cfg.attack.weight_matrix->cols() != n_y)) {
    issues.push_back({line("attack.weight_matrix"), "attack.weight_matrix", "must be n_y x n_y"});
  }
  if (!(cfg.attack.epsilon > 0.0)) issues.push_back({line("attack.epsilon"), "attack.epsilon", "must be > 0"});
  if (!(cfg.attack.beta >= 0.0 && cfg.attack.beta <= 1.0)) {
    issues.push_back({line("attack.beta"), "attack.beta", "must lie in [0, 1]"});
  }
  if (cfg.attack.onset < 0) issues.push_back({line("attack.onset"), "attack.onset", "must be >= 0"});
  if (vector_given) {
    if (target_given) issues.push_back({line("attack.vector"), "attack.vector", "conflicts with attack.target"});
    cfg.attack.target = "vector";
    if (sensors_given && cfg.attack.vector->size() != static_cast<Eigen::Index>(cfg.attack.sensors.size())) {
      issues.push_back({line("attack.vector"), "attack.vector", "length must equal the number of sensors"});
    }
  }
  if (!target_instant_given && cfg.attack.target != "kalman" && cfg.attack.target != "vector" &&
      cfg.attack.target != "own" && cfg.attack.target != "blend") {
    cfg.attack.target_instant = parse_instant(cfg.attack.target);
  }
  if (cfg.attack.target != "kalman" && cfg.attack.target != "own" && cfg.attack.target != "vector") {
    if (std::find(cfg.design.instants.begin(), cfg.design.instants.end(), cfg.attack.target) ==
        cfg.design.instants.end()) {
      issues.push_back({line("attack.target"), "attack.target", "'" + cfg.attack.target + "' is not among design.instants"});
    }
  }

  if (cfg.design.instants.empty()) issues.push_back({line("design.instants"), "design.instants", "no instants given"});
  for (const auto& [inst, m] : cfg.design.method_for) {
    if (m == MethodChoice::kBlend) {
      issues.push_back({line("design.method." + inst), "design.method." + inst, "use the 'blend' instant for blends"});
    }
  }
  if (cfg.design.method == MethodChoice::kBlend) {
    issues.push_back({line("design.method"), "design.method", "use the 'blend' instant for blends"});
  }
  if (dc.initializer == Initializer::kCustom && dc.custom_gain.size() == 0) {
    issues.push_back({line("design.initializer"), "design.custom_gain", "required when initializer = custom"});
  }
  try {
    dc.validate();
  } catch (const Error& e) {
    issues.push_back({0, "design", e.what()});
  }

  if (!(cfg.monitor.false_alarm > 0.0 && cfg.monitor.false_alarm < 1.0)) {
    issues.push_back({line("monitor.false_alarm"), "monitor.false_alarm", "must lie in (0, 1)"});
  }
  if (cfg.monitor.horizon < 1) issues.push_back({line("monitor.horizon"), "monitor.horizon", "must be >= 1"});
  if (cfg.monitor.trials < 1) issues.push_back({line("monitor.trials"), "monitor.trials", "must be >= 1"});
  if (cfg.monitor.workers < 0) issues.push_back({line("monitor.workers"), "monitor.workers", "must be >= 0"});
  if (cfg.attack.schedule != ScheduleKind::kNone && cfg.attack.onset >= cfg.monitor.horizon) {
    issues.push_back({line("attack.onset"), "attack.onset", "must be smaller than monitor.horizon"});
  }
  if (cfg.output.decimate < 1) issues.push_back({line("output.decimate"), "output.decimate", "must be >= 1"});
  if (cfg.output.directory.empty()) issues.push_back({line("output.directory"), "output.directory", "empty"});

  if (!issues.empty()) {
    for (auto& i : issues) {
      if (i.field.empty()) i.field = source;
    }
    throw ConfigError(std::move(issues));
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({{0, path, "cannot open file"}});
  std::ostringstream buf;
  buf << in.rdbuf();
  ScenarioConfig cfg = parse_config(buf.str(), path);
  return cfg;
}

}  // namespace kldobs::bench
