#include "kldobs/bench/commands.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <functional>

#include "kldobs/bench/output.hpp"
#include "kldobs/monitor.hpp"

#ifndef KLDOBS_VERSION
#define KLDOBS_VERSION "unknown"
#endif

namespace kldobs::bench {

namespace {

constexpr std::uint64_t kSimulateStream = 1;
constexpr std::uint64_t kRandomAttackStream = 2;
const char* const kInstants[] = {"onset", "one-step", "steady"};

/// Re-raises the in-flight exception with `tag` prefixed to library errors.
[[noreturn]] void rethrow_tagged(const std::string& tag) {
  try {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    std::string message = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + " error: ";
    if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
    throw Error(e.kind(), tag + ": " + message);
  }
}

struct Stages {
  bool attacks = false;
  bool simulate = false;
  bool montecarlo = false;
  /// Designs beyond the Kalman gain are needed.
  bool designs = true;
};

struct Context {
  const ScenarioConfig& cfg;
  LtiSystem sys;
  ObserverGain kalman;
  AttackMatrix attack;
  ImpactWeight weight;
};

Context prepare(const ScenarioConfig& cfg) {
  try {
    LtiSystem sys = build_system(cfg.system);
    ObserverGain kal = kalman_gain(sys);
    AttackMatrix att(cfg.attack.sensors, sys.n_y());
    ImpactWeight w;
    switch (cfg.attack.weight) {
      case WeightKind::kEstimationError:
        w = impact_weight_estimation_error(sys, kal);
        break;
      case WeightKind::kStateShift:
        w = impact_weight_state_shift(sys, *cfg.system.controller_gain);
        break;
      case WeightKind::kCustom:
        w = ImpactWeight::custom(*cfg.attack.weight_matrix);
        break;
    }
    return Context{cfg, std::move(sys), std::move(kal), std::move(att), std::move(w)};
  } catch (...) {
    rethrow_tagged("setup");
  }
}

struct DesignedGain {
  std::string name;  ///< "kalman", "one-step", "steady" or "blend"
  DesignReport report;
  std::string selected;
  Json candidates = Json::object();
};

Method to_method(MethodChoice m) {
  switch (m) {
    case MethodChoice::kLmi: return Method::kLmi;
    case MethodChoice::kAo: return Method::kAo;
    case MethodChoice::kAdmm: return Method::kAdmm;
    case MethodChoice::kBlend: return Method::kBlend;
    case MethodChoice::kBest: break;
  }
  return Method::kAo;
}

DesignedGain design_instant(const Context& c, const std::string& name, Bundle& bundle, const std::string& prefix) {
  const DesignConfig& dc = c.cfg.design.cfg;
  const bool timings = c.cfg.output.timings;
  const auto run = [&](MethodChoice m) -> DesignReport {
    try {
      if (name == "blend") return design_blend(c.sys, c.attack, c.weight, dc.alpha, dc);
      return design(c.sys, c.attack, c.weight, to_method(m), parse_instant(name), dc);
    } catch (...) {
      rethrow_tagged("design[" + name + "/" + std::string(to_string(m)) + "]");
    }
  };

  DesignedGain d{name, {}, {}};
  const MethodChoice m = c.cfg.design.method_at(name);
  if (m != MethodChoice::kBest) {
    d.report = run(m);
    d.selected = std::string(to_string(m));
    return d;
  }
  std::exception_ptr first_failure;
  bool have = false;
  for (MethodChoice candidate : {MethodChoice::kAo, MethodChoice::kAdmm}) {
    const std::string tag(to_string(candidate));
    try {
      DesignReport r = run(candidate);
      bundle.write_json(prefix + "design_" + name + "_" + tag + ".json", report_to_json(r, timings));
      d.candidates[tag] = {{"status", r.status}, {"exact_j", to_json(r.exact_j)}};
      if (!have || r.exact_j > d.report.exact_j) {
        d.report = std::move(r);
        d.selected = tag;
        have = true;
      }
    } catch (const Error& e) {
      if (!first_failure) first_failure = std::current_exception();
      d.candidates[tag] = {{"status", "failed"}, {"error", e.what()}};
    }
  }
  if (!have) std::rethrow_exception(first_failure);
  return d;
}

std::vector<DesignedGain> run_designs(const Context& c, const Stages& stages, Bundle& bundle, const std::string& prefix) {
  std::vector<DesignedGain> dets;
  try {
    dets.push_back({"kalman", design_onset(c.sys, c.attack, c.weight), "kalman"});
  } catch (...) {
    rethrow_tagged("design[onset]");
  }
  if (stages.designs) {
    for (const auto& inst : c.cfg.design.instants) {
      if (inst != "onset") dets.push_back(design_instant(c, inst, bundle, prefix));
    }
  }

  const bool timings = c.cfg.output.timings;
  Json cross = Json::object();
  Json largest = Json::object();
  for (const char* inst : kInstants) largest[inst] = nullptr;
  std::vector<double> best(3, -1.0);
  for (const auto& d : dets) {
    Json rep = report_to_json(d.report, timings);
    rep["selected_method"] = d.selected;
    if (!d.candidates.empty()) rep["candidates"] = d.candidates;
    bundle.write_json(prefix + "design_" + d.name + ".json", rep);
    const double js[3] = {d.report.j_onset, d.report.j_one_step, d.report.j_steady};
    cross[d.name] = {{"method", std::string(to_string(d.report.method))},
                     {"onset", to_json(js[0])},
                     {"one-step", to_json(js[1])},
                     {"steady", to_json(js[2])}};
    for (int i = 0; i < 3; ++i) {
      if (js[i] > best[i]) {
        best[i] = js[i];
        largest[kInstants[i]] = d.name;
      }
    }
  }
  bundle.write_json(prefix + "cross_evaluation.json", {{"detectability", cross}, {"largest_at", largest}});
  return dets;
}

struct NamedAttack {
  std::string name;
  std::string against;
  std::string instant;
  AttackVector vec;
};

std::string own_instant(const std::string& det) {
  if (det == "kalman") return "onset";
  if (det == "blend") return "steady";
  return det;
}

std::vector<NamedAttack> build_attacks(const Context& c, const std::vector<DesignedGain>& dets) {
  const AttackSection& a = c.cfg.attack;
  std::vector<NamedAttack> out;
  const auto worst_against = [&](const DesignedGain& d, const std::string& inst) {
    try {
      return worst_case_attack(c.sys, d.report.gain, c.attack, c.weight, parse_instant(inst), a.epsilon);
    } catch (...) {
      rethrow_tagged("attack[" + d.name + "@" + inst + "]");
    }
  };
  const auto find = [&](const std::string& name) -> const DesignedGain& {
    for (const auto& d : dets) {
      if (d.name == name) return d;
    }
    raise(ErrorKind::kConfig, "attack target '" + name + "' was not designed");
  };

  if (a.target == "vector") {
    out.push_back({"a_vector", "given", "onset",
                   evaluate_attack(c.sys, c.kalman, c.attack, c.weight, *a.vector, Instant::onset())});
  } else if (a.target == "own") {
    for (const auto& d : dets) out.push_back({"a_" + d.name, d.name, own_instant(d.name), worst_against(d, own_instant(d.name))});
  } else {
    const std::string inst = a.target_instant.label();
    const DesignedGain& d = find(a.target == "onset" ? "kalman" : a.target);
    out.push_back({"a_" + d.name, d.name, inst, worst_against(d, inst)});
  }
  if (a.random) {
    RandomStream stream(derive_seed(c.cfg.monitor.base_seed, kRandomAttackStream));
    try {
      out.push_back({"a_random", "none", "onset", random_impact_attack(c.attack, c.weight, a.epsilon, stream)});
    } catch (...) {
      rethrow_tagged("attack[random]");
    }
  }
  return out;
}

void write_attacks(const Context& c, const std::vector<DesignedGain>& dets, const std::vector<NamedAttack>& attacks,
                   Bundle& bundle, const std::string& prefix) {
  Json list = Json::array();
  for (const auto& atk : attacks) {
    Json kld = Json::object();
    Json largest = Json::object();
    for (int i = 0; i < 3; ++i) {
      double best = -1.0;
      for (const auto& d : dets) {
        const double v =
            evaluate_attack(c.sys, d.report.gain, c.attack, c.weight, atk.vec.a_bar, parse_instant(kInstants[i]))
                .kld_at_eval;
        kld[d.name][kInstants[i]] = to_json(v);
        if (v > best) {
          best = v;
          largest[kInstants[i]] = d.name;
        }
      }
    }
    list.push_back({{"name", atk.name},
                    {"against", atk.against},
                    {"instant", atk.instant},
                    {"sensors", c.attack.indices()},
                    {"a_bar", to_json(atk.vec.a_bar)},
                    {"impact", to_json(atk.vec.impact)},
                    {"gamma_rank", atk.vec.gamma_rank},
                    {"reduced", atk.vec.reduced},
                    {"kld", kld},
                    {"largest_kld_at", largest}});
  }
  bundle.write_json(prefix + "attacks.json", {{"attacks", list}});
}

AttackSchedule make_schedule(const Context& c, const NamedAttack& atk) {
  const AttackSection& a = c.cfg.attack;
  switch (a.schedule) {
    case ScheduleKind::kStep: return AttackSchedule::step(c.attack, atk.vec.a_bar, a.onset);
    case ScheduleKind::kRamp: return AttackSchedule::ramp(c.attack, atk.vec.a_bar, a.onset, a.beta);
    case ScheduleKind::kNone: break;
  }
  return AttackSchedule::none();
}

std::vector<NamedAttack> scheduled(const Context& c, const std::vector<NamedAttack>& attacks) {
  if (c.cfg.attack.schedule != ScheduleKind::kNone) return attacks;
  return {NamedAttack{"none", "none", "onset", {}}};
}

void run_simulations(const Context& c, const std::vector<DesignedGain>& dets, const std::vector<NamedAttack>& attacks,
                     Bundle& bundle, const std::string& prefix) {
  const int horizon = c.cfg.monitor.horizon;
  const int stride = c.cfg.output.decimate;
  const std::uint64_t seed = derive_seed(c.cfg.monitor.base_seed, kSimulateStream);
  Json summary = Json::array();
  for (const auto& d : dets) {
    const kldobs::Detector det = make_detector(c.sys, d.report.gain, c.cfg.monitor.false_alarm);
    for (const auto& atk : scheduled(c, attacks)) {
      const std::string tag = d.name + "__" + atk.name;
      try {
        const AttackSchedule sched = make_schedule(c, atk);
        RandomStream stream(seed);
        const Trace trace = simulate(c.sys, d.report.gain, sched, horizon, stream);
        const EvalSeries eval = mahalanobis_series(det, trace);

        Series s;
        const auto component = [&](const std::vector<Vector>& v, Eigen::Index i) {
          std::vector<double> col(v.size());
          for (std::size_t k = 0; k < v.size(); ++k) col[k] = v[k](i);
          return col;
        };
        for (Eigen::Index i = 0; i < c.sys.n_y(); ++i) s.add("y" + std::to_string(i + 1), component(trace.outputs, i));
        for (Eigen::Index i = 0; i < c.sys.n_y(); ++i) s.add("r" + std::to_string(i + 1), component(trace.residuals, i));
        s.add("statistic", eval.statistic);
        s.add("alarm", std::vector<double>(eval.alarm.begin(), eval.alarm.end()));
        bundle.write_series(prefix + "trace_" + tag, s, stride);

        Series k;
        k.add("kld", kld_series(c.sys, d.report.gain, sched, horizon));
        bundle.write_series(prefix + "kld_" + tag, k, stride);

        int first_alarm = -1, alarms_after = 0;
        const int from = sched.kind == ScheduleKind::kNone ? 0 : sched.onset;
        for (int t = from; t < horizon; ++t) {
          if (eval.alarm[static_cast<std::size_t>(t)]) {
            if (first_alarm < 0) first_alarm = t;
            ++alarms_after;
          }
        }
        summary.push_back({{"detector", d.name},
                           {"attack", atk.name},
                           {"threshold", eval.threshold},
                           {"first_alarm", first_alarm},
                           {"alarms_from_onset", alarms_after}});
      } catch (...) {
        rethrow_tagged("simulate[" + tag + "]");
      }
    }
  }
  bundle.write_json(prefix + "simulate.json", {{"seed", seed}, {"runs", summary}});
}

void run_montecarlo(const Context& c, const std::vector<DesignedGain>& dets, const std::vector<NamedAttack>& attacks,
                    Bundle& bundle, const std::string& prefix) {
  const MonitorSection& m = c.cfg.monitor;
  Json summary = Json::array();
  for (const auto& d : dets) {
    const kldobs::Detector det = make_detector(c.sys, d.report.gain, m.false_alarm);
    for (const auto& atk : scheduled(c, attacks)) {
      const std::string tag = d.name + "__" + atk.name;
      try {
        const AttackSchedule sched = make_schedule(c, atk);
        const McReport mc = monte_carlo_detection(c.sys, det, sched, m.horizon, m.trials, m.base_seed, m.workers);
        Series s;
        s.add("detection_probability", mc.detection_probability);
        s.add("mean_statistic", mc.mean_statistic);
        s.add("statistic_variance", mc.statistic_variance);
        bundle.write_series(prefix + "detection_" + tag, s, c.cfg.output.decimate);

        int first95 = -1;
        const int from = sched.kind == ScheduleKind::kNone ? 0 : sched.onset;
        for (int t = from; t < m.horizon; ++t) {
          if (mc.detection_probability[static_cast<std::size_t>(t)] >= 0.95) {
            first95 = t;
            break;
          }
        }
        summary.push_back({{"detector", d.name},
                           {"attack", atk.name},
                           {"threshold", mc.threshold},
                           {"first_step_at_0.95", first95},
                           {"final_detection_probability", mc.detection_probability.back()}});
      } catch (...) {
        rethrow_tagged("montecarlo[" + tag + "]");
      }
    }
  }
  bundle.write_json(prefix + "montecarlo.json",
                    {{"trials", m.trials}, {"base_seed", m.base_seed}, {"horizon", m.horizon}, {"runs", summary}});
}

bool needs_designs(const ScenarioConfig& cfg, const Stages& stages) {
  if (!stages.attacks && !stages.simulate && !stages.montecarlo) return true;
  // Simulations always compare every configured detector.
  if (stages.simulate || stages.montecarlo) return true;
  return cfg.attack.target != "kalman" && cfg.attack.target != "vector";
}

Json scenario_meta(const ScenarioConfig& cfg) {
  Json echo = Json::array();
  for (const auto& [k, v] : cfg.echo) echo.push_back({k, v});
  return {{"name", cfg.name},
          {"config", echo},
          {"sensors", cfg.attack.sensors},
          {"instants", cfg.design.instants},
          {"method", std::string(to_string(cfg.design.method))},
          {"horizon", cfg.monitor.horizon},
          {"false_alarm", cfg.monitor.false_alarm},
          {"trials", cfg.monitor.trials},
          {"decimate", cfg.output.decimate},
          {"seeds",
           {{"base_seed", cfg.monitor.base_seed},
            {"simulate_seed", derive_seed(cfg.monitor.base_seed, kSimulateStream)},
            {"random_attack_seed", derive_seed(cfg.monitor.base_seed, kRandomAttackStream)}}}};
}

/// Runs the requested stages of one scenario into `bundle` under `prefix`.
void run_scenario(const ScenarioConfig& cfg, Stages stages, Bundle& bundle, const std::string& prefix, Json& meta) {
  using Clock = std::chrono::steady_clock;
  Json timings = Json::object();
  auto t0 = Clock::now();
  const auto lap = [&](const char* stage) {
    const auto now = Clock::now();
    timings[stage] = std::chrono::duration<double>(now - t0).count();
    t0 = now;
  };

  const Context c = prepare(cfg);
  stages.designs = needs_designs(cfg, stages);
  const std::vector<DesignedGain> dets = run_designs(c, stages, bundle, prefix);
  lap("design");
  if (stages.attacks || stages.simulate || stages.montecarlo) {
    const std::vector<NamedAttack> attacks = build_attacks(c, dets);
    write_attacks(c, dets, attacks, bundle, prefix);
    lap("attack");
    if (stages.simulate) {
      run_simulations(c, dets, attacks, bundle, prefix);
      lap("simulate");
    }
    if (stages.montecarlo) {
      run_montecarlo(c, dets, attacks, bundle, prefix);
      lap("montecarlo");
    }
  }
  Json detectors = Json::array();
  for (const auto& d : dets) detectors.push_back(d.name);
  meta["detectors"] = detectors;
  meta["dimensions"] = {{"n_x", c.sys.n_x()}, {"n_u", c.sys.n_u()}, {"n_y", c.sys.n_y()}, {"n_w", c.sys.n_w()}};
  if (cfg.output.timings) meta["timings_s"] = timings;
}

Json manifest_head(const std::string& command) {
  return {{"tool", "kldobs"}, {"version", KLDOBS_VERSION}, {"command", command}};
}

void run_command(const ScenarioConfig& cfg, const std::string& command, Stages stages) {
  Bundle bundle(cfg.output.directory);
  Json meta = manifest_head(command);
  Json scenario = scenario_meta(cfg);
  run_scenario(cfg, stages, bundle, "", scenario);
  meta["scenario"] = scenario;
  bundle.finalize(meta);
}

}  // namespace

void apply_overrides(ScenarioConfig& cfg, const Overrides& o) {
  std::vector<ConfigIssue> issues;
  if (o.out) cfg.output.directory = *o.out;
  if (o.seed) cfg.monitor.base_seed = *o.seed;
  if (o.trials) {
    if (*o.trials < 1) issues.push_back({0, "--trials", "must be >= 1"});
    cfg.monitor.trials = *o.trials;
  }
  if (o.decimate) {
    if (*o.decimate < 1) issues.push_back({0, "--decimate", "must be >= 1"});
    cfg.output.decimate = *o.decimate;
  }
  if (o.timings) cfg.output.timings = true;
  if (o.method == MethodChoice::kBlend) {
    if (o.instant) issues.push_back({0, "--instant", "cannot be combined with --method blend"});
    cfg.design.instants = {"blend"};
  } else if (o.method) {
    cfg.design.method = *o.method;
    cfg.design.method_for.clear();
  }
  if (o.instant) {
    if (*o.instant != "onset" && *o.instant != "one-step" && *o.instant != "steady") {
      issues.push_back({0, "--instant", "expected onset, one-step or steady"});
    }
    cfg.design.instants = {*o.instant};
  }
  const std::string& t = cfg.attack.target;
  if (t != "kalman" && t != "own" && t != "vector" &&
      std::find(cfg.design.instants.begin(), cfg.design.instants.end(), t) == cfg.design.instants.end()) {
    issues.push_back({0, "attack.target", "'" + t + "' is not among the instants selected on the command line"});
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kDimension:
    case ErrorKind::kNonFinite:
    case ErrorKind::kNotSymmetric:
    case ErrorKind::kNotPsd:
    case ErrorKind::kDomain:
    case ErrorKind::kStructure:
    case ErrorKind::kDegenerateImpact:
    case ErrorKind::kInvalidModel:
    case ErrorKind::kDetectabilityAssumption:
    case ErrorKind::kDegenerateNoise:
    case ErrorKind::kLemmaInapplicable:
    case ErrorKind::kMarginalStability:
      return 2;
    case ErrorKind::kRelaxationInfeasible:
    case ErrorKind::kInitializer:
      return 3;
    default:
      return 4;
  }
}

void cmd_design(const ScenarioConfig& cfg) {
  run_command(cfg, "design", {});
}

void cmd_attack(const ScenarioConfig& cfg) {
  run_command(cfg, "attack", {.attacks = true});
}

void cmd_simulate(const ScenarioConfig& cfg) {
  run_command(cfg, "simulate", {.attacks = true, .simulate = true});
}

void cmd_montecarlo(const ScenarioConfig& cfg) {
  run_command(cfg, "montecarlo", {.attacks = true, .montecarlo = true});
}

void cmd_run(const ScenarioConfig& cfg) {
  run_command(cfg, "run", {.attacks = true, .simulate = true, .montecarlo = true});
}

ScenarioConfig thermal_step_scenario() {
  ScenarioConfig cfg;
  cfg.name = "thermal-step";
  cfg.system.preset = "thermal";
  cfg.attack.sensors = {1, 3, 5};
  cfg.attack.schedule = ScheduleKind::kStep;
  cfg.attack.onset = 100;
  cfg.attack.target = "own";
  cfg.attack.random = true;
  cfg.design.instants = {"onset", "one-step", "steady"};
  cfg.monitor.horizon = 300;
  cfg.echo = {{"system.preset", "thermal"},  {"attack.sensors", "1, 3, 5"}, {"attack.schedule", "step"},
              {"attack.onset", "100"},       {"attack.target", "own"},     {"attack.random", "true"},
              {"design.instants", "onset, one-step, steady"},                 {"monitor.horizon", "300"}};
  return cfg;
}

ScenarioConfig thermal_ramp_scenario() {
  ScenarioConfig cfg;
  cfg.name = "thermal-ramp";
  cfg.system.preset = "thermal";
  cfg.attack.sensors = {1, 2, 3, 5};
  cfg.attack.schedule = ScheduleKind::kRamp;
  cfg.attack.onset = 200;
  cfg.attack.beta = 0.01;
  cfg.attack.target = "steady";
  cfg.attack.target_instant = Instant::steady();
  cfg.design.instants = {"onset", "one-step", "steady"};
  cfg.monitor.horizon = 800;
  cfg.echo = {{"system.preset", "thermal"}, {"attack.sensors", "1, 2, 3, 5"}, {"attack.schedule", "ramp"},
              {"attack.onset", "200"},      {"attack.beta", "0.01"},        {"attack.target", "steady"},
              {"design.instants", "onset, one-step, steady"},                  {"monitor.horizon", "800"}};
  return cfg;
}

void cmd_reproduce_thermal(const Overrides& o) {
  if (o.method || o.instant) {
    throw ConfigError({{0, o.method ? "--method" : "--instant", "reproduce-thermal runs a fixed set of designs"}});
  }
  ScenarioConfig step = thermal_step_scenario();
  ScenarioConfig ramp = thermal_ramp_scenario();
  apply_overrides(step, o);
  apply_overrides(ramp, o);

  Bundle bundle(step.output.directory);
  Json meta = manifest_head("reproduce-thermal");
  Json step_meta = scenario_meta(step);
  Json ramp_meta = scenario_meta(ramp);
  run_scenario(step, {.attacks = true, .simulate = true}, bundle, "step/", step_meta);
  run_scenario(ramp, {.attacks = true, .simulate = true, .montecarlo = true}, bundle, "ramp/", ramp_meta);
  meta["scenarios"] = {{"step", step_meta}, {"ramp", ramp_meta}};
  bundle.finalize(meta);
}

}  // namespace kldobs::bench
