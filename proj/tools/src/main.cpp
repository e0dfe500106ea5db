#include <cstdio>
#include <functional>
#include <string>

#include "CLI11.hpp"

#include "kldobs/bench/commands.hpp"
#include "kldobs/bench/config.hpp"

using kldobs::bench::Overrides;
using kldobs::bench::ScenarioConfig;

int main(int argc, char** argv) {
  CLI::App app{"kldobs: KLD-based observer design, attack synthesis and detection benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", KLDOBS_VERSION);

  std::string config_path;
  Overrides o;
  std::string method_text;
  std::uint64_t seed = 0;
  int trials = 0, decimate = 0;
  std::string out_dir, instant;

  const auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", config_path, "Scenario configuration file")->check(CLI::ExistingFile);
    if (needs_config) cfg->required();
    sub->add_option("--seed", seed, "Base seed for simulation and Monte Carlo");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--trials", trials, "Monte Carlo trials");
    sub->add_option("--decimate", decimate, "Stride of the decimated CSV files");
    sub->add_option("--method", method_text, "Design method for every instant")
        ->check(CLI::IsMember({"lmi", "ao", "admm", "blend"}));
    sub->add_option("--instant", instant, "Design only this instant")
        ->check(CLI::IsMember({"onset", "one-step", "steady"}));
    sub->add_flag("--timings", o.timings, "Record wall times in reports and the manifest");
  };

  using Command = std::function<void(const ScenarioConfig&)>;
  const std::pair<const char*, Command> commands[] = {
      {"design", kldobs::bench::cmd_design},     {"attack", kldobs::bench::cmd_attack},
      {"simulate", kldobs::bench::cmd_simulate}, {"montecarlo", kldobs::bench::cmd_montecarlo},
      {"run", kldobs::bench::cmd_run},
  };
  const char* const help[] = {"Synthesize observer gains and write design reports",
                              "Synthesize worst-case and reference attacks",
                              "Simulate single traces with residual and KLD series",
                              "Estimate detection probabilities by Monte Carlo",
                              "Full pipeline: design, attack, simulate, Monte Carlo"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    subs.push_back(app.add_subcommand(commands[i].first, help[i]));
    add_common(subs.back(), true);
  }
  CLI::App* reproduce = app.add_subcommand("reproduce-thermal", "Step and ramp scenarios on the thermal plant");
  add_common(reproduce, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) o.seed = seed;
  if (chosen->count("--out")) o.out = out_dir;
  if (chosen->count("--trials")) o.trials = trials;
  if (chosen->count("--decimate")) o.decimate = decimate;
  if (chosen->count("--instant")) o.instant = instant;
  if (chosen->count("--method")) o.method = kldobs::bench::parse_method_choice(method_text);

  try {
    if (chosen == reproduce) {
      if (!config_path.empty()) {
        throw kldobs::bench::ConfigError({{0, "--config", "reproduce-thermal takes no configuration file"}});
      }
      kldobs::bench::cmd_reproduce_thermal(o);
    } else {
      ScenarioConfig cfg = kldobs::bench::load_config(config_path);
      kldobs::bench::apply_overrides(cfg, o);
      for (std::size_t i = 0; i < subs.size(); ++i) {
        if (subs[i] == chosen) commands[i].second(cfg);
      }
    }
  } catch (const kldobs::Error& e) {
    std::fprintf(stderr, "kldobs: %s\n", e.what());
    return kldobs::bench::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "kldobs: error: %s\n", e.what());
    return 4;
  }
  return 0;
}
