#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kldobs/bench/commands.hpp"
#include "kldobs/bench/config.hpp"
#include "kldobs/bench/output.hpp"
#include "kldobs/bench/preset.hpp"
#include "support/oracles.hpp"

using namespace kldobs;
using namespace kldobs::bench;
namespace fs = std::filesystem;

namespace {

const char* kInline = R"(
name = tiny
[system]
a = [[0.9, 0.1],
     [0.0, 0.8]]
c = [[1, 0], [0, 1], [1, 1]]
b_omega = [[0.1, 0, 0, 0, 0], [0, 0.1, 0, 0, 0]]
d_omega = [[0, 0, 0.1, 0, 0],
           [0, 0, 0, 0.1, 0],
           [0, 0, 0, 0, 0.1]]
[attack]
sensors = 1, 3
onset = 10
[design]
instants = onset
[monitor]
horizon = 40
trials = 30
base_seed = 5
[output]
decimate = 7
)";

std::vector<ConfigIssue> issues_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<ConfigIssue>& issues, const std::string& field) {
  for (const auto& i : issues) {
    if (i.field.find(field) != std::string::npos) return true;
  }
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kldobs_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Preset, Thermal) {
  const LtiSystem sys = preset("thermal");
  EXPECT_EQ(sys.n_x(), 6);
  EXPECT_EQ(sys.n_y(), 5);
  EXPECT_EQ(sys.n_u(), 4);
  EXPECT_LT(oracle::spectral_radius(sys.a()), 1.0);
  for (int i = 0; i < 5; ++i) {
    int halves = 0;
    for (int j = 0; j < 6; ++j) halves += sys.c()(i, j) == 0.5;
    EXPECT_EQ(halves, 2) << "row " << i;
    EXPECT_NEAR(sys.c().row(i).sum(), 1.0, 1e-15);
  }
  EXPECT_THROW(preset("nope"), Error);
}

TEST(Config, ThermalPreset) {
  const ScenarioConfig cfg = parse_config("[system]\npreset = thermal\n[attack]\nsensors = 1, 3, 5\n");
  const LtiSystem sys = build_system(cfg.system);
  EXPECT_EQ(sys.n_x(), 6);
  EXPECT_EQ(sys.n_y(), 5);
  EXPECT_EQ(sys.n_u(), 4);
  EXPECT_EQ(cfg.attack.sensors, (std::vector<int>{1, 3, 5}));
  EXPECT_EQ(cfg.monitor.horizon, 300);
  EXPECT_EQ(cfg.design.method, MethodChoice::kBest);
}

TEST(Config, InlineMultilineMatrices) {
  const ScenarioConfig cfg = parse_config(kInline);
  EXPECT_EQ(cfg.name, "tiny");
  const LtiSystem sys = build_system(cfg.system);
  EXPECT_EQ(sys.n_x(), 2);
  EXPECT_EQ(sys.n_y(), 3);
  EXPECT_DOUBLE_EQ(sys.a()(0, 1), 0.1);
  EXPECT_DOUBLE_EQ(sys.d_omega()(2, 4), 0.1);
  EXPECT_EQ(cfg.output.decimate, 7);
}

TEST(Config, MissingSensors) {
  const auto issues = issues_of("[system]\npreset = thermal\n");
  EXPECT_TRUE(mentions(issues, "attack.sensors"));
}

TEST(Config, BetaOutOfRange) {
  const auto issues = issues_of("[system]\npreset = thermal\n[attack]\nsensors = 1\nschedule = ramp\nbeta = 1.5\n");
  EXPECT_TRUE(mentions(issues, "attack.beta"));
}

TEST(Config, CollectsEveryIssue) {
  const auto issues = issues_of(
      "[system]\npreset = thermal\nbogus = 1\n[attack]\nsensors = 3, 1\nepsilon = -1\n"
      "[monitor]\nfalse_alarm = 2\nhorizon = 0\n[nowhere]\n");
  EXPECT_GE(issues.size(), 5u);
  EXPECT_TRUE(mentions(issues, "system.bogus"));
  EXPECT_TRUE(mentions(issues, "attack.sensors"));
  EXPECT_TRUE(mentions(issues, "attack.epsilon"));
  EXPECT_TRUE(mentions(issues, "monitor.false_alarm"));
  EXPECT_TRUE(mentions(issues, "monitor.horizon"));
  try {
    parse_config("[system]\npreset = thermal\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_EQ(exit_code_for(e.kind()), 2);
  }
}

TEST(Config, RejectsDuplicatesAndConflicts) {
  EXPECT_TRUE(mentions(issues_of("[system]\npreset = thermal\npreset = thermal\n[attack]\nsensors = 1\n"),
                       "system.preset"));
  EXPECT_FALSE(issues_of("[system]\npreset = thermal\na = [[1]]\n[attack]\nsensors = 1\n").empty());
  EXPECT_TRUE(mentions(issues_of("[system]\npreset = thermal\n[attack]\nsensors = 1, 2\nvector = 1, 2, 3\n"),
                       "attack.vector"));
}

TEST(Config, ParseMatrixAndVector) {
  const Matrix m = parse_matrix("[[1, 2], [3, 4.5]]");
  EXPECT_EQ(m.rows(), 2);
  EXPECT_DOUBLE_EQ(m(1, 1), 4.5);
  EXPECT_EQ(parse_matrix("[1, 2, 3]").rows(), 1);
  EXPECT_EQ(parse_vector("1, 2, 3").size(), 3);
  EXPECT_EQ(parse_vector("[1e-3]")(0), 1e-3);
  EXPECT_ANY_THROW(parse_matrix("[[1, 2], [3]]"));
}

TEST(Overrides, ApplyAndValidate) {
  ScenarioConfig cfg = parse_config(kInline);
  Overrides o;
  o.seed = 99;
  o.trials = 3;
  o.decimate = 2;
  o.out = "elsewhere";
  apply_overrides(cfg, o);
  EXPECT_EQ(cfg.monitor.base_seed, 99u);
  EXPECT_EQ(cfg.monitor.trials, 3);
  EXPECT_EQ(cfg.output.decimate, 2);
  EXPECT_EQ(cfg.output.directory, "elsewhere");
  Overrides bad;
  bad.trials = 0;
  EXPECT_THROW(apply_overrides(cfg, bad), ConfigError);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::kConfig), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kDimension), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kRelaxationInfeasible), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kInitializer), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kNumericalFailure), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::kDivergence), 4);
}

TEST(Output, FormatAndCsv) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  Series s;
  s.add("x", {0, 1, 2, 3, 4, 5, 6});
  s.add("y", {1, 1, 1, 1, 1, 1, 1});
  EXPECT_EQ(render_csv(s, 1).substr(0, 10), "step,x,y\n0");
  EXPECT_EQ(render_csv(s, 3), "step,x,y\n0,0,1\n3,3,1\n6,6,1\n");
  EXPECT_EQ(render_csv(s, 4), "step,x,y\n0,0,1\n4,4,1\n6,6,1\n");
}

TEST(Output, Sha256) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Output, JsonRoundTrip) {
  const Matrix m = (Matrix(2, 2) << 0.1, 1.0 / 3.0, -2e-300, 7.0).finished();
  const Json j = to_json(m);
  const std::string text = j.dump(2);
  const Json back = Json::parse(text);
  EXPECT_EQ(back.dump(2), text);
  EXPECT_EQ(back[0][1].get<double>(), 1.0 / 3.0);
  EXPECT_TRUE(to_json(std::nan("")).is_null());
}

TEST(Output, BundleManifestAndDiscard) {
  const fs::path root = scratch("bundle");
  {
    Bundle b(root / "a" / "b");
    b.write_text("note.txt", "hello");
    b.finalize(Json{{"tool", "test"}});
  }
  const Json manifest = Json::parse(slurp(root / "a" / "b" / "manifest.json"));
  ASSERT_EQ(manifest["files"].size(), 1u);
  EXPECT_EQ(manifest["files"][0]["sha256"], sha256_hex("hello"));
  EXPECT_EQ(manifest["files"][0]["bytes"], 5);

  const fs::path other = scratch("discard");
  {
    Bundle b(other / "x");
    Series s;
    s.add("v", {1, 2, 3});
    b.write_series("s", s, 2);
    EXPECT_TRUE(fs::exists(other / "x" / "s.csv"));
    EXPECT_TRUE(fs::exists(other / "x" / "s_full.csv"));
  }
  EXPECT_FALSE(fs::exists(other / "x"));
  fs::remove_all(root);
  fs::remove_all(other);
}

TEST(Commands, RunIsByteDeterministic) {
  ScenarioConfig cfg = parse_config(kInline);
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  cfg.output.directory = a.string();
  cmd_run(cfg);
  cfg.output.directory = b.string();
  cmd_run(cfg);
  const std::string ma = slurp(a / "manifest.json");
  ASSERT_FALSE(ma.empty());
  EXPECT_EQ(ma, slurp(b / "manifest.json"));
  const Json files = Json::parse(ma)["files"];
  EXPECT_GT(files.size(), 3u);
  for (const auto& f : files) {
    const std::string body = slurp(a / f["path"].get<std::string>());
    EXPECT_EQ(sha256_hex(body), f["sha256"].get<std::string>()) << f["path"];
  }
  fs::remove_all(a);
  fs::remove_all(b);
}
