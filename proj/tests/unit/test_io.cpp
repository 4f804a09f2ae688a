#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "crosslight/config.hpp"
#include "crosslight/errors.hpp"
#include "crosslight/report.hpp"
#include "crosslight/trace_io.hpp"

using namespace crosslight;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = CROSSLIGHT_SCENARIOS;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("crosslight_test_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int cli(const std::string& args) {
    const std::string cmd = std::string("\"") + CROSSLIGHT_CLI + "\" " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string flagship_text() { return read_text_file(kScenarios / "fig1d.toml"); }

ScenarioConfig noisy_run() { return parse_config(kScenarios / "threshold.toml"); }

}  // namespace

TEST(Csv, RowCountAndColumns) {
    const ScenarioConfig c = parse_config(kScenarios / "fig1d.toml");
    const TraceLog t = run_scenario(c).trace;
    const std::string csv = format_steps_csv(t.steps);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(c.horizon_s / c.dt_s) + 1);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    const std::string header = csv.substr(0, csv.find('\n'));
    EXPECT_NE(header.find("o_true1"), std::string::npos);
    EXPECT_NE(header.find("o_reported1"), std::string::npos);
    EXPECT_EQ(header.rfind("step,t,", 0), 0u);
}

TEST(Csv, RoundTripBitExact) {
    const ScenarioConfig c = noisy_run();
    const RunOutput out = run_scenario(c);
    const fs::path dir = scratch("roundtrip");
    emit_trace(out.trace, dir);
    TraceLog back = read_trace(dir);
    EXPECT_EQ(back.steps, out.trace.steps);
    EXPECT_EQ(back.cycles, out.trace.cycles);
    back.residual_tol = out.trace.residual_tol;
    back.thresholds = out.trace.thresholds;
    back.noise = out.trace.noise;
    EXPECT_EQ(compute_metrics(back, c), out.metrics);
    EXPECT_EQ(format_steps_csv(back.steps), format_steps_csv(out.trace.steps));
}

TEST(Csv, MalformedRejected) {
    EXPECT_ANY_THROW(parse_steps_csv("step,t\n1,2\n"));
    std::string csv = format_steps_csv({StepRecord{}});
    csv.back() = ',';
    csv += "junk\n";
    EXPECT_ANY_THROW(parse_steps_csv(csv));
}

TEST(Report, SchemaAndDeterminism) {
    const ScenarioConfig c = parse_config(kScenarios / "fig2.toml");
    const RunOutput out = run_scenario(c);
    RunInfo info{c.seed, out.trace.residual_tol, out.trace.thresholds, out.trace.noise};
    const nlohmann::json j = run_report(out.metrics, info);
    EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
    EXPECT_EQ(j.at("kind"), "run");
    EXPECT_EQ(metrics_from_json(j.at("metrics")), out.metrics);
    EXPECT_EQ(dump_report(j), dump_report(run_report(out.metrics, info)));
    EXPECT_EQ(dump_report(nlohmann::json::parse(dump_report(j))), dump_report(j));
}

TEST(Report, SweepAggregates) {
    std::vector<SweepEntry> entries;
    auto item = [](std::optional<double> latency, double fpr) {
        SweepItem it;
        it.ok = true;
        it.metrics.target_pair = 0;
        it.metrics.detection_latency_s = latency;
        it.metrics.false_positive_rate = fpr;
        return it;
    };
    entries.push_back({"low", 1, item(60.0, 0.0)});
    entries.push_back({"low", 2, item(120.0, 0.1)});
    entries.push_back({"high", 1, item(std::nullopt, 0.2)});
    entries.push_back({"high", 2, item(0.0, 0.0)});
    SweepItem failed;
    failed.error = "boom";
    entries.push_back({"high", 3, failed});
    const nlohmann::json j = sweep_report(entries);
    EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
    ASSERT_EQ(j.at("items").size(), 5u);
    EXPECT_EQ(j.at("items")[2].at("seed"), 1);
    EXPECT_EQ(j.at("items")[2].at("label"), "high");
    const auto& agg = j.at("aggregates");
    ASSERT_EQ(agg.size(), 2u);
    EXPECT_EQ(agg[0].at("label"), "low");
    EXPECT_DOUBLE_EQ(agg[0].at("detection_rate").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(agg[0].at("mean_detection_latency_s").get<double>(), 90.0);
    EXPECT_DOUBLE_EQ(agg[0].at("mean_false_positive_rate").get<double>(), 0.05);
    EXPECT_DOUBLE_EQ(agg[1].at("detection_rate").get<double>(), 0.5);
    EXPECT_EQ(dump_report(j), dump_report(sweep_report(entries)));
}

TEST(Config, FlagshipValues) {
    const ScenarioConfig c = parse_config(kScenarios / "fig1d.toml");
    EXPECT_EQ(c.f, 0.7);
    EXPECT_EQ(c.attack.start_time_s, 420.0);
    EXPECT_TRUE(c.attack.enabled);
    EXPECT_EQ(c.attack.target_pair, 0);
    EXPECT_EQ(c.pairs[0].intensity_vph, 700.0);
    EXPECT_EQ(c.pairs[1].intensity_vph, 400.0);
    EXPECT_EQ(c.horizon_s, 1800.0);
    EXPECT_EQ(c.arrival_mode, ArrivalMode::poisson);
}

TEST(Config, OverrideEqualsEdit) {
    const std::vector<std::string> ov = {"attack.enabled=false"};
    const ScenarioConfig a = parse_config(kScenarios / "fig1d.toml", ov);
    std::string text = flagship_text();
    const auto pos = text.find("enabled = true");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 14, "enabled = false");
    const ScenarioConfig b = parse_config_text(text, "edited");
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a.attack.enabled);
    const std::vector<std::string> mode = {"arrival_mode=deterministic"};
    EXPECT_EQ(parse_config(kScenarios / "fig1d.toml", mode).arrival_mode, ArrivalMode::deterministic);
}

TEST(Config, CycleBudgetRejected) {
    const std::vector<std::string> ov = {"min_green_s=31"};
    EXPECT_THROW(parse_config(kScenarios / "fig1d.toml", ov), CycleBudgetError);
}

TEST(Config, DistinctErrors) {
    auto kind_of = [](auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            return e.kind();
        }
        ADD_FAILURE() << "no ConfigError";
        return ConfigError::Kind::invalid;
    };
    EXPECT_EQ(kind_of([] { parse_config(kScenarios / "does_not_exist.toml"); }), ConfigError::Kind::missing_file);
    EXPECT_EQ(kind_of([] { parse_config_text(flagship_text() + "\nbogus_key = 3\n", "x"); }),
              ConfigError::Kind::unknown_key);
    EXPECT_EQ(kind_of([] {
                  const std::vector<std::string> ov = {"pair1.bogus=1"};
                  parse_config_text(flagship_text(), "x", ov);
              }),
              ConfigError::Kind::unknown_key);
    EXPECT_EQ(kind_of([] { parse_config_text("horizon_s = = 3\n", "x"); }), ConfigError::Kind::syntax);
    EXPECT_EQ(kind_of([] {
                  const std::vector<std::string> ov = {"f=-1"};
                  parse_config_text(flagship_text(), "x", ov);
              }),
              ConfigError::Kind::invalid);
    try {
        const std::vector<std::string> ov = {"pair2.saturation_vph=-1"};
        parse_config_text(flagship_text(), "x", ov);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("pair2.saturation_vph"), std::string::npos) << e.what();
    }
}

TEST(Config, SeedSources) {
    EXPECT_EQ(parse_seed("42", "x"), 42u);
    EXPECT_THROW(parse_seed("-3", "x"), ConfigError);
    EXPECT_THROW(parse_seed("abc", "x"), ConfigError);
    ScenarioConfig c = parse_config(kScenarios / "fig1d.toml");
    ::setenv("CROSSLIGHT_SEED", "77", 1);
    apply_seed_env(c);
    ::unsetenv("CROSSLIGHT_SEED");
    EXPECT_EQ(c.seed, 77u);
}

TEST(ShippedScenarios, ValidateAndRun) {
    for (const char* name : {"fig1d.toml", "fig2.toml", "threshold.toml"}) {
        const fs::path p = kScenarios / name;
        EXPECT_EQ(cli("validate -c \"" + p.string() + "\""), 0) << name;
    }
}

TEST(Cli, RunWritesArtifacts) {
    const fs::path out = scratch("run");
    ASSERT_EQ(cli("run -c \"" + (kScenarios / "fig1d.toml").string() + "\" -o \"" + out.string() + "\""), 0);
    ASSERT_TRUE(fs::exists(out / "trace.csv"));
    ASSERT_TRUE(fs::exists(out / "cycles.csv"));
    const nlohmann::json j = nlohmann::json::parse(read_text_file(out / "report.json"));
    EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
    EXPECT_EQ(j.at("seed"), 1);
    const std::string first = read_text_file(out / "report.json");
    ASSERT_EQ(cli("run -c \"" + (kScenarios / "fig1d.toml").string() + "\" -o \"" + out.string() + "\""), 0);
    EXPECT_EQ(read_text_file(out / "report.json"), first);
    EXPECT_EQ(j.find("hostname"), j.end());
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("exit");
    const std::string fig1d = "\"" + (kScenarios / "fig1d.toml").string() + "\"";
    write_text_file(dir / "bad.toml", flagship_text() + "\nunknown_thing = 1\n");
    EXPECT_EQ(cli("validate -c \"" + (dir / "bad.toml").string() + "\""), 2);
    EXPECT_EQ(cli("validate -c \"" + (dir / "missing.toml").string() + "\""), 2);
    EXPECT_EQ(cli("run -c " + fig1d + " -o \"" + (dir / "num").string() +
                  "\" --override pair1.initial_queue=1e308 --override pair1.k=10"),
              3);
    const fs::path sw = dir / "sweep";
    EXPECT_EQ(cli("sweep -c " + fig1d + " --seeds 1 --grid pair1.k=0.004,10 --override pair1.initial_queue=1e308 -o \"" +
                  sw.string() + "\""),
              4);
    const nlohmann::json j = nlohmann::json::parse(read_text_file(sw / "sweep.json"));
    ASSERT_EQ(j.at("items").size(), 2u);
    EXPECT_EQ(j.at("items")[0].at("status"), "ok");
    EXPECT_EQ(j.at("items")[1].at("status"), "numeric_fault");
}

TEST(Cli, SeedPrecedence) {
    const fs::path dir = scratch("seed");
    const std::string fig1d = "\"" + (kScenarios / "fig1d.toml").string() + "\"";
    ::setenv("CROSSLIGHT_SEED", "5", 1);
    const int a = cli("run -c " + fig1d + " -o \"" + (dir / "env").string() + "\"");
    const int b = cli("run -c " + fig1d + " --seed 9 -o \"" + (dir / "flag").string() + "\"");
    ::unsetenv("CROSSLIGHT_SEED");
    ASSERT_EQ(a, 0);
    ASSERT_EQ(b, 0);
    EXPECT_EQ(nlohmann::json::parse(read_text_file(dir / "env" / "report.json")).at("seed"), 5);
    EXPECT_EQ(nlohmann::json::parse(read_text_file(dir / "flag" / "report.json")).at("seed"), 9);
}

TEST(Cli, SweepWorkerCountInvariant) {
    const fs::path dir = scratch("sweepj");
    const std::string base = "sweep -c \"" + (kScenarios / "fig2.toml").string() +
                             "\" --seeds 3 --grid noise.meas_power_frac=0.00015,0.00394 ";
    ASSERT_EQ(cli(base + "-j 1 -o \"" + (dir / "one").string() + "\""), 0);
    ASSERT_EQ(cli(base + "-j 8 -o \"" + (dir / "eight").string() + "\""), 0);
    const std::string one = read_text_file(dir / "one" / "sweep.json");
    EXPECT_EQ(one, read_text_file(dir / "eight" / "sweep.json"));
    const nlohmann::json j = nlohmann::json::parse(one);
    EXPECT_EQ(j.at("items").size(), 6u);
    EXPECT_EQ(j.at("aggregates").size(), 2u);
}

TEST(Cli, FitParamsFeedsParamsFile) {
    const fs::path dir = scratch("fit");
    const std::string fig1d = "\"" + (kScenarios / "fig1d.toml").string() + "\"";
    ASSERT_EQ(cli("run -c " + fig1d + " -o \"" + (dir / "run").string() + "\""), 0);
    ASSERT_EQ(cli("fit-params --trace \"" + (dir / "run" / "trace.csv").string() + "\" -o \"" +
                  (dir / "params.toml").string() + "\""),
              0);
    const FitPair fit = read_params_file(dir / "params.toml");
    ASSERT_TRUE(fit[0].has_value());
    EXPECT_NEAR(fit[0]->k, 0.004, 1e-9);
    EXPECT_NEAR(fit[0]->beta, 0.5, 1e-9);
    const std::vector<std::string> ov = {"params_file=\"" + (dir / "params.toml").string() + "\""};
    const ScenarioConfig c = parse_config(kScenarios / "fig1d.toml", ov);
    EXPECT_EQ(c.pairs[0].k, fit[0]->k);
    EXPECT_EQ(c.pairs[0].beta, fit[0]->beta);
}

TEST(Cli, TrainThresholdFeedsThresholdsFile) {
    const fs::path dir = scratch("train");
    const fs::path cfg = kScenarios / "threshold.toml";
    ASSERT_EQ(cli("train-threshold -c \"" + cfg.string() + "\" -o \"" + (dir / "th.toml").string() + "\""), 0);
    const Pair th = read_thresholds_file(dir / "th.toml");
    const ScenarioConfig base = parse_config(cfg);
    const Pair direct = train_thresholds(base, resolve_noise(base));
    EXPECT_EQ(th, direct);
    const std::vector<std::string> ov = {"detector.thresholds_file=\"" + (dir / "th.toml").string() + "\""};
    const ScenarioConfig c = parse_config(cfg, ov);
    ASSERT_TRUE(c.detector.thresholds.has_value());
    EXPECT_EQ(*c.detector.thresholds, direct);
    EXPECT_EQ(run_scenario(c).metrics, run_scenario(base).metrics);
}
