// Command-line driver: run, sweep, train-threshold, fit-params, validate.
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <CLI11.hpp>

#include "crosslight/config.hpp"
#include "crosslight/errors.hpp"
#include "crosslight/estimation.hpp"
#include "crosslight/harness.hpp"
#include "crosslight/report.hpp"
#include "crosslight/trace_io.hpp"

namespace fs = std::filesystem;
using namespace crosslight;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitPartialSweep = 4;

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
};

ScenarioConfig load(const Common& c, std::vector<std::string> extra = {}) {
    std::vector<std::string> all = c.overrides;
    all.insert(all.end(), extra.begin(), extra.end());
    ScenarioConfig cfg = parse_config(c.config, all);
    apply_seed_env(cfg);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("-c,--config", c.config, "scenario file")->required();
    sub->add_option("--override", c.overrides, "KEY=VALUE, dotted keys");
    sub->add_option("--seed", c.seed, "seed, overrides CROSSLIGHT_SEED and the config");
}

nlohmann::json provenance() {
    char host[256] = {};
    gethostname(host, sizeof host - 1);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[64];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return {{"hostname", host}, {"timestamp", stamp}};
}

// "key=v1,v2" -> list of "key=v" overrides
std::vector<std::string> expand_grid(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError(ConfigError::Kind::syntax, "--grid '" + arg + "' is not KEY=v1,v2,...");
    const std::string key = arg.substr(0, eq);
    std::vector<std::string> out;
    std::stringstream ss(arg.substr(eq + 1));
    std::string v;
    while (std::getline(ss, v, ',')) out.push_back(key + "=" + v);
    if (out.empty()) throw ConfigError(ConfigError::Kind::syntax, "--grid '" + arg + "' has no values");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Traffic-light replay attack simulator"};
    app.require_subcommand(1);

    Common run_opts;
    std::string run_out;
    bool run_prov = false;
    auto* run = app.add_subcommand("run", "run one scenario and write trace.csv, cycles.csv, report.json");
    add_common(run, run_opts);
    run->add_option("-o,--out", run_out, "output directory")->required();
    run->add_flag("--provenance", run_prov, "embed hostname and timestamp in the report");

    Common sweep_opts;
    std::string sweep_out;
    std::vector<std::string> grids;
    int sweep_seeds = 1;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    bool sweep_prov = false;
    auto* sw = app.add_subcommand("sweep", "run a grid of scenarios over seeds and write sweep.json");
    add_common(sw, sweep_opts);
    sw->add_option("--grid", grids, "KEY=v1,v2,... (repeatable, cartesian product)");
    sw->add_option("--seeds", sweep_seeds, "seeds per grid point, counting up from the config seed")
        ->check(CLI::PositiveNumber);
    sw->add_option("-j,--workers", workers, "parallel workers")->check(CLI::PositiveNumber);
    sw->add_option("-o,--out", sweep_out, "output directory")->required();
    sw->add_flag("--provenance", sweep_prov, "embed hostname and timestamp in the report");

    Common train_opts;
    std::string train_out;
    auto* train = app.add_subcommand("train-threshold", "train per-pair thresholds on a benign run");
    add_common(train, train_opts);
    train->add_option("-o,--out", train_out, "thresholds file")->required();

    std::string fit_trace, fit_out;
    auto* fit = app.add_subcommand("fit-params", "fit k, beta, lambda per pair from a trace CSV");
    fit->add_option("--trace", fit_trace, "trace.csv")->required();
    fit->add_option("-o,--out", fit_out, "parameters file")->required();

    Common val_opts;
    auto* val = app.add_subcommand("validate", "parse and validate a scenario file");
    add_common(val, val_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run) {
            const ScenarioConfig cfg = load(run_opts);
            const RunOutput out = run_scenario(cfg);
            fs::create_directories(run_out);
            emit_trace(out.trace, run_out);
            nlohmann::json rep = run_report(out.metrics, {cfg.seed, out.trace.residual_tol, out.trace.thresholds,
                                                          out.trace.noise});
            if (run_prov) rep["provenance"] = provenance();
            write_text_file(fs::path(run_out) / "report.json", dump_report(rep));
            return kExitOk;
        }
        if (*sw) {
            std::vector<std::vector<std::string>> points{{}};
            for (const auto& g : grids) {
                std::vector<std::vector<std::string>> next;
                for (const auto& p : points)
                    for (const auto& v : expand_grid(g)) {
                        auto q = p;
                        q.push_back(v);
                        next.push_back(q);
                    }
                points = next;
            }
            std::vector<ScenarioConfig> configs;
            std::vector<SweepEntry> entries;
            for (const auto& p : points) {
                const ScenarioConfig base = load(sweep_opts, p);
                std::string label;
                for (const auto& o : p) label += (label.empty() ? "" : ";") + o;
                for (int s = 0; s < sweep_seeds; ++s) {
                    ScenarioConfig c = base;
                    c.seed = base.seed + static_cast<std::uint64_t>(s);
                    configs.push_back(c);
                    entries.push_back({label, c.seed, {}});
                }
            }
            const auto items = sweep(configs, workers);
            bool failed = false;
            for (std::size_t i = 0; i < items.size(); ++i) {
                entries[i].item = items[i];
                failed = failed || !items[i].ok;
            }
            fs::create_directories(sweep_out);
            nlohmann::json rep = sweep_report(entries);
            if (sweep_prov) rep["provenance"] = provenance();
            write_text_file(fs::path(sweep_out) / "sweep.json", dump_report(rep));
            return failed ? kExitPartialSweep : kExitOk;
        }
        if (*train) {
            const ScenarioConfig cfg = load(train_opts);
            const Pair th = train_thresholds(cfg, resolve_noise(cfg));
            write_text_file(train_out, thresholds_report(th, cfg.detector.kappa, cfg.detector.calibration_cycles));
            return kExitOk;
        }
        if (*fit) {
            const auto steps = parse_steps_csv(read_text_file(fit_trace));
            std::string text = "# fitted occupancy parameters\n";
            for (int i = 0; i < 2; ++i) {
                std::vector<double> q, o;
                std::vector<char> flags;
                for (const auto& r : steps) {
                    q.push_back(r.q[i]);
                    o.push_back(r.o_true[i]);
                    flags.push_back((r.clamp_flags & (kOccupancyClamp << i)) != 0);
                }
                std::vector<RegressionSample> samples;
                for (std::size_t t = 0; t + 1 < q.size(); ++t) samples.push_back({q[t], o[t], o[t + 1], flags[t + 1] != 0});
                const FitResult f = fit_occupancy_params(samples);
                text += "\n" + fit_report(f, "pair" + std::to_string(i + 1));
                std::cerr << "pair" << i + 1 << ": " << f.n << " samples, " << f.excluded << " clamped excluded\n";
            }
            write_text_file(fit_out, text);
            return kExitOk;
        }
        if (*val) {
            load(val_opts);
            std::cout << val_opts.config << ": ok\n";
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ScenarioError& e) {
        std::cerr << (e.numeric() ? "numeric fault: " : "error: ") << e.what() << "\nstate: " << e.snapshot() << '\n';
        return e.numeric() ? kExitNumeric : kExitOther;
    } catch (const NumericFault& e) {
        std::cerr << "numeric fault: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
    return kExitOther;
}
