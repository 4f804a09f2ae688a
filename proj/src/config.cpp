#include "crosslight/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "crosslight/errors.hpp"
#include "crosslight/numfmt.hpp"

namespace crosslight {

namespace {

using Kind = ConfigError::Kind;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::set<std::string> pair_keys = {"intensity_vph", "saturation_vph", "k", "beta", "lambda",
                                                    "initial_queue", "initial_occupancy", "initial_green_s"};
    static const std::map<std::string, std::set<std::string>> s = {
        {"", {"horizon_s", "dt_s", "cycle_time_s", "f", "min_green_s", "alpha", "arrival_mode", "delta_rule", "seed",
              "params_file"}},
        {"pair1", pair_keys},
        {"pair2", pair_keys},
        {"noise", {"process_power_frac", "meas_power_frac", "calibration_window_s"}},
        {"attack", {"enabled", "start_time_s", "target_pair", "falsify_reference"}},
        {"detector",
         {"kind", "g", "window", "kappa", "calibration_cycles", "warmup_cycles", "residual_factor",
          "residual_window_start_s", "residual_window_end_s", "thresholds", "thresholds_file", "retrain"}},
        {"mitigation", {"enabled"}},
    };
    return s;
}

class Reader {
public:
    Reader(const toml::table& t, std::string source) : t_(t), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(Kind::invalid, source_ + ": " + key + ": " + msg);
    }

    const toml::node* find(const std::string& key) const { return t_.at_path(key).node(); }

    void number(const std::string& key, double& out) const {
        const toml::node* n = find(key);
        if (!n) return;
        if (auto v = n->value_exact<double>())
            out = *v;
        else if (auto i = n->value_exact<int64_t>())
            out = static_cast<double>(*i);
        else
            fail(key, "expected a number");
    }

    void integer(const std::string& key, int& out) const {
        const toml::node* n = find(key);
        if (!n) return;
        auto i = n->value_exact<int64_t>();
        if (!i || *i < std::numeric_limits<int>::min() || *i > std::numeric_limits<int>::max())
            fail(key, "expected an integer");
        out = static_cast<int>(*i);
    }

    void boolean(const std::string& key, bool& out) const {
        const toml::node* n = find(key);
        if (!n) return;
        auto b = n->value_exact<bool>();
        if (!b) fail(key, "expected true or false");
        out = *b;
    }

    std::optional<std::string> string(const std::string& key) const {
        const toml::node* n = find(key);
        if (!n) return std::nullopt;
        auto s = n->value_exact<std::string>();
        if (!s) fail(key, "expected a string");
        return *s;
    }

    std::optional<Pair> pair(const std::string& key) const {
        const toml::node* n = find(key);
        if (!n) return std::nullopt;
        const toml::array* a = n->as_array();
        if (!a || a->size() != 2) fail(key, "expected an array of two numbers");
        Pair out{};
        for (std::size_t i = 0; i < 2; ++i) {
            const toml::node& e = *a->get(i);
            if (auto v = e.value_exact<double>())
                out[i] = *v;
            else if (auto iv = e.value_exact<int64_t>())
                out[i] = static_cast<double>(*iv);
            else
                fail(key, "expected an array of two numbers");
        }
        return out;
    }

private:
    const toml::table& t_;
    std::string source_;
};

toml::table parse_toml(std::string_view text, std::string_view source) {
    try {
        return toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << e.source().begin.line << ":" << e.source().begin.column
           << ": syntax error: " << e.description();
        throw ConfigError(Kind::syntax, os.str());
    }
}

void check_keys(const toml::table& t, std::string_view source) {
    const auto& s = schema();
    for (const auto& [k, v] : t) {
        const std::string key(k.str());
        if (const toml::table* sub = v.as_table()) {
            auto it = s.find(key);
            if (key.empty() || it == s.end())
                throw ConfigError(Kind::unknown_key, std::string(source) + ": unknown section '" + key + "'");
            for (const auto& [sk, sv] : *sub) {
                (void)sv;
                if (!it->second.count(std::string(sk.str())))
                    throw ConfigError(Kind::unknown_key, std::string(source) + ": unknown key '" + key + "." +
                                                             std::string(sk.str()) + "'");
            }
        } else if (!s.at("").count(key)) {
            throw ConfigError(Kind::unknown_key, std::string(source) + ": unknown key '" + key + "'");
        }
    }
}

void apply_override(toml::table& t, const std::string& item, std::string_view source) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError(Kind::syntax, std::string(source) + ": override '" + item + "' is not KEY=VALUE");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);

    toml::table parsed;
    try {
        parsed = toml::parse("v = " + value);
    } catch (const toml::parse_error&) {
        parsed.insert_or_assign("v", value);
    }
    toml::table* target = &t;
    std::string leaf = key;
    if (const auto dot = key.find('.'); dot != std::string::npos) {
        const std::string section = key.substr(0, dot);
        leaf = key.substr(dot + 1);
        if (!t.contains(section)) t.insert(section, toml::table{});
        target = t[section].as_table();
        if (!target)
            throw ConfigError(Kind::unknown_key, std::string(source) + ": override '" + key + "' is not a key");
    }
    target->insert_or_assign(leaf, *parsed.get("v"));
}

template <class E>
E enum_value(const Reader& r, const std::string& key, const std::map<std::string, E>& names, E fallback) {
    const auto s = r.string(key);
    if (!s) return fallback;
    auto it = names.find(*s);
    if (it == names.end()) {
        std::string allowed;
        for (const auto& [n, v] : names) allowed += (allowed.empty() ? "" : ", ") + n;
        r.fail(key, "must be one of " + allowed);
    }
    return it->second;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(Kind::missing_file, path.string() + ": cannot open file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ScenarioConfig parse_config_text(std::string_view text, std::string_view source,
                                 std::span<const std::string> overrides, const std::filesystem::path& base_dir) {
    toml::table t = parse_toml(text, source);
    for (const auto& o : overrides) apply_override(t, o, "override");
    check_keys(t, source);

    const Reader r(t, std::string(source));
    ScenarioConfig c;
    r.number("horizon_s", c.horizon_s);
    r.number("dt_s", c.dt_s);
    r.number("cycle_time_s", c.cycle_time_s);
    r.number("f", c.f);
    r.number("min_green_s", c.min_green_s);
    r.number("alpha", c.alpha);
    c.arrival_mode = enum_value<ArrivalMode>(
        r, "arrival_mode", {{"deterministic", ArrivalMode::deterministic}, {"poisson", ArrivalMode::poisson}},
        c.arrival_mode);
    c.delta_rule = enum_value<DeltaRule>(r, "delta_rule",
                                         {{"carryover", DeltaRule::carryover}, {"literal", DeltaRule::literal}},
                                         c.delta_rule);
    if (const toml::node* n = r.find("seed")) {
        auto v = n->value_exact<int64_t>();
        if (!v || *v < 0) r.fail("seed", "expected a nonnegative integer");
        c.seed = static_cast<std::uint64_t>(*v);
    }

    for (int i = 0; i < 2; ++i) {
        const std::string s = "pair" + std::to_string(i + 1) + ".";
        PairConfig& p = c.pairs[i];
        r.number(s + "intensity_vph", p.intensity_vph);
        r.number(s + "saturation_vph", p.saturation_vph);
        r.number(s + "k", p.k);
        r.number(s + "beta", p.beta);
        r.number(s + "lambda", p.lambda);
        r.number(s + "initial_queue", p.initial_queue);
        r.number(s + "initial_occupancy", p.initial_occupancy);
        r.number(s + "initial_green_s", p.initial_green_s);
    }
    if (const auto pf = r.string("params_file")) {
        const FitPair fits = read_params_file(resolve(base_dir, *pf));
        for (int i = 0; i < 2; ++i)
            if (fits[i]) {
                c.pairs[i].k = fits[i]->k;
                c.pairs[i].beta = fits[i]->beta;
                c.pairs[i].lambda = fits[i]->lambda;
            }
    }

    r.number("noise.process_power_frac", c.noise.process_power_frac);
    r.number("noise.meas_power_frac", c.noise.meas_power_frac);
    r.number("noise.calibration_window_s", c.noise.calibration_window_s);

    r.boolean("attack.enabled", c.attack.enabled);
    r.number("attack.start_time_s", c.attack.start_time_s);
    int target = c.attack.target_pair + 1;
    r.integer("attack.target_pair", target);
    c.attack.target_pair = target - 1;
    r.boolean("attack.falsify_reference", c.attack.falsify_reference);

    DetectorSettings& d = c.detector;
    d.kind = enum_value<DetectorKind>(r, "detector.kind",
                                      {{"none", DetectorKind::none},
                                       {"model_based", DetectorKind::model_based},
                                       {"threshold", DetectorKind::threshold},
                                       {"both", DetectorKind::both}},
                                      d.kind);
    r.number("detector.g", d.g);
    r.integer("detector.window", d.window);
    r.number("detector.kappa", d.kappa);
    r.integer("detector.calibration_cycles", d.calibration_cycles);
    r.integer("detector.warmup_cycles", d.warmup_cycles);
    r.number("detector.residual_factor", d.residual_factor);
    r.number("detector.residual_window_start_s", d.residual_window_start_s);
    r.number("detector.residual_window_end_s", d.residual_window_end_s);
    if (const auto tf = r.string("detector.thresholds_file")) d.thresholds = read_thresholds_file(resolve(base_dir, *tf));
    if (const auto th = r.pair("detector.thresholds")) d.thresholds = th;
    r.boolean("detector.retrain", d.retrain);

    r.boolean("mitigation.enabled", c.mitigation.enabled);

    try {
        validate(c);
    } catch (const CycleBudgetError& e) {
        throw CycleBudgetError(std::string(source) + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(e.kind(), std::string(source) + ": " + e.what());
    }
    return c;
}

ScenarioConfig parse_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
    const std::string text = read_text_file(path);
    return parse_config_text(text, path.string(), overrides, path.parent_path());
}

std::uint64_t parse_seed(std::string_view text, std::string_view source) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError(Kind::invalid, std::string(source) + ": seed must be a nonnegative integer");
    return v;
}

void apply_seed_env(ScenarioConfig& cfg) {
    if (const char* s = std::getenv("CROSSLIGHT_SEED")) cfg.seed = parse_seed(s, "CROSSLIGHT_SEED");
}

FitPair read_params_text(std::string_view text, std::string_view source) {
    const toml::table t = parse_toml(text, source);
    FitPair out;
    for (const auto& [k, v] : t) {
        const std::string key(k.str());
        const toml::table* sub = v.as_table();
        if (!sub || (key != "pair1" && key != "pair2"))
            throw ConfigError(Kind::unknown_key, std::string(source) + ": unknown key '" + key + "'");
        for (const auto& [sk, sv] : *sub) {
            (void)sv;
            const std::string name(sk.str());
            if (name != "k" && name != "beta" && name != "lambda" && name != "rmse" && name != "n")
                throw ConfigError(Kind::unknown_key, std::string(source) + ": unknown key '" + key + "." + name + "'");
        }
        const Reader r(t, std::string(source));
        FitResult f;
        r.number(key + ".k", f.k);
        r.number(key + ".beta", f.beta);
        r.number(key + ".lambda", f.lambda);
        r.number(key + ".rmse", f.rmse);
        int n = 0;
        r.integer(key + ".n", n);
        f.n = static_cast<std::size_t>(n);
        out[key == "pair1" ? 0 : 1] = f;
    }
    return out;
}

FitPair read_params_file(const std::filesystem::path& path) {
    return read_params_text(read_text_file(path), path.string());
}

std::string thresholds_report(const Pair& thresholds, double kappa, int calibration_cycles) {
    std::ostringstream os;
    os << "# trained on " << calibration_cycles << " benign cycles, kappa = " << format_double(kappa) << "\n";
    os << "[detector]\n";
    os << "thresholds = [" << format_double(thresholds[0]) << ", " << format_double(thresholds[1]) << "]\n";
    return os.str();
}

Pair read_thresholds_file(const std::filesystem::path& path) {
    const std::string source = path.string();
    const toml::table t = parse_toml(read_text_file(path), source);
    const Reader r(t, source);
    const auto th = r.pair("detector.thresholds");
    if (!th) throw ConfigError(Kind::invalid, source + ": detector.thresholds missing");
    return *th;
}

}  // namespace crosslight
