#include "crosslight/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "crosslight/config.hpp"
#include "crosslight/errors.hpp"
#include "crosslight/numfmt.hpp"

namespace crosslight {

namespace {

template <class R>
struct Column {
    std::string name;
    std::function<std::string(const R&)> get;
    std::function<void(R&, std::string_view)> set;
};

long long parse_int(std::string_view s) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    return v;
}

template <class R>
void add_real(std::vector<Column<R>>& cols, const std::string& name, double R::*m) {
    cols.push_back({name, [m](const R& r) { return format_double(r.*m); },
                    [m](R& r, std::string_view s) { r.*m = parse_double(s); }});
}

template <class R>
void add_pair(std::vector<Column<R>>& cols, const std::string& name, Pair R::*m) {
    for (int i = 0; i < 2; ++i)
        cols.push_back({name + std::to_string(i + 1), [m, i](const R& r) { return format_double((r.*m)[i]); },
                        [m, i](R& r, std::string_view s) { (r.*m)[i] = parse_double(s); }});
}

template <class R, class T>
void add_int(std::vector<Column<R>>& cols, const std::string& name, T R::*m) {
    cols.push_back({name, [m](const R& r) { return std::to_string(static_cast<long long>(r.*m)); },
                    [m](R& r, std::string_view s) { r.*m = static_cast<T>(parse_int(s)); }});
}

template <class R, class T>
void add_int_pair(std::vector<Column<R>>& cols, const std::string& name, std::array<T, 2> R::*m) {
    for (int i = 0; i < 2; ++i)
        cols.push_back({name + std::to_string(i + 1), [m, i](const R& r) { return std::to_string(static_cast<int>((r.*m)[i])); },
                        [m, i](R& r, std::string_view s) { (r.*m)[i] = static_cast<T>(parse_int(s)); }});
}

const std::vector<Column<StepRecord>>& step_table() {
    static const auto cols = [] {
        std::vector<Column<StepRecord>> c;
        add_int(c, "step", &StepRecord::step);
        add_real(c, "t", &StepRecord::t);
        add_pair(c, "q", &StepRecord::q);
        add_pair(c, "o_true", &StepRecord::o_true);
        add_pair(c, "o_meas", &StepRecord::o_meas);
        add_pair(c, "o_reported", &StepRecord::o_reported);
        add_pair(c, "z", &StepRecord::z);
        add_pair(c, "green", &StepRecord::green);
        add_int_pair(c, "delta", &StepRecord::delta);
        add_pair(c, "arrivals", &StepRecord::arrivals);
        add_pair(c, "departures", &StepRecord::departures);
        add_pair(c, "clamp", &StepRecord::clamp);
        add_pair(c, "y", &StepRecord::y);
        add_pair(c, "y_literal", &StepRecord::y_literal);
        add_pair(c, "u", &StepRecord::u);
        add_pair(c, "r", &StepRecord::r);
        add_real(c, "r_norm", &StepRecord::r_norm);
        add_int(c, "alarms", &StepRecord::alarms);
        add_int(c, "clamp_flags", &StepRecord::clamp_flags);
        return c;
    }();
    return cols;
}

const std::vector<Column<CycleRecord>>& cycle_table() {
    static const auto cols = [] {
        std::vector<Column<CycleRecord>> c;
        add_int(c, "cycle", &CycleRecord::cycle);
        add_real(c, "t_end", &CycleRecord::t_end);
        add_pair(c, "reference", &CycleRecord::reference);
        add_pair(c, "closing", &CycleRecord::closing);
        add_pair(c, "delta_o", &CycleRecord::delta_o);
        add_pair(c, "z_before", &CycleRecord::z_before);
        add_pair(c, "z_after", &CycleRecord::z_after);
        add_int_pair(c, "delta_next", &CycleRecord::delta_next);
        add_int(c, "armed", &CycleRecord::armed);
        add_int_pair(c, "threshold_alarm", &CycleRecord::threshold_alarm);
        add_int(c, "residual_alarm", &CycleRecord::residual_alarm);
        add_int(c, "mitigation", &CycleRecord::mitigation);
        add_int(c, "equal_split", &CycleRecord::equal_split);
        return c;
    }();
    return cols;
}

template <class R>
std::string format_csv(const std::vector<Column<R>>& cols, const std::vector<R>& rows) {
    std::string out;
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i].name;
    out += '\n';
    for (const R& r : rows) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out += ',';
            out += cols[i].get(r);
        }
        out += '\n';
    }
    return out;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class R>
std::vector<R> parse_csv(const std::vector<Column<R>>& cols, std::string_view text) {
    std::vector<R> rows;
    std::size_t pos = 0;
    bool header = true;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto fields = split(line);
        if (header) {
            if (fields.size() != cols.size()) throw Error("trace header has unexpected columns");
            for (std::size_t i = 0; i < cols.size(); ++i)
                if (fields[i] != cols[i].name) throw Error("trace header: expected column '" + cols[i].name + "'");
            header = false;
            continue;
        }
        if (fields.size() != cols.size())
            throw Error("trace line " + std::to_string(line_no) + ": expected " + std::to_string(cols.size()) +
                        " fields");
        R r{};
        try {
            for (std::size_t i = 0; i < cols.size(); ++i) cols[i].set(r, fields[i]);
        } catch (const std::invalid_argument& e) {
            throw Error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
        rows.push_back(r);
    }
    if (header) throw Error("trace file is empty");
    return rows;
}

template <class R>
std::vector<std::string> names(const std::vector<Column<R>>& cols) {
    std::vector<std::string> out;
    for (const auto& c : cols) out.push_back(c.name);
    return out;
}

}  // namespace

const std::vector<std::string>& step_columns() {
    static const auto n = names(step_table());
    return n;
}

const std::vector<std::string>& cycle_columns() {
    static const auto n = names(cycle_table());
    return n;
}

std::string format_steps_csv(const std::vector<StepRecord>& steps) { return format_csv(step_table(), steps); }
std::string format_cycles_csv(const std::vector<CycleRecord>& cycles) { return format_csv(cycle_table(), cycles); }
std::vector<StepRecord> parse_steps_csv(std::string_view text) { return parse_csv(step_table(), text); }
std::vector<CycleRecord> parse_cycles_csv(std::string_view text) { return parse_csv(cycle_table(), text); }

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(path.string() + ": write failed");
}

void emit_trace(const TraceLog& trace, const std::filesystem::path& dir) {
    write_text_file(dir / "trace.csv", format_steps_csv(trace.steps));
    write_text_file(dir / "cycles.csv", format_cycles_csv(trace.cycles));
}

TraceLog read_trace(const std::filesystem::path& dir) {
    TraceLog t;
    t.steps = parse_steps_csv(read_text_file(dir / "trace.csv"));
    t.cycles = parse_cycles_csv(read_text_file(dir / "cycles.csv"));
    return t;
}

}  // namespace crosslight
