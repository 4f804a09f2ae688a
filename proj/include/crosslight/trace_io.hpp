#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "crosslight/harness.hpp"

namespace crosslight {

const std::vector<std::string>& step_columns();
const std::vector<std::string>& cycle_columns();

std::string format_steps_csv(const std::vector<StepRecord>& steps);
std::string format_cycles_csv(const std::vector<CycleRecord>& cycles);
std::vector<StepRecord> parse_steps_csv(std::string_view text);
std::vector<CycleRecord> parse_cycles_csv(std::string_view text);

// Writes <dir>/trace.csv and <dir>/cycles.csv.
void emit_trace(const TraceLog& trace, const std::filesystem::path& dir);
TraceLog read_trace(const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace crosslight
