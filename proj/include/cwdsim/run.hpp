#pragma once

#include "cwdsim/analytics.hpp"
#include "cwdsim/engine.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cwdsim {

inline constexpr const char* kToolVersion = "1.0.0";

// Everything a finished run reports.
struct RunResult {
    ScenarioConfig config;
    std::string config_hash;
    EngineCounters counters;
    EnergyLedger energy;
    EmissionLedger emissions;
    RunStatistics stats;
    double max_conservation_error = 0.0;
    double max_speed = 0.0;
    std::uint64_t active_at_end = 0;
};

// Emission table and driver distributions named by the config (or the
// built-in defaults).
struct RunInputs {
    EmissionFactorTable table;
    DriverParamDistributions distributions;
};
RunInputs load_run_inputs(const ScenarioConfig& config);

// SHA-256 over the canonical config text and the data it references.
std::string config_hash(const ScenarioConfig& config, const RunInputs& inputs);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Runs in memory; extra sinks see every recorded row.
RunResult run_scenario(const ScenarioConfig& config, const std::vector<TrajectorySink*>& sinks = {});

// Runs and writes trajectory.csv, metrics.json, scenario.txt and
// manifest.json into `dir`. An INCOMPLETE marker exists while the run is in
// progress and stays behind if it fails.
RunResult run_to_directory(const ScenarioConfig& config, const std::filesystem::path& dir);

inline constexpr const char* kIncompleteMarker = "INCOMPLETE";

// Writes `text` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::string metrics_json(const RunResult& result, const LaneSpeedSeries* series = nullptr);
// The "statistics" object alone; identical whether computed live or from
// the trajectory file.
std::string statistics_json(const RunStatistics& stats);

// Refuses (DataError) if the directory is missing its manifest or still
// carries the INCOMPLETE marker.
void require_complete_run(const std::filesystem::path& dir);

// One row of a sweep summary.
struct SummaryRow {
    std::string policy;
    std::string mpr_case;
    std::uint64_t seed = 0;
    std::map<std::string, double> values;  // absent entries are not present

    double at(const std::string& column) const;
};

std::vector<std::string> summary_columns(int lane_count);
SummaryRow summarize(const RunResult& result);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows, int lane_count);
std::vector<SummaryRow> read_summary(std::istream& in, const std::string& source = "<summary>");

struct SweepOptions {
    std::vector<std::string> policies;
    std::vector<MprCase> cases;
    std::uint64_t seeds = 1;
    std::uint64_t first_seed = 1;
    unsigned jobs = 0;  // 0: hardware concurrency
    // Applied to every generated config before it runs (durations, flows...).
    std::function<void(ScenarioConfig&)> adjust;
    bool write_runs = true;  // false: in-memory only
};

struct SweepFailure {
    std::string policy;
    std::string mpr_case;
    std::uint64_t seed = 0;
    bool invariant = false;  // InvariantViolation rather than another error
    std::string message;
};

struct SweepReport {
    std::vector<SummaryRow> rows;  // completed runs only
    std::vector<SweepFailure> failures;
};

// Runs the policy x case x seed matrix, in parallel, writing
// <out>/<policy>/<case>/<seed>/ plus <out>/summary.csv (and failures.csv
// when a cell failed). A failing cell does not stop the others. Rows are
// ordered by (policy, case, seed) as listed.
SweepReport run_sweep(const SweepOptions& options, const std::filesystem::path& out);

}  // namespace cwdsim
