#include "cwdsim/run.hpp"

#include "cwdsim/errors.hpp"
#include "cwdsim/kvtext.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace cwdsim {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 unavailable");
    }
    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
    std::string hex() {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int n = 0;
        EVP_DigestFinal_ex(ctx_.get(), digest, &n);
        static const char* digits = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < n; ++i) {
            out += digits[digest[i] >> 4];
            out += digits[digest[i] & 15];
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json pollutant_json(const PollutantArray& grams) {
    Json out = Json::object();
    for (auto p : kAllPollutants) out[std::string(to_string(p))] = grams[static_cast<std::size_t>(p)];
    return out;
}

Json statistics_object(const RunStatistics& s) {
    Json out = Json::object();
    out["rows"] = s.rows;
    out["vehicles"] = s.vehicles;
    out["ttd_veh_m"] = s.ttd;
    out["ttt_veh_s"] = s.ttt;
    out["mean_speed_mps"] = optional_json(s.mean_speed);
    Json lanes = Json::array();
    for (std::size_t lane = 0; lane < s.lane_ttd.size(); ++lane) {
        lanes.push_back(Json{{"lane", lane},
                             {"ttd_veh_m", s.lane_ttd[lane]},
                             {"ttt_veh_s", s.lane_ttt[lane]},
                             {"mean_speed_mps", optional_json(s.lane_mean_speed[lane])}});
    }
    out["lanes"] = lanes;
    out["lane_speed_spread_mps"] = optional_json(s.lane_speed_spread);
    Json by_class = Json::object();
    for (const auto& [cls, ttd] : s.class_ttd) by_class[cls] = ttd;
    out["ttd_by_class_veh_m"] = by_class;
    out["max_cell_flow_veh_per_s"] = s.max_cell_flow;
    out["flow_scatter"] = s.flow_scatter;
    return out;
}

Json counters_object(const EngineCounters& c, std::uint64_t active) {
    return Json{{"inserted", c.inserted},         {"exited", c.exited},
                {"active_at_end", active},        {"lane_changes", c.lane_changes},
                {"ramp_merges", c.ramp_merges},   {"stopped_merges", c.stopped_merges},
                {"clamp_events", c.clamp_events}, {"guard_events", c.guard_events},
                {"conflicts", c.conflicts},       {"recorded_rows", c.recorded_rows},
                {"max_queue", c.max_queue},       {"queued_final", c.queued_final}};
}

RunResult execute(const ScenarioConfig& config, const RunInputs& inputs, const std::vector<TrajectorySink*>& sinks,
                  StatisticsAccumulator& acc) {
    Simulation sim(config, inputs.table, inputs.distributions);
    sim.add_sink(acc);
    for (auto* sink : sinks) sim.add_sink(*sink);
    sim.run();
    RunResult r;
    r.config = config;
    r.config_hash = config_hash(config, inputs);
    r.counters = sim.counters();
    r.energy = sim.energy();
    r.emissions = sim.emissions();
    r.stats = acc.result();
    r.max_conservation_error = sim.max_conservation_error();
    r.max_speed = sim.max_speed_seen();
    r.active_at_end = sim.vehicles().size();
    return r;
}

double veh_km(const RunResult& r) { return r.stats.ttd / 1000.0; }

}  // namespace

RunInputs load_run_inputs(const ScenarioConfig& config) {
    RunInputs inputs;
    if (config.emission_table.empty()) {
        inputs.table = EmissionFactorTable::builtin();
    } else {
        inputs.table = EmissionFactorTable::load(config.emission_table);
    }
    if (!config.driver_params.empty()) inputs.distributions = DriverParamDistributions::load(config.driver_params);
    return inputs;
}

std::string sha256_hex(std::string_view bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    Sha256 h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

std::string config_hash(const ScenarioConfig& config, const RunInputs& inputs) {
    // Paths are left out: two configs reading identical data hash alike.
    ScenarioConfig plain = config;
    plain.emission_table.clear();
    plain.driver_params.clear();
    std::string text = plain.to_text();
    text += "\n# emission table\n";
    text += config.emission_table.empty() ? EmissionFactorTable::builtin_csv() : read_text(config.emission_table);
    text += "\n# driver parameters\n";
    text += inputs.distributions.to_text();
    return sha256_hex(text);
}

RunResult run_scenario(const ScenarioConfig& config, const std::vector<TrajectorySink*>& sinks) {
    const auto inputs = load_run_inputs(config);
    StatisticsAccumulator acc(statistics_options(config));
    return execute(config, inputs, sinks, acc);
}

void write_file_atomic(const fs::path& path, std::string_view text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.close();
        if (!out) throw Error("failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string statistics_json(const RunStatistics& stats) { return statistics_object(stats).dump(2); }

std::string metrics_json(const RunResult& r, const LaneSpeedSeries* series) {
    const auto& c = r.config;
    Json meta{{"tool", "cwdsim"},
              {"version", kToolVersion},
              {"policy", c.policy.name()},
              {"case", std::string(to_string(c.mpr_case))},
              {"seed", c.seed},
              {"config_sha256", r.config_hash},
              {"duration_s", c.duration},
              {"warmup_s", c.warmup},
              {"timestep_s", c.timestep},
              {"record_decimation", c.decimation},
              {"lane_count", c.layout.lane_count},
              {"road_length_m", c.layout.length},
              {"lane_change_cooldown_s", c.mobil.cooldown},
              {"cwd_speed_limit_scope", c.cwd_cap_scope == CwdCapScope::Electric ? "electric" : "all"}};

    Json energy{{"supplied_kwh", r.energy.supplied}, {"consumed_kwh", r.energy.consumed}};
    Json supplied = Json::object();
    Json consumed = Json::object();
    for (auto cls : {VehicleClass::AV, VehicleClass::ET}) {
        supplied[std::string(to_string(cls))] = r.energy.supplied_by_class[class_index(cls)];
        consumed[std::string(to_string(cls))] = r.energy.consumed_by_class[class_index(cls)];
    }
    energy["supplied_by_class_kwh"] = supplied;
    energy["consumed_by_class_kwh"] = consumed;
    energy["max_conservation_error_kwh"] = r.max_conservation_error;

    const auto total = r.emissions.total();
    Json emissions{{"unit", "g"}, {"total", pollutant_json(total)}};
    Json by_lane = Json::object();
    for (const auto& [lane, grams] : r.emissions.by_lane) by_lane[std::to_string(lane)] = pollutant_json(grams);
    emissions["by_lane"] = by_lane;
    emissions["veh_km"] = veh_km(r);
    Json normalized = Json::object();
    for (auto p : kAllPollutants) {
        const double km = veh_km(r);
        normalized[std::string(to_string(p))] =
            km > 0.0 ? Json(total[static_cast<std::size_t>(p)] / km) : Json(nullptr);
    }
    emissions["g_per_veh_km"] = normalized;

    Json out{{"meta", meta},
             {"counters", counters_object(r.counters, r.active_at_end)},
             {"energy", energy},
             {"emissions", emissions},
             {"statistics", statistics_object(r.stats)}};
    if (series) {
        Json s = Json::object();
        s["t_s"] = series->times();
        for (int lane = 0; lane <= series->lane_count(); ++lane) {
            Json values = Json::array();
            for (const auto& m : series->means(lane)) values.push_back(optional_json(m));
            s["lane_" + std::to_string(lane)] = values;
        }
        out["lane_speed_series"] = s;
    }
    return out.dump(2) + "\n";
}

RunResult run_to_directory(const ScenarioConfig& config, const fs::path& dir) {
    fs::create_directories(dir);
    const auto marker = dir / kIncompleteMarker;
    write_file_atomic(marker, "run in progress\n");
    fs::remove(dir / "manifest.json");

    const auto inputs = load_run_inputs(config);
    StatisticsAccumulator acc(statistics_options(config));
    const auto traj_path = dir / "trajectory.csv";
    auto traj_tmp = traj_path;
    traj_tmp += ".tmp";
    RunResult result;
    {
        std::ofstream out(traj_tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot create " + traj_tmp.string());
        TrajectoryWriter writer(out);
        result = execute(config, inputs, {&writer}, acc);
        writer.flush();
        out.close();
        if (!out) throw Error("failed writing " + traj_tmp.string());
    }
    fs::rename(traj_tmp, traj_path);

    write_file_atomic(dir / "scenario.txt", config.to_text());
    write_file_atomic(dir / "metrics.json", metrics_json(result, &acc.lane_speeds()));

    Json files = Json::object();
    for (const char* name : {"trajectory.csv", "metrics.json", "scenario.txt"}) {
        files[name] = Json{{"sha256", sha256_file(dir / name)}, {"bytes", fs::file_size(dir / name)}};
    }
    Json manifest{{"tool", "cwdsim"},
                  {"version", kToolVersion},
                  {"config_sha256", result.config_hash},
                  {"seed", config.seed},
                  {"policy", config.policy.name()},
                  {"case", std::string(to_string(config.mpr_case))},
                  {"files", files},
                  {"counters", counters_object(result.counters, result.active_at_end)}};
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    fs::remove(marker);
    return result;
}

void require_complete_run(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a run directory");
    if (fs::exists(dir / kIncompleteMarker)) throw DataError(dir.string() + " holds an incomplete run");
    for (const char* name : {"manifest.json", "metrics.json", "trajectory.csv", "scenario.txt"}) {
        if (!fs::exists(dir / name)) throw DataError(dir.string() + " is missing " + name);
    }
}

double SummaryRow::at(const std::string& column) const {
    auto it = values.find(column);
    if (it == values.end()) throw DataError("summary row has no value for " + column);
    return it->second;
}

std::vector<std::string> summary_columns(int lane_count) {
    std::vector<std::string> cols{"mean_speed_mps"};
    for (int lane = 0; lane <= lane_count; ++lane) cols.push_back("lane" + std::to_string(lane) + "_mean_speed_mps");
    for (const char* c : {"lane_speed_spread_mps", "max_cell_flow_veh_per_s", "flow_scatter", "veh_km",
                          "energy_supplied_kwh", "energy_consumed_kwh"}) {
        cols.emplace_back(c);
    }
    for (auto p : kAllPollutants) cols.push_back(std::string(to_string(p)) + "_g");
    for (auto p : kAllPollutants) cols.push_back(std::string(to_string(p)) + "_g_per_veh_km");
    for (const char* c : {"inserted", "exited", "lane_changes", "ramp_merges", "stopped_merges", "clamp_events",
                          "guard_events", "conflicts"}) {
        cols.emplace_back(c);
    }
    return cols;
}

SummaryRow summarize(const RunResult& r) {
    SummaryRow row;
    row.policy = r.config.policy.name();
    row.mpr_case = std::string(to_string(r.config.mpr_case));
    row.seed = r.config.seed;
    auto& v = row.values;
    if (r.stats.mean_speed) v["mean_speed_mps"] = *r.stats.mean_speed;
    for (std::size_t lane = 0; lane < r.stats.lane_mean_speed.size(); ++lane) {
        if (r.stats.lane_mean_speed[lane]) {
            v["lane" + std::to_string(lane) + "_mean_speed_mps"] = *r.stats.lane_mean_speed[lane];
        }
    }
    if (r.stats.lane_speed_spread) v["lane_speed_spread_mps"] = *r.stats.lane_speed_spread;
    v["max_cell_flow_veh_per_s"] = r.stats.max_cell_flow;
    v["flow_scatter"] = r.stats.flow_scatter;
    const double km = veh_km(r);
    v["veh_km"] = km;
    v["energy_supplied_kwh"] = r.energy.supplied;
    v["energy_consumed_kwh"] = r.energy.consumed;
    const auto total = r.emissions.total();
    for (auto p : kAllPollutants) {
        const double g = total[static_cast<std::size_t>(p)];
        v[std::string(to_string(p)) + "_g"] = g;
        if (km > 0.0) v[std::string(to_string(p)) + "_g_per_veh_km"] = g / km;
    }
    const auto& c = r.counters;
    v["inserted"] = static_cast<double>(c.inserted);
    v["exited"] = static_cast<double>(c.exited);
    v["lane_changes"] = static_cast<double>(c.lane_changes);
    v["ramp_merges"] = static_cast<double>(c.ramp_merges);
    v["stopped_merges"] = static_cast<double>(c.stopped_merges);
    v["clamp_events"] = static_cast<double>(c.clamp_events);
    v["guard_events"] = static_cast<double>(c.guard_events);
    v["conflicts"] = static_cast<double>(c.conflicts);
    return row;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows, int lane_count) {
    const auto cols = summary_columns(lane_count);
    out << "policy,case,seed";
    for (const auto& c : cols) out << ',' << c;
    out << '\n';
    for (const auto& row : rows) {
        out << row.policy << ',' << row.mpr_case << ',' << row.seed;
        for (const auto& c : cols) {
            out << ',';
            auto it = row.values.find(c);
            if (it != row.values.end()) out << format_double(it->second);
        }
        out << '\n';
    }
}

std::vector<SummaryRow> read_summary(std::istream& in, const std::string& source) {
    auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::string_view rest = line;
        while (true) {
            const auto comma = rest.find(',');
            fields.emplace_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        return fields;
    };
    std::string line;
    if (!std::getline(in, line)) throw DataError(source + ": empty summary");
    const auto header = split(line);
    if (header.size() < 3 || header[0] != "policy" || header[1] != "case" || header[2] != "seed") {
        throw DataError(source + ": summary must start with policy,case,seed");
    }
    std::vector<SummaryRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split(line);
        const std::string where = source + ":" + std::to_string(lineno);
        if (fields.size() != header.size()) throw DataError(where + ": wrong field count");
        SummaryRow row;
        row.policy = fields[0];
        row.mpr_case = fields[1];
        auto [p, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), row.seed);
        if (ec != std::errc{} || p != fields[2].data() + fields[2].size()) throw DataError(where + ": bad seed");
        for (std::size_t i = 3; i < fields.size(); ++i) {
            if (fields[i].empty()) continue;
            double value = 0.0;
            auto [q, ec2] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), value);
            if (ec2 != std::errc{} || q != fields[i].data() + fields[i].size()) {
                throw DataError(where + ": bad number in column " + header[i]);
            }
            row.values[header[i]] = value;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

SweepReport run_sweep(const SweepOptions& options, const fs::path& out) {
    struct Job {
        std::string policy;
        MprCase mpr_case;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& policy : options.policies) {
        // A policy the road cannot hold is a usage error, not a failed cell.
        if (!options.cases.empty()) {
            auto probe = make_scenario(policy, options.cases.front(), options.first_seed);
            if (options.adjust) {
                options.adjust(probe);
                build_road_layout(probe.policy, probe.geometry);
            }
        }
        for (auto c : options.cases) {
            for (std::uint64_t s = 0; s < options.seeds; ++s) jobs.push_back({policy, c, options.first_seed + s});
        }
    }
    if (jobs.empty()) throw ConfigError("sweep has no runs");

    std::vector<std::optional<SummaryRow>> rows(jobs.size());
    std::vector<std::optional<SweepFailure>> failures(jobs.size());
    int lane_count = 3;
    std::mutex lane_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
            const auto& job = jobs[i];
            auto fail = [&](bool invariant, const std::string& message) {
                failures[i] = SweepFailure{job.policy, std::string(to_string(job.mpr_case)), job.seed, invariant,
                                           message};
            };
            try {
                auto config = make_scenario(job.policy, job.mpr_case, job.seed);
                if (options.adjust) {
                    options.adjust(config);
                    config.finalize();
                }
                {
                    std::lock_guard lock(lane_mutex);
                    lane_count = config.layout.lane_count;
                }
                const auto dir = out / job.policy / std::string(to_string(job.mpr_case)) / std::to_string(job.seed);
                rows[i] = summarize(options.write_runs ? run_to_directory(config, dir) : run_scenario(config));
            } catch (const InvariantViolation& e) {
                fail(true, e.what());
            } catch (const std::exception& e) {
                fail(false, e.what());
            }
        }
    };
    unsigned n = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, jobs.size()));
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    SweepReport report;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (rows[i]) report.rows.push_back(std::move(*rows[i]));
        if (failures[i]) report.failures.push_back(std::move(*failures[i]));
    }
    if (options.write_runs) {
        fs::create_directories(out);
        std::ostringstream text;
        write_summary(text, report.rows, lane_count);
        write_file_atomic(out / "summary.csv", text.str());
        const auto failure_path = out / "failures.csv";
        if (report.failures.empty()) {
            fs::remove(failure_path);
        } else {
            std::ostringstream ftext;
            ftext << "policy,case,seed,kind,message\n";
            for (const auto& f : report.failures) {
                std::string message = f.message;
                for (auto& ch : message) {
                    if (ch == ',' || ch == '\n' || ch == '\r') ch = ' ';
                }
                ftext << f.policy << ',' << f.mpr_case << ',' << f.seed << ','
                      << (f.invariant ? "invariant" : "error") << ',' << message << '\n';
            }
            write_file_atomic(failure_path, ftext.str());
        }
    }
    return report;
}

}  // namespace cwdsim
