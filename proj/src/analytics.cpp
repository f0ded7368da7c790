#include "cwdsim/analytics.hpp"

#include "cwdsim/errors.hpp"
#include "cwdsim/kvtext.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

namespace cwdsim {

namespace {

constexpr double kIndexEps = 1e-9;

double parse_field(std::string_view text, const std::string& where) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError(where + ": bad number `" + std::string(text) + "`");
    }
    return out;
}

template <typename Int>
Int parse_integer(std::string_view text, const std::string& where) {
    Int out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError(where + ": bad integer `" + std::string(text) + "`");
    }
    return out;
}

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

GridSpec parse_grid_spec(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos) throw ConfigError("grid must look like 200x10 (meters x seconds)");
    GridSpec spec;
    try {
        spec.dx = parse_field(std::string_view(text).substr(0, x), "grid");
        spec.dt = parse_field(std::string_view(text).substr(x + 1), "grid");
    } catch (const DataError&) {
        throw ConfigError("grid must look like 200x10 (meters x seconds)");
    }
    if (!(spec.dx > 0.0 && spec.dt > 0.0)) throw ConfigError("grid cell sizes must be positive");
    return spec;
}

SpaceTimeGrid::SpaceTimeGrid(GridSpec spec, int lane_count, double length, double origin_t)
    : spec_(spec), lane_count_(lane_count), origin_t_(origin_t) {
    if (!(spec.dx > 0.0 && spec.dt > 0.0)) throw ConfigError("grid cell sizes must be positive");
    x_cells_ = static_cast<std::size_t>(std::ceil(length / spec.dx - kIndexEps));
    cells_.assign(static_cast<std::size_t>(lane_count + 1), {});
}

void SpaceTimeGrid::add(int lane, double x_start, double t_start, double distance, double duration) {
    if (lane < 0 || lane > lane_count_) throw DataError("lane " + std::to_string(lane) + " outside the grid");
    if (t_start < origin_t_ - kIndexEps) return;
    if (x_start < 0.0) {
        // Entry rows start exactly at 0; rounding may push them a hair below.
        if (x_start < -1e-6) return;
        x_start = 0.0;
    }
    const auto xi = static_cast<std::size_t>(std::floor(x_start / spec_.dx));
    if (xi >= x_cells_) return;
    const auto ti = static_cast<std::size_t>(std::max(0.0, std::floor((t_start - origin_t_) / spec_.dt + kIndexEps)));
    if (ti >= t_cells_) {
        t_cells_ = ti + 1;
        for (auto& lane_cells : cells_) lane_cells.resize(t_cells_ * x_cells_);
    }
    auto& c = cells_[static_cast<std::size_t>(lane)][ti * x_cells_ + xi];
    c.ttd += distance;
    c.ttt += duration;
}

const EdieCell& SpaceTimeGrid::cell(int lane, std::size_t xi, std::size_t ti) const {
    if (lane < 0 || lane > lane_count_ || xi >= x_cells_ || ti >= t_cells_) throw RangeError("grid cell out of range");
    return cells_[static_cast<std::size_t>(lane)][ti * x_cells_ + xi];
}

double SpaceTimeGrid::flow(int lane, std::size_t xi, std::size_t ti) const {
    return cell(lane, xi, ti).ttd / (spec_.dx * spec_.dt);
}

double SpaceTimeGrid::density(int lane, std::size_t xi, std::size_t ti) const {
    return cell(lane, xi, ti).ttt / (spec_.dx * spec_.dt);
}

std::optional<double> SpaceTimeGrid::speed(int lane, std::size_t xi, std::size_t ti) const {
    const auto& c = cell(lane, xi, ti);
    if (!(c.ttt > 0.0)) return std::nullopt;
    return flow(lane, xi, ti) / density(lane, xi, ti);
}

double max_cell_flow(const SpaceTimeGrid& grid) {
    double best = 0.0;
    for (int lane = 1; lane <= grid.lane_count(); ++lane) {
        for (std::size_t ti = 0; ti < grid.t_cells(); ++ti) {
            for (std::size_t xi = 0; xi < grid.x_cells(); ++xi) best = std::max(best, grid.flow(lane, xi, ti));
        }
    }
    return best;
}

double flow_scatter(const SpaceTimeGrid& grid, double bin_width) {
    if (!(bin_width > 0.0)) throw ConfigError("density bin width must be positive");
    std::map<long long, std::vector<double>> bins;
    for (int lane = 1; lane <= grid.lane_count(); ++lane) {
        for (std::size_t ti = 0; ti < grid.t_cells(); ++ti) {
            for (std::size_t xi = 0; xi < grid.x_cells(); ++xi) {
                if (!(grid.cell(lane, xi, ti).ttt > 0.0)) continue;
                const auto bin = static_cast<long long>(std::floor(grid.density(lane, xi, ti) / bin_width));
                bins[bin].push_back(grid.flow(lane, xi, ti));
            }
        }
    }
    double squares = 0.0;
    std::size_t dof = 0;
    for (const auto& [bin, flows] : bins) {
        if (flows.size() < 2) continue;
        double mean = 0.0;
        for (double q : flows) mean += q;
        mean /= static_cast<double>(flows.size());
        for (double q : flows) squares += (q - mean) * (q - mean);
        dof += flows.size() - 1;
    }
    return dof == 0 ? 0.0 : squares / static_cast<double>(dof);
}

void LaneSpeedSeries::add(double t, int lane, double speed) {
    if (lane < 0 || lane > lane_count_) throw DataError("lane " + std::to_string(lane) + " outside the series");
    const auto key = static_cast<std::int64_t>(std::llround(t * 1e6));
    auto [it, fresh] = slots_.try_emplace(key);
    if (fresh) {
        it->second.first = t;
        it->second.second.sum.assign(static_cast<std::size_t>(lane_count_ + 1), 0.0);
        it->second.second.count.assign(static_cast<std::size_t>(lane_count_ + 1), 0);
    }
    it->second.second.sum[static_cast<std::size_t>(lane)] += speed;
    it->second.second.count[static_cast<std::size_t>(lane)] += 1;
}

std::vector<double> LaneSpeedSeries::times() const {
    std::vector<double> out;
    out.reserve(slots_.size());
    for (const auto& [key, slot] : slots_) out.push_back(slot.first);
    return out;
}

std::vector<std::optional<double>> LaneSpeedSeries::means(int lane) const {
    std::vector<std::optional<double>> out;
    out.reserve(slots_.size());
    const auto l = static_cast<std::size_t>(lane);
    for (const auto& [key, slot] : slots_) {
        const auto n = slot.second.count[l];
        out.push_back(n == 0 ? std::nullopt : std::optional<double>(slot.second.sum[l] / static_cast<double>(n)));
    }
    return out;
}

std::optional<double> LaneSpeedSeries::overall_mean(int lane) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& m : means(lane)) {
        if (!m) continue;
        sum += *m;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::vector<std::optional<double>> moving_average(const std::vector<double>& times,
                                                  const std::vector<std::optional<double>>& values, double window) {
    if (!(window > 0.0)) throw ConfigError("smoothing window must be positive");
    if (times.size() != values.size()) throw DataError("time and value series differ in length");
    const double half = 0.5 * window + kIndexEps;
    std::vector<std::optional<double>> out(times.size());
    std::size_t lo = 0;
    std::size_t hi = 0;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        while (hi < times.size() && times[hi] <= times[k] + half) {
            if (values[hi]) {
                sum += *values[hi];
                ++n;
            }
            ++hi;
        }
        while (times[lo] < times[k] - half) {
            if (values[lo]) {
                sum -= *values[lo];
                --n;
            }
            ++lo;
        }
        if (n > 0) out[k] = sum / static_cast<double>(n);
    }
    return out;
}

StatisticsOptions statistics_options(const ScenarioConfig& config, GridSpec grid) {
    StatisticsOptions o;
    o.lane_count = config.layout.lane_count;
    o.length = config.layout.length;
    o.warmup = config.warmup;
    o.interval = config.timestep * config.decimation;
    o.grid = grid;
    return o;
}

StatisticsAccumulator::StatisticsAccumulator(StatisticsOptions options)
    : options_(options),
      grid_(options.grid, options.lane_count, options.length, options.warmup),
      speeds_(options.lane_count),
      lane_ttd_(static_cast<std::size_t>(options.lane_count + 1), 0.0),
      lane_ttt_(static_cast<std::size_t>(options.lane_count + 1), 0.0) {
    if (!(options.interval > 0.0)) throw ConfigError("row interval must be positive");
}

void StatisticsAccumulator::on_row(const TrajectoryRow& row) {
    auto [it, fresh] = last_t_.try_emplace(row.veh_id, row.t);
    if (!fresh) {
        if (!(row.t > it->second)) {
            throw DataError("trajectory rows for vehicle " + std::to_string(row.veh_id) + " are not time-ordered");
        }
        it->second = row.t;
    }
    if (row.lane < 0 || row.lane > options_.lane_count) {
        throw DataError("row lane " + std::to_string(row.lane) + " does not exist");
    }
    const double t_start = row.t - options_.interval;
    if (t_start < options_.warmup - kIndexEps) return;
    const double distance = row.speed * options_.interval;
    ++rows_;
    ttd_ += distance;
    ttt_ += options_.interval;
    lane_ttd_[static_cast<std::size_t>(row.lane)] += distance;
    lane_ttt_[static_cast<std::size_t>(row.lane)] += options_.interval;
    class_ttd_[std::string(to_string(row.cls))] += distance;
    grid_.add(row.lane, row.pos - distance, t_start, distance, options_.interval);
    speeds_.add(row.t, row.lane, row.speed);
}

RunStatistics StatisticsAccumulator::result() const {
    RunStatistics r;
    r.rows = rows_;
    r.vehicles = last_t_.size();
    r.ttd = ttd_;
    r.ttt = ttt_;
    if (ttt_ > 0.0) r.mean_speed = ttd_ / ttt_;
    r.lane_ttd = lane_ttd_;
    r.lane_ttt = lane_ttt_;
    for (int lane = 0; lane <= options_.lane_count; ++lane) r.lane_mean_speed.push_back(speeds_.overall_mean(lane));
    std::vector<double> main;
    for (int lane = 1; lane <= options_.lane_count; ++lane) {
        if (r.lane_mean_speed[static_cast<std::size_t>(lane)]) main.push_back(*r.lane_mean_speed[static_cast<std::size_t>(lane)]);
    }
    if (main.size() >= 2) {
        double mean = 0.0;
        for (double v : main) mean += v;
        mean /= static_cast<double>(main.size());
        double var = 0.0;
        for (double v : main) var += (v - mean) * (v - mean);
        r.lane_speed_spread = std::sqrt(var / static_cast<double>(main.size()));
    }
    r.class_ttd = class_ttd_;
    r.max_cell_flow = max_cell_flow(grid_);
    r.flow_scatter = flow_scatter(grid_, options_.scatter_bin);
    return r;
}

std::string format_fixed6(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 6);
    if (ec != std::errc{}) throw RangeError("value too large to format");
    return std::string(buf, ptr);
}

TrajectoryWriter::TrajectoryWriter(std::ostream& out) : out_(out) {
    out_ << kTrajectoryHeader << '\n';
    buffer_.reserve(1 << 20);
}

TrajectoryWriter::~TrajectoryWriter() {
    try {
        flush();
    } catch (...) {
    }
}

void TrajectoryWriter::on_row(const TrajectoryRow& row) {
    char buf[64];
    auto fixed = [&](double v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
        buffer_.append(buf, ptr);
    };
    auto integer = [&](auto v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        buffer_.append(buf, ptr);
    };
    fixed(row.t);
    buffer_ += ',';
    integer(row.veh_id);
    buffer_ += ',';
    buffer_ += to_string(row.cls);
    buffer_ += ',';
    integer(row.lane);
    buffer_ += ',';
    fixed(row.pos);
    buffer_ += ',';
    fixed(row.speed);
    buffer_ += ',';
    fixed(row.accel);
    buffer_ += ',';
    if (row.soc) fixed(*row.soc);
    buffer_ += '\n';
    if (buffer_.size() > (1u << 20) - 256) flush();
}

void TrajectoryWriter::flush() {
    out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    buffer_.clear();
    if (!out_) throw Error("failed writing trajectory rows");
}

void read_trajectory(std::istream& in, const std::function<void(const TrajectoryRow&)>& fn, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(source + ": empty trajectory file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTrajectoryHeader) throw DataError(source + ": unexpected trajectory header");
    std::uint64_t lineno = 1;
    std::string_view fields[8];
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        std::string_view rest = line;
        std::size_t n = 0;
        while (true) {
            const auto comma = rest.find(',');
            if (n == 8) throw DataError(where + ": expected 8 fields");
            fields[n++] = rest.substr(0, comma);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (n != 8) throw DataError(where + ": expected 8 fields");
        TrajectoryRow row;
        row.t = parse_field(fields[0], where);
        row.veh_id = parse_integer<VehicleId>(fields[1], where);
        row.cls = parse_vehicle_class(fields[2]);
        row.lane = parse_integer<int>(fields[3], where);
        row.pos = parse_field(fields[4], where);
        row.speed = parse_field(fields[5], where);
        row.accel = parse_field(fields[6], where);
        if (!fields[7].empty()) row.soc = parse_field(fields[7], where);
        fn(row);
    }
}

void write_edie_grid(std::ostream& out, const SpaceTimeGrid& grid) {
    const auto& spec = grid.spec();
    out << "# grid_dx_m=" << format_double(spec.dx) << ",grid_dt_s=" << format_double(spec.dt) << '\n';
    out << "lane,x_start_m,t_start_s,ttd_veh_m,ttt_veh_s,flow_veh_per_s,density_veh_per_m,speed_mps\n";
    for (int lane = 0; lane <= grid.lane_count(); ++lane) {
        for (std::size_t ti = 0; ti < grid.t_cells(); ++ti) {
            for (std::size_t xi = 0; xi < grid.x_cells(); ++xi) {
                const auto& c = grid.cell(lane, xi, ti);
                out << lane << ',' << format_double(static_cast<double>(xi) * spec.dx) << ','
                    << format_double(grid.origin_t() + static_cast<double>(ti) * spec.dt) << ','
                    << format_double(c.ttd) << ',' << format_double(c.ttt) << ','
                    << format_double(grid.flow(lane, xi, ti)) << ',' << format_double(grid.density(lane, xi, ti))
                    << ',' << optional_text(grid.speed(lane, xi, ti)) << '\n';
            }
        }
    }
}

void write_heatmap(std::ostream& out, const SpaceTimeGrid& grid) {
    const auto& spec = grid.spec();
    const double area = spec.dx * spec.dt;
    out << "# grid_dx_m=" << format_double(spec.dx) << ",grid_dt_s=" << format_double(spec.dt) << '\n';
    out << "x_start_m,t_start_s,flow_veh_per_s,density_veh_per_m,speed_mps\n";
    for (std::size_t ti = 0; ti < grid.t_cells(); ++ti) {
        for (std::size_t xi = 0; xi < grid.x_cells(); ++xi) {
            double ttd = 0.0;
            double ttt = 0.0;
            for (int lane = 1; lane <= grid.lane_count(); ++lane) {
                ttd += grid.cell(lane, xi, ti).ttd;
                ttt += grid.cell(lane, xi, ti).ttt;
            }
            std::optional<double> speed;
            if (ttt > 0.0) speed = ttd / ttt;
            out << format_double(static_cast<double>(xi) * spec.dx) << ','
                << format_double(grid.origin_t() + static_cast<double>(ti) * spec.dt) << ','
                << format_double(ttd / area) << ',' << format_double(ttt / area) << ',' << optional_text(speed)
                << '\n';
        }
    }
}

void write_lane_speeds(std::ostream& out, const LaneSpeedSeries& series, double window) {
    out << "# smoothing_window_s=" << format_double(window) << '\n';
    out << "t_s,lane,mean_speed_mps,smoothed_speed_mps\n";
    const auto times = series.times();
    for (int lane = 0; lane <= series.lane_count(); ++lane) {
        const auto raw = series.means(lane);
        const auto smooth = moving_average(times, raw, window);
        for (std::size_t k = 0; k < times.size(); ++k) {
            out << format_fixed6(times[k]) << ',' << lane << ',' << optional_text(raw[k]) << ','
                << optional_text(smooth[k]) << '\n';
        }
    }
}

}  // namespace cwdsim
