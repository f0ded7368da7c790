#pragma once

#include "cwdsim/engine.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace cwdsim {

struct GridSpec {
    double dx = 100.0;  // m
    double dt = 10.0;   // s
};

// Parses "200x10" (meters x seconds).
GridSpec parse_grid_spec(const std::string& text);

struct EdieCell {
    double ttd = 0.0;  // veh*m
    double ttt = 0.0;  // veh*s
};

// Space-time cells per lane (lane 0 = ramp). Cell (i, j) covers
// [origin_x + i*dx, +dx) x [origin_t + j*dt, +dt).
class SpaceTimeGrid {
public:
    SpaceTimeGrid() = default;
    SpaceTimeGrid(GridSpec spec, int lane_count, double length, double origin_t);

    // Books one step's travel to the cell containing its starting point.
    // Points outside the road or before origin_t are ignored.
    void add(int lane, double x_start, double t_start, double distance, double duration);

    const GridSpec& spec() const { return spec_; }
    int lane_count() const { return lane_count_; }
    std::size_t x_cells() const { return x_cells_; }
    std::size_t t_cells() const { return t_cells_; }
    double origin_t() const { return origin_t_; }
    const EdieCell& cell(int lane, std::size_t xi, std::size_t ti) const;

    double flow(int lane, std::size_t xi, std::size_t ti) const;     // veh/s
    double density(int lane, std::size_t xi, std::size_t ti) const;  // veh/m
    // Space-mean speed; absent when nobody spent time in the cell.
    std::optional<double> speed(int lane, std::size_t xi, std::size_t ti) const;

private:
    GridSpec spec_;
    int lane_count_ = 0;
    double origin_t_ = 0.0;
    std::size_t x_cells_ = 0;
    std::size_t t_cells_ = 0;
    std::vector<std::vector<EdieCell>> cells_;  // [lane][ti * x_cells + xi]
};

// Largest cell flow over lanes 1..lane_count, veh/s.
double max_cell_flow(const SpaceTimeGrid& grid);

// Scatter of the flow-density cloud: pooled variance of cell flow within
// density bins of `bin_width` veh/m, over occupied cells of lanes
// 1..lane_count. Bins with fewer than two cells carry no information.
double flow_scatter(const SpaceTimeGrid& grid, double bin_width = 0.005);

// Per recorded time, the mean speed of the vehicles in each lane.
class LaneSpeedSeries {
public:
    explicit LaneSpeedSeries(int lane_count = 3) : lane_count_(lane_count) {}

    void add(double t, int lane, double speed);

    std::vector<double> times() const;
    // Mean per time for `lane`; absent where the lane was empty.
    std::vector<std::optional<double>> means(int lane) const;
    // Time-average of the present per-step means.
    std::optional<double> overall_mean(int lane) const;
    int lane_count() const { return lane_count_; }

private:
    struct Slot {
        std::vector<double> sum;
        std::vector<std::uint64_t> count;
    };
    int lane_count_;
    std::map<std::int64_t, std::pair<double, Slot>> slots_;  // key: t in microseconds
};

// Centered moving average over present values within +-window/2.
std::vector<std::optional<double>> moving_average(const std::vector<double>& times,
                                                  const std::vector<std::optional<double>>& values, double window);

struct RunStatistics {
    std::uint64_t rows = 0;
    std::uint64_t vehicles = 0;
    double ttd = 0.0;
    double ttt = 0.0;
    std::optional<double> mean_speed;                    // TTD / TTT
    std::vector<double> lane_ttd;                        // index = lane
    std::vector<double> lane_ttt;
    std::vector<std::optional<double>> lane_mean_speed;  // time-averaged per-step means
    std::optional<double> lane_speed_spread;             // std-dev of lanes 1..n means
    std::map<std::string, double> class_ttd;             // veh*m by class
    double max_cell_flow = 0.0;
    double flow_scatter = 0.0;
};

struct StatisticsOptions {
    int lane_count = 3;
    double length = 5000.0;
    double warmup = 150.0;
    double interval = 0.1;  // seconds covered by one recorded row
    GridSpec grid;
    double scatter_bin = 0.005;
};

StatisticsOptions statistics_options(const ScenarioConfig& config, GridSpec grid = {});

// Consumes trajectory rows (live from the engine or read back from a file)
// and reduces them to the run statistics. Rows must be time-ordered per
// vehicle; violations raise DataError.
class StatisticsAccumulator : public TrajectorySink {
public:
    explicit StatisticsAccumulator(StatisticsOptions options);

    void on_row(const TrajectoryRow& row) override;

    const StatisticsOptions& options() const { return options_; }
    const SpaceTimeGrid& grid() const { return grid_; }
    const LaneSpeedSeries& lane_speeds() const { return speeds_; }
    RunStatistics result() const;

private:
    StatisticsOptions options_;
    SpaceTimeGrid grid_;
    LaneSpeedSeries speeds_;
    std::unordered_map<VehicleId, double> last_t_;
    std::uint64_t rows_ = 0;
    double ttd_ = 0.0;
    double ttt_ = 0.0;
    std::vector<double> lane_ttd_;
    std::vector<double> lane_ttt_;
    std::map<std::string, double> class_ttd_;
};

// Trajectory text file.
inline constexpr const char* kTrajectoryHeader = "t,veh_id,class,lane,pos_m,speed_mps,accel_mps2,soc_kwh";

class TrajectoryWriter : public TrajectorySink {
public:
    explicit TrajectoryWriter(std::ostream& out);
    ~TrajectoryWriter() override;
    void on_row(const TrajectoryRow& row) override;
    void flush();

private:
    std::ostream& out_;
    std::string buffer_;
};

std::string format_fixed6(double value);

// Streams every row of a trajectory file to `fn`. Malformed text raises DataError.
void read_trajectory(std::istream& in, const std::function<void(const TrajectoryRow&)>& fn,
                     const std::string& source = "<trajectory>");

// Column files written by `analyze`.
void write_edie_grid(std::ostream& out, const SpaceTimeGrid& grid);
// Speed over all main lanes per cell (TTD/TTT pooled across lanes).
void write_heatmap(std::ostream& out, const SpaceTimeGrid& grid);
void write_lane_speeds(std::ostream& out, const LaneSpeedSeries& series, double window);

}  // namespace cwdsim
