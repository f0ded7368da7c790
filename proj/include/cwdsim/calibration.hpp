#pragma once

#include "cwdsim/distributions.hpp"
#include "cwdsim/dynamics.hpp"
#include "cwdsim/vehicle_class.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cwdsim {

// A recorded leader/follower pair sampled at a fixed step.
struct TrajectoryPair {
    std::string name;
    VehicleClass follower_class = VehicleClass::HV;
    VehicleClass leader_class = VehicleClass::HV;
    double leader_length = 5.0;
    double follower_length = 5.0;
    double dt = 0.1;
    std::vector<double> t;
    std::vector<double> leader_pos;  // front bumper, m
    std::vector<double> leader_speed;
    std::vector<double> follower_pos;
    std::vector<double> follower_speed;

    std::size_t size() const { return t.size(); }
    double gap(std::size_t j) const { return leader_pos[j] - leader_length - follower_pos[j]; }
    // Strictly increasing t at step dt, equal column lengths, positive gaps.
    void validate() const;
};

// Text form: `# key=value` metadata lines (follower_class, leader_class,
// leader_length_m, follower_length_m, dt_s), then a CSV table with header
// t,leader_pos,leader_speed,follower_pos,follower_speed.
TrajectoryPair read_pair(std::istream& in, const std::string& name = "<pair>");
TrajectoryPair load_pair(const std::filesystem::path& path);
void write_pair(std::ostream& out, const TrajectoryPair& pair);
// Every *.csv file in `dir`, sorted by file name.
std::vector<TrajectoryPair> load_pairs(const std::filesystem::path& dir);

// Calibrated IDM parameters.
struct Chromosome {
    double accel = 1.0;     // a_n
    double decel = 1.5;     // b_n
    double headway = 1.5;   // T_n
    double standstill = 2.0;

    static constexpr std::size_t kGenes = 4;
    double& gene(std::size_t i);
    double gene(std::size_t i) const;
};

struct GeneBounds {
    std::array<double, Chromosome::kGenes> lo{0.3, 0.3, 0.3, 0.5};
    std::array<double, Chromosome::kGenes> hi{5.0, 5.0, 3.5, 6.0};

    bool contains(const Chromosome& c) const;
};

IdmParams idm_from(const Chromosome& c, double desired_speed);

struct FollowerTrace {
    std::vector<double> pos;
    std::vector<double> speed;
    // Index of the first step whose gap was not positive, if any.
    std::optional<std::size_t> collision_at;
};

// Replays the follower with IDM(c) behind the recorded leader, starting from
// the observed initial state. Same update as the engine: speed floored at 0,
// then position from the new speed.
FollowerTrace simulate_follower(const TrajectoryPair& pair, const Chromosome& c);

// Error added for every sample after a simulated collision, in the mixed
// m + m/s units of the error sum.
inline constexpr double kCollisionPenalty = 1.0e4;

struct ErrorWeights {
    double position = 1.0;
    double speed = 1.0;
};

// Sum over samples of w_p |p_obs - p_sim| + w_v |v_obs - v_sim|.
double trajectory_error(const TrajectoryPair& pair, const Chromosome& c, const ErrorWeights& weights = {});
// 1 / (1 + error); in (0, 1].
double fitness(const Chromosome& c, const TrajectoryPair& pair, const ErrorWeights& weights = {});
double fitness(const Chromosome& c, const std::vector<TrajectoryPair>& pairs, const ErrorWeights& weights = {});

struct GaConfig {
    std::size_t population = 80;
    std::size_t generations = 40;
    double mutation_rate = 0.1;   // per gene
    double mutation_sigma = 0.05; // fraction of the gene's bound range
    double crossover_rate = 0.9;  // uniform crossover
    std::size_t tournament = 3;
    std::size_t elitism = 2;
    std::uint64_t seed = 1;
    GeneBounds bounds;
    ErrorWeights weights;
    std::optional<double> fixed_standstill;  // freeze s0 at this value
    // Seeds the initial population with copies of this chromosome instead of
    // uniform draws.
    std::optional<Chromosome> clone_of;

    void validate() const;
};

struct GaResult {
    Chromosome best;
    double best_fitness = 0.0;
    // Best-so-far fitness: entry 0 is the initial population, entry g the
    // state after generation g.
    std::vector<double> history;
};

GaResult ga_calibrate(const std::vector<TrajectoryPair>& pairs, const GaConfig& config);
GaResult ga_calibrate(const TrajectoryPair& pair, const GaConfig& config);

// Fitting of calibrated parameter populations.
Weibull fit_weibull(const std::vector<double>& samples);
Rayleigh fit_rayleigh(const std::vector<double>& samples);
ExpNorm fit_expnorm(const std::vector<double>& samples);

// Kolmogorov-Smirnov distance between the samples and a CDF.
template <typename Dist>
double ks_statistic(std::vector<double> samples, const Dist& dist);

struct ClassFit {
    ClassDistributions dists;
    double ks_accel = 0.0;
    double ks_decel = 0.0;
    double ks_headway = 0.0;
    std::size_t samples = 0;
};

// Needs at least 30 chromosomes; degenerate samples raise FitError.
ClassFit fit_distributions(const std::vector<Chromosome>& calibrated);

struct StandstillEstimate {
    std::optional<double> hv_hv;
    std::optional<double> dt_dt;
    std::optional<double> hv_dt;  // HV following DT
    std::optional<double> dt_hv;  // DT following HV
    std::array<std::size_t, 4> events{};  // same order

    // Entries without events, by name.
    std::vector<std::string> missing() const;
};

// Mean bumper gap over standstill episodes (both speeds < 0.5 m/s), grouped
// by follower/leader class. Each contiguous episode counts once with its
// mean gap.
StandstillEstimate standstill_gap_table(const std::vector<TrajectoryPair>& pairs);

}  // namespace cwdsim
