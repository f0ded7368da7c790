#include "cwdsim/calibration.hpp"

#include "cwdsim/errors.hpp"
#include "cwdsim/kvtext.hpp"
#include "cwdsim/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace cwdsim {

namespace fs = std::filesystem;

void TrajectoryPair::validate() const {
    const auto n = t.size();
    if (n < 2) throw DataError(name + ": a pair needs at least two samples");
    if (leader_pos.size() != n || leader_speed.size() != n || follower_pos.size() != n || follower_speed.size() != n) {
        throw DataError(name + ": columns differ in length");
    }
    if (!(dt > 0.0)) throw DataError(name + ": dt must be positive");
    if (!(leader_length > 0.0 && follower_length > 0.0)) throw DataError(name + ": lengths must be positive");
    for (std::size_t j = 0; j < n; ++j) {
        if (j > 0) {
            if (!(t[j] > t[j - 1])) throw DataError(name + ": time must be strictly increasing");
            if (std::abs((t[j] - t[j - 1]) - dt) > 1e-6) throw DataError(name + ": samples are not dt apart");
        }
        if (!(gap(j) > 0.0)) throw DataError(name + ": leader gap must stay positive");
    }
}

namespace {

double parse_number(std::string_view text, const std::string& where) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw DataError(where + ": bad number `" + std::string(text) + "`");
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

TrajectoryPair read_pair(std::istream& in, const std::string& name) {
    TrajectoryPair p;
    p.name = name;
    std::string line;
    bool header_seen = false;
    int lineno = 0;
    bool have_follower = false;
    bool have_leader = false;
    bool have_dt = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = name + ":" + std::to_string(lineno);
        const auto text = trim(line);
        if (text.empty()) continue;
        if (text[0] == '#') {
            const auto body = trim(std::string_view(text).substr(1));
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            const auto key = trim(std::string_view(body).substr(0, eq));
            const auto value = trim(std::string_view(body).substr(eq + 1));
            if (key == "follower_class") {
                p.follower_class = parse_vehicle_class(value);
                have_follower = true;
            } else if (key == "leader_class") {
                p.leader_class = parse_vehicle_class(value);
                have_leader = true;
            } else if (key == "leader_length_m") {
                p.leader_length = parse_number(value, where);
            } else if (key == "follower_length_m") {
                p.follower_length = parse_number(value, where);
            } else if (key == "dt_s") {
                p.dt = parse_number(value, where);
                have_dt = true;
            } else {
                throw DataError(where + ": unknown pair metadata `" + key + "`");
            }
            continue;
        }
        if (!header_seen) {
            if (text != "t,leader_pos,leader_speed,follower_pos,follower_speed") {
                throw DataError(where + ": unexpected pair header");
            }
            header_seen = true;
            continue;
        }
        std::array<double, 5> v{};
        std::string_view rest = text;
        for (std::size_t i = 0; i < 5; ++i) {
            const auto comma = rest.find(',');
            if ((i < 4) == (comma == std::string_view::npos)) throw DataError(where + ": expected 5 fields");
            v[i] = parse_number(rest.substr(0, comma), where);
            if (i < 4) rest.remove_prefix(comma + 1);
        }
        p.t.push_back(v[0]);
        p.leader_pos.push_back(v[1]);
        p.leader_speed.push_back(v[2]);
        p.follower_pos.push_back(v[3]);
        p.follower_speed.push_back(v[4]);
    }
    if (!have_follower || !have_leader) throw DataError(name + ": follower_class and leader_class are required");
    if (!header_seen) throw DataError(name + ": missing pair table");
    if (!have_dt && p.t.size() >= 2) p.dt = p.t[1] - p.t[0];
    if (p.leader_length <= 0.0 || p.follower_length <= 0.0) throw DataError(name + ": lengths must be positive");
    p.validate();
    return p;
}

TrajectoryPair load_pair(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pair file " + path.string());
    return read_pair(in, path.filename().string());
}

void write_pair(std::ostream& out, const TrajectoryPair& p) {
    out << "# follower_class=" << to_string(p.follower_class) << '\n'
        << "# leader_class=" << to_string(p.leader_class) << '\n'
        << "# leader_length_m=" << format_double(p.leader_length) << '\n'
        << "# follower_length_m=" << format_double(p.follower_length) << '\n'
        << "# dt_s=" << format_double(p.dt) << '\n'
        << "t,leader_pos,leader_speed,follower_pos,follower_speed\n";
    for (std::size_t j = 0; j < p.size(); ++j) {
        out << format_double(p.t[j]) << ',' << format_double(p.leader_pos[j]) << ','
            << format_double(p.leader_speed[j]) << ',' << format_double(p.follower_pos[j]) << ','
            << format_double(p.follower_speed[j]) << '\n';
    }
}

std::vector<TrajectoryPair> load_pairs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<TrajectoryPair> pairs;
    for (const auto& f : files) pairs.push_back(load_pair(f));
    return pairs;
}

double& Chromosome::gene(std::size_t i) {
    switch (i) {
        case 0:
            return accel;
        case 1:
            return decel;
        case 2:
            return headway;
        default:
            return standstill;
    }
}

double Chromosome::gene(std::size_t i) const { return const_cast<Chromosome*>(this)->gene(i); }

bool GeneBounds::contains(const Chromosome& c) const {
    for (std::size_t i = 0; i < Chromosome::kGenes; ++i) {
        if (c.gene(i) < lo[i] || c.gene(i) > hi[i]) return false;
    }
    return true;
}

IdmParams idm_from(const Chromosome& c, double desired_speed) {
    IdmParams p;
    p.accel = c.accel;
    p.decel = c.decel;
    p.headway = c.headway;
    p.standstill = c.standstill;
    p.exponent = 4.0;
    p.desired_speed = desired_speed;
    return p;
}

FollowerTrace simulate_follower(const TrajectoryPair& pair, const Chromosome& c) {
    const auto n = pair.size();
    const auto params = idm_from(c, class_desired_speed(pair.follower_class));
    FollowerTrace trace;
    trace.pos.resize(n);
    trace.speed.resize(n);
    double x = pair.follower_pos[0];
    double v = pair.follower_speed[0];
    trace.pos[0] = x;
    trace.speed[0] = v;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double gap = pair.leader_pos[j] - pair.leader_length - x;
        if (!(gap > 0.0)) {
            trace.collision_at = j;
            for (std::size_t k = j + 1; k < n; ++k) {
                trace.pos[k] = x;
                trace.speed[k] = v;
            }
            return trace;
        }
        const double a = idm_acceleration(v, gap, v - pair.leader_speed[j], params);
        v = std::max(0.0, v + a * pair.dt);
        x += v * pair.dt;
        trace.pos[j + 1] = x;
        trace.speed[j + 1] = v;
    }
    const double last_gap = pair.leader_pos[n - 1] - pair.leader_length - x;
    if (!(last_gap > 0.0)) trace.collision_at = n - 1;
    return trace;
}

double trajectory_error(const TrajectoryPair& pair, const Chromosome& c, const ErrorWeights& weights) {
    const auto trace = simulate_follower(pair, c);
    double error = 0.0;
    for (std::size_t j = 0; j < pair.size(); ++j) {
        if (trace.collision_at && j >= *trace.collision_at) {
            error += kCollisionPenalty;
            continue;
        }
        error += weights.position * std::abs(pair.follower_pos[j] - trace.pos[j]) +
                 weights.speed * std::abs(pair.follower_speed[j] - trace.speed[j]);
    }
    return error;
}

double fitness(const Chromosome& c, const TrajectoryPair& pair, const ErrorWeights& weights) {
    return 1.0 / (1.0 + trajectory_error(pair, c, weights));
}

double fitness(const Chromosome& c, const std::vector<TrajectoryPair>& pairs, const ErrorWeights& weights) {
    double error = 0.0;
    for (const auto& p : pairs) error += trajectory_error(p, c, weights);
    return 1.0 / (1.0 + error);
}

void GaConfig::validate() const {
    if (population < 2) throw ConfigError("GA population must exceed 1");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ConfigError("mutation rate must lie in [0, 1]");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ConfigError("crossover rate must lie in [0, 1]");
    if (!(mutation_sigma >= 0.0)) throw ConfigError("mutation sigma must be non-negative");
    if (!(weights.position >= 0.0 && weights.speed >= 0.0)) throw ConfigError("error weights must be non-negative");
    if (tournament < 1) throw ConfigError("tournament size must be at least 1");
    if (elitism >= population) throw ConfigError("elitism must be smaller than the population");
    for (std::size_t i = 0; i < Chromosome::kGenes; ++i) {
        if (!(bounds.lo[i] > 0.0 && bounds.hi[i] >= bounds.lo[i])) throw ConfigError("bad gene bounds");
    }
    if (fixed_standstill && (*fixed_standstill < bounds.lo[3] || *fixed_standstill > bounds.hi[3])) {
        throw ConfigError("frozen standstill gap lies outside its bounds");
    }
}

namespace {

struct Individual {
    Chromosome genes;
    double fit = 0.0;
};

// One stream per (generation, slot) so each child's draws are independent of
// how the others were produced.
RandomStream individual_stream(std::uint64_t seed, std::size_t generation, std::size_t slot) {
    return RandomStream(seed, stream::kGenetic + (static_cast<std::uint64_t>(generation) << 24) + slot);
}

std::size_t tournament_pick(const std::vector<Individual>& pop, std::size_t size, RandomStream& rng) {
    std::size_t best = static_cast<std::size_t>(rng.uniform() * static_cast<double>(pop.size()));
    for (std::size_t k = 1; k < size; ++k) {
        const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(pop.size()));
        if (pop[i].fit > pop[best].fit) best = i;
    }
    return best;
}

}  // namespace

GaResult ga_calibrate(const std::vector<TrajectoryPair>& pairs, const GaConfig& config) {
    if (pairs.empty()) throw DataError("calibration needs at least one trajectory pair");
    config.validate();
    const auto& bounds = config.bounds;
    const std::size_t free_genes = config.fixed_standstill ? 3 : 4;

    auto sort_population = [](std::vector<Individual>& pop) {
        std::stable_sort(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) { return a.fit > b.fit; });
    };

    std::vector<Individual> pop(config.population);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        auto rng = individual_stream(config.seed, 0, i);
        if (config.clone_of) {
            pop[i].genes = *config.clone_of;
        } else {
            for (std::size_t g = 0; g < Chromosome::kGenes; ++g) pop[i].genes.gene(g) = rng.uniform(bounds.lo[g], bounds.hi[g]);
        }
        if (config.fixed_standstill) pop[i].genes.standstill = *config.fixed_standstill;
        pop[i].fit = fitness(pop[i].genes, pairs, config.weights);
    }
    sort_population(pop);

    GaResult result;
    result.best = pop[0].genes;
    result.best_fitness = pop[0].fit;
    result.history.push_back(result.best_fitness);

    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        std::vector<Individual> next(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(config.elitism));
        for (std::size_t slot = config.elitism; slot < config.population; ++slot) {
            auto rng = individual_stream(config.seed, gen, slot);
            const auto& p1 = pop[tournament_pick(pop, config.tournament, rng)].genes;
            const auto& p2 = pop[tournament_pick(pop, config.tournament, rng)].genes;
            Individual child{p1, 0.0};
            if (rng.uniform() < config.crossover_rate) {
                for (std::size_t g = 0; g < free_genes; ++g) {
                    if (rng.uniform() < 0.5) child.genes.gene(g) = p2.gene(g);
                }
            }
            for (std::size_t g = 0; g < free_genes; ++g) {
                if (rng.uniform() < config.mutation_rate) {
                    const double sigma = config.mutation_sigma * (bounds.hi[g] - bounds.lo[g]);
                    const double value = child.genes.gene(g) + sigma * rng.standard_normal();
                    child.genes.gene(g) = std::clamp(value, bounds.lo[g], bounds.hi[g]);
                }
            }
            child.fit = fitness(child.genes, pairs, config.weights);
            next.push_back(child);
        }
        pop = std::move(next);
        sort_population(pop);
        if (pop[0].fit > result.best_fitness) {
            result.best = pop[0].genes;
            result.best_fitness = pop[0].fit;
        }
        result.history.push_back(result.best_fitness);
    }
    return result;
}

GaResult ga_calibrate(const TrajectoryPair& pair, const GaConfig& config) {
    return ga_calibrate(std::vector<TrajectoryPair>{pair}, config);
}

namespace {

void require_fit_sample(const std::vector<double>& x, std::size_t minimum = 2) {
    if (x.size() < minimum) throw FitError("too few samples to fit a distribution");
    for (double v : x) {
        if (!std::isfinite(v)) throw FitError("samples must be finite");
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (!(*hi > *lo)) throw FitError("samples have zero variance");
}

}  // namespace

Weibull fit_weibull(const std::vector<double>& samples) {
    require_fit_sample(samples);
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double range = *hi_it - *lo_it;
    Weibull w;
    w.location = *lo_it - 1e-3 * range;

    const auto n = static_cast<double>(samples.size());
    std::vector<double> y(samples.size());
    std::vector<double> log_y(samples.size());
    double mean_log = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        y[i] = (samples[i] - w.location) / range;  // rescaled for numerical range
        log_y[i] = std::log(y[i]);
        mean_log += log_y[i];
    }
    mean_log /= n;

    // Profile-likelihood equation for the shape k:
    // sum(y^k ln y) / sum(y^k) - 1/k - mean(ln y) = 0, increasing in k.
    auto equation = [&](double k, double* slope) {
        double s0 = 0.0;
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double yk = std::exp(k * log_y[i]);
            s0 += yk;
            s1 += yk * log_y[i];
            s2 += yk * log_y[i] * log_y[i];
        }
        if (slope) *slope = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (k * k);
        return s1 / s0 - 1.0 / k - mean_log;
    };
    double lo = 1e-3;
    double hi = 1.0;
    while (equation(hi, nullptr) < 0.0) {
        hi *= 2.0;
        if (hi > 1e4) throw FitError("Weibull shape does not converge");
    }
    double k = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        double slope = 0.0;
        const double f = equation(k, &slope);
        if (f > 0.0) {
            hi = k;
        } else {
            lo = k;
        }
        double next = k - f / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - k) < 1e-12 * k) {
            k = next;
            break;
        }
        k = next;
    }
    double mean_yk = 0.0;
    for (double v : log_y) mean_yk += std::exp(k * v);
    mean_yk /= n;
    w.shape = k;
    w.scale = range * std::pow(mean_yk, 1.0 / k);
    return w;
}

Rayleigh fit_rayleigh(const std::vector<double>& samples) {
    require_fit_sample(samples);
    double sum_sq = 0.0;
    for (double x : samples) {
        if (x < 0.0) throw FitError("Rayleigh samples must be non-negative");
        sum_sq += x * x;
    }
    return Rayleigh{std::sqrt(sum_sq / (2.0 * static_cast<double>(samples.size())))};
}

ExpNorm fit_expnorm(const std::vector<double>& samples) {
    require_fit_sample(samples, 3);
    const auto n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double m2 = 0.0;
    double m3 = 0.0;
    for (double x : samples) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    const double skew = m3 / std::pow(m2, 1.5);
    // skew = 2 u^(3/2) with u = K^2 / (1 + K^2); the family covers skew in (0, 2).
    const double u = std::clamp(std::pow(std::max(skew, 0.0) / 2.0, 2.0 / 3.0), 1e-12, 1.0 - 1e-9);
    ExpNorm e;
    e.shape = std::sqrt(u / (1.0 - u));
    e.scale = std::sqrt(m2 / (1.0 + e.shape * e.shape));
    e.location = mean - e.shape * e.scale;
    return e;
}

template <typename Dist>
double ks_statistic(std::vector<double> samples, const Dist& dist) {
    if (samples.empty()) throw FitError("no samples for the KS statistic");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = dist.cdf(samples[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

template double ks_statistic<Weibull>(std::vector<double>, const Weibull&);
template double ks_statistic<Rayleigh>(std::vector<double>, const Rayleigh&);
template double ks_statistic<ExpNorm>(std::vector<double>, const ExpNorm&);

ClassFit fit_distributions(const std::vector<Chromosome>& calibrated) {
    if (calibrated.size() < 30) throw FitError("distribution fitting needs at least 30 calibrated vehicles");
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> t;
    for (const auto& c : calibrated) {
        a.push_back(c.accel);
        b.push_back(c.decel);
        t.push_back(c.headway);
    }
    ClassFit fit;
    fit.dists.accel = fit_weibull(a);
    fit.dists.decel = fit_rayleigh(b);
    fit.dists.headway = fit_expnorm(t);
    fit.ks_accel = ks_statistic(a, fit.dists.accel);
    fit.ks_decel = ks_statistic(b, fit.dists.decel);
    fit.ks_headway = ks_statistic(t, fit.dists.headway);
    fit.samples = calibrated.size();
    return fit;
}

std::vector<std::string> StandstillEstimate::missing() const {
    std::vector<std::string> out;
    if (!hv_hv) out.emplace_back("hv_hv");
    if (!dt_dt) out.emplace_back("dt_dt");
    if (!hv_dt) out.emplace_back("hv_dt");
    if (!dt_hv) out.emplace_back("dt_hv");
    return out;
}

StandstillEstimate standstill_gap_table(const std::vector<TrajectoryPair>& pairs) {
    constexpr double kStandstillSpeed = 0.5;
    std::array<double, 4> sums{};
    std::array<std::size_t, 4> counts{};
    for (const auto& p : pairs) {
        const bool f_hv = p.follower_class == VehicleClass::HV;
        const bool f_dt = p.follower_class == VehicleClass::DT;
        const bool l_hv = p.leader_class == VehicleClass::HV;
        const bool l_dt = p.leader_class == VehicleClass::DT;
        int group = -1;
        if (f_hv && l_hv) group = 0;
        if (f_dt && l_dt) group = 1;
        if (f_hv && l_dt) group = 2;
        if (f_dt && l_hv) group = 3;
        if (group < 0) continue;
        double episode_sum = 0.0;
        std::size_t episode_len = 0;
        auto close_episode = [&] {
            if (episode_len == 0) return;
            sums[static_cast<std::size_t>(group)] += episode_sum / static_cast<double>(episode_len);
            counts[static_cast<std::size_t>(group)] += 1;
            episode_sum = 0.0;
            episode_len = 0;
        };
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (p.leader_speed[j] < kStandstillSpeed && p.follower_speed[j] < kStandstillSpeed) {
                episode_sum += p.gap(j);
                ++episode_len;
            } else {
                close_episode();
            }
        }
        close_episode();
    }
    StandstillEstimate est;
    std::array<std::optional<double>*, 4> slots{&est.hv_hv, &est.dt_dt, &est.hv_dt, &est.dt_hv};
    for (std::size_t g = 0; g < 4; ++g) {
        if (counts[g] > 0) *slots[g] = sums[g] / static_cast<double>(counts[g]);
    }
    est.events = counts;
    return est;
}

}  // namespace cwdsim
