#include "cwdsim/engine.hpp"

#include "cwdsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cwdsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kWindowEps = 1e-9;
// Entry speeds below this are treated as a stop when counting stopped merges.
constexpr double kStoppedSpeed = 0.1;
// Bumper clearance the emergency guard keeps in reserve, m.
constexpr double kGuardMargin = 0.5;

}  // namespace

double quantize_micro(double value) {
    const double q = std::round(value * 1e6) / 1e6;
    return q == 0.0 ? 0.0 : q;  // no negative zero in files
}

Simulation::Simulation(ScenarioConfig config, const EmissionFactorTable& table, DriverParamDistributions distributions)
    : config_(std::move(config)),
      table_(&table),
      distributions_(std::move(distributions)),
      arrival_rng_(config_.seed, stream::kArrivals),
      fleet_rng_(config_.seed, stream::kFleet),
      driver_rng_(config_.seed, stream::kDrivers),
      soc_rng_(config_.seed, stream::kInitialSoc),
      entry_rng_(config_.seed, stream::kEntrySpeed) {
    config_.validate();
    const auto lanes = static_cast<std::size_t>(config_.layout.lane_count + 1);
    lanes_.assign(lanes, {});
    queues_.assign(lanes, {});
    next_arrival_.assign(lanes, kInf);
    counters_.max_queue.assign(lanes, 0);
    counters_.queued_final.assign(lanes, 0);
    for (std::size_t lane = 0; lane < lanes; ++lane) {
        const double per_hour = lane == 0 ? config_.ramp_flow : config_.main_flow;
        if (per_hour > 0.0) next_arrival_[lane] = arrival_rng_.exponential(3600.0 / per_hour);
    }
}

std::uint64_t Simulation::total_steps() const {
    return static_cast<std::uint64_t>(std::llround(config_.duration / config_.timestep));
}

const Vehicle* Simulation::find(VehicleId id) const {
    for (const auto& v : vehicles_) {
        if (v.id == id) return &v;
    }
    return nullptr;
}

double Simulation::speed_cap(const Vehicle& v, int lane) const {
    const auto& layout = config_.layout;
    double cap = std::min(v.desired_speed, kmh_to_mps(layout.main_speed_limit));
    if (lane == kRampLane) {
        cap = std::min(cap, kmh_to_mps(layout.ramp_speed_limit));
    } else if ((config_.cwd_cap_scope == CwdCapScope::All || is_electric(v.cls)) &&
               layout.overlaps_cwd(lane, v.rear(), v.pos)) {
        cap = std::min(cap, kmh_to_mps(layout.cwd_speed_limit));
    }
    return cap;
}

std::optional<Simulation::Obstacle> Simulation::obstacle_for(const Vehicle& v, int lane, const Vehicle* leader) const {
    std::optional<Obstacle> out;
    if (leader) out = Obstacle{leader->rear(), leader->speed, leader->accel, leader->cls, leader->cls == VehicleClass::AV};
    if (lane == kRampLane) {
        // End of the acceleration lane: a standing obstacle known to every vehicle.
        const double end = config_.layout.ramp_end();
        if (!out || end < out->rear) out = Obstacle{end, 0.0, 0.0, v.cls, true};
    }
    return out;
}

double Simulation::accel_against(const Vehicle& v, int lane, const std::optional<Obstacle>& obstacle,
                                 bool* clamped, bool* guarded) const {
    const double cap = speed_cap(v, lane);
    double a = 0.0;
    bool was_clamped = false;
    if (const auto* idm = std::get_if<IdmParams>(&v.driver)) {
        IdmParams p = *idm;
        p.desired_speed = cap;
        double gap = kInf;
        double dv = 0.0;
        if (obstacle) {
            if (v.cls == VehicleClass::HV || v.cls == VehicleClass::DT) {
                p.standstill = standstill_gap(v.cls, obstacle->cls, distributions_.standstill);
            }
            gap = obstacle->rear - v.pos;
            dv = v.speed - obstacle->speed;
        }
        const double raw = idm_acceleration_raw(v.speed, gap, dv, p);
        was_clamped = raw < -kEmergencyDecel;
        a = std::max(raw, -kEmergencyDecel);
    } else {
        const auto& p = std::get<VanAremParams>(v.driver);
        std::optional<TargetObservation> target;
        if (obstacle) {
            const double gap = obstacle->rear - v.pos;
            if (!(gap > 0.0)) throw CollisionError("AV evaluated with non-positive gap");
            if (gap <= (obstacle->connected ? p.r_conn : p.r_iso)) {
                target = TargetObservation{gap, obstacle->speed, obstacle->accel};
            }
        }
        a = van_arem_acceleration(v.speed, cap, target, p);
    }
    if (config_.layout.grade > 0.0) a = slope_adjust(a, config_.layout.grade, v.cls, config_.slope_form);
    bool was_guarded = false;
    if (obstacle) {
        // Last-resort bound: keep a speed from which an emergency stop behind
        // a leader braking equally hard stays clear of it.
        const double dt = config_.timestep;
        const double b = kEmergencyDecel;
        const double room = obstacle->rear - v.pos - kGuardMargin;
        const double arg = b * b * dt * dt + obstacle->speed * obstacle->speed + 2.0 * b * room;
        const double v_safe = arg > 0.0 ? std::max(0.0, -b * dt + std::sqrt(arg)) : 0.0;
        const double a_guard = (v_safe - v.speed) / dt;
        if (a > a_guard) {
            a = a_guard;
            was_guarded = true;
        }
    }
    if (clamped) *clamped = was_clamped;
    if (guarded) *guarded = was_guarded;
    return a;
}

double Simulation::acceleration_for(const Vehicle& v, int lane, const Vehicle* leader, bool* clamped,
                                    bool* guarded) const {
    return accel_against(v, lane, obstacle_for(v, lane, leader), clamped, guarded);
}

void Simulation::rebuild_lanes() {
    for (auto& lane : lanes_) lane.clear();
    for (std::size_t i = 0; i < vehicles_.size(); ++i) lanes_[static_cast<std::size_t>(vehicles_[i].lane)].push_back(i);
    for (auto& lane : lanes_) {
        std::sort(lane.begin(), lane.end(), [this](std::size_t a, std::size_t b) {
            if (vehicles_[a].pos != vehicles_[b].pos) return vehicles_[a].pos > vehicles_[b].pos;
            return vehicles_[a].id < vehicles_[b].id;
        });
    }
}

Simulation::Neighbors Simulation::neighbors_at(int lane, double pos, std::size_t exclude) const {
    const auto& order = lanes_[static_cast<std::size_t>(lane)];
    Neighbors out;
    auto it = std::partition_point(order.begin(), order.end(), [&](std::size_t j) { return vehicles_[j].pos >= pos; });
    // Walk past the subject itself when looking up its own lane.
    auto lead = it;
    while (lead != order.begin()) {
        --lead;
        if (*lead != exclude) {
            out.leader = &vehicles_[*lead];
            break;
        }
    }
    for (auto f = it; f != order.end(); ++f) {
        if (*f != exclude) {
            out.follower = &vehicles_[*f];
            break;
        }
    }
    return out;
}

namespace {

struct LaneLinks {
    std::vector<std::ptrdiff_t> leader;
    std::vector<std::ptrdiff_t> follower;
};

LaneLinks link_lanes(const std::vector<std::vector<std::size_t>>& lanes, std::size_t count) {
    LaneLinks links{std::vector<std::ptrdiff_t>(count, -1), std::vector<std::ptrdiff_t>(count, -1)};
    for (const auto& order : lanes) {
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (k > 0) links.leader[order[k]] = static_cast<std::ptrdiff_t>(order[k - 1]);
            if (k + 1 < order.size()) links.follower[order[k]] = static_cast<std::ptrdiff_t>(order[k + 1]);
        }
    }
    return links;
}

}  // namespace

std::optional<CandidateLane> Simulation::evaluate_candidate(std::size_t index, int target,
                                                            const Neighbors& around) const {
    const Vehicle& v = vehicles_[index];
    if (around.leader && !(around.leader->rear() - v.pos > 0.0)) return std::nullopt;
    if (around.follower && !(v.rear() - around.follower->pos > 0.0)) return std::nullopt;
    CandidateLane c;
    c.own_accel_after = acceleration_for(v, target, around.leader);
    if (around.follower) {
        const Vehicle& f = *around.follower;
        const auto f_index = static_cast<std::size_t>(&f - vehicles_.data());
        FollowerEffect effect;
        effect.before = current_accel_[f_index];
        effect.after =
            accel_against(f, target, Obstacle{v.rear(), v.speed, v.accel, v.cls, v.cls == VehicleClass::AV}, nullptr,
                          nullptr);
        c.new_follower = effect;
    }
    if (v.lane != kRampLane) {
        const auto& layout = config_.layout;
        const int section = section_of(std::clamp(v.pos, 0.0, layout.length), layout);
        const Battery* battery = v.battery ? &*v.battery : nullptr;
        c.bias = cwd_incentive(v.cls, battery, v.lane, target, section, layout, config_.mobil,
                               config_.energy.low_soc_fraction);
        const int cwd_lane = layout.cwd_lane_at(section);
        c.toward_cwd = cwd_lane != 0 && std::abs(target - cwd_lane) < std::abs(v.lane - cwd_lane);
    }
    return c;
}

void Simulation::decide_lane_changes(const std::vector<double>& current_accel) {
    (void)current_accel;
    const auto& layout = config_.layout;
    const int lane_count = layout.lane_count;
    const auto links = link_lanes(lanes_, vehicles_.size());
    requests_.clear();
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        const Vehicle& v = vehicles_[i];
        const bool merging = v.lane == kRampLane;
        if (merging && !(v.pos >= layout.ramp_position && v.pos <= layout.ramp_end())) continue;
        if (!merging && v.cooldown > 0.0) continue;

        Neighborhood hood;
        hood.own_accel = current_accel_[i];
        if (links.follower[i] >= 0) {
            const Vehicle& f = vehicles_[static_cast<std::size_t>(links.follower[i])];
            const Vehicle* new_leader =
                links.leader[i] >= 0 ? &vehicles_[static_cast<std::size_t>(links.leader[i])] : nullptr;
            hood.old_follower =
                FollowerEffect{current_accel_[static_cast<std::size_t>(links.follower[i])],
                               acceleration_for(f, v.lane, new_leader)};
        }
        if (merging) {
            hood.left = evaluate_candidate(i, lane_count, neighbors_at(lane_count, v.pos, i));
            if (mobil_decision(hood, config_.mobil, true) == LaneChoice::Left) requests_.push_back({i, lane_count});
            continue;
        }
        if (v.lane > 1) hood.left = evaluate_candidate(i, v.lane - 1, neighbors_at(v.lane - 1, v.pos, i));
        if (v.lane < lane_count) hood.right = evaluate_candidate(i, v.lane + 1, neighbors_at(v.lane + 1, v.pos, i));
        switch (mobil_decision(hood, config_.mobil)) {
            case LaneChoice::Left:
                requests_.push_back({i, v.lane - 1});
                break;
            case LaneChoice::Right:
                requests_.push_back({i, v.lane + 1});
                break;
            case LaneChoice::Stay:
                break;
        }
    }
}

void Simulation::apply_lane_changes(std::vector<LaneChangeRequest>& requests) {
    std::sort(requests.begin(), requests.end(), [this](const LaneChangeRequest& a, const LaneChangeRequest& b) {
        const auto& va = vehicles_[a.index];
        const auto& vb = vehicles_[b.index];
        if (va.pos != vb.pos) return va.pos > vb.pos;
        return va.id < vb.id;
    });
    for (const auto& req : requests) {
        Vehicle& v = vehicles_[req.index];
        const auto candidate = evaluate_candidate(req.index, req.target, neighbors_at(req.target, v.pos, req.index));
        if (!candidate || !mobil_safe(*candidate, config_.mobil)) {
            ++counters_.conflicts;
            continue;
        }
        auto& from = lanes_[static_cast<std::size_t>(v.lane)];
        from.erase(std::find(from.begin(), from.end(), req.index));
        auto& to = lanes_[static_cast<std::size_t>(req.target)];
        auto at = std::partition_point(to.begin(), to.end(), [&](std::size_t j) {
            return vehicles_[j].pos > v.pos || (vehicles_[j].pos == v.pos && vehicles_[j].id < v.id);
        });
        to.insert(at, req.index);
        if (v.lane == kRampLane) {
            ++counters_.ramp_merges;
        } else {
            ++counters_.lane_changes;
        }
        v.lane = req.target;
        v.cooldown = config_.mobil.cooldown;
    }
}

bool Simulation::in_statistics_window() const {
    return static_cast<double>(step_index_) * config_.timestep >= config_.warmup - kWindowEps;
}

void Simulation::integrate(const std::vector<double>& accel) {
    const double dt = config_.timestep;
    const auto& layout = config_.layout;
    const bool counting = in_statistics_window();
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        Vehicle& v = vehicles_[i];
        const double a = accel[i];
        const double v_old = v.speed;
        const double v_raw = v_old + a * dt;
        const double v_new = std::max(0.0, v_raw);
        const double x_old = v.pos;
        v.speed = v_new;
        v.pos = x_old + v_new * dt;
        v.accel = v_raw >= 0.0 ? a : (v_new - v_old) / dt;
        v.cooldown = std::max(0.0, v.cooldown - dt);
        max_speed_seen_ = std::max(max_speed_seen_, v_new);
        const double distance = v.pos - x_old;

        if (v.battery) {
            const bool on_cwd = v.lane != kRampLane && v.pos <= layout.length &&
                                layout.is_cwd(v.lane, section_of(v.pos, layout));
            const auto delta = step_battery(*v.battery, distance, on_cwd, dt, config_.energy.charge_per_minute);
            v.consumed += delta.consumed;
            v.supplied += delta.supplied;
            if (counting) energy_.add(v.cls, delta);
            if (!(v.battery->soc >= 0.0 && v.battery->soc <= v.battery->capacity)) {
                throw InvariantViolation("SOC out of bounds for vehicle " + std::to_string(v.id) + "\n" + dump_state());
            }
            const double err = std::abs(v.battery->soc - (v.initial_soc - v.consumed + v.supplied));
            max_conservation_error_ = std::max(max_conservation_error_, err);
        }
        if (counting) accumulate_emissions(v.cls, distance, mps_to_kmh(v_new), v.lane, emissions_, *table_);

        if (v.lane == kRampLane && !v.stopped_at_ramp_end && v_new < kStoppedSpeed &&
            layout.ramp_end() - v.pos < 10.0) {
            v.stopped_at_ramp_end = true;
            ++counters_.stopped_merges;
        }
    }
}

void Simulation::check_invariants() const {
    for (std::size_t lane = 0; lane < lanes_.size(); ++lane) {
        const auto& order = lanes_[lane];
        for (std::size_t k = 1; k < order.size(); ++k) {
            const Vehicle& lead = vehicles_[order[k - 1]];
            const Vehicle& follow = vehicles_[order[k]];
            if (!(lead.rear() - follow.pos > 0.0)) {
                throw InvariantViolation("overlap in lane " + std::to_string(lane) + " between vehicles " +
                                         std::to_string(lead.id) + " and " + std::to_string(follow.id) + "\n" +
                                         dump_state());
            }
        }
        if (lane == kRampLane) {
            for (auto i : order) {
                if (vehicles_[i].pos > config_.layout.ramp_end() + 1e-9) {
                    throw InvariantViolation("vehicle " + std::to_string(vehicles_[i].id) +
                                             " ran past the acceleration lane\n" + dump_state());
                }
            }
        }
    }
}

void Simulation::record() {
    if ((step_index_ + 1) % static_cast<std::uint64_t>(config_.decimation) != 0) return;
    const double t = quantize_micro(static_cast<double>(step_index_ + 1) * config_.timestep);
    for (const auto& v : vehicles_) {
        TrajectoryRow row;
        row.t = t;
        row.veh_id = v.id;
        row.cls = v.cls;
        row.lane = v.lane;
        row.pos = quantize_micro(v.pos);
        row.speed = quantize_micro(v.speed);
        row.accel = quantize_micro(v.accel);
        if (v.battery) row.soc = quantize_micro(v.battery->soc);
        ++counters_.recorded_rows;
        for (auto* sink : sinks_) sink->on_row(row);
    }
}

void Simulation::remove_exited() {
    const double end = config_.layout.length;
    const auto before = vehicles_.size();
    std::erase_if(vehicles_, [end](const Vehicle& v) { return v.pos >= end; });
    counters_.exited += before - vehicles_.size();
}

double Simulation::entry_position(int lane) const { return lane == kRampLane ? config_.layout.ramp_entry() : 0.0; }

PendingArrival Simulation::draw_arrival(bool ramp) {
    const auto& mix = config_.mix;
    const double u = fleet_rng_.uniform();
    VehicleClass cls = VehicleClass::DT;
    if (u < mix.share_hv) {
        cls = VehicleClass::HV;
    } else if (u < mix.share_hv + mix.share_av) {
        cls = VehicleClass::AV;
    } else if (u < mix.share_hv + mix.share_av + mix.share_et) {
        cls = VehicleClass::ET;
    }
    if (ramp && !config_.ramp_uses_fleet_mix) cls = VehicleClass::HV;
    PendingArrival arrival{cls, sample_driver_params(cls, driver_rng_, distributions_), entry_rng_.uniform(),
                           soc_rng_.uniform(config_.energy.initial_soc_min, config_.energy.initial_soc_max)};
    return arrival;
}

namespace {

// Largest entry speed for which the follower's desired gap fits the actual gap.
double safe_entry_speed(const Vehicle& v, double gap, double leader_speed, double s0) {
    if (const auto* p = std::get_if<IdmParams>(&v.driver)) {
        if (gap < s0) return -1.0;
        const double c = 1.0 / (2.0 * std::sqrt(p->accel * p->decel));
        const double b = p->headway - c * leader_speed;
        return (-b + std::sqrt(b * b + 4.0 * c * (gap - s0))) / (2.0 * c);
    }
    const auto& p = std::get<VanAremParams>(v.driver);
    constexpr double kMinGap = 2.0;
    constexpr double kBrake = 4.0;
    if (gap < kMinGap) return -1.0;
    const double matched = (gap - kMinGap) / p.tau;
    if (matched <= leader_speed) return matched;
    const double k = gap - kMinGap + leader_speed * leader_speed / (2.0 * kBrake);
    return kBrake * (-p.tau + std::sqrt(p.tau * p.tau + 2.0 * k / kBrake));
}

}  // namespace

bool Simulation::try_insert(int lane, const PendingArrival& arrival) {
    const double x = entry_position(lane);
    const auto& order = lanes_[static_cast<std::size_t>(lane)];
    const Vehicle* leader = order.empty() ? nullptr : &vehicles_[order.back()];

    Vehicle v;
    v.cls = arrival.cls;
    v.length = vehicle_length(arrival.cls);
    v.lane = lane;
    v.pos = x;
    v.driver = arrival.driver;
    v.desired_speed = class_desired_speed(arrival.cls);

    const double floor_speed = kmh_to_mps(60.0);
    double target = floor_speed + arrival.entry_fraction * (v.desired_speed - floor_speed);
    target = std::min(target, speed_cap(v, lane));
    double speed = target;
    if (leader) {
        const double gap = leader->rear() - x;
        if (!(gap > 0.0)) return false;
        const double s0 = standstill_gap(v.cls, leader->cls, distributions_.standstill);
        const double safe = safe_entry_speed(v, gap, leader->speed, s0);
        if (safe < std::min(target, leader->speed)) return false;
        speed = std::min(target, safe);
    }
    v.speed = speed;
    v.id = next_id_++;
    v.battery = make_battery(v.cls, arrival.soc_fraction, config_.energy);
    if (v.battery) v.initial_soc = v.battery->soc;
    vehicles_.push_back(std::move(v));
    lanes_[static_cast<std::size_t>(lane)].push_back(vehicles_.size() - 1);
    ++counters_.inserted;
    return true;
}

void Simulation::generate_arrivals(double t_end) {
    for (std::size_t lane = 0; lane < queues_.size(); ++lane) {
        const double per_hour = lane == 0 ? config_.ramp_flow : config_.main_flow;
        while (next_arrival_[lane] <= t_end) {
            queues_[lane].push_back(draw_arrival(lane == 0));
            next_arrival_[lane] += arrival_rng_.exponential(3600.0 / per_hour);
        }
        if (!queues_[lane].empty() && try_insert(static_cast<int>(lane), queues_[lane].front())) {
            queues_[lane].pop_front();
        }
        counters_.max_queue[lane] = std::max<std::uint64_t>(counters_.max_queue[lane], queues_[lane].size());
        counters_.queued_final[lane] = queues_[lane].size();
    }
}

const Vehicle& Simulation::insert_vehicle(VehicleClass cls, int lane, double pos, double speed, DriverModel driver,
                                          std::optional<double> soc_fraction) {
    if (lane < 0 || lane > config_.layout.lane_count) throw RangeError("lane index outside the road");
    Vehicle v;
    v.id = next_id_++;
    v.cls = cls;
    v.length = vehicle_length(cls);
    v.lane = lane;
    v.pos = pos;
    v.speed = speed;
    v.driver = std::move(driver);
    v.desired_speed = class_desired_speed(cls);
    if (const auto* p = std::get_if<IdmParams>(&v.driver)) v.desired_speed = p->desired_speed;
    const double fraction =
        soc_fraction.value_or(0.5 * (config_.energy.initial_soc_min + config_.energy.initial_soc_max));
    v.battery = make_battery(cls, fraction, config_.energy);
    if (v.battery) v.initial_soc = v.battery->soc;
    for (const auto& other : vehicles_) {
        if (other.lane != lane) continue;
        const bool clear = other.pos >= pos ? other.rear() - pos > 0.0 : v.rear() - other.pos > 0.0;
        if (!clear) throw RangeError("inserted vehicle overlaps vehicle " + std::to_string(other.id));
    }
    vehicles_.push_back(std::move(v));
    ++counters_.inserted;
    return vehicles_.back();
}

void Simulation::step() {
    const double t_end = static_cast<double>(step_index_ + 1) * config_.timestep;
    rebuild_lanes();

    // (1) Frozen observations: every vehicle's acceleration in its current lane.
    auto links = link_lanes(lanes_, vehicles_.size());
    current_accel_.resize(vehicles_.size());
    current_clamped_.resize(vehicles_.size());
    current_guarded_.resize(vehicles_.size());
    leader_before_ = links.leader;
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        const Vehicle* leader = links.leader[i] >= 0 ? &vehicles_[static_cast<std::size_t>(links.leader[i])] : nullptr;
        bool clamped = false;
        bool guarded = false;
        current_accel_[i] = acceleration_for(vehicles_[i], vehicles_[i].lane, leader, &clamped, &guarded);
        current_clamped_[i] = clamped;
        current_guarded_[i] = guarded;
    }
    lane_before_.resize(vehicles_.size());
    for (std::size_t i = 0; i < vehicles_.size(); ++i) lane_before_[i] = vehicles_[i].lane;

    // (2) Lane changes and ramp merges, decided on the frozen state.
    decide_lane_changes(current_accel_);
    apply_lane_changes(requests_);

    // (3) Accelerations in the post-change lanes.
    links = link_lanes(lanes_, vehicles_.size());
    next_accel_.resize(vehicles_.size());
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        bool clamped = false;
        bool guarded = false;
        if (vehicles_[i].lane == lane_before_[i] && links.leader[i] == leader_before_[i]) {
            next_accel_[i] = current_accel_[i];
            clamped = current_clamped_[i];
            guarded = current_guarded_[i];
        } else {
            const Vehicle* leader =
                links.leader[i] >= 0 ? &vehicles_[static_cast<std::size_t>(links.leader[i])] : nullptr;
            next_accel_[i] = acceleration_for(vehicles_[i], vehicles_[i].lane, leader, &clamped, &guarded);
        }
        if (clamped) ++counters_.clamp_events;
        if (guarded) ++counters_.guard_events;
    }

    // (4)-(5) Integration, batteries, emissions.
    integrate(next_accel_);
    check_invariants();
    // (6) Recording.
    record();
    // (7) Exits.
    remove_exited();
    rebuild_lanes();
    // (8) Arrivals.
    generate_arrivals(t_end);

    ++step_index_;
    clock_ = t_end;
}

void Simulation::run() {
    const auto n = total_steps();
    while (step_index_ < n) step();
}

std::string Simulation::dump_state() const {
    std::ostringstream out;
    out.precision(17);
    out << "t=" << clock_ << " vehicles=" << vehicles_.size() << '\n';
    for (const auto& v : vehicles_) {
        out << "  id=" << v.id << " class=" << to_string(v.cls) << " lane=" << v.lane << " pos=" << v.pos
            << " speed=" << v.speed << " accel=" << v.accel << '\n';
    }
    return out.str();
}

}  // namespace cwdsim
