#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/road_graph.hpp"
#include "clgr/scene.hpp"
#include "clgr/synthesis.hpp"

namespace clgr {

struct ScenarioConfig {
    std::string map_path;
    int n_traffic = 20;
    double distance_budget_m = 3000.0;
    double stuck_speed_kmh = 1.0;
    double stuck_duration_s = 90.0;
    double deviation_limit_m = 3.0;
    double dt = 0.1;
    std::uint64_t seed = 0;

    // Lead-vehicle case study: one stationary vehicle `lead_gap_m` ahead on
    // the ego route that departs after `lead_delay_s`.
    bool scripted_lead = false;
    double lead_gap_m = 35.0;
    double lead_delay_s = 12.0;

    // Fixed-route evaluation; empty strings select random spawn pairs.
    std::string fixed_start;
    std::string fixed_goal;

    void validate() const {
        if (n_traffic < 0) throw ConfigError("n_traffic must be >= 0");
        if (!(distance_budget_m > 0.0)) throw ConfigError("distance_budget_m must be positive");
        if (!(stuck_speed_kmh > 0.0)) throw ConfigError("stuck_speed_kmh must be positive");
        if (!(stuck_duration_s > 0.0)) throw ConfigError("stuck_duration_s must be positive");
        if (!(deviation_limit_m > 0.0)) throw ConfigError("deviation_limit_m must be positive");
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (fixed_start.empty() != fixed_goal.empty())
            throw ConfigError("fixed_start and fixed_goal must be set together");
    }
};

struct EgoState {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  // rad, world frame
    double speed = 0.0;    // m/s, >= 0
    double steer_cmd = 0.0;
    double accel_cmd = 0.0;
};

/// Policy observation: BEV occupancy grid, ego features and upcoming
/// waypoints in the ego frame.
struct Observation {
    static constexpr int kGrid = 64;       // cells per side
    static constexpr double kCell = 0.5;   // meters per cell
    static constexpr int kChannels = 4;    // drivable, ego, vehicles, route
    static constexpr int kWaypoints = 15;

    std::vector<std::uint8_t> bev;  // kChannels * kGrid * kGrid, values {0,1}
    double steer = 0.0;
    double throttle_brake = 0.0;
    double speed = 0.0;  // m/s
    std::array<std::array<double, 2>, kWaypoints> waypoints{};  // zero-padded

    std::uint8_t bev_at(int channel, int row, int col) const {
        return bev[static_cast<std::size_t>((channel * kGrid + row) * kGrid + col)];
    }
};

enum class TerminationReason { kNone, kCollision, kOffLane, kStuck, kBudgetDone };

inline std::string termination_name(TerminationReason r) {
    switch (r) {
        case TerminationReason::kNone: return "none";
        case TerminationReason::kCollision: return "collision";
        case TerminationReason::kOffLane: return "off_lane";
        case TerminationReason::kStuck: return "stuck";
        case TerminationReason::kBudgetDone: return "budget_done";
    }
    return "none";
}

struct StepInfo {
    std::uint64_t frame_id = 0;
    double sim_time_s = 0.0;
    double task_reward = 0.0;  // 1.0 on the step a route's final waypoint is reached
    bool route_completed = false;
    int route_completions = 0;
    double distance_increment_m = 0.0;
    double progress_m = 0.0;  // cumulative distance this episode
    double speed_mps = 0.0;
    double lateral_offset_m = 0.0;
    double heading_error_rad = 0.0;
    bool collision = false;
    double collision_speed_kmh = 0.0;
};

namespace detail {

/// Oriented-rectangle overlap via the separating-axis test.
inline bool rects_overlap(Vec2 ca, double ha, Vec2 cb, double hb, double length, double width) {
    const double axes[4][2] = {{std::cos(ha), std::sin(ha)},
                               {-std::sin(ha), std::cos(ha)},
                               {std::cos(hb), std::sin(hb)},
                               {-std::sin(hb), std::cos(hb)}};
    const double half[2] = {length * 0.5, width * 0.5};
    auto project_radius = [&](double heading, const double* axis) {
        const double fx = std::cos(heading), fy = std::sin(heading);
        const double lx = -std::sin(heading), ly = std::cos(heading);
        return half[0] * std::abs(fx * axis[0] + fy * axis[1]) +
               half[1] * std::abs(lx * axis[0] + ly * axis[1]);
    };
    const double dx = cb.x - ca.x, dy = cb.y - ca.y;
    for (const auto& axis : axes) {
        const double d = std::abs(dx * axis[0] + dy * axis[1]);
        if (d > project_radius(ha, axis) + project_radius(hb, axis)) return false;
    }
    return true;
}

/// World-space occupancy bitmap of the drivable area.
class DrivableMap {
public:
    static constexpr double kRes = 0.25;  // meters per cell

    DrivableMap() = default;

    explicit DrivableMap(const RoadGraph& g) {
        double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
        for (const auto& [_, p] : g.nodes) {
            min_x = std::min(min_x, p.x);
            min_y = std::min(min_y, p.y);
            max_x = std::max(max_x, p.x);
            max_y = std::max(max_y, p.y);
        }
        const double margin = 24.0;
        x0_ = min_x - margin;
        y0_ = min_y - margin;
        nx_ = static_cast<int>((max_x - min_x + 2 * margin) / kRes) + 1;
        ny_ = static_cast<int>((max_y - min_y + 2 * margin) / kRes) + 1;
        cells_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), 0);
        for (const RoadEdge& e : g.edges) stamp_polyline(e.polyline, e.width * 0.5);
    }

    bool drivable(double x, double y) const {
        const int cx = static_cast<int>(std::floor((x - x0_) / kRes));
        const int cy = static_cast<int>(std::floor((y - y0_) / kRes));
        if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_) return false;
        return cells_[static_cast<std::size_t>(cy) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(cx)] != 0;
    }

private:
    void stamp_polyline(const std::vector<Vec2>& poly, double radius) {
        const int r_cells = static_cast<int>(std::ceil(radius / kRes));
        for (std::size_t i = 1; i < poly.size(); ++i) {
            const double seg = dist(poly[i - 1], poly[i]);
            const int steps = std::max(1, static_cast<int>(seg / (kRes * 0.5)));
            for (int s = 0; s <= steps; ++s) {
                const double t = static_cast<double>(s) / steps;
                const double px = poly[i - 1].x + t * (poly[i].x - poly[i - 1].x);
                const double py = poly[i - 1].y + t * (poly[i].y - poly[i - 1].y);
                const int cx = static_cast<int>(std::floor((px - x0_) / kRes));
                const int cy = static_cast<int>(std::floor((py - y0_) / kRes));
                for (int dy = -r_cells; dy <= r_cells; ++dy)
                    for (int dx = -r_cells; dx <= r_cells; ++dx) {
                        if (dx * dx + dy * dy > r_cells * r_cells) continue;
                        const int ux = cx + dx, uy = cy + dy;
                        if (ux < 0 || uy < 0 || ux >= nx_ || uy >= ny_) continue;
                        cells_[static_cast<std::size_t>(uy) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(ux)] = 1;
                    }
            }
        }
    }

    double x0_ = 0.0, y0_ = 0.0;
    int nx_ = 0, ny_ = 0;
    std::vector<std::uint8_t> cells_;
};

}  // namespace detail

struct TrafficVehicle {
    // Lane followers hold an edge index + arc position; the scripted lead
    // follows a frozen copy of the ego route instead (route_follower = true).
    int edge = -1;
    double s = 0.0;
    double speed = 0.0;
    double delay_left_s = 0.0;
    bool route_follower = false;
    Route route;  // only for route followers
    Vec2 pos;
    double heading = 0.0;
};

/// Deterministic 2D kinematic driving environment over a RoadGraph: bicycle
/// dynamics, A* routes with continuous regeneration, lane-follower traffic,
/// BEV rasterization and the termination rules.
class Simulator {
public:
    static constexpr double kVehicleLength = 4.5;
    static constexpr double kVehicleWidth = 2.0;
    static constexpr double kWheelBase = 2.5;
    static constexpr double kMaxSteer = 0.6;    // rad
    static constexpr double kMaxAccel = 3.0;    // m/s^2
    static constexpr double kMaxBrake = 8.0;    // m/s^2
    static constexpr double kWaypointSpacing = 2.0;  // m
    static constexpr double kRouteDoneSlack = 2.0;   // m remaining that counts as arrival
    static constexpr double kTrafficTargetSpeed = 5.0;   // m/s
    static constexpr double kTrafficBrakeGap = 8.0;      // m
    static constexpr double kTrafficStopGap = 3.0;       // m
    static constexpr double kTrafficSpawnSpacing = 10.0; // m

    Simulator(RoadGraph graph, ScenarioConfig cfg)
        : graph_(std::move(graph)), cfg_(cfg), drivable_(graph_) {
        cfg_.validate();
        rng_.seed(cfg_.seed);
        if (graph_.spawn_points.size() < 2)
            throw ConfigError("map provides fewer than 2 spawn points");
        for (const RoadEdge& e : graph_.edges) {
            Route r;
            r.pts = e.polyline;
            r.cum.resize(e.polyline.size());
            r.cum[0] = 0.0;
            for (std::size_t i = 1; i < e.polyline.size(); ++i)
                r.cum[i] = r.cum[i - 1] + dist(e.polyline[i - 1], e.polyline[i]);
            edge_geom_.push_back(std::move(r));
        }
    }

    struct StepResult {
        Observation obs;
        SceneDescriptor scene;
        StepInfo info;
        bool terminated = false;
        TerminationReason reason = TerminationReason::kNone;
    };

    const RoadGraph& graph() const { return graph_; }
    const ScenarioConfig& config() const { return cfg_; }
    const EgoState& ego() const { return ego_; }
    const Route& route() const { return route_; }
    const std::vector<TrafficVehicle>& traffic() const { return traffic_; }
    bool done() const { return done_; }
    double sim_time() const { return time_s_; }
    double progress() const { return distance_total_; }
    double route_progress() const { return last_proj_.s; }
    int route_completions() const { return route_completions_; }

    // The rng is seeded once at construction; successive resets continue the
    // stream, so episode sequences are deterministic but not identical.
    Observation reset() {
        time_s_ = 0.0;
        distance_total_ = 0.0;
        stuck_steps_ = 0;
        route_completions_ = 0;
        done_ = false;
        single_route_done_ = false;
        lateral_history_.clear();

        if (!cfg_.fixed_start.empty()) {
            start_node_ = cfg_.fixed_start;
            goal_node_ = cfg_.fixed_goal;
            if (start_node_ == goal_node_)
                throw ConfigError("fixed route start and goal must differ");
        } else {
            pick_random_pair(start_node_, goal_node_);
        }
        route_ = graph_.densify(graph_.plan_route(start_node_, goal_node_), kWaypointSpacing);
        route_hint_ = 0;

        ego_ = EgoState{};
        const Vec2 p0 = route_.point_at(0.0);
        ego_.x = p0.x;
        ego_.y = p0.y;
        ego_.heading = route_.heading_at(0.0);

        spawn_traffic();
        // history starts empty; laterals are recorded per step so offline
        // rebuilds from step rows agree with the live snapshots
        last_proj_ = route_.project({ego_.x, ego_.y}, 0);
        return observe();
    }

    StepResult step(std::array<double, 2> action) {
        if (done_) throw std::logic_error("Simulator::step called after termination");
        const double steer_norm = clamp(action[0], -1.0, 1.0);
        const double accel_norm = clamp(action[1], -1.0, 1.0);
        ego_.steer_cmd = steer_norm;
        ego_.accel_cmd = accel_norm;

        // Kinematic bicycle, explicit Euler with the pre-update speed.
        const double delta = steer_norm * kMaxSteer;
        const double accel = accel_norm >= 0.0 ? accel_norm * kMaxAccel : accel_norm * kMaxBrake;
        const double v0 = ego_.speed;
        ego_.x += v0 * std::cos(ego_.heading) * cfg_.dt;
        ego_.y += v0 * std::sin(ego_.heading) * cfg_.dt;
        ego_.heading = wrap_angle(ego_.heading + (v0 / kWheelBase) * std::tan(delta) * cfg_.dt);
        ego_.speed = std::max(0.0, v0 + accel * cfg_.dt);

        const double moved = v0 * cfg_.dt;
        distance_total_ += moved;
        time_s_ += cfg_.dt;
        ++frame_counter_;

        update_traffic();

        StepResult out;
        out.info.frame_id = frame_counter_;
        out.info.sim_time_s = time_s_;
        out.info.distance_increment_m = moved;
        out.info.progress_m = distance_total_;
        out.info.speed_mps = ego_.speed;

        // Route bookkeeping.
        last_proj_ = route_.project({ego_.x, ego_.y}, route_hint_);
        route_hint_ = last_proj_.seg;
        if (!single_route_done_ && last_proj_.s >= route_.length() - kRouteDoneSlack) {
            ++route_completions_;
            out.info.task_reward = 1.0;
            out.info.route_completed = true;
            if (cfg_.fixed_start.empty()) {
                regenerate_route();
            } else {
                single_route_done_ = true;
            }
        }
        out.info.route_completions = route_completions_;
        out.info.lateral_offset_m = last_proj_.lateral;
        out.info.heading_error_rad = wrap_angle(ego_.heading - last_proj_.heading);
        push_lateral(last_proj_.lateral);

        // Collision detection against traffic.
        bool collision = false;
        for (const TrafficVehicle& t : traffic_) {
            if (detail::rects_overlap({ego_.x, ego_.y}, ego_.heading, t.pos, t.heading,
                                      kVehicleLength, kVehicleWidth)) {
                collision = true;
                break;
            }
        }
        out.info.collision = collision;
        if (collision) out.info.collision_speed_kmh = ego_.speed * 3.6;

        out.scene = make_scene(collision, nearest_gap(), last_proj_.lateral, off_road());
        auto [term, reason] = check_termination(collision, last_proj_.lateral);
        out.terminated = term;
        out.reason = reason;
        if (term) done_ = true;
        out.obs = observe();
        return out;
    }

    /// Termination rules: collision immediately; off-lane beyond the
    /// deviation limit; stuck below stuck_speed for stuck_duration (inclusive
    /// at the boundary step); distance budget reached.
    std::pair<bool, TerminationReason> check_termination(bool collision, double lateral) {
        if (collision) return {true, TerminationReason::kCollision};
        if (std::abs(lateral) > cfg_.deviation_limit_m) return {true, TerminationReason::kOffLane};
        if (ego_.speed * 3.6 < cfg_.stuck_speed_kmh)
            ++stuck_steps_;
        else
            stuck_steps_ = 0;
        const long stuck_limit = std::lround(cfg_.stuck_duration_s / cfg_.dt);
        if (stuck_steps_ >= stuck_limit) return {true, TerminationReason::kStuck};
        if (distance_total_ >= cfg_.distance_budget_m) return {true, TerminationReason::kBudgetDone};
        return {false, TerminationReason::kNone};
    }

    VehicleStateSnapshot vehicle_snapshot() const {
        VehicleStateSnapshot vs;
        vs.speed = ego_.speed;
        vs.lateral_offset = last_proj_.lateral;
        vs.heading_error = wrap_angle(ego_.heading - last_proj_.heading);
        vs.lateral_offset_history = lateral_history_;
        return vs;
    }

    SceneDescriptor scene_now() const {
        return make_scene(false, nearest_gap(), last_proj_.lateral, off_road());
    }

    double nearest_gap() const {
        double gap = std::numeric_limits<double>::infinity();
        for (const TrafficVehicle& t : traffic_) {
            const double d = std::hypot(t.pos.x - ego_.x, t.pos.y - ego_.y) - kVehicleLength;
            gap = std::min(gap, std::max(0.0, d));
        }
        return gap;
    }

    bool off_road() const { return std::abs(last_proj_.lateral) > graph_.lane_width * 0.5; }

    /// Rasterizes drivable area, ego, traffic and the upcoming route into the
    /// ego-centric occupancy grid. Pure function of the current world state.
    Observation observe() const {
        Observation o;
        o.bev.assign(static_cast<std::size_t>(Observation::kChannels) * Observation::kGrid *
                         Observation::kGrid,
                     0);
        const double c = std::cos(ego_.heading), s = std::sin(ego_.heading);
        const int g = Observation::kGrid;
        const double cell = Observation::kCell;
        auto idx = [&](int ch, int r, int col) {
            return static_cast<std::size_t>((ch * g + r) * g + col);
        };
        // channel 0: drivable area via world-bitmap lookups
        for (int r = 0; r < g; ++r) {
            const double u = (r + 0.5 - g / 2.0) * cell;  // forward
            for (int col = 0; col < g; ++col) {
                const double v = (col + 0.5 - g / 2.0) * cell;  // left
                const double wx = ego_.x + u * c - v * s;
                const double wy = ego_.y + u * s + v * c;
                if (drivable_.drivable(wx, wy)) o.bev[idx(0, r, col)] = 1;
            }
        }
        // channel 1: ego footprint (fixed cells around the grid center)
        const int half_len = static_cast<int>(kVehicleLength / 2.0 / cell);
        const int half_wid = static_cast<int>(kVehicleWidth / 2.0 / cell);
        for (int r = g / 2 - half_len; r <= g / 2 + half_len; ++r)
            for (int col = g / 2 - half_wid; col <= g / 2 + half_wid; ++col)
                if (r >= 0 && r < g && col >= 0 && col < g) o.bev[idx(1, r, col)] = 1;
        // channel 2: traffic footprints in the ego frame
        const double extent = g / 2.0 * cell + kVehicleLength;
        for (const TrafficVehicle& t : traffic_) {
            if (std::abs(t.pos.x - ego_.x) > extent || std::abs(t.pos.y - ego_.y) > extent) continue;
            const double rel_h = t.heading - ego_.heading;
            const double rx = (t.pos.x - ego_.x) * c + (t.pos.y - ego_.y) * s;
            const double ry = -(t.pos.x - ego_.x) * s + (t.pos.y - ego_.y) * c;
            const double reach = (kVehicleLength + kVehicleWidth) * 0.5;
            const int r0 = std::max(0, static_cast<int>((rx - reach) / cell + g / 2.0));
            const int r1 = std::min(g - 1, static_cast<int>((rx + reach) / cell + g / 2.0));
            const int c0 = std::max(0, static_cast<int>((ry - reach) / cell + g / 2.0));
            const int c1 = std::min(g - 1, static_cast<int>((ry + reach) / cell + g / 2.0));
            const double ch = std::cos(rel_h), sh = std::sin(rel_h);
            for (int r = r0; r <= r1; ++r)
                for (int col = c0; col <= c1; ++col) {
                    const double u = (r + 0.5 - g / 2.0) * cell - rx;
                    const double v = (col + 0.5 - g / 2.0) * cell - ry;
                    const double fu = u * ch + v * sh;
                    const double fv = -u * sh + v * ch;
                    if (std::abs(fu) <= kVehicleLength * 0.5 && std::abs(fv) <= kVehicleWidth * 0.5)
                        o.bev[idx(2, r, col)] = 1;
                }
        }
        // channel 3: upcoming route waypoints within the grid
        const double ahead = g * cell + 8.0;
        for (std::size_t i = 0; i < route_.pts.size(); ++i) {
            if (route_.cum[i] < last_proj_.s - 6.0) continue;
            if (route_.cum[i] > last_proj_.s + ahead) break;
            const double dx = route_.pts[i].x - ego_.x, dy = route_.pts[i].y - ego_.y;
            const double u = dx * c + dy * s, v = -dx * s + dy * c;
            const int r = static_cast<int>(u / cell + g / 2.0);
            const int col = static_cast<int>(v / cell + g / 2.0);
            for (int rr = r - 1; rr <= r + 1; ++rr)
                for (int cc = col - 1; cc <= col + 1; ++cc)
                    if (rr >= 0 && rr < g && cc >= 0 && cc < g) o.bev[idx(3, rr, cc)] = 1;
        }

        o.steer = ego_.steer_cmd;
        o.throttle_brake = ego_.accel_cmd;
        o.speed = ego_.speed;

        // next 15 waypoints strictly ahead of the current projection
        auto it = std::upper_bound(route_.cum.begin(), route_.cum.end(), last_proj_.s + 1e-9);
        std::size_t w = static_cast<std::size_t>(it - route_.cum.begin());
        for (int k = 0; k < Observation::kWaypoints; ++k) {
            if (w + static_cast<std::size_t>(k) < route_.pts.size()) {
                const Vec2& p = route_.pts[w + static_cast<std::size_t>(k)];
                const double dx = p.x - ego_.x, dy = p.y - ego_.y;
                o.waypoints[static_cast<std::size_t>(k)] = {dx * c + dy * s, -dx * s + dy * c};
            } else {
                o.waypoints[static_cast<std::size_t>(k)] = {0.0, 0.0};
            }
        }
        return o;
    }

private:
    void pick_random_pair(std::string& start, std::string& goal) {
        const auto& sp = graph_.spawn_points;
        std::uniform_int_distribution<std::size_t> pick(0, sp.size() - 1);
        start = sp[pick(rng_)];
        do {
            goal = sp[pick(rng_)];
        } while (goal == start);
    }

    void regenerate_route() {
        const auto& sp = graph_.spawn_points;
        std::uniform_int_distribution<std::size_t> pick(0, sp.size() - 1);
        std::string next_goal;
        do {
            next_goal = sp[pick(rng_)];
        } while (next_goal == goal_node_);
        start_node_ = goal_node_;
        goal_node_ = next_goal;
        route_ = graph_.densify(graph_.plan_route(start_node_, goal_node_), kWaypointSpacing);
        route_hint_ = 0;
        last_proj_ = route_.project({ego_.x, ego_.y}, 0);
    }

    void spawn_traffic() {
        traffic_.clear();
        if (cfg_.scripted_lead) {
            TrafficVehicle lead;
            lead.route_follower = true;
            lead.route = route_;
            lead.s = std::min(cfg_.lead_gap_m, route_.length());
            lead.delay_left_s = cfg_.lead_delay_s;
            lead.pos = route_.point_at(lead.s);
            lead.heading = route_.heading_at(lead.s);
            traffic_.push_back(std::move(lead));
        }
        std::uniform_int_distribution<std::size_t> pick_edge(0, graph_.edges.size() - 1);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        int placed = 0;
        int attempts = 0;
        while (placed < cfg_.n_traffic && attempts < cfg_.n_traffic * 400 + 400) {
            ++attempts;
            const int ei = static_cast<int>(pick_edge(rng_));
            const Route& geom = edge_geom_[static_cast<std::size_t>(ei)];
            const double s = uni(rng_) * geom.length();
            const Vec2 p = geom.point_at(s);
            if (std::hypot(p.x - ego_.x, p.y - ego_.y) < kTrafficSpawnSpacing) continue;
            bool ok = true;
            for (const TrafficVehicle& t : traffic_)
                if (std::hypot(p.x - t.pos.x, p.y - t.pos.y) < kTrafficSpawnSpacing) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            TrafficVehicle t;
            t.edge = ei;
            t.s = s;
            t.pos = p;
            t.heading = geom.heading_at(s);
            traffic_.push_back(std::move(t));
            ++placed;
        }
        if (placed < cfg_.n_traffic)
            throw ConfigError("could not place " + std::to_string(cfg_.n_traffic) +
                              " traffic vehicles with " + std::to_string(kTrafficSpawnSpacing) +
                              " m spacing");
    }

    /// Constant-target-speed lane followers with front-gap braking.
    void update_traffic() {
        for (std::size_t i = 0; i < traffic_.size(); ++i) {
            TrafficVehicle& t = traffic_[i];
            if (t.delay_left_s > 0.0) {
                t.delay_left_s -= cfg_.dt;
                t.speed = 0.0;
                continue;
            }
            // forward gap to the nearest entity in a same-lane cone
            double gap = std::numeric_limits<double>::infinity();
            const double fx = std::cos(t.heading), fy = std::sin(t.heading);
            auto consider = [&](const Vec2& p) {
                const double rx = p.x - t.pos.x, ry = p.y - t.pos.y;
                const double fwd = rx * fx + ry * fy;
                const double lat = std::abs(-rx * fy + ry * fx);
                if (fwd > 0.0 && fwd < 40.0 && lat < 2.5)
                    gap = std::min(gap, fwd - kVehicleLength);
            };
            consider({ego_.x, ego_.y});
            for (std::size_t j = 0; j < traffic_.size(); ++j)
                if (j != i) consider(traffic_[j].pos);

            if (gap < kTrafficStopGap) {
                t.speed = 0.0;
            } else if (gap < kTrafficBrakeGap) {
                t.speed = std::max(0.0, t.speed - 3.0 * cfg_.dt);
            } else {
                t.speed = std::min(kTrafficTargetSpeed, t.speed + 1.5 * cfg_.dt);
            }
            t.s += t.speed * cfg_.dt;
            if (t.route_follower) {
                t.s = std::min(t.s, t.route.length());
                t.pos = t.route.point_at(t.s);
                t.heading = t.route.heading_at(t.s);
            } else {
                const Route* geom = &edge_geom_[static_cast<std::size_t>(t.edge)];
                while (t.s > geom->length()) {
                    const auto& succ = graph_.out_edges(graph_.edge(t.edge).to);
                    if (succ.empty()) {
                        t.s = geom->length();
                        break;
                    }
                    std::uniform_int_distribution<std::size_t> pick(0, succ.size() - 1);
                    t.s -= geom->length();
                    t.edge = succ[pick(rng_)];
                    geom = &edge_geom_[static_cast<std::size_t>(t.edge)];
                }
                t.pos = geom->point_at(t.s);
                t.heading = geom->heading_at(t.s);
            }
        }
    }

    void push_lateral(double lateral) {
        lateral_history_.push_back(lateral);
        if (lateral_history_.size() > 10) lateral_history_.erase(lateral_history_.begin());
    }

    RoadGraph graph_;
    ScenarioConfig cfg_;
    detail::DrivableMap drivable_;
    std::vector<Route> edge_geom_;

    std::mt19937_64 rng_;
    EgoState ego_;
    Route route_;
    Route::Projection last_proj_;
    int route_hint_ = 0;
    std::string start_node_, goal_node_;
    std::vector<TrafficVehicle> traffic_;
    std::vector<double> lateral_history_;

    double time_s_ = 0.0;
    double distance_total_ = 0.0;
    long stuck_steps_ = 0;
    int route_completions_ = 0;
    bool done_ = true;  // must reset() before stepping
    bool single_route_done_ = false;
    std::uint64_t frame_counter_ = 0;
};

}  // namespace clgr
