#pragma once

#include <json.hpp>

#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/labeling.hpp"
#include "clgr/metrics.hpp"
#include "clgr/scene.hpp"
#include "clgr/sim.hpp"
#include "clgr/synthesis.hpp"

namespace clgr {

using ordered_json = nlohmann::ordered_json;

/// One JSONL trajectory record: fixed keys, one object per step. gap_m is
/// omitted when no vehicle is in range (infinity has no JSON encoding);
/// reward keys appear once the step is labeled.
struct TrajectoryRow {
    int episode = 0;
    long step = 0;  // 1-based within the episode
    std::uint64_t frame_id = 0;
    double time_s = 0.0;
    double x = 0.0, y = 0.0, heading_rad = 0.0, speed_mps = 0.0;
    double steer = 0.0, accel = 0.0;
    double lateral_offset_m = 0.0, heading_error_rad = 0.0;
    bool collision = false;
    double collision_speed_kmh = 0.0;
    bool off_road = false;
    double gap_m = std::numeric_limits<double>::infinity();
    double hazard = 0.0;
    double distance_increment_m = 0.0, progress_m = 0.0;
    int route_completions = 0;
    double task_reward = 0.0;
    bool done = false;
    std::string termination = "none";
    bool labeled = false;
    RewardBreakdown reward;
    // fixed-route evaluation extras, written on each episode's final row
    double route_length_m = 0.0;
    double route_progress_m = 0.0;  // arc progress along the route polyline
    bool route_reached = false;
};

inline ordered_json row_to_json(const TrajectoryRow& r) {
    ordered_json j;
    j["episode"] = r.episode;
    j["step"] = r.step;
    j["frame_id"] = r.frame_id;
    j["time_s"] = r.time_s;
    j["x"] = r.x;
    j["y"] = r.y;
    j["heading_rad"] = r.heading_rad;
    j["speed_mps"] = r.speed_mps;
    j["steer"] = r.steer;
    j["accel"] = r.accel;
    j["lateral_offset_m"] = r.lateral_offset_m;
    j["heading_error_rad"] = r.heading_error_rad;
    j["collision"] = r.collision;
    if (r.collision) j["collision_speed_kmh"] = r.collision_speed_kmh;
    j["off_road"] = r.off_road;
    if (std::isfinite(r.gap_m)) j["gap_m"] = r.gap_m;
    j["hazard"] = r.hazard;
    j["distance_increment_m"] = r.distance_increment_m;
    j["progress_m"] = r.progress_m;
    j["route_completions"] = r.route_completions;
    j["task_reward"] = r.task_reward;
    j["done"] = r.done;
    if (r.done) j["termination"] = r.termination;
    if (r.route_length_m > 0.0) {
        j["route_length_m"] = r.route_length_m;
        j["route_progress_m"] = r.route_progress_m;
        j["route_reached"] = r.route_reached;
    }
    j["labeled"] = r.labeled;
    if (r.labeled) {
        j["sim_pos"] = r.reward.score.sim_pos;
        j["sim_neg"] = r.reward.score.sim_neg;
        j["raw_score"] = r.reward.score.raw;
        j["normalized_score"] = r.reward.score.normalized;
        j["v_target_mps"] = r.reward.synthesis.v_target;
        j["r_speed"] = r.reward.synthesis.r_speed;
        j["f_center"] = r.reward.synthesis.f_center;
        j["f_angle"] = r.reward.synthesis.f_angle;
        j["f_stability"] = r.reward.synthesis.f_stability;
        j["r_synthesis"] = r.reward.synthesis.r_synthesis;
        j["reward"] = r.reward.reward;
    }
    return j;
}

inline TrajectoryRow row_from_json(const ordered_json& j) {
    TrajectoryRow r;
    r.episode = j.at("episode").get<int>();
    r.step = j.at("step").get<long>();
    r.frame_id = j.at("frame_id").get<std::uint64_t>();
    r.time_s = j.at("time_s").get<double>();
    r.x = j.at("x").get<double>();
    r.y = j.at("y").get<double>();
    r.heading_rad = j.at("heading_rad").get<double>();
    r.speed_mps = j.at("speed_mps").get<double>();
    r.steer = j.at("steer").get<double>();
    r.accel = j.at("accel").get<double>();
    r.lateral_offset_m = j.at("lateral_offset_m").get<double>();
    r.heading_error_rad = j.at("heading_error_rad").get<double>();
    r.collision = j.at("collision").get<bool>();
    if (j.contains("collision_speed_kmh"))
        r.collision_speed_kmh = j.at("collision_speed_kmh").get<double>();
    r.off_road = j.at("off_road").get<bool>();
    r.gap_m = j.contains("gap_m") ? j.at("gap_m").get<double>()
                                  : std::numeric_limits<double>::infinity();
    r.hazard = j.at("hazard").get<double>();
    r.distance_increment_m = j.at("distance_increment_m").get<double>();
    r.progress_m = j.at("progress_m").get<double>();
    r.route_completions = j.at("route_completions").get<int>();
    r.task_reward = j.at("task_reward").get<double>();
    r.done = j.at("done").get<bool>();
    if (j.contains("termination")) r.termination = j.at("termination").get<std::string>();
    if (j.contains("route_length_m")) {
        r.route_length_m = j.at("route_length_m").get<double>();
        r.route_progress_m = j.at("route_progress_m").get<double>();
        r.route_reached = j.at("route_reached").get<bool>();
    }
    r.labeled = j.at("labeled").get<bool>();
    if (r.labeled) {
        r.reward.score.sim_pos = j.at("sim_pos").get<double>();
        r.reward.score.sim_neg = j.at("sim_neg").get<double>();
        r.reward.score.raw = j.at("raw_score").get<double>();
        r.reward.score.normalized = j.at("normalized_score").get<double>();
        r.reward.synthesis.v_target = j.at("v_target_mps").get<double>();
        r.reward.synthesis.r_speed = j.at("r_speed").get<double>();
        r.reward.synthesis.f_center = j.at("f_center").get<double>();
        r.reward.synthesis.f_angle = j.at("f_angle").get<double>();
        r.reward.synthesis.f_stability = j.at("f_stability").get<double>();
        r.reward.synthesis.r_synthesis = j.at("r_synthesis").get<double>();
        r.reward.reward = j.at("reward").get<double>();
        r.reward.task_reward = r.task_reward;
    }
    return r;
}

/// Captures the sim outputs of one step as a trajectory row.
inline TrajectoryRow make_row(int episode, long step, const Simulator& sim,
                              const Simulator::StepResult& res) {
    TrajectoryRow r;
    r.episode = episode;
    r.step = step;
    r.frame_id = res.info.frame_id;
    r.time_s = res.info.sim_time_s;
    r.x = sim.ego().x;
    r.y = sim.ego().y;
    r.heading_rad = sim.ego().heading;
    r.speed_mps = sim.ego().speed;
    r.steer = sim.ego().steer_cmd;
    r.accel = sim.ego().accel_cmd;
    r.lateral_offset_m = res.info.lateral_offset_m;
    r.heading_error_rad = res.info.heading_error_rad;
    r.collision = res.info.collision;
    r.collision_speed_kmh = res.info.collision_speed_kmh;
    r.off_road = res.scene.off_road;
    r.gap_m = res.scene.nearest_vehicle_gap;
    r.hazard = res.scene.hazard;
    r.distance_increment_m = res.info.distance_increment_m;
    r.progress_m = res.info.progress_m;
    r.route_completions = res.info.route_completions;
    r.task_reward = res.info.task_reward;
    r.done = res.terminated;
    r.termination = termination_name(res.reason);
    return r;
}

inline SceneDescriptor scene_from_row(const TrajectoryRow& r) {
    SceneDescriptor d;
    d.collision = r.collision;
    d.nearest_vehicle_gap = r.gap_m;
    d.lateral_offset = r.lateral_offset_m;
    d.off_road = r.off_road;
    d.hazard = r.hazard;
    return d;
}

/// Streams rows to disk in order. Rows wait until their reward is attached
/// (deferred labeling); flush_all() writes whatever is still unlabeled.
class TrajectoryWriter {
public:
    explicit TrajectoryWriter(const std::string& path) : out_(path, std::ios::trunc) {
        if (!out_) throw DataError("cannot open trajectory log for writing: " + path);
    }

    void push(TrajectoryRow row) { pending_.push_back(std::move(row)); }

    /// Attaches reward components to the pending row with this frame id.
    void attach_label(std::uint64_t frame_id, const RewardBreakdown& breakdown) {
        for (TrajectoryRow& r : pending_) {
            if (r.frame_id == frame_id) {
                r.labeled = true;
                r.reward = breakdown;
                break;
            }
        }
        flush_ready();
    }

    /// Writes rows whose labels have arrived (order-preserving prefix).
    void flush_ready() {
        while (!pending_.empty() && pending_.front().labeled) {
            out_ << row_to_json(pending_.front()).dump() << '\n';
            pending_.pop_front();
        }
    }

    /// Writes every remaining row, labeled or not.
    void flush_all() {
        while (!pending_.empty()) {
            out_ << row_to_json(pending_.front()).dump() << '\n';
            pending_.pop_front();
        }
        out_.flush();
    }

    ~TrajectoryWriter() { flush_all(); }

private:
    std::ofstream out_;
    std::deque<TrajectoryRow> pending_;
};

inline void write_trajectory(const std::string& path, const std::vector<TrajectoryRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open trajectory log for writing: " + path);
    for (const TrajectoryRow& r : rows) out << row_to_json(r).dump() << '\n';
}

inline std::vector<TrajectoryRow> read_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trajectory log: " + path);
    std::vector<TrajectoryRow> rows;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON line");
        try {
            rows.push_back(row_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

/// Rebuilds the lateral-offset history (most recent last, window 10) for the
/// step at `index`, scanning backward within its episode.
inline VehicleStateSnapshot vehicle_from_rows(const std::vector<TrajectoryRow>& rows,
                                              std::size_t index) {
    const TrajectoryRow& r = rows[index];
    VehicleStateSnapshot vs;
    vs.speed = r.speed_mps;
    vs.lateral_offset = r.lateral_offset_m;
    vs.heading_error = r.heading_error_rad;
    std::size_t begin = index;
    while (begin > 0 && rows[begin - 1].episode == r.episode && index - (begin - 1) < 10) --begin;
    for (std::size_t i = begin; i <= index; ++i)
        vs.lateral_offset_history.push_back(rows[i].lateral_offset_m);
    return vs;
}

/// Groups rows into per-episode logs for metric computation.
inline std::vector<EpisodeLog> episodes_from_rows(const std::vector<TrajectoryRow>& rows) {
    std::vector<EpisodeLog> logs;
    std::map<int, std::size_t> index;
    for (const TrajectoryRow& r : rows) {
        auto [it, inserted] = index.try_emplace(r.episode, logs.size());
        if (inserted) logs.emplace_back();
        EpisodeLog& ep = logs[it->second];
        EpisodeStep s;
        s.time_s = r.time_s;
        s.speed_kmh = r.speed_mps * 3.6;
        s.distance_increment_m = r.distance_increment_m;
        s.collision = r.collision;
        s.collision_speed_kmh = r.collision_speed_kmh;
        s.route_completions = r.route_completions;
        s.lateral_offset_m = r.lateral_offset_m;
        s.has_reward = r.labeled;
        s.reward = r.reward;
        ep.steps.push_back(std::move(s));
        if (r.done) ep.termination = r.termination;
        if (r.route_length_m > 0.0) {
            ep.route_length_m = r.route_length_m;
            ep.route_reached = r.route_reached;
            ep.route_progress_m = r.route_progress_m;
        }
    }
    return logs;
}

inline ordered_json metric_report_to_json(const MetricReport& r) {
    ordered_json j;
    j["mode"] = r.mode == MetricMode::kTrain ? "train" : "test";
    j["as_kmh"] = r.as_kmh;
    j["rc"] = r.rc;
    j["td_m"] = r.td_m;
    j["cs_kmh"] = r.cs_kmh;
    j["cr"] = r.cr;
    j["ict_steps"] = r.ict_steps;
    j["dcf_per_km"] = r.dcf_per_km;
    j["tcf_per_1000"] = r.tcf_per_1000;
    if (r.mode == MetricMode::kTest) j["sr"] = r.sr;
    j["episodes"] = r.episodes;
    j["collisions"] = r.collisions;
    j["total_km"] = r.total_km;
    j["total_steps"] = r.total_steps;
    return j;
}

}  // namespace clgr
