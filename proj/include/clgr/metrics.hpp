#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/labeling.hpp"

namespace clgr {

struct EpisodeStep {
    double time_s = 0.0;   // sim time at the end of the step
    double speed_kmh = 0.0;
    double distance_increment_m = 0.0;
    bool collision = false;
    double collision_speed_kmh = 0.0;  // present iff collision
    int route_completions = 0;
    double lateral_offset_m = 0.0;
    RewardBreakdown reward;
    bool has_reward = false;
};

struct EpisodeLog {
    std::vector<EpisodeStep> steps;
    std::string termination = "none";
    // test-mode fields
    double route_length_m = 0.0;
    double route_progress_m = 0.0;
    bool route_reached = false;

    double duration_s() const { return steps.empty() ? 0.0 : steps.back().time_s; }

    double distance_m() const {
        double d = 0.0;
        for (const EpisodeStep& s : steps) d += s.distance_increment_m;
        return d;
    }

    int collision_count() const {
        int c = 0;
        for (const EpisodeStep& s : steps) c += s.collision ? 1 : 0;
        return c;
    }
};

enum class MetricMode { kTrain, kTest };

struct MetricReport {
    MetricMode mode = MetricMode::kTrain;
    double as_kmh = 0.0;     // average speed
    double rc = 0.0;         // completed routes (train) or completion fraction (test)
    double td_m = 0.0;       // mean traveled distance per episode
    double cs_kmh = 0.0;     // mean collision speed, 0 when no collisions
    double cr = 0.0;         // fraction of episodes containing a collision
    double ict_steps = 0.0;  // mean steps between consecutive collisions
    double dcf_per_km = 0.0; // collisions per kilometer
    double tcf_per_1000 = 0.0;  // collisions per 1000 steps
    double sr = 0.0;         // success rate, test mode only
    int episodes = 0;
    int collisions = 0;
    double total_km = 0.0;
    long total_steps = 0;
};

/// All nine aggregate metrics from a set of episode logs. ICT pools the
/// consecutive-collision gaps per episode; an episode with a single collision
/// contributes the gap from its start, collision-free episodes contribute
/// nothing.
inline MetricReport compute_metrics(const std::vector<EpisodeLog>& logs, MetricMode mode) {
    if (logs.empty()) throw ConfigError("compute_metrics: no episode logs");
    MetricReport r;
    r.mode = mode;
    r.episodes = static_cast<int>(logs.size());

    double total_m = 0.0, total_s = 0.0;
    double cs_sum = 0.0;
    int cs_events = 0;
    int episodes_with_collision = 0;
    double gap_sum = 0.0;
    long gap_count = 0;
    double rc_sum = 0.0;
    int successes = 0;

    for (const EpisodeLog& ep : logs) {
        total_m += ep.distance_m();
        total_s += ep.duration_s();
        r.total_steps += static_cast<long>(ep.steps.size());

        std::vector<long> collision_steps;
        for (std::size_t i = 0; i < ep.steps.size(); ++i) {
            const EpisodeStep& s = ep.steps[i];
            if (s.collision) {
                collision_steps.push_back(static_cast<long>(i) + 1);
                cs_sum += s.collision_speed_kmh;
                ++cs_events;
            }
        }
        r.collisions += static_cast<int>(collision_steps.size());
        if (!collision_steps.empty()) ++episodes_with_collision;
        if (collision_steps.size() >= 2) {
            for (std::size_t i = 1; i < collision_steps.size(); ++i) {
                gap_sum += static_cast<double>(collision_steps[i] - collision_steps[i - 1]);
                ++gap_count;
            }
        } else if (collision_steps.size() == 1) {
            gap_sum += static_cast<double>(collision_steps[0]);
            ++gap_count;
        }

        if (mode == MetricMode::kTrain) {
            rc_sum += ep.steps.empty() ? 0.0 : ep.steps.back().route_completions;
        } else {
            const double frac = ep.route_length_m > 0.0
                                    ? clamp(ep.route_progress_m / ep.route_length_m, 0.0, 1.0)
                                    : 0.0;
            rc_sum += ep.route_reached ? 1.0 : frac;
            const bool failed = ep.termination == "collision" || ep.termination == "off_lane" ||
                                ep.termination == "stuck";
            if (ep.route_reached && !failed) ++successes;
        }
    }

    r.total_km = total_m / 1000.0;
    r.as_kmh = total_s > 0.0 ? (total_m / 1000.0) / (total_s / 3600.0) : 0.0;
    r.td_m = total_m / static_cast<double>(r.episodes);
    r.rc = rc_sum / static_cast<double>(r.episodes);
    r.cs_kmh = cs_events > 0 ? cs_sum / static_cast<double>(cs_events) : 0.0;
    r.cr = static_cast<double>(episodes_with_collision) / static_cast<double>(r.episodes);
    r.ict_steps = gap_count > 0 ? gap_sum / static_cast<double>(gap_count) : 0.0;
    r.dcf_per_km = r.total_km > 0.0 ? static_cast<double>(r.collisions) / r.total_km : 0.0;
    r.tcf_per_1000 = r.total_steps > 0
                         ? 1000.0 * static_cast<double>(r.collisions) / static_cast<double>(r.total_steps)
                         : 0.0;
    if (mode == MetricMode::kTest)
        r.sr = static_cast<double>(successes) / static_cast<double>(r.episodes);
    return r;
}

}  // namespace clgr
