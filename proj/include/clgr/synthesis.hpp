#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/paradigms.hpp"

namespace clgr {

/// Vehicle state feeding the synthesis factors.
struct VehicleStateSnapshot {
    double speed = 0.0;          // m/s, >= 0
    double lateral_offset = 0.0;  // m, signed, left negative
    double heading_error = 0.0;   // rad in (-pi, pi]
    std::vector<double> lateral_offset_history;  // most recent last, <= window
    double v_max = 8.33;          // m/s
};

struct SynthesisConfig {
    double v_max = 8.33;              // 30 km/h
    double rho = 1.0;                 // weight of the synthesis term in the final reward
    double center_falloff = 3.0;      // m, matches the off-lane termination bound
    double angle_falloff = kPi / 2.0; // rad
    double stability_rate = 4.0;      // per meter of lateral std dev
    int stability_window = 10;

    void validate() const {
        if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
        if (!(rho > 0.0)) throw ConfigError("rho must be positive");
        if (!(center_falloff > 0.0) || !(angle_falloff > 0.0) || !(stability_rate > 0.0))
            throw ConfigError("synthesis falloffs must be positive");
        if (stability_window < 2) throw ConfigError("stability_window must be >= 2");
    }
};

/// Factor-by-factor view of one synthesized reward.
struct SynthesisBreakdown {
    double r_speed = 0.0;
    double f_center = 0.0;
    double f_angle = 0.0;
    double f_stability = 0.0;
    double r_synthesis = 0.0;
    double v_target = 0.0;  // m/s
};

inline double target_speed(double normalized_clg, double v_max) {
    return normalized_clg * v_max;
}

inline double speed_alignment(double v, double v_target, double v_max) {
    v = clamp(v, 0.0, v_max);
    const double r = 1.0 - std::abs(v - v_target) / v_max;
    return r < 0.0 ? 0.0 : r;
}

/// Linear falloff to 0 at `falloff` meters from lane center.
inline double center_factor(double lateral_offset, double falloff = 3.0) {
    const double f = 1.0 - std::abs(lateral_offset) / falloff;
    return f < 0.0 ? 0.0 : f;
}

/// Linear falloff to 0 at `falloff` radians of heading error.
inline double angle_factor(double heading_error, double falloff = kPi / 2.0) {
    const double f = 1.0 - std::abs(heading_error) / falloff;
    return f < 0.0 ? 0.0 : f;
}

/// exp(-rate * sigma) with sigma the population std dev of the lateral-offset
/// window; histories shorter than 2 score 1.
inline double stability_factor(const std::vector<double>& history, double rate = 4.0,
                               int window = 10) {
    const std::size_t w = static_cast<std::size_t>(window);
    const std::size_t n = history.size() < w ? history.size() : w;
    if (n < 2) return 1.0;
    const std::size_t begin = history.size() - n;
    double mean = 0.0;
    for (std::size_t i = begin; i < history.size(); ++i) mean += history[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = begin; i < history.size(); ++i) {
        const double d = history[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    return std::exp(-rate * std::sqrt(var));
}

/// Multiplicative combination of the speed-alignment term with the lane
/// factors; target speed is set by the normalized semantic score.
inline SynthesisBreakdown synthesize(const SemanticScore& score, const VehicleStateSnapshot& vs,
                                     const SynthesisConfig& cfg = {}) {
    SynthesisBreakdown b;
    b.v_target = target_speed(score.normalized, vs.v_max);
    b.r_speed = speed_alignment(vs.speed, b.v_target, vs.v_max);
    b.f_center = center_factor(vs.lateral_offset, cfg.center_falloff);
    b.f_angle = angle_factor(vs.heading_error, cfg.angle_falloff);
    b.f_stability = stability_factor(vs.lateral_offset_history, cfg.stability_rate,
                                     cfg.stability_window);
    b.r_synthesis = b.r_speed * b.f_center * b.f_angle * b.f_stability;
    return b;
}

/// Sparse task reward plus the weighted synthesis term.
inline double final_reward(double r_task, double r_synthesis, double rho) {
    if (!(rho > 0.0)) throw ConfigError("final_reward requires rho > 0");
    return r_task + rho * r_synthesis;
}

}  // namespace clgr
