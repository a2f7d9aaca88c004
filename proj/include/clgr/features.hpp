#pragma once

#include <Eigen/Dense>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/sim.hpp"

namespace clgr {

/// Turns an Observation into the flat policy input: max-pooled BEV channels
/// (drivable, vehicles, route) plus scaled ego features and waypoints. Sits
/// behind this one function so a convolutional stack could replace it.
struct FeatureConfig {
    int bev_pool = 16;  // pooled grid side; 0 disables the BEV block

    void validate() const {
        if (bev_pool != 0 && (bev_pool < 2 || Observation::kGrid % bev_pool != 0))
            throw ConfigError("bev_pool must be 0 or a divisor of " +
                              std::to_string(Observation::kGrid) + " >= 2");
    }

    int dim() const {
        const int bev = bev_pool == 0 ? 0 : 3 * bev_pool * bev_pool;
        return bev + 3 + 2 * Observation::kWaypoints;
    }
};

inline Eigen::VectorXd extract_features(const FeatureConfig& cfg, const Observation& obs) {
    Eigen::VectorXd out(cfg.dim());
    int k = 0;
    if (cfg.bev_pool != 0) {
        const int g = Observation::kGrid;
        const int stride = g / cfg.bev_pool;
        for (int ch : {0, 2, 3}) {  // drivable, vehicles, route
            for (int pr = 0; pr < cfg.bev_pool; ++pr)
                for (int pc = 0; pc < cfg.bev_pool; ++pc) {
                    std::uint8_t m = 0;
                    for (int r = pr * stride; r < (pr + 1) * stride && !m; ++r)
                        for (int c = pc * stride; c < (pc + 1) * stride; ++c)
                            if (obs.bev_at(ch, r, c)) {
                                m = 1;
                                break;
                            }
                    out(k++) = static_cast<double>(m);
                }
        }
    }
    out(k++) = obs.steer;
    out(k++) = obs.throttle_brake;
    out(k++) = obs.speed / 10.0;
    for (const auto& wp : obs.waypoints) {
        out(k++) = wp[0] / 20.0;
        out(k++) = wp[1] / 20.0;
    }
    return out;
}

inline std::vector<double> extract_features_vec(const FeatureConfig& cfg, const Observation& obs) {
    const Eigen::VectorXd v = extract_features(cfg, obs);
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace clgr
