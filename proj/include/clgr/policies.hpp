#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <string>

#include "clgr/common.hpp"
#include "clgr/scene.hpp"
#include "clgr/sim.hpp"

namespace clgr {

/// Anything that maps observations to actions in [-1,1]^2.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::array<double, 2> act(const Observation& obs, const SceneDescriptor& scene) = 0;
    virtual void on_reset() {}
};

/// Uniform actions. Seeding is derived from (seed ^ tag) so the training
/// loop's warmup and `rollout --policy random` draw the same stream.
class RandomPolicy final : public Policy {
public:
    static constexpr std::uint64_t kSeedTag = 0x72616e64706f6cull;  // "randpol"

    explicit RandomPolicy(std::uint64_t seed) : rng_(seed ^ kSeedTag) {}

    std::array<double, 2> act(const Observation&, const SceneDescriptor&) override {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double steer = u(rng_);
        const double accel = u(rng_);
        return {steer, accel};
    }

private:
    std::mt19937_64 rng_;
};

/// Waypoint-chasing steering shared by the scripted policies.
inline double pure_pursuit_steer(const Observation& obs, double lateral_shift = 0.0) {
    // aim at the third waypoint (~6 m ahead); fall back to the first nonzero
    std::array<double, 2> wp = obs.waypoints[2];
    if (wp[0] == 0.0 && wp[1] == 0.0) {
        for (const auto& cand : obs.waypoints)
            if (cand[0] != 0.0 || cand[1] != 0.0) {
                wp = cand;
                break;
            }
    }
    const double angle = std::atan2(wp[1] + lateral_shift, std::max(wp[0], 0.5));
    return clamp(2.0 * angle / Simulator::kMaxSteer, -1.0, 1.0);
}

inline double speed_tracking_accel(double speed, double target) {
    return clamp(0.6 * (target - speed), -1.0, 1.0);
}

/// Lane follower that brakes on a shrinking front gap, stops behind the
/// blocker and resumes once the gap opens. Reproduces the approach/stop/
/// resume reward traces.
class ApproachAndStopPolicy final : public Policy {
public:
    std::array<double, 2> act(const Observation& obs, const SceneDescriptor& scene) override {
        const double gap = scene.nearest_vehicle_gap;
        double accel;
        if (gap < 6.0) {
            accel = -1.0;
        } else if (gap < 18.0) {
            const double target = 5.0 * (gap - 6.0) / 12.0;
            accel = speed_tracking_accel(obs.speed, target);
        } else {
            accel = speed_tracking_accel(obs.speed, 7.0);
        }
        return {pure_pursuit_steer(obs), accel};
    }
};

/// Swerves a half lane to the left while passing a close vehicle, then
/// returns to the lane center.
class SidePassPolicy final : public Policy {
public:
    std::array<double, 2> act(const Observation& obs, const SceneDescriptor& scene) override {
        const double gap = scene.nearest_vehicle_gap;
        const double shift = gap < 16.0 ? 2.2 : 0.0;
        return {pure_pursuit_steer(obs, shift), speed_tracking_accel(obs.speed, 5.0)};
    }
};

/// Plain lane follower at a fixed target speed.
class LaneFollowPolicy final : public Policy {
public:
    explicit LaneFollowPolicy(double target_speed = 5.0) : target_(target_speed) {}

    std::array<double, 2> act(const Observation& obs, const SceneDescriptor&) override {
        return {pure_pursuit_steer(obs), speed_tracking_accel(obs.speed, target_)};
    }

private:
    double target_;
};

inline std::unique_ptr<Policy> make_scripted_policy(const std::string& name) {
    if (name == "approach-and-stop") return std::make_unique<ApproachAndStopPolicy>();
    if (name == "side-pass") return std::make_unique<SidePassPolicy>();
    if (name == "lane-follow") return std::make_unique<LaneFollowPolicy>();
    throw ConfigError("unknown scripted policy \"" + name +
                      "\" (expected approach-and-stop, side-pass or lane-follow)");
}

}  // namespace clgr
