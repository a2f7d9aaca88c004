#pragma once

#include <limits>

#include "clgr/common.hpp"

namespace clgr {

/// Ground-truth per-step scene facts. Stands in for camera content: the
/// synthetic embedder and the synthesis factors are computed from these.
struct SceneDescriptor {
    bool collision = false;
    double nearest_vehicle_gap = std::numeric_limits<double>::infinity();  // meters
    double lateral_offset = 0.0;                                           // meters, signed
    bool off_road = false;
    double hazard = 0.0;  // in [0, 1], 1 on collision
};

/// Gap-based risk saturating at 10 m, forced to 1 on collision. Off-road
/// alone pins hazard at >= 0.5.
inline double derive_hazard(bool collision, double gap_m, bool off_road) {
    if (collision) return 1.0;
    double h = clamp(1.0 - gap_m / 10.0, 0.0, 1.0);
    if (off_road && h < 0.5) h = 0.5;
    return h;
}

inline SceneDescriptor make_scene(bool collision, double gap_m, double lateral_offset_m,
                                  bool off_road) {
    SceneDescriptor d;
    d.collision = collision;
    d.nearest_vehicle_gap = gap_m;
    d.lateral_offset = lateral_offset_m;
    d.off_road = off_road;
    d.hazard = derive_hazard(collision, gap_m, off_road);
    return d;
}

}  // namespace clgr
