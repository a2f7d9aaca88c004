#include <catch2/catch_amalgamated.hpp>

#include "clgr/metrics.hpp"

using namespace clgr;

namespace {

// episode with uniform steps; collisions at the given 1-based step indices
EpisodeLog make_episode(int steps, double dist_per_step, double dt,
                        std::vector<long> collision_steps = {}, double collision_speed = 10.0,
                        int completions = 0) {
    EpisodeLog ep;
    for (int i = 1; i <= steps; ++i) {
        EpisodeStep s;
        s.time_s = i * dt;
        s.distance_increment_m = dist_per_step;
        s.speed_kmh = dist_per_step / dt * 3.6;
        for (long c : collision_steps)
            if (c == i) {
                s.collision = true;
                s.collision_speed_kmh = collision_speed;
            }
        s.route_completions = completions;
        ep.steps.push_back(s);
    }
    ep.termination = "budget_done";
    return ep;
}

}  // namespace

TEST_CASE("compute_metrics rejects empty input") {
    CHECK_THROWS_AS(compute_metrics({}, MetricMode::kTrain), ConfigError);
}

TEST_CASE("DCF: 2 collisions over half a kilometer") {
    // 500 steps of 1 m = 0.5 km, collisions at steps 100 and 400
    auto ep = make_episode(500, 1.0, 0.1, {100, 400});
    MetricReport r = compute_metrics({ep}, MetricMode::kTrain);
    CHECK(r.dcf_per_km == Catch::Approx(4.0));
    CHECK(r.collisions == 2);
    // identity: DCF * km = collisions
    CHECK(r.dcf_per_km * r.total_km == Catch::Approx(static_cast<double>(r.collisions)));
    // ICT between consecutive events only
    CHECK(r.ict_steps == Catch::Approx(300.0));
}

TEST_CASE("TCF: 3 collisions in 1500 steps") {
    auto ep = make_episode(1500, 0.5, 0.1, {10, 600, 1200});
    MetricReport r = compute_metrics({ep}, MetricMode::kTrain);
    CHECK(r.tcf_per_1000 == Catch::Approx(2.0));
    CHECK(r.tcf_per_1000 * static_cast<double>(r.total_steps) / 1000.0 ==
          Catch::Approx(static_cast<double>(r.collisions)));
}

TEST_CASE("AS: 1000 m in 200 s is 18 km/h") {
    auto ep = make_episode(2000, 0.5, 0.1);  // 2000 steps x 0.1 s = 200 s, x 0.5 m = 1000 m
    MetricReport r = compute_metrics({ep}, MetricMode::kTrain);
    CHECK(r.as_kmh == Catch::Approx(18.0));
    CHECK(r.td_m == Catch::Approx(1000.0));
}

TEST_CASE("SR: 9 of 10 test routes reached") {
    std::vector<EpisodeLog> logs;
    for (int i = 0; i < 10; ++i) {
        EpisodeLog ep = make_episode(100, 1.0, 0.1);
        ep.route_length_m = 100.0;
        ep.route_progress_m = i == 3 ? 40.0 : 100.0;
        ep.route_reached = i != 3;
        if (i == 3) ep.termination = "off_lane";
        logs.push_back(std::move(ep));
    }
    MetricReport r = compute_metrics(logs, MetricMode::kTest);
    CHECK(r.sr == Catch::Approx(0.9));
    // test-mode RC is the mean completion fraction
    CHECK(r.rc == Catch::Approx((9.0 + 0.4) / 10.0));
}

TEST_CASE("CR, CS and the zero-collision coupling") {
    auto clean = make_episode(100, 1.0, 0.1);
    auto crash = make_episode(100, 1.0, 0.1, {50}, 12.0);
    MetricReport r = compute_metrics({clean, crash}, MetricMode::kTrain);
    CHECK(r.cr == Catch::Approx(0.5));
    CHECK(r.cs_kmh == Catch::Approx(12.0));
    // single-collision episode contributes the start-to-collision gap
    CHECK(r.ict_steps == Catch::Approx(50.0));

    MetricReport z = compute_metrics({clean}, MetricMode::kTrain);
    CHECK(z.cr == 0.0);
    CHECK(z.cs_kmh == 0.0);   // undefined-as-zero
    CHECK(z.ict_steps == 0.0);  // no gaps at all
}

TEST_CASE("train RC averages completed-route counts") {
    auto a = make_episode(100, 1.0, 0.1, {}, 0.0, 3);
    auto b = make_episode(100, 1.0, 0.1, {}, 0.0, 1);
    MetricReport r = compute_metrics({a, b}, MetricMode::kTrain);
    CHECK(r.rc == Catch::Approx(2.0));
}

TEST_CASE("metric recomputation is idempotent") {
    auto ep1 = make_episode(321, 0.7, 0.1, {17, 100, 200}, 7.5, 2);
    auto ep2 = make_episode(123, 1.3, 0.1);
    MetricReport a = compute_metrics({ep1, ep2}, MetricMode::kTrain);
    MetricReport b = compute_metrics({ep1, ep2}, MetricMode::kTrain);
    CHECK(a.as_kmh == b.as_kmh);
    CHECK(a.rc == b.rc);
    CHECK(a.td_m == b.td_m);
    CHECK(a.cs_kmh == b.cs_kmh);
    CHECK(a.cr == b.cr);
    CHECK(a.ict_steps == b.ict_steps);
    CHECK(a.dcf_per_km == b.dcf_per_km);
    CHECK(a.tcf_per_1000 == b.tcf_per_1000);
}
