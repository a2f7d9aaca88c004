#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "clgr/synthesis.hpp"

using namespace clgr;

TEST_CASE("target speed scales with the normalized score") {
    CHECK(target_speed(1.0, 8.33) == Catch::Approx(8.33));
    CHECK(target_speed(0.0, 8.33) == 0.0);
    CHECK(target_speed(0.5, 8.33) == Catch::Approx(4.165));
}

TEST_CASE("speed alignment") {
    CHECK(speed_alignment(5.0, 5.0, 8.0) == 1.0);
    CHECK(speed_alignment(0.0, 8.0, 8.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(speed_alignment(2.0, 6.0, 8.0) == Catch::Approx(0.5));
    // out-of-range v clamps into [0, v_max] first
    CHECK(speed_alignment(12.0, 8.0, 8.0) == 1.0);
    CHECK(speed_alignment(-1.0, 0.0, 8.0) == 1.0);
}

TEST_CASE("center and angle factors") {
    CHECK(center_factor(0.0) == 1.0);
    CHECK(center_factor(3.0) == 0.0);
    CHECK(center_factor(-3.5) == 0.0);
    CHECK(center_factor(1.5) == Catch::Approx(0.5));
    CHECK(angle_factor(0.0) == 1.0);
    CHECK(angle_factor(kPi / 2.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(angle_factor(-kPi / 4.0) == Catch::Approx(0.5));
}

TEST_CASE("stability factor") {
    CHECK(stability_factor({}) == 1.0);
    CHECK(stability_factor({0.7}) == 1.0);
    CHECK(stability_factor({0.4, 0.4, 0.4, 0.4}) == 1.0);
    // population std dev of {-0.5, +0.5} is 0.5 -> exp(-2)
    CHECK(stability_factor({-0.5, 0.5}) == Catch::Approx(std::exp(-2.0)).margin(1e-12));
    // only the last `window` entries count
    std::vector<double> h(20, 9.0);
    for (int i = 10; i < 20; ++i) h[static_cast<std::size_t>(i)] = 0.25;
    CHECK(stability_factor(h, 4.0, 10) == 1.0);
}

TEST_CASE("synthesize multiplies the four factors") {
    SemanticScore score;
    score.normalized = 1.0;
    VehicleStateSnapshot vs;
    vs.v_max = 8.0;
    vs.speed = 8.0;
    vs.lateral_offset = 0.0;
    vs.heading_error = 0.0;
    vs.lateral_offset_history = {0.0, 0.0, 0.0};

    SynthesisBreakdown b = synthesize(score, vs);
    CHECK(b.v_target == Catch::Approx(8.0));
    CHECK(b.r_speed == 1.0);
    CHECK(b.f_center == 1.0);
    CHECK(b.f_angle == 1.0);
    CHECK(b.f_stability == 1.0);
    CHECK(b.r_synthesis == 1.0);

    vs.lateral_offset = 3.0;  // annihilates the product
    b = synthesize(score, vs);
    CHECK(b.f_center == 0.0);
    CHECK(b.r_synthesis == 0.0);

    // r_speed 0.5, f_center 0.5 -> 0.25
    vs.lateral_offset = 1.5;
    vs.speed = 4.0;
    b = synthesize(score, vs);
    CHECK(b.r_speed == Catch::Approx(0.5));
    CHECK(b.f_center == Catch::Approx(0.5));
    CHECK(b.r_synthesis == Catch::Approx(0.25));
    CHECK(b.r_synthesis == Catch::Approx(b.r_speed * b.f_center * b.f_angle * b.f_stability).margin(1e-12));
}

TEST_CASE("final reward composition") {
    CHECK(final_reward(0.0, 0.7, 1.0) == Catch::Approx(0.7));
    CHECK(final_reward(1.0, 0.5, 1.0) == Catch::Approx(1.5));
    CHECK(final_reward(0.25, 1.0, 0.5) == Catch::Approx(0.75));
    CHECK_THROWS_AS(final_reward(0.0, 0.5, 0.0), ConfigError);
}

TEST_CASE("synthesis reward stays in [0,1] under fuzzing") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> uu(0.0, 1.0);
    std::uniform_real_distribution<double> us(-20.0, 40.0);
    std::uniform_real_distribution<double> ul(-10.0, 10.0);
    std::uniform_real_distribution<double> uh(-kPi, kPi);
    std::uniform_int_distribution<int> un(0, 12);
    for (int i = 0; i < 100000; ++i) {
        SemanticScore score;
        score.normalized = uu(rng);
        VehicleStateSnapshot vs;
        vs.v_max = 0.5 + 20.0 * uu(rng);
        vs.speed = us(rng);
        vs.lateral_offset = ul(rng);
        vs.heading_error = uh(rng);
        const int n = un(rng);
        for (int j = 0; j < n; ++j) vs.lateral_offset_history.push_back(ul(rng));
        SynthesisBreakdown b = synthesize(score, vs);
        REQUIRE(b.r_synthesis >= 0.0);
        REQUIRE(b.r_synthesis <= 1.0);
        REQUIRE(b.r_speed >= 0.0);
        REQUIRE(b.r_speed <= 1.0);
        REQUIRE(b.f_center >= 0.0);
        REQUIRE(b.f_center <= 1.0);
        REQUIRE(b.f_angle >= 0.0);
        REQUIRE(b.f_angle <= 1.0);
        REQUIRE(b.f_stability >= 0.0);
        REQUIRE(b.f_stability <= 1.0);
    }
}

TEST_CASE("factor-wise Lipschitz constants hold on sampled quotients") {
    std::mt19937_64 rng(88);
    std::uniform_real_distribution<double> uu(0.0, 1.0);
    const double v_max = 8.33;
    for (int i = 0; i < 20000; ++i) {
        const double vt = uu(rng) * v_max;
        const double v1 = uu(rng) * v_max;
        const double v2 = uu(rng) * v_max;
        if (v1 != v2)
            REQUIRE(std::abs(speed_alignment(v1, vt, v_max) - speed_alignment(v2, vt, v_max)) <=
                    std::abs(v1 - v2) / v_max + 1e-6);

        const double d1 = (uu(rng) - 0.5) * 8.0;
        const double d2 = (uu(rng) - 0.5) * 8.0;
        if (d1 != d2)
            REQUIRE(std::abs(center_factor(d1) - center_factor(d2)) <=
                    std::abs(d1 - d2) / 3.0 + 1e-6);

        const double a1 = (uu(rng) - 0.5) * 2.0 * kPi;
        const double a2 = (uu(rng) - 0.5) * 2.0 * kPi;
        if (a1 != a2)
            REQUIRE(std::abs(angle_factor(a1) - angle_factor(a2)) <=
                    std::abs(a1 - a2) * 2.0 / kPi + 1e-6);
    }
}

TEST_CASE("synthesize is monotone in each degradation") {
    SemanticScore score;
    score.normalized = 0.8;
    VehicleStateSnapshot base;
    base.v_max = 8.33;
    base.speed = 5.0;
    base.lateral_offset = 0.3;
    base.heading_error = 0.1;
    base.lateral_offset_history = {0.3, 0.3};

    double prev = synthesize(score, base).r_synthesis;
    for (double d = 0.4; d <= 4.0; d += 0.2) {
        VehicleStateSnapshot vs = base;
        vs.lateral_offset = d;
        const double r = synthesize(score, vs).r_synthesis;
        REQUIRE(r <= prev + 1e-12);
        prev = r;
    }

    prev = synthesize(score, base).r_synthesis;
    for (double a = 0.15; a <= kPi; a += 0.1) {
        VehicleStateSnapshot vs = base;
        vs.heading_error = a;
        const double r = synthesize(score, vs).r_synthesis;
        REQUIRE(r <= prev + 1e-12);
        prev = r;
    }

    const double vt = target_speed(score.normalized, base.v_max);
    prev = synthesize(score, base).r_synthesis;
    for (double dv = std::abs(base.speed - vt); dv <= base.v_max; dv += 0.25) {
        VehicleStateSnapshot vs = base;
        vs.speed = clamp(vt + dv, 0.0, base.v_max);
        const double r = synthesize(score, vs).r_synthesis;
        REQUIRE(r <= prev + 1e-12);
        prev = r;
    }
}

TEST_CASE("perfect state with normalized score 1 yields exactly 1") {
    SemanticScore score;
    score.normalized = 1.0;
    VehicleStateSnapshot vs;
    vs.v_max = 8.33;
    vs.speed = 8.33;
    vs.lateral_offset = 0.0;
    vs.heading_error = 0.0;
    vs.lateral_offset_history = {0.0, 0.0, 0.0, 0.0};
    CHECK(synthesize(score, vs).r_synthesis == 1.0);
}
