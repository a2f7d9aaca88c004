#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "clgr/config.hpp"
#include "clgr/trajectory.hpp"

using namespace clgr;

namespace {

std::string minimal_config() {
    return std::string("[simulator]\nmap = ") + CLGR_DATA_DIR + "/maps/loop_town.txt\n" +
           "[eval]\nroutes = " + CLGR_DATA_DIR + "/routes/test_routes.txt\n";
}

}  // namespace

TEST_CASE("config defaults and strict key checking") {
    RunConfig c = RunConfig::parse_string(minimal_config());
    CHECK(c.paradigm.mode == RewardMode::kClg);
    CHECK(c.paradigm.theta_min == Catch::Approx(-0.03));
    CHECK(c.paradigm.theta_max == 0.0);
    CHECK(c.synthesis.v_max == Catch::Approx(8.33));
    CHECK(c.trainer.gamma == Catch::Approx(0.99));
    CHECK(c.buffer.capacity == 100000);
    CHECK(c.buffer.label_interval == 256);
    CHECK(c.buffer.label_batch == 1024);
    CHECK(c.pos_goal == kDefaultPosGoal);

    CHECK_THROWS_AS(RunConfig::parse_string(minimal_config() + "[reward]\nnope = 1\n"),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::parse_string(minimal_config() + "[what]\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse_string("[simulator]\nmap = /missing/map.txt\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse_string(minimal_config() + "[reward]\nmode = bogus\n"),
                    ConfigError);
    CHECK_THROWS_AS(
        RunConfig::parse_string(minimal_config() + "[trainer]\ngamma = 1.5\n"), ConfigError);
}

TEST_CASE("config round-trips: parse -> serialize -> parse is identity") {
    std::string text = minimal_config() +
                       "[reward]\nmode = lord\nalpha = 0.6\nbeta = 0.4\nrho = 0.75\n"
                       "pos_goal = the road is clear with no car accidents\n"
                       "[trainer]\nhidden1 = 64\nhidden2 = 32\nbatch_size = 96\nlr = 0.00025\n"
                       "[buffer]\ncapacity = 5000\nlabel_interval = 32\nlabel_batch = 64\n";
    RunConfig a = RunConfig::parse_string(text);
    const std::string s1 = a.serialize();
    RunConfig b = RunConfig::parse_string(s1);
    const std::string s2 = b.serialize();
    CHECK(s1 == s2);  // byte identical
    CHECK(b.paradigm.mode == RewardMode::kLord);
    CHECK(b.paradigm.alpha == Catch::Approx(0.6));
    CHECK(b.trainer.hidden == std::vector<int>{64, 32});
    CHECK(b.trainer.lr == Catch::Approx(0.00025));
    CHECK(b.buffer.capacity == 5000);
}

TEST_CASE("goal texts with spaces survive the config") {
    std::string text = minimal_config() + "[reward]\npos_goal = all lanes are empty and calm\n";
    RunConfig c = RunConfig::parse_string(text);
    CHECK(c.pos_goal == "all lanes are empty and calm");
    RunConfig d = RunConfig::parse_string(c.serialize());
    CHECK(d.pos_goal == c.pos_goal);
}

TEST_CASE("routes file parses") {
    auto routes = load_routes(CLGR_DATA_DIR "/routes/test_routes.txt");
    REQUIRE(routes.size() == 10);
    CHECK(routes[0].first == "n_b1");
    CHECK(routes[0].second == "n_b2");
}

TEST_CASE("trajectory rows round-trip through JSONL byte-identically") {
    namespace fs = std::filesystem;
    std::vector<TrajectoryRow> rows;
    for (int i = 0; i < 5; ++i) {
        TrajectoryRow r;
        r.episode = 0;
        r.step = i + 1;
        r.frame_id = static_cast<std::uint64_t>(i + 1);
        r.time_s = 0.1 * (i + 1);
        r.x = 3.14159 + i * 0.7;
        r.y = -2.0 / 3.0 * i;
        r.heading_rad = 0.123456789012345 * i;
        r.speed_mps = 5.5;
        r.lateral_offset_m = -0.000123 * i;
        r.gap_m = i == 2 ? 7.25 : std::numeric_limits<double>::infinity();
        r.hazard = i == 2 ? 0.275 : 0.0;
        r.labeled = i % 2 == 0;
        if (r.labeled) {
            r.reward.score.sim_pos = 0.9999999999999;
            r.reward.score.raw = 0.49999999999;
            r.reward.synthesis.r_synthesis = 1.0 / 3.0;
            r.reward.reward = 1.0 / 3.0;
        }
        if (i == 4) {
            r.done = true;
            r.termination = "off_lane";
        }
        rows.push_back(r);
    }

    const auto p1 = fs::temp_directory_path() / "clgr_traj1.jsonl";
    const auto p2 = fs::temp_directory_path() / "clgr_traj2.jsonl";
    write_trajectory(p1.string(), rows);
    auto loaded = read_trajectory(p1.string());
    REQUIRE(loaded.size() == rows.size());
    write_trajectory(p2.string(), loaded);

    std::ifstream f1(p1), f2(p2);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    // exact value round-trip, including the infinity-as-absent convention
    CHECK(loaded[1].gap_m == std::numeric_limits<double>::infinity());
    CHECK(loaded[2].gap_m == 7.25);
    CHECK(loaded[0].reward.score.sim_pos == rows[0].reward.score.sim_pos);
    CHECK(loaded[4].termination == "off_lane");
}

TEST_CASE("lateral history rebuild matches the live window rule") {
    std::vector<TrajectoryRow> rows;
    for (int ep = 0; ep < 2; ++ep)
        for (int i = 0; i < 14; ++i) {
            TrajectoryRow r;
            r.episode = ep;
            r.step = i + 1;
            r.lateral_offset_m = ep * 100.0 + i;
            rows.push_back(r);
        }
    // step 14 of episode 0: window is the last 10 laterals of that episode
    VehicleStateSnapshot vs = vehicle_from_rows(rows, 13);
    REQUIRE(vs.lateral_offset_history.size() == 10);
    CHECK(vs.lateral_offset_history.front() == 4.0);
    CHECK(vs.lateral_offset_history.back() == 13.0);
    // step 3 of episode 1 never looks across the episode boundary
    vs = vehicle_from_rows(rows, 16);
    REQUIRE(vs.lateral_offset_history.size() == 3);
    CHECK(vs.lateral_offset_history.front() == 100.0);
    CHECK(vs.lateral_offset_history.back() == 102.0);
}

TEST_CASE("episode grouping from rows") {
    std::vector<TrajectoryRow> rows;
    for (int ep = 0; ep < 3; ++ep)
        for (int i = 0; i < 5; ++i) {
            TrajectoryRow r;
            r.episode = ep;
            r.step = i + 1;
            r.time_s = 0.1 * (i + 1);
            r.speed_mps = 2.0;
            r.distance_increment_m = 0.2;
            if (ep == 1 && i == 4) {
                r.done = true;
                r.termination = "collision";
                r.collision = true;
                r.collision_speed_kmh = 9.0;
            }
            rows.push_back(r);
        }
    auto logs = episodes_from_rows(rows);
    REQUIRE(logs.size() == 3);
    CHECK(logs[1].termination == "collision");
    CHECK(logs[1].collision_count() == 1);
    CHECK(logs[0].distance_m() == Catch::Approx(1.0));
}
