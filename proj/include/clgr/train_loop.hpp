#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "clgr/checkpoint.hpp"
#include "clgr/config.hpp"
#include "clgr/features.hpp"
#include "clgr/metrics.hpp"
#include "clgr/policies.hpp"
#include "clgr/replay.hpp"
#include "clgr/sac.hpp"
#include "clgr/sim.hpp"
#include "clgr/trajectory.hpp"

namespace clgr {

/// Deterministic wrapper turning a trained actor into a Policy.
class TrainedPolicy final : public Policy {
public:
    TrainedPolicy(SacTrainer& trainer, FeatureConfig features, bool deterministic = true)
        : trainer_(&trainer), features_(features), deterministic_(deterministic) {}

    std::array<double, 2> act(const Observation& obs, const SceneDescriptor&) override {
        return trainer_->sample_action(extract_features(features_, obs), deterministic_).first;
    }

private:
    SacTrainer* trainer_;
    FeatureConfig features_;
    bool deterministic_;
};

struct CurveRow {
    long step = 0;
    int episode = 0;
    double as_kmh = 0.0;
    double rc = 0.0;
    double td_m = 0.0;
    double cr = 0.0;
    double ict_steps = 0.0;
    double dcf_per_km = 0.0;
    double tcf_per_1000 = 0.0;
    double mean_reward = 0.0;
};

inline void write_curves_csv(const std::string& path, const std::vector<CurveRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open curves file for writing: " + path);
    f << "step,episode,as_kmh,rc,td_m,cr,ict_steps,dcf_per_km,tcf_per_1000,mean_reward\n";
    for (const CurveRow& r : rows) {
        f << r.step << ',' << r.episode << ',' << detail::fmt_double(r.as_kmh) << ','
          << detail::fmt_double(r.rc) << ',' << detail::fmt_double(r.td_m) << ','
          << detail::fmt_double(r.cr) << ',' << detail::fmt_double(r.ict_steps) << ','
          << detail::fmt_double(r.dcf_per_km) << ',' << detail::fmt_double(r.tcf_per_1000) << ','
          << detail::fmt_double(r.mean_reward) << '\n';
    }
}

inline std::vector<CurveRow> read_curves_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open curves file: " + path);
    std::vector<CurveRow> rows;
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        CurveRow r;
        if (std::sscanf(line.c_str(), "%ld,%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &r.step, &r.episode,
                        &r.as_kmh, &r.rc, &r.td_m, &r.cr, &r.ict_steps, &r.dcf_per_km,
                        &r.tcf_per_1000, &r.mean_reward) != 10)
            throw DataError(path + ": malformed curves row: " + line);
        rows.push_back(r);
    }
    return rows;
}

struct TrainResult {
    long steps = 0;
    int episodes = 0;
    std::vector<CurveRow> curve;
    std::string checkpoint_path;
    std::string trajectory_path;
    std::string curves_path;
};

/// The full training loop: roll the environment, store transitions with
/// zero-initialized rewards, label them in deferred batches, interleave SAC
/// updates, emit curve rows and write the checkpoint at the end.
inline TrainResult train_run(const RunConfig& cfg, std::uint64_t seed, const std::string& out_dir,
                             std::shared_ptr<SacTrainer>* trainer_out = nullptr) {
    std::filesystem::create_directories(out_dir);
    RoadGraph graph = RoadGraph::load(cfg.sim.map_path);

    ScenarioConfig sim_cfg = cfg.sim;
    sim_cfg.seed = seed;
    Simulator sim(graph, sim_cfg);

    TrainerConfig tc = cfg.trainer;
    tc.seed = seed;
    auto trainer = std::make_shared<SacTrainer>(cfg.features.dim(), tc);
    if (trainer_out) *trainer_out = trainer;

    RewardStack stack = cfg.make_stack();
    ReplayBuffer buffer(cfg.buffer);
    RandomPolicy warmup(seed);

    TrainResult result;
    result.checkpoint_path = out_dir + "/checkpoint.bin";
    result.curves_path = out_dir + "/curves.csv";
    std::unique_ptr<TrajectoryWriter> writer;
    if (cfg.log_trajectory) {
        result.trajectory_path = out_dir + "/trajectory.jsonl";
        writer = std::make_unique<TrajectoryWriter>(result.trajectory_path);
    }

    double reward_sum = 0.0;
    long reward_count = 0;
    ReplayBuffer::LabelSink sink = [&](const Transition& t, const RewardBreakdown& b) {
        reward_sum += b.reward;
        ++reward_count;
        if (writer) writer->attach_label(t.obs_key, b);
    };

    Observation obs = sim.reset();
    SceneDescriptor scene;
    Eigen::VectorXd features = extract_features(cfg.features, obs);
    int episode = 0;
    long episode_step = 0;
    EpisodeLog current_ep;
    std::vector<EpisodeLog> since_row;

    for (long t = 1; t <= cfg.total_steps; ++t) {
        std::array<double, 2> action;
        if (t <= cfg.trainer.warmup_steps) {
            action = warmup.act(obs, scene);
        } else {
            action = trainer->sample_action(features, false).first;
        }

        Simulator::StepResult res = sim.step(action);
        Eigen::VectorXd next_features = extract_features(cfg.features, res.obs);
        ++episode_step;

        Transition tr;
        tr.obs_key = res.info.frame_id;
        tr.state_features.assign(features.data(), features.data() + features.size());
        tr.action = action;
        tr.next_obs_key = res.info.frame_id + 1;
        tr.next_state_features.assign(next_features.data(),
                                      next_features.data() + next_features.size());
        tr.done = res.terminated;
        tr.scene = res.scene;
        tr.vehicle = sim.vehicle_snapshot();
        tr.task_reward = res.info.task_reward;
        buffer.push(std::move(tr));

        if (writer) writer->push(make_row(episode, episode_step, sim, res));

        EpisodeStep es;
        es.time_s = res.info.sim_time_s;
        es.speed_kmh = res.info.speed_mps * 3.6;
        es.distance_increment_m = res.info.distance_increment_m;
        es.collision = res.info.collision;
        es.collision_speed_kmh = res.info.collision_speed_kmh;
        es.route_completions = res.info.route_completions;
        es.lateral_offset_m = res.info.lateral_offset_m;
        current_ep.steps.push_back(std::move(es));

        if (t % cfg.buffer.label_interval == 0) buffer.relabel_batch(stack, sink);

        if (t > cfg.trainer.warmup_steps &&
            buffer.labeled_count() >= static_cast<std::size_t>(cfg.trainer.batch_size)) {
            for (int u = 0; u < cfg.trainer.updates_per_step; ++u) trainer->update(buffer);
        }

        obs = res.obs;
        scene = res.scene;
        features = next_features;

        if (res.terminated) {
            current_ep.termination = termination_name(res.reason);
            since_row.push_back(std::move(current_ep));
            current_ep = EpisodeLog{};
            ++episode;
            episode_step = 0;
            obs = sim.reset();
            scene = SceneDescriptor{};
            features = extract_features(cfg.features, obs);
        }

        if (t % cfg.eval_interval == 0) {
            std::vector<EpisodeLog> logs = since_row;
            if (logs.empty() && !current_ep.steps.empty()) logs.push_back(current_ep);
            if (!logs.empty()) {
                const MetricReport m = compute_metrics(logs, MetricMode::kTrain);
                CurveRow row;
                row.step = t;
                row.episode = episode;
                row.as_kmh = m.as_kmh;
                row.rc = m.rc;
                row.td_m = m.td_m;
                row.cr = m.cr;
                row.ict_steps = m.ict_steps;
                row.dcf_per_km = m.dcf_per_km;
                row.tcf_per_1000 = m.tcf_per_1000;
                row.mean_reward = reward_count > 0 ? reward_sum / static_cast<double>(reward_count) : 0.0;
                result.curve.push_back(row);
                since_row.clear();
                reward_sum = 0.0;
                reward_count = 0;
            }
        }
    }

    // label everything that is still pending, then flush the log
    while (buffer.labeled_count() < buffer.size()) {
        const RelabelReport rep = buffer.relabel_batch(stack, sink);
        if (rep.labeled == 0) break;  // only missing embeddings remain
    }
    if (writer) writer->flush_all();

    result.steps = cfg.total_steps;
    result.episodes = episode;
    write_curves_csv(result.curves_path, result.curve);
    save_checkpoint(result.checkpoint_path, *trainer);
    return result;
}

struct RouteEvalResult {
    MetricReport report;
    std::vector<EpisodeLog> logs;
    std::vector<double> discounted_returns;  // per route, gamma from the trainer config
};

/// Deterministic-policy rollouts over the fixed route list. Rewards are
/// labeled immediately here (evaluation is outside the training loop), so the
/// logs carry full reward breakdowns. Pass `rows_out` to capture per-step
/// trajectory rows (episode = route index) for persistence.
inline RouteEvalResult evaluate_routes(const RunConfig& cfg, const RoadGraph& graph,
                                       Policy& policy, std::uint64_t seed,
                                       std::vector<TrajectoryRow>* rows_out = nullptr) {
    if (cfg.routes_path.empty()) throw ConfigError("[eval] routes file is required");
    const auto routes = load_routes(cfg.routes_path);
    const RewardStack stack = cfg.make_stack();

    RouteEvalResult out;
    for (std::size_t i = 0; i < routes.size(); ++i) {
        ScenarioConfig sc = cfg.sim;
        sc.seed = seed + i;
        sc.fixed_start = routes[i].first;
        sc.fixed_goal = routes[i].second;
        Simulator sim(graph, sc);
        Observation obs = sim.reset();
        SceneDescriptor scene;
        policy.on_reset();

        EpisodeLog ep;
        ep.route_length_m = sim.route().length();
        double ret = 0.0;
        double discount = 1.0;
        const std::size_t rows_begin = rows_out ? rows_out->size() : 0;
        for (long t = 0; t < cfg.eval_max_steps; ++t) {
            const auto action = policy.act(obs, scene);
            Simulator::StepResult res = sim.step(action);

            EpisodeStep es;
            es.time_s = res.info.sim_time_s;
            es.speed_kmh = res.info.speed_mps * 3.6;
            es.distance_increment_m = res.info.distance_increment_m;
            es.collision = res.info.collision;
            es.collision_speed_kmh = res.info.collision_speed_kmh;
            es.route_completions = res.info.route_completions;
            es.lateral_offset_m = res.info.lateral_offset_m;
            es.reward = compute_reward(stack, res.scene, sim.vehicle_snapshot(), res.info.frame_id,
                                       res.info.task_reward);
            es.has_reward = true;
            ret += discount * es.reward.reward;
            discount *= cfg.trainer.gamma;

            if (rows_out) {
                TrajectoryRow row = make_row(static_cast<int>(i), t + 1, sim, res);
                row.labeled = true;
                row.reward = es.reward;
                rows_out->push_back(std::move(row));
            }
            ep.steps.push_back(std::move(es));

            obs = res.obs;
            scene = res.scene;
            if (res.info.route_completed) {
                ep.route_reached = true;
                break;
            }
            if (res.terminated) {
                ep.termination = termination_name(res.reason);
                break;
            }
        }
        ep.route_progress_m = sim.route_progress();
        if (rows_out && rows_out->size() > rows_begin) {
            TrajectoryRow& last = rows_out->back();
            last.route_length_m = ep.route_length_m;
            last.route_progress_m = ep.route_progress_m;
            last.route_reached = ep.route_reached;
            if (!ep.route_reached && last.termination == "none") last.termination = ep.termination;
        }
        out.discounted_returns.push_back(ret);
        out.logs.push_back(std::move(ep));
    }
    out.report = compute_metrics(out.logs, MetricMode::kTest);
    return out;
}

}  // namespace clgr
