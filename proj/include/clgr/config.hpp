#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/features.hpp"
#include "clgr/labeling.hpp"
#include "clgr/paradigms.hpp"
#include "clgr/provider.hpp"
#include "clgr/replay.hpp"
#include "clgr/sac.hpp"
#include "clgr/sim.hpp"
#include "clgr/synthesis.hpp"

namespace clgr {

/// Whole-run configuration, read from an INI-style file with sections
/// [simulator], [reward], [trainer], [buffer] and [eval]. Unknown sections or
/// keys are rejected; serialization is canonical so parse -> serialize ->
/// parse is the identity.
struct RunConfig {
    ScenarioConfig sim;
    std::string provider_selector = "synthetic";
    std::string pos_goal = kDefaultPosGoal;
    std::string neg_goal = kDefaultNegGoal;
    ParadigmConfig paradigm;
    SynthesisConfig synthesis;
    TrainerConfig trainer;
    FeatureConfig features;
    BufferConfig buffer;
    long total_steps = 50000;
    long eval_interval = 5000;
    bool log_trajectory = true;
    std::string routes_path;
    long eval_max_steps = 3000;

    void validate() const {
        sim.validate();
        paradigm.validate();
        synthesis.validate();
        trainer.validate();
        features.validate();
        buffer.validate();
        if (total_steps <= 0) throw ConfigError("total_steps must be positive");
        if (eval_interval <= 0) throw ConfigError("eval_interval must be positive");
        if (eval_max_steps <= 0) throw ConfigError("eval_max_steps must be positive");
        if (sim.map_path.empty()) throw ConfigError("[simulator] map is required");
        if (!std::filesystem::exists(sim.map_path))
            throw ConfigError("map file does not exist: " + sim.map_path);
        if (!routes_path.empty() && !std::filesystem::exists(routes_path))
            throw ConfigError("routes file does not exist: " + routes_path);
        if (pos_goal.empty() || neg_goal.empty())
            throw ConfigError("[reward] pos_goal and neg_goal are required");
    }

    std::shared_ptr<EmbeddingProvider> make_embedding_provider() const {
        return make_provider(provider_selector);
    }

    RewardStack make_stack() const {
        return RewardStack::make(make_embedding_provider(), pos_goal, neg_goal, paradigm, synthesis);
    }

    static RunConfig parse_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file: " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse_string(ss.str(), path);
    }

    static RunConfig parse_string(const std::string& text, const std::string& origin = "<config>");
    std::string serialize() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw ConfigError("cannot format number");
    return std::string(buf, p);
}

struct ConfigReader {
    std::string origin;
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::map<std::string, std::map<std::string, bool>> seen;

    std::string take(const std::string& sec, const std::string& key, bool& found) {
        auto s = sections.find(sec);
        if (s == sections.end()) {
            found = false;
            return "";
        }
        auto k = s->second.find(key);
        if (k == s->second.end()) {
            found = false;
            return "";
        }
        seen[sec][key] = true;
        found = true;
        return k->second;
    }

    void str(const std::string& sec, const std::string& key, std::string& out) {
        bool found = false;
        std::string v = take(sec, key, found);
        if (found) out = v;
    }

    void num(const std::string& sec, const std::string& key, double& out) {
        bool found = false;
        std::string v = take(sec, key, found);
        if (!found) return;
        try {
            std::size_t pos = 0;
            out = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            throw ConfigError(origin + ": [" + sec + "] " + key + " is not a number: \"" + v + "\"");
        }
    }

    void integer(const std::string& sec, const std::string& key, long& out) {
        double d = static_cast<double>(out);
        bool found = false;
        std::string v = take(sec, key, found);
        if (!found) return;
        try {
            std::size_t pos = 0;
            d = std::stod(v, &pos);
            if (pos != v.size() || d != std::floor(d)) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            throw ConfigError(origin + ": [" + sec + "] " + key + " is not an integer: \"" + v + "\"");
        }
        out = static_cast<long>(d);
    }

    void integer(const std::string& sec, const std::string& key, int& out) {
        long l = out;
        integer(sec, key, l);
        out = static_cast<int>(l);
    }

    void uinteger(const std::string& sec, const std::string& key, std::size_t& out) {
        long l = static_cast<long>(out);
        integer(sec, key, l);
        if (l < 0) throw ConfigError(origin + ": [" + sec + "] " + key + " must be >= 0");
        out = static_cast<std::size_t>(l);
    }

    void boolean(const std::string& sec, const std::string& key, bool& out) {
        bool found = false;
        std::string v = take(sec, key, found);
        if (!found) return;
        if (v == "true")
            out = true;
        else if (v == "false")
            out = false;
        else
            throw ConfigError(origin + ": [" + sec + "] " + key + " must be true or false, got \"" +
                              v + "\"");
    }

    void reject_unknown() const {
        for (const auto& [sec, keys] : sections) {
            auto s = seen.find(sec);
            for (const auto& [key, _] : keys) {
                if (s == seen.end() || !s->second.count(key))
                    throw ConfigError(origin + ": unknown key [" + sec + "] " + key);
            }
        }
    }
};

}  // namespace detail

inline RunConfig RunConfig::parse_string(const std::string& text, const std::string& origin) {
    detail::ConfigReader rd;
    rd.origin = origin;
    {
        std::istringstream in(text);
        std::string line, section;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = detail::trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[' && t.back() == ']') {
                section = t.substr(1, t.size() - 2);
                const bool known = section == "simulator" || section == "reward" ||
                                   section == "trainer" || section == "buffer" || section == "eval";
                if (!known)
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown section [" +
                                      section + "]");
                continue;
            }
            const std::size_t eq = t.find('=');
            if (eq == std::string::npos || section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected key = value inside a [section]");
            const std::string key = detail::trim(t.substr(0, eq));
            const std::string value = detail::trim(t.substr(eq + 1));
            if (rd.sections[section].count(key))
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key [" +
                                  section + "] " + key);
            rd.sections[section][key] = value;
        }
    }

    RunConfig c;
    rd.str("simulator", "map", c.sim.map_path);
    rd.integer("simulator", "n_traffic", c.sim.n_traffic);
    rd.num("simulator", "distance_budget_m", c.sim.distance_budget_m);
    rd.num("simulator", "stuck_speed_kmh", c.sim.stuck_speed_kmh);
    rd.num("simulator", "stuck_duration_s", c.sim.stuck_duration_s);
    rd.num("simulator", "deviation_limit_m", c.sim.deviation_limit_m);
    rd.num("simulator", "dt", c.sim.dt);
    rd.boolean("simulator", "scripted_lead", c.sim.scripted_lead);
    rd.num("simulator", "lead_gap_m", c.sim.lead_gap_m);
    rd.num("simulator", "lead_delay_s", c.sim.lead_delay_s);

    std::string mode = reward_mode_name(c.paradigm.mode);
    rd.str("reward", "mode", mode);
    c.paradigm.mode = parse_reward_mode(mode);
    rd.str("reward", "provider", c.provider_selector);
    rd.str("reward", "pos_goal", c.pos_goal);
    rd.str("reward", "neg_goal", c.neg_goal);
    rd.num("reward", "alpha", c.paradigm.alpha);
    rd.num("reward", "beta", c.paradigm.beta);
    rd.num("reward", "theta_min", c.paradigm.theta_min);
    rd.num("reward", "theta_max", c.paradigm.theta_max);
    rd.num("reward", "sr_temperature", c.paradigm.sr_temperature);
    rd.num("reward", "sr_threshold", c.paradigm.sr_threshold);
    rd.num("reward", "rho", c.synthesis.rho);
    rd.num("reward", "v_max_mps", c.synthesis.v_max);
    rd.num("reward", "center_falloff_m", c.synthesis.center_falloff);
    rd.num("reward", "angle_falloff_rad", c.synthesis.angle_falloff);
    rd.num("reward", "stability_rate", c.synthesis.stability_rate);
    rd.integer("reward", "stability_window", c.synthesis.stability_window);

    rd.num("trainer", "gamma", c.trainer.gamma);
    rd.num("trainer", "tau", c.trainer.tau);
    rd.num("trainer", "lr", c.trainer.lr);
    rd.integer("trainer", "batch_size", c.trainer.batch_size);
    rd.integer("trainer", "warmup_steps", c.trainer.warmup_steps);
    rd.num("trainer", "target_entropy", c.trainer.target_entropy);
    rd.integer("trainer", "updates_per_step", c.trainer.updates_per_step);
    rd.num("trainer", "init_alpha", c.trainer.init_alpha);
    long h1 = c.trainer.hidden.size() > 0 ? c.trainer.hidden[0] : 256;
    long h2 = c.trainer.hidden.size() > 1 ? c.trainer.hidden[1] : 256;
    rd.integer("trainer", "hidden1", h1);
    rd.integer("trainer", "hidden2", h2);
    c.trainer.hidden.clear();
    if (h1 > 0) c.trainer.hidden.push_back(static_cast<int>(h1));
    if (h2 > 0) c.trainer.hidden.push_back(static_cast<int>(h2));
    rd.integer("trainer", "bev_pool", c.features.bev_pool);
    rd.integer("trainer", "total_steps", c.total_steps);
    rd.integer("trainer", "eval_interval", c.eval_interval);
    rd.boolean("trainer", "log_trajectory", c.log_trajectory);

    rd.uinteger("buffer", "capacity", c.buffer.capacity);
    rd.integer("buffer", "label_interval", c.buffer.label_interval);
    rd.integer("buffer", "label_batch", c.buffer.label_batch);

    rd.str("eval", "routes", c.routes_path);
    rd.integer("eval", "max_steps", c.eval_max_steps);

    rd.reject_unknown();
    c.validate();
    return c;
}

inline std::string RunConfig::serialize() const {
    using detail::fmt_double;
    std::ostringstream o;
    o << "[simulator]\n";
    o << "map = " << sim.map_path << "\n";
    o << "n_traffic = " << sim.n_traffic << "\n";
    o << "distance_budget_m = " << fmt_double(sim.distance_budget_m) << "\n";
    o << "stuck_speed_kmh = " << fmt_double(sim.stuck_speed_kmh) << "\n";
    o << "stuck_duration_s = " << fmt_double(sim.stuck_duration_s) << "\n";
    o << "deviation_limit_m = " << fmt_double(sim.deviation_limit_m) << "\n";
    o << "dt = " << fmt_double(sim.dt) << "\n";
    o << "scripted_lead = " << (sim.scripted_lead ? "true" : "false") << "\n";
    o << "lead_gap_m = " << fmt_double(sim.lead_gap_m) << "\n";
    o << "lead_delay_s = " << fmt_double(sim.lead_delay_s) << "\n";
    o << "\n[reward]\n";
    o << "mode = " << reward_mode_name(paradigm.mode) << "\n";
    o << "provider = " << provider_selector << "\n";
    o << "pos_goal = " << pos_goal << "\n";
    o << "neg_goal = " << neg_goal << "\n";
    o << "alpha = " << fmt_double(paradigm.alpha) << "\n";
    o << "beta = " << fmt_double(paradigm.beta) << "\n";
    o << "theta_min = " << fmt_double(paradigm.theta_min) << "\n";
    o << "theta_max = " << fmt_double(paradigm.theta_max) << "\n";
    o << "sr_temperature = " << fmt_double(paradigm.sr_temperature) << "\n";
    o << "sr_threshold = " << fmt_double(paradigm.sr_threshold) << "\n";
    o << "rho = " << fmt_double(synthesis.rho) << "\n";
    o << "v_max_mps = " << fmt_double(synthesis.v_max) << "\n";
    o << "center_falloff_m = " << fmt_double(synthesis.center_falloff) << "\n";
    o << "angle_falloff_rad = " << fmt_double(synthesis.angle_falloff) << "\n";
    o << "stability_rate = " << fmt_double(synthesis.stability_rate) << "\n";
    o << "stability_window = " << synthesis.stability_window << "\n";
    o << "\n[trainer]\n";
    o << "gamma = " << fmt_double(trainer.gamma) << "\n";
    o << "tau = " << fmt_double(trainer.tau) << "\n";
    o << "lr = " << fmt_double(trainer.lr) << "\n";
    o << "batch_size = " << trainer.batch_size << "\n";
    o << "warmup_steps = " << trainer.warmup_steps << "\n";
    o << "target_entropy = " << fmt_double(trainer.target_entropy) << "\n";
    o << "updates_per_step = " << trainer.updates_per_step << "\n";
    o << "init_alpha = " << fmt_double(trainer.init_alpha) << "\n";
    o << "hidden1 = " << (trainer.hidden.size() > 0 ? trainer.hidden[0] : 0) << "\n";
    o << "hidden2 = " << (trainer.hidden.size() > 1 ? trainer.hidden[1] : 0) << "\n";
    o << "bev_pool = " << features.bev_pool << "\n";
    o << "total_steps = " << total_steps << "\n";
    o << "eval_interval = " << eval_interval << "\n";
    o << "log_trajectory = " << (log_trajectory ? "true" : "false") << "\n";
    o << "\n[buffer]\n";
    o << "capacity = " << buffer.capacity << "\n";
    o << "label_interval = " << buffer.label_interval << "\n";
    o << "label_batch = " << buffer.label_batch << "\n";
    o << "\n[eval]\n";
    o << "routes = " << routes_path << "\n";
    o << "max_steps = " << eval_max_steps << "\n";
    return o.str();
}

/// Fixed evaluation routes: lines of "route <start> <goal>".
inline std::vector<std::pair<std::string, std::string>> load_routes(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open routes file: " + path);
    std::vector<std::pair<std::string, std::string>> routes;
    std::string line;
    long lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string kw, a, b;
        if (!(ss >> kw) || kw[0] == '#') continue;
        if (kw != "route" || !(ss >> a >> b))
            throw DataError(path + ":" + std::to_string(lineno) + ": expected: route START GOAL");
        routes.emplace_back(a, b);
    }
    if (routes.empty()) throw DataError(path + ": no routes defined");
    return routes;
}

}  // namespace clgr
