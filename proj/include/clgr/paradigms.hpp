#pragma once

#include <cmath>
#include <string>

#include "clgr/common.hpp"
#include "clgr/embedding.hpp"
#include "clgr/provider.hpp"
#include "clgr/scene.hpp"

namespace clgr {

enum class RewardMode {
    kClg,
    kPosOnly,
    kNegOnly,
    kLord,
    kVlmSr,
    kVlmRm,
    kSparseBinary,
};

inline RewardMode parse_reward_mode(const std::string& s) {
    if (s == "clg") return RewardMode::kClg;
    if (s == "pos_only") return RewardMode::kPosOnly;
    if (s == "neg_only") return RewardMode::kNegOnly;
    if (s == "lord") return RewardMode::kLord;
    if (s == "vlm_sr") return RewardMode::kVlmSr;
    if (s == "vlm_rm") return RewardMode::kVlmRm;
    if (s == "sparse_binary") return RewardMode::kSparseBinary;
    throw ConfigError("unknown reward mode \"" + s + "\"");
}

inline std::string reward_mode_name(RewardMode m) {
    switch (m) {
        case RewardMode::kClg: return "clg";
        case RewardMode::kPosOnly: return "pos_only";
        case RewardMode::kNegOnly: return "neg_only";
        case RewardMode::kLord: return "lord";
        case RewardMode::kVlmSr: return "vlm_sr";
        case RewardMode::kVlmRm: return "vlm_rm";
        case RewardMode::kSparseBinary: return "sparse_binary";
    }
    throw ConfigError("bad reward mode");
}

/// Positive/negative language goals with their embeddings, computed once at
/// construction. In vlm_rm mode the positive goal doubles as the target state
/// and the negative goal as the baseline state.
struct GoalPair {
    std::string pos_text;
    std::string neg_text;
    Embedding pos_embedding;
    Embedding neg_embedding;
    double alpha = 0.5;
    double beta = 0.5;

    static GoalPair make(const EmbeddingProvider& provider, const std::string& pos_text,
                         const std::string& neg_text, double alpha, double beta) {
        if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0))
            throw ConfigError("goal weights must lie in (0,1)");
        if (std::abs(alpha + beta - 1.0) > 1e-12)
            throw ConfigError("goal weights must satisfy alpha + beta = 1");
        GoalPair g;
        g.pos_text = pos_text;
        g.neg_text = neg_text;
        g.pos_embedding = provider.goal(pos_text);
        g.neg_embedding = provider.goal(neg_text);
        g.alpha = alpha;
        g.beta = beta;
        return g;
    }
};

struct ParadigmConfig {
    RewardMode mode = RewardMode::kClg;
    double alpha = 0.5;
    double beta = 0.5;
    double theta_min = -0.03;
    double theta_max = 0.0;
    double sr_temperature = 1.0;
    double sr_threshold = 0.8;

    void validate() const {
        if (!(theta_min < theta_max))
            throw ConfigError("paradigm requires theta_min < theta_max");
        if (mode == RewardMode::kClg && std::abs(alpha + beta - 1.0) > 1e-12)
            throw ConfigError("clg mode requires alpha + beta = 1");
        if (!(sr_threshold > 0.0 && sr_threshold < 1.0))
            throw ConfigError("sr_threshold must lie in (0,1)");
        if (!(sr_temperature > 0.0))
            throw ConfigError("sr_temperature must be positive");
    }
};

/// Per-frame semantic score: similarities, raw contrast, and its normalized
/// [0,1] image.
struct SemanticScore {
    double sim_pos = 0.0;
    double sim_neg = 0.0;
    double raw = 0.0;
    double normalized = 0.0;
};

/// Plain similarity reward: state-goal cosine.
inline double reward_vlm(const Embedding& state_emb, const Embedding& goal_emb) {
    return cosine_sim(state_emb, goal_emb);
}

/// Opposite-goal reward 1 - sim(state, neg); range [0, 2].
inline double reward_lord(const Embedding& state_emb, const Embedding& neg_goal_emb) {
    return 1.0 - cosine_sim(state_emb, neg_goal_emb);
}

/// Contrast reward alpha * sim_pos - beta * sim_neg.
inline SemanticScore reward_clg(const Embedding& state_emb, const GoalPair& goals) {
    SemanticScore s;
    s.sim_pos = cosine_sim(state_emb, goals.pos_embedding);
    s.sim_neg = cosine_sim(state_emb, goals.neg_embedding);
    s.raw = goals.alpha * s.sim_pos - goals.beta * s.sim_neg;
    return s;
}

/// Affine rescale of the clipped raw score into [0,1].
inline double normalize_clg(double raw, const ParadigmConfig& cfg) {
    return (clamp(raw, cfg.theta_min, cfg.theta_max) - cfg.theta_min) /
           (cfg.theta_max - cfg.theta_min);
}

/// Two-way softmax over {pos, neg} similarities followed by thresholding.
inline double reward_vlm_sr(const Embedding& state_emb, const GoalPair& goals,
                            const ParadigmConfig& cfg) {
    const double sp = cosine_sim(state_emb, goals.pos_embedding) / cfg.sr_temperature;
    const double sn = cosine_sim(state_emb, goals.neg_embedding) / cfg.sr_temperature;
    const double m = sp > sn ? sp : sn;
    const double ep = std::exp(sp - m);
    const double en = std::exp(sn - m);
    const double p_pos = ep / (ep + en);
    return p_pos >= cfg.sr_threshold ? 1.0 : 0.0;
}

/// Projection of the state embedding onto the baseline-to-target direction.
inline double reward_vlm_rm(const Embedding& state_emb, const Embedding& baseline_emb,
                            const Embedding& target_emb) {
    if (baseline_emb.dim() != target_emb.dim() || state_emb.dim() != target_emb.dim())
        throw ConfigError("vlm_rm dimension mismatch: state " + std::to_string(state_emb.dim()) +
                          ", baseline " + std::to_string(baseline_emb.dim()) + ", target " +
                          std::to_string(target_emb.dim()));
    double n2 = 0.0;
    for (int i = 0; i < target_emb.dim(); ++i) {
        const double d = target_emb[i] - baseline_emb[i];
        n2 += d * d;
    }
    const double n = std::sqrt(n2);
    if (n < 1e-12)
        throw ConfigError("vlm_rm baseline and target embeddings coincide; direction undefined");
    double dot = 0.0;
    for (int i = 0; i < target_emb.dim(); ++i)
        dot += state_emb[i] * (target_emb[i] - baseline_emb[i]);
    return dot / n;
}

/// Collision-only penalty: -1 on collision frames, 0 otherwise.
inline double reward_sparse_binary(const SceneDescriptor& scene) {
    return scene.collision ? -1.0 : 0.0;
}

/// Raw + normalized score for the synthesis-feeding modes. lord is shifted by
/// -1 into [-1,1] so a single normalizer serves every mode.
inline SemanticScore semantic_score(const Embedding& state_emb, const GoalPair& goals,
                                    const ParadigmConfig& cfg) {
    SemanticScore s = reward_clg(state_emb, goals);
    switch (cfg.mode) {
        case RewardMode::kClg:
            break;
        case RewardMode::kPosOnly:
            s.raw = s.sim_pos;
            break;
        case RewardMode::kNegOnly:
            s.raw = -s.sim_neg;
            break;
        case RewardMode::kLord:
            s.raw = reward_lord(state_emb, goals.neg_embedding) - 1.0;
            break;
        default:
            throw ConfigError("semantic_score does not apply to mode " + reward_mode_name(cfg.mode));
    }
    s.normalized = normalize_clg(s.raw, cfg);
    return s;
}

}  // namespace clgr
