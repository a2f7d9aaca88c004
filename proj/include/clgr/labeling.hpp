#pragma once

#include <cstdint>
#include <memory>

#include "clgr/paradigms.hpp"
#include "clgr/provider.hpp"
#include "clgr/scene.hpp"
#include "clgr/synthesis.hpp"

namespace clgr {

/// Everything needed to turn a stored transition into a reward. Goal
/// embeddings are computed once, at construction.
struct RewardStack {
    std::shared_ptr<EmbeddingProvider> provider;
    GoalPair goals;
    ParadigmConfig paradigm;
    SynthesisConfig synthesis;

    static RewardStack make(std::shared_ptr<EmbeddingProvider> provider,
                            const std::string& pos_goal, const std::string& neg_goal,
                            ParadigmConfig paradigm, SynthesisConfig synthesis) {
        paradigm.validate();
        synthesis.validate();
        RewardStack s;
        s.goals = GoalPair::make(*provider, pos_goal, neg_goal, paradigm.alpha, paradigm.beta);
        s.provider = std::move(provider);
        s.paradigm = paradigm;
        s.synthesis = synthesis;
        return s;
    }
};

/// Per-step reward components, serialized into trajectory logs.
struct RewardBreakdown {
    SemanticScore score;
    SynthesisBreakdown synthesis;
    double task_reward = 0.0;
    double reward = 0.0;
};

/// The one labeling path: identical whether invoked per step or deferred in
/// batches, so both pipelines agree to the last bit.
inline RewardBreakdown compute_reward(const RewardStack& stack, const SceneDescriptor& scene,
                                      const VehicleStateSnapshot& vehicle, std::uint64_t obs_key,
                                      double task_reward) {
    RewardBreakdown out;
    out.task_reward = task_reward;
    switch (stack.paradigm.mode) {
        case RewardMode::kSparseBinary:
            out.reward = reward_sparse_binary(scene);
            return out;
        case RewardMode::kVlmSr: {
            const Embedding emb = stack.provider->frame(obs_key, scene);
            const double r = reward_vlm_sr(emb, stack.goals, stack.paradigm);
            out.score.sim_pos = cosine_sim(emb, stack.goals.pos_embedding);
            out.score.sim_neg = cosine_sim(emb, stack.goals.neg_embedding);
            out.score.raw = r;
            out.score.normalized = r;
            out.reward = task_reward + stack.synthesis.rho * r;
            return out;
        }
        case RewardMode::kVlmRm: {
            const Embedding emb = stack.provider->frame(obs_key, scene);
            // positive goal = target state, negative goal = baseline state
            const double r = reward_vlm_rm(emb, stack.goals.neg_embedding, stack.goals.pos_embedding);
            out.score.raw = r;
            out.score.normalized = normalize_clg(r, stack.paradigm);
            out.reward = task_reward + stack.synthesis.rho * r;
            return out;
        }
        default: {
            const Embedding emb = stack.provider->frame(obs_key, scene);
            out.score = semantic_score(emb, stack.goals, stack.paradigm);
            VehicleStateSnapshot vs = vehicle;
            vs.v_max = stack.synthesis.v_max;
            out.synthesis = synthesize(out.score, vs, stack.synthesis);
            out.reward = final_reward(task_reward, out.synthesis.r_synthesis, stack.synthesis.rho);
            return out;
        }
    }
}

}  // namespace clgr
