#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/networks.hpp"
#include "clgr/replay.hpp"

namespace clgr {

struct TrainerConfig {
    double gamma = 0.99;
    double tau = 0.005;  // Polyak rate
    double lr = 3e-4;
    int batch_size = 256;
    int warmup_steps = 1000;
    double target_entropy = -2.0;  // -dim(action)
    int updates_per_step = 1;
    std::uint64_t seed = 0;
    std::vector<int> hidden = {256, 256};
    double init_alpha = 1.0;

    void validate() const {
        if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0,1)");
        if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0,1]");
        if (!(lr > 0.0)) throw ConfigError("lr must be positive");
        if (batch_size <= 0) throw ConfigError("batch_size must be positive");
        if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
        if (updates_per_step <= 0) throw ConfigError("updates_per_step must be positive");
        if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
        if (!(init_alpha > 0.0)) throw ConfigError("init_alpha must be positive");
    }
};

struct Batch {
    Mat S;     // B x obs
    Mat A;     // B x act
    Mat R;     // B x 1
    Mat S2;    // B x obs
    Mat done;  // B x 1, {0,1}
};

inline Batch make_batch(const std::vector<Transition>& ts) {
    if (ts.empty()) throw ConfigError("make_batch: empty transition list");
    const int B = static_cast<int>(ts.size());
    const int obs = static_cast<int>(ts[0].state_features.size());
    Batch b;
    b.S.resize(B, obs);
    b.A.resize(B, 2);
    b.R.resize(B, 1);
    b.S2.resize(B, obs);
    b.done.resize(B, 1);
    for (int i = 0; i < B; ++i) {
        const Transition& t = ts[static_cast<std::size_t>(i)];
        if (!t.labeled) throw ConfigError("make_batch: unlabeled transition in training batch");
        for (int j = 0; j < obs; ++j) {
            b.S(i, j) = t.state_features[static_cast<std::size_t>(j)];
            b.S2(i, j) = t.next_state_features[static_cast<std::size_t>(j)];
        }
        b.A(i, 0) = t.action[0];
        b.A(i, 1) = t.action[1];
        b.R(i, 0) = t.reward;
        b.done(i, 0) = t.done ? 1.0 : 0.0;
    }
    return b;
}

struct CriticLossReport {
    double loss1 = 0.0;
    double loss2 = 0.0;
    double total = 0.0;
    std::vector<Mat> grads;  // critic1 tensors then critic2 tensors, visit order
};

/// Soft Bellman residual with the relabeled reward substituted:
///   y = r + gamma (1 - done) (min_i targetQ_i(s', a') - alpha log pi(a'|s'))
/// Per critic the loss is the batch mean of the squared residual; the report
/// total (their sum) is what the gradients refer to. `next_noise` fixes the
/// next-action draw so the loss is a deterministic function of parameters.
inline CriticLossReport critic_loss(const Batch& batch, const ActorParams& actor,
                                    CriticParams& c1, CriticParams& c2, const CriticParams& t1,
                                    const CriticParams& t2, double alpha, double gamma,
                                    const Mat& next_noise) {
    const plain::ActorEval next = plain::actor_rsample(actor, batch.S2, next_noise);
    Mat sa2(batch.S2.rows(), batch.S2.cols() + next.action.cols());
    sa2 << batch.S2, next.action;
    const Mat q_next = plain::critic_q(t1, sa2).cwiseMin(plain::critic_q(t2, sa2));
    const Mat mask = (1.0 - batch.done.array()).matrix();
    const Mat y =
        batch.R + gamma * mask.cwiseProduct(q_next - alpha * next.log_prob);

    ad::Tape tape;
    Mat sa(batch.S.rows(), batch.S.cols() + batch.A.cols());
    sa << batch.S, batch.A;
    const int sa_id = tape.input(std::move(sa), false);
    const int y_id = tape.input(y, false);

    std::vector<int> ids;
    const int q1 = graph::critic_q(tape, c1, sa_id, true, &ids);
    const int l1 = tape.mean_all(tape.square(tape.sub(q1, y_id)));
    const int q2 = graph::critic_q(tape, c2, sa_id, true, &ids);
    const int l2 = tape.mean_all(tape.square(tape.sub(q2, y_id)));
    const int total = tape.add(l1, l2);
    tape.backward(total);

    CriticLossReport out;
    out.loss1 = tape.value(l1)(0, 0);
    out.loss2 = tape.value(l2)(0, 0);
    out.total = tape.value(total)(0, 0);
    out.grads.reserve(ids.size());
    for (int id : ids) out.grads.push_back(tape.grad(id));
    return out;
}

struct ActorLossReport {
    double loss = 0.0;
    std::vector<Mat> grads;   // actor tensors, visit order
    Mat log_probs;            // B x 1, detached, for the temperature update
};

/// mean(alpha log pi(a|s) - min_i Q_i(s, a)) with a reparameterized through
/// the frozen `noise`; critic parameters are constants here.
inline ActorLossReport actor_loss(const Batch& batch, ActorParams& actor, CriticParams& c1,
                                  CriticParams& c2, double alpha, const Mat& noise) {
    ad::Tape tape;
    const int s_id = tape.input(batch.S, false);
    const int noise_id = tape.input(noise, false);
    std::vector<int> ids;
    const graph::ActorNodes pi = graph::actor_rsample(tape, actor, s_id, noise_id, true, &ids);
    const int sa = tape.concat_cols(s_id, pi.action);
    const int q = tape.min_elem(graph::critic_q(tape, c1, sa, false, nullptr),
                                graph::critic_q(tape, c2, sa, false, nullptr));
    const int loss = tape.mean_all(tape.sub(tape.scale(pi.log_prob, alpha), q));
    tape.backward(loss);

    ActorLossReport out;
    out.loss = tape.value(loss)(0, 0);
    out.grads.reserve(ids.size());
    for (int id : ids) out.grads.push_back(tape.grad(id));
    out.log_probs = tape.value(pi.log_prob);
    return out;
}

/// J(log alpha) = -log alpha * mean(log pi + target_entropy); alpha stays
/// positive because the optimization variable is log alpha.
inline double temperature_loss(const Mat& log_probs, double log_alpha, double target_entropy) {
    return -log_alpha * (log_probs.array() + target_entropy).mean();
}

inline double temperature_grad(const Mat& log_probs, double target_entropy) {
    return -(log_probs.array() + target_entropy).mean();
}

inline void polyak_update(const CriticParams& critic, CriticParams& target, double tau) {
    CriticParams& c = const_cast<CriticParams&>(critic);
    std::vector<Mat*> src, dst;
    visit_params(c, [&](Mat& m, const std::string&) { src.push_back(&m); }, "c");
    visit_params(target, [&](Mat& m, const std::string&) { dst.push_back(&m); }, "t");
    for (std::size_t i = 0; i < src.size(); ++i)
        *dst[i] = (1.0 - tau) * *dst[i] + tau * *src[i];
}

struct UpdateStats {
    double critic_loss1 = 0.0;
    double critic_loss2 = 0.0;
    double actor_loss = 0.0;
    double alpha = 0.0;
    double mean_reward = 0.0;
};

/// From-scratch soft actor-critic: twin critics with min backup, Polyak
/// targets, squashed-Gaussian actor and log-space temperature auto-tuning.
class SacTrainer {
public:
    SacTrainer(int obs_dim, TrainerConfig cfg)
        : cfg_(cfg), obs_dim_(obs_dim), rng_(cfg.seed ^ 0x5ac7a11ull) {
        cfg_.validate();
        actor_ = ActorParams::init(obs_dim_, kActDim, cfg_.hidden, rng_);
        critic1_ = CriticParams::init(obs_dim_, kActDim, cfg_.hidden, rng_);
        critic2_ = CriticParams::init(obs_dim_, kActDim, cfg_.hidden, rng_);
        target1_ = critic1_;
        target2_ = critic2_;
        log_alpha_ = std::log(cfg_.init_alpha);
        opt_actor_ = Adam(cfg_.lr);
        opt_critic_ = Adam(cfg_.lr);
        opt_alpha_ = Adam(cfg_.lr);
    }

    static constexpr int kActDim = 2;

    const TrainerConfig& config() const { return cfg_; }
    int obs_dim() const { return obs_dim_; }
    double alpha() const { return std::exp(log_alpha_); }
    double log_alpha() const { return log_alpha_; }
    ActorParams& actor() { return actor_; }
    const ActorParams& actor() const { return actor_; }
    CriticParams& critic1() { return critic1_; }
    CriticParams& critic2() { return critic2_; }
    CriticParams& target1() { return target1_; }
    CriticParams& target2() { return target2_; }
    std::mt19937_64& rng() { return rng_; }

    /// Stochastic (or deterministic tanh-mean) action for one state.
    std::pair<std::array<double, 2>, double> sample_action(const Eigen::VectorXd& state,
                                                           bool deterministic = false) {
        if (state.size() != obs_dim_)
            throw ConfigError("sample_action: state dim " + std::to_string(state.size()) +
                              " != " + std::to_string(obs_dim_));
        Mat s = state.transpose();
        Mat noise = Mat::Zero(1, kActDim);
        if (!deterministic) {
            std::normal_distribution<double> gauss(0.0, 1.0);
            for (int i = 0; i < kActDim; ++i) noise(0, i) = gauss(rng_);
        }
        const plain::ActorEval ev = plain::actor_rsample(actor_, s, noise);
        return {{ev.action(0, 0), ev.action(0, 1)}, ev.log_prob(0, 0)};
    }

    /// Log density of a given squashed action (finite for |a| up to 1-1e-9).
    double log_prob(const Eigen::VectorXd& state, const std::array<double, 2>& action) const {
        Mat s = state.transpose();
        const Mat h = plain::mlp_tanh(actor_.trunk, s);
        const Mat mean = (h * actor_.mean_head.W).rowwise() + actor_.mean_head.b.row(0);
        const Mat logstd = ((h * actor_.logstd_head.W).rowwise() + actor_.logstd_head.b.row(0))
                               .array()
                               .max(ActorParams::kLogStdMin)
                               .min(ActorParams::kLogStdMax);
        double lp = 0.0;
        for (int i = 0; i < kActDim; ++i) {
            const double a = clamp(action[static_cast<std::size_t>(i)], -1.0 + 1e-9, 1.0 - 1e-9);
            const double u = std::atanh(a);
            const double sd = std::exp(logstd(0, i));
            const double z = (u - mean(0, i)) / sd;
            lp += -0.5 * z * z - logstd(0, i) - 0.5 * std::log(2.0 * kPi);
            lp -= 2.0 * (std::log(2.0) - u - softplus_scalar(-2.0 * u));
        }
        return lp;
    }

    /// One full SAC step on a sampled batch: critic, actor, temperature and
    /// Polyak target updates.
    UpdateStats update(ReplayBuffer& buffer) {
        const Batch batch = make_batch(buffer.sample(static_cast<std::size_t>(cfg_.batch_size), rng_));
        return update_on(batch);
    }

    UpdateStats update_on(const Batch& batch) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        const int B = static_cast<int>(batch.S.rows());
        Mat next_noise(B, kActDim), noise(B, kActDim);
        for (int i = 0; i < B; ++i)
            for (int j = 0; j < kActDim; ++j) {
                next_noise(i, j) = gauss(rng_);
                noise(i, j) = gauss(rng_);
            }

        UpdateStats stats;
        stats.mean_reward = batch.R.mean();

        CriticLossReport cl = critic_loss(batch, actor_, critic1_, critic2_, target1_, target2_,
                                          alpha(), cfg_.gamma, next_noise);
        std::vector<Mat*> cparams;
        visit_params(critic1_, [&](Mat& m, const std::string&) { cparams.push_back(&m); }, "c1");
        visit_params(critic2_, [&](Mat& m, const std::string&) { cparams.push_back(&m); }, "c2");
        opt_critic_.step(cparams, cl.grads);
        stats.critic_loss1 = cl.loss1;
        stats.critic_loss2 = cl.loss2;

        ActorLossReport al = actor_loss(batch, actor_, critic1_, critic2_, alpha(), noise);
        std::vector<Mat*> aparams;
        visit_params(actor_, [&](Mat& m, const std::string&) { aparams.push_back(&m); });
        opt_actor_.step(aparams, al.grads);
        stats.actor_loss = al.loss;

        Mat la(1, 1), ga(1, 1);
        la(0, 0) = log_alpha_;
        ga(0, 0) = temperature_grad(al.log_probs, cfg_.target_entropy);
        opt_alpha_.step({&la}, {ga});
        log_alpha_ = la(0, 0);
        stats.alpha = alpha();

        polyak_update(critic1_, target1_, cfg_.tau);
        polyak_update(critic2_, target2_, cfg_.tau);
        return stats;
    }

    void set_log_alpha(double v) { log_alpha_ = v; }

private:
    static double softplus_scalar(double x) {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    }

    TrainerConfig cfg_;
    int obs_dim_;
    ActorParams actor_;
    CriticParams critic1_, critic2_, target1_, target2_;
    double log_alpha_ = 0.0;
    Adam opt_actor_, opt_critic_, opt_alpha_;
    std::mt19937_64 rng_;
};

}  // namespace clgr
