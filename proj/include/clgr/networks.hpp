#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "clgr/ad.hpp"
#include "clgr/common.hpp"

namespace clgr {

using Mat = Eigen::MatrixXd;

struct Linear {
    Mat W;  // in x out
    Mat b;  // 1 x out

    static Linear init(int in, int out, std::mt19937_64& rng, double scale = 1.0) {
        Linear l;
        const double bound = scale / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> u(-bound, bound);
        l.W.resize(in, out);
        for (int i = 0; i < in; ++i)
            for (int j = 0; j < out; ++j) l.W(i, j) = u(rng);
        l.b = Mat::Zero(1, out);
        return l;
    }
};

/// tanh-activated MLP trunk; heads stay linear.
struct Mlp {
    std::vector<Linear> layers;

    static Mlp init(int in, const std::vector<int>& hidden, std::mt19937_64& rng) {
        Mlp m;
        int d = in;
        for (int h : hidden) {
            m.layers.push_back(Linear::init(d, h, rng));
            d = h;
        }
        return m;
    }

    int out_dim(int in) const { return layers.empty() ? in : static_cast<int>(layers.back().W.cols()); }
};

struct ActorParams {
    Mlp trunk;
    Linear mean_head;
    Linear logstd_head;

    static constexpr double kLogStdMin = -20.0;
    static constexpr double kLogStdMax = 2.0;

    static ActorParams init(int obs_dim, int act_dim, const std::vector<int>& hidden,
                            std::mt19937_64& rng, double head_scale = 0.1) {
        ActorParams p;
        p.trunk = Mlp::init(obs_dim, hidden, rng);
        const int h = p.trunk.out_dim(obs_dim);
        p.mean_head = Linear::init(h, act_dim, rng, head_scale);
        p.logstd_head = Linear::init(h, act_dim, rng, head_scale);
        return p;
    }
};

struct CriticParams {
    Mlp trunk;        // over concat(state, action)
    Linear out_head;  // -> 1

    static CriticParams init(int obs_dim, int act_dim, const std::vector<int>& hidden,
                             std::mt19937_64& rng) {
        CriticParams p;
        p.trunk = Mlp::init(obs_dim + act_dim, hidden, rng);
        p.out_head = Linear::init(p.trunk.out_dim(obs_dim + act_dim), 1, rng);
        return p;
    }
};

/// Stable flattening order used by the optimizer, the finite-difference
/// oracle and the checkpoint format alike.
template <typename Fn>
void visit_params(Mlp& m, Fn&& fn, const std::string& prefix) {
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        fn(m.layers[i].W, prefix + ".l" + std::to_string(i) + ".W");
        fn(m.layers[i].b, prefix + ".l" + std::to_string(i) + ".b");
    }
}

template <typename Fn>
void visit_params(ActorParams& p, Fn&& fn) {
    visit_params(p.trunk, fn, "actor.trunk");
    fn(p.mean_head.W, "actor.mean.W");
    fn(p.mean_head.b, "actor.mean.b");
    fn(p.logstd_head.W, "actor.logstd.W");
    fn(p.logstd_head.b, "actor.logstd.b");
}

template <typename Fn>
void visit_params(CriticParams& p, Fn&& fn, const std::string& prefix) {
    visit_params(p.trunk, fn, prefix + ".trunk");
    fn(p.out_head.W, prefix + ".out.W");
    fn(p.out_head.b, prefix + ".out.b");
}

namespace graph {

/// Registers every tensor of a network as a tape input. `ids` aligns with
/// the visit_params order when collected the same way.
struct TapedLinear {
    int W = -1;
    int b = -1;
};

inline TapedLinear lift(ad::Tape& tape, const Linear& l, bool needs_grad, std::vector<int>* ids) {
    TapedLinear t;
    t.W = tape.input(l.W, needs_grad);
    t.b = tape.input(l.b, needs_grad);
    if (ids) {
        ids->push_back(t.W);
        ids->push_back(t.b);
    }
    return t;
}

inline int linear(ad::Tape& tape, const TapedLinear& l, int x) {
    return tape.add_rowvec(tape.matmul(x, l.W), l.b);
}

inline int mlp_tanh(ad::Tape& tape, const Mlp& m, int x, bool needs_grad, std::vector<int>* ids) {
    int h = x;
    for (const Linear& l : m.layers) h = tape.tanh(linear(tape, lift(tape, l, needs_grad, ids), h));
    return h;
}

struct ActorNodes {
    int action = -1;   // B x act_dim, tanh squashed
    int log_prob = -1; // B x 1
    int mean = -1;
    int logstd = -1;
};

/// Reparameterized squashed-Gaussian sample with its log density:
///   u = mean + exp(logstd) * noise,  a = tanh(u)
///   log pi(a) = sum_d [ -noise^2/2 - logstd - log(2 pi)/2
///                       - 2 (log 2 - u - softplus(-2u)) ]
inline ActorNodes actor_rsample(ad::Tape& tape, const ActorParams& p, int states, int noise,
                                bool needs_grad, std::vector<int>* ids) {
    ActorNodes out;
    const int h = mlp_tanh(tape, p.trunk, states, needs_grad, ids);
    out.mean = linear(tape, lift(tape, p.mean_head, needs_grad, ids), h);
    const int logstd_raw = linear(tape, lift(tape, p.logstd_head, needs_grad, ids), h);
    out.logstd = tape.clamp(logstd_raw, ActorParams::kLogStdMin, ActorParams::kLogStdMax);
    const int std = tape.exp(out.logstd);
    const int u = tape.add(out.mean, tape.hadamard(std, noise));
    out.action = tape.tanh(u);

    const Mat& xi = tape.value(noise);
    Mat base = (-0.5 * xi.array().square() - 0.5 * std::log(2.0 * kPi)).matrix();
    const int const_term = tape.input(std::move(base), false);
    // -2 (log 2 - u - softplus(-2u)) = 2u + 2 softplus(-2u) - 2 log 2
    const int squash_corr = tape.add_scalar(
        tape.add(tape.scale(u, 2.0), tape.scale(tape.softplus(tape.scale(u, -2.0)), 2.0)),
        -2.0 * std::log(2.0));
    out.log_prob = tape.sum_rows(tape.add(tape.sub(const_term, out.logstd), squash_corr));
    return out;
}

inline int critic_q(ad::Tape& tape, const CriticParams& p, int state_action, bool needs_grad,
                    std::vector<int>* ids) {
    const int h = mlp_tanh(tape, p.trunk, state_action, needs_grad, ids);
    return linear(tape, lift(tape, p.out_head, needs_grad, ids), h);
}

}  // namespace graph

namespace plain {

inline Mat mlp_tanh(const Mlp& m, Mat x) {
    for (const Linear& l : m.layers) x = ((x * l.W).rowwise() + l.b.row(0)).array().tanh();
    return x;
}

struct ActorEval {
    Mat action;
    Mat log_prob;  // B x 1
    Mat mean;
    Mat logstd;
};

inline ActorEval actor_rsample(const ActorParams& p, const Mat& states, const Mat& noise) {
    ActorEval out;
    const Mat h = mlp_tanh(p.trunk, states);
    out.mean = (h * p.mean_head.W).rowwise() + p.mean_head.b.row(0);
    out.logstd = ((h * p.logstd_head.W).rowwise() + p.logstd_head.b.row(0))
                     .array()
                     .max(ActorParams::kLogStdMin)
                     .min(ActorParams::kLogStdMax);
    const Mat u = out.mean + out.logstd.array().exp().matrix().cwiseProduct(noise);
    out.action = u.array().tanh();
    Mat lp = (-0.5 * noise.array().square() - 0.5 * std::log(2.0 * kPi) - out.logstd.array() +
              2.0 * u.array() +
              2.0 * (-2.0 * u.array()).unaryExpr([](double x) {
                  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
              }) -
              2.0 * std::log(2.0))
                 .matrix();
    out.log_prob = lp.rowwise().sum();
    return out;
}

inline Mat critic_q(const CriticParams& p, const Mat& state_action) {
    const Mat h = mlp_tanh(p.trunk, state_action);
    return (h * p.out_head.W).rowwise() + p.out_head.b.row(0);
}

}  // namespace plain

/// Adam over a fixed list of tensors; slot order must stay stable.
class Adam {
public:
    explicit Adam(double lr = 3e-4, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(b1), b2_(b2), eps_(eps) {}

    void step(const std::vector<Mat*>& params, const std::vector<Mat>& grads) {
        if (params.size() != grads.size())
            throw ConfigError("Adam: parameter/gradient count mismatch");
        if (m_.empty()) {
            for (Mat* p : params) {
                m_.push_back(Mat::Zero(p->rows(), p->cols()));
                v_.push_back(Mat::Zero(p->rows(), p->cols()));
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * grads[i];
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * grads[i].cwiseProduct(grads[i]);
            const Mat mhat = m_[i] / bc1;
            const Mat vhat = v_[i] / bc2;
            *params[i] -= lr_ * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + eps_).matrix());
        }
    }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<Mat> m_, v_;
};

}  // namespace clgr
