#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "clgr/checkpoint.hpp"
#include "clgr/sac.hpp"

using namespace clgr;

namespace {

// Independent loss evaluations through the plain:: forward path, used as the
// finite-difference oracle. The tape never runs here.
double fd_critic_loss(const Batch& b, const ActorParams& actor, const CriticParams& c1,
                      const CriticParams& c2, const CriticParams& t1, const CriticParams& t2,
                      double alpha, double gamma, const Mat& next_noise) {
    const plain::ActorEval next = plain::actor_rsample(actor, b.S2, next_noise);
    Mat sa2(b.S2.rows(), b.S2.cols() + 2);
    sa2 << b.S2, next.action;
    const Mat qn = plain::critic_q(t1, sa2).cwiseMin(plain::critic_q(t2, sa2));
    const Mat y = b.R + gamma * (1.0 - b.done.array()).matrix().cwiseProduct(qn - alpha * next.log_prob);
    Mat sa(b.S.rows(), b.S.cols() + 2);
    sa << b.S, b.A;
    const Mat r1 = plain::critic_q(c1, sa) - y;
    const Mat r2 = plain::critic_q(c2, sa) - y;
    return r1.array().square().mean() + r2.array().square().mean();
}

double fd_actor_loss(const Batch& b, const ActorParams& actor, const CriticParams& c1,
                     const CriticParams& c2, double alpha, const Mat& noise) {
    const plain::ActorEval pi = plain::actor_rsample(actor, b.S, noise);
    Mat sa(b.S.rows(), b.S.cols() + 2);
    sa << b.S, pi.action;
    const Mat q = plain::critic_q(c1, sa).cwiseMin(plain::critic_q(c2, sa));
    return (alpha * pi.log_prob - q).mean();
}

Batch random_batch(int B, int obs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution coin(0.3);
    Batch b;
    b.S.resize(B, obs);
    b.A.resize(B, 2);
    b.R.resize(B, 1);
    b.S2.resize(B, obs);
    b.done.resize(B, 1);
    for (int i = 0; i < B; ++i) {
        for (int j = 0; j < obs; ++j) {
            b.S(i, j) = u(rng);
            b.S2(i, j) = u(rng);
        }
        b.A(i, 0) = u(rng);
        b.A(i, 1) = u(rng);
        b.R(i, 0) = u(rng);
        b.done(i, 0) = coin(rng) ? 1.0 : 0.0;
    }
    return b;
}

Mat random_noise(int B, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat n(B, 2);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < 2; ++j) n(i, j) = g(rng);
    return n;
}

void check_grad(double ad, double fd) {
    const double denom = std::max({std::abs(ad), std::abs(fd), 1e-3});
    REQUIRE(std::abs(ad - fd) / denom <= 1e-4);
}

}  // namespace

TEST_CASE("toy linear critic reproduces the closed-form Bellman loss") {
    // Q(s, a) = w (s + a) with w = 1: trunk empty, out head W = [1, 1], b = 0.
    std::mt19937_64 rng(1);
    ActorParams actor = ActorParams::init(1, 2, {4}, rng);
    CriticParams c = CriticParams::init(1, 2, {}, rng);
    REQUIRE(c.trunk.layers.empty());
    // critic input is (s, a0, a1); weight a1 with 0 so Q = s + a0
    c.out_head.W << 1.0, 1.0, 0.0;
    c.out_head.b.setZero();
    CriticParams c2 = c;
    CriticParams t1 = c, t2 = c;

    Batch b;
    b.S.resize(1, 1);
    b.A.resize(1, 2);
    b.R.resize(1, 1);
    b.S2.resize(1, 1);
    b.done.resize(1, 1);
    b.S(0, 0) = 1.0;
    b.A(0, 0) = 1.0;
    b.A(0, 1) = 0.0;
    b.R(0, 0) = 0.5;
    b.S2(0, 0) = 0.0;
    b.done(0, 0) = 1.0;  // y = r exactly, no bootstrap

    const Mat noise = Mat::Zero(1, 2);
    CriticLossReport rep = critic_loss(b, actor, c, c2, t1, t2, 0.2, 0.99, noise);
    CHECK(rep.loss1 == Catch::Approx(2.25).margin(1e-12));  // (2 - 0.5)^2
    CHECK(rep.loss2 == Catch::Approx(2.25).margin(1e-12));

    // with done = 0 the target bootstraps through the actor's next action
    b.done(0, 0) = 0.0;
    rep = critic_loss(b, actor, c, c2, t1, t2, 0.2, 0.99, noise);
    CHECK(rep.loss1 ==
          Catch::Approx(fd_critic_loss(b, actor, c, c2, t1, t2, 0.2, 0.99, noise) / 2.0));
}

TEST_CASE("critic gradients match central finite differences") {
    std::mt19937_64 rng(7);
    const int obs = 6, B = 5;
    for (int draw = 0; draw < 5; ++draw) {
        ActorParams actor = ActorParams::init(obs, 2, {8, 8}, rng);
        CriticParams c1 = CriticParams::init(obs, 2, {8, 8}, rng);
        CriticParams c2 = CriticParams::init(obs, 2, {8, 8}, rng);
        CriticParams t1 = CriticParams::init(obs, 2, {8, 8}, rng);
        CriticParams t2 = CriticParams::init(obs, 2, {8, 8}, rng);
        Batch b = random_batch(B, obs, rng);
        Mat next_noise = random_noise(B, rng);
        const double alpha = 0.37, gamma = 0.95;

        CriticLossReport rep = critic_loss(b, actor, c1, c2, t1, t2, alpha, gamma, next_noise);

        std::vector<Mat*> params;
        visit_params(c1, [&](Mat& m, const std::string&) { params.push_back(&m); }, "c1");
        visit_params(c2, [&](Mat& m, const std::string&) { params.push_back(&m); }, "c2");
        REQUIRE(params.size() == rep.grads.size());
        const double h = 1e-5;
        for (std::size_t p = 0; p < params.size(); ++p) {
            Mat& m = *params[p];
            for (Eigen::Index i = 0; i < m.size(); ++i) {
                const double orig = m(i);
                m(i) = orig + h;
                const double fp = fd_critic_loss(b, actor, c1, c2, t1, t2, alpha, gamma, next_noise);
                m(i) = orig - h;
                const double fm = fd_critic_loss(b, actor, c1, c2, t1, t2, alpha, gamma, next_noise);
                m(i) = orig;
                check_grad(rep.grads[p](i), (fp - fm) / (2.0 * h));
            }
        }
    }
}

TEST_CASE("actor gradients match central finite differences") {
    std::mt19937_64 rng(13);
    const int obs = 6, B = 5;
    for (int draw = 0; draw < 5; ++draw) {
        ActorParams actor = ActorParams::init(obs, 2, {8, 8}, rng);
        CriticParams c1 = CriticParams::init(obs, 2, {8, 8}, rng);
        CriticParams c2 = CriticParams::init(obs, 2, {8, 8}, rng);
        Batch b = random_batch(B, obs, rng);
        Mat noise = random_noise(B, rng);
        const double alpha = 0.21;

        ActorLossReport rep = actor_loss(b, actor, c1, c2, alpha, noise);

        std::vector<Mat*> params;
        visit_params(actor, [&](Mat& m, const std::string&) { params.push_back(&m); });
        REQUIRE(params.size() == rep.grads.size());
        const double h = 1e-5;
        for (std::size_t p = 0; p < params.size(); ++p) {
            Mat& m = *params[p];
            for (Eigen::Index i = 0; i < m.size(); ++i) {
                const double orig = m(i);
                m(i) = orig + h;
                const double fp = fd_actor_loss(b, actor, c1, c2, alpha, noise);
                m(i) = orig - h;
                const double fm = fd_actor_loss(b, actor, c1, c2, alpha, noise);
                m(i) = orig;
                check_grad(rep.grads[p](i), (fp - fm) / (2.0 * h));
            }
        }
    }
}

TEST_CASE("actor loss falls when critics rate sampled actions higher") {
    std::mt19937_64 rng(17);
    ActorParams actor = ActorParams::init(4, 2, {8}, rng);
    CriticParams c1 = CriticParams::init(4, 2, {8}, rng);
    CriticParams c2 = CriticParams::init(4, 2, {8}, rng);
    Batch b = random_batch(6, 4, rng);
    Mat noise = random_noise(6, rng);
    const double base = actor_loss(b, actor, c1, c2, 0.1, noise).loss;
    // raise both critics by a constant: loss drops by exactly that constant
    c1.out_head.b.array() += 1.0;
    c2.out_head.b.array() += 1.0;
    const double raised = actor_loss(b, actor, c1, c2, 0.1, noise).loss;
    CHECK(raised == Catch::Approx(base - 1.0).margin(1e-9));
}

TEST_CASE("temperature loss gradient is exact and keeps alpha positive") {
    Mat logp(4, 1);
    logp << -1.0, -2.0, -0.5, -3.5;
    const double target = -2.0;
    const double g = temperature_grad(logp, target);
    // finite differences on the scalar loss
    const double h = 1e-6;
    const double fd = (temperature_loss(logp, 0.3 + h, target) -
                       temperature_loss(logp, 0.3 - h, target)) /
                      (2.0 * h);
    CHECK(g == Catch::Approx(fd).margin(1e-8));

    TrainerConfig cfg;
    cfg.hidden = {8};
    cfg.batch_size = 4;
    SacTrainer trainer(3, cfg);
    for (int i = 0; i < 50; ++i) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(i));
        Batch b = random_batch(4, 3, rng);
        trainer.update_on(b);
        REQUIRE(trainer.alpha() > 0.0);
    }
}

TEST_CASE("polyak update blends critic parameters into targets") {
    std::mt19937_64 rng(3);
    CriticParams c = CriticParams::init(2, 2, {4}, rng);
    CriticParams t = CriticParams::init(2, 2, {4}, rng);
    visit_params(c, [](Mat& m, const std::string&) { m.setConstant(1.0); }, "c");
    visit_params(t, [](Mat& m, const std::string&) { m.setConstant(0.0); }, "t");

    CriticParams t0 = t;
    polyak_update(c, t0, 0.0);  // unchanged
    visit_params(t0, [](Mat& m, const std::string&) { REQUIRE(m.isZero()); }, "t");

    CriticParams t1 = t;
    polyak_update(c, t1, 1.0);  // exact copy
    visit_params(t1, [](Mat& m, const std::string&) { REQUIRE((m.array() == 1.0).all()); }, "t");

    CriticParams th = t;
    polyak_update(c, th, 0.5);
    polyak_update(c, th, 0.5);
    visit_params(th, [](Mat& m, const std::string&) {
        REQUIRE(m(0, 0) == Catch::Approx(0.75).margin(1e-15));
    }, "t");
}

TEST_CASE("targets stay inside the critic parameter envelope") {
    TrainerConfig cfg;
    cfg.hidden = {8};
    cfg.batch_size = 8;
    cfg.seed = 5;
    SacTrainer trainer(4, cfg);

    std::vector<Mat> lo, hi;
    visit_params(trainer.critic1(), [&](Mat& m, const std::string&) {
        lo.push_back(m);
        hi.push_back(m);
    }, "c1");

    std::mt19937_64 rng(9);
    for (int step = 0; step < 60; ++step) {
        Batch b = random_batch(8, 4, rng);
        trainer.update_on(b);
        std::size_t k = 0;
        visit_params(trainer.critic1(), [&](Mat& m, const std::string&) {
            lo[k] = lo[k].cwiseMin(m);
            hi[k] = hi[k].cwiseMax(m);
            ++k;
        }, "c1");
        k = 0;
        visit_params(trainer.target1(), [&](Mat& m, const std::string&) {
            REQUIRE((m.array() >= lo[k].array() - 1e-12).all());
            REQUIRE((m.array() <= hi[k].array() + 1e-12).all());
            ++k;
        }, "t1");
    }
}

TEST_CASE("sample_action squashes and log_prob stays finite at the clamp") {
    TrainerConfig cfg;
    cfg.hidden = {8};
    SacTrainer trainer(3, cfg);
    // zero the trunk so heads see h = 0; then mean/logstd come from biases
    visit_params(trainer.actor(), [](Mat& m, const std::string& name) {
        if (name.find("trunk") != std::string::npos || name.find(".W") != std::string::npos)
            m.setZero();
    });
    trainer.actor().mean_head.b.setZero();
    trainer.actor().logstd_head.b.setConstant(-18.0);  // std ~ 1.5e-8

    Eigen::VectorXd s(3);
    s << 0.4, -0.2, 0.9;
    auto [a, lp] = trainer.sample_action(s, false);
    CHECK(std::abs(a[0]) < 1e-6);
    CHECK(std::abs(a[1]) < 1e-6);
    auto [ad, lpd] = trainer.sample_action(s, true);
    CHECK(ad[0] == 0.0);
    CHECK(ad[1] == 0.0);
    (void)lp;
    (void)lpd;

    CHECK(std::isfinite(trainer.log_prob(s, {1.0 - 1e-6, -(1.0 - 1e-6)})));
    CHECK(std::isfinite(trainer.log_prob(s, {1.0, -1.0})));
}

TEST_CASE("empirical squashed mean matches Gauss-Hermite quadrature") {
    TrainerConfig cfg;
    cfg.hidden = {8};
    cfg.seed = 11;
    SacTrainer trainer(2, cfg);
    visit_params(trainer.actor(), [](Mat& m, const std::string& name) {
        if (name.find(".W") != std::string::npos) m.setZero();
    });
    const double mu = 0.3, sigma = 0.1;
    trainer.actor().mean_head.b << mu, -mu;
    trainer.actor().logstd_head.b.setConstant(std::log(sigma));

    // 20-point Gauss-Hermite for E[tanh(mu + sigma Z)]
    auto gh_mean = [&](double mean) {
        static const double x[10] = {0.2453407083, 0.7374737285, 1.2340762154, 1.7385377121,
                                     2.2549740021, 2.7888060584, 3.3478545674, 3.9447640401,
                                     4.6036824496, 5.3874808900};
        static const double w[10] = {4.622436696e-01, 2.866755054e-01, 1.090172060e-01,
                                     2.481052089e-02, 3.243773342e-03, 2.283386360e-04,
                                     7.802556479e-06, 1.086069371e-07, 4.399340992e-10,
                                     2.229393645e-13};
        double acc = 0.0;
        for (int i = 0; i < 10; ++i) {
            acc += w[i] * (std::tanh(mean + sigma * std::sqrt(2.0) * x[i]) +
                           std::tanh(mean - sigma * std::sqrt(2.0) * x[i]));
        }
        return acc / std::sqrt(kPi);
    };

    Eigen::VectorXd s(2);
    s << 0.1, 0.2;
    const int n = 100000;
    double sum0 = 0.0, sum1 = 0.0, sq0 = 0.0;
    for (int i = 0; i < n; ++i) {
        auto [a, lp] = trainer.sample_action(s, false);
        (void)lp;
        sum0 += a[0];
        sum1 += a[1];
        sq0 += a[0] * a[0];
    }
    const double m0 = sum0 / n, m1 = sum1 / n;
    const double sd0 = std::sqrt(std::max(0.0, sq0 / n - m0 * m0));
    const double tol = 4.0 * sd0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(m0 - gh_mean(mu)) < tol);
    CHECK(std::abs(m1 - gh_mean(-mu)) < tol);
}

TEST_CASE("identical seeds give identical loss sequences") {
    auto run = [](std::uint64_t seed) {
        TrainerConfig cfg;
        cfg.hidden = {8, 8};
        cfg.batch_size = 16;
        cfg.seed = seed;
        SacTrainer trainer(4, cfg);
        std::mt19937_64 rng(seed + 1);
        std::vector<double> losses;
        for (int i = 0; i < 200; ++i) {
            Batch b = random_batch(16, 4, rng);
            UpdateStats st = trainer.update_on(b);
            losses.push_back(st.critic_loss1);
            losses.push_back(st.actor_loss);
            losses.push_back(st.alpha);
        }
        return losses;
    };
    CHECK(run(42) == run(42));
    CHECK(run(42) != run(43));
}

TEST_CASE("checkpoints round-trip byte-identically") {
    namespace fs = std::filesystem;
    TrainerConfig cfg;
    cfg.hidden = {8, 8};
    cfg.seed = 2;
    SacTrainer a(5, cfg);
    const auto p1 = fs::temp_directory_path() / "clgr_ckpt1.bin";
    const auto p2 = fs::temp_directory_path() / "clgr_ckpt2.bin";
    save_checkpoint(p1.string(), a);

    SacTrainer b(5, cfg);
    load_checkpoint(p1.string(), b);
    save_checkpoint(p2.string(), b);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    REQUIRE(!b1.empty());
    CHECK(b1 == b2);

    // loaded trainer acts identically (parameters f32-quantized in both)
    load_checkpoint(p1.string(), a);
    Eigen::VectorXd s(5);
    s << 0.1, -0.3, 0.5, 0.0, 0.7;
    auto [aa, la] = a.sample_action(s, true);
    auto [ab, lb] = b.sample_action(s, true);
    CHECK(aa == ab);
    (void)la;
    (void)lb;

    // architecture mismatch is a data error
    TrainerConfig other = cfg;
    other.hidden = {4};
    SacTrainer c(5, other);
    CHECK_THROWS_AS(load_checkpoint(p1.string(), c), DataError);
}
