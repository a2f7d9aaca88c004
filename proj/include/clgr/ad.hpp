#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "clgr/common.hpp"

namespace clgr::ad {

using Mat = Eigen::MatrixXd;

/// Micro reverse-mode tape over dense matrices. Build a graph per loss
/// evaluation, call backward() on a scalar node, read gradients off the
/// inputs. Nodes that no gradient can reach carry no backprop closure.
class Tape {
public:
    int input(Mat value, bool needs_grad = false) {
        return push(std::move(value), needs_grad, {});
    }

    const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    const Mat& grad(int id) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs_grad) throw ConfigError("grad requested for a constant tape node");
        return n.grad;
    }

    int matmul(int a, int b) {
        const int id = push(value(a) * value(b), needs(a) || needs(b),
                            [this, a, b](int self) {
                                const Mat& g = nodes_[static_cast<std::size_t>(self)].grad;
                                if (needs(a)) accum(a, g * value(b).transpose());
                                if (needs(b)) accum(b, value(a).transpose() * g);
                            });
        return id;
    }

    int add(int a, int b) {
        return push(value(a) + value(b), needs(a) || needs(b), [this, a, b](int self) {
            const Mat& g = nodes_[static_cast<std::size_t>(self)].grad;
            if (needs(a)) accum(a, g);
            if (needs(b)) accum(b, g);
        });
    }

    int sub(int a, int b) {
        return push(value(a) - value(b), needs(a) || needs(b), [this, a, b](int self) {
            const Mat& g = nodes_[static_cast<std::size_t>(self)].grad;
            if (needs(a)) accum(a, g);
            if (needs(b)) accum(b, -g);
        });
    }

    /// Broadcast add of a 1 x m row vector onto every row of an n x m matrix.
    int add_rowvec(int a, int b) {
        Mat v = value(a);
        v.rowwise() += value(b).row(0);
        return push(std::move(v), needs(a) || needs(b), [this, a, b](int self) {
            const Mat& g = nodes_[static_cast<std::size_t>(self)].grad;
            if (needs(a)) accum(a, g);
            if (needs(b)) accum(b, g.colwise().sum());
        });
    }

    int hadamard(int a, int b) {
        return push(value(a).cwiseProduct(value(b)), needs(a) || needs(b),
                    [this, a, b](int self) {
                        const Mat& g = nodes_[static_cast<std::size_t>(self)].grad;
                        if (needs(a)) accum(a, g.cwiseProduct(value(b)));
                        if (needs(b)) accum(b, g.cwiseProduct(value(a)));
                    });
    }

    int scale(int a, double c) {
        return push(value(a) * c, needs(a), [this, a, c](int self) {
            accum(a, nodes_[static_cast<std::size_t>(self)].grad * c);
        });
    }

    int add_scalar(int a, double c) {
        return push(value(a).array() + c, needs(a), [this, a](int self) {
            accum(a, nodes_[static_cast<std::size_t>(self)].grad);
        });
    }

    int tanh(int a) {
        Mat t = value(a).array().tanh();
        const int id = push(std::move(t), needs(a), [this, a](int self) {
            const Mat& t = nodes_[static_cast<std::size_t>(self)].value;
            accum(a, nodes_[static_cast<std::size_t>(self)].grad.cwiseProduct(
                         (1.0 - t.array().square()).matrix()));
        });
        return id;
    }

    int exp(int a) {
        Mat e = value(a).array().exp();
        return push(std::move(e), needs(a), [this, a](int self) {
            accum(a, nodes_[static_cast<std::size_t>(self)].grad.cwiseProduct(
                         nodes_[static_cast<std::size_t>(self)].value));
        });
    }

    /// log(1 + e^x), evaluated stably.
    int softplus(int a) {
        Mat s = value(a).unaryExpr([](double x) {
            return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
        });
        return push(std::move(s), needs(a), [this, a](int self) {
            Mat sig = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
            accum(a, nodes_[static_cast<std::size_t>(self)].grad.cwiseProduct(sig));
        });
    }

    /// Hard clamp; gradient passes through inside [lo, hi] (inclusive).
    int clamp(int a, double lo, double hi) {
        Mat c = value(a).array().max(lo).min(hi);
        return push(std::move(c), needs(a), [this, a, lo, hi](int self) {
            const Mat& x = value(a);
            Mat mask = x.unaryExpr([lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
            accum(a, nodes_[static_cast<std::size_t>(self)].grad.cwiseProduct(mask));
        });
    }

    /// Elementwise minimum; ties route the gradient to `a`.
    int min_elem(int a, int b) {
        return push(value(a).cwiseMin(value(b)), needs(a) || needs(b), [this, a, b](int self) {
            const Mat& g = nodes_[static_cast<std::size_t>(self)].grad;
            Mat take_a = (value(a).array() <= value(b).array()).cast<double>();
            if (needs(a)) accum(a, g.cwiseProduct(take_a));
            if (needs(b)) accum(b, g.cwiseProduct((1.0 - take_a.array()).matrix()));
        });
    }

    int square(int a) {
        return push(value(a).array().square(), needs(a), [this, a](int self) {
            accum(a, 2.0 * nodes_[static_cast<std::size_t>(self)].grad.cwiseProduct(value(a)));
        });
    }

    /// Row sums: n x m -> n x 1.
    int sum_rows(int a) {
        return push(value(a).rowwise().sum(), needs(a), [this, a](int self) {
            const Mat& g = nodes_[static_cast<std::size_t>(self)].grad;  // n x 1
            accum(a, g.replicate(1, value(a).cols()));
        });
    }

    /// Mean of all entries -> 1 x 1.
    int mean_all(int a) {
        Mat m(1, 1);
        m(0, 0) = value(a).mean();
        return push(std::move(m), needs(a), [this, a](int self) {
            const double g = nodes_[static_cast<std::size_t>(self)].grad(0, 0);
            accum(a, Mat::Constant(value(a).rows(), value(a).cols(),
                                   g / static_cast<double>(value(a).size())));
        });
    }

    int concat_cols(int a, int b) {
        Mat c(value(a).rows(), value(a).cols() + value(b).cols());
        c << value(a), value(b);
        return push(std::move(c), needs(a) || needs(b), [this, a, b](int self) {
            const Mat& g = nodes_[static_cast<std::size_t>(self)].grad;
            if (needs(a)) accum(a, g.leftCols(value(a).cols()));
            if (needs(b)) accum(b, g.rightCols(value(b).cols()));
        });
    }

    /// Seeds the scalar output with gradient 1 and sweeps the tape backward.
    void backward(int out) {
        Node& o = nodes_[static_cast<std::size_t>(out)];
        if (o.value.size() != 1) throw ConfigError("backward requires a 1x1 output node");
        if (!o.needs_grad) throw ConfigError("backward on a graph with no gradient inputs");
        for (Node& n : nodes_)
            if (n.needs_grad) n.grad.setZero(n.value.rows(), n.value.cols());
        o.grad(0, 0) = 1.0;
        for (int i = out; i >= 0; --i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.backprop && n.grad.size() != 0 && !n.grad.isZero(0.0)) n.backprop(i);
        }
    }

private:
    struct Node {
        Mat value;
        Mat grad;
        bool needs_grad = false;
        std::function<void(int)> backprop;
    };

    bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

    void accum(int id, const Mat& delta) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
        n.grad += delta;
    }

    int push(Mat value, bool needs_grad, std::function<void(int)> backprop) {
        Node n;
        n.value = std::move(value);
        n.needs_grad = needs_grad;
        if (needs_grad) {
            n.grad.setZero(n.value.rows(), n.value.cols());
            n.backprop = std::move(backprop);
        }
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    std::vector<Node> nodes_;
};

}  // namespace clgr::ad
