#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "clgr/common.hpp"

namespace clgr {

/// Unit-norm vector in the shared latent space. All embeddings taking part in
/// one run share the same dimension k.
class Embedding {
public:
    Embedding() = default;

    /// Wraps `values`, requiring them to already be unit norm within 1e-6.
    static Embedding unit(std::vector<double> values) {
        Embedding e(std::move(values));
        const double n = e.norm();
        if (std::abs(n - 1.0) > 1e-6)
            throw ConfigError("embedding is not unit norm: |v| = " + std::to_string(n));
        return e;
    }

    /// Scales `values` to unit norm. Zero vectors are rejected.
    static Embedding normalized(std::vector<double> values) {
        Embedding e(std::move(values));
        const double n = e.norm();
        if (n < 1e-12)
            throw ConfigError("cannot normalize a zero embedding");
        for (double& v : e.values_) v /= n;
        return e;
    }

    int dim() const { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const { return values_; }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }

    double norm() const {
        double s = 0.0;
        for (double v : values_) s += v * v;
        return std::sqrt(s);
    }

    bool operator==(const Embedding& other) const { return values_ == other.values_; }

private:
    explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}
    std::vector<double> values_;
};

/// Cosine similarity a.b / (|a||b|), clamped into [-1, 1] against roundoff.
inline double cosine_sim(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        throw ConfigError("cosine_sim dimension mismatch: " + std::to_string(a.dim()) +
                          " vs " + std::to_string(b.dim()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace clgr
