#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/embedding.hpp"
#include "clgr/scene.hpp"
#include "clgr/store.hpp"

namespace clgr {

/// Source of unit-norm latent vectors keyed by goal text or frame id.
/// Providers are immutable after construction and safe for concurrent reads.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual int dim() const = 0;
    /// Deterministic: the same text always yields the same embedding.
    virtual Embedding goal(const std::string& text) const = 0;
    /// Embedding for one observation frame.
    virtual Embedding frame(std::uint64_t frame_id, const SceneDescriptor& scene) const = 0;
};

inline constexpr char kDefaultPosGoal[] = "the road is clear with no car accidents";
inline constexpr char kDefaultNegGoal[] = "two cars have collided with each other on the road";

/// Deterministic stand-in for the real image/text encoders. The two default
/// goal texts map to fixed orthonormal anchors e_pos (axis 0) and e_neg
/// (axis 1); any other text maps to a hash-seeded random unit vector. Frame
/// embeddings mix the anchors by hazard plus a small orthogonal residue:
///
///   normalize((1 - hazard) * e_pos + hazard * e_neg + epsilon * h)
///
/// with h a unit vector orthogonal to both anchors, hashed from the scene
/// fields and a per-frame salt.
class SyntheticProvider final : public EmbeddingProvider {
public:
    explicit SyntheticProvider(int dim = 32, double epsilon = 0.05) : dim_(dim), epsilon_(epsilon) {
        if (dim_ < 3) throw ConfigError("synthetic provider needs dim >= 3, got " + std::to_string(dim_));
        if (epsilon_ < 0.0) throw ConfigError("synthetic provider epsilon must be >= 0");
    }

    int dim() const override { return dim_; }
    double epsilon() const { return epsilon_; }

    Embedding pos_anchor() const { return axis(0); }
    Embedding neg_anchor() const { return axis(1); }

    Embedding goal(const std::string& text) const override {
        if (text == kDefaultPosGoal) return pos_anchor();
        if (text == kDefaultNegGoal) return neg_anchor();
        // Unknown goal text: stable hash-seeded direction.
        std::uint64_t seed = fnv1a(text.data(), text.size(), 0x9e3779b97f4a7c15ull);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> v(static_cast<std::size_t>(dim_));
        for (double& x : v) x = gauss(rng);
        return Embedding::normalized(std::move(v));
    }

    Embedding frame(std::uint64_t frame_id, const SceneDescriptor& scene) const override {
        return synthetic_embed(scene, frame_id);
    }

    /// Pure function of (descriptor, salt).
    Embedding synthetic_embed(const SceneDescriptor& scene, std::uint64_t seed_salt) const {
        const double c_pos = 1.0 - scene.hazard;
        const double c_neg = scene.hazard;
        std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
        v[0] = c_pos;
        v[1] = c_neg;
        if (epsilon_ > 0.0) {
            std::uint64_t h = 0xcbf29ce484222325ull;
            const std::uint8_t coll = scene.collision ? 1 : 0;
            const std::uint8_t off = scene.off_road ? 1 : 0;
            h = fnv1a(&coll, 1, h);
            h = fnv1a_f64(scene.nearest_vehicle_gap, h);
            h = fnv1a_f64(scene.lateral_offset, h);
            h = fnv1a(&off, 1, h);
            h = fnv1a_f64(scene.hazard, h);
            h = fnv1a_u64(seed_salt, h);

            std::mt19937_64 rng(h);
            std::normal_distribution<double> gauss(0.0, 1.0);
            double n2 = 0.0;
            std::vector<double> resid(static_cast<std::size_t>(dim_ - 2));
            for (double& x : resid) {
                x = gauss(rng);
                n2 += x * x;
            }
            const double n = std::sqrt(n2);
            if (n > 1e-12)
                for (int i = 2; i < dim_; ++i) v[static_cast<std::size_t>(i)] = epsilon_ * resid[static_cast<std::size_t>(i - 2)] / n;
        }
        return Embedding::normalized(std::move(v));
    }

private:
    Embedding axis(int i) const {
        std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
        v[static_cast<std::size_t>(i)] = 1.0;
        return Embedding::unit(std::move(v));
    }

    int dim_;
    double epsilon_;
};

/// File-backed provider over precomputed embeddings ("frame:<id>" and
/// "goal:<text>" keys).
class StoreProvider final : public EmbeddingProvider {
public:
    explicit StoreProvider(const std::string& path) : contents_(store_read(path)), path_(path) {}

    int dim() const override { return contents_.dim; }

    Embedding goal(const std::string& text) const override { return lookup("goal:" + text, true); }

    Embedding frame(std::uint64_t frame_id, const SceneDescriptor&) const override {
        return lookup("frame:" + std::to_string(frame_id), false);
    }

    bool has(const std::string& key) const { return contents_.entries.count(key) > 0; }

    Embedding lookup(const std::string& key, bool list_goals_on_miss) const {
        auto it = contents_.entries.find(key);
        if (it != contents_.entries.end()) return it->second;
        std::string msg = path_ + ": no entry for key \"" + key + "\"";
        if (list_goals_on_miss) {
            msg += "; available goal keys:";
            bool any = false;
            for (const auto& [k, _] : contents_.entries) {
                if (k.rfind("goal:", 0) == 0) {
                    msg += " \"" + k + "\"";
                    any = true;
                }
            }
            if (!any) msg += " (none)";
        }
        throw DataError(msg);
    }

private:
    StoreContents contents_;
    std::string path_;
};

/// "synthetic" or "store:<path>".
inline std::shared_ptr<EmbeddingProvider> make_provider(const std::string& selector) {
    if (selector == "synthetic") return std::make_shared<SyntheticProvider>();
    if (selector.rfind("store:", 0) == 0) return std::make_shared<StoreProvider>(selector.substr(6));
    throw ConfigError("unknown provider \"" + selector + "\" (expected synthetic or store:<path>)");
}

}  // namespace clgr
