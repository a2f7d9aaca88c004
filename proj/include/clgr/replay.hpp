#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "clgr/common.hpp"
#include "clgr/labeling.hpp"
#include "clgr/scene.hpp"
#include "clgr/synthesis.hpp"

namespace clgr {

/// One replay record. `reward` is only meaningful once `labeled` is set; the
/// trainer never consumes unlabeled transitions.
struct Transition {
    std::uint64_t obs_key = 0;  // frame id for embedding lookup
    std::vector<double> state_features;
    std::array<double, 2> action{};
    double reward = 0.0;
    std::uint64_t next_obs_key = 0;
    std::vector<double> next_state_features;
    bool done = false;
    bool labeled = false;
    SceneDescriptor scene;
    VehicleStateSnapshot vehicle;
    double task_reward = 0.0;
};

struct BufferConfig {
    std::size_t capacity = 100000;
    int label_interval = 256;  // env steps between labeling passes
    int label_batch = 1024;    // transitions per pass

    void validate() const {
        if (capacity == 0) throw ConfigError("buffer capacity must be positive");
        if (label_interval <= 0) throw ConfigError("label_interval must be positive");
        if (label_batch <= 0) throw ConfigError("label_batch must be positive");
        if (static_cast<std::size_t>(label_batch) > capacity)
            throw ConfigError("label_batch must not exceed capacity");
    }
};

struct RelabelReport {
    int labeled = 0;
    int skipped = 0;                         // missing embeddings, kept unlabeled
    std::vector<std::uint64_t> skipped_keys;
};

/// Ring replay buffer with deferred, batched reward labeling. One producer,
/// one labeling worker and one consumer may run concurrently; every public
/// operation holds the buffer lock, so a sample never observes a transition
/// whose reward is written but not yet flagged.
class ReplayBuffer {
public:
    explicit ReplayBuffer(BufferConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        slots_.reserve(cfg_.capacity);
    }

    const BufferConfig& config() const { return cfg_; }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return slots_.size();
    }

    std::size_t labeled_count() const {
        std::lock_guard lock(mu_);
        return labeled_count_;
    }

    /// Count of unlabeled transitions lost to ring eviction.
    std::uint64_t unlabeled_evictions() const {
        std::lock_guard lock(mu_);
        return unlabeled_evictions_;
    }

    /// Stores a transition with reward forced to 0 and labeled = false.
    void push(Transition t) {
        std::lock_guard lock(mu_);
        t.reward = 0.0;
        t.labeled = false;
        const std::uint64_t seq = next_seq_++;
        unlabeled_queue_.push_back(seq);
        if (slots_.size() < cfg_.capacity) {
            slots_.push_back(std::move(t));
        } else {
            const std::size_t slot = static_cast<std::size_t>(seq % cfg_.capacity);
            if (!slots_[slot].labeled)
                ++unlabeled_evictions_;
            else
                --labeled_count_;
            slots_[slot] = std::move(t);
        }
    }

    using LabelSink = std::function<void(const Transition&, const RewardBreakdown&)>;

    /// Labels up to label_batch of the oldest unlabeled transitions through
    /// `stack`. Transitions whose embedding is missing are reported and kept
    /// unlabeled (they stay first in line). Each transition is labeled at
    /// most once, and the value equals the immediate per-step computation.
    RelabelReport relabel_batch(const RewardStack& stack, const LabelSink& on_label = {}) {
        std::lock_guard lock(mu_);
        RelabelReport report;
        std::vector<std::uint64_t> skipped;
        int examined = 0;
        while (!unlabeled_queue_.empty() && examined < cfg_.label_batch) {
            const std::uint64_t seq = unlabeled_queue_.front();
            unlabeled_queue_.pop_front();
            if (!live(seq)) continue;  // evicted since it was queued
            Transition& t = slots_[static_cast<std::size_t>(seq % cfg_.capacity)];
            if (t.labeled) continue;
            ++examined;
            try {
                const RewardBreakdown r =
                    compute_reward(stack, t.scene, t.vehicle, t.obs_key, t.task_reward);
                t.reward = r.reward;
                t.labeled = true;
                ++labeled_count_;
                ++report.labeled;
                if (on_label) on_label(t, r);
            } catch (const DataError&) {
                ++report.skipped;
                report.skipped_keys.push_back(t.obs_key);
                skipped.push_back(seq);
            }
        }
        // skipped transitions keep their place at the head of the queue
        for (auto it = skipped.rbegin(); it != skipped.rend(); ++it)
            unlabeled_queue_.push_front(*it);
        return report;
    }

    /// Uniform sample over labeled transitions only.
    std::vector<Transition> sample(std::size_t batch_size, std::mt19937_64& rng) const {
        std::lock_guard lock(mu_);
        if (labeled_count_ == 0) throw ConfigError("sample: no labeled transitions in buffer");
        if (batch_size > labeled_count_)
            throw ConfigError("sample: batch size " + std::to_string(batch_size) +
                              " exceeds labeled count " + std::to_string(labeled_count_));
        std::uniform_int_distribution<std::size_t> pick(0, slots_.size() - 1);
        std::vector<Transition> out;
        out.reserve(batch_size);
        while (out.size() < batch_size) {
            const Transition& t = slots_[pick(rng)];
            if (t.labeled) out.push_back(t);
        }
        return out;
    }

    /// Snapshot in insertion order (oldest first), for export and tests.
    std::vector<Transition> snapshot() const {
        std::lock_guard lock(mu_);
        std::vector<Transition> out;
        out.reserve(slots_.size());
        const std::uint64_t begin = next_seq_ >= slots_.size() ? next_seq_ - slots_.size() : 0;
        for (std::uint64_t seq = begin; seq < next_seq_; ++seq)
            out.push_back(slots_[static_cast<std::size_t>(seq % cfg_.capacity)]);
        return out;
    }

private:
    bool live(std::uint64_t seq) const {
        return next_seq_ <= cfg_.capacity || seq >= next_seq_ - cfg_.capacity;
    }

    BufferConfig cfg_;
    mutable std::mutex mu_;
    std::vector<Transition> slots_;
    std::deque<std::uint64_t> unlabeled_queue_;
    std::uint64_t next_seq_ = 0;
    std::size_t labeled_count_ = 0;
    std::uint64_t unlabeled_evictions_ = 0;
};

}  // namespace clgr
