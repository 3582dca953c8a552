#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "otd2048/board.hpp"
#include "otd2048/tuple.hpp"

namespace otd {

/// Snapshot of one feature weight and its coherence accumulators.
struct WeightCell {
    float theta = 0;
    float error = 0;     // E: signed accumulated error
    float abs_error = 0; // A: accumulated absolute error
};

/**
 * Symmetrically sampled m x n-tuple network, one set of lookup tables per stage.
 *
 * Every tuple is read at all 8 board symmetries against a shared table, so a
 * board touches 8m weights per stage. evaluate() sums them; update() spreads
 * alpha * delta evenly over the 8m weights, which moves evaluate() by exactly
 * alpha * delta when the touched weights are distinct.
 *
 * Weights are plain floats accessed through relaxed atomic_ref: concurrent
 * trainers may lose each other's updates but never observe torn values.
 */
class Network {
public:
    explicit Network(NetworkConfig config) : config_(std::move(config)) {
        if (config_.triggers.empty() && config_.stages > 1) config_.triggers = default_triggers(config_.stages);
        config_.validate();
        weights_per_stage_ = config_.weights_per_stage();
        theta_.assign(weights_per_stage_ * config_.stages, 0.0f);
        active_stages_ = config_.stages;

        std::vector<std::size_t> offsets;
        std::size_t off = 0;
        for (std::size_t i = 0; i < config_.tuples.size(); ++i) {
            offsets.push_back(off);
            off += config_.table_size(i);
        }
        table_offsets_ = offsets;

        // position p of transform(b, g) holds b.at(source[p])
        Board identity;
        for (int p = 0; p < kCells; ++p) identity.set(p, p);
        for (std::size_t i = 0; i < config_.tuples.size(); ++i) {
            for (int g = 0; g < 8; ++g) {
                const Board source = transform(identity, g);
                Placement pl{};
                pl.size = static_cast<std::uint8_t>(config_.tuples[i].cells.size());
                pl.offset = offsets[i];
                for (std::size_t k = 0; k < pl.size; ++k)
                    pl.cells[k] = static_cast<std::uint8_t>(source.at(config_.tuples[i].cells[k]));
                placements_.push_back(pl);
            }
        }
        samples_ = static_cast<float>(placements_.size());
    }

    const NetworkConfig& config() const noexcept { return config_; }
    unsigned stages() const noexcept { return config_.stages; }
    unsigned cardinality() const noexcept { return config_.cardinality; }
    std::size_t tuple_count() const noexcept { return config_.tuples.size(); }
    /// 8m: weights read per board and stage.
    std::size_t samples_per_board() const noexcept { return placements_.size(); }
    std::size_t weights_per_stage() const noexcept { return weights_per_stage_; }

    /// Stages [0, n) take part in routing; training stage k sets this to k + 1.
    void set_active_stages(unsigned n) noexcept { active_stages_ = std::clamp(n, 1u, config_.stages); }
    unsigned active_stages() const noexcept { return active_stages_; }

    /// Highest active stage (0-based) whose trigger the board satisfies.
    std::size_t route(Board b) const {
        for (std::size_t s = active_stages_; s-- > 1;)
            if (satisfies(b, config_.triggers[s - 1])) return s;
        return 0;
    }

    float evaluate(std::size_t stage, Board b) const noexcept {
        const float* w = theta_.data() + stage * weights_per_stage_;
        float sum = 0;
        for (const auto& pl : placements_) sum += load(w[pl.offset + index(pl, b)]);
        return sum;
    }

    /// Stage-routed evaluation.
    float value(Board b) const { return evaluate(route(b), b); }

    void update(std::size_t stage, Board b, float delta, float alpha) noexcept {
        float* w = theta_.data() + stage * weights_per_stage_;
        const float step = alpha * delta / samples_;
        for (const auto& pl : placements_) {
            float& x = w[pl.offset + index(pl, b)];
            store(x, load(x) + step);
        }
    }

    /// Temporal-coherence update; enable_tc() must have been called.
    void tc_update(std::size_t stage, Board b, float delta, float alpha) noexcept {
        const std::size_t base = stage * weights_per_stage_;
        const float err = delta / samples_;
        const float abs_err = std::fabs(err);
        for (const auto& pl : placements_) {
            const std::size_t i = base + pl.offset + index(pl, b);
            const float e = load(error_[i]);
            const float a = load(abs_error_[i]);
            const float beta = a != 0.0f ? std::fabs(e) / a : 1.0f;
            store(theta_[i], load(theta_[i]) + alpha * beta * err);
            store(error_[i], e + err);
            store(abs_error_[i], a + abs_err);
        }
    }

    /// Sets every weight of every stage to v_init / (8m) and clears TC accumulators.
    void init_optimistic(float v_init) {
        for (unsigned s = 0; s < config_.stages; ++s) init_optimistic(s, v_init);
    }

    void init_optimistic(std::size_t stage, float v_init) {
        const auto first = theta_.begin() + static_cast<std::ptrdiff_t>(stage * weights_per_stage_);
        std::fill(first, first + static_cast<std::ptrdiff_t>(weights_per_stage_), v_init / samples_);
        if (has_tc()) {
            std::fill_n(error_.begin() + static_cast<std::ptrdiff_t>(stage * weights_per_stage_), weights_per_stage_, 0.0f);
            std::fill_n(abs_error_.begin() + static_cast<std::ptrdiff_t>(stage * weights_per_stage_), weights_per_stage_,
                        0.0f);
        }
    }

    bool has_tc() const noexcept { return !error_.empty(); }

    void enable_tc() {
        if (has_tc()) return;
        error_.assign(theta_.size(), 0.0f);
        abs_error_.assign(theta_.size(), 0.0f);
    }

    void disable_tc() {
        error_ = {};
        abs_error_ = {};
    }

    std::span<float> weights(std::size_t stage, std::size_t tuple) { return slice(theta_, stage, tuple); }
    std::span<const float> weights(std::size_t stage, std::size_t tuple) const { return slice(theta_, stage, tuple); }
    std::span<float> tc_errors(std::size_t stage, std::size_t tuple) { return slice(error_, stage, tuple); }
    std::span<const float> tc_errors(std::size_t stage, std::size_t tuple) const { return slice(error_, stage, tuple); }
    std::span<float> tc_abs_errors(std::size_t stage, std::size_t tuple) { return slice(abs_error_, stage, tuple); }
    std::span<const float> tc_abs_errors(std::size_t stage, std::size_t tuple) const {
        return slice(abs_error_, stage, tuple);
    }

    std::span<const float> all_weights() const noexcept { return theta_; }

    WeightCell cell(std::size_t stage, std::size_t tuple, std::size_t index) const {
        const std::size_t i = stage * weights_per_stage_ + table_offsets_[tuple] + index;
        WeightCell c{theta_[i], 0, 0};
        if (has_tc()) {
            c.error = error_[i];
            c.abs_error = abs_error_[i];
        }
        return c;
    }

    /// The 8m (tuple, feature index) pairs read for a board, in sampling order.
    std::vector<std::pair<std::size_t, std::size_t>> features(Board b) const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        out.reserve(placements_.size());
        for (std::size_t j = 0; j < placements_.size(); ++j) out.emplace_back(j / 8, index(placements_[j], b));
        return out;
    }

private:
    struct Placement {
        std::array<std::uint8_t, kMaxTupleSize> cells;
        std::uint8_t size;
        std::size_t offset;
    };

    std::size_t index(const Placement& pl, Board b) const noexcept {
        const std::size_t c = config_.cardinality;
        std::size_t idx = 0;
        for (std::size_t k = pl.size; k-- > 0;) idx = idx * c + static_cast<std::size_t>(b.at(pl.cells[k]));
        return idx;
    }

    static float load(const float& x) noexcept {
        return std::atomic_ref<float>(const_cast<float&>(x)).load(std::memory_order_relaxed);
    }
    static void store(float& x, float v) noexcept { std::atomic_ref<float>(x).store(v, std::memory_order_relaxed); }

    template <class Vec>
    using SpanOf = std::conditional_t<std::is_const_v<Vec>, std::span<const float>, std::span<float>>;

    template <class Vec>
    SpanOf<Vec> slice(Vec& v, std::size_t stage, std::size_t tuple) const {
        if (v.empty()) return {};
        return {v.data() + stage * weights_per_stage_ + table_offsets_[tuple], config_.table_size(tuple)};
    }

    NetworkConfig config_;
    std::size_t weights_per_stage_ = 0;
    unsigned active_stages_ = 1;
    float samples_ = 1.0f;
    std::vector<std::size_t> table_offsets_;
    std::vector<Placement> placements_;
    std::vector<float> theta_;
    std::vector<float> error_;
    std::vector<float> abs_error_;
};

} // namespace otd
