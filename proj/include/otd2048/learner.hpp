#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "otd2048/engine.hpp"
#include "otd2048/errors.hpp"
#include "otd2048/evaluation.hpp"
#include "otd2048/network.hpp"
#include "otd2048/policy.hpp"
#include "otd2048/rng.hpp"

namespace otd {

enum class UpdateMode { td, tc };
enum class UpdateOrder { backward, forward };

struct TrainConfig {
    double v_init = 320000;
    /// Fraction of the budget, at the end, trained with TC updates.
    double p_tc = 0.10;
    /// TD-phase rate; steps down x0.1 at 50% and again at 75% of the budget when alpha_decay is set.
    double alpha_td = 0.1;
    bool alpha_decay = true;
    double alpha_tc = 1.0;
    std::uint64_t episodes = 0;
    /// Episodes between evaluations/checkpoints; 0 means once, at the end.
    std::uint64_t eval_interval = 0;
    /// Greedy test games per evaluation; 0 disables evaluation (checkpoints still happen).
    std::uint64_t eval_episodes = 1000;
    unsigned threads = 1;
    std::uint64_t seed = 0;
    UpdateOrder order = UpdateOrder::backward;
    std::size_t pool_capacity = 65536;

    void validate() const {
        if (!(p_tc >= 0.0 && p_tc <= 1.0)) throw config_error("p_tc must be in [0, 1]");
        if (!(v_init >= 0.0)) throw config_error("v_init must be >= 0");
        if (!(alpha_td > 0.0 && alpha_td <= 1.0)) throw config_error("alpha_td must be in (0, 1]");
        if (!(alpha_tc > 0.0 && alpha_tc <= 1.0)) throw config_error("alpha_tc must be in (0, 1]");
        if (threads < 1) throw config_error("threads must be >= 1");
        if (pool_capacity < 1) throw config_error("pool_capacity must be >= 1");
    }
};

/// Number of leading episodes trained with TD: ceil((1 - p_tc) * episodes).
inline std::uint64_t td_episodes(const TrainConfig& cfg) {
    const double x = (1.0 - cfg.p_tc) * static_cast<double>(cfg.episodes);
    // guard against 0.9 * 1000 landing a hair above 900
    const auto n = static_cast<std::uint64_t>(std::ceil(x - 1e-9));
    return std::min(n, cfg.episodes);
}

struct Schedule {
    UpdateMode mode;
    float alpha;
};

/// Update rule and rate for the 0-based episode index.
inline Schedule schedule_at(const TrainConfig& cfg, std::uint64_t episode) {
    if (episode >= td_episodes(cfg)) return {UpdateMode::tc, static_cast<float>(cfg.alpha_tc)};
    double alpha = cfg.alpha_td;
    if (cfg.alpha_decay) {
        const double at = static_cast<double>(episode);
        const double total = static_cast<double>(cfg.episodes);
        if (at >= 0.75 * total)
            alpha *= 0.01;
        else if (at >= 0.5 * total)
            alpha *= 0.1;
    }
    return {UpdateMode::td, static_cast<float>(alpha)};
}

/// Bounded uniform reservoir (Algorithm R) of start states for one stage.
class StagePool {
public:
    explicit StagePool(StageTrigger trigger, std::size_t capacity = 65536, std::uint64_t seed = 0)
        : trigger_(std::move(trigger)), capacity_(capacity), rng_(seed) {}

    const StageTrigger& trigger() const noexcept { return trigger_; }

    /// Boards that do not satisfy the trigger are rejected.
    bool offer(Board b) {
        if (!satisfies(b, trigger_)) return false;
        ++seen_;
        if (states_.size() < capacity_) {
            states_.push_back(b);
        } else {
            const auto k = rng_.below64(seen_);
            if (k < capacity_) states_[k] = b;
        }
        return true;
    }

    Board sample(Rng& rng) const {
        if (states_.empty()) throw std::logic_error("sampling an empty stage pool");
        return states_[rng.below64(states_.size())];
    }

    bool empty() const noexcept { return states_.empty(); }
    std::size_t size() const noexcept { return states_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    std::uint64_t seen() const noexcept { return seen_; }
    const std::vector<Board>& states() const noexcept { return states_; }

private:
    StageTrigger trigger_;
    std::size_t capacity_;
    std::uint64_t seen_ = 0;
    std::vector<Board> states_;
    Rng rng_;
};

/// Start-state pools keyed by 0-based stage (stage 0 has none).
using StagePools = std::map<std::size_t, StagePool>;

inline StagePools make_stage_pools(const NetworkConfig& cfg, std::size_t capacity = 65536, std::uint64_t seed = 0) {
    StagePools pools;
    for (std::size_t s = 1; s < cfg.stages; ++s)
        pools.emplace(s, StagePool(cfg.triggers.at(s - 1), capacity, splitmix64(seed ^ (0x57a9e0000ull + s))));
    return pools;
}

struct EpisodeRecord {
    std::vector<Transition> transitions;
    std::uint64_t final_score = 0;
    int max_tile = 0; // exponent
};

/// Harvest hook: called with each state of an episode, in order.
using StateSink = std::function<void(Board)>;

namespace detail {

inline std::size_t training_stage(const Network& net, std::size_t stage, Board b) {
    return std::min(net.route(b), stage);
}

inline void apply_update(Network& net, std::size_t stage, Board b, float delta, UpdateMode mode, float alpha) {
    if (mode == UpdateMode::td)
        net.update(stage, b, delta, alpha);
    else
        net.tc_update(stage, b, delta, alpha);
}

} // namespace detail

/**
 * Backward TD(0) sweep over a finished episode: for t = T-1 .. 0 the
 * afterstate s'_t moves toward r_{t+1} + V(s'_{t+1}), using the value of
 * s'_{t+1} as already updated; the last afterstate's target is 0.
 * Afterstates routed below `stage` belong to frozen stages and are only read.
 */
inline void apply_backward(Network& net, std::size_t stage, std::span<const Transition> path, UpdateMode mode,
                           float alpha) {
    float target = 0;
    for (std::size_t t = path.size(); t-- > 0;) {
        const Board a = path[t].afterstate;
        const std::size_t st = detail::training_stage(net, stage, a);
        float v = net.evaluate(st, a);
        if (st == stage) {
            detail::apply_update(net, st, a, target - v, mode, alpha);
            v = net.evaluate(st, a);
        }
        target = static_cast<float>(path[t].reward) + v;
    }
}

/**
 * Plays one greedy episode from `start` with the stage's value function, then
 * learns from it (backward sweep), or learns online step by step (forward).
 */
inline void play_training_episode(Network& net, std::size_t stage, Board start, Rng& rng, UpdateMode mode, float alpha,
                                  EpisodeRecord& rec, UpdateOrder order = UpdateOrder::backward,
                                  const StateSink& sink = {}) {
    const MoveTable& moves = MoveTable::get(net.cardinality());
    rec.transitions.clear();
    rec.final_score = 0;
    rec.max_tile = start.max_exponent();
    auto value = [&](Board b) { return net.evaluate(detail::training_stage(net, stage, b), b); };

    Board s = start;
    while (true) {
        if (sink) sink(s);
        const auto d = greedy(s, value, moves);
        if (!d) break;
        if (order == UpdateOrder::forward && !rec.transitions.empty()) {
            const Board prev = rec.transitions.back().afterstate;
            const std::size_t st = detail::training_stage(net, stage, prev);
            if (st == stage)
                detail::apply_update(net, st, prev, static_cast<float>(d->score) - net.evaluate(st, prev), mode, alpha);
        }
        const Board next = spawn(d->afterstate, rng);
        rec.transitions.push_back(Transition{s, d->action, d->afterstate, d->reward, next});
        rec.final_score += d->reward;
        rec.max_tile = std::max(rec.max_tile, next.max_exponent());
        s = next;
    }

    if (order == UpdateOrder::backward) {
        apply_backward(net, stage, rec.transitions, mode, alpha);
    } else if (!rec.transitions.empty()) {
        const Board last = rec.transitions.back().afterstate;
        const std::size_t st = detail::training_stage(net, stage, last);
        if (st == stage) detail::apply_update(net, st, last, -net.evaluate(st, last), mode, alpha);
    }
}

inline EpisodeRecord play_training_episode(Network& net, std::size_t stage, Board start, Rng& rng, UpdateMode mode,
                                           float alpha, UpdateOrder order = UpdateOrder::backward) {
    EpisodeRecord rec;
    play_training_episode(net, stage, start, rng, mode, alpha, rec, order);
    return rec;
}

struct MetricsRow {
    std::size_t stage = 0;           // 0-based
    std::uint64_t episode = 0;       // episodes trained so far in this stage
    EvalReport report;
    double wall_seconds = 0;         // since this stage started
};

struct TrainHooks {
    std::function<void(const MetricsRow&)> on_eval;
    /// Called at every evaluation point with all workers paused.
    std::function<void(std::size_t stage, std::uint64_t episode, const Network&)> on_checkpoint;
    /// Called by the worker before each episode (0-based index); must be thread-safe when threads > 1.
    std::function<void(std::uint64_t episode, const Schedule&)> on_episode;
};

/**
 * Trains one stage's tables in place: optimistic initialization to v_init,
 * then the TD phase followed by the TC phase. Stage 0 starts from fresh games;
 * stage k > 0 draws starts uniformly from pools[k]. Every episode offers its
 * first state satisfying each later stage's trigger to that stage's pool.
 *
 * With threads > 1 workers share the network without locks (racy, lossy
 * updates); with one thread the result is a pure function of the seed.
 */
inline void train_stage(Network& net, std::size_t stage, const TrainConfig& cfg, const TrainHooks& hooks = {},
                        StagePools* pools = nullptr) {
    cfg.validate();
    if (stage >= net.stages()) throw config_error("stage " + std::to_string(stage + 1) + " exceeds network stages");
    const StagePool* starts = nullptr;
    if (stage > 0) {
        if (!pools || !pools->contains(stage) || pools->at(stage).empty())
            throw std::runtime_error("stage " + std::to_string(stage + 1) + " has an empty start-state pool");
        starts = &pools->at(stage);
    }

    net.set_active_stages(static_cast<unsigned>(stage + 1));
    net.init_optimistic(stage, static_cast<float>(cfg.v_init));
    if (cfg.p_tc > 0.0 && cfg.episodes > 0) net.enable_tc();

    const std::uint64_t stage_seed = splitmix64(cfg.seed + 0x9e37ull * (stage + 1));
    std::vector<Rng> rngs;
    for (unsigned w = 0; w < cfg.threads; ++w) rngs.push_back(Rng::stream(stage_seed, w));

    std::vector<std::size_t> later;
    if (pools)
        for (auto& [s, pool] : *pools)
            if (s > stage) later.push_back(s);
    std::mutex pool_mu;

    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t interval = cfg.eval_interval ? cfg.eval_interval : cfg.episodes;
    std::uint64_t done = 0;
    std::uint64_t eval_round = 0;
    while (done < cfg.episodes) {
        const std::uint64_t end = std::min(cfg.episodes, done + interval);
        std::atomic<std::uint64_t> next{done};
        auto worker = [&](unsigned w) {
            EpisodeRecord rec;
            Rng& rng = rngs[w];
            std::vector<bool> harvested(later.size());
            StateSink sink;
            if (!later.empty()) {
                sink = [&](Board s) {
                    for (std::size_t j = 0; j < later.size(); ++j) {
                        if (harvested[j]) continue;
                        StagePool& pool = pools->at(later[j]);
                        if (!satisfies(s, pool.trigger())) continue;
                        harvested[j] = true;
                        std::lock_guard lock(pool_mu);
                        pool.offer(s);
                    }
                };
            }
            for (std::uint64_t ep; (ep = next.fetch_add(1)) < end;) {
                const Schedule sched = schedule_at(cfg, ep);
                if (hooks.on_episode) hooks.on_episode(ep, sched);
                const Board start = starts ? starts->sample(rng) : initial_state(rng);
                std::fill(harvested.begin(), harvested.end(), false);
                play_training_episode(net, stage, start, rng, sched.mode, sched.alpha, rec, cfg.order, sink);
            }
        };
        if (cfg.threads == 1) {
            worker(0);
        } else {
            std::vector<std::jthread> workers;
            for (unsigned w = 0; w < cfg.threads; ++w) workers.emplace_back(worker, w);
        }
        done = end;

        if (cfg.eval_episodes > 0) {
            MetricsRow row;
            row.stage = stage;
            row.episode = done;
            row.report = run_eval(net, cfg.eval_episodes, SearchConfig{1, 0, false},
                                  splitmix64(stage_seed ^ 0xe7a1ull) + eval_round, EvalOptions{cfg.threads});
            row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (hooks.on_eval) hooks.on_eval(row);
        }
        ++eval_round;
        if (hooks.on_checkpoint) hooks.on_checkpoint(stage, done, net);
    }
    net.set_active_stages(net.stages());
}

/// Builds a network and trains its first stage. episodes == 0 returns the initialized network.
inline Network train(const NetworkConfig& ncfg, const TrainConfig& cfg, const TrainHooks& hooks = {},
                     StagePools* pools = nullptr) {
    Network net(ncfg);
    train_stage(net, 0, cfg, hooks, pools);
    return net;
}

/// Trains stage k (0-based, k >= 1) from its harvested pool; lower stages stay frozen.
inline void train_multistage(Network& net, std::size_t stage, const TrainConfig& cfg, StagePools& pools,
                             const TrainHooks& hooks = {}) {
    if (stage == 0) throw config_error("multistage training starts at the second stage");
    train_stage(net, stage, cfg, hooks, &pools);
}

} // namespace otd
