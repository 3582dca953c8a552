#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "otd2048/engine.hpp"
#include "otd2048/network.hpp"
#include "otd2048/policy.hpp"
#include "otd2048/search.hpp"

namespace otd {

/// Tile exponents reported as reach columns: 2048 .. 65536.
inline constexpr std::array<int, 6> kReportedTiles = {11, 12, 13, 14, 15, 16};

struct EvalReport {
    std::uint64_t episodes = 0;
    double avg_score = 0;
    std::uint64_t max_score = 0;
    /// reach[e]: fraction of episodes that held a tile of exponent >= e at some point.
    std::array<double, 17> reach{};
    /// Half-width of the 95% interval of avg_score across runs; set by aggregate().
    std::optional<double> ci95;
    double wall_seconds = 0;

    double reach_rate(std::uint64_t tile) const {
        const int e = std::countr_zero(tile);
        return (e >= 0 && e < static_cast<int>(reach.size())) ? reach[e] : 0.0;
    }
};

/// Full record of one evaluation game, enough to replay it through the engine.
struct EpisodeTrace {
    std::uint64_t index = 0;
    Board start;
    std::vector<Action> actions;
    std::vector<std::uint32_t> rewards;
    /// Board after each move's spawn; the last entry is the terminal board.
    std::vector<Board> states;
    std::uint64_t score = 0;
    int max_exponent = 0;
};

struct EvalOptions {
    unsigned threads = 1;
    /// Keep a trace of every k-th episode (0: none).
    std::uint64_t trace_every = 0;
    std::vector<EpisodeTrace>* traces = nullptr;
};

namespace detail {

struct GameResult {
    std::uint64_t score = 0;
    int max_exponent = 0;
};

template <class Chooser>
GameResult play_game(Chooser&& choose, const MoveTable& moves, Rng& rng, EpisodeTrace* trace) {
    Board s = initial_state(rng);
    GameResult res{0, s.max_exponent()};
    if (trace) trace->start = s;
    while (true) {
        const auto d = choose(s);
        if (!d) break;
        const auto r = moves.slide(s, d->action);
        res.score += r->reward;
        res.max_exponent = std::max(res.max_exponent, r->afterstate.max_exponent());
        s = spawn(r->afterstate, rng);
        res.max_exponent = std::max(res.max_exponent, s.max_exponent());
        if (trace) {
            trace->actions.push_back(d->action);
            trace->rewards.push_back(r->reward);
            trace->states.push_back(s);
        }
    }
    if (trace) {
        trace->score = res.score;
        trace->max_exponent = res.max_exponent;
    }
    return res;
}

} // namespace detail

/**
 * Plays n games with no learning and summarises them. Game i draws from
 * Rng::stream(seed, i), so the report does not depend on the thread count.
 * plies == 1 without downgrading is plain greedy play.
 */
inline EvalReport run_eval(const Network& net, std::uint64_t n, const SearchConfig& search, std::uint64_t seed,
                           const EvalOptions& opts = {}) {
    if (n == 0) throw std::invalid_argument("evaluation needs at least one episode");
    search.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const MoveTable& moves = MoveTable::get(net.cardinality());
    const bool plain = search.plies == 1 && !search.downgrade;

    std::vector<detail::GameResult> results(n);
    std::atomic<std::uint64_t> next{0};
    std::mutex trace_mu;

    auto worker = [&] {
        std::optional<Expectimax> searcher;
        if (!plain) searcher.emplace(net, search);
        for (std::uint64_t i; (i = next.fetch_add(1)) < n;) {
            Rng rng = Rng::stream(seed, i);
            const bool keep = opts.traces && opts.trace_every && i % opts.trace_every == 0;
            EpisodeTrace trace;
            trace.index = i;
            EpisodeTrace* tp = keep ? &trace : nullptr;
            if (plain)
                results[i] = detail::play_game([&](Board s) { return select_action(net, s); }, moves, rng, tp);
            else
                results[i] = detail::play_game([&](Board s) { return searcher->choose(s); }, moves, rng, tp);
            if (keep) {
                std::lock_guard lock(trace_mu);
                opts.traces->push_back(std::move(trace));
            }
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (opts.traces)
        std::sort(opts.traces->begin(), opts.traces->end(),
                  [](const EpisodeTrace& a, const EpisodeTrace& b) { return a.index < b.index; });

    EvalReport rep;
    rep.episodes = n;
    double total = 0;
    std::array<std::uint64_t, 17> hits{};
    for (const auto& r : results) {
        total += static_cast<double>(r.score);
        rep.max_score = std::max(rep.max_score, r.score);
        for (int e = 1; e <= r.max_exponent && e < static_cast<int>(hits.size()); ++e) ++hits[e];
    }
    rep.avg_score = total / static_cast<double>(n);
    hits[0] = n;
    for (std::size_t e = 0; e < hits.size(); ++e) rep.reach[e] = static_cast<double>(hits[e]) / static_cast<double>(n);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// Re-simulates a trace; true iff every move is legal, every spawn is a single
/// 2/4 tile on an empty cell, and the rewards add up to the recorded score.
inline bool replay_matches(const EpisodeTrace& t, const MoveTable& moves = MoveTable::get()) {
    if (t.actions.size() != t.states.size() || t.actions.size() != t.rewards.size()) return false;
    Board s = t.start;
    std::uint64_t score = 0;
    for (std::size_t k = 0; k < t.actions.size(); ++k) {
        const auto r = moves.slide(s, t.actions[k]);
        if (!r || r->reward != t.rewards[k]) return false;
        score += r->reward;
        const Board next = t.states[k];
        int changed = 0;
        for (int p = 0; p < kCells; ++p) {
            if (next.at(p) == r->afterstate.at(p)) continue;
            if (r->afterstate.at(p) != 0 || (next.at(p) != 1 && next.at(p) != 2)) return false;
            ++changed;
        }
        if (changed != 1) return false;
        s = next;
    }
    return score == t.score && is_terminal(s, moves);
}

/// Two-sided 95% Student-t critical value with `dof` degrees of freedom.
inline double t_critical_95(double dof) {
    boost::math::students_t dist(dof);
    return boost::math::quantile(boost::math::complement(dist, 0.025));
}

/**
 * Mean of per-run reports. ci95 is the Student-t half-width over the run
 * means (n - 1 degrees of freedom) and stays empty for fewer than two runs.
 */
inline EvalReport aggregate(std::span<const EvalReport> runs) {
    EvalReport out;
    if (runs.empty()) return out;
    const double n = static_cast<double>(runs.size());
    for (const auto& r : runs) {
        out.episodes += r.episodes;
        out.avg_score += r.avg_score / n;
        out.max_score = std::max(out.max_score, r.max_score);
        for (std::size_t e = 0; e < out.reach.size(); ++e) out.reach[e] += r.reach[e] / n;
        out.wall_seconds += r.wall_seconds;
    }
    if (runs.size() >= 2) {
        double ss = 0;
        for (const auto& r : runs) ss += (r.avg_score - out.avg_score) * (r.avg_score - out.avg_score);
        const double sd = std::sqrt(ss / (n - 1));
        out.ci95 = t_critical_95(n - 1) * sd / std::sqrt(n);
    }
    return out;
}

// --- reporting ---------------------------------------------------------------

inline std::string metrics_header() {
    std::string h = "episodes,avg_score,max_score";
    for (int e : kReportedTiles) h += ",reach_" + std::to_string(tile_value(e));
    return h + ",wall_seconds";
}

/// One metrics-stream line: training episode count, scores, reach fractions, wall-clock seconds.
inline std::string metrics_row(std::uint64_t episode, const EvalReport& r, double wall_seconds) {
    std::ostringstream out;
    out << episode << ',' << std::fixed << std::setprecision(2) << r.avg_score << ',' << r.max_score;
    out << std::setprecision(6);
    for (int e : kReportedTiles) out << ',' << r.reach[e];
    out << std::setprecision(3) << ',' << wall_seconds;
    return out.str();
}

/// Human-readable summary with the usual result-table columns.
inline std::string format_report(const EvalReport& r) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(0);
    out << "episodes      " << r.episodes << '\n';
    out << "average score " << r.avg_score;
    if (r.ci95) out << " +- " << *r.ci95;
    out << '\n' << "maximum score " << r.max_score << '\n';
    out << std::setprecision(2);
    for (int e : kReportedTiles) {
        std::string label = std::to_string(tile_value(e)) + " [%]";
        label.resize(14, ' ');
        out << label << r.reach[e] * 100.0 << '\n';
    }
    return out.str();
}

} // namespace otd
