#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <utility>
#include <vector>

#include "otd2048/otd2048.hpp"

namespace fixtures {

// A mid-game board, its Up afterstate, that afterstate after a 2-tile spawn, and the following Left afterstate.
inline otd::Board midgame() {
    return otd::Board::from_tiles({32, 2, 0, 0, 32, 2, 16, 2, 8, 4, 0, 0, 16, 4, 0, 0});
}
inline otd::Board midgame_up() {
    return otd::Board::from_tiles({64, 4, 16, 2, 8, 8, 0, 0, 16, 0, 0, 0, 0, 0, 0, 0});
}
inline otd::Board midgame_up_spawned() {
    return otd::Board::from_tiles({64, 4, 16, 2, 8, 8, 0, 0, 16, 0, 0, 0, 2, 0, 0, 0});
}
inline otd::Board midgame_up_left() {
    return otd::Board::from_tiles({64, 4, 16, 2, 16, 0, 0, 0, 16, 0, 0, 0, 2, 0, 0, 0});
}

/// Board with uniformly random exponents in [0, max_e].
inline otd::Board random_board(std::mt19937_64& gen, int max_e = 11) {
    std::uniform_int_distribution<int> d(0, max_e);
    otd::Board b;
    for (int p = 0; p < otd::kCells; ++p) b.set(p, d(gen));
    return b;
}

/// Board reached by random play from a fresh game; plausible tile mixes.
inline otd::Board random_reachable(std::mt19937_64& gen, int max_moves = 200) {
    otd::Rng rng(gen());
    otd::Board s = otd::initial_state(rng);
    const int moves = static_cast<int>(gen() % static_cast<std::uint64_t>(max_moves));
    for (int i = 0; i < moves; ++i) {
        const auto legal = otd::legal_actions(s);
        if (legal.empty()) break;
        const auto r = otd::slide(s, legal[rng.below(static_cast<std::uint32_t>(legal.size()))]);
        const otd::Board next = otd::spawn(r->afterstate, rng);
        if (otd::is_terminal(next)) break;
        s = next;
    }
    return s;
}

inline std::filesystem::path data_dir() { return OTD2048_DATA_DIR; }

inline otd::NetworkConfig net_config(const std::string& geometry = "4x6", unsigned c = 16, unsigned stages = 1) {
    otd::NetworkConfig cfg;
    cfg.name = geometry;
    cfg.tuples = otd::load_geometry(data_dir() / "tuples" / (geometry + ".txt"));
    cfg.cardinality = c;
    cfg.stages = stages;
    return cfg;
}

/// Small network for fast tests: two 4-tuples (16^4 entries each).
inline otd::NetworkConfig small_config(unsigned stages = 1) {
    otd::NetworkConfig cfg;
    cfg.name = "small";
    cfg.tuples = {otd::TupleSpec{{0, 1, 2, 3}}, otd::TupleSpec{{4, 5, 6, 7}}};
    cfg.stages = stages;
    return cfg;
}

/// Independent 2048 row slide: compact toward index 0, then merge pairs from the wall outward.
inline std::pair<std::array<int, 4>, std::uint32_t> reference_slide(std::array<int, 4> row, unsigned c = 16) {
    std::vector<int> tiles;
    for (int e : row)
        if (e) tiles.push_back(e);
    std::vector<int> out;
    std::uint32_t reward = 0;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        if (i + 1 < tiles.size() && tiles[i] == tiles[i + 1] && static_cast<unsigned>(tiles[i] + 1) < c) {
            out.push_back(tiles[i] + 1);
            reward += 1u << (tiles[i] + 1);
            ++i;
        } else {
            out.push_back(tiles[i]);
        }
    }
    std::array<int, 4> res{};
    for (std::size_t i = 0; i < out.size(); ++i) res[i] = out[i];
    return {res, reward};
}

// Brute-force expectimax straight from the definition: no table, no shared code with Expectimax.
inline double naive_max(const otd::Network& net, otd::Board s, unsigned depth);

inline double naive_chance(const otd::Network& net, otd::Board after, unsigned depth) {
    if (depth == 0) return net.value(after);
    std::vector<int> empty;
    for (int p = 0; p < otd::kCells; ++p)
        if (after.at(p) == 0) empty.push_back(p);
    if (empty.empty()) return net.value(after);
    double v = 0;
    for (int p : empty)
        for (auto [e, prob] : {std::pair{1, 0.9}, std::pair{2, 0.1}}) {
            otd::Board s = after;
            s.set(p, e);
            v += prob / static_cast<double>(empty.size()) * naive_max(net, s, depth);
        }
    return v;
}

inline double naive_max(const otd::Network& net, otd::Board s, unsigned depth) {
    double best = 0;
    bool any = false;
    for (otd::Action a : otd::kActions) {
        const auto r = otd::slide(s, a);
        if (!r) continue;
        const double v = r->reward + naive_chance(net, r->afterstate, depth - 1);
        if (!any || v > best) best = v;
        any = true;
    }
    return any ? best : 0.0;
}

} // namespace fixtures
