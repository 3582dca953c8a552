#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "otd2048/board.hpp"
#include "otd2048/errors.hpp"
#include "otd2048/rng.hpp"

namespace otd {

/// Four exponents, index 0 is the wall tiles slide toward.
using Row = std::array<int, 4>;

struct RowResult {
    Row row;
    std::uint32_t reward;
    friend bool operator==(const RowResult&, const RowResult&) = default;
};

struct SlideResult {
    Board afterstate;
    std::uint32_t reward;
};

/// One step of an episode: s_t --a_t--> s'_t (reward r_t) --spawn--> s_{t+1}.
struct Transition {
    Board state;
    Action action;
    Board afterstate;
    std::uint32_t reward;
    std::optional<Board> next_state;
};

constexpr std::uint16_t pack_row(const Row& r) noexcept {
    return static_cast<std::uint16_t>(r[0] | (r[1] << 4) | (r[2] << 8) | (r[3] << 12));
}

constexpr Row unpack_row(std::uint16_t v) noexcept {
    return {v & 0xf, (v >> 4) & 0xf, (v >> 8) & 0xf, (v >> 12) & 0xf};
}

constexpr std::uint16_t reverse_row(std::uint16_t v) noexcept {
    return static_cast<std::uint16_t>(((v & 0xf) << 12) | ((v & 0xf0) << 4) | ((v >> 4) & 0xf0) | (v >> 12));
}

/**
 * Precomputed slide results for every 16-bit row under cardinality c.
 *
 * Tiles slide toward index 0; equal neighbours merge once per slide,
 * resolving from the wall outward. A merge whose result would need
 * exponent >= c does not happen (the two tiles stay side by side).
 */
class MoveTable {
public:
    explicit MoveTable(unsigned cardinality) : cardinality_(cardinality) {
        if (cardinality < 3 || cardinality > kMaxCardinality)
            throw config_error("cardinality must be in [3, 16], got " + std::to_string(cardinality));
        left_.resize(1 << 16);
        right_.resize(1 << 16);
        reward_.resize(1 << 16);
        for (std::uint32_t v = 0; v < (1u << 16); ++v) {
            const auto res = compute(unpack_row(static_cast<std::uint16_t>(v)));
            left_[v] = pack_row(res.row);
            reward_[v] = res.reward;
        }
        for (std::uint32_t v = 0; v < (1u << 16); ++v)
            right_[v] = reverse_row(left_[reverse_row(static_cast<std::uint16_t>(v))]);
    }

    /// Shared table for a cardinality, built on first use.
    static const MoveTable& get(unsigned cardinality = kDefaultCardinality) {
        if (cardinality < 3 || cardinality > kMaxCardinality)
            throw config_error("cardinality must be in [3, 16], got " + std::to_string(cardinality));
        static std::array<std::once_flag, kMaxCardinality + 1> once;
        static std::array<std::unique_ptr<MoveTable>, kMaxCardinality + 1> tables;
        std::call_once(once[cardinality], [&] { tables[cardinality] = std::make_unique<MoveTable>(cardinality); });
        return *tables[cardinality];
    }

    unsigned cardinality() const noexcept { return cardinality_; }

    RowResult slide_row(const Row& row) const {
        const auto v = pack_row(row);
        return {unpack_row(left_[v]), reward_[v]};
    }

    std::uint16_t left(std::uint16_t v) const noexcept { return left_[v]; }
    std::uint16_t right(std::uint16_t v) const noexcept { return right_[v]; }
    /// Reward of a row slide; identical for both directions (equal runs pair up the same way).
    std::uint32_t reward(std::uint16_t v) const noexcept { return reward_[v]; }

    /// Afterstate and reward, or nullopt if the action leaves the board unchanged.
    std::optional<SlideResult> slide(Board b, Action a) const noexcept {
        SlideResult res{};
        switch (a) {
        case Action::Left: res = slide_rows(b, left_.data()); break;
        case Action::Right: res = slide_rows(b, right_.data()); break;
        case Action::Up: res = slide_rows(transpose(b), left_.data()); res.afterstate = transpose(res.afterstate); break;
        case Action::Down: res = slide_rows(transpose(b), right_.data()); res.afterstate = transpose(res.afterstate); break;
        }
        if (res.afterstate == b) return std::nullopt;
        return res;
    }

private:
    SlideResult slide_rows(Board b, const std::uint16_t* table) const noexcept {
        std::uint64_t out = 0;
        std::uint32_t reward = 0;
        for (int r = 0; r < kSide; ++r) {
            const std::uint16_t v = b.row(r);
            out |= std::uint64_t{table[v]} << (16 * r);
            reward += reward_[v];
        }
        return {Board(out), reward};
    }

    RowResult compute(const Row& in) const {
        Row out{};
        std::uint32_t reward = 0;
        int n = 0;
        bool mergeable = false; // out[n-1] has not merged yet
        for (int e : in) {
            if (e == 0) continue;
            if (mergeable && out[n - 1] == e && static_cast<unsigned>(e + 1) < cardinality_) {
                out[n - 1] = e + 1;
                reward += 1u << (e + 1);
                mergeable = false;
            } else {
                out[n++] = e;
                mergeable = true;
            }
        }
        return {out, reward};
    }

    unsigned cardinality_;
    std::vector<std::uint16_t> left_, right_;
    std::vector<std::uint32_t> reward_;
};

inline RowResult slide_row(const Row& row, unsigned c = kDefaultCardinality) {
    for (int e : row)
        if (e < 0 || static_cast<unsigned>(e) >= c) throw std::invalid_argument("row exponent out of range");
    return MoveTable::get(c).slide_row(row);
}

inline std::optional<SlideResult> slide(Board b, Action a, const MoveTable& table = MoveTable::get()) {
    return table.slide(b, a);
}

/// Legal actions as a bit set indexed by Action.
inline std::uint8_t legal_mask(Board b, const MoveTable& table = MoveTable::get()) {
    std::uint8_t m = 0;
    for (Action a : kActions)
        if (table.slide(b, a)) m |= std::uint8_t(1u << static_cast<int>(a));
    return m;
}

inline std::vector<Action> legal_actions(Board b, const MoveTable& table = MoveTable::get()) {
    std::vector<Action> out;
    for (Action a : kActions)
        if (table.slide(b, a)) out.push_back(a);
    return out;
}

inline bool is_terminal(Board b, const MoveTable& table = MoveTable::get()) { return legal_mask(b, table) == 0; }

/// Puts a 2-tile (p = 0.9) or 4-tile (p = 0.1) on a uniformly chosen empty cell.
/// Throws std::logic_error on a full board.
inline Board spawn(Board b, Rng& rng) {
    std::uint64_t empties = b.empty_mask();
    const int n = std::popcount(empties);
    if (n == 0) throw std::logic_error("spawn on a full board");
    for (std::uint32_t k = rng.below(static_cast<std::uint32_t>(n)); k > 0; --k) empties &= empties - 1;
    const int pos = std::countr_zero(empties) / 4;
    b.set(pos, rng.below(10) == 0 ? 2 : 1);
    return b;
}

inline Board initial_state(Rng& rng) { return spawn(spawn(Board{}, rng), rng); }

} // namespace otd
