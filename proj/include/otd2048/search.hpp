#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "otd2048/engine.hpp"
#include "otd2048/network.hpp"
#include "otd2048/policy.hpp"
#include "otd2048/rng.hpp"

namespace otd {

struct SearchConfig {
    /// Layers of chance nodes; 1 is plain greedy play.
    unsigned plies = 1;
    /// Transposition-table budget in bytes, a power of two; 0 disables the table.
    std::size_t tt_bytes = std::size_t{1} << 26;
    /// Root tile-downgrading.
    bool downgrade = false;

    void validate() const {
        if (plies < 1) throw std::invalid_argument("search plies must be >= 1");
        if (tt_bytes != 0 && !std::has_single_bit(tt_bytes))
            throw std::invalid_argument("transposition-table size must be a power of two");
    }
};

/// Exponent of the tile that must be present before downgrading applies (32768).
inline constexpr int kDowngradeTrigger = 15;
/// Absent tiles at or below this exponent (2, 4) never count as missing.
inline constexpr int kDowngradeFloor = 2;

/**
 * Root tile-downgrading. With a 32768-or-larger tile on the board, find the
 * largest absent tile value below the largest tile (ignoring 2 and 4) and
 * halve every tile above it. Any other board comes back unchanged.
 */
inline Board downgrade(Board s) {
    const int top = s.max_exponent();
    if (top < kDowngradeTrigger) return s;
    const std::uint32_t present = s.exponent_set();
    int missing = 0;
    for (int e = top - 1; e > kDowngradeFloor; --e) {
        if (!(present & (1u << e))) {
            missing = e;
            break;
        }
    }
    if (missing == 0) return s;
    for (int p = 0; p < kCells; ++p)
        if (s.at(p) > missing) s.set(p, s.at(p) - 1);
    return s;
}

namespace detail {

constexpr std::array<std::array<std::uint64_t, 16>, kCells> make_zobrist() {
    std::array<std::array<std::uint64_t, 16>, kCells> keys{};
    std::uint64_t x = 0x2048'0d7c'0ff1'ce00ull;
    for (auto& cell : keys)
        for (auto& k : cell) k = splitmix64(x++);
    return keys;
}

inline constexpr auto kZobrist = make_zobrist();

} // namespace detail

constexpr std::uint64_t zobrist_hash(Board b) noexcept {
    std::uint64_t h = 0;
    for (int p = 0; p < kCells; ++p) h ^= detail::kZobrist[p][b.at(p)];
    return h;
}

/**
 * Chance-node cache keyed on (board, remaining depth).
 *
 * Buckets hold a depth-preferred slot and an always-replace slot. A hit needs
 * the full board and the exact depth to match, so cached values equal what a
 * fresh search would compute.
 */
class TranspositionTable {
public:
    explicit TranspositionTable(std::size_t bytes) {
        const std::size_t n = bytes / sizeof(Bucket);
        buckets_.resize(n ? std::bit_floor(n) : 0);
        mask_ = buckets_.empty() ? 0 : buckets_.size() - 1;
    }

    bool enabled() const noexcept { return !buckets_.empty(); }

    std::optional<double> probe(Board b, unsigned depth) const noexcept {
        if (!enabled()) return std::nullopt;
        const Bucket& bk = buckets_[zobrist_hash(b) & mask_];
        for (const Entry& e : bk.slot)
            if (e.depth == depth && e.board == b.raw()) return e.value;
        return std::nullopt;
    }

    void store(Board b, unsigned depth, double value) noexcept {
        if (!enabled()) return;
        Bucket& bk = buckets_[zobrist_hash(b) & mask_];
        Entry e{b.raw(), value, depth};
        if (bk.slot[0].depth == 0 || depth >= bk.slot[0].depth)
            bk.slot[0] = e;
        else
            bk.slot[1] = e;
    }

    void clear() noexcept { std::fill(buckets_.begin(), buckets_.end(), Bucket{}); }

private:
    struct Entry {
        std::uint64_t board = 0;
        double value = 0;
        unsigned depth = 0; // 0 marks an empty slot; leaves are never stored
    };
    struct alignas(64) Bucket {
        std::array<Entry, 2> slot{};
    };

    std::vector<Bucket> buckets_;
    std::size_t mask_ = 0;
};

/// Fixed-depth expectimax over afterstates. Not thread-safe: one instance per searching thread.
class Expectimax {
public:
    Expectimax(const Network& net, SearchConfig config)
        : net_(net), config_(config), moves_(MoveTable::get(net.cardinality())), tt_(config.tt_bytes) {
        config_.validate();
    }

    const SearchConfig& config() const noexcept { return config_; }

    /// depth 0: network value; otherwise the spawn-weighted mean of max_value(., depth).
    double chance_value(Board after, unsigned depth) {
        if (depth == 0) return static_cast<double>(net_.value(after));
        const int n = after.count_empty();
        if (n == 0) return static_cast<double>(net_.value(after));
        if (auto hit = tt_.probe(after, depth)) {
            ++tt_hits_;
            return *hit;
        }
        double sum = 0;
        for (int p = 0; p < kCells; ++p) {
            if (after.at(p) != 0) continue;
            Board two = after, four = after;
            two.set(p, 1);
            four.set(p, 2);
            sum += 0.9 * max_value(two, depth) + 0.1 * max_value(four, depth);
        }
        const double v = sum / n;
        tt_.store(after, depth, v);
        return v;
    }

    /// Best reward + chance_value(afterstate, depth - 1); 0 on a terminal state.
    double max_value(Board state, unsigned depth) {
        const auto d = best_move(state, depth);
        return d ? d->score : 0.0;
    }

    /// Root decision; applies tile-downgrading first when configured.
    std::optional<Decision> choose(Board state) {
        const Board root = config_.downgrade ? downgrade(state) : state;
        auto d = best_move(root, config_.plies);
        if (d && root != state) {
            // downgrading keeps the tile layout, so the same move is legal on the real board
            const auto real = moves_.slide(state, d->action);
            d->afterstate = real->afterstate;
            d->reward = real->reward;
        }
        return d;
    }

    std::uint64_t nodes() const noexcept { return nodes_; }
    std::uint64_t tt_hits() const noexcept { return tt_hits_; }
    void clear() noexcept { tt_.clear(); }

private:
    std::optional<Decision> best_move(Board state, unsigned depth) {
        ++nodes_;
        return greedy(state, [&](Board after) { return chance_value(after, depth - 1); }, moves_);
    }

    const Network& net_;
    SearchConfig config_;
    const MoveTable& moves_;
    TranspositionTable tt_;
    std::uint64_t nodes_ = 0;
    std::uint64_t tt_hits_ = 0;
};

/// One-shot convenience wrapper around Expectimax::choose.
inline std::optional<Action> search_action(const Network& net, Board state, const SearchConfig& config) {
    Expectimax search(net, config);
    const auto d = search.choose(state);
    if (!d) return std::nullopt;
    return d->action;
}

} // namespace otd
