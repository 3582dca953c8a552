#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "otd2048/rng.hpp"

namespace otd {

/// Cells per side and total; the engine is fixed to the 4x4 grid.
inline constexpr int kSide = 4;
inline constexpr int kCells = 16;
/// Tile-exponent cardinality c, counting the empty cell (exponent 0).
inline constexpr unsigned kDefaultCardinality = 16;
inline constexpr unsigned kMaxCardinality = 16;

enum class Action : std::uint8_t { Up = 0, Right = 1, Down = 2, Left = 3 };

/// Fixed action order; also the argmax tie-break order.
inline constexpr std::array<Action, 4> kActions = {Action::Up, Action::Right, Action::Down, Action::Left};

constexpr std::string_view to_string(Action a) noexcept {
    switch (a) {
    case Action::Up: return "up";
    case Action::Right: return "right";
    case Action::Down: return "down";
    case Action::Left: return "left";
    }
    return "?";
}

constexpr std::uint64_t tile_value(int exponent) noexcept {
    return exponent == 0 ? 0 : (std::uint64_t{1} << exponent);
}

/**
 * 4x4 board of tile exponents packed into 64 bits.
 *
 * Cell (r, k) sits at bits [4(4r+k), 4(4r+k)+4), i.e. position p = 4r+k in
 * row-major order, row 0 in the low 16 bits:
 *
 *     0  1  2  3
 *     4  5  6  7
 *     8  9 10 11
 *    12 13 14 15
 */
class Board {
public:
    constexpr Board() noexcept = default;
    constexpr explicit Board(std::uint64_t raw) noexcept : raw_(raw) {}

    /// Throws std::invalid_argument if any exponent is outside [0, c).
    static Board from_exponents(const std::array<int, kCells>& exps, unsigned c = kDefaultCardinality) {
        Board b;
        for (int p = 0; p < kCells; ++p) {
            if (exps[p] < 0 || static_cast<unsigned>(exps[p]) >= c)
                throw std::invalid_argument("tile exponent " + std::to_string(exps[p]) + " out of range for c=" +
                                            std::to_string(c));
            b.set(p, exps[p]);
        }
        return b;
    }

    /// Tile values (0 for empty, otherwise a power of two >= 2), row-major.
    static Board from_tiles(const std::array<std::uint64_t, kCells>& tiles, unsigned c = kDefaultCardinality) {
        std::array<int, kCells> exps{};
        for (int p = 0; p < kCells; ++p) {
            const auto v = tiles[p];
            if (v == 0) continue;
            if (v < 2 || !std::has_single_bit(v))
                throw std::invalid_argument("tile value " + std::to_string(v) + " is not a power of two >= 2");
            exps[p] = std::countr_zero(v);
        }
        return from_exponents(exps, c);
    }

    constexpr std::uint64_t raw() const noexcept { return raw_; }

    constexpr int at(int p) const noexcept { return static_cast<int>((raw_ >> (4 * p)) & 0xf); }
    constexpr int at(int r, int k) const noexcept { return at(4 * r + k); }

    constexpr void set(int p, int exponent) noexcept {
        raw_ = (raw_ & ~(std::uint64_t{0xf} << (4 * p))) | (std::uint64_t(exponent & 0xf) << (4 * p));
    }

    constexpr std::uint16_t row(int r) const noexcept { return static_cast<std::uint16_t>(raw_ >> (16 * r)); }

    /// One bit (the low bit of the nibble) per empty cell.
    constexpr std::uint64_t empty_mask() const noexcept {
        std::uint64_t x = raw_;
        x |= x >> 2;
        x |= x >> 1;
        return ~x & 0x1111111111111111ull;
    }

    constexpr int count_empty() const noexcept { return std::popcount(empty_mask()); }
    constexpr int count_tiles() const noexcept { return kCells - count_empty(); }

    constexpr int max_exponent() const noexcept {
        int m = 0;
        for (int p = 0; p < kCells; ++p) m = at(p) > m ? at(p) : m;
        return m;
    }

    /// Bit e set iff some cell holds exponent e (e >= 1).
    constexpr std::uint32_t exponent_set() const noexcept {
        std::uint32_t s = 0;
        for (int p = 0; p < kCells; ++p)
            if (at(p)) s |= 1u << at(p);
        return s;
    }

    friend constexpr bool operator==(Board a, Board b) noexcept = default;

private:
    std::uint64_t raw_ = 0;
};

// --- symmetries -----------------------------------------------------------

constexpr Board transpose(Board b) noexcept {
    const std::uint64_t x = b.raw();
    const std::uint64_t a1 = x & 0xF0F00F0FF0F00F0Full;
    const std::uint64_t a2 = x & 0x0000F0F00000F0F0ull;
    const std::uint64_t a3 = x & 0x0F0F00000F0F0000ull;
    const std::uint64_t a = a1 | (a2 << 12) | (a3 >> 12);
    const std::uint64_t b1 = a & 0xFF00FF0000FF00FFull;
    const std::uint64_t b2 = a & 0x00FF00FF00000000ull;
    const std::uint64_t b3 = a & 0x00000000FF00FF00ull;
    return Board(b1 | (b2 >> 24) | (b3 << 24));
}

/// Left-right mirror (reverses each row).
constexpr Board mirror(Board b) noexcept {
    const std::uint64_t x = b.raw();
    const std::uint64_t y = ((x & 0x000f000f000f000full) << 12) | ((x & 0x00f000f000f000f0ull) << 4) |
                            ((x & 0x0f000f000f000f00ull) >> 4) | ((x & 0xf000f000f000f000ull) >> 12);
    return Board(y);
}

/// Top-bottom flip (reverses row order).
constexpr Board flip(Board b) noexcept {
    const std::uint64_t x = b.raw();
    return Board((x << 48) | ((x & 0xffff0000ull) << 16) | ((x >> 16) & 0xffff0000ull) | (x >> 48));
}

constexpr Board rotate_cw(Board b) noexcept { return mirror(transpose(b)); }
constexpr Board rotate_ccw(Board b) noexcept { return flip(transpose(b)); }

/// Dihedral symmetry g in [0, 8): optional mirror (g & 4), then (g & 3) clockwise quarter turns.
constexpr Board transform(Board b, int g) noexcept {
    if (g & 4) b = mirror(b);
    for (int i = 0; i < (g & 3); ++i) b = rotate_cw(b);
    return b;
}

/// Symmetry h with transform(transform(b, g), h) == b.
constexpr int inverse_symmetry(int g) noexcept {
    // mirrors are involutions; rotations invert to the opposite turn count
    return (g & 4) ? g : ((4 - (g & 3)) & 3);
}

// --- text rendering -------------------------------------------------------

/// Four lines of four tile values, space separated, 0 for empty.
inline std::string render(Board b) {
    std::ostringstream out;
    for (int r = 0; r < kSide; ++r) {
        for (int k = 0; k < kSide; ++k) out << (k ? " " : "") << tile_value(b.at(r, k));
        out << '\n';
    }
    return out.str();
}

/// Inverse of render(); throws std::invalid_argument on malformed input.
inline Board parse_board(std::istream& in, unsigned c = kDefaultCardinality) {
    std::array<std::uint64_t, kCells> tiles{};
    for (auto& t : tiles)
        if (!(in >> t)) throw std::invalid_argument("board text: expected 16 tile values");
    return Board::from_tiles(tiles, c);
}

inline Board parse_board(std::string_view text, unsigned c = kDefaultCardinality) {
    std::istringstream in{std::string(text)};
    return parse_board(in, c);
}

inline std::ostream& operator<<(std::ostream& os, Board b) { return os << render(b); }

} // namespace otd

template <>
struct std::hash<otd::Board> {
    std::size_t operator()(otd::Board b) const noexcept { return otd::splitmix64(b.raw()); }
};
