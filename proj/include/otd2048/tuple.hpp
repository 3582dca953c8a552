#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "otd2048/board.hpp"
#include "otd2048/errors.hpp"

namespace otd {

/// Ordered board positions (row-major 0..15) read by one n-tuple; cell 0 is the lowest index digit.
struct TupleSpec {
    std::vector<std::uint8_t> cells;
    friend bool operator==(const TupleSpec&, const TupleSpec&) = default;
};

inline constexpr std::size_t kMaxTupleSize = 8;

inline void validate(const TupleSpec& t) {
    if (t.cells.empty() || t.cells.size() > kMaxTupleSize)
        throw config_error("tuple size must be in [1, 8], got " + std::to_string(t.cells.size()));
    std::uint32_t seen = 0;
    for (auto p : t.cells) {
        if (p >= kCells) throw config_error("tuple cell " + std::to_string(p) + " outside the 4x4 grid");
        if (seen & (1u << p)) throw config_error("tuple cell " + std::to_string(p) + " repeated");
        seen |= 1u << p;
    }
}

/// Tiles that must all be present (in the dominance sense) for a board to enter a stage.
struct StageTrigger {
    std::vector<int> exponents; // sorted descending
    friend bool operator==(const StageTrigger&, const StageTrigger&) = default;
};

/**
 * A board satisfies a trigger when its k-th largest tile is at least the
 * trigger's k-th largest tile for every k. For a single-tile trigger this is
 * "max tile >= t"; for {16384, 8192} it needs a 16384-or-larger tile plus a
 * second tile of at least 8192.
 */
inline bool satisfies(Board b, const StageTrigger& trig) {
    std::array<int, kCells> tiles{};
    for (int p = 0; p < kCells; ++p) tiles[p] = b.at(p);
    std::sort(tiles.begin(), tiles.end(), std::greater<>());
    for (std::size_t k = 0; k < trig.exponents.size(); ++k)
        if (k >= tiles.size() || tiles[k] < trig.exponents[k]) return false;
    return true;
}

/// Default ladder: stage 2 at {16384}, stage 3 at {16384, 8192}, then one halved tile per further stage.
inline std::vector<StageTrigger> default_triggers(unsigned stages) {
    std::vector<StageTrigger> out;
    for (unsigned s = 1; s < stages; ++s) {
        StageTrigger t;
        for (unsigned k = 0; k < s; ++k) t.exponents.push_back(14 - static_cast<int>(k));
        out.push_back(std::move(t));
    }
    return out;
}

/// Geometry and shape of an m x n-tuple network.
struct NetworkConfig {
    std::string name = "network";
    std::vector<TupleSpec> tuples;
    unsigned cardinality = kDefaultCardinality;
    unsigned stages = 1;
    /// triggers[k] admits boards into stage k+2 (1-based); size stages-1.
    std::vector<StageTrigger> triggers;

    std::size_t table_size(std::size_t i) const {
        std::size_t n = 1;
        for (std::size_t k = 0; k < tuples[i].cells.size(); ++k) n *= cardinality;
        return n;
    }

    std::size_t weights_per_stage() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < tuples.size(); ++i) n += table_size(i);
        return n;
    }

    std::size_t weight_count() const { return weights_per_stage() * stages; }

    void validate() const {
        if (tuples.empty()) throw config_error("network needs at least one tuple");
        if (cardinality < 3 || cardinality > kMaxCardinality)
            throw config_error("cardinality must be in [3, 16], got " + std::to_string(cardinality));
        if (stages < 1) throw config_error("stage count must be >= 1");
        for (const auto& t : tuples) otd::validate(t);
        if (triggers.size() + 1 != stages)
            throw config_error("expected " + std::to_string(stages - 1) + " stage triggers, got " +
                               std::to_string(triggers.size()));
        for (const auto& t : triggers)
            for (int e : t.exponents)
                if (e < 1 || static_cast<unsigned>(e) >= cardinality)
                    throw config_error("stage trigger tile out of range for cardinality");
    }
};

/// One tuple per line, whitespace-separated cell indices 0-15; '#' starts a comment.
inline std::vector<TupleSpec> parse_geometry(std::istream& in, const std::string& source = "<geometry>") {
    std::vector<TupleSpec> tuples;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        TupleSpec t;
        std::string tok;
        while (ls >> tok) {
            int v = -1;
            try {
                std::size_t used = 0;
                v = std::stoi(tok, &used);
                if (used != tok.size()) v = -1;
            } catch (const std::exception&) {
            }
            if (v < 0 || v >= kCells)
                throw config_error(source + ":" + std::to_string(lineno) + ": bad cell index '" + tok + "'");
            t.cells.push_back(static_cast<std::uint8_t>(v));
        }
        if (t.cells.empty()) continue;
        try {
            validate(t);
        } catch (const config_error& e) {
            throw config_error(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
        tuples.push_back(std::move(t));
    }
    if (tuples.empty()) throw config_error(source + ": no tuples defined");
    return tuples;
}

inline std::vector<TupleSpec> load_geometry(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open tuple-geometry file '" + path.string() + "'");
    return parse_geometry(in, path.string());
}

inline std::string format_geometry(const std::vector<TupleSpec>& tuples) {
    std::ostringstream out;
    for (const auto& t : tuples) {
        for (std::size_t k = 0; k < t.cells.size(); ++k) out << (k ? " " : "") << int(t.cells[k]);
        out << '\n';
    }
    return out.str();
}

/// Feature index of a tuple: sum of exponent(cells[k]) * c^k.
inline std::size_t feature_index(Board b, const TupleSpec& t, unsigned c = kDefaultCardinality) {
    std::size_t idx = 0;
    for (std::size_t k = t.cells.size(); k-- > 0;) idx = idx * c + static_cast<std::size_t>(b.at(t.cells[k]));
    return idx;
}

} // namespace otd
