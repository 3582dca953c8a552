#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "otd2048/errors.hpp"
#include "otd2048/network.hpp"

namespace otd {

// Weight file, little-endian:
//   magic "OTD248\0" (7 bytes), version u32, cardinality u32, stages u32, m u32
//   per tuple: n u32, n x u8 cell index
//   per stage, per tuple: c^n x f32 weights
//   TC flag u8; if 1: E arrays then A arrays, same layout as the weights
// A file that ends right after the weights is read as having no TC section.

inline constexpr std::array<char, 7> kWeightMagic = {'O', 'T', 'D', '2', '4', '8', '\0'};
inline constexpr std::uint32_t kWeightFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "weight files are written in host order");

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

inline void write_floats(std::ostream& out, std::span<const float> v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    void bytes(void* dst, std::size_t n, const char* what) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw io_error(source_ + ": truncated weight file (while reading " + what + ")");
    }

    std::uint32_t u32(const char* what) {
        std::uint32_t v;
        bytes(&v, 4, what);
        return v;
    }

    bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

    const std::string& source() const { return source_; }

private:
    std::istream& in_;
    std::string source_;
};

} // namespace detail

inline void save(const Network& net, std::ostream& out) {
    const auto& cfg = net.config();
    out.write(kWeightMagic.data(), kWeightMagic.size());
    detail::write_u32(out, kWeightFormatVersion);
    detail::write_u32(out, cfg.cardinality);
    detail::write_u32(out, cfg.stages);
    detail::write_u32(out, static_cast<std::uint32_t>(cfg.tuples.size()));
    for (const auto& t : cfg.tuples) {
        detail::write_u32(out, static_cast<std::uint32_t>(t.cells.size()));
        out.write(reinterpret_cast<const char*>(t.cells.data()), static_cast<std::streamsize>(t.cells.size()));
    }
    for (unsigned s = 0; s < cfg.stages; ++s)
        for (std::size_t i = 0; i < cfg.tuples.size(); ++i) detail::write_floats(out, net.weights(s, i));
    const std::uint8_t tc = net.has_tc() ? 1 : 0;
    out.put(static_cast<char>(tc));
    if (tc) {
        for (unsigned s = 0; s < cfg.stages; ++s)
            for (std::size_t i = 0; i < cfg.tuples.size(); ++i) detail::write_floats(out, net.tc_errors(s, i));
        for (unsigned s = 0; s < cfg.stages; ++s)
            for (std::size_t i = 0; i < cfg.tuples.size(); ++i) detail::write_floats(out, net.tc_abs_errors(s, i));
    }
}

/// Writes to a temporary sibling and renames, so readers never see a partial file.
inline void save(const Network& net, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open '" + tmp.string() + "' for writing");
        save(net, out);
        out.flush();
        if (!out) throw io_error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw io_error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

/**
 * Reads a network. Triggers are not stored in the file; `triggers` replaces
 * the default ladder when given. With `expected`, the file's cardinality and
 * geometry must match it or config_error is thrown.
 */
inline Network load(std::istream& in, const std::string& source = "<stream>",
                    const NetworkConfig* expected = nullptr) {
    detail::Reader rd(in, source);
    std::array<char, 7> magic{};
    rd.bytes(magic.data(), magic.size(), "magic");
    if (magic != kWeightMagic) throw io_error(source + ": not a weight file (bad magic)");
    const auto version = rd.u32("version");
    if (version != kWeightFormatVersion)
        throw io_error(source + ": unsupported weight format version " + std::to_string(version));

    NetworkConfig cfg;
    cfg.name = std::filesystem::path(source).stem().string();
    cfg.cardinality = rd.u32("cardinality");
    cfg.stages = rd.u32("stage count");
    const auto m = rd.u32("tuple count");
    if (cfg.cardinality < 3 || cfg.cardinality > kMaxCardinality)
        throw config_error(source + ": cardinality " + std::to_string(cfg.cardinality) + " unsupported");
    if (cfg.stages < 1 || cfg.stages > 64) throw config_error(source + ": implausible stage count");
    if (m < 1 || m > 1024) throw config_error(source + ": implausible tuple count");
    for (std::uint32_t i = 0; i < m; ++i) {
        TupleSpec t;
        const auto n = rd.u32("tuple size");
        if (n < 1 || n > kMaxTupleSize) throw config_error(source + ": tuple size " + std::to_string(n) + " unsupported");
        t.cells.resize(n);
        rd.bytes(t.cells.data(), n, "tuple cells");
        try {
            validate(t);
        } catch (const config_error& e) {
            throw config_error(source + ": " + e.what());
        }
        cfg.tuples.push_back(std::move(t));
    }
    if (expected) {
        if (expected->cardinality != cfg.cardinality)
            throw config_error(source + ": cardinality " + std::to_string(cfg.cardinality) + " does not match expected " +
                               std::to_string(expected->cardinality));
        if (expected->tuples != cfg.tuples) throw config_error(source + ": tuple geometry does not match expected");
        if (expected->stages != cfg.stages) throw config_error(source + ": stage count does not match expected");
        cfg.name = expected->name;
        cfg.triggers = expected->triggers;
    }
    if (cfg.triggers.empty()) cfg.triggers = default_triggers(cfg.stages);

    Network net(std::move(cfg));
    const auto& c = net.config();
    auto read_tables = [&](auto get, const char* what) {
        for (unsigned s = 0; s < c.stages; ++s)
            for (std::size_t i = 0; i < c.tuples.size(); ++i) {
                std::span<float> dst = get(s, i);
                rd.bytes(dst.data(), dst.size_bytes(), what);
            }
    };
    read_tables([&](unsigned s, std::size_t i) { return net.weights(s, i); }, "weights");
    if (!rd.at_eof()) {
        std::uint8_t tc = 0;
        rd.bytes(&tc, 1, "TC flag");
        if (tc > 1) throw io_error(source + ": bad TC flag");
        if (tc) {
            net.enable_tc();
            read_tables([&](unsigned s, std::size_t i) { return net.tc_errors(s, i); }, "TC errors");
            read_tables([&](unsigned s, std::size_t i) { return net.tc_abs_errors(s, i); }, "TC absolute errors");
        }
        if (!rd.at_eof()) throw io_error(source + ": trailing bytes after weight data");
    }
    return net;
}

inline Network load(const std::filesystem::path& path, const NetworkConfig* expected = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open weight file '" + path.string() + "'");
    return load(in, path.string(), expected);
}

} // namespace otd
