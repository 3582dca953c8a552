#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "otd2048/errors.hpp"
#include "otd2048/learner.hpp"
#include "otd2048/search.hpp"
#include "otd2048/tuple.hpp"

namespace otd {

inline constexpr const char* kVersion = "1.0.0";

/**
 * Everything a training run needs. Stage k (1-based) trains with stage_train[k-1];
 * stage 1 uses the [train] section, later stages start from it and apply their
 * [stage.k] overrides.
 */
struct RunConfig {
    NetworkConfig network;
    std::filesystem::path geometry; // absolute
    std::vector<TrainConfig> stage_train;
    SearchConfig search;
    std::filesystem::path output = ".";
    /// [train] threads was given; otherwise callers may substitute an environment default.
    bool threads_explicit = false;

    const TrainConfig& train() const { return stage_train.front(); }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Typed access to one section; every error names "[section] key".
class Section {
public:
    Section(const boost::property_tree::ptree& tree, std::string name, std::string source)
        : tree_(tree), name_(std::move(name)), source_(std::move(source)) {}

    const std::string& name() const { return name_; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw config_error(source_ + ": [" + name_ + "] " + key + ": " + what);
    }

    std::optional<std::string> raw(const std::string& key) const {
        const auto child = tree_.get_child_optional(boost::property_tree::ptree::path_type(key, '\0'));
        if (!child) return std::nullopt;
        return trim(child->data());
    }

    template <class T>
    std::optional<T> number(const std::string& key) const {
        const auto s = raw(key);
        if (!s) return std::nullopt;
        T v{};
        const auto [end, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
        if (ec != std::errc() || end != s->data() + s->size() || s->empty())
            fail(key, "expected a number, got '" + *s + "'");
        return v;
    }

    std::optional<bool> boolean(const std::string& key) const {
        const auto s = raw(key);
        if (!s) return std::nullopt;
        if (*s == "true" || *s == "yes" || *s == "on" || *s == "1") return true;
        if (*s == "false" || *s == "no" || *s == "off" || *s == "0") return false;
        fail(key, "expected true or false, got '" + *s + "'");
    }

    std::vector<std::string> list(const std::string& key) const {
        std::vector<std::string> out;
        const auto s = raw(key);
        if (!s) return out;
        std::stringstream ss(*s);
        for (std::string item; std::getline(ss, item, ',');)
            if (auto t = trim(item); !t.empty()) out.push_back(t);
        return out;
    }

    void only(std::initializer_list<const char*> allowed) const {
        for (const auto& [key, value] : tree_) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) fail(key, "unknown key");
        }
    }

private:
    const boost::property_tree::ptree& tree_;
    std::string name_;
    std::string source_;
};

inline StageTrigger parse_trigger(const Section& sec) {
    StageTrigger t;
    for (const auto& item : sec.list("trigger")) {
        std::uint64_t v = 0;
        const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || end != item.data() + item.size() || v < 2 || !std::has_single_bit(v))
            sec.fail("trigger", "expected comma-separated tile values (powers of two), got '" + item + "'");
        t.exponents.push_back(std::countr_zero(v));
    }
    std::sort(t.exponents.begin(), t.exponents.end(), std::greater<>());
    return t;
}

/// b holds every tile of a (k-th largest against k-th largest) and is not equal to a.
inline bool strictly_above(const StageTrigger& b, const StageTrigger& a) {
    if (b.exponents.size() < a.exponents.size() || b == a) return false;
    for (std::size_t k = 0; k < a.exponents.size(); ++k)
        if (b.exponents[k] < a.exponents[k]) return false;
    return true;
}

inline constexpr std::initializer_list<const char*> kTrainKeys = {
    "episodes", "v_init", "p_tc", "alpha_td", "alpha_decay", "alpha_tc", "eval_interval", "eval_episodes",
    "threads", "seed", "order", "pool_capacity"};

inline void apply_train_keys(const Section& sec, TrainConfig& cfg) {
    if (auto v = sec.number<std::uint64_t>("episodes")) cfg.episodes = *v;
    if (auto v = sec.number<double>("v_init")) cfg.v_init = *v;
    if (auto v = sec.number<double>("p_tc")) cfg.p_tc = *v;
    if (auto v = sec.number<double>("alpha_td")) cfg.alpha_td = *v;
    if (auto v = sec.boolean("alpha_decay")) cfg.alpha_decay = *v;
    if (auto v = sec.number<double>("alpha_tc")) cfg.alpha_tc = *v;
    if (auto v = sec.number<std::uint64_t>("eval_interval")) cfg.eval_interval = *v;
    if (auto v = sec.number<std::uint64_t>("eval_episodes")) cfg.eval_episodes = *v;
    if (auto v = sec.number<unsigned>("threads")) cfg.threads = *v;
    if (auto v = sec.number<std::uint64_t>("seed")) cfg.seed = *v;
    if (auto v = sec.number<std::size_t>("pool_capacity")) cfg.pool_capacity = *v;
    if (auto v = sec.raw("order")) {
        if (*v == "backward")
            cfg.order = UpdateOrder::backward;
        else if (*v == "forward")
            cfg.order = UpdateOrder::forward;
        else
            sec.fail("order", "expected backward or forward, got '" + *v + "'");
    }
    // re-throw validation failures against the key that caused them
    auto check = [&](const char* key, bool ok, const char* what) {
        if (!ok) sec.fail(key, what);
    };
    check("p_tc", cfg.p_tc >= 0 && cfg.p_tc <= 1, "must be in [0, 1]");
    check("v_init", cfg.v_init >= 0, "must be >= 0");
    check("alpha_td", cfg.alpha_td > 0 && cfg.alpha_td <= 1, "must be in (0, 1]");
    check("alpha_tc", cfg.alpha_tc > 0 && cfg.alpha_tc <= 1, "must be in (0, 1]");
    check("threads", cfg.threads >= 1, "must be >= 1");
    check("pool_capacity", cfg.pool_capacity >= 1, "must be >= 1");
}

} // namespace detail

/**
 * Parses a run configuration. Relative geometry and output paths resolve
 * against `base_dir` (the config file's directory). Errors name the
 * offending section and key.
 */
inline RunConfig parse_run_config(std::istream& in, const std::string& source,
                                  const std::filesystem::path& base_dir) {
    namespace pt = boost::property_tree;
    // '#' comments are stripped here; the INI reader only knows ';'
    std::ostringstream cleaned;
    for (std::string line; std::getline(in, line);) {
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        cleaned << line << '\n';
    }
    pt::ptree tree;
    try {
        std::istringstream text(cleaned.str());
        pt::read_ini(text, tree);
    } catch (const pt::ini_parser_error& e) {
        throw config_error(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    RunConfig run;
    const pt::ptree empty;
    for (const auto& [name, node] : tree) {
        if (node.empty() && !node.data().empty())
            throw config_error(source + ": key '" + name + "' outside any section");
        if (name != "network" && name != "train" && name != "search" && name != "manifest" && name.rfind("stage.", 0) != 0)
            throw config_error(source + ": unknown section [" + name + "]");
    }
    auto child_of = [&](const std::string& name) -> const pt::ptree& {
        const auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
        return child ? *child : empty;
    };
    auto section = [&](const std::string& name) { return detail::Section(child_of(name), name, source); };

    const auto net = section("network");
    net.only({"name", "geometry", "cardinality", "stages"});
    run.network.name = net.raw("name").value_or("network");
    if (run.network.name.empty() || run.network.name.find('/') != std::string::npos)
        net.fail("name", "must be a non-empty file-name stem");
    const auto geometry = net.raw("geometry");
    if (!geometry) net.fail("geometry", "required");
    run.geometry = std::filesystem::absolute(base_dir / *geometry).lexically_normal();
    try {
        run.network.tuples = load_geometry(run.geometry);
    } catch (const config_error& e) {
        net.fail("geometry", e.what());
    }
    run.network.cardinality = net.number<unsigned>("cardinality").value_or(kDefaultCardinality);
    if (run.network.cardinality < 3 || run.network.cardinality > kMaxCardinality)
        net.fail("cardinality", "must be in [3, 16]");
    run.network.stages = net.number<unsigned>("stages").value_or(1);
    if (run.network.stages < 1 || run.network.stages > 16) net.fail("stages", "must be in [1, 16]");

    const auto train = section("train");
    std::vector<const char*> train_keys(detail::kTrainKeys);
    train_keys.push_back("output");
    for (const auto& [key, value] : child_of("train")) {
        if (std::find_if(train_keys.begin(), train_keys.end(), [&](const char* k) { return key == k; }) ==
            train_keys.end())
            train.fail(key, "unknown key");
    }
    TrainConfig base;
    detail::apply_train_keys(train, base);
    run.threads_explicit = train.raw("threads").has_value();
    if (base.episodes == 0 && !train.raw("episodes")) train.fail("episodes", "required");
    const auto out = train.raw("output");
    run.output = std::filesystem::absolute(base_dir / out.value_or(".")).lexically_normal();
    if (!run.output.has_filename()) run.output = run.output.parent_path();
    run.stage_train.push_back(base);

    const auto defaults = default_triggers(run.network.stages);
    for (unsigned k = 2; k <= run.network.stages; ++k) {
        const auto sec = section("stage." + std::to_string(k));
        std::vector<const char*> keys(detail::kTrainKeys);
        keys.push_back("trigger");
        for (const auto& [key, value] : child_of(sec.name()))
            if (std::find_if(keys.begin(), keys.end(), [&](const char* x) { return key == x; }) == keys.end())
                sec.fail(key, "unknown key");
        TrainConfig cfg = base;
        detail::apply_train_keys(sec, cfg);
        run.stage_train.push_back(cfg);
        StageTrigger trig = sec.raw("trigger") ? detail::parse_trigger(sec) : defaults[k - 2];
        if (trig.exponents.empty()) sec.fail("trigger", "needs at least one tile");
        for (int e : trig.exponents)
            if (static_cast<unsigned>(e) >= run.network.cardinality) sec.fail("trigger", "tile exceeds the cardinality");
        if (!run.network.triggers.empty() && !detail::strictly_above(trig, run.network.triggers.back()))
            sec.fail("trigger", "must strictly dominate the previous stage's trigger");
        run.network.triggers.push_back(std::move(trig));
    }
    for (const auto& [name, node] : tree)
        if (name.rfind("stage.", 0) == 0) {
            const auto k = name.substr(6);
            unsigned idx = 0;
            const auto [end, ec] = std::from_chars(k.data(), k.data() + k.size(), idx);
            if (ec != std::errc() || end != k.data() + k.size() || idx < 2 || idx > run.network.stages)
                throw config_error(source + ": section [" + name + "] does not match [network] stages = " +
                                   std::to_string(run.network.stages));
        }

    const auto search = section("search");
    search.only({"plies", "tt_mb", "downgrade"});
    run.search.plies = search.number<unsigned>("plies").value_or(1);
    if (run.search.plies < 1) search.fail("plies", "must be >= 1");
    const auto tt_mb = search.number<std::size_t>("tt_mb").value_or(64);
    run.search.tt_bytes = tt_mb << 20;
    if (tt_mb != 0 && !std::has_single_bit(tt_mb)) search.fail("tt_mb", "must be 0 or a power of two");
    run.search.downgrade = search.boolean("downgrade").value_or(false);

    run.network.validate();
    return run;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path.string() + "'");
    return parse_run_config(in, path.string(), std::filesystem::absolute(path).parent_path());
}

namespace detail {

inline std::string format_tiles(const StageTrigger& t) {
    std::string s;
    for (std::size_t i = 0; i < t.exponents.size(); ++i) s += (i ? ", " : "") + std::to_string(tile_value(t.exponents[i]));
    return s;
}

/// Shortest text that parses back to the same double.
inline std::string exact(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline void write_train_keys(std::ostream& out, const TrainConfig& c) {
    out << "episodes = " << c.episodes << '\n'
        << "v_init = " << exact(c.v_init) << '\n'
        << "p_tc = " << exact(c.p_tc) << '\n'
        << "alpha_td = " << exact(c.alpha_td) << '\n'
        << "alpha_decay = " << (c.alpha_decay ? "true" : "false") << '\n'
        << "alpha_tc = " << exact(c.alpha_tc) << '\n'
        << "eval_interval = " << c.eval_interval << '\n'
        << "eval_episodes = " << c.eval_episodes << '\n'
        << "threads = " << c.threads << '\n'
        << "seed = " << c.seed << '\n'
        << "order = " << (c.order == UpdateOrder::backward ? "backward" : "forward") << '\n'
        << "pool_capacity = " << c.pool_capacity << '\n';
}

} // namespace detail

/// Canonical config text; parsing it back yields the same RunConfig.
inline std::string format_run_config(const RunConfig& run) {
    std::ostringstream out;
    out << "[network]\n"
        << "name = " << run.network.name << '\n'
        << "geometry = " << run.geometry.string() << '\n'
        << "cardinality = " << run.network.cardinality << '\n'
        << "stages = " << run.network.stages << "\n\n[train]\n";
    detail::write_train_keys(out, run.train());
    out << "output = " << run.output.string() << '\n';
    for (unsigned k = 2; k <= run.network.stages; ++k) {
        out << "\n[stage." << k << "]\n";
        out << "trigger = " << detail::format_tiles(run.network.triggers[k - 2]) << '\n';
        detail::write_train_keys(out, run.stage_train[k - 1]);
    }
    out << "\n[search]\n"
        << "plies = " << run.search.plies << '\n'
        << "tt_mb = " << (run.search.tt_bytes >> 20) << '\n'
        << "downgrade = " << (run.search.downgrade ? "true" : "false") << '\n';
    return out.str();
}

struct ManifestInfo {
    std::string command;
    std::vector<std::string> outputs;
};

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

/// Config snapshot plus a [manifest] section; the file is itself a valid run config.
inline std::string format_manifest(const RunConfig& run, const ManifestInfo& info) {
    std::ostringstream out;
    out << "# otd2048 run manifest: `otd2048 train <this file>` repeats the run\n";
    out << format_run_config(run);
    out << "\n[manifest]\n"
        << "version = " << kVersion << '\n'
        << "start_time = " << utc_timestamp() << '\n'
        << "seed = " << run.train().seed << '\n'
        << "command = " << info.command << '\n';
    std::string outs;
    for (std::size_t i = 0; i < info.outputs.size(); ++i) outs += (i ? ", " : "") + info.outputs[i];
    out << "outputs = " << outs << '\n';
    return out.str();
}

} // namespace otd
