// otd2048: train, evaluate, play and inspect n-tuple networks for 2048.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otd2048/config.hpp"
#include "otd2048/otd2048.hpp"

namespace fs = std::filesystem;
using namespace otd;

namespace {

const auto g_start = std::chrono::steady_clock::now();

void log(const std::string& msg) {
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - g_start).count();
    std::cerr << '[' << std::fixed << std::setprecision(1) << t << "s] " << msg << std::endl;
}

std::optional<unsigned> env_threads() {
    const char* v = std::getenv("OTD2048_THREADS");
    if (!v || !*v) return std::nullopt;
    unsigned n = 0;
    const std::string s(v);
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || end != s.data() + s.size() || n == 0)
        throw config_error("OTD2048_THREADS must be a positive integer, got '" + s + "'");
    return n;
}

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
    return s;
}

/// Loads weights; a run config, when given, supplies the expected geometry and stage triggers.
Network load_weights(const fs::path& path, const std::string& config_path) {
    if (config_path.empty()) return load(path);
    const RunConfig run = load_run_config(config_path);
    return load(path, &run.network);
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
    std::string config;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> episodes;
    std::string out;
};

int cmd_train(const TrainArgs& args, const std::string& command) {
    RunConfig run = load_run_config(args.config);
    std::optional<unsigned> threads = args.threads;
    if (!threads && !run.threads_explicit) threads = env_threads();
    for (auto& cfg : run.stage_train) {
        if (threads) cfg.threads = *threads;
        if (args.seed) cfg.seed = *args.seed;
        if (args.episodes) cfg.episodes = *args.episodes;
    }
    if (!args.out.empty()) run.output = fs::absolute(args.out).lexically_normal();
    run.threads_explicit = true;

    fs::create_directories(run.output);
    const std::string& name = run.network.name;
    const fs::path manifest = run.output / (name + ".manifest.ini");
    const fs::path metrics = run.output / (name + ".metrics.csv");
    const fs::path latest = run.output / (name + ".latest.w");
    {
        std::ofstream out(manifest);
        out << format_manifest(run, {command, {metrics.string(), latest.string()}});
        if (!out) throw io_error("cannot write manifest '" + manifest.string() + "'");
    }
    std::ofstream csv(metrics);
    if (!csv) throw io_error("cannot write metrics file '" + metrics.string() + "'");
    csv << metrics_header() << '\n';

    log("network " + name + ": " + std::to_string(run.network.tuples.size()) + " tuples, " +
        std::to_string(run.network.stages) + " stage(s), " +
        std::to_string(run.network.weight_count() * sizeof(float) >> 20) + " MiB of weights");

    Network net(run.network);
    StagePools pools = make_stage_pools(net.config(), run.train().pool_capacity, run.train().seed);
    std::uint64_t offset = 0; // episodes of earlier stages, for cumulative numbering

    TrainHooks hooks;
    hooks.on_eval = [&](const MetricsRow& row) {
        csv << metrics_row(offset + row.episode, row.report, row.wall_seconds) << '\n' << std::flush;
        std::ostringstream msg;
        msg << "stage " << row.stage + 1 << " episode " << row.episode << ": avg " << std::fixed
            << std::setprecision(0) << row.report.avg_score << ", max " << row.report.max_score << ", 2048 "
            << std::setprecision(1) << row.report.reach_rate(2048) * 100 << "%";
        log(msg.str());
    };
    hooks.on_checkpoint = [&](std::size_t, std::uint64_t episode, const Network& n) {
        const fs::path ckpt = run.output / (name + ".ep" + std::to_string(offset + episode) + ".w");
        save(n, ckpt);
        fs::copy_file(ckpt, latest, fs::copy_options::overwrite_existing);
    };

    for (std::size_t stage = 0; stage < run.network.stages; ++stage) {
        const TrainConfig& cfg = run.stage_train[stage];
        log("stage " + std::to_string(stage + 1) + ": " + std::to_string(cfg.episodes) + " episodes on " +
            std::to_string(cfg.threads) + " thread(s)");
        if (stage == 0)
            train_stage(net, 0, cfg, hooks, &pools);
        else
            train_multistage(net, stage, cfg, pools, hooks);
        offset += cfg.episodes;
        if (stage + 1 < run.network.stages)
            log("stage " + std::to_string(stage + 2) + " pool: " + std::to_string(pools.at(stage + 1).size()) +
                " start states");
    }
    if (offset == 0) save(net, latest);
    log("done: " + latest.string());
    return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
    std::vector<std::string> weights;
    std::uint64_t episodes = 1000;
    unsigned ply = 1;
    bool downgrade = false;
    std::uint64_t seed = 1;
    std::optional<unsigned> threads;
    std::size_t tt_mb = 64;
    std::string data;
    std::string config;
};

int cmd_eval(const EvalArgs& args) {
    const SearchConfig search{args.ply, args.tt_mb << 20, args.downgrade};
    search.validate();
    const unsigned threads = args.threads ? *args.threads : env_threads().value_or(1);
    std::vector<EvalReport> reports;
    for (const auto& path : args.weights) {
        const Network net = load_weights(path, args.config);
        log("evaluating " + path + ": " + std::to_string(args.episodes) + " games, " + std::to_string(args.ply) +
            "-ply" + (args.downgrade ? ", downgrading" : ""));
        reports.push_back(run_eval(net, args.episodes, search, args.seed, {threads}));
        std::cout << "== " << path << '\n' << format_report(reports.back());
    }
    if (reports.size() > 1) std::cout << "== aggregate of " << reports.size() << " runs\n" << format_report(aggregate(reports));
    if (!args.data.empty()) {
        std::ofstream out(args.data);
        if (!out) throw io_error("cannot write data file '" + args.data + "'");
        out << metrics_header() << '\n';
        for (const auto& r : reports) out << metrics_row(r.episodes, r, r.wall_seconds) << '\n';
    }
    return 0;
}

// --- play --------------------------------------------------------------------

struct PlayArgs {
    std::string weights;
    unsigned ply = 1;
    bool downgrade = false;
    std::uint64_t seed = 1;
    std::size_t tt_mb = 64;
    std::string config;
};

int cmd_play(const PlayArgs& args) {
    const Network net = load_weights(args.weights, args.config);
    Expectimax search(net, SearchConfig{args.ply, args.tt_mb << 20, args.downgrade});
    const MoveTable& moves = MoveTable::get(net.cardinality());
    Rng rng = Rng::stream(args.seed, 0);
    Board s = initial_state(rng);
    std::uint64_t score = 0;
    int moves_made = 0;
    std::cout << "start\n" << render(s);
    while (const auto d = search.choose(s)) {
        const auto r = moves.slide(s, d->action);
        score += r->reward;
        s = spawn(r->afterstate, rng);
        std::cout << "\nmove " << ++moves_made << ": " << to_string(d->action) << ", reward " << r->reward << '\n'
                  << render(s);
    }
    std::cout << "\ngame over after " << moves_made << " moves\n"
              << "score " << score << '\n'
              << "max tile " << tile_value(s.max_exponent()) << '\n';
    return 0;
}

// --- inspect -----------------------------------------------------------------

int cmd_inspect(const std::string& path, const std::string& config) {
    const Network net = load_weights(path, config);
    const auto& cfg = net.config();
    std::cout << "file         " << path << '\n'
              << "cardinality  " << cfg.cardinality << '\n'
              << "stages       " << cfg.stages << '\n'
              << "tuples       " << cfg.tuples.size() << '\n'
              << "weights      " << cfg.weight_count() << '\n'
              << "tc section   " << (net.has_tc() ? "yes" : "no") << '\n';
    for (std::size_t i = 0; i < cfg.tuples.size(); ++i) {
        std::cout << "tuple " << i << "     ";
        for (auto p : cfg.tuples[i].cells) std::cout << ' ' << int(p);
        std::cout << '\n';
    }
    for (unsigned s = 0; s < cfg.stages; ++s) {
        if (s > 0) {
            std::cout << "stage " << s + 1 << " trigger";
            for (int e : cfg.triggers[s - 1].exponents) std::cout << ' ' << tile_value(e);
            std::cout << '\n';
        }
        double sum = 0, lo = 0, hi = 0;
        std::size_t n = 0, nonzero = 0;
        for (std::size_t i = 0; i < cfg.tuples.size(); ++i)
            for (float w : net.weights(s, i)) {
                lo = n ? std::min<double>(lo, w) : w;
                hi = n ? std::max<double>(hi, w) : w;
                sum += w;
                nonzero += w != 0.0f;
                ++n;
            }
        std::cout << "stage " << s + 1 << " weights: mean " << sum / static_cast<double>(n) << ", min " << lo
                  << ", max " << hi << ", nonzero " << nonzero << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimistic temporal-difference learning for 2048"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    TrainArgs targs;
    auto* train = app.add_subcommand("train", "train a network from a run config (or a manifest)");
    train->add_option("config", targs.config, "run config file")->required()->check(CLI::ExistingFile);
    train->add_option("--threads", targs.threads, "worker threads (default: config, then $OTD2048_THREADS)")
        ->check(CLI::PositiveNumber);
    train->add_option("--seed", targs.seed, "override the config seed");
    train->add_option("--episodes", targs.episodes, "override every stage's episode budget");
    train->add_option("--out", targs.out, "output directory (default: config's [train] output)");

    EvalArgs eargs;
    auto* eval = app.add_subcommand("eval", "evaluate weight files; several files are aggregated with a 95% CI");
    eval->add_option("weights", eargs.weights, "weight files")->required()->check(CLI::ExistingFile);
    eval->add_option("--episodes,-n", eargs.episodes, "test games per file")->check(CLI::PositiveNumber);
    eval->add_option("--ply", eargs.ply, "expectimax depth in chance layers (1 = greedy)")->check(CLI::PositiveNumber);
    eval->add_flag("--downgrade", eargs.downgrade, "root tile-downgrading");
    eval->add_option("--seed", eargs.seed, "evaluation seed");
    eval->add_option("--threads", eargs.threads, "worker threads")->check(CLI::PositiveNumber);
    eval->add_option("--tt-mb", eargs.tt_mb, "transposition table MiB per thread (power of two, 0 = off)");
    eval->add_option("--data", eargs.data, "write metrics rows to this CSV file");
    eval->add_option("--config", eargs.config, "run config or manifest supplying stage triggers")
        ->check(CLI::ExistingFile);

    PlayArgs pargs;
    auto* play = app.add_subcommand("play", "print the transcript of one game");
    play->add_option("weights", pargs.weights, "weight file")->required()->check(CLI::ExistingFile);
    play->add_option("--ply", pargs.ply, "expectimax depth")->check(CLI::PositiveNumber);
    play->add_flag("--downgrade", pargs.downgrade, "root tile-downgrading");
    play->add_option("--seed", pargs.seed, "game seed");
    play->add_option("--tt-mb", pargs.tt_mb, "transposition table MiB (power of two, 0 = off)");
    play->add_option("--config", pargs.config, "run config or manifest supplying stage triggers")
        ->check(CLI::ExistingFile);

    std::string ipath, iconfig;
    auto* inspect = app.add_subcommand("inspect", "describe a weight file");
    inspect->add_option("weights", ipath, "weight file")->required()->check(CLI::ExistingFile);
    inspect->add_option("--config", iconfig, "run config or manifest supplying stage triggers")
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) return cmd_train(targs, join_args(argc, argv));
        if (*eval) return cmd_eval(eargs);
        if (*play) return cmd_play(pargs);
        if (*inspect) return cmd_inspect(ipath, iconfig);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 3;
    } catch (const io_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
