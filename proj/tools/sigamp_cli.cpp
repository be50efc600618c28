// sigamp: generate synthetic incidents, score edge files, stream with
// checkpoints, and backtest against ground truth.
//
// Exit codes: 0 success, 1 an acceptance bound failed, 2 error.
// Every error is one stderr line: "sigamp: error[<code>]: <message>".

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sigamp/backtest.hpp"
#include "sigamp/edge_io.hpp"
#include "sigamp/errors.hpp"
#include "sigamp/run_config.hpp"
#include "sigamp/scenario.hpp"
#include "sigamp/stream_engine.hpp"

namespace fs = std::filesystem;
using namespace sigamp;

namespace {

/// Flag values; unset flags leave the config file's value in place.
struct Flags {
    std::string config;
    std::optional<std::string> edges, truth, out, preset, window, checkpoint_in, checkpoint_out;
    std::optional<std::int64_t> window_days, snapshot_day;
    std::optional<double> threshold, min_precision, min_scr, min_amplification;
    std::optional<std::uint64_t> seed, max_edges, max_calm_flags;
    std::optional<std::size_t> top;
    std::vector<std::string> signals;
    std::vector<double> thresholds;
};

RunConfig resolve(const Flags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    if (f.edges) c.edges = *f.edges;
    if (f.truth) c.truth = *f.truth;
    if (f.out) c.output_dir = *f.out;
    if (f.preset) c.preset = *f.preset;
    if (f.seed) c.seed = *f.seed;
    if (f.window || f.window_days) {
        const std::string mode = f.window.value_or(
            c.window.mode == WindowMode::cumulative ? "cumulative" : "trailing");
        c.window = parse_window(mode, f.window_days.value_or(c.window.days));
    }
    if (f.threshold) c.threshold = *f.threshold;
    if (!f.thresholds.empty()) c.thresholds = f.thresholds;
    if (!f.signals.empty()) c.signals = f.signals;
    if (f.snapshot_day) c.snapshot_day = *f.snapshot_day;
    if (f.top) c.top = *f.top;
    if (f.checkpoint_in) c.checkpoint_in = *f.checkpoint_in;
    if (f.checkpoint_out) c.checkpoint_out = *f.checkpoint_out;
    if (f.max_edges) c.max_edges = *f.max_edges;
    if (f.min_precision) c.bounds.min_precision = *f.min_precision;
    if (f.min_scr) c.bounds.min_scr = *f.min_scr;
    if (f.min_amplification) c.bounds.min_amplification = *f.min_amplification;
    if (f.max_calm_flags) c.bounds.max_calm_flags = *f.max_calm_flags;
    std::sort(c.thresholds.begin(), c.thresholds.end());
    return c;
}

void require_output_dir(const std::string& dir) {
    if (dir.empty()) throw Error(ErrorCode::invalid_argument, "output directory not set (--out)");
    if (!fs::is_directory(dir)) throw Error(ErrorCode::io, "output directory does not exist: " + dir);
}

void require_set(const std::string& value, const char* what) {
    if (value.empty()) throw Error(ErrorCode::invalid_argument, std::string(what) + " not set");
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    return out;
}

std::vector<SignalIndex> select_signals(const SignalRegistry& registry,
                                        const std::vector<std::string>& names) {
    std::vector<SignalIndex> out;
    if (names.empty()) {
        for (SignalIndex k = 0; k < registry.size(); ++k) out.push_back(k);
    }
    for (const auto& name : names) out.push_back(registry.index_of(name));
    return out;
}

std::string fmt_opt(const std::optional<double>& x) {
    return x ? fmt::format("{:.4f}", *x) : std::string("NA");
}

void print_scores(const std::string& signal, const std::vector<NodeScore>& scores,
                  const GlobalBaseline& baseline, std::size_t top) {
    std::cout << fmt::format("# signal={} p_global={:.6f} M={:.6f} nodes={}\n", signal,
                             baseline.p_global(), baseline.prior_strength(), scores.size());
    std::cout << "rank,node,s,t,raw_rate,shrunk_rate,z\n";
    for (std::size_t i = 0; i < std::min(top, scores.size()); ++i) {
        const auto& s = scores[i];
        std::cout << fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f}\n", i + 1, s.node.str(), s.hits,
                                 s.transactions, s.raw_rate, s.shrunk_rate, s.z);
    }
}

void print_inactive(const std::string& signal, const GlobalBaseline& baseline) {
    std::cout << fmt::format("# signal={} inactive: no baseline (p_global={:.6f})\n", signal,
                             baseline.p_global());
}

int cmd_generate(const Flags& flags) {
    const auto c = resolve(flags);
    require_output_dir(c.output_dir);
    const auto config = resolve_scenario(c);
    const auto scenario = generate(config);
    const fs::path dir(c.output_dir);
    {
        auto out = open_out(dir / "edges.csv");
        write_edges(out, scenario.registry, scenario.edges);
    }
    {
        auto out = open_out(dir / "truth.json");
        write_ground_truth(out, scenario.truth);
    }
    {
        auto out = open_out(dir / "scenario.json");
        out << scenario_to_json(config).dump(2) << '\n';
    }
    const auto sybils = scenario.truth.sybil_users.size();
    const auto nodes = scenario.truth.cashout_nodes.size();
    std::cout << fmt::format("generated preset={} seed={} rng=\"{}\"\n", c.preset, config.seed,
                             kRngAlgorithm);
    std::cout << fmt::format("edges={} days={} users={} nodes={}\n", scenario.edges.size(),
                             config.days, config.n_users, config.n_nodes);
    std::cout << fmt::format("sybils={} cashout_nodes={} sybil_node_ratio={}\n", sybils, nodes,
                             nodes == 0 ? std::string("NA")
                                        : fmt::format("{:.1f}", static_cast<double>(sybils) /
                                                                    static_cast<double>(nodes)));
    for (SignalIndex k = 0; k < scenario.registry.size(); ++k) {
        std::cout << fmt::format("signal={} sybil_carriers={}\n", scenario.registry.id(k),
                                 scenario.truth.carrier_count(k));
    }
    return 0;
}

int cmd_backtest(const Flags& flags) {
    const auto c = resolve(flags);
    require_set(c.edges, "edge file (--edges)");
    require_set(c.truth, "ground-truth file (--truth)");
    require_output_dir(c.output_dir);
    const auto file = read_edges_file(c.edges);
    const auto truth = read_ground_truth_file(c.truth);
    if (truth.signals != file.registry.ids()) {
        throw Error(ErrorCode::malformed_input, "ground-truth signals differ from edge file header");
    }

    BacktestOptions options;
    options.window = c.window;
    options.threshold = c.threshold;
    options.thresholds = c.thresholds;
    options.signals = select_signals(file.registry, c.signals);
    options.snapshot_day = c.snapshot_day;
    const auto report = run_backtest(file.registry, file.edges, truth, options);

    const fs::path dir(c.output_dir);
    for (const auto& sr : report.signals) {
        auto out = open_out(dir / ("sweep_" + file.registry.id(sr.signal) + ".csv"));
        write_sweep_csv(out, sr.sweep);
    }
    {
        auto out = open_out(dir / "daily.csv");
        write_daily_csv(out, report.daily, file.registry);
    }
    {
        auto out = open_out(dir / "summary.csv");
        write_summary_csv(out, report, file.registry, c.threshold);
    }
    {
        auto out = open_out(dir / "alerts.jsonl");
        for (const auto& sr : report.signals) {
            for (const auto& alert : sr.alerts) out << serialize_alert(alert, file.registry) << '\n';
        }
    }

    std::cout << fmt::format("backtest snapshot_day={} threshold={:.2f} calm_flags={}\n",
                             report.snapshot_day, c.threshold, report.daily.calm_flags);
    bool ok = true;
    auto check = [&](bool pass, const std::string& name, const std::string& detail) {
        if (!pass) {
            ok = false;
            std::cerr << fmt::format("sigamp: bound-failed[{}]: {}\n", name, detail);
        }
    };
    for (const auto& sr : report.signals) {
        const auto& name = file.registry.id(sr.signal);
        if (!sr.at_threshold) {
            std::cout << fmt::format("signal={} inactive: no baseline\n", name);
            continue;
        }
        const auto& m = *sr.at_threshold;
        std::cout << fmt::format(
            "signal={} nodes={} users={} caught={} precision={:.4f} scr={} coverage={} raw={} "
            "amplification={}\n",
            name, m.flagged_nodes, m.flagged_users, m.caught, m.precision, fmt_opt(m.scr),
            fmt_opt(m.coverage), fmt_opt(sr.raw.precision), fmt_opt(sr.amplification));
    }
    // Bounds apply to the first selected signal.
    if (!report.signals.empty()) {
        const auto& primary = report.signals.front();
        const auto& name = file.registry.id(primary.signal);
        const auto m = primary.at_threshold;
        if (c.bounds.min_precision) {
            check(m && m->precision >= *c.bounds.min_precision, "min_precision",
                  fmt::format("{} precision {} < {}", name, m ? fmt_opt(m->precision) : "NA",
                              *c.bounds.min_precision));
        }
        if (c.bounds.min_scr) {
            check(m && m->scr && *m->scr >= *c.bounds.min_scr, "min_scr",
                  fmt::format("{} scr {} < {}", name, m ? fmt_opt(m->scr) : "NA", *c.bounds.min_scr));
        }
        if (c.bounds.min_amplification) {
            check(primary.amplification && *primary.amplification >= *c.bounds.min_amplification,
                  "min_amplification",
                  fmt::format("{} amplification {} < {}", name, fmt_opt(primary.amplification),
                              *c.bounds.min_amplification));
        }
    }
    if (c.bounds.max_calm_flags) {
        check(report.daily.calm_flags <= *c.bounds.max_calm_flags, "max_calm_flags",
              fmt::format("{} users flagged on calm days > {}", report.daily.calm_flags,
                          *c.bounds.max_calm_flags));
    }
    return ok ? 0 : 1;
}

int cmd_score(const Flags& flags) {
    const auto c = resolve(flags);
    require_set(c.edges, "edge file (--edges)");
    const auto file = read_edges_file(c.edges);
    const auto signals = select_signals(file.registry, c.signals);
    std::vector<TransactionEdge> window;
    if (!file.edges.empty()) {
        std::int64_t last = 0;
        for (const auto& e : file.edges) last = std::max(last, e.day);
        const std::int64_t day = c.snapshot_day.value_or(last);
        const std::int64_t first = c.window.first_day(day);
        for (const auto& e : file.edges) {
            if (e.day >= first && e.day <= day) window.push_back(e);
        }
    }
    const auto accs = aggregate_edges(window, file.registry.size());
    for (const auto signal : signals) {
        const auto& name = file.registry.id(signal);
        const auto baseline = compute_baseline(accs, signal);
        if (is_degenerate(baseline)) {
            print_inactive(name, baseline);
            continue;
        }
        print_scores(name, score_all(accs, baseline, signal), baseline, c.top);
    }
    return 0;
}

int cmd_stream(const Flags& flags) {
    const auto c = resolve(flags);
    require_set(c.edges, "edge file (--edges)");
    std::ifstream in(c.edges);
    if (!in) throw Error(ErrorCode::io, "cannot open edge file: " + c.edges);
    EdgeReader reader(in);

    std::optional<StreamEngine> engine;
    if (!c.checkpoint_in.empty()) {
        std::ifstream ck(c.checkpoint_in);
        if (!ck) throw Error(ErrorCode::io, "cannot open checkpoint: " + c.checkpoint_in);
        engine.emplace(StreamEngine::load_checkpoint(ck));
        if (!(engine->registry() == reader.registry())) {
            throw Error(ErrorCode::malformed_input, "checkpoint signals differ from edge file header");
        }
    } else {
        engine.emplace(reader.registry(), c.window);
    }

    TransactionEdge edge;
    const std::uint64_t skip = engine->edges_ingested();
    for (std::uint64_t i = 0; i < skip; ++i) {
        if (!reader.next(edge)) {
            throw Error(ErrorCode::malformed_input, "edge file shorter than checkpoint offset");
        }
    }
    std::uint64_t consumed = 0;
    bool exhausted = false;
    while (!c.max_edges || consumed < *c.max_edges) {
        if (!reader.next(edge)) {
            exhausted = true;
            break;
        }
        engine->ingest(edge);
        ++consumed;
    }

    if (!c.checkpoint_out.empty()) {
        auto out = open_out(c.checkpoint_out);
        engine->save_checkpoint(out);
    }
    std::cout << fmt::format("stream ingested={} total={} nodes={} day={} finished={}\n", consumed,
                             engine->edges_ingested(), engine->node_count(),
                             engine->current_day() ? std::to_string(*engine->current_day()) : "NA",
                             exhausted ? 1 : 0);
    if (engine->total_transactions() == 0) return 0;
    for (const auto signal : select_signals(engine->registry(), c.signals)) {
        const auto& name = engine->registry().id(signal);
        const auto baseline = engine->baseline(signal);
        if (is_degenerate(baseline)) {
            print_inactive(name, baseline);
            continue;
        }
        const auto scores = engine->score_all(signal);
        print_scores(name, scores, baseline, c.top);
        const auto flagged = flag_nodes(scores, c.threshold);
        std::cout << fmt::format("# signal={} flagged_nodes={} threshold={:.2f}\n", name,
                                 flagged.size(), c.threshold);
    }
    return 0;
}

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("-c,--config", f.config, "JSON run config; flags override it");
}

void add_window(CLI::App* cmd, Flags& f) {
    cmd->add_option("--window", f.window, "cumulative | trailing")
        ->check(CLI::IsMember({"cumulative", "trailing"}));
    cmd->add_option("--window-days", f.window_days, "trailing window length in days");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak-signal amplification at convergence nodes"};
    app.require_subcommand(1);
    Flags f;

    auto* gen = app.add_subcommand("generate", "Write a synthetic edge file and ground truth");
    add_common(gen, f);
    gen->add_option("--preset", f.preset, "case1-desk | case2-desk | calm");
    gen->add_option("--seed", f.seed, "override the scenario seed");
    gen->add_option("-o,--out", f.out, "existing output directory");

    auto* bt = app.add_subcommand("backtest", "Daily replay, threshold sweep and metrics");
    add_common(bt, f);
    bt->add_option("--edges", f.edges, "edge file");
    bt->add_option("--truth", f.truth, "ground-truth file");
    bt->add_option("-o,--out", f.out, "existing output directory for reports");
    bt->add_option("--signal", f.signals, "signal to evaluate (repeatable; default all)");
    add_window(bt, f);
    bt->add_option("--threshold", f.threshold, "alert threshold on z (default 40)");
    bt->add_option("--thresholds", f.thresholds, "sweep thresholds")->delimiter(',');
    bt->add_option("--snapshot-day", f.snapshot_day, "day of the metrics snapshot");
    bt->add_option("--min-precision", f.min_precision, "fail (exit 1) below this precision");
    bt->add_option("--min-scr", f.min_scr, "fail (exit 1) below this SCR");
    bt->add_option("--min-amplification", f.min_amplification, "fail below this factor");
    bt->add_option("--max-calm-flags", f.max_calm_flags, "fail above this many calm-day flags");

    auto* sc = app.add_subcommand("score", "Rank nodes for one window");
    add_common(sc, f);
    sc->add_option("--edges", f.edges, "edge file");
    sc->add_option("--signal", f.signals, "signal to score (repeatable; default all)");
    sc->add_option("--top", f.top, "rows per signal (default 20)");
    sc->add_option("--day", f.snapshot_day, "window end day (default last)");
    add_window(sc, f);

    auto* st = app.add_subcommand("stream", "Per-edge ingestion with checkpoint/resume");
    add_common(st, f);
    st->add_option("--edges", f.edges, "edge file");
    st->add_option("--resume", f.checkpoint_in, "checkpoint to resume from");
    st->add_option("--checkpoint", f.checkpoint_out, "write a checkpoint here when done");
    st->add_option("--max-edges", f.max_edges, "stop after this many edges");
    st->add_option("--signal", f.signals, "signal to report (repeatable; default all)");
    st->add_option("--top", f.top, "rows per signal (default 20)");
    st->add_option("--threshold", f.threshold, "alert threshold on z (default 40)");
    add_window(st, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "sigamp: error[usage]: " << e.what() << '\n';
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(f);
        if (bt->parsed()) return cmd_backtest(f);
        if (sc->parsed()) return cmd_score(f);
        if (st->parsed()) return cmd_stream(f);
    } catch (const Error& e) {
        std::cerr << "sigamp: error[" << to_string(e.code()) << "]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "sigamp: error[internal]: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
