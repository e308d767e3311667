// SPDX-License-Identifier: Apache-2.0
#include "qfill/cli/cli.hpp"

#include "qfill/backtest/backtest.hpp"
#include "qfill/common/digest.hpp"
#include "qfill/common/error.hpp"
#include "qfill/common/parallel.hpp"
#include "qfill/core/dataset.hpp"
#include "qfill/cqem/cqem.hpp"
#include "qfill/pqfm/pqfm.hpp"
#include "qfill/preprocess/scaler.hpp"
#include "qfill/synth/synth.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace qfill::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kSubcommands{"gen", "pqfm", "match", "backtest", "report", "repro"};

struct Output {
    std::string flag;
    fs::path path;
    bool directory = false;
    std::vector<std::string> files;  ///< for directories
};

/// What a subcommand did, for its manifest.
struct RunInfo {
    std::vector<std::string> canonical_args;
    std::vector<fs::path> inputs;
    std::vector<fs::path> configs;
    std::vector<Output> outputs;
    std::optional<std::uint64_t> seed;
};

json parse_json_file(const fs::path &p) {
    const auto text = read_file(p);
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        throw Error(ErrorKind::ConfigParse, p.string() + ": " + e.what());
    }
}

fs::path absolute(const std::string &s) { return fs::absolute(fs::path(s)).lexically_normal(); }

void write_json_file(const fs::path &p, const json &j) { write_file(p, j.dump(2) + "\n"); }

std::vector<std::string> global_args(const std::optional<std::uint64_t> &seed) {
    if (seed) {
        return {"--seed", std::to_string(*seed)};
    }
    return {};
}

void ensure_parent(const fs::path &p) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
}

json error_json(std::string_view kind, const std::string &message,
                std::optional<std::size_t> row = std::nullopt) {
    json j = {{"error", kind}, {"message", message}};
    if (row) {
        j["row"] = *row;
    }
    return j;
}

// ------------------------------------------------------------- subcommands

struct GenArgs {
    std::string config, out, truth;
};

RunInfo cmd_gen(const GenArgs &a, std::optional<std::uint64_t> seed, std::ostream &out) {
    RunInfo info;
    const auto cfg_path = absolute(a.config), out_path = absolute(a.out);
    auto cfg = synth::config_from_json(parse_json_file(cfg_path));
    if (seed) {
        cfg.base_seed = *seed;
    }
    const auto gen = synth::generate(cfg);
    ensure_parent(out_path);
    save_dataset(gen.dataset, out_path);
    info.canonical_args = {"gen", "--config", cfg_path.string(), "--out", out_path.string()};
    info.configs.push_back(cfg_path);
    info.outputs.push_back({"--out", out_path, false, {}});
    if (!a.truth.empty()) {
        const auto truth_path = absolute(a.truth);
        ensure_parent(truth_path);
        write_json_file(truth_path, {{"config", synth::to_json(cfg)},
                                     {"truth", synth::to_json(gen.truth)},
                                     {"innovation_scale", gen.innovation_scale},
                                     {"plant_report", synth::plant_report(gen.truth, gen.dataset)}});
        info.canonical_args.insert(info.canonical_args.end(), {"--truth", truth_path.string()});
        info.outputs.push_back({"--truth", truth_path, false, {}});
    }
    info.seed = cfg.base_seed;
    json stats = to_json(summarize(gen.dataset));
    stats.erase("per_feature");
    stats["innovation_scale"] = gen.innovation_scale;
    out << stats.dump() << "\n";
    return info;
}

struct PqfmArgs {
    std::string in, out, config, preset, scaler_out;
    std::optional<std::size_t> qubits;
};

RunInfo cmd_pqfm(const PqfmArgs &a, std::optional<std::uint64_t> seed, std::ostream &out) {
    RunInfo info;
    const auto in_path = absolute(a.in), out_path = absolute(a.out);
    info.canonical_args = {"pqfm", "--in", in_path.string(), "--out", out_path.string()};
    pqfm::AnsatzConfig cfg;
    if (!a.config.empty()) {
        const auto cfg_path = absolute(a.config);
        cfg = pqfm::ansatz_from_json(parse_json_file(cfg_path));
        info.configs.push_back(cfg_path);
        info.canonical_args.insert(info.canonical_args.end(), {"--config", cfg_path.string()});
    } else {
        cfg = pqfm::preset(a.preset.empty() ? "shorter" : a.preset);
        info.canonical_args.insert(info.canonical_args.end(),
                                   {"--preset", a.preset.empty() ? "shorter" : a.preset});
    }
    if (a.qubits) {
        cfg.qubits = *a.qubits;
        info.canonical_args.insert(info.canonical_args.end(),
                                   {"--qubits", std::to_string(*a.qubits)});
    }
    if (seed) {
        cfg.noise.noise_seed = *seed;
    }
    try {
        cfg.validate();
    } catch (const Error &e) {
        throw Error(ErrorKind::ConfigParse, e.what());
    }
    const auto data = load_dataset(in_path);
    info.inputs.push_back(in_path);
    pqfm::Transformer t(cfg, preprocess::fit_scaler(data));
    const auto q = t.transform_batch(data);
    ensure_parent(out_path);
    save_dataset(q, out_path);
    info.outputs.push_back({"--out", out_path, false, {}});
    if (!a.scaler_out.empty()) {
        const auto sp = absolute(a.scaler_out);
        ensure_parent(sp);
        write_json_file(sp, {{"scaler", preprocess::to_json(t.scaler())},
                             {"ansatz", pqfm::to_json(cfg)}});
        info.canonical_args.insert(info.canonical_args.end(), {"--scaler-out", sp.string()});
        info.outputs.push_back({"--scaler-out", sp, false, {}});
    }
    info.seed = cfg.noise.noise_seed;
    out << json{{"events", q.size()},
                {"output_dim", q.feature_count()},
                {"capacity", t.assignment().capacity()},
                {"ansatz", pqfm::to_json(cfg)}}
               .dump()
        << "\n";
    return info;
}

struct MatchArgs {
    std::string sample, classical_sample, pool, out, report;
    std::size_t bins = 30;
    bool include_source = false;
};

RunInfo cmd_match(const MatchArgs &a, std::ostream &out) {
    RunInfo info;
    const auto qs = absolute(a.sample), cs = absolute(a.classical_sample), pool = absolute(a.pool),
               out_path = absolute(a.out);
    cqem::MatchConfig cfg;
    cfg.n_bins = a.bins;
    cfg.exclude_source = !a.include_source;
    cfg.validate();
    const auto q = load_dataset(qs, "pqfm-sim");
    const auto c = load_dataset(cs);
    const auto p = load_dataset(pool);
    info.inputs = {qs, cs, pool};
    const auto index = cqem::build_index(c, q, cfg);
    const auto matched = cqem::match_events(index, p, cfg);
    ensure_parent(out_path);
    save_dataset(matched, out_path);
    info.outputs.push_back({"--out", out_path, false, {}});
    info.canonical_args = {"match",  "--sample", qs.string(),   "--classical-sample",
                           cs.string(), "--pool", pool.string(), "--bins",
                           std::to_string(a.bins), "--out", out_path.string()};
    if (a.include_source) {
        info.canonical_args.push_back("--include-source");
    }
    const auto report = cqem::to_json(cqem::make_report(index, p, matched, cfg));
    if (!a.report.empty()) {
        const auto rp = absolute(a.report);
        ensure_parent(rp);
        write_json_file(rp, report);
        info.canonical_args.insert(info.canonical_args.end(), {"--report", rp.string()});
        info.outputs.push_back({"--report", rp, false, {}});
    }
    out << report.dump() << "\n";
    return info;
}

struct BacktestArgs {
    std::string config, sources, out;
};

std::vector<std::pair<std::string, fs::path>> parse_sources(const std::string &spec) {
    std::vector<std::pair<std::string, fs::path>> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
            throw Error(ErrorKind::InvalidArgument,
                        "sources must look like name=path[,name=path...], got '" + item + "'");
        }
        out.emplace_back(item.substr(0, eq), absolute(item.substr(eq + 1)));
    }
    if (out.empty()) {
        throw Error(ErrorKind::InvalidArgument, "no sources given");
    }
    return out;
}

const std::vector<std::string> kBacktestFiles{"records.csv", "summary.json", "decay.svg",
                                              "feature_hist.svg"};

RunInfo cmd_backtest(const BacktestArgs &a, std::optional<std::uint64_t> seed, std::ostream &out) {
    RunInfo info;
    const auto cfg_path = absolute(a.config), out_dir = absolute(a.out);
    const auto src_list = parse_sources(a.sources);
    std::vector<backtest::Source> sources;
    std::string canonical_sources;
    for (const auto &[name, path] : src_list) {
        sources.push_back({name, load_dataset(path, name)});
        info.inputs.push_back(path);
        canonical_sources += (canonical_sources.empty() ? "" : ",") + name + "=" + path.string();
    }
    auto cfg = backtest::config_from_json(parse_json_file(cfg_path),
                                          sources.front().dataset.feature_count());
    info.configs.push_back(cfg_path);
    if (seed) {
        cfg.master_seed = *seed;
    }
    const auto result = backtest::run_protocol(cfg, sources);
    backtest::emit_report(result, sources, out_dir);
    info.canonical_args = {"backtest", "--config", cfg_path.string(), "--sources",
                           canonical_sources, "--out", out_dir.string()};
    info.outputs.push_back({"--out", out_dir, true, kBacktestFiles});
    info.seed = cfg.master_seed;
    out << json{{"records", result.records.size()},
                {"skipped", result.skipped.size()},
                {"sources", result.sources}}
               .dump()
        << "\n";
    return info;
}

struct ReportArgs {
    std::string records, baseline, out;
    std::size_t buckets = 5;
};

const std::vector<std::string> kReportFiles{"table.txt", "comparison.json", "decay.svg"};

RunInfo cmd_report(const ReportArgs &a, std::ostream &out) {
    RunInfo info;
    const auto rec = absolute(a.records), out_dir = absolute(a.out);
    const auto result = backtest::parse_records_csv(read_file(rec), a.buckets);
    info.inputs.push_back(rec);
    const auto table = backtest::compare_sources(result, a.baseline);
    const auto text = backtest::render_table(table);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create " + out_dir.string());
    }
    write_file(out_dir / "table.txt", text);
    json cmp = json::array();
    for (std::size_t s = 0; s < table.sources.size(); ++s) {
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            for (std::size_t b = 0; b < table.buckets; ++b) {
                const auto &c = table.cells[s][r][b];
                cmp.push_back({{"source", table.sources[s]},
                               {"model", table.rows[r]},
                               {"bucket", b},
                               {"median_auc", std::isfinite(c.median) ? json(c.median) : json()},
                               {"std_auc", std::isfinite(c.std) ? json(c.std) : json()},
                               {"diff_pp", c.diff_pp},
                               {"diff", backtest::format_diff(c.diff_pp)}});
            }
        }
    }
    write_json_file(out_dir / "comparison.json", {{"baseline", a.baseline}, {"cells", cmp}});
    write_file(out_dir / "decay.svg", backtest::decay_svg(result));
    info.canonical_args = {"report",  "--records", rec.string(), "--baseline", a.baseline,
                           "--buckets", std::to_string(a.buckets), "--out", out_dir.string()};
    info.outputs.push_back({"--out", out_dir, true, kReportFiles});
    out << text;
    return info;
}

// ---------------------------------------------------------------- manifest

json output_digests(const Output &o) {
    if (o.directory) {
        json files = json::object();
        for (const auto &f : o.files) {
            files[f] = sha256_file(o.path / f);
        }
        return {{"path", o.path.string()}, {"directory", true}, {"files", files}};
    }
    return {{"path", o.path.string()}, {"directory", false}, {"sha256", sha256_file(o.path)}};
}

void write_manifest(const RunInfo &info, double elapsed_ms) {
    json inputs = json::object(), configs = json::object(), outputs = json::object();
    for (const auto &p : info.inputs) {
        inputs[p.string()] = sha256_file(p);
    }
    for (const auto &p : info.configs) {
        configs[p.string()] = sha256_file(p);
    }
    for (const auto &o : info.outputs) {
        outputs[o.flag] = output_digests(o);
    }
    auto args = global_args(info.seed);
    args.insert(args.end(), info.canonical_args.begin(), info.canonical_args.end());
    const json m = {{"tool", "qfill"},
                    {"version", kToolVersion},
                    {"command", info.canonical_args.front()},
                    {"args", args},
                    {"master_seed", info.seed ? json(*info.seed) : json()},
                    {"configs", configs},
                    {"inputs", inputs},
                    {"outputs", outputs},
                    {"timing_ms", elapsed_ms}};
    const auto &primary = info.outputs.front();
    write_json_file(manifest_path_for(primary.path, primary.directory), m);
}

int cmd_repro(const std::string &manifest_file, std::ostream &out, std::ostream &err) {
    const auto m = parse_json_file(absolute(manifest_file));
    std::vector<std::string> args;
    json outputs;
    try {
        args = m.at("args").get<std::vector<std::string>>();
        outputs = m.at("outputs");
        for (const auto *section : {"inputs", "configs"}) {
            for (const auto &[path, digest] : m.at(section).items()) {
                if (sha256_file(path) != digest.get<std::string>()) {
                    err << error_json("ReproMismatch", "input changed: " + path).dump() << "\n";
                    return kExitFailure;
                }
            }
        }
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ConfigParse, std::string("manifest: ") + e.what());
    }

    std::random_device rd;
    const fs::path tmp = fs::temp_directory_path() /
                         ("qfill-repro-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(tmp);
    struct Cleanup {
        fs::path p;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    } cleanup{tmp};

    // Redirect every output flag into the scratch directory.
    std::map<std::string, fs::path> redirected;
    std::size_t k = 0;
    for (const auto &[flag, o] : outputs.items()) {
        const fs::path orig = o.at("path").get<std::string>();
        const fs::path dst = tmp / std::to_string(k++) / orig.filename();
        fs::create_directories(dst.parent_path());
        redirected[flag] = dst;
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] == flag) {
                args[i + 1] = dst.string();
            }
        }
    }
    std::ostringstream sink_out, sink_err;
    const int rc = run(args, sink_out, sink_err);
    if (rc != kExitOk) {
        err << error_json("ReproMismatch", "re-run failed: " + sink_err.str()).dump() << "\n";
        return kExitFailure;
    }
    json mismatches = json::array();
    std::size_t compared = 0;
    for (const auto &[flag, o] : outputs.items()) {
        const auto &dst = redirected[flag];
        if (o.at("directory").get<bool>()) {
            for (const auto &[name, digest] : o.at("files").items()) {
                ++compared;
                if (sha256_file(dst / name) != digest.get<std::string>()) {
                    mismatches.push_back(o.at("path").get<std::string>() + "/" + name);
                }
            }
        } else {
            ++compared;
            if (sha256_file(dst) != o.at("sha256").get<std::string>()) {
                mismatches.push_back(o.at("path").get<std::string>());
            }
        }
    }
    const bool ok = mismatches.empty();
    out << json{{"verified", ok}, {"files_compared", compared}, {"mismatches", mismatches}}.dump()
        << "\n";
    if (!ok) {
        err << error_json("ReproMismatch", "output digests differ").dump() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

bool is_unknown_subcommand(const std::vector<std::string> &args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        const auto &a = args[i];
        if (a == "--threads" || a == "--seed") {
            ++i;
            continue;
        }
        if (a.rfind("-", 0) == 0) {
            continue;
        }
        return kSubcommands.count(a) == 0;
    }
    return false;
}

} // namespace

fs::path manifest_path_for(const fs::path &output, bool is_directory) {
    if (is_directory) {
        return output / "manifest.json";
    }
    return fs::path(output.string() + ".manifest.json");
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"qfill: quantum feature map fill-probability lab", "qfill"};
    app.require_subcommand(1);
    app.fallthrough();
    std::optional<std::size_t> threads;
    std::optional<std::uint64_t> seed;
    app.add_option("--threads", threads, "Worker thread cap (default: QFILL_THREADS or all cores)");
    app.add_option("--seed", seed, "Master seed override");

    GenArgs gen;
    auto *g = app.add_subcommand("gen", "Generate a synthetic event stream");
    g->add_option("--config", gen.config, "Synthetic generator JSON")->required();
    g->add_option("--out", gen.out, "Output CSV")->required();
    g->add_option("--truth", gen.truth, "Ground truth JSON output");

    PqfmArgs pq;
    auto *p = app.add_subcommand("pqfm", "Transform events with the quantum feature map");
    p->add_option("--in", pq.in, "Input CSV")->required();
    p->add_option("--out", pq.out, "Output CSV")->required();
    auto *pc = p->add_option("--config", pq.config, "Ansatz JSON");
    p->add_option("--preset", pq.preset, "shorter | longer")->excludes(pc);
    p->add_option("--qubits", pq.qubits, "Qubit count override");
    p->add_option("--scaler-out", pq.scaler_out, "Write fitted scaler and ansatz JSON");

    MatchArgs ma;
    auto *mt = app.add_subcommand("match", "Reuse quantum features for unseen matching events");
    mt->add_option("--sample", ma.sample, "Quantum-transformed sample CSV")->required();
    mt->add_option("--classical-sample", ma.classical_sample, "Classical sample CSV")->required();
    mt->add_option("--pool", ma.pool, "Classical events to match")->required();
    mt->add_option("--bins", ma.bins, "Bins per feature over [-1, 1]");
    mt->add_option("--out", ma.out, "Matched output CSV")->required();
    mt->add_option("--report", ma.report, "Side report JSON output");
    mt->add_flag("--include-source", ma.include_source, "Do not exclude the sample's own events");

    BacktestArgs bt;
    auto *b = app.add_subcommand("backtest", "Run the walk-forward backtest");
    b->add_option("--config", bt.config, "Backtest JSON")->required();
    b->add_option("--sources", bt.sources, "name=path[,name=path...]")->required();
    b->add_option("--out", bt.out, "Output directory")->required();

    ReportArgs rp;
    auto *r = app.add_subcommand("report", "Compare sources from backtest records");
    r->add_option("--records", rp.records, "records.csv from a backtest")->required();
    r->add_option("--baseline", rp.baseline, "Baseline source name")->required();
    r->add_option("--buckets", rp.buckets, "Blinding buckets");
    r->add_option("--out", rp.out, "Output directory")->required();

    std::string manifest;
    auto *rr = app.add_subcommand("repro", "Re-run a manifest and verify output digests");
    rr->add_option("--manifest", manifest, "Manifest JSON")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        const bool unknown = is_unknown_subcommand(args);
        err << error_json(unknown ? "UnknownSubcommand" : "UsageError", e.what()).dump() << "\n";
        return kExitUsage;
    }

    if (threads) {
        set_thread_count(*threads);
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
        RunInfo info;
        if (*rr) {
            return cmd_repro(manifest, out, err);
        }
        if (*g) {
            info = cmd_gen(gen, seed, out);
        } else if (*p) {
            info = cmd_pqfm(pq, seed, out);
        } else if (*mt) {
            info = cmd_match(ma, out);
            info.seed = seed;
        } else if (*b) {
            info = cmd_backtest(bt, seed, out);
        } else if (*r) {
            info = cmd_report(rp, out);
            info.seed = seed;
        }
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        write_manifest(info, ms);
        return kExitOk;
    } catch (const Error &e) {
        err << error_json(to_string(e.kind()), e.message(), e.row()).dump() << "\n";
        return e.kind() == ErrorKind::ConfigParse || e.kind() == ErrorKind::UnknownPreset
                   ? kExitConfig
                   : kExitFailure;
    } catch (const std::exception &e) {
        err << error_json("Internal", e.what()).dump() << "\n";
        return kExitFailure;
    }
}

} // namespace qfill::cli
