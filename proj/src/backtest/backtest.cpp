// SPDX-License-Identifier: Apache-2.0
#include "qfill/backtest/backtest.hpp"

#include "qfill/common/digest.hpp"
#include "qfill/common/error.hpp"
#include "qfill/common/parallel.hpp"
#include "qfill/common/rng.hpp"
#include "qfill/learners/auc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace qfill::backtest {

using learners::Family;

namespace {

Timestamp floor_day(Timestamp t) {
    Timestamp d = t / kMicrosPerDay;
    if (t % kMicrosPerDay < 0) {
        --d;
    }
    return d * kMicrosPerDay;
}

std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::string fmt_short(double v, int precision) {
    char buf[32];
    const auto r =
        std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    return std::string(buf, r.ptr);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

void BacktestConfig::validate() const {
    if (training_sizes.empty()) {
        throw Error(ErrorKind::InvalidArgument, "training_sizes must not be empty");
    }
    for (auto s : training_sizes) {
        if (s < 2) {
            throw Error(ErrorKind::InvalidArgument, "training sizes must be >= 2");
        }
    }
    if (buckets == 0) {
        throw Error(ErrorKind::InvalidArgument, "buckets must be >= 1");
    }
    if (families.empty()) {
        throw Error(ErrorKind::InvalidArgument, "families must not be empty");
    }
    if (stride.mode == StrideMode::EveryNth && stride.n == 0) {
        throw Error(ErrorKind::InvalidArgument, "stride n must be >= 1");
    }
    if (folds < 2) {
        throw Error(ErrorKind::InvalidArgument, "folds must be >= 2");
    }
    for (const auto &[f, g] : grids) {
        if (g.empty()) {
            throw Error(ErrorKind::InvalidArgument,
                        "grid for " + std::string(learners::to_string(f)) + " is empty");
        }
        for (const auto &h : g) {
            if (learners::family_of(h) != f) {
                throw Error(ErrorKind::InvalidArgument, "grid cell family mismatch");
            }
        }
    }
}

std::vector<learners::Hyperparams> BacktestConfig::grid_for(Family f, std::size_t p) const {
    const auto it = grids.find(f);
    return it == grids.end() ? compact_grid(f, p) : it->second;
}

std::vector<learners::Hyperparams> compact_grid(Family f, std::size_t p) {
    switch (f) {
    case Family::LR: return {learners::LrParams{}};
    case Family::GBT: return {learners::GbtParams{}};
    case Family::RF: return {learners::RfParams{}};
    case Family::MLP: {
        learners::MlpParams hp;
        hp.hidden = learners::mlp_hidden_sizes(p, 1);
        return {hp};
    }
    }
    return {};
}

nlohmann::json to_json(const BacktestConfig &c) {
    nlohmann::json fams = nlohmann::json::array();
    for (auto f : c.families) {
        fams.push_back(std::string(learners::to_string(f)));
    }
    nlohmann::json grids = nlohmann::json::object();
    for (const auto &[f, g] : c.grids) {
        auto &a = grids[std::string(learners::to_string(f))];
        a = nlohmann::json::array();
        for (const auto &h : g) {
            a.push_back(learners::to_json(h));
        }
    }
    return {{"training_sizes", c.training_sizes},
            {"buckets", c.buckets},
            {"families", fams},
            {"grids", grids},
            {"stride", c.stride.mode == StrideMode::PerDay
                           ? nlohmann::json{{"mode", "per_day"}}
                           : nlohmann::json{{"mode", "every_nth"}, {"n", c.stride.n}}},
            {"folds", c.folds},
            {"master_seed", c.master_seed}};
}

BacktestConfig config_from_json(const nlohmann::json &j, std::size_t feature_count) {
    if (!j.is_object()) {
        throw Error(ErrorKind::ConfigParse, "backtest config must be a JSON object");
    }
    BacktestConfig c;
    try {
        c.training_sizes = j.value("training_sizes", c.training_sizes);
        c.buckets = j.value("buckets", c.buckets);
        if (j.contains("families")) {
            c.families.clear();
            for (const auto &f : j.at("families")) {
                c.families.push_back(learners::family_from_string(f.get<std::string>()));
            }
        }
        if (j.contains("grids")) {
            const auto &g = j.at("grids");
            if (g.is_string()) {
                const auto name = g.get<std::string>();
                if (name == "reference") {
                    for (auto f : c.families) {
                        c.grids[f] = learners::reference_grid(f, feature_count);
                    }
                } else if (name != "compact") {
                    throw Error(ErrorKind::ConfigParse, "unknown grid preset '" + name + "'");
                }
            } else {
                for (const auto &[key, cells] : g.items()) {
                    const Family f = learners::family_from_string(key);
                    auto &dst = c.grids[f];
                    for (const auto &cell : cells) {
                        auto withfam = cell;
                        withfam["family"] = key;
                        dst.push_back(learners::hyperparams_from_json(withfam));
                    }
                }
            }
        }
        if (j.contains("stride")) {
            const auto &s = j.at("stride");
            const auto mode = s.value("mode", std::string("per_day"));
            if (mode == "per_day") {
                c.stride.mode = StrideMode::PerDay;
            } else if (mode == "every_nth") {
                c.stride.mode = StrideMode::EveryNth;
                c.stride.n = s.value("n", std::size_t{1});
            } else {
                throw Error(ErrorKind::ConfigParse, "unknown stride mode '" + mode + "'");
            }
        }
        c.folds = j.value("folds", c.folds);
        c.master_seed = j.value("master_seed", c.master_seed);
        c.validate();
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::ConfigParse, std::string("backtest: ") + e.what());
    } catch (const Error &e) {
        if (e.kind() == ErrorKind::ConfigParse) {
            throw;
        }
        throw Error(ErrorKind::ConfigParse, e.what());
    }
    return c;
}

std::size_t bucketize(Timestamp delta_us) {
    if (delta_us < 1) {
        throw Error(ErrorKind::NonPositiveDelta,
                    "blinding delta must be >= 1 us, got " + std::to_string(delta_us));
    }
    return static_cast<std::size_t>(delta_us / kMicrosPerDay);
}

std::vector<Timestamp> origins(const EventDataset &dataset, const Stride &stride) {
    std::vector<Timestamp> out;
    const auto &ev = dataset.events();
    if (stride.mode == StrideMode::PerDay) {
        for (const auto &e : ev) {
            const Timestamp day = floor_day(e.timestamp);
            if (out.empty() || floor_day(out.back()) != day) {
                out.push_back(e.timestamp);
            }
        }
    } else {
        for (std::size_t i = 0; i < ev.size(); i += stride.n) {
            if (out.empty() || out.back() != ev[i].timestamp) {
                out.push_back(ev[i].timestamp);
            }
        }
    }
    return out;
}

std::optional<TrainingWindow> select_window(const EventDataset &dataset, Timestamp origin,
                                            std::size_t size) {
    const auto &ev = dataset.events();
    const auto end = static_cast<std::size_t>(
        std::lower_bound(ev.begin(), ev.end(), origin,
                         [](const TradeEvent &e, Timestamp t) { return e.timestamp < t; }) -
        ev.begin());
    TrainingWindow w;
    for (std::size_t i = end; i-- > 0 && w.indices.size() < size;) {
        if (ev[i].label) {
            w.indices.push_back(i);
        }
    }
    if (w.indices.size() < size) {
        return std::nullopt;
    }
    std::reverse(w.indices.begin(), w.indices.end());
    w.start = ev[w.indices.front()].timestamp;
    w.end = ev[w.indices.back()].timestamp;
    return w;
}

std::uint64_t fit_seed(std::uint64_t master, Timestamp origin, Family f, std::size_t size) {
    return derive_seed(master, {static_cast<std::uint64_t>(origin),
                                static_cast<std::uint64_t>(f), size});
}

learners::TrainedModel fit_window(const EventDataset &dataset, const TrainingWindow &window,
                                  Family family, std::size_t size, Timestamp origin,
                                  const BacktestConfig &config) {
    const std::size_t p = dataset.feature_count();
    learners::Matrix x(window.indices.size(), p);
    std::vector<int> y;
    y.reserve(window.indices.size());
    for (std::size_t r = 0; r < window.indices.size(); ++r) {
        const auto &e = dataset[window.indices[r]];
        std::copy(e.features.begin(), e.features.end(), x.row(r).begin());
        y.push_back(*e.label);
    }
    const auto pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) {
        throw Error(ErrorKind::SingleClassWindow,
                    "window ending " + std::to_string(window.end) + " holds one class");
    }
    learners::CvConfig cv;
    cv.folds = config.folds;
    cv.seed = fit_seed(config.master_seed, origin, family, size);
    return learners::grid_search_cv(config.grid_for(family, p), x, y, cv);
}

BacktestResult run_protocol(const BacktestConfig &config, const std::vector<Source> &sources) {
    config.validate();
    if (sources.empty()) {
        throw Error(ErrorKind::InvalidArgument, "no sources given");
    }
    {
        std::set<std::string> names;
        for (const auto &s : sources) {
            if (!names.insert(s.name).second) {
                throw Error(ErrorKind::InvalidArgument, "duplicate source '" + s.name + "'");
            }
        }
    }
    const auto &ref = sources.front().dataset;
    for (const auto &s : sources) {
        const auto &d = s.dataset;
        if (d.size() != ref.size()) {
            throw Error(ErrorKind::DimensionMismatch,
                        "source '" + s.name + "' is not aligned with '" + sources.front().name + "'");
        }
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d[i].event_id != ref[i].event_id || d[i].timestamp != ref[i].timestamp ||
                d[i].label != ref[i].label) {
                throw Error(ErrorKind::DimensionMismatch,
                            "source '" + s.name + "' differs from '" + sources.front().name +
                                "' in event metadata",
                            i);
            }
        }
    }

    BacktestResult result;
    for (const auto &s : sources) {
        result.sources.push_back(s.name);
    }
    result.families = config.families;
    result.buckets = config.buckets;

    // Schedule from metadata only, shared by every source.
    struct Task {
        std::size_t source;
        Family family;
        std::size_t size;
        Timestamp origin;
        TrainingWindow window;
    };
    std::vector<Task> tasks;
    const auto origin_list = origins(ref, config.stride);
    for (auto size : config.training_sizes) {
        std::size_t usable = 0;
        for (auto origin : origin_list) {
            auto w = select_window(ref, origin, size);
            if (!w) {
                continue;
            }
            ++usable;
            for (auto f : config.families) {
                for (std::size_t s = 0; s < sources.size(); ++s) {
                    tasks.push_back({s, f, size, origin, *w});
                }
            }
        }
        if (usable == 0) {
            throw Error(ErrorKind::InsufficientHistory,
                        "no origin has " + std::to_string(size) + " labeled events before it");
        }
    }

    std::vector<std::vector<BacktestRecord>> out(tasks.size());
    std::vector<std::string> skip(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t t) {
        const auto &task = tasks[t];
        const auto &src = sources[task.source];
        const auto &ev = src.dataset.events();
        learners::TrainedModel model;
        try {
            model = fit_window(src.dataset, task.window, task.family, task.size, task.origin,
                               config);
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::SingleClassWindow) {
                throw;
            }
            skip[t] = src.name + " " + std::string(learners::display_name(task.family)) +
                      " size " + std::to_string(task.size) + " origin " +
                      std::to_string(task.origin) + ": " + e.what();
            return;
        }
        const auto first = static_cast<std::size_t>(
            std::lower_bound(ev.begin(), ev.end(), task.origin,
                             [](const TradeEvent &e, Timestamp v) { return e.timestamp < v; }) -
            ev.begin());
        for (std::size_t i = first; i < ev.size(); ++i) {
            const auto &e = ev[i];
            if (!e.label) {
                continue;
            }
            const Timestamp delta = e.timestamp - task.window.end;
            const std::size_t bucket = bucketize(delta);
            if (bucket >= config.buckets) {
                break;
            }
            BacktestRecord r;
            r.source = src.name;
            r.family = task.family;
            r.training_size = task.size;
            r.origin = task.origin;
            r.event_id = e.event_id;
            r.timestamp = e.timestamp;
            r.train_start = task.window.start;
            r.train_end = task.window.end;
            r.delta_us = delta;
            r.bucket = bucket;
            r.grid_cell = model.grid_cell;
            r.probability = learners::predict_one(model, e.features);
            r.label = *e.label;
            out[t].push_back(std::move(r));
        }
    });
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        for (auto &r : out[t]) {
            result.records.push_back(std::move(r));
        }
        if (!skip[t].empty()) {
            result.skipped.push_back(std::move(skip[t]));
        }
    }
    result.summary = summarize_records(result);
    return result;
}

std::vector<SummaryRow> summarize_records(const BacktestResult &result) {
    // One AUC per (source, family, size, origin, bucket); the "All" model row
    // and the pooled size collect those AUCs rather than pooling scores.
    using Key = std::tuple<std::string, int, std::size_t, Timestamp, std::size_t>;
    std::map<Key, std::pair<std::vector<double>, std::vector<int>>> per_origin;
    for (const auto &r : result.records) {
        auto &g = per_origin[{r.source, static_cast<int>(r.family), r.training_size, r.origin,
                              r.bucket}];
        g.first.push_back(r.probability);
        g.second.push_back(r.label);
    }
    using GroupKey = std::tuple<std::string, int, std::size_t, std::size_t>;
    std::map<GroupKey, std::pair<std::vector<double>, std::size_t>> groups;
    for (const auto &[k, v] : per_origin) {
        const auto &[source, fam, size, origin, bucket] = k;
        const auto a = learners::try_auc(v.first, v.second);
        for (int f : {fam, -1}) {
            for (std::size_t sz : {size, std::size_t{0}}) {
                auto &g = groups[{source, f, sz, bucket}];
                g.second += v.first.size();
                if (a) {
                    g.first.push_back(*a);
                }
            }
        }
    }
    std::vector<SummaryRow> rows;
    for (const auto &[k, v] : groups) {
        const auto &[source, fam, size, bucket] = k;
        SummaryRow row;
        row.source = source;
        if (fam >= 0) {
            row.family = static_cast<Family>(fam);
        }
        row.training_size = size;
        row.bucket = bucket;
        row.n_origins = v.first.size();
        row.n_records = v.second;
        if (!v.first.empty()) {
            const double n = static_cast<double>(v.first.size());
            row.mean_auc = std::accumulate(v.first.begin(), v.first.end(), 0.0) / n;
            double ss = 0.0;
            for (double a : v.first) {
                ss += (a - row.mean_auc) * (a - row.mean_auc);
            }
            row.std_auc = std::sqrt(ss / n);
            row.median_auc = median_of(v.first);
        } else {
            row.mean_auc = row.median_auc = row.std_auc = std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(std::move(row));
    }
    // Source order as configured.
    std::stable_sort(rows.begin(), rows.end(), [&](const SummaryRow &a, const SummaryRow &b) {
        const auto ia = std::find(result.sources.begin(), result.sources.end(), a.source);
        const auto ib = std::find(result.sources.begin(), result.sources.end(), b.source);
        return ia < ib;
    });
    return rows;
}

// ------------------------------------------------------------- comparison

std::string format_diff(int pp) {
    if (pp == 0) {
        return "±0";
    }
    return (pp > 0 ? "+" : "−") + std::to_string(pp > 0 ? pp : -pp);
}

ComparisonTable compare_sources(const BacktestResult &result, const std::string &baseline) {
    if (std::find(result.sources.begin(), result.sources.end(), baseline) ==
        result.sources.end()) {
        throw Error(ErrorKind::MissingBaseline, "baseline source '" + baseline + "' not present");
    }
    ComparisonTable t;
    t.baseline = baseline;
    t.sources = result.sources;
    t.buckets = result.buckets;
    std::vector<int> fam_keys{-1};
    t.rows.push_back("All");
    for (auto f : result.families) {
        fam_keys.push_back(static_cast<int>(f));
        t.rows.emplace_back(learners::display_name(f));
    }
    auto lookup = [&](const std::string &src, int fam, std::size_t bucket) -> const SummaryRow * {
        for (const auto &r : result.summary) {
            const int rf = r.family ? static_cast<int>(*r.family) : -1;
            if (r.source == src && rf == fam && r.training_size == 0 && r.bucket == bucket) {
                return &r;
            }
        }
        return nullptr;
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();
    t.cells.assign(t.sources.size(),
                   std::vector<std::vector<ComparisonCell>>(
                       t.rows.size(), std::vector<ComparisonCell>(t.buckets)));
    for (std::size_t s = 0; s < t.sources.size(); ++s) {
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            for (std::size_t b = 0; b < t.buckets; ++b) {
                auto &cell = t.cells[s][r][b];
                const auto *row = lookup(t.sources[s], fam_keys[r], b);
                const auto *base = lookup(baseline, fam_keys[r], b);
                cell.median = row ? row->median_auc : nan;
                cell.std = row ? row->std_auc : nan;
                if (row && base && std::isfinite(row->median_auc) &&
                    std::isfinite(base->median_auc)) {
                    cell.diff_pp = static_cast<int>(
                        std::lround(100.0 * (row->median_auc - base->median_auc)));
                }
            }
        }
    }
    return t;
}

std::string render_table(const ComparisonTable &t) {
    std::ostringstream os;
    os << "Model";
    for (const auto &s : t.sources) {
        for (std::size_t b = 0; b < t.buckets; ++b) {
            os << '\t' << s << ' ' << b << 'd';
        }
        if (s != t.baseline) {
            os << "\tDiff. to " << t.baseline;
        }
    }
    os << '\n';
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        os << t.rows[r];
        for (std::size_t s = 0; s < t.sources.size(); ++s) {
            std::string diffs;
            for (std::size_t b = 0; b < t.buckets; ++b) {
                const auto &c = t.cells[s][r][b];
                os << '\t';
                if (std::isfinite(c.median)) {
                    os << fmt_short(c.median, 2) << " ± " << fmt_short(c.std, 2);
                } else {
                    os << "n/a";
                }
                diffs += (b > 0 ? " / " : "") + format_diff(c.diff_pp);
            }
            if (t.sources[s] != t.baseline) {
                os << '\t' << diffs;
            }
        }
        os << '\n';
    }
    return os.str();
}

// ----------------------------------------------------------------- report

nlohmann::json to_json(const SummaryRow &r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
    return {{"source", r.source},
            {"model", r.family ? std::string(learners::display_name(*r.family)) : "All"},
            {"training_size", r.training_size == 0 ? nlohmann::json("all")
                                                   : nlohmann::json(r.training_size)},
            {"bucket", r.bucket},
            {"n_origins", r.n_origins},
            {"n_records", r.n_records},
            {"mean_auc", num(r.mean_auc)},
            {"median_auc", num(r.median_auc)},
            {"std_auc", num(r.std_auc)}};
}

std::string records_csv(const BacktestResult &result) {
    std::string s = "source,model,training_size,origin,event_id,timestamp,train_start,"
                    "train_end,delta_us,bucket,grid_cell,probability,label\n";
    for (const auto &r : result.records) {
        s += r.source;
        s += ',';
        s += learners::display_name(r.family);
        for (auto v : {static_cast<std::int64_t>(r.training_size), r.origin,
                       static_cast<std::int64_t>(r.event_id), r.timestamp, r.train_start,
                       r.train_end, r.delta_us, static_cast<std::int64_t>(r.bucket),
                       static_cast<std::int64_t>(r.grid_cell)}) {
            s += ',';
            s += std::to_string(v);
        }
        s += ',';
        s += fmt(r.probability);
        s += ',';
        s += std::to_string(r.label);
        s += '\n';
    }
    return s;
}

BacktestResult parse_records_csv(const std::string &text, std::size_t buckets) {
    BacktestResult result;
    result.buckets = buckets;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("source,model,", 0) != 0) {
        throw Error(ErrorKind::ConfigParse, "records file lacks the expected header");
    }
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma - pos));
            if (comma == std::string::npos) {
                break;
            }
            pos = comma + 1;
        }
        if (cells.size() != 13) {
            throw Error(ErrorKind::ConfigParse, "records row has wrong column count", row);
        }
        try {
            BacktestRecord r;
            r.source = cells[0];
            r.family = learners::family_from_string(cells[1]);
            r.training_size = std::stoull(cells[2]);
            r.origin = std::stoll(cells[3]);
            r.event_id = std::stoull(cells[4]);
            r.timestamp = std::stoll(cells[5]);
            r.train_start = std::stoll(cells[6]);
            r.train_end = std::stoll(cells[7]);
            r.delta_us = std::stoll(cells[8]);
            r.bucket = std::stoull(cells[9]);
            r.grid_cell = std::stoull(cells[10]);
            r.probability = std::stod(cells[11]);
            r.label = std::stoi(cells[12]);
            if (std::find(result.sources.begin(), result.sources.end(), r.source) ==
                result.sources.end()) {
                result.sources.push_back(r.source);
            }
            if (std::find(result.families.begin(), result.families.end(), r.family) ==
                result.families.end()) {
                result.families.push_back(r.family);
            }
            result.buckets = std::max(result.buckets, r.bucket + 1);
            result.records.push_back(std::move(r));
        } catch (const std::exception &e) {
            throw Error(ErrorKind::ConfigParse, std::string("bad records row: ") + e.what(), row);
        }
        ++row;
    }
    result.summary = summarize_records(result);
    return result;
}

namespace {

constexpr const char *kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string xml_escape(const std::string &s) {
    std::string o;
    for (char c : s) {
        switch (c) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        default: o += c;
        }
    }
    return o;
}

} // namespace

std::string decay_svg(const BacktestResult &result) {
    constexpr double W = 640, H = 400, L = 60, R = 160, T = 30, B = 50;
    const double pw = W - L - R, ph = H - T - B;
    const std::size_t nb = std::max<std::size_t>(result.buckets, 1);
    auto xpos = [&](std::size_t b) {
        return L + (nb == 1 ? pw / 2 : pw * static_cast<double>(b) / static_cast<double>(nb - 1));
    };
    // AUC axis spans [0.4, 1.0].
    auto ypos = [&](double a) { return T + ph * (1.0 - (std::clamp(a, 0.4, 1.0) - 0.4) / 0.6); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\""
       << T + ph << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph
       << "\" stroke=\"black\"/>\n";
    for (std::size_t b = 0; b < nb; ++b) {
        os << "<text x=\"" << fmt_short(xpos(b), 1) << "\" y=\"" << T + ph + 20
           << "\" font-size=\"12\" text-anchor=\"middle\">" << b << "d</text>\n";
    }
    for (int k = 0; k <= 6; ++k) {
        const double a = 0.4 + 0.1 * k;
        os << "<text x=\"" << L - 8 << "\" y=\"" << fmt_short(ypos(a) + 4, 1)
           << "\" font-size=\"12\" text-anchor=\"end\">" << fmt_short(a, 1) << "</text>\n";
    }
    os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10
       << "\" font-size=\"12\" text-anchor=\"middle\">blinding window (24 h blocks)</text>\n";
    os << "<text x=\"15\" y=\"" << T + ph / 2 << "\" font-size=\"12\" transform=\"rotate(-90 15 "
       << T + ph / 2 << ")\" text-anchor=\"middle\">test AUC (mean ± 1 std across origins)"
       << "</text>\n";

    std::size_t series = 0;
    for (const auto &src : result.sources) {
        for (auto fam : result.families) {
            std::vector<std::pair<std::size_t, const SummaryRow *>> pts;
            for (const auto &r : result.summary) {
                if (r.source == src && r.family == fam && r.training_size == 0 &&
                    std::isfinite(r.mean_auc)) {
                    pts.emplace_back(r.bucket, &r);
                }
            }
            std::sort(pts.begin(), pts.end(),
                      [](const auto &a, const auto &b) { return a.first < b.first; });
            const char *color = kPalette[series % std::size(kPalette)];
            const std::string label = src + " " + std::string(learners::display_name(fam));
            if (!pts.empty()) {
                os << "<polygon class=\"band\" fill=\"" << color
                   << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
                for (const auto &[b, r] : pts) {
                    os << fmt_short(xpos(b), 1) << ',' << fmt_short(ypos(r->mean_auc + r->std_auc), 1)
                       << ' ';
                }
                for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
                    os << fmt_short(xpos(it->first), 1) << ','
                       << fmt_short(ypos(it->second->mean_auc - it->second->std_auc), 1) << ' ';
                }
                os << "\"/>\n";
            }
            os << "<polyline class=\"decay-line\" data-series=\"" << xml_escape(label)
               << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (const auto &[b, r] : pts) {
                os << fmt_short(xpos(b), 1) << ',' << fmt_short(ypos(r->mean_auc), 1) << ' ';
            }
            os << "\"/>\n";
            const double ly = T + 14.0 * static_cast<double>(series);
            os << "<line x1=\"" << L + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 30
               << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << L + pw + 34 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
               << xml_escape(label) << "</text>\n";
            ++series;
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string feature_hist_svg(const std::vector<Source> &sources) {
    constexpr std::size_t kBins = 40;
    constexpr double PW = 300, PH = 180, G = 40;
    const double W = G + static_cast<double>(std::max<std::size_t>(sources.size(), 1)) * (PW + G);
    const double H = PH + 2 * G + 20;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t s = 0; s < sources.size(); ++s) {
        std::vector<double> counts(kBins, 0.0);
        double total = 0.0;
        for (const auto &e : sources[s].dataset.events()) {
            for (double v : e.features) {
                const auto b = std::min<std::size_t>(
                    kBins - 1, static_cast<std::size_t>(
                                   std::max(0.0, (std::clamp(v, -1.0, 1.0) + 1.0) / 2.0 * kBins)));
                counts[b] += 1.0;
                total += 1.0;
            }
        }
        const double peak = std::max(1.0, *std::max_element(counts.begin(), counts.end()));
        const double x0 = G + static_cast<double>(s) * (PW + G);
        const double y0 = G;
        os << "<g class=\"panel\" data-source=\"" << xml_escape(sources[s].name) << "\">\n";
        os << "<text x=\"" << x0 + PW / 2 << "\" y=\"" << y0 - 10
           << "\" font-size=\"13\" text-anchor=\"middle\">" << xml_escape(sources[s].name)
           << " (" << static_cast<std::size_t>(total) << " values)</text>\n";
        os << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << PW << "\" height=\"" << PH
           << "\" fill=\"none\" stroke=\"black\"/>\n";
        const double bw = PW / kBins;
        for (std::size_t b = 0; b < kBins; ++b) {
            const double h = PH * counts[b] / peak;
            os << "<rect x=\"" << fmt_short(x0 + bw * static_cast<double>(b), 2) << "\" y=\""
               << fmt_short(y0 + PH - h, 2) << "\" width=\"" << fmt_short(bw, 2) << "\" height=\""
               << fmt_short(h, 2) << "\" fill=\"" << kPalette[s % std::size(kPalette)]
               << "\"/>\n";
        }
        for (double t : {-1.0, 0.0, 1.0}) {
            os << "<text x=\"" << x0 + PW * (t + 1.0) / 2.0 << "\" y=\"" << y0 + PH + 16
               << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt_short(t, 0) << "</text>\n";
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void emit_report(const BacktestResult &result, const std::vector<Source> &sources,
                 const std::filesystem::path &out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());
    }
    write_file(out_dir / "records.csv", records_csv(result));
    nlohmann::json summary = nlohmann::json::array();
    for (const auto &r : result.summary) {
        summary.push_back(to_json(r));
    }
    nlohmann::json fams = nlohmann::json::array();
    for (auto f : result.families) {
        fams.push_back(std::string(learners::display_name(f)));
    }
    const nlohmann::json doc = {{"sources", result.sources},
                                {"models", fams},
                                {"buckets", result.buckets},
                                {"band", "population std of per-origin AUC"},
                                {"summary", summary},
                                {"skipped", result.skipped}};
    write_file(out_dir / "summary.json", doc.dump(2) + "\n");
    write_file(out_dir / "decay.svg", decay_svg(result));
    write_file(out_dir / "feature_hist.svg", feature_hist_svg(sources));
}

} // namespace qfill::backtest
