// SPDX-License-Identifier: Apache-2.0
#include "qfill/core/dataset.hpp"

#include "qfill/common/digest.hpp"
#include "qfill/common/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <string_view>
#include <unordered_set>

namespace qfill {
namespace {

std::vector<std::string_view> split_row(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

template <class T> bool parse_number(std::string_view s, T &out) {
    const auto *first = s.data();
    const auto *last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

void append_double(std::string &out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                   std::chars_format::general, 17);
    out.append(buf, ptr);
}

} // namespace

EventDataset::EventDataset(std::vector<TradeEvent> events, std::size_t feature_count,
                           std::vector<std::string> feature_names, std::string provenance)
    : events_(std::move(events)), feature_count_(feature_count),
      feature_names_(std::move(feature_names)), provenance_(std::move(provenance)) {
    if (!feature_names_.empty() && feature_names_.size() != feature_count_) {
        throw Error(ErrorKind::RaggedRow, "feature_names length " +
                                              std::to_string(feature_names_.size()) +
                                              " != feature_count " +
                                              std::to_string(feature_count_));
    }
    std::unordered_set<EventId> seen;
    seen.reserve(events_.size());
    for (std::size_t i = 0; i < events_.size(); ++i) {
        const auto &e = events_[i];
        if (e.features.size() != feature_count_) {
            throw Error(ErrorKind::RaggedRow,
                        "expected " + std::to_string(feature_count_) + " features, got " +
                            std::to_string(e.features.size()),
                        i);
        }
        if (e.label && *e.label != 0 && *e.label != 1) {
            throw Error(ErrorKind::NonBinaryLabel, "label must be 0 or 1", i);
        }
        if (!seen.insert(e.event_id).second) {
            throw Error(ErrorKind::NonMonotonicTime,
                        "duplicate event_id " + std::to_string(e.event_id), i);
        }
        if (i > 0) {
            const auto &prev = events_[i - 1];
            if (e.timestamp < prev.timestamp ||
                (e.timestamp == prev.timestamp && e.event_id <= prev.event_id)) {
                throw Error(ErrorKind::NonMonotonicTime,
                            "events must ascend by (timestamp, event_id)", i);
            }
        }
    }
}

std::vector<std::string> EventDataset::column_names() const {
    if (!feature_names_.empty()) {
        return feature_names_;
    }
    std::vector<std::string> names;
    names.reserve(feature_count_);
    for (std::size_t j = 0; j < feature_count_; ++j) {
        names.push_back("f" + std::to_string(j));
    }
    return names;
}

std::string to_csv(const EventDataset &dataset) {
    std::string out = "timestamp,event_id,label";
    for (const auto &name : dataset.column_names()) {
        out += ',';
        out += name;
    }
    out += '\n';
    for (const auto &e : dataset.events()) {
        out += std::to_string(e.timestamp);
        out += ',';
        out += std::to_string(e.event_id);
        out += ',';
        if (e.label) {
            out += static_cast<char>('0' + *e.label);
        }
        for (double v : e.features) {
            out += ',';
            append_double(out, v);
        }
        out += '\n';
    }
    return out;
}

EventDataset parse_csv(const std::string &text, std::string provenance) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::MissingColumn, "missing header row");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const auto header = split_row(line);
    static constexpr std::string_view required[] = {"timestamp", "event_id", "label"};
    for (std::size_t c = 0; c < 3; ++c) {
        if (header.size() <= c || header[c] != required[c]) {
            throw Error(ErrorKind::MissingColumn,
                        "column " + std::to_string(c) + " must be '" +
                            std::string(required[c]) + "'");
        }
    }
    const std::size_t p = header.size() - 3;
    std::vector<std::string> names;
    bool default_names = true;
    for (std::size_t j = 0; j < p; ++j) {
        names.emplace_back(header[3 + j]);
        default_names = default_names && names.back() == "f" + std::to_string(j);
    }
    if (default_names) {
        names.clear();
    }

    std::vector<TradeEvent> events;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto cells = split_row(line);
        if (cells.size() != header.size()) {
            throw Error(ErrorKind::RaggedRow,
                        "expected " + std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()),
                        row);
        }
        TradeEvent e;
        if (!parse_number(cells[0], e.timestamp)) {
            throw Error(ErrorKind::RaggedRow, "bad timestamp", row);
        }
        if (!parse_number(cells[1], e.event_id)) {
            throw Error(ErrorKind::RaggedRow, "bad event_id", row);
        }
        if (!cells[2].empty()) {
            if (cells[2] == "0") {
                e.label = 0;
            } else if (cells[2] == "1") {
                e.label = 1;
            } else {
                throw Error(ErrorKind::NonBinaryLabel,
                            "label '" + std::string(cells[2]) + "'", row);
            }
        }
        e.features.resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            if (!parse_number(cells[3 + j], e.features[j])) {
                throw Error(ErrorKind::RaggedRow,
                            "bad feature value in column " + std::to_string(3 + j), row);
            }
        }
        if (!events.empty()) {
            const auto &prev = events.back();
            if (e.timestamp < prev.timestamp ||
                (e.timestamp == prev.timestamp && e.event_id <= prev.event_id)) {
                throw Error(ErrorKind::NonMonotonicTime,
                            "events must ascend by (timestamp, event_id)", row);
            }
        }
        events.push_back(std::move(e));
        ++row;
    }
    return EventDataset(std::move(events), p, std::move(names), std::move(provenance));
}

EventDataset load_dataset(const std::filesystem::path &path, std::string provenance) {
    return parse_csv(read_file(path), std::move(provenance));
}

void save_dataset(const EventDataset &dataset, const std::filesystem::path &path) {
    write_file(path, to_csv(dataset));
}

EventDataset with_events(const EventDataset &like, std::vector<TradeEvent> events) {
    return EventDataset(std::move(events), like.feature_count(), like.feature_names(),
                        like.provenance());
}

EventDataset slice_window(const EventDataset &dataset, Timestamp t_start, Timestamp t_end) {
    if (t_start > t_end) {
        throw Error(ErrorKind::InvertedWindow, "t_start > t_end");
    }
    const auto &ev = dataset.events();
    const auto first = std::lower_bound(
        ev.begin(), ev.end(), t_start,
        [](const TradeEvent &e, Timestamp t) { return e.timestamp < t; });
    const auto last = std::upper_bound(
        first, ev.end(), t_end,
        [](Timestamp t, const TradeEvent &e) { return t < e.timestamp; });
    return with_events(dataset, std::vector<TradeEvent>(first, last));
}

DatasetStats summarize(const EventDataset &dataset) {
    if (dataset.empty()) {
        throw Error(ErrorKind::EmptyDataset, "cannot summarize an empty dataset");
    }
    const std::size_t n = dataset.size();
    const std::size_t p = dataset.feature_count();
    DatasetStats s;
    s.n_events = n;
    std::size_t positives = 0;
    for (const auto &e : dataset.events()) {
        if (e.label) {
            ++s.n_labeled;
            positives += static_cast<std::size_t>(*e.label);
        }
    }
    s.label_rate = s.n_labeled ? static_cast<double>(positives) / s.n_labeled : 0.0;

    if (n >= 2 && p > 0) {
        double total = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const auto &a = dataset[i - 1].features;
            const auto &b = dataset[i].features;
            double d = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                d += std::abs(b[j] - a[j]);
            }
            total += d / static_cast<double>(p);
        }
        s.mean_step_change = total / static_cast<double>(n - 1);
    }

    s.per_feature.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        auto &f = s.per_feature[j];
        f.min = std::numeric_limits<double>::infinity();
        f.max = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        for (const auto &e : dataset.events()) {
            f.min = std::min(f.min, e.features[j]);
            f.max = std::max(f.max, e.features[j]);
            sum += e.features[j];
        }
        f.mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto &e : dataset.events()) {
            const double d = e.features[j] - f.mean;
            ss += d * d;
        }
        f.std = std::sqrt(ss / static_cast<double>(n));
    }
    return s;
}

nlohmann::json to_json(const DatasetStats &stats) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto &f : stats.per_feature) {
        per.push_back({{"min", f.min}, {"max", f.max}, {"mean", f.mean}, {"std", f.std}});
    }
    return {{"n_events", stats.n_events},
            {"label_rate", stats.label_rate},
            {"mean_step_change", stats.mean_step_change},
            {"per_feature", per}};
}

} // namespace qfill
