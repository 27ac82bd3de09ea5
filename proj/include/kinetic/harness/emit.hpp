#pragma once

// Report serialization. Every format is rendered to strings first, so two
// reports can be compared byte for byte without touching the disk.
//
// CSV: '.' decimal point, 17 significant digits, LF line endings, one header
// line. Files per mode:
//   simulate        moments.csv
//   couple, verify  ledger_<replica>.csv (coupling ledger columns),
//                   moments.csv, summary.csv
//   w1              plan.csv, w1.csv
//   bounds          bounds.csv, constants.csv
// JSON: report.json, {"config": {...}, "series": {name: {column: [...]}}}
// with keys in the CSV column order. Plot: plot.csv with t,d1,envelope.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kinetic/bounds.hpp"
#include "kinetic/coupling.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/harness/experiment.hpp"
#include "kinetic/transport.hpp"

namespace kinetic::harness {

enum class Format { csv, json, plot };

inline std::optional<Format> parse_format(std::string_view s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    if (s == "plot") return Format::plot;
    return std::nullopt;
}

using OutputFiles = std::vector<std::pair<std::string, std::string>>;

namespace detail {

// A named table: columns in order, each a list of numbers.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row) { rows.push_back(std::move(row)); }
};

inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char b[32];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

inline std::string to_csv(const Table& t) {
    std::string s;
    for (std::size_t c = 0; c < t.columns.size(); ++c) s += (c ? "," : "") + t.columns[c];
    s += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) s += ',';
            s += fmt(row[c]);
        }
        s += '\n';
    }
    return s;
}

inline double u64(std::uint64_t x) { return static_cast<double>(x); }

inline Table moments_table(const RunReport& r) {
    Table t{"moments",
            {"replica", "seed", "system", "t", "energy", "energy_drift", "m1", "m1_envelope", "exp_moment", "collisions"},
            {}};
    for (const auto& rep : r.replicas) {
        for (int sys = 0; sys < 2; ++sys) {
            for (const auto& m : sys == 0 ? rep.f : rep.ftilde) {
                t.add({u64(rep.id.index), u64(rep.id.seed), double(sys), m.t, m.energy, m.energy_drift, m.m1,
                       m.m1_envelope, m.exp_moment, u64(m.collisions)});
            }
        }
    }
    return t;
}

inline Table ledger_table(const ReplicaResult& rep) {
    Table t{"ledger_" + std::to_string(rep.id.index),
            {"t", "d1", "h_pair", "H", "int_H", "rhs_bound", "n_both", "n_f", "n_ftilde", "n_fict"},
            {}};
    for (const auto& row : rep.ledger.rows) {
        const auto& n = row.counts;
        t.add({row.t, row.d1, row.h_pair, row.H, row.int_H, row.rhs_bound, u64(n.both), u64(n.f_only),
               u64(n.ftilde_only), u64(n.fictitious)});
    }
    return t;
}

inline double se_or_nan(const Stat& s) { return s.se.value_or(std::nan("")); }

inline Table summary_table(const RunReport& r) {
    Table t{"summary",
            {"t", "d1_mean", "d1_se", "H_mean", "H_se", "rhs_mean", "tau", "passed", "replicas", "pass"},
            {}};
    for (const auto& s : r.summary) {
        t.add({s.t, s.d1.mean, se_or_nan(s.d1), s.H.mean, se_or_nan(s.H), s.rhs.mean, s.tau, double(s.passed),
               double(s.total), s.pass ? 1.0 : 0.0});
    }
    return t;
}

inline Table plot_table(const RunReport& r) {
    Table t{"plot", {"t", "d1", "envelope"}, {}};
    if (r.config.mode == Mode::simulate) {
        // first moment against its growth envelope, replica means
        for (std::size_t k = 0; k < r.summary.size(); ++k) {
            double env = 0.0;
            for (const auto& rep : r.replicas) env += rep.f[k].m1_envelope;
            t.add({r.summary[k].t, r.summary[k].m1.mean, env / static_cast<double>(r.replicas.size())});
        }
    } else if (r.config.mode == Mode::bounds) {
        for (std::size_t k = 0; k < r.hard.times.size(); ++k) t.add({r.hard.times[k], r.config.d1_0, r.hard.values[k]});
    } else if (r.config.mode == Mode::w1) {
        throw ValidationError("plot output is not defined for w1 mode");
    } else {
        for (const auto& s : r.summary) t.add({s.t, s.d1.mean, s.rhs.mean + s.tau});
    }
    return t;
}

inline std::vector<Table> tables(const RunReport& r) {
    std::vector<Table> out;
    switch (r.config.mode) {
        case Mode::simulate: out.push_back(moments_table(r)); break;
        case Mode::couple:
        case Mode::verify:
            for (const auto& rep : r.replicas) out.push_back(ledger_table(rep));
            out.push_back(moments_table(r));
            out.push_back(summary_table(r));
            break;
        case Mode::w1: {
            Table plan{"plan", {"i", "j", "cost_ij"}, {}};
            for (std::size_t i = 0; i < r.plan->matching.size(); ++i) {
                const auto j = static_cast<std::size_t>(r.plan->matching[i]);
                plan.add({double(i), double(j), distance(r.points_a[i], r.points_b[j])});
            }
            out.push_back(plan);
            Table w{"w1", {"N", "d", "cost", "certified"}, {}};
            w.add({double(r.points_a.size()), double(r.config.d), r.plan->cost, r.certified ? 1.0 : 0.0});
            out.push_back(w);
            break;
        }
        case Mode::bounds: {
            Table b{"bounds", {"t", "hard", "soft"}, {}};
            for (std::size_t k = 0; k < r.hard.times.size(); ++k) b.add({r.hard.times[k], r.hard.values[k], r.soft.values[k]});
            out.push_back(b);
            break;
        }
    }
    return out;
}

inline nlohmann::ordered_json number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

}  // namespace detail

inline std::string render_json(const RunReport& r) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json cfg;
    cfg["mode"] = to_string(r.config.mode);
    for (const auto& [k, v] : r.config.echo) {
        if (k != "mode") cfg[k] = v;
    }
    j["config"] = cfg;
    nlohmann::ordered_json series = nlohmann::ordered_json::object();
    for (const auto& t : detail::tables(r)) {
        nlohmann::ordered_json cols = nlohmann::ordered_json::object();
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            nlohmann::ordered_json col = nlohmann::ordered_json::array();
            for (const auto& row : t.rows) col.push_back(detail::number(row[c]));
            cols[t.columns[c]] = col;
        }
        series[t.name] = cols;
    }
    if (r.config.mode == Mode::bounds) {
        nlohmann::ordered_json consts = nlohmann::ordered_json::object();
        for (const auto& [k, v] : r.constants) consts[k] = detail::number(v);
        j["constants"] = consts;
    }
    j["series"] = series;
    j["pass"] = r.all_pass;
    return j.dump(2) + "\n";
}

/// Renders the report as (file name, content) pairs.
inline OutputFiles render(const RunReport& r, Format f) {
    OutputFiles out;
    if (f == Format::json) {
        out.emplace_back("report.json", render_json(r));
    } else if (f == Format::plot) {
        out.emplace_back("plot.csv", detail::to_csv(detail::plot_table(r)));
    } else {
        for (const auto& t : detail::tables(r)) out.emplace_back(t.name + ".csv", detail::to_csv(t));
        if (r.config.mode == Mode::bounds) {
            std::string s = "name,value\n";
            for (const auto& [k, v] : r.constants) s += k + "," + detail::fmt(v) + "\n";
            out.emplace_back("constants.csv", s);
        }
    }
    return out;
}

/// Writes the rendered files into `dir`, creating it if needed.
inline std::vector<std::filesystem::path> emit(const RunReport& r, Format f, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    std::vector<std::filesystem::path> written;
    for (const auto& [name, content] : render(r, f)) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary);
        out << content;
        out.close();
        if (!out) throw IoError("cannot write '" + path.string() + "'");
        written.push_back(path);
    }
    return written;
}

}  // namespace kinetic::harness
