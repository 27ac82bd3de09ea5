#pragma once

// Line-oriented experiment configuration.
//
//   # comment
//   mode = verify
//   N = 2000
//   checkpoints = 0, 0.01, 0.02
//
// One key per line, '#' starts a comment, keys are case-sensitive. Unknown
// and repeated keys are rejected with the offending line number.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kinetic/ensemble.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/kernel.hpp"
#include "kinetic/rng.hpp"

namespace kinetic::harness {

enum class Mode { simulate, couple, verify, w1, bounds };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::simulate: return "simulate";
        case Mode::couple: return "couple";
        case Mode::verify: return "verify";
        case Mode::w1: return "w1";
        case Mode::bounds: return "bounds";
    }
    return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
    for (Mode m : {Mode::simulate, Mode::couple, Mode::verify, Mode::w1, Mode::bounds}) {
        if (s == to_string(m)) return m;
    }
    return std::nullopt;
}

/// Initial law of one system. `kind` is gaussian, two_gaussians,
/// uniform_ball or file; the second system may also be `dilate`
/// (v~_i = lambda v_i, with lambda or a target d_1 given).
struct InitConfig {
    std::string kind = "gaussian";
    std::vector<double> mean;
    std::vector<double> mean2;
    double scale = 1.0;   // covariance scale
    double weight = 0.5;  // two_gaussians: mass of the first component
    double radius = 1.0;
    std::string path;
    double dilation = 0.0;   // dilate: explicit factor
    double d1_target = 0.0;  // dilate: lambda = 1 + d1_target / m_1
    std::uint64_t seed_offset = 0;  // xored into the replica stream
};

/// One replica: base seed, replica index and the stream derived from them.
struct ReplicaId {
    std::size_t index = 0;  // position in the merged output
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;
    std::uint64_t stream = 0;
};

struct ExperimentConfig {
    Mode mode = Mode::simulate;
    std::size_t N = 0;
    int d = 3;
    double T = 0.0;
    std::vector<double> checkpoints;
    std::optional<std::size_t> checkpoint_count;  // expands to 0, T/n, ..., T
    std::vector<std::uint64_t> seeds{1};
    std::size_t replicas = 1;
    std::uint64_t seed_offset = 0;

    // kernel
    std::optional<double> s;
    double gamma = 0.0;
    double nu = 0.5;
    double strength = 1.0;
    double C = 1.0;
    double eps_theta = 1e-3;
    std::optional<double> phi_cap;
    std::optional<double> proposal_floor;
    std::string angular = "power_law";

    InitConfig init;
    std::optional<InitConfig> tilde;

    // coupling and verification
    bool repair = true;
    bool alpha_in_rhs = false;
    double pass_fraction = 0.9;

    // moment monitoring
    double exp_eps = 0.05;
    std::optional<double> exp_s;

    // w1
    std::string points_a;
    std::string points_b;

    // bounds
    double bound_K = 1.0;
    double bound_Kp = 1.0;
    double bound_lp_sum = 0.0;
    double d1_0 = 0.1;

    /// Canonical (key, value) pairs in input order, echoed into reports.
    std::vector<std::pair<std::string, std::string>> echo;

    double kernel_gamma() const { return s ? PowerLawSpec{*s}.gamma() : gamma; }
    double kernel_nu() const { return s ? PowerLawSpec{*s}.nu() : nu; }

    CollisionKernel kernel() const {
        AngularMeasure a = angular == "maxwell_uniform" ? AngularMeasure::maxwell_uniform(strength, eps_theta)
                                                        : AngularMeasure::power_law(kernel_nu(), strength, eps_theta);
        if (proposal_floor) a.set_proposal_floor(*proposal_floor);
        return CollisionKernel(kernel_gamma(), C, std::move(a), d, std::nullopt, phi_cap);
    }

    std::vector<ReplicaId> replica_ids() const {
        std::vector<ReplicaId> out;
        for (std::uint64_t s0 : seeds) {
            const std::uint64_t seed = s0 + seed_offset;
            for (std::uint64_t r = 0; r < replicas; ++r) {
                out.push_back(ReplicaId{out.size(), seed, r, stream_id(seed, r)});
            }
        }
        return out;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(std::string_view v, int line, const std::string& key) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end || v.empty()) throw ParseError(line, key + ": expected a number, got '" + std::string(v) + "'");
    return x;
}

inline std::uint64_t to_u64(std::string_view v, int line, const std::string& key) {
    std::uint64_t x = 0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end || v.empty()) {
        throw ParseError(line, key + ": expected a nonnegative integer, got '" + std::string(v) + "'");
    }
    return x;
}

inline bool to_bool(std::string_view v, int line, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError(line, key + ": expected true or false");
}

inline std::vector<std::string_view> split_list(std::string_view v) {
    std::vector<std::string_view> out;
    while (true) {
        const auto c = v.find(',');
        out.push_back(trim(v.substr(0, c)));
        if (c == std::string_view::npos) break;
        v.remove_prefix(c + 1);
    }
    return out;
}

inline std::vector<double> to_doubles(std::string_view v, int line, const std::string& key) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    for (auto item : split_list(v)) out.push_back(to_double(item, line, key));
    return out;
}

inline void validation(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

inline bool finite_positive(double x) { return x > 0.0 && std::isfinite(x); }

inline void validate_init(const InitConfig& c, int d, bool second, const std::string& prefix) {
    static const std::set<std::string> kinds{"gaussian", "two_gaussians", "uniform_ball", "file"};
    const bool dilate = c.kind == "dilate";
    validation(kinds.count(c.kind) || (second && dilate), prefix + ": unknown initial law '" + c.kind + "'");
    validation(c.scale >= 0.0 && std::isfinite(c.scale), prefix + "_scale must be finite and nonnegative");
    validation(c.weight >= 0.0 && c.weight <= 1.0, prefix + "_weight must lie in [0, 1]");
    validation(c.radius >= 0.0 && std::isfinite(c.radius), prefix + "_radius must be finite and nonnegative");
    for (const auto* m : {&c.mean, &c.mean2}) {
        validation(m->empty() || static_cast<int>(m->size()) == d, prefix + " mean must have d components");
        for (double x : *m) validation(std::isfinite(x), prefix + " mean must be finite");
    }
    if (c.kind == "file") validation(!c.path.empty(), prefix + "_path is required for a file initial law");
    if (dilate) {
        validation((c.dilation > 0.0) != (c.d1_target > 0.0),
                   prefix + ": dilate needs exactly one of " + prefix + "_dilation, " + prefix + "_d1");
        validation(std::isfinite(c.dilation) && std::isfinite(c.d1_target), prefix + " dilation must be finite");
    }
}

}  // namespace detail

/// Checks every precondition the run depends on; throws ValidationError.
inline void validate(const ExperimentConfig& c) {
    using detail::finite_positive;
    using detail::validation;
    validation(c.d >= 2 && c.d <= kMaxDim, "d must lie in [2, " + std::to_string(kMaxDim) + "]");
    if (c.mode != Mode::bounds) validation(c.N >= 2 || (c.mode == Mode::w1 && c.N >= 1), "N must be at least 2");
    if (c.mode == Mode::couple || c.mode == Mode::verify) {
        validation(c.N <= 5000, "N must not exceed 5000 in couple and verify modes");
    }
    validation(c.T >= 0.0 && std::isfinite(c.T), "T must be finite and nonnegative");
    for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
        validation(c.checkpoints[i] >= 0.0 && c.checkpoints[i] <= c.T, "checkpoints must lie in [0, T]");
        validation(i == 0 || c.checkpoints[i] > c.checkpoints[i - 1], "checkpoints must be strictly increasing");
    }
    validation(!c.seeds.empty(), "at least one seed is required");
    validation(c.replicas >= 1, "replicas must be at least 1");
    {
        std::set<std::uint64_t> streams;
        for (const auto& r : c.replica_ids()) {
            validation(streams.insert(r.stream).second, "seeds must give distinct replica streams");
        }
    }

    if (c.mode == Mode::w1) {
        validation(!c.points_a.empty() && !c.points_b.empty(), "w1 mode needs points_a and points_b");
        return;
    }

    // kernel preconditions
    if (c.s) {
        validation(*c.s > 3.0, "s must exceed 3");
        validation(c.d == 3, "the inverse-power kernel is defined for d = 3");
    }
    const double g = c.kernel_gamma();
    const double nu = c.kernel_nu();
    validation(g > -c.d && g <= 1.0, "gamma must lie in (-d, 1]");
    validation(nu > 0.0 && nu < 1.0, "nu must lie in (0, 1) (kappa_1 must be finite)");
    validation(finite_positive(c.strength), "strength must be positive");
    validation(finite_positive(c.C), "C must be positive");
    validation(c.eps_theta > 0.0 && c.eps_theta < std::numbers::pi, "eps_theta must lie in (0, pi)");
    if (c.phi_cap) validation(*c.phi_cap >= c.C && std::isfinite(*c.phi_cap), "phi_cap must be finite and at least C");
    if (c.proposal_floor) {
        validation(*c.proposal_floor > 0.0 && *c.proposal_floor <= c.eps_theta, "proposal_floor must lie in (0, eps_theta]");
    }
    validation(c.angular == "power_law" || c.angular == "maxwell_uniform", "angular must be power_law or maxwell_uniform");
    validation(c.pass_fraction > 0.0 && c.pass_fraction <= 1.0, "pass_fraction must lie in (0, 1]");
    validation(finite_positive(c.exp_eps), "exp_eps must be positive");
    if (c.exp_s) validation(*c.exp_s > 0.0 && *c.exp_s < 2.0, "exp_s must lie in (0, 2)");

    if (c.mode == Mode::bounds) {
        validation(finite_positive(c.bound_K), "bound_K must be positive");
        validation(c.bound_Kp >= 0.0 && std::isfinite(c.bound_Kp), "bound_Kp must be nonnegative");
        validation(c.bound_lp_sum >= 0.0 && std::isfinite(c.bound_lp_sum), "bound_lp_sum must be nonnegative");
        validation(c.d1_0 >= 0.0 && std::isfinite(c.d1_0), "d1_0 must be nonnegative");
        return;
    }

    detail::validate_init(c.init, c.d, false, "init");
    if (c.mode == Mode::couple || c.mode == Mode::verify) {
        validation(c.tilde.has_value(), "couple and verify modes need a second initial law (tilde)");
        detail::validate_init(*c.tilde, c.d, true, "tilde");
    }
}

namespace detail {

struct KeyHandler {
    std::string canonical;
    void (*apply)(ExperimentConfig&, std::string_view, int, const std::string&);
};

template <class F>
KeyHandler handler(std::string canonical, F) {
    return KeyHandler{std::move(canonical), +[](ExperimentConfig& c, std::string_view v, int line, const std::string& k) {
                          F{}(c, v, line, k);
                      }};
}

inline InitConfig& tilde_of(ExperimentConfig& c) {
    if (!c.tilde) c.tilde = InitConfig{};
    return *c.tilde;
}

// Keys shared by init_* and tilde_*; `Which` selects the target.
template <bool Tilde>
void add_init_keys(std::map<std::string, KeyHandler>& h) {
    const std::string p = Tilde ? "tilde" : "init";
    h[p] = handler(p, [](ExperimentConfig& c, std::string_view v, int, const std::string&) {
        (Tilde ? tilde_of(c) : c.init).kind = std::string(v);
    });
    h[p + "_mean"] = handler(p + "_mean", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
        (Tilde ? tilde_of(c) : c.init).mean = to_doubles(v, l, k);
    });
    h[p + "_mean2"] = handler(p + "_mean2", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
        (Tilde ? tilde_of(c) : c.init).mean2 = to_doubles(v, l, k);
    });
    h[p + "_scale"] = handler(p + "_scale", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
        (Tilde ? tilde_of(c) : c.init).scale = to_double(v, l, k);
    });
    h[p + "_weight"] = handler(p + "_weight", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
        (Tilde ? tilde_of(c) : c.init).weight = to_double(v, l, k);
    });
    h[p + "_radius"] = handler(p + "_radius", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
        (Tilde ? tilde_of(c) : c.init).radius = to_double(v, l, k);
    });
    h[p + "_path"] = handler(p + "_path", [](ExperimentConfig& c, std::string_view v, int, const std::string&) {
        (Tilde ? tilde_of(c) : c.init).path = std::string(v);
    });
    h[p + "_seed_offset"] = handler(p + "_seed_offset", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
        (Tilde ? tilde_of(c) : c.init).seed_offset = to_u64(v, l, k);
    });
    if (Tilde) {
        h["tilde_dilation"] = handler("tilde_dilation", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            tilde_of(c).dilation = to_double(v, l, k);
        });
        h["tilde_d1"] = handler("tilde_d1", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            tilde_of(c).d1_target = to_double(v, l, k);
        });
    }
}

inline const std::map<std::string, KeyHandler>& key_table() {
    static const std::map<std::string, KeyHandler> table = [] {
        std::map<std::string, KeyHandler> h;
        h["mode"] = handler("mode", [](ExperimentConfig& c, std::string_view v, int l, const std::string&) {
            const auto m = parse_mode(v);
            if (!m) throw ParseError(l, "mode: expected simulate, couple, verify, w1 or bounds");
            c.mode = *m;
        });
        h["N"] = handler("N", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.N = static_cast<std::size_t>(to_u64(v, l, k));
        });
        auto dim = handler("d", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.d = static_cast<int>(std::min<std::uint64_t>(to_u64(v, l, k), 1000));
        });
        h["d"] = dim;
        h["dimension"] = dim;
        h["T"] = handler("T", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) { c.T = to_double(v, l, k); });
        h["checkpoints"] = handler("checkpoints", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.checkpoints = to_doubles(v, l, k);
        });
        h["checkpoint_count"] = handler("checkpoints", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            const auto n = to_u64(v, l, k);
            if (n == 0) throw ParseError(l, "checkpoint_count must be positive");
            c.checkpoint_count = static_cast<std::size_t>(n);
        });
        h["seeds"] = handler("seeds", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.seeds.clear();
            for (auto item : split_list(v)) c.seeds.push_back(to_u64(item, l, k));
        });
        h["replicas"] = handler("replicas", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.replicas = static_cast<std::size_t>(to_u64(v, l, k));
        });
        h["s"] = handler("s", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) { c.s = to_double(v, l, k); });
        h["gamma"] = handler("gamma", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.gamma = to_double(v, l, k);
        });
        h["nu"] = handler("nu", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) { c.nu = to_double(v, l, k); });
        h["strength"] = handler("strength", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.strength = to_double(v, l, k);
        });
        auto phi_c = handler("C", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) { c.C = to_double(v, l, k); });
        h["C"] = phi_c;
        h["phi_c"] = phi_c;
        h["eps_theta"] = handler("eps_theta", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.eps_theta = to_double(v, l, k);
        });
        h["phi_cap"] = handler("phi_cap", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.phi_cap = to_double(v, l, k);
        });
        h["proposal_floor"] = handler("proposal_floor", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.proposal_floor = to_double(v, l, k);
        });
        h["angular"] = handler("angular", [](ExperimentConfig& c, std::string_view v, int, const std::string&) {
            c.angular = std::string(v);
        });
        add_init_keys<false>(h);
        add_init_keys<true>(h);
        h["repair"] = handler("repair", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.repair = to_bool(v, l, k);
        });
        h["alpha_in_rhs"] = handler("alpha_in_rhs", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.alpha_in_rhs = to_bool(v, l, k);
        });
        h["pass_fraction"] = handler("pass_fraction", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.pass_fraction = to_double(v, l, k);
        });
        h["exp_eps"] = handler("exp_eps", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.exp_eps = to_double(v, l, k);
        });
        h["exp_s"] = handler("exp_s", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.exp_s = to_double(v, l, k);
        });
        h["points_a"] = handler("points_a", [](ExperimentConfig& c, std::string_view v, int, const std::string&) {
            c.points_a = std::string(v);
        });
        h["points_b"] = handler("points_b", [](ExperimentConfig& c, std::string_view v, int, const std::string&) {
            c.points_b = std::string(v);
        });
        h["bound_K"] = handler("bound_K", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.bound_K = to_double(v, l, k);
        });
        h["bound_Kp"] = handler("bound_Kp", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.bound_Kp = to_double(v, l, k);
        });
        h["bound_lp_sum"] = handler("bound_lp_sum", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.bound_lp_sum = to_double(v, l, k);
        });
        h["d1_0"] = handler("d1_0", [](ExperimentConfig& c, std::string_view v, int l, const std::string& k) {
            c.d1_0 = to_double(v, l, k);
        });
        return h;
    }();
    return table;
}

inline void resolve_path(std::string& p, const std::filesystem::path& base) {
    if (p.empty() || base.empty()) return;
    const std::filesystem::path fp(p);
    if (fp.is_relative()) p = (base / fp).lexically_normal().string();
}

}  // namespace detail

struct ParseOptions {
    std::filesystem::path base_dir;  // resolves relative file paths
    std::optional<Mode> mode;        // required mode (a CLI subcommand)
    std::uint64_t seed_offset = 0;   // added to every seed
};

/// Parses and validates.
inline ExperimentConfig parse_config(std::string_view text, const ParseOptions& opt = {}) {
    ExperimentConfig c;
    bool mode_given = false;
    std::set<std::string> seen;
    const auto& table = detail::key_table();
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "empty key");
        const auto it = table.find(key);
        if (it == table.end()) throw ParseError(line_no, "unknown key '" + key + "'");
        if (!seen.insert(it->second.canonical).second) {
            throw ParseError(line_no, "duplicate key '" + it->second.canonical + "'");
        }
        it->second.apply(c, value, line_no, key);
        mode_given = mode_given || key == "mode";
        c.echo.emplace_back(key == "checkpoint_count" ? key : it->second.canonical, std::string(value));
    }
    if (c.checkpoint_count) {
        const auto n = *c.checkpoint_count;
        for (std::size_t i = 0; i <= n; ++i) c.checkpoints.push_back(c.T * static_cast<double>(i) / static_cast<double>(n));
    }
    if (opt.mode) {
        if (mode_given && c.mode != *opt.mode) {
            throw ValidationError("config mode '" + to_string(c.mode) + "' does not match '" + to_string(*opt.mode) + "'");
        }
        if (!mode_given) c.echo.insert(c.echo.begin(), {"mode", to_string(*opt.mode)});
        c.mode = *opt.mode;
    }
    if (opt.seed_offset != 0) {
        c.seed_offset = opt.seed_offset;
        c.echo.emplace_back("seed_offset", std::to_string(opt.seed_offset));
    }
    detail::resolve_path(c.points_a, opt.base_dir);
    detail::resolve_path(c.points_b, opt.base_dir);
    detail::resolve_path(c.init.path, opt.base_dir);
    if (c.tilde) detail::resolve_path(c.tilde->path, opt.base_dir);
    validate(c);
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ParseOptions opt = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    opt.base_dir = path.parent_path();
    return parse_config(ss.str(), opt);
}

}  // namespace kinetic::harness
