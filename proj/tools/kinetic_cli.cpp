// kinetic: command-line front end.
//
//   kinetic verify --config run.cfg --out results --format csv --workers 4
//
// Exit status: 0 success, 2 when a verify-mode predicate fails, 1 on error.
// Timings go to stderr so the output files stay reproducible.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "kinetic/harness.hpp"

namespace h = kinetic::harness;

int main(int argc, char** argv) {
    CLI::App app{"Particle simulation and stability checks for the homogeneous Boltzmann equation"};
    app.require_subcommand(1);

    std::string config;
    std::string out = "results";
    std::string format = "csv";
    std::uint64_t seed_offset = 0;
    unsigned workers = 1;

    for (const char* name : {"simulate", "couple", "verify", "w1", "bounds"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "Configuration file (key = value lines)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "Output directory")->capture_default_str();
        sub->add_option("--format", format, "csv, json or plot")->check(CLI::IsMember({"csv", "json", "plot"}))->capture_default_str();
        sub->add_option("--seed-offset", seed_offset, "Added to every seed");
        sub->add_option("--workers", workers, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
    }
    CLI11_PARSE(app, argc, argv);

    const std::string mode_name = app.get_subcommands().front()->get_name();
    try {
        h::ParseOptions opt;
        opt.mode = h::parse_mode(mode_name);
        opt.seed_offset = seed_offset;
        const auto cfg = h::load_config(config, opt);
        if ((cfg.mode == h::Mode::couple || cfg.mode == h::Mode::verify) && cfg.N > 2000) {
            std::cerr << "warning: N = " << cfg.N << " makes checkpoint transport solves slow\n";
        }
        const auto report = h::run_experiment(cfg, workers);
        const auto files = h::emit(report, *h::parse_format(format), out);
        for (const auto& f : files) std::cerr << "wrote " << f.string() << '\n';
        std::fprintf(stderr, "wall time %.3f s on %u worker(s)\n", report.wall_seconds, workers);
        if (cfg.mode == h::Mode::verify && !report.all_pass) {
            for (const auto& s : report.summary) {
                if (!s.pass) std::fprintf(stderr, "predicate failed at t = %.17g (%zu/%zu replicas)\n", s.t, s.passed, s.total);
            }
            return 2;
        }
        return 0;
    } catch (const kinetic::ParseError& e) {
        std::cerr << config << ":" << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return 1;
}
