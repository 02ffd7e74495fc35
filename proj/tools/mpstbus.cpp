#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mpstbus/mpstbus.hpp"

namespace {

struct shared_flags {
    std::string mode = "threads";
    std::uint64_t seed = 0;
    std::string trace_path;
    bool stats = false;
    bool link_random = false;
};

mpstbus::run_options make_options(const shared_flags& fl) {
    mpstbus::run_options opt;
    opt.mode = fl.mode == "lockstep" ? mpstbus::run_options::exec_mode::lockstep
                                     : mpstbus::run_options::exec_mode::threads;
    opt.seed = fl.seed;
    if (fl.link_random) {
        opt.policy = mpstbus::runtime::keep_policy::random;
        opt.policy_seed = fl.seed;
    }
    return opt;
}

int run_and_report(const mpstbus::scenario& sc, const shared_flags& fl) {
    mpstbus::run_report rep = mpstbus::run_scenario(sc, make_options(fl));
    if (!fl.trace_path.empty()) {
        std::ofstream out(fl.trace_path);
        if (!out) {
            std::cerr << "cannot open trace file " << fl.trace_path << "\n";
            return 2;
        }
        out << mpstbus::render(rep.trace);
        for (const auto& line : rep.deliver_log) out << line << "\n";
    }
    if (fl.stats) std::cout << rep.stats.to_string();
    if (!rep.ok()) {
        for (const auto& v : rep.violations) std::cerr << "violation: " << v << "\n";
        return 1;
    }
    std::cout << "ok: " << rep.deliveries << " deliveries, " << rep.stats.boards_allocated
              << " boards allocated, " << rep.stats.boards_freed << " freed\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mpstbus - multiparty session channels over linked blackboards"};
    app.require_subcommand(1);

    shared_flags fl;

    auto add_shared = [&fl](CLI::App* cmd) {
        cmd->add_option("--mode", fl.mode, "execution mode")
            ->check(CLI::IsMember({"threads", "lockstep"}));
        cmd->add_option("--seed", fl.seed, "scheduler / link seed");
        cmd->add_option("--trace", fl.trace_path, "write the event trace to a file");
        cmd->add_flag("--stats", fl.stats, "print runtime counters");
        cmd->add_flag("--link-random", fl.link_random, "pick keep boards at random (seeded)");
    };

    std::string scenario_file;
    CLI::App* run = app.add_subcommand("run", "run a scenario file");
    run->add_option("file", scenario_file, "scenario in the mpst DSL")->required();
    add_shared(run);

    std::string example_name;
    unsigned queue_n = 10;
    bool print_only = false;
    CLI::App* example = app.add_subcommand("example", "run a built-in scenario");
    example->add_option("name", example_name, "fig1|game3|fig3|queue")->required();
    example->add_option("n", queue_n, "chain length for queue");
    example->add_flag("--print", print_only, "print the scenario instead of running it");
    add_shared(example);

    unsigned iters = 1000;
    std::uint64_t fuzz_seed = 1;
    unsigned fuzz_arity = 0;
    bool fuzz_lockstep_only = false;
    CLI::App* fuzz = app.add_subcommand("fuzz", "run randomized scenarios against the flat model");
    fuzz->add_option("--iters", iters, "number of scenarios");
    fuzz->add_option("--seed", fuzz_seed, "generator seed");
    fuzz->add_option("--arity", fuzz_arity, "fix the session arity (2..4)");
    fuzz->add_flag("--lockstep-only", fuzz_lockstep_only, "skip the multithreaded runs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            std::ifstream in(scenario_file);
            if (!in) {
                std::cerr << "cannot open " << scenario_file << "\n";
                return 2;
            }
            std::stringstream buf;
            buf << in.rdbuf();
            return run_and_report(mpstbus::parse_scenario(buf.str()), fl);
        }
        if (example->parsed()) {
            mpstbus::scenario sc = mpstbus::builtin_scenario(example_name, queue_n);
            if (print_only) {
                std::cout << mpstbus::print_scenario(sc);
                return 0;
            }
            return run_and_report(sc, fl);
        }
        if (fuzz->parsed()) {
            mpstbus::fuzz_options fo;
            fo.iterations = iters;
            fo.seed = fuzz_seed;
            if (fuzz_arity) fo.force_arity = fuzz_arity;
            fo.run_threads = !fuzz_lockstep_only;
            mpstbus::fuzz_report rep = mpstbus::fuzz_run(fo, &std::cout);
            std::cout << rep.iterations << " scenarios, " << rep.deliveries << " deliveries, "
                      << rep.links << " links, " << rep.keep_deliveries
                      << " deliveries through KEEP, " << rep.failures.size() << " failures\n";
            if (!rep.ok()) {
                for (const auto& f : rep.failures)
                    std::cerr << "iter " << f.iter << " (" << f.kind << "): " << f.detail
                              << "\n  shrunk scenario written to " << f.file << "\n";
                return 1;
            }
            return 0;
        }
    } catch (const mpstbus::error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == mpstbus::errc::syntax ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 2;
}
