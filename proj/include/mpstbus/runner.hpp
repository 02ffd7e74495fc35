#ifndef MPSTBUS_RUNNER_HPP
#define MPSTBUS_RUNNER_HPP

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mpstbus/board.hpp"
#include "mpstbus/endpoint.hpp"
#include "mpstbus/error.hpp"
#include "mpstbus/link.hpp"
#include "mpstbus/oracle.hpp"
#include "mpstbus/scenario.hpp"
#include "mpstbus/trace.hpp"

namespace mpstbus {

struct run_options {
    enum class exec_mode { threads, lockstep };

    exec_mode mode = exec_mode::threads;
    std::uint64_t seed = 0;
    runtime::keep_policy policy = runtime::keep_policy::lower_id;
    std::uint64_t policy_seed = 0;
    std::chrono::milliseconds deadlock_timeout{5000};
};

struct run_report {
    std::vector<std::string> violations;
    stats_snapshot stats;
    std::vector<trace_event> trace;
    std::vector<std::string> deliver_log;
    std::size_t deliveries = 0;

    bool ok() const { return violations.empty(); }

    std::string summary() const {
        if (ok()) return "ok";
        std::string out;
        for (const auto& v : violations) out += v + "\n";
        return out;
    }
};

namespace detail {

class scenario_exec {
public:
    scenario_exec(const scenario& sc, const run_options& opt) : sc_(sc), opt_(opt) {
        rt_.set_keep_policy(opt.policy, opt.policy_seed);
    }

    run_report run() {
        run_report rep;
        try {
            for (const auto& s : sc_.sessions) {
                role_set full = role_set::range(s.arity);
                auto eps = session_new(rt_, full, s.parts);
                for (std::size_t i = 0; i < eps.size(); ++i)
                    table_[s.name + ".e" + std::to_string(i)] = std::move(eps[i]);
            }
        } catch (const std::exception& e) {
            rep.violations.push_back(std::string("setup: ") + e.what());
            return rep;
        }

        if (opt_.mode == run_options::exec_mode::threads)
            run_threads_();
        else
            run_lockstep_();

        finish_checks_(rep);
        return rep;
    }

private:
    enum class step : std::uint8_t { done, blocked };

    endpoint& at_(const std::string& name, int line) {
        std::lock_guard lk(table_mu_);
        auto it = table_.find(name);
        if (it == table_.end())
            throw error(errc::syntax, "line " + std::to_string(line) + ": unknown endpoint '" +
                                          name + "'");
        return it->second;
    }

    void bind_(const std::string& name, std::optional<endpoint> ep) {
        if (name == "_") return;
        std::lock_guard lk(table_mu_);
        if (ep)
            table_[name] = std::move(*ep);
        else
            table_[name]; // bound but already closed: residual was empty
    }

    void check_expect_(const scenario::verb& v, const std::string& got) {
        if (v.expect && got != *v.expect)
            throw error(errc::invariant_violation, "line " + std::to_string(v.line) +
                                                       ": expected \"" + *v.expect +
                                                       "\" but received \"" + got + "\"");
    }

    /// Executes one verb; `can_block` selects blocking reads (thread mode)
    /// versus single-pass reads that report step::blocked (lockstep mode).
    step exec_(const scenario::verb& v, bool can_block) {
        using vk = scenario::verb_kind;
        switch (v.k) {
            case vk::send:
                at_(v.ep, v.line).send(v.from, v.to, v.text);
                break;
            case vk::recv: {
                endpoint& e = at_(v.ep, v.line);
                if (can_block) {
                    check_expect_(v, e.recv(v.from, v.to));
                } else {
                    auto got = e.try_recv(v.from, v.to);
                    if (!got) return step::blocked;
                    check_expect_(v, *got);
                }
                break;
            }
            case vk::bsend:
                at_(v.ep, v.line).bsend(v.from, v.text);
                break;
            case vk::brecv: {
                endpoint& e = at_(v.ep, v.line);
                if (can_block) {
                    check_expect_(v, e.brecv(v.from));
                } else {
                    auto got = e.try_brecv(v.from);
                    if (!got) return step::blocked;
                    check_expect_(v, *got);
                }
                break;
            }
            case vk::choose:
                at_(v.ep, v.line).choose(v.from, v.text);
                break;
            case vk::offer: {
                endpoint& e = at_(v.ep, v.line);
                if (can_block) {
                    check_expect_(v, e.offer(v.from));
                } else {
                    auto got = e.try_offer(v.from);
                    if (!got) return step::blocked;
                    check_expect_(v, *got);
                }
                break;
            }
            case vk::link2: {
                auto out = link2(std::move(at_(v.ep, v.line)), std::move(at_(v.ep2, v.line)));
                bind_(v.bind, std::move(out.residual));
                break;
            }
            case vk::link3: {
                auto out = link3(std::move(at_(v.ep, v.line)), std::move(at_(v.ep2, v.line)),
                                 std::move(at_(v.ep3, v.line)));
                bind_(v.bind, std::move(out.residual));
                break;
            }
            case vk::close:
                at_(v.ep, v.line).close();
                break;
        }
        verbs_done_.fetch_add(1);
        return step::done;
    }

    void violate_(std::string msg) {
        std::lock_guard lk(viol_mu_);
        violations_.push_back(std::move(msg));
    }

    void run_threads_() {
        std::atomic<unsigned> finished{0};
        std::vector<std::thread> workers;
        workers.reserve(sc_.threads.size());
        for (const auto& script : sc_.threads) {
            workers.emplace_back([this, &script, &finished] {
                try {
                    for (const auto& v : script.verbs) exec_(v, true);
                } catch (const error& e) {
                    if (e.code() != errc::cancelled) {
                        violate_("thread " + script.name + ": " + e.what());
                        rt_.request_stop();
                    }
                } catch (const std::exception& e) {
                    violate_("thread " + script.name + ": " + e.what());
                    rt_.request_stop();
                }
                finished.fetch_add(1);
            });
        }

        auto progress = [this] { return rt_.trace_size() + verbs_done_.load(); };
        auto last = progress();
        auto last_change = std::chrono::steady_clock::now();
        while (finished.load() < workers.size()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
            auto cur = progress();
            if (cur != last) {
                last = cur;
                last_change = std::chrono::steady_clock::now();
                continue;
            }
            if (std::chrono::steady_clock::now() - last_change > opt_.deadlock_timeout) {
                violate_("deadlock: no progress for " +
                         std::to_string(opt_.deadlock_timeout.count()) + " ms with " +
                         std::to_string(rt_.blocked_readers()) + " blocked reader(s)");
                rt_.request_stop();
                break;
            }
        }
        for (auto& w : workers) w.join();
    }

    void run_lockstep_() {
        std::mt19937_64 rng(opt_.seed * 0x9e3779b97f4a7c15ull + 0xd1b54a32d192ed03ull);
        std::vector<std::size_t> pc(sc_.threads.size(), 0);
        try {
            for (;;) {
                std::vector<std::size_t> live;
                for (std::size_t i = 0; i < sc_.threads.size(); ++i)
                    if (pc[i] < sc_.threads[i].verbs.size()) live.push_back(i);
                if (live.empty()) return;
                std::shuffle(live.begin(), live.end(), rng);
                bool progressed = false;
                for (std::size_t i : live) {
                    const auto& v = sc_.threads[i].verbs[pc[i]];
                    if (exec_(v, false) == step::done) {
                        pc[i]++;
                        progressed = true;
                    }
                }
                if (!progressed) {
                    std::string detail;
                    for (std::size_t i : live) {
                        const auto& v = sc_.threads[i].verbs[pc[i]];
                        detail += " [" + sc_.threads[i].name + " waits at line " +
                                  std::to_string(v.line) + " on " + std::string(verb_name(v.k)) +
                                  " " + v.ep + "]";
                    }
                    violate_("deadlock: every runnable script is blocked" + detail + "\n" +
                             rt_.dump_all());
                    return;
                }
            }
        } catch (const std::exception& e) {
            violate_(e.what());
        }
    }

    void finish_checks_(run_report& rep) {
        try {
            rt_.audit_all();
        } catch (const std::exception& e) {
            violate_(std::string("audit: ") + e.what());
        }

        rep.trace = rt_.trace_log();
        rep.stats = rt_.stats();

        flat_oracle oracle;
        std::map<std::pair<std::uint32_t, role>, std::uint64_t> fifo;
        for (std::size_t i = 0; i < rep.trace.size(); ++i) {
            const trace_event& ev = rep.trace[i];
            if (ev.k != trace_event::kind::read) {
                oracle.step(ev);
                continue;
            }
            rep.deliveries++;
            auto got = oracle.step(ev);
            if (!got)
                violate_("oracle mismatch at event " + std::to_string(i) +
                         ": runtime delivered \"" + ev.payload + "\" but the model has no match");
            else if (*got != ev.payload)
                violate_("oracle mismatch at event " + std::to_string(i) + ": runtime \"" +
                         ev.payload + "\" vs model \"" + *got + "\"");

            auto key = std::make_pair(ev.reader, ev.msg_sender);
            auto it = fifo.find(key);
            if (it != fifo.end() && ev.msg_stamp <= it->second)
                violate_("per-sender FIFO inversion for reader " + std::to_string(ev.reader) +
                         " sender " + std::to_string(ev.msg_sender));
            fifo[key] = ev.msg_stamp;

            if (ev.boards_seen > rep.stats.links + 1)
                violate_("read pass visited " + std::to_string(ev.boards_seen) +
                         " boards with only " + std::to_string(rep.stats.links) + " links");
        }
        rep.deliver_log = oracle.deliver_log();

        bool all_closed = true;
        {
            std::lock_guard lk(table_mu_);
            for (const auto& [name, ep] : table_)
                if (!ep.closed()) all_closed = false;
        }
        if (all_closed && violations_.empty()) {
            if (rep.stats.boards_allocated != rep.stats.boards_freed)
                violate_("leak: allocated " + std::to_string(rep.stats.boards_allocated) +
                         " boards but freed " + std::to_string(rep.stats.boards_freed));
            if (rep.stats.control_refs_live != 0)
                violate_("leak: " + std::to_string(rep.stats.control_refs_live) +
                         " control message refs still live");
        }
        if (sc_.expect_freed && *sc_.expect_freed != rep.stats.boards_freed)
            violate_("expected " + std::to_string(*sc_.expect_freed) + " boards freed, saw " +
                     std::to_string(rep.stats.boards_freed));

        std::lock_guard lk(viol_mu_);
        rep.violations = violations_;
    }

    const scenario& sc_;
    run_options opt_;
    runtime rt_;
    std::map<std::string, endpoint> table_;
    std::mutex table_mu_;
    std::atomic<std::uint64_t> verbs_done_{0};
    std::mutex viol_mu_;
    std::vector<std::string> violations_;
};

} // namespace detail

/// Runs a parsed scenario to completion under the chosen execution mode and
/// verifies it: queue invariants, flat-model equivalence, per-sender FIFO,
/// traversal bounds, reclamation, and the scenario's own expectations.
inline run_report run_scenario(const scenario& sc, const run_options& opt = {}) {
    detail::scenario_exec exec(sc, opt);
    return exec.run();
}

} // namespace mpstbus

#endif // MPSTBUS_RUNNER_HPP
