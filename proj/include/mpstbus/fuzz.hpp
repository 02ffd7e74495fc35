#ifndef MPSTBUS_FUZZ_HPP
#define MPSTBUS_FUZZ_HPP

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "mpstbus/runner.hpp"
#include "mpstbus/scenario.hpp"

namespace mpstbus {

struct fuzz_options {
    unsigned iterations = 1000;
    std::uint64_t seed = 1;
    unsigned max_arity = 4;
    unsigned max_boards = 4;
    unsigned max_links = 3;
    unsigned max_msgs = 40;
    std::optional<unsigned> force_arity;
    bool run_threads = true;
    bool check_symmetry = true;
    std::string failure_dir = ".";
};

struct fuzz_failure {
    unsigned iter = 0;
    std::uint64_t seed = 0;
    std::string kind;
    std::string detail;
    std::string shrunk_dsl;
    std::string file;
};

struct fuzz_report {
    unsigned iterations = 0;
    std::vector<fuzz_failure> failures;
    std::uint64_t deliveries = 0;
    std::uint64_t keep_deliveries = 0;
    std::uint64_t cycle_guard_hits = 0;
    std::uint64_t links = 0;
    std::uint64_t boards_allocated = 0;

    bool ok() const { return failures.empty(); }
};

namespace detail {

/// Builds one random scenario that satisfies the link preconditions by
/// construction: every new session's operand covers what the chosen pool
/// endpoint lacks, all messages are sent by their role's final owner (so no
/// two boards can ever hold pending data from the same sender), and in
/// binary runs the kill-side parties are gated behind a receive that can
/// only complete after their board is linked away.
class scenario_gen {
public:
    scenario_gen(std::uint64_t seed, const fuzz_options& opts) : rng_(seed), opts_(opts) {}

    scenario build() {
        arity_ = opts_.force_arity ? *opts_.force_arity
                                   : pick_(opts_.max_arity - 2 + 1) + 2;
        full_ = role_set::range(arity_);

        unsigned max_links = std::min(opts_.max_links, opts_.max_boards - 1);
        unsigned links_target = pick_(max_links + 1);

        make_session_(std::nullopt); // session 0
        for (unsigned j = 1; j <= links_target && !pool_.empty(); ++j)
            make_link_(j, j < links_target);

        if (arity_ == 2) make_gates_();
        make_messages_();
        finish_scripts_();
        return std::move(sc_);
    }

private:
    struct owner_desc {
        std::string ep;       // endpoint name
        std::string thread;   // script that owns it
        role_set played;
        std::size_t session = 0;
        bool gated = false;
        bool recv_only = false;
    };

    std::size_t pick_(std::size_t n) { return n ? rng_() % n : 0; }
    bool coin_(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

    role pick_role_(role_set s) {
        std::vector<role> v(s.begin(), s.end());
        return v[pick_(v.size())];
    }

    role_set random_subset_(role_set s) {
        role_set out;
        for (role r : s)
            if (coin_(0.5)) out.insert(r);
        return out;
    }

    std::vector<role_set> random_partition_(role_set s, unsigned min_parts) {
        std::vector<role> v(s.begin(), s.end());
        std::shuffle(v.begin(), v.end(), rng_);
        unsigned parts = min_parts + static_cast<unsigned>(pick_(v.size() - min_parts + 1));
        parts = std::max(1u, std::min<unsigned>(parts, static_cast<unsigned>(v.size())));
        std::vector<role_set> out(parts);
        for (std::size_t i = 0; i < v.size(); ++i)
            out[i < parts ? i : pick_(parts)].insert(v[i]);
        std::sort(out.begin(), out.end(),
                  [](role_set a, role_set b) { return a.first() < b.first(); });
        return out;
    }

    std::vector<scenario::verb>& script_(const std::string& thread) {
        for (auto& t : sc_.threads)
            if (t.name == thread) return t.verbs;
        sc_.threads.push_back({thread, {}});
        return sc_.threads.back().verbs;
    }

    /// Creates a session. If `operand_part` is given, that part becomes the
    /// new link's right operand; otherwise one random part seeds the pool.
    std::string make_session_(std::optional<role_set> operand_part) {
        std::size_t idx = sc_.sessions.size();
        std::string name = "s" + std::to_string(idx);

        std::vector<role_set> parts;
        std::string operand_name;
        if (operand_part) {
            parts.push_back(*operand_part);
            role_set rest = full_ - *operand_part;
            if (!rest.empty())
                for (auto& p : random_partition_(rest, 1)) parts.push_back(p);
            operand_name = name + ".e0";
        } else {
            parts = random_partition_(full_, 2);
        }

        scenario::session_decl d;
        d.name = name;
        d.arity = arity_;
        d.parts = parts;
        sc_.sessions.push_back(d);

        bool pool_seeded = false;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            std::string ep = name + ".e" + std::to_string(i);
            if (operand_part && i == 0) continue; // consumed by the link below
            bool to_pool = operand_part ? (!pool_seeded && coin_(0.35)) : (!pool_seeded);
            if (to_pool) {
                pool_.push_back({ep, "linker", parts[i], idx, false, false});
                pool_seeded = true;
            } else {
                std::string thread = "t" + std::to_string(idx) + "_" + std::to_string(i);
                owners_.push_back({ep, thread, parts[i], idx, false, false});
            }
        }
        return operand_name;
    }

    void make_link_(unsigned j, bool want_more) {
        std::size_t li = pick_(pool_.size());
        owner_desc left = pool_[li];
        pool_.erase(pool_.begin() + static_cast<std::ptrdiff_t>(li));

        role_set extra = random_subset_(left.played);
        if (want_more && pool_.empty() && extra.empty()) extra.insert(pick_role_(left.played));

        role_set operand = (full_ - left.played) | extra;
        std::string right = make_session_(operand);
        std::size_t right_session = sc_.sessions.size() - 1;
        kill_sessions_.push_back(right_session);
        operand_roles_[right_session] = operand;
        migrating_ = migrating_ | left.played | operand;

        scenario::verb v;
        v.k = scenario::verb_kind::link2;
        v.ep = left.ep;
        v.ep2 = right;
        if (extra.empty()) {
            v.bind = "_";
        } else {
            v.bind = "r" + std::to_string(j);
            pool_.push_back({v.bind, "linker", extra, right_session, false, false});
        }
        script_("linker").push_back(std::move(v));
    }

    bool is_kill_session_(std::size_t s) const {
        return std::find(kill_sessions_.begin(), kill_sessions_.end(), s) != kill_sessions_.end();
    }

    /// Arity-2 runs must keep kill boards empty: each kill-side party first
    /// receives a message that is only reachable once its board has been
    /// linked away, so none of its own writes can land there. Gate senders
    /// are picked so the waits-for chains ground out: linker-owned
    /// endpoints and never-killed parties send unconditionally, and a gated
    /// sender is only used for a strictly later session.
    void make_gates_() {
        std::vector<owner_desc*> kill_parties;
        for (auto& o : owners_)
            if (is_kill_session_(o.session)) kill_parties.push_back(&o);
        std::sort(kill_parties.begin(), kill_parties.end(),
                  [](const owner_desc* a, const owner_desc* b) { return a->session < b->session; });

        for (owner_desc* o : kill_parties) {
            role me = o->played.first();
            const owner_desc* sender = nullptr;
            for (const auto& cand : pool_) {
                if (cand.played.contains(me)) continue;
                sender = &cand;
                break;
            }
            if (!sender) {
                for (const auto& cand : owners_) {
                    if (cand.ep == o->ep || cand.played.contains(me) || cand.recv_only) continue;
                    bool safe = !is_kill_session_(cand.session) ||
                                (cand.gated && cand.session < o->session);
                    if (safe) {
                        sender = &cand;
                        break;
                    }
                }
            }
            if (!sender) {
                o->recv_only = true;
                continue;
            }
            role from = sender->played.first();
            std::string pay = "gate_" + o->ep;
            scenario::verb snd;
            snd.k = scenario::verb_kind::send;
            snd.ep = sender->ep;
            snd.from = from;
            snd.to = me;
            snd.text = pay;
            script_(sender->thread).push_back(std::move(snd));
            scenario::verb rcv;
            rcv.k = scenario::verb_kind::recv;
            rcv.ep = o->ep;
            rcv.from = from;
            rcv.to = me;
            rcv.expect = pay;
            script_(o->thread).push_back(std::move(rcv));
            o->gated = true;
        }
    }

    /// Party scripts can race the linker, so an early send lands on the
    /// party's still-unlinked session board. A message is generated only if
    /// its receiver stays reachable wherever the send can land: messages to
    /// never-migrating roles of an older session, messages to the sender's
    /// own session's operand roles (the pre-link pending of the paper's
    /// linking figures), and anything written from the linker's script or
    /// the original session, whose writes always land on a live tail.
    bool receiver_ok_(const owner_desc& snd, role y) const {
        if (snd.thread == "linker" || snd.session == 0) return true;
        auto op = operand_roles_.find(snd.session);
        if (op != operand_roles_.end() && op->second.contains(y)) return true;
        if (migrating_.contains(y)) return false;
        const owner_desc* o = final_owner_(y);
        return o && o->session <= snd.session;
    }

    const owner_desc* final_owner_(role y) const {
        for (const auto& o : finals_)
            if (o.played.contains(y)) return &o;
        return nullptr;
    }

    void make_messages_() {
        // final owners: party endpoints plus whatever the linker still holds
        finals_ = owners_;
        for (const auto& p : pool_) finals_.push_back(p);
        if (finals_.size() < 2) return;

        unsigned budget = 1 + static_cast<unsigned>(pick_(opts_.max_msgs));
        for (unsigned k = 0; k < budget; ++k) {
            const owner_desc& snd = finals_[pick_(finals_.size())];
            if (snd.recv_only) continue;
            role_set others = full_ - snd.played;
            if (others.empty()) continue;
            role from = pick_role_(snd.played);
            std::string pay = "p" + std::to_string(k);
            double dice = std::uniform_real_distribution<double>(0, 1)(rng_);
            bool broadcast_ok = true;
            for (role y : others)
                if (!receiver_ok_(snd, y)) broadcast_ok = false;
            if (dice >= 0.6 && broadcast_ok) {
                bool branch = dice >= 0.8;
                scenario::verb s;
                s.k = branch ? scenario::verb_kind::choose : scenario::verb_kind::bsend;
                s.ep = snd.ep;
                s.from = from;
                s.text = pay;
                script_(snd.thread).push_back(std::move(s));
                for (const auto& o : finals_) {
                    if (o.ep == snd.ep) continue;
                    scenario::verb r;
                    r.k = branch ? scenario::verb_kind::offer : scenario::verb_kind::brecv;
                    r.ep = o.ep;
                    r.from = from;
                    r.expect = pay;
                    script_(o.thread).push_back(std::move(r));
                }
                continue;
            }
            role_set allowed;
            for (role y : others)
                if (receiver_ok_(snd, y)) allowed.insert(y);
            if (allowed.empty()) continue;
            role to = pick_role_(allowed);
            const owner_desc* rdr = final_owner_(to);
            if (!rdr) continue;
            scenario::verb s;
            s.k = scenario::verb_kind::send;
            s.ep = snd.ep;
            s.from = from;
            s.to = to;
            s.text = pay;
            script_(snd.thread).push_back(std::move(s));
            scenario::verb r;
            r.k = scenario::verb_kind::recv;
            r.ep = rdr->ep;
            r.from = from;
            r.to = to;
            r.expect = pay;
            script_(rdr->thread).push_back(std::move(r));
        }
    }

    void finish_scripts_() {
        if (finals_.empty()) {
            finals_ = owners_;
            for (const auto& p : pool_) finals_.push_back(p);
        }
        for (const auto& o : finals_) {
            scenario::verb c;
            c.k = scenario::verb_kind::close;
            c.ep = o.ep;
            script_(o.thread).push_back(std::move(c));
        }
        sc_.expect_freed = sc_.sessions.size();
        // drop empty scripts so the runner spawns no idle threads
        sc_.threads.erase(std::remove_if(sc_.threads.begin(), sc_.threads.end(),
                                         [](const scenario::script& t) { return t.verbs.empty(); }),
                          sc_.threads.end());
    }

    std::mt19937_64 rng_;
    const fuzz_options& opts_;
    unsigned arity_ = 2;
    role_set full_;
    scenario sc_;
    std::vector<owner_desc> owners_;         // party endpoints (own threads)
    std::vector<owner_desc> pool_;           // linker-owned, not yet consumed
    std::vector<owner_desc> finals_;         // endpoints alive after all links
    std::vector<std::size_t> kill_sessions_; // sessions created as link right operands
    std::map<std::size_t, role_set> operand_roles_; // per kill session, its operand's roles
    role_set migrating_; // roles whose owner changes at some link
};

inline std::string failure_kind(const std::vector<std::string>& violations) {
    if (violations.empty()) return "";
    const std::string& v = violations.front();
    for (const char* k : {"oracle", "deadlock", "leak", "FIFO", "audit", "expected", "visited"})
        if (v.find(k) != std::string::npos) return k;
    return "error";
}

/// Per-reader delivered payload sequences, used by the keep-choice symmetry
/// check.
inline std::vector<std::pair<std::uint32_t, std::string>> delivery_seq(const run_report& rep) {
    std::vector<std::pair<std::uint32_t, std::string>> out;
    for (const auto& ev : rep.trace)
        if (ev.k == trace_event::kind::read) out.emplace_back(ev.reader, ev.payload);
    return out;
}

} // namespace detail

inline scenario fuzz_generate(std::uint64_t seed, const fuzz_options& opts) {
    detail::scenario_gen gen(seed, opts);
    return gen.build();
}

/// Greedy shrink: repeatedly drop whole message groups (one send and all of
/// its receives) while the failure kind is preserved under lockstep replay.
inline scenario fuzz_shrink(scenario sc, const run_options& ropt, const std::string& kind) {
    auto still_fails = [&](const scenario& cand) {
        run_report rep = run_scenario(cand, ropt);
        return detail::failure_kind(rep.violations) == kind;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::string> payloads;
        for (const auto& t : sc.threads)
            for (const auto& v : t.verbs)
                if ((v.k == scenario::verb_kind::send || v.k == scenario::verb_kind::bsend ||
                     v.k == scenario::verb_kind::choose) &&
                    std::find(payloads.begin(), payloads.end(), v.text) == payloads.end())
                    payloads.push_back(v.text);
        for (const auto& pay : payloads) {
            scenario cand = sc;
            for (auto& t : cand.threads)
                t.verbs.erase(std::remove_if(t.verbs.begin(), t.verbs.end(),
                                             [&](const scenario::verb& v) {
                                                 bool is_msg =
                                                     v.k != scenario::verb_kind::link2 &&
                                                     v.k != scenario::verb_kind::link3 &&
                                                     v.k != scenario::verb_kind::close;
                                                 return is_msg && (v.text == pay ||
                                                                   (v.expect && *v.expect == pay));
                                             }),
                              t.verbs.end());
            if (still_fails(cand)) {
                sc = std::move(cand);
                changed = true;
            }
        }
    }
    return sc;
}

inline fuzz_report fuzz_run(const fuzz_options& opts, std::ostream* log = nullptr) {
    fuzz_report rep;
    for (unsigned iter = 0; iter < opts.iterations; ++iter) {
        std::uint64_t seed = opts.seed * 0x100000001b3ull + iter * 0x9e3779b97f4a7c15ull + 1;
        scenario sc = fuzz_generate(seed, opts);

        run_options lock;
        lock.mode = run_options::exec_mode::lockstep;
        lock.seed = seed;
        run_report primary = run_scenario(sc, lock);

        std::string kind = detail::failure_kind(primary.violations);
        std::string detail_msg = primary.violations.empty() ? "" : primary.violations.front();
        run_options failing_opt = lock;

        unsigned links_planned = 0;
        for (const auto& t : sc.threads)
            for (const auto& v : t.verbs)
                if (v.k == scenario::verb_kind::link2) links_planned++;

        // Keep-choice symmetry is only claimed for shapes where every
        // pending message stays admissible under either choice: a single
        // link, or binary sessions (whose KEEP chains telescope).
        bool symmetric_shape = links_planned <= 1 || sc.sessions.front().arity == 2;
        if (kind.empty() && opts.check_symmetry && symmetric_shape) {
            run_options flipped = lock;
            flipped.policy = runtime::keep_policy::higher_id;
            run_report mirrored = run_scenario(sc, flipped);
            if (!mirrored.ok()) {
                kind = detail::failure_kind(mirrored.violations);
                detail_msg = "keep-choice flipped: " + mirrored.violations.front();
                failing_opt = flipped;
            } else if (detail::delivery_seq(primary) != detail::delivery_seq(mirrored)) {
                kind = "symmetry";
                detail_msg = "keep-board choice changed a delivered payload sequence";
                failing_opt = flipped;
            }
        }

        if (kind.empty() && opts.run_threads) {
            run_options thr;
            thr.mode = run_options::exec_mode::threads;
            thr.seed = seed;
            run_report concurrent = run_scenario(sc, thr);
            if (!concurrent.ok()) {
                kind = "threads-" + detail::failure_kind(concurrent.violations);
                detail_msg = concurrent.violations.front();
                failing_opt = thr;
            }
            rep.deliveries += concurrent.deliveries;
            rep.keep_deliveries += concurrent.stats.keep_deliveries;
            rep.cycle_guard_hits += concurrent.stats.cycle_guard_hits;
        }

        rep.deliveries += primary.deliveries;
        rep.keep_deliveries += primary.stats.keep_deliveries;
        rep.cycle_guard_hits += primary.stats.cycle_guard_hits;
        rep.links += primary.stats.links;
        rep.boards_allocated += primary.stats.boards_allocated;

        if (!kind.empty()) {
            fuzz_failure f;
            f.iter = iter;
            f.seed = seed;
            f.kind = kind;
            f.detail = detail_msg;
            run_options shrink_opt = failing_opt;
            shrink_opt.mode = run_options::exec_mode::lockstep; // reproducible replays
            scenario small = fuzz_shrink(sc, shrink_opt, detail::failure_kind({detail_msg}));
            f.shrunk_dsl = print_scenario(small);
            f.file = opts.failure_dir + "/fuzz_failure_" + std::to_string(iter) + ".mpst";
            std::ofstream out(f.file);
            out << f.shrunk_dsl;
            rep.failures.push_back(std::move(f));
            if (log) *log << "iter " << iter << " FAILED (" << kind << "): " << detail_msg << "\n";
        }
        rep.iterations++;
        if (log && (iter + 1) % 200 == 0)
            *log << "fuzz: " << (iter + 1) << "/" << opts.iterations << " scenarios\n";
    }
    return rep;
}

} // namespace mpstbus

#endif // MPSTBUS_FUZZ_HPP
