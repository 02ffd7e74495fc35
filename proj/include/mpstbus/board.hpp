#ifndef MPSTBUS_BOARD_HPP
#define MPSTBUS_BOARD_HPP

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mpstbus/error.hpp"
#include "mpstbus/message.hpp"
#include "mpstbus/roles.hpp"
#include "mpstbus/trace.hpp"

namespace mpstbus {

class board;
class endpoint;
class runtime;

namespace detail {
struct link_engine;
struct test_access;
class lock_set;

/// Thrown while building a multi-board atomic section when a board is
/// discovered out of id order and cannot be locked without blocking. The
/// section restarts with the board added to its ordered plan.
struct restart_needed {
    board_ref want;
};
} // namespace detail

/// Notification domain shared by the boards of one linked cluster. Groups
/// form a union-find forest; merging bumps and wakes both roots so blocked
/// readers re-resolve their root and rescan.
struct wake_group {
    std::mutex m;
    std::condition_variable cv;
    std::uint64_t version = 0;
    std::shared_ptr<wake_group> parent; // guarded by runtime wake mutex
};

/// Owns board identity, counters, the trace log, and the wake-group forest.
/// One runtime per scenario run; it must outlive every board it allocates.
class runtime {
public:
    enum class keep_policy { lower_id, higher_id, random };

    runtime() = default;
    runtime(const runtime&) = delete;
    runtime& operator=(const runtime&) = delete;

    board_ref new_board(role_set full);

    stats_snapshot stats() const {
        stats_snapshot s;
        s.boards_allocated = boards_allocated_.load();
        s.boards_freed = boards_freed_.load();
        s.redirects = redirects_.load();
        s.keeps_deleted = keeps_deleted_.load();
        s.keep_deliveries = keep_deliveries_.load();
        s.cycle_guard_hits = cycle_guard_hits_.load();
        s.links = links_.load();
        s.control_refs_live = control_refs_live_.load();
        s.max_boards_per_pass = max_boards_per_pass_.load();
        return s;
    }

    std::vector<trace_event> trace_log() const {
        std::lock_guard lk(trace_mu_);
        return trace_;
    }

    std::size_t trace_size() const { return trace_count_.load(); }

    void set_keep_policy(keep_policy p, std::uint64_t seed = 0) {
        std::lock_guard lk(policy_mu_);
        policy_ = p;
        rng_.seed(seed);
    }

    void set_audit(bool on) { audit_enabled_ = on; }

    std::uint32_t new_endpoint_uid() { return next_endpoint_uid_.fetch_add(1) + 1; }

    unsigned blocked_readers() const { return blocked_readers_.load(); }
    bool stopped() const { return stop_.load(); }

    /// Wakes every blocked reader; their pending read calls fail with
    /// errc::cancelled. Used by the harness to abort a wedged run.
    void request_stop();

    /// Frees a whole linked cluster once no endpoint anywhere in it holds a
    /// reference. Control messages of paired links reference each other, so
    /// plain reference counting alone cannot reclaim a cluster whose KEEPs
    /// were never traversed after draining.
    void collect_if_orphaned(const board_ref& b);

    /// Walks every live board and checks the queue invariants (unique final
    /// KILL, ascending seq, well-formed receivers). Throws on violation.
    void audit_all() const;

    /// Queue dump of every live board, for deadlock diagnostics.
    std::string dump_all() const;

private:
    friend class board;
    friend class endpoint;
    friend struct detail::link_engine;
    friend struct detail::test_access;

    void log_(trace_event e) {
        trace_count_.fetch_add(1);
        std::lock_guard lk(trace_mu_);
        trace_.push_back(std::move(e));
    }

    std::shared_ptr<wake_group> wake_root_(std::shared_ptr<wake_group> g) const {
        std::lock_guard lk(wake_mu_);
        while (g->parent) g = g->parent;
        return g;
    }

    /// Unions the two clusters' notification domains and wakes both sides.
    void merge_wake_(const std::shared_ptr<wake_group>& a, const std::shared_ptr<wake_group>& b) {
        std::shared_ptr<wake_group> ra, rb;
        {
            std::lock_guard lk(wake_mu_);
            ra = a;
            while (ra->parent) ra = ra->parent;
            rb = b;
            while (rb->parent) rb = rb->parent;
            if (ra != rb) rb->parent = ra;
        }
        bump_notify_(ra);
        if (ra != rb) bump_notify_(rb);
    }

    static void bump_notify_(const std::shared_ptr<wake_group>& g) {
        {
            std::lock_guard lk(g->m);
            g->version++;
        }
        g->cv.notify_all();
    }

    bool pick_lower_() {
        std::lock_guard lk(policy_mu_);
        switch (policy_) {
            case keep_policy::lower_id: return true;
            case keep_policy::higher_id: return false;
            case keep_policy::random: return (rng_() & 1) == 0;
        }
        return true;
    }

    static void fetch_max_(std::atomic<std::uint64_t>& a, std::uint64_t v) {
        std::uint64_t cur = a.load();
        while (v > cur && !a.compare_exchange_weak(cur, v)) {
        }
    }

    void register_(std::uint64_t id, board* b) {
        std::lock_guard lk(registry_mu_);
        registry_[id] = b;
    }

    void unregister_(std::uint64_t id) {
        std::lock_guard lk(registry_mu_);
        registry_.erase(id);
    }

    std::atomic<std::uint64_t> next_board_id_{0};
    std::atomic<std::uint64_t> write_stamp_{0};
    std::atomic<std::uint32_t> next_endpoint_uid_{0};
    std::atomic<unsigned> blocked_readers_{0};
    std::atomic<bool> stop_{false};
    std::atomic<bool> audit_enabled_{true};

    std::atomic<std::uint64_t> boards_allocated_{0};
    std::atomic<std::uint64_t> boards_freed_{0};
    std::atomic<std::uint64_t> redirects_{0};
    std::atomic<std::uint64_t> keeps_deleted_{0};
    std::atomic<std::uint64_t> keep_deliveries_{0};
    std::atomic<std::uint64_t> cycle_guard_hits_{0};
    std::atomic<std::uint64_t> links_{0};
    std::atomic<std::uint64_t> control_refs_live_{0};
    std::atomic<std::uint64_t> max_boards_per_pass_{0};

    mutable std::mutex trace_mu_;
    std::vector<trace_event> trace_;
    std::atomic<std::size_t> trace_count_{0};

    mutable std::mutex wake_mu_;

    std::mutex policy_mu_;
    keep_policy policy_ = keep_policy::lower_id;
    std::mt19937_64 rng_;

    mutable std::mutex registry_mu_;
    std::map<std::uint64_t, board*> registry_;
};

/// The blackboard: an unbounded, order-preserving message queue with atomic
/// selective reads, KILL-redirected writes, and reference counting. All
/// cross-board work runs under per-board mutexes acquired in ascending id
/// order (out-of-order discoveries use try_lock and restart the section).
class board : public ref_counted {
public:
    std::uint64_t id() const { return id_; }
    role_set full() const { return full_; }
    runtime& owner() const { return rt_; }
    unsigned endpoint_refs() const { return endpoint_refs_.load(); }

    std::vector<message> queue_snapshot() const {
        std::lock_guard lk(mu_);
        return {queue_.begin(), queue_.end()};
    }

    bool reclaimed() const {
        std::lock_guard lk(mu_);
        return reclaimed_;
    }

    std::string dump() const {
        std::string out = "board#" + std::to_string(id_) + " " + to_string(full_) + "\n";
        for (const auto& m : queue_snapshot()) out += "  " + to_string(m) + "\n";
        return out;
    }

    /// Appends a data message, following trailing KILLs to the cluster's
    /// live tail board first. Wakes every reader of the traversed groups.
    void write(label l, role sender, role_set receivers, payload body);

    /// One traversal pass. Returns the payload of the first matching data
    /// message (marked read with the pattern's receivers and deleted when
    /// fully received), or nothing if this pass found no match. KEEPs whose
    /// referenced board has drained to its lone KILL are deleted on the way.
    std::optional<payload> try_read(const pattern& pat, std::uint32_t reader_uid = 0);

    /// Blocks until a pass succeeds; rescans from the front of this board on
    /// every wake of the cluster's notification group.
    payload read(const pattern& pat, std::uint32_t reader_uid = 0);

private:
    friend class runtime;
    friend class endpoint;
    friend struct detail::link_engine;
    friend struct detail::test_access;
    friend class detail::lock_set;
    template <class T> friend class counted_ptr;

    board(runtime& rt, std::uint64_t id, role_set full)
        : rt_(rt), id_(id), full_(full), wake_(std::make_shared<wake_group>()) {}

    ~board() override;

    struct pass_state {
        const pattern& pat;
        detail::lock_set& ls;
        std::vector<board*> visited;
        struct keep_rec {
            board* owner;
            std::uint64_t keep_seq;
            board* target;
        };
        std::vector<keep_rec> keeps;
        std::uint32_t follows = 0;
    };

    struct scan_hit {
        board* owner;
        std::size_t idx;
        bool via_keep;
    };

    std::optional<scan_hit> scan_(board* b, pass_state& st);
    void delete_drained_keeps_(pass_state& st, std::vector<message>& graveyard);
    void audit_locked_() const;

    static bool seen_(const std::vector<board*>& v, const board* b) {
        return std::find(v.begin(), v.end(), b) != v.end();
    }

    // Back edges of the cluster graph: boards whose queued KEEP/KILL
    // references this one. Guarded by the holder's mu_; entries are removed
    // wherever the referencing message leaves its queue.
    static void link_edge_(board* owner, board* target) { target->inbound_.push_back(owner); }
    static void unlink_edge_(board* owner, board* target) {
        auto& v = target->inbound_;
        auto it = std::find(v.begin(), v.end(), owner);
        if (it != v.end()) v.erase(it);
    }

    runtime& rt_;
    const std::uint64_t id_;
    const role_set full_;
    const std::shared_ptr<wake_group> wake_;

    mutable std::mutex mu_;
    std::deque<message> queue_;     // guarded by mu_
    std::vector<board*> inbound_;   // guarded by mu_
    std::uint64_t next_seq_ = 0;    // guarded by mu_
    bool reclaimed_ = false;        // guarded by mu_

    std::atomic<unsigned> endpoint_refs_{0};
};

inline std::uint64_t board_id_of(const board_ref& b) { return b ? b->id() : 0; }

namespace detail {

/// Ordered per-board exclusivity for one atomic section. Boards planned up
/// front are locked blocking in ascending id order; boards discovered during
/// the section are locked in place when possible (higher id than everything
/// held, or an immediate try_lock), otherwise the section restarts.
class lock_set {
public:
    lock_set() = default;
    lock_set(const lock_set&) = delete;
    lock_set& operator=(const lock_set&) = delete;
    ~lock_set() { unlock_all(); }

    void lock_plan(const std::vector<board_ref>& plan) {
        for (const auto& b : plan) {
            if (held_.count(b->id())) continue;
            b->mu_.lock();
            held_.emplace(b->id(), b.get());
        }
    }

    void ensure(const board_ref& b) {
        board* p = b.get();
        if (held_.count(p->id_)) return;
        if (held_.empty() || p->id_ > held_.rbegin()->first) {
            p->mu_.lock();
        } else if (!p->mu_.try_lock()) {
            throw restart_needed{b};
        }
        held_.emplace(p->id_, p);
    }

    bool holds(const board* b) const { return held_.count(b->id_) != 0; }

    void unlock_all() {
        for (auto& [id, b] : held_) b->mu_.unlock();
        held_.clear();
    }

private:
    std::map<std::uint64_t, board*> held_;
};

/// Runs fn as one atomic section; on restart_needed, grows the ordered lock
/// plan and retries. fn must not mutate shared state before its last ensure.
template <class Fn>
auto with_locked_cluster(board_ref home, Fn&& fn) {
    std::vector<board_ref> plan;
    plan.push_back(std::move(home));
    for (;;) {
        lock_set ls;
        ls.lock_plan(plan);
        try {
            return fn(ls);
        } catch (restart_needed& r) {
            bool known = false;
            for (const auto& b : plan)
                if (b->id() == r.want->id()) known = true;
            if (!known) plan.push_back(std::move(r.want));
            std::sort(plan.begin(), plan.end(),
                      [](const board_ref& a, const board_ref& b) { return a->id() < b->id(); });
        }
    }
}

} // namespace detail

inline board_ref runtime::new_board(role_set full) {
    if (full.size() < 2) throw error(errc::arity_too_small, "a session needs at least two roles");
    std::uint64_t id = next_board_id_.fetch_add(1) + 1;
    board_ref b(new board(*this, id, full));
    boards_allocated_.fetch_add(1);
    register_(id, b.get());
    trace_event ev;
    ev.k = trace_event::kind::session;
    ev.board = id;
    ev.full = full;
    log_(std::move(ev));
    return b;
}

inline board::~board() {
    rt_.unregister_(id_);
    std::uint64_t ctl = 0;
    for (const auto& m : queue_) {
        if (!is_control(m.lbl)) continue;
        ctl++;
        board* t = std::get<link_payload>(m.body).ref.get();
        std::lock_guard lk(t->mu_);
        unlink_edge_(this, t);
    }
    if (ctl) rt_.control_refs_live_.fetch_sub(ctl);
    rt_.boards_freed_.fetch_add(1);
    trace_event ev;
    ev.k = trace_event::kind::free;
    ev.board = id_;
    rt_.log_(std::move(ev));
    // queue_ is destroyed after this body; payload refs release then, which
    // may cascade into freeing further boards of the cluster.
}

inline void board::audit_locked_() const {
    bool kill_seen = false;
    std::uint64_t prev_seq = 0;
    for (std::size_t i = 0; i < queue_.size(); ++i) {
        const message& m = queue_[i];
        if (kill_seen)
            throw error(errc::invariant_violation,
                        "board " + std::to_string(id_) + ": message after KILL");
        if (m.seq <= prev_seq && !(i == 0))
            throw error(errc::invariant_violation, "board " + std::to_string(id_) + ": seq order");
        prev_seq = m.seq;
        if (!m.receivers.subset_of(full_))
            throw error(errc::invariant_violation, "receivers outside session roles");
        if (is_data(m.lbl)) {
            if (m.receivers.empty())
                throw error(errc::invariant_violation, "queued data message with no receivers");
            if (m.receivers.contains(m.sender))
                throw error(errc::invariant_violation, "data message addressed to its sender");
            if (!std::holds_alternative<data_payload>(m.body) &&
                !std::holds_alternative<branch_payload>(m.body))
                throw error(errc::invariant_violation, "data label with link payload");
        } else {
            if (!std::holds_alternative<link_payload>(m.body) ||
                !std::get<link_payload>(m.body).ref)
                throw error(errc::invariant_violation, "control message without board ref");
            if (m.lbl == label::kill) kill_seen = true;
        }
    }
}

inline void board::write(label l, role sender, role_set receivers, payload body) {
    if (!is_data(l)) throw error(errc::control_label, "write takes data labels");
    if (!full_.contains(sender) || !receivers.subset_of(full_))
        throw error(errc::role_out_of_range, "write roles outside the session");
    if (receivers.empty()) throw error(errc::empty_receivers, "write needs a receiver");
    if (receivers.contains(sender)) throw error(errc::self_receive, "sender among receivers");

    std::vector<std::shared_ptr<wake_group>> groups;
    detail::with_locked_cluster(board_ref(this), [&](detail::lock_set& ls) {
        groups.clear();
        board* cur = this;
        if (cur->reclaimed_) throw error(errc::board_closed, "write on a freed board");
        groups.push_back(cur->wake_);
        std::uint32_t hops = 0;
        while (!cur->queue_.empty() && cur->queue_.back().lbl == label::kill) {
            ls.ensure(std::get<link_payload>(cur->queue_.back().body).ref);
            cur = std::get<link_payload>(cur->queue_.back().body).ref.get();
            groups.push_back(cur->wake_);
            hops++;
        }
        message m;
        m.lbl = l;
        m.sender = sender;
        m.receivers = receivers;
        m.body = std::move(body);
        m.seq = ++cur->next_seq_;
        m.stamp = rt_.write_stamp_.fetch_add(1) + 1;

        trace_event ev;
        ev.k = trace_event::kind::write;
        ev.board = cur->id_;
        ev.seq = m.seq;
        ev.lbl = l;
        ev.from = sender;
        ev.to = receivers;
        ev.payload = payload_text(m.body);

        cur->queue_.push_back(std::move(m));
        rt_.redirects_.fetch_add(hops);
        rt_.log_(std::move(ev));
        if (rt_.audit_enabled_.load()) cur->audit_locked_();
        return 0;
    });

    std::vector<std::shared_ptr<wake_group>> roots;
    for (const auto& g : groups) {
        auto r = rt_.wake_root_(g);
        if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
    }
    for (const auto& r : roots) runtime::bump_notify_(r);
}

inline std::optional<board::scan_hit> board::scan_(board* b, pass_state& st) {
    for (std::size_t i = 0; i < b->queue_.size(); ++i) {
        message& m = b->queue_[i];
        if (is_data(m.lbl)) {
            if (matches(m, st.pat)) return scan_hit{b, i, false};
            continue;
        }
        const board_ref& target = std::get<link_payload>(m.body).ref;
        board* t = target.get();
        if (m.lbl == label::keep) {
            if (!matches_ctl(m, st.pat)) continue;
            if (seen_(st.visited, t)) {
                rt_.cycle_guard_hits_.fetch_add(1);
                continue;
            }
            st.ls.ensure(target);
            st.visited.push_back(t);
            st.follows++;
            st.keeps.push_back({b, m.seq, t});
            if (auto hit = scan_(t, st)) {
                hit->via_keep = true;
                return hit;
            }
            continue; // resume right after the KEEP
        }
        // KILL: tail redirect when it matches and the target is new;
        // otherwise this branch of the search fails.
        if (matches_ctl(m, st.pat)) {
            if (seen_(st.visited, t)) {
                rt_.cycle_guard_hits_.fetch_add(1);
                return std::nullopt;
            }
            st.ls.ensure(target);
            st.visited.push_back(t);
            st.follows++;
            return scan_(t, st);
        }
        return std::nullopt;
    }
    return std::nullopt;
}

inline void board::delete_drained_keeps_(pass_state& st, std::vector<message>& graveyard) {
    // Innermost KEEPs first, so a deletion that empties a board lets its own
    // KEEP (one frame up) qualify in the same pass.
    for (auto it = st.keeps.rbegin(); it != st.keeps.rend(); ++it) {
        board* t = it->target;
        if (t->queue_.size() != 1 || t->queue_.front().lbl != label::kill) continue;
        auto& q = it->owner->queue_;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (q[i].lbl == label::keep && q[i].seq == it->keep_seq) {
                unlink_edge_(it->owner, t);
                graveyard.push_back(std::move(q[i]));
                q.erase(q.begin() + static_cast<std::ptrdiff_t>(i));
                rt_.keeps_deleted_.fetch_add(1);
                rt_.control_refs_live_.fetch_sub(1);
                break;
            }
        }
    }
}

inline std::optional<payload> board::try_read(const pattern& pat, std::uint32_t reader_uid) {
    if (!pat.receivers.subset_of(full_))
        throw error(errc::role_out_of_range, "pattern receivers outside the session");

    std::vector<message> graveyard;
    auto out = detail::with_locked_cluster(board_ref(this), [&](detail::lock_set& ls)
                                               -> std::optional<payload> {
        if (reclaimed_) throw error(errc::board_closed, "read on a freed board");
        pass_state st{pat, ls, {}, {}, 0};
        st.visited.push_back(this);
        auto hit = scan_(this, st);
        runtime::fetch_max_(rt_.max_boards_per_pass_, st.visited.size());
        rt_.redirects_.fetch_add(st.follows);
        if (!hit) {
            delete_drained_keeps_(st, graveyard);
            if (rt_.audit_enabled_.load())
                for (board* b : st.visited) b->audit_locked_();
            return std::nullopt;
        }

        message& m = hit->owner->queue_[hit->idx];
        payload delivered = m.body;

        trace_event ev;
        ev.k = trace_event::kind::read;
        ev.board = hit->owner->id_;
        ev.seq = m.seq;
        ev.to = pat.receivers;
        ev.pat_label = pat.lbl;
        ev.pat_from = pat.sender;
        ev.msg_sender = m.sender;
        ev.msg_stamp = m.stamp;
        ev.reader = reader_uid;
        ev.redirects = st.follows;
        ev.boards_seen = static_cast<std::uint32_t>(st.visited.size());
        ev.via_keep = hit->via_keep;
        ev.payload = payload_text(m.body);

        if (mark_read(m, pat.receivers)) {
            auto& q = hit->owner->queue_;
            graveyard.push_back(std::move(q[hit->idx]));
            q.erase(q.begin() + static_cast<std::ptrdiff_t>(hit->idx));
        }
        delete_drained_keeps_(st, graveyard);
        if (hit->via_keep) rt_.keep_deliveries_.fetch_add(1);
        rt_.log_(std::move(ev));
        if (rt_.audit_enabled_.load())
            for (board* b : st.visited) b->audit_locked_();
        return delivered;
    });
    // graveyard releases after the section: freeing a board must not happen
    // while its mutex is held.
    return out;
}

inline payload board::read(const pattern& pat, std::uint32_t reader_uid) {
    for (;;) {
        auto root = rt_.wake_root_(wake_);
        std::uint64_t v;
        {
            std::lock_guard lk(root->m);
            v = root->version;
        }
        if (rt_.stop_.load()) throw error(errc::cancelled, "runtime stopped");
        if (auto got = try_read(pat, reader_uid)) return std::move(*got);
        std::unique_lock lk(root->m);
        rt_.blocked_readers_.fetch_add(1);
        root->cv.wait(lk, [&] { return root->version != v || rt_.stop_.load(); });
        rt_.blocked_readers_.fetch_sub(1);
    }
}

inline void runtime::request_stop() {
    stop_.store(true);
    std::vector<std::shared_ptr<wake_group>> groups;
    {
        std::lock_guard lk(registry_mu_);
        for (auto& [id, b] : registry_) groups.push_back(b->wake_);
    }
    std::vector<std::shared_ptr<wake_group>> roots;
    for (const auto& g : groups) {
        auto r = wake_root_(g);
        if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
    }
    for (const auto& r : roots) bump_notify_(r);
}

inline void runtime::collect_if_orphaned(const board_ref& b) {
    std::vector<message> graveyard;
    std::vector<board_ref> cluster;
    detail::with_locked_cluster(b, [&](detail::lock_set& ls) {
        graveyard.clear();
        cluster.clear();
        cluster.push_back(b);
        if (b->reclaimed_) return 0;
        auto known = [&](const board* p) {
            for (const auto& c : cluster)
                if (c.get() == p) return true;
            return false;
        };
        // Walk the whole connected component, including back edges: a KILL
        // pointing here from a board whose KEEP partner was already deleted
        // still lets that board's readers reach this queue.
        for (std::size_t i = 0; i < cluster.size(); ++i) {
            board* cur = cluster[i].get();
            if (cur->endpoint_refs_.load() > 0) return 0; // cluster still owned
            for (const auto& m : cur->queue_) {
                if (!is_control(m.lbl)) continue;
                const board_ref& t = std::get<link_payload>(m.body).ref;
                if (known(t.get())) continue;
                ls.ensure(t);
                cluster.push_back(t);
            }
            for (board* in : cur->inbound_) {
                if (known(in)) continue;
                // cur's lock pins the entry; a dying holder cannot finish
                // unlinking itself until we let go, so the pointer is valid
                // and try_retain_ decides whether it is revivable.
                if (!in->try_retain_()) continue;
                board_ref r = board_ref::adopt_retained(in);
                ls.ensure(r);
                cluster.push_back(std::move(r));
            }
        }
        // No endpoint references anywhere: the remaining counts are the
        // cluster's own control messages. Detach every queue so the refs
        // unwind outside the locks.
        for (const auto& c : cluster) {
            board* cur = c.get();
            cur->reclaimed_ = true;
            std::uint64_t ctl = 0;
            for (auto& m : cur->queue_) {
                if (!is_control(m.lbl)) {
                    graveyard.push_back(std::move(m));
                    continue;
                }
                ctl++;
                board* t = std::get<link_payload>(m.body).ref.get();
                board::unlink_edge_(cur, t);
                graveyard.push_back(std::move(m));
            }
            cur->queue_.clear();
            if (ctl) control_refs_live_.fetch_sub(ctl);
        }
        return 0;
    });
    // graveyard and cluster refs drop here, cascading the frees.
}

inline void runtime::audit_all() const {
    std::lock_guard lk(registry_mu_);
    for (const auto& [id, b] : registry_) {
        std::lock_guard bl(b->mu_);
        b->audit_locked_();
    }
}

inline std::string runtime::dump_all() const {
    std::vector<board*> boards;
    {
        std::lock_guard lk(registry_mu_);
        for (const auto& [id, b] : registry_) boards.push_back(b);
    }
    std::string out;
    for (board* b : boards) out += b->dump();
    return out;
}

namespace detail {

/// Raw surgery for board-level tests: installs control messages without the
/// link engine's endpoint bookkeeping. The caller is responsible for the
/// KILL-last placement, as the real link engine is.
struct test_access {
    static void append_control(const board_ref& owner, label l, role_set recv,
                               const board_ref& target) {
        runtime& rt = owner->rt_;
        std::scoped_lock lk(owner->mu_, target->mu_);
        message m;
        m.lbl = l;
        m.receivers = recv;
        m.body = link_payload{target};
        m.seq = ++owner->next_seq_;
        owner->queue_.push_back(std::move(m));
        board::link_edge_(owner.get(), target.get());
        rt.control_refs_live_.fetch_add(1);
    }

    static void set_reclaimed(const board_ref& b, bool v) {
        std::lock_guard lk(b->mu_);
        b->reclaimed_ = v;
    }

    static void add_endpoint_ref(const board_ref& b) { b->endpoint_refs_.fetch_add(1); }
    static void drop_endpoint_ref(const board_ref& b) { b->endpoint_refs_.fetch_sub(1); }
};

} // namespace detail

} // namespace mpstbus

#endif // MPSTBUS_BOARD_HPP
