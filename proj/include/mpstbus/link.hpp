#ifndef MPSTBUS_LINK_HPP
#define MPSTBUS_LINK_HPP

#include <optional>
#include <utility>
#include <vector>

#include "mpstbus/board.hpp"
#include "mpstbus/endpoint.hpp"
#include "mpstbus/error.hpp"
#include "mpstbus/message.hpp"
#include "mpstbus/roles.hpp"

namespace mpstbus {

/// KEEP receivers: the roles not involved on the keep side, plus the
/// residual roles (which keep playing on the keep board).
inline role_set keep_receivers(role_set full, role_set keep_played, role_set kill_played) {
    if (!keep_played.subset_of(full) || !kill_played.subset_of(full))
        throw error(errc::not_subset, "played roles outside the session");
    return complement(full, keep_played) | (keep_played & kill_played);
}

/// KILL receivers: the roles not involved on the kill side.
inline role_set kill_receivers(role_set full, role_set kill_played) {
    if (!kill_played.subset_of(full))
        throw error(errc::not_subset, "played roles outside the session");
    return complement(full, kill_played);
}

struct link_outcome {
    std::optional<endpoint> residual; // absent when the residual role set is empty
    std::uint64_t keep_board = 0;
    std::vector<std::uint64_t> kill_boards;
};

namespace detail {

struct link_engine {
    /// Walks trailing KILLs to the cluster's live tail; the control pair is
    /// installed there, like any other write.
    static board* resolve_(lock_set& ls, board* b) {
        while (!b->queue_.empty() && b->queue_.back().lbl == label::kill) {
            const board_ref& t = std::get<link_payload>(b->queue_.back().body).ref;
            ls.ensure(t);
            b = t.get();
        }
        return b;
    }

    /// Senders of every data message reachable from `start` through queued
    /// control references (the whole cluster's undelivered traffic).
    static role_set pending_senders_(lock_set& ls, board* start) {
        std::vector<board*> seen{start};
        role_set out;
        for (std::size_t i = 0; i < seen.size(); ++i) {
            board* cur = seen[i];
            for (const auto& m : cur->queue_) {
                if (is_data(m.lbl)) {
                    out.insert(m.sender);
                    continue;
                }
                const board_ref& t = std::get<link_payload>(m.body).ref;
                if (std::find(seen.begin(), seen.end(), t.get()) != seen.end()) continue;
                ls.ensure(t);
                seen.push_back(t.get());
            }
        }
        return out;
    }

    /// Boards a reader for role y can reach starting at the front of `tail`,
    /// using the same admission rules as try_read.
    static std::vector<board*> role_reach_(lock_set& ls, board* tail, role y) {
        std::vector<board*> seen{tail};
        for (std::size_t i = 0; i < seen.size(); ++i) {
            for (const auto& m : seen[i]->queue_) {
                if (is_data(m.lbl)) continue;
                if (!m.receivers.contains(y)) continue;
                const board_ref& t = std::get<link_payload>(m.body).ref;
                if (std::find(seen.begin(), seen.end(), t.get()) != seen.end()) continue;
                ls.ensure(t);
                seen.push_back(t.get());
            }
        }
        return seen;
    }

    /// A link consumes its operands, so their roles' reads restart from the
    /// cluster tail afterwards. Any message for an operand role that is
    /// parked behind a KEEP whose receivers exclude the role would become
    /// unreachable; refuse the link instead of deadlocking later.
    static void check_stranded_(lock_set& ls, board* tail, role_set operand_roles) {
        std::vector<board*> cluster{tail};
        for (std::size_t i = 0; i < cluster.size(); ++i) {
            for (const auto& m : cluster[i]->queue_) {
                if (is_data(m.lbl)) continue;
                const board_ref& t = std::get<link_payload>(m.body).ref;
                if (std::find(cluster.begin(), cluster.end(), t.get()) != cluster.end()) continue;
                ls.ensure(t);
                cluster.push_back(t.get());
            }
        }
        for (role y : operand_roles) {
            std::vector<board*> reach;
            bool have_reach = false;
            for (board* b : cluster) {
                bool holds_data_for_y = false;
                for (const auto& m : b->queue_)
                    if (is_data(m.lbl) && m.receivers.contains(y)) holds_data_for_y = true;
                if (!holds_data_for_y) continue;
                if (!have_reach) {
                    reach = role_reach_(ls, tail, y);
                    have_reach = true;
                }
                if (std::find(reach.begin(), reach.end(), b) == reach.end())
                    throw error(errc::ill_typed,
                                "pending message for role " + std::to_string(y) +
                                    " on board " + std::to_string(b->id()) +
                                    " would become unreachable after this link");
            }
        }
    }

    static void append_control_(runtime& rt, board* owner, label l, role_set recv, board* target,
                                std::uint64_t stamp) {
        message m;
        m.lbl = l;
        m.receivers = recv;
        m.body = link_payload{board_ref(target)};
        m.seq = ++owner->next_seq_;
        m.stamp = stamp;
        owner->queue_.push_back(std::move(m));
        board::link_edge_(owner, target);
        rt.control_refs_live_.fetch_add(1);

        trace_event ev;
        ev.k = trace_event::kind::linkmsg;
        ev.board = owner->id_;
        ev.lbl = l;
        ev.to = recv;
        ev.ref = target->id_;
        rt.log_(std::move(ev));
    }

    static link_outcome two(endpoint& a, endpoint& b) {
        if (a.closed() || b.closed()) throw error(errc::closed, "link operand already consumed");
        if (a.full() != b.full()) throw error(errc::arity_mismatch, "sessions of different arity");
        if (a.home().get() == b.home().get()) throw error(errc::same_board, "operands share a board");
        role_set full = a.full();
        if ((a.played() | b.played()) != full)
            throw error(errc::coverage_violation,
                        "linked endpoints must cover the session: " + to_string(a.played()) +
                            " + " + to_string(b.played()));
        role_set residual_roles = a.played() & b.played();

        runtime& rt = a.home()->owner();
        link_outcome out;
        std::optional<endpoint> residual;

        with_locked_cluster(a.home(), [&](lock_set& ls) {
            residual.reset();
            ls.ensure(b.home());
            board* ra = resolve_(ls, a.home().get());
            board* rb = resolve_(ls, b.home().get());
            if (ra == rb) throw error(errc::same_board, "operands already share a cluster");

            role_set sa = pending_senders_(ls, ra);
            role_set sb = pending_senders_(ls, rb);
            if (!(sa & sb).empty())
                throw error(errc::ill_typed, "pending messages with shared senders " +
                                                 to_string(sa & sb));
            check_stranded_(ls, ra, a.played());
            check_stranded_(ls, rb, b.played());

            bool a_keeps = rt.pick_lower_() ? ra->id_ < rb->id_ : ra->id_ > rb->id_;
            board* keep = a_keeps ? ra : rb;
            board* kill = a_keeps ? rb : ra;
            role_set keep_played = a_keeps ? a.played() : b.played();
            role_set kill_played = a_keeps ? b.played() : a.played();

            role_set krecv = keep_receivers(full, keep_played, kill_played);
            role_set drecv = kill_receivers(full, kill_played);

            std::uint64_t stamp = rt.write_stamp_.fetch_add(1) + 1;
            append_control_(rt, keep, label::keep, krecv, kill, stamp);
            append_control_(rt, kill, label::kill, drecv, keep, stamp);

            trace_event ev;
            ev.k = trace_event::kind::link;
            ev.keep_board = keep->id_;
            ev.kill_board = kill->id_;
            ev.residual = residual_roles;
            rt.log_(std::move(ev));

            rt.merge_wake_(keep->wake_, kill->wake_);

            a.home()->endpoint_refs_.fetch_sub(1);
            b.home()->endpoint_refs_.fetch_sub(1);
            if (!residual_roles.empty())
                residual.emplace(endpoint(full, residual_roles, board_ref(keep)));

            rt.links_.fetch_add(1);
            if (rt.audit_enabled_.load()) {
                keep->audit_locked_();
                kill->audit_locked_();
            }
            out.keep_board = keep->id_;
            out.kill_boards = {kill->id_};
            return 0;
        });

        // Consume the operands outside the locks; a freed board must not be
        // torn down while the section holds its mutex.
        board_ref ah = std::move(a.board_);
        board_ref bh = std::move(b.board_);
        a.closed_ = true;
        b.closed_ = true;
        rt.collect_if_orphaned(ah);
        rt.collect_if_orphaned(bh);
        ah.reset();
        bh.reset();

        out.residual = std::move(residual);
        return out;
    }
};

} // namespace detail

/// Two-way link with residual: merges the two sessions into one channel,
/// installing a KEEP on the surviving board and a KILL on the drained one.
/// The operands are consumed; the residual endpoint (playing the roles the
/// operands share) is returned, or nothing when that intersection is empty.
inline link_outcome link2(endpoint&& a, endpoint&& b) { return detail::link_engine::two(a, b); }

/// Three-way link, composed as two consecutive two-way links with residual.
inline link_outcome link3(endpoint&& a, endpoint&& b, endpoint&& c) {
    if (a.closed() || b.closed() || c.closed())
        throw error(errc::closed, "link operand already consumed");
    if (a.full() != b.full() || b.full() != c.full())
        throw error(errc::arity_mismatch, "sessions of different arity");
    if (a.home().get() == b.home().get() || a.home().get() == c.home().get() ||
        b.home().get() == c.home().get())
        throw error(errc::same_board, "operands share a board");
    role_set full = a.full();
    if ((a.played() | b.played()) != full)
        throw error(errc::coverage_violation, "first pair must cover the session");
    role_set mid = a.played() & b.played();
    if (mid.empty())
        throw error(errc::empty_intermediate_residual,
                    "first pair leaves nothing to link with the third endpoint");
    if ((mid | c.played()) != full)
        throw error(errc::coverage_violation, "intermediate residual and third endpoint must cover");

    link_outcome first = link2(std::move(a), std::move(b));
    link_outcome second = link2(std::move(*first.residual), std::move(c));
    second.kill_boards.insert(second.kill_boards.begin(), first.kill_boards.begin(),
                              first.kill_boards.end());
    return second;
}

} // namespace mpstbus

#endif // MPSTBUS_LINK_HPP
