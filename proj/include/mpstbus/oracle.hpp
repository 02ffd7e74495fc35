#ifndef MPSTBUS_ORACLE_HPP
#define MPSTBUS_ORACLE_HPP

#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mpstbus/message.hpp"
#include "mpstbus/roles.hpp"
#include "mpstbus/trace.hpp"

namespace mpstbus {

/// Independent reference semantics for linked channels: each cluster of
/// linked boards is a single flat message queue. Links concatenate the kill
/// designate's pending messages after the keep designate's (legal because
/// their senders are disjoint); reads use the very same match and
/// mark-as-read rules as the runtime but never see KEEP or KILL messages.
///
/// The oracle replays the runtime's committed-event log, so a fixed
/// linearization yields a pure, deterministic delivery sequence to compare
/// against.
class flat_oracle {
public:
    struct delivery {
        role_set reader;
        role from;
        std::string payload;
        std::uint64_t idx;
    };

    /// Feeds one committed event. For read events, returns the payload this
    /// model delivers (or nothing when it has no matching message, which is
    /// always a mismatch against a runtime delivery).
    std::optional<std::string> step(const trace_event& ev) {
        switch (ev.k) {
            case trace_event::kind::session:
                parent_[ev.board] = ev.board;
                queues_[ev.board];
                return std::nullopt;
            case trace_event::kind::write: {
                entry e{ev.lbl, ev.from, ev.to, ev.payload};
                queues_[find_(ev.board)].push_back(std::move(e));
                return std::nullopt;
            }
            case trace_event::kind::read: {
                auto& q = queues_[find_(ev.board)];
                for (std::size_t i = 0; i < q.size(); ++i) {
                    entry& e = q[i];
                    if (e.lbl != ev.pat_label || e.sender != ev.pat_from) continue;
                    if (!ev.to.subset_of(e.recv)) continue;
                    std::string out = e.text;
                    e.recv = e.recv - ev.to;
                    if (e.recv.empty()) q.erase(q.begin() + static_cast<std::ptrdiff_t>(i));
                    deliveries_.push_back({ev.to, ev.pat_from, out, deliveries_.size()});
                    return out;
                }
                return std::nullopt;
            }
            case trace_event::kind::link: {
                std::uint64_t rk = find_(ev.keep_board);
                std::uint64_t rd = find_(ev.kill_board);
                if (rk == rd) return std::nullopt;
                auto& keep_q = queues_[rk];
                auto& kill_q = queues_[rd];
                for (auto& e : kill_q) keep_q.push_back(std::move(e));
                queues_.erase(rd);
                parent_[rd] = rk;
                return std::nullopt;
            }
            case trace_event::kind::linkmsg:
            case trace_event::kind::free:
                return std::nullopt;
        }
        return std::nullopt;
    }

    const std::vector<delivery>& deliveries() const { return deliveries_; }

    std::vector<std::string> deliver_log() const {
        std::vector<std::string> out;
        out.reserve(deliveries_.size());
        for (const auto& d : deliveries_)
            out.push_back("DELIVER\treader=" + to_string(d.reader) + "\tfrom=" +
                          std::to_string(d.from) + "\tpayload=" + to_hex(d.payload) + "\tidx=" +
                          std::to_string(d.idx));
        return out;
    }

    /// Total undelivered data messages across all clusters.
    std::size_t pending_messages() const {
        std::size_t n = 0;
        for (const auto& [id, q] : queues_) n += q.size();
        return n;
    }

    std::size_t cluster_count() const { return queues_.size(); }

private:
    struct entry {
        label lbl;
        role sender;
        role_set recv;
        std::string text;
    };

    std::uint64_t find_(std::uint64_t id) {
        if (!parent_.count(id)) {
            parent_[id] = id;
            queues_[id];
            return id;
        }
        std::uint64_t root = id;
        while (parent_[root] != root) root = parent_[root];
        std::uint64_t cur = id;
        while (parent_[cur] != root) {
            std::uint64_t next = parent_[cur];
            parent_[cur] = root;
            cur = next;
        }
        return root;
    }

    std::unordered_map<std::uint64_t, std::uint64_t> parent_;
    std::unordered_map<std::uint64_t, std::deque<entry>> queues_;
    std::vector<delivery> deliveries_;
};

} // namespace mpstbus

#endif // MPSTBUS_ORACLE_HPP
