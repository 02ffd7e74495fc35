#ifndef MPSTBUS_ENDPOINT_HPP
#define MPSTBUS_ENDPOINT_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpstbus/board.hpp"
#include "mpstbus/error.hpp"
#include "mpstbus/message.hpp"
#include "mpstbus/roles.hpp"

namespace mpstbus {

namespace detail {
struct link_engine;
}

/// A party's capability on a session channel: the session's full role set,
/// the subset of roles this party plays, and a counted board reference.
/// Endpoints are single-owner and move-only; linking consumes its operands.
class endpoint {
public:
    endpoint() = default;
    endpoint(const endpoint&) = delete;
    endpoint& operator=(const endpoint&) = delete;

    endpoint(endpoint&& other) noexcept { move_from_(other); }

    endpoint& operator=(endpoint&& other) noexcept {
        if (this != &other) {
            release_quietly_();
            move_from_(other);
        }
        return *this;
    }

    ~endpoint() { release_quietly_(); }

    role_set full() const { return full_; }
    role_set played() const { return played_; }
    bool closed() const { return closed_; }
    std::uint32_t uid() const { return uid_; }
    const board_ref& home() const { return board_; }

    /// Point-to-point send; non-blocking.
    void send(role from, role to, bytes data) {
        require_open_();
        if (!played_.contains(from)) throw error(errc::not_played, "sender role not played here");
        if (!full_.contains(to)) throw error(errc::role_out_of_range, "receiver outside session");
        if (played_.contains(to)) throw error(errc::self_send, "receiver role played by this endpoint");
        board_->write(label::msg, from, role_set::single(to), data_payload{std::move(data)});
    }

    /// Receives the next point-to-point message for `me` from `from`.
    bytes recv(role from, role me) {
        return payload_text(board_->read(recv_pattern_(from, me), uid_));
    }

    std::optional<bytes> try_recv(role from, role me) {
        auto got = board_->try_read(recv_pattern_(from, me), uid_);
        if (!got) return std::nullopt;
        return payload_text(*got);
    }

    /// Broadcast to every role this endpoint does not play.
    void bsend(role from, bytes data) {
        require_open_();
        if (!played_.contains(from)) throw error(errc::not_played, "sender role not played here");
        role_set to = full_ - played_;
        if (to.empty()) throw error(errc::empty_receivers, "no one else to broadcast to");
        board_->write(label::msg, from, to, data_payload{std::move(data)});
    }

    /// Receives a broadcast, marking every role this endpoint plays.
    bytes brecv(role from) {
        return payload_text(board_->read(bcast_pattern_(label::msg, from), uid_));
    }

    std::optional<bytes> try_brecv(role from) {
        auto got = board_->try_read(bcast_pattern_(label::msg, from), uid_);
        if (!got) return std::nullopt;
        return payload_text(*got);
    }

    /// Broadcast a branch choice to every other party.
    void choose(role from, std::string tag) {
        require_open_();
        if (!played_.contains(from)) throw error(errc::not_played, "sender role not played here");
        role_set to = full_ - played_;
        if (to.empty()) throw error(errc::empty_receivers, "no one else to offer to");
        board_->write(label::branch, from, to, branch_payload{std::move(tag)});
    }

    std::string offer(role from) {
        return payload_text(board_->read(bcast_pattern_(label::branch, from), uid_));
    }

    std::optional<std::string> try_offer(role from) {
        auto got = board_->try_read(bcast_pattern_(label::branch, from), uid_);
        if (!got) return std::nullopt;
        return payload_text(*got);
    }

    /// Releases this party's board reference. Each endpoint terminates on
    /// its own; the board is freed once nothing references it.
    void close() {
        if (closed_) throw error(errc::already_closed, "endpoint already closed");
        closed_ = true;
        board_->endpoint_refs_.fetch_sub(1);
        board_ref b = std::move(board_);
        b->owner().collect_if_orphaned(b);
    }

private:
    friend struct detail::link_engine;
    friend std::vector<endpoint> session_new(runtime&, role_set, const std::vector<role_set>&);

    endpoint(role_set full, role_set played, board_ref b)
        : full_(full), played_(played), board_(std::move(b)), closed_(false),
          uid_(board_->owner().new_endpoint_uid()) {
        board_->endpoint_refs_.fetch_add(1);
    }

    void require_open_() const {
        if (closed_) throw error(errc::closed, "endpoint is closed");
    }

    pattern recv_pattern_(role from, role me) const {
        require_open_();
        if (!played_.contains(me)) throw error(errc::not_played, "receiving role not played here");
        if (!full_.contains(from)) throw error(errc::role_out_of_range, "sender outside session");
        if (played_.contains(from)) throw error(errc::self_receive, "receiving from an own role");
        return pattern(label::msg, from, role_set::single(me));
    }

    pattern bcast_pattern_(label l, role from) const {
        require_open_();
        if (!full_.contains(from)) throw error(errc::role_out_of_range, "sender outside session");
        if (played_.contains(from)) throw error(errc::self_receive, "receiving from an own role");
        return pattern(l, from, played_);
    }

    void move_from_(endpoint& other) {
        full_ = other.full_;
        played_ = other.played_;
        board_ = std::move(other.board_);
        closed_ = other.closed_;
        uid_ = other.uid_;
        other.closed_ = true;
        other.board_ = board_ref();
    }

    void release_quietly_() {
        if (closed_ || !board_) return;
        closed_ = true;
        try {
            board_->endpoint_refs_.fetch_sub(1);
            board_ref b = std::move(board_);
            b->owner().collect_if_orphaned(b);
        } catch (...) {
        }
    }

    role_set full_;
    role_set played_;
    board_ref board_;
    bool closed_ = true;
    std::uint32_t uid_ = 0;
};

/// Allocates one board and one endpoint per part. Parts must be nonempty,
/// pairwise disjoint, and cover the full role set.
inline std::vector<endpoint> session_new(runtime& rt, role_set full,
                                         const std::vector<role_set>& parts) {
    if (parts.empty()) throw error(errc::bad_partition, "no parts");
    role_set seen;
    for (const auto& p : parts) {
        if (p.empty()) throw error(errc::bad_partition, "empty part");
        if (!(p & seen).empty()) throw error(errc::bad_partition, "overlapping parts");
        if (!p.subset_of(full)) throw error(errc::bad_partition, "part outside full roles");
        seen = seen | p;
    }
    if (seen != full) throw error(errc::bad_partition, "parts do not cover the session");

    board_ref b = rt.new_board(full);
    std::vector<endpoint> out;
    out.reserve(parts.size());
    for (const auto& p : parts) out.push_back(endpoint(full, p, b));
    return out;
}

} // namespace mpstbus

#endif // MPSTBUS_ENDPOINT_HPP
