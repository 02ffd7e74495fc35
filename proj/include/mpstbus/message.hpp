#ifndef MPSTBUS_MESSAGE_HPP
#define MPSTBUS_MESSAGE_HPP

#include <cstdint>
#include <string>
#include <variant>

#include "mpstbus/error.hpp"
#include "mpstbus/refcount.hpp"
#include "mpstbus/roles.hpp"

namespace mpstbus {

class board;

/// Counted handle to a board; held by endpoints and by KEEP/KILL payloads.
using board_ref = counted_ptr<board>;

/// MSG and BRANCH are data labels subject to matching and mark-as-read;
/// KEEP and KILL are control labels installed by the link engine.
enum class label : std::uint8_t { msg, branch, keep, kill };

constexpr bool is_control(label l) { return l == label::keep || l == label::kill; }
constexpr bool is_data(label l) { return !is_control(l); }

inline const char* label_name(label l) {
    switch (l) {
        case label::msg: return "MSG";
        case label::branch: return "BRANCH";
        case label::keep: return "KEEP";
        case label::kill: return "KILL";
    }
    return "?";
}

/// Opaque payload bytes; the runtime never inspects them.
using bytes = std::string;

struct data_payload {
    bytes value;
};

struct branch_payload {
    std::string tag;
};

struct link_payload {
    board_ref ref;
};

using payload = std::variant<data_payload, branch_payload, link_payload>;

/// Raw text carried by a data payload (bytes or branch tag).
inline const std::string& payload_text(const payload& p) {
    if (const auto* d = std::get_if<data_payload>(&p)) return d->value;
    if (const auto* b = std::get_if<branch_payload>(&p)) return b->tag;
    throw error(errc::control_label, "payload_text on a board link");
}

inline std::string to_hex(const std::string& s) {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(s.size() * 2);
    for (unsigned char c : s) {
        out += digits[c >> 4];
        out += digits[c & 0xf];
    }
    return out;
}

/// One queued message. `receivers` doubles as the yet-to-read set for data
/// labels; control receivers are fixed at install time and never marked.
/// `seq` is assigned per destination board at append; `stamp` is a global
/// write order used by the FIFO audit.
struct message {
    label lbl = label::msg;
    role sender = 0; // meaningful for data labels only
    role_set receivers;
    payload body;
    std::uint64_t seq = 0;
    std::uint64_t stamp = 0;
};

/// Selective-read pattern: data label, sender, and the receiving roles the
/// reader marks off. Receivers must be nonempty.
struct pattern {
    pattern(label l, role from, role_set recv) : lbl(l), sender(from), receivers(recv) {
        if (!is_data(l)) throw error(errc::control_label, "patterns use data labels");
        if (recv.empty()) throw error(errc::empty_receivers, "pattern receivers empty");
    }

    label lbl;
    role sender;
    role_set receivers;
};

/// Data-label match: same label, same sender, and message receivers a
/// superset of the pattern receivers.
inline bool matches(const message& m, const pattern& p) {
    if (is_control(m.lbl)) throw error(errc::control_label, "matches() on KEEP/KILL");
    return m.lbl == p.lbl && m.sender == p.sender && p.receivers.subset_of(m.receivers);
}

/// Control-label match: receivers only; labels and senders are ignored.
inline bool matches_ctl(const message& m, const pattern& p) {
    if (!is_control(m.lbl)) throw error(errc::data_label, "matches_ctl() on a data message");
    return p.receivers.subset_of(m.receivers);
}

/// Removes read_roles from the receivers field; returns true when the
/// message has been received by everyone and can be deleted.
inline bool mark_read(message& m, role_set read_roles) {
    if (is_control(m.lbl)) throw error(errc::control_label, "mark_read() on KEEP/KILL");
    if (!read_roles.subset_of(m.receivers))
        throw error(errc::not_subset, "mark_read roles not in receivers");
    m.receivers = m.receivers - read_roles;
    return m.receivers.empty();
}

std::uint64_t board_id_of(const board_ref& b); // defined in board.hpp

/// Renders `[MSG] [0:{1,2}] 70` / `[KEEP] [:{0,1}] board#2` for dumps.
inline std::string to_string(const message& m) {
    std::string out = "[";
    out += label_name(m.lbl);
    out += "] [";
    if (is_data(m.lbl)) out += std::to_string(m.sender);
    out += ':';
    out += to_string(m.receivers);
    out += "] ";
    if (const auto* l = std::get_if<link_payload>(&m.body))
        out += "board#" + std::to_string(board_id_of(l->ref));
    else
        out += to_hex(payload_text(m.body));
    return out;
}

} // namespace mpstbus

#endif // MPSTBUS_MESSAGE_HPP
