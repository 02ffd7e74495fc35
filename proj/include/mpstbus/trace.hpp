#ifndef MPSTBUS_TRACE_HPP
#define MPSTBUS_TRACE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mpstbus/message.hpp"
#include "mpstbus/roles.hpp"

namespace mpstbus {

/// Structured record of one committed atomic section. The rendered file
/// format keeps one tab-separated line per event; the structured form
/// carries the extra fields the oracle and the audits need.
struct trace_event {
    enum class kind : std::uint8_t { session, write, read, linkmsg, link, free };

    kind k = kind::write;

    std::uint64_t board = 0; // session/write/read/linkmsg/free: the board acted on
    std::uint64_t seq = 0;   // write/read: message seq on that board

    label lbl = label::msg;  // write: message label; linkmsg: KEEP or KILL
    role from = 0;           // write: sender
    role_set to;             // write: receivers; linkmsg: control receivers; read: pattern receivers
    std::uint64_t ref = 0;   // linkmsg: referenced board; link: unused

    // read bookkeeping
    label pat_label = label::msg;
    role pat_from = 0;
    role msg_sender = 0;
    std::uint64_t msg_stamp = 0;
    std::uint32_t reader = 0;     // endpoint uid issuing the read (0 for raw board reads)
    std::uint32_t redirects = 0;  // KEEP/KILL follows performed by the pass
    std::uint32_t boards_seen = 0;
    bool via_keep = false;        // delivery came out of a KEEP-referenced board

    // session fields
    role_set full;

    // link fields
    std::uint64_t keep_board = 0;
    std::uint64_t kill_board = 0;
    role_set residual;

    std::string payload; // write/read: data bytes or branch tag
};

inline std::string render(const trace_event& e) {
    auto num = [](std::uint64_t v) { return std::to_string(v); };
    switch (e.k) {
        case trace_event::kind::session:
            return "SESSION\tboard=" + num(e.board) + "\tfull=" + to_string(e.full);
        case trace_event::kind::write:
            return "WRITE\tboard=" + num(e.board) + "\tseq=" + num(e.seq) + "\tlabel=" +
                   label_name(e.lbl) + "\tfrom=" + std::to_string(e.from) + "\tto=" + to_string(e.to);
        case trace_event::kind::read:
            return "READ\tboard=" + num(e.board) + "\tseq=" + num(e.seq) + "\tby=" +
                   to_string(e.to) + "\tredirects=" + std::to_string(e.redirects);
        case trace_event::kind::linkmsg:
            return "LINKMSG\tboard=" + num(e.board) + "\tkind=" + label_name(e.lbl) + "\tto=" +
                   to_string(e.to) + "\tref=" + num(e.ref);
        case trace_event::kind::link:
            return "LINK\tkeep=" + num(e.keep_board) + "\tkill=" + num(e.kill_board) +
                   "\tresidual=" + to_string(e.residual);
        case trace_event::kind::free:
            return "FREE\tboard=" + num(e.board);
    }
    return "";
}

inline std::string render(const std::vector<trace_event>& events) {
    std::string out;
    for (const auto& e : events) {
        out += render(e);
        out += '\n';
    }
    return out;
}

/// Monotone counters kept by the runtime. Snapshots are plain values.
struct stats_snapshot {
    std::uint64_t boards_allocated = 0;
    std::uint64_t boards_freed = 0;
    std::uint64_t redirects = 0;       // KEEP/KILL follows across all passes and writes
    std::uint64_t keeps_deleted = 0;
    std::uint64_t keep_deliveries = 0; // reads satisfied from inside a KEEP-referenced board
    std::uint64_t cycle_guard_hits = 0;
    std::uint64_t links = 0;
    std::uint64_t control_refs_live = 0; // queued KEEP/KILL payload refs currently alive
    std::uint64_t max_boards_per_pass = 0;

    std::string to_string() const {
        std::string out;
        out += "boards_allocated=" + std::to_string(boards_allocated) + "\n";
        out += "boards_freed=" + std::to_string(boards_freed) + "\n";
        out += "redirects=" + std::to_string(redirects) + "\n";
        out += "keeps_deleted=" + std::to_string(keeps_deleted) + "\n";
        out += "keep_deliveries=" + std::to_string(keep_deliveries) + "\n";
        out += "cycle_guard_hits=" + std::to_string(cycle_guard_hits) + "\n";
        out += "links=" + std::to_string(links) + "\n";
        out += "control_refs_live=" + std::to_string(control_refs_live) + "\n";
        out += "max_boards_per_pass=" + std::to_string(max_boards_per_pass) + "\n";
        return out;
    }
};

} // namespace mpstbus

#endif // MPSTBUS_TRACE_HPP
