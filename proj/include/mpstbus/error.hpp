#ifndef MPSTBUS_ERROR_HPP
#define MPSTBUS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mpstbus {

enum class errc {
    // role set algebra
    not_subset,
    role_out_of_range,
    // message layer
    control_label,
    data_label,
    // board layer
    arity_too_small,
    empty_receivers,
    self_receive,
    board_closed,
    // endpoint layer
    bad_partition,
    closed,
    not_played,
    self_send,
    already_closed,
    // link engine
    arity_mismatch,
    same_board,
    coverage_violation,
    ill_typed,
    empty_intermediate_residual,
    // harness
    syntax,
    deadlock,
    invariant_violation,
    cancelled,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::not_subset: return "not_subset";
        case errc::role_out_of_range: return "role_out_of_range";
        case errc::control_label: return "control_label";
        case errc::data_label: return "data_label";
        case errc::arity_too_small: return "arity_too_small";
        case errc::empty_receivers: return "empty_receivers";
        case errc::self_receive: return "self_receive";
        case errc::board_closed: return "board_closed";
        case errc::bad_partition: return "bad_partition";
        case errc::closed: return "closed";
        case errc::not_played: return "not_played";
        case errc::self_send: return "self_send";
        case errc::already_closed: return "already_closed";
        case errc::arity_mismatch: return "arity_mismatch";
        case errc::same_board: return "same_board";
        case errc::coverage_violation: return "coverage_violation";
        case errc::ill_typed: return "ill_typed";
        case errc::empty_intermediate_residual: return "empty_intermediate_residual";
        case errc::syntax: return "syntax";
        case errc::deadlock: return "deadlock";
        case errc::invariant_violation: return "invariant_violation";
        case errc::cancelled: return "cancelled";
    }
    return "unknown";
}

/// Runtime error carrying a machine-checkable code alongside the message.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const { return code_; }

private:
    errc code_;
};

} // namespace mpstbus

#endif // MPSTBUS_ERROR_HPP
