#ifndef MPSTBUS_TESTS_HELPERS_HPP
#define MPSTBUS_TESTS_HELPERS_HPP

#include <set>
#include <string>
#include <vector>

#include "mpstbus/mpstbus.hpp"

namespace testutil {

// Reference set algebra over std::set, independent of the bitmask path.
using ref_set = std::set<unsigned>;

inline ref_set to_ref(mpstbus::role_set s) {
    ref_set out;
    for (mpstbus::role r : s) out.insert(r);
    return out;
}

inline mpstbus::role_set from_ref(const ref_set& s) {
    mpstbus::role_set out;
    for (unsigned r : s) out.insert(r);
    return out;
}

inline ref_set ref_union(const ref_set& a, const ref_set& b) {
    ref_set out = a;
    out.insert(b.begin(), b.end());
    return out;
}

inline ref_set ref_intersect(const ref_set& a, const ref_set& b) {
    ref_set out;
    for (unsigned r : a)
        if (b.count(r)) out.insert(r);
    return out;
}

inline ref_set ref_minus(const ref_set& a, const ref_set& b) {
    ref_set out;
    for (unsigned r : a)
        if (!b.count(r)) out.insert(r);
    return out;
}

/// All subsets of {0..n-1} as role_sets.
inline std::vector<mpstbus::role_set> all_subsets(unsigned n) {
    std::vector<mpstbus::role_set> out;
    for (unsigned bits = 0; bits < (1u << n); ++bits) {
        mpstbus::role_set s;
        for (unsigned r = 0; r < n; ++r)
            if (bits & (1u << r)) s.insert(r);
        out.push_back(s);
    }
    return out;
}

/// Replays a runtime trace through the flat model and reports whether every
/// read delivered exactly what the model delivers.
inline bool oracle_agrees(const std::vector<mpstbus::trace_event>& trace) {
    mpstbus::flat_oracle model;
    for (const auto& ev : trace) {
        if (ev.k != mpstbus::trace_event::kind::read) {
            model.step(ev);
            continue;
        }
        auto got = model.step(ev);
        if (!got || *got != ev.payload) return false;
    }
    return true;
}

/// Payloads delivered to one reader endpoint, in delivery order.
inline std::vector<std::string> delivered_to(const std::vector<mpstbus::trace_event>& trace,
                                             std::uint32_t reader) {
    std::vector<std::string> out;
    for (const auto& ev : trace)
        if (ev.k == mpstbus::trace_event::kind::read && ev.reader == reader)
            out.push_back(ev.payload);
    return out;
}

} // namespace testutil

#endif
