#ifndef MPSTBUS_ROLES_HPP
#define MPSTBUS_ROLES_HPP

#include <bit>
#include <cctype>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <string>

#include "mpstbus/error.hpp"

namespace mpstbus {

/// Role index within one session, 0-based and dense.
using role = std::uint32_t;

/// Upper bound on session arity; keeps role sets machine-word sized.
inline constexpr role max_roles = 16;

/// A finite set of roles backed by a bitmask. Iteration is ascending by
/// role value so traces and receiver renderings are deterministic.
class role_set {
public:
    constexpr role_set() = default;

    constexpr role_set(std::initializer_list<role> roles) {
        for (role r : roles) insert(r);
    }

    /// The contiguous full set {0, 1, ..., n-1}.
    static constexpr role_set range(role n) {
        role_set s;
        s.bits_ = n >= max_roles ? ~std::uint32_t{0} >> (32 - max_roles)
                                 : (std::uint32_t{1} << n) - 1;
        return s;
    }

    static constexpr role_set single(role r) { return role_set{r}; }

    constexpr bool contains(role r) const {
        return r < max_roles && (bits_ & bit(r)) != 0;
    }

    constexpr void insert(role r) {
        if (r >= max_roles) throw error(errc::role_out_of_range, "role exceeds max_roles");
        bits_ |= bit(r);
    }

    constexpr void erase(role r) { bits_ &= ~bit(r); }

    constexpr bool empty() const { return bits_ == 0; }
    constexpr unsigned size() const { return std::popcount(bits_); }

    constexpr bool subset_of(role_set other) const {
        return (bits_ & ~other.bits_) == 0;
    }

    /// Lowest member; set must be nonempty.
    constexpr role first() const {
        if (empty()) throw error(errc::role_out_of_range, "first() on empty role set");
        return static_cast<role>(std::countr_zero(bits_));
    }

    constexpr std::uint32_t mask() const { return bits_; }

    friend constexpr role_set operator|(role_set a, role_set b) {
        role_set s;
        s.bits_ = a.bits_ | b.bits_;
        return s;
    }
    friend constexpr role_set operator&(role_set a, role_set b) {
        role_set s;
        s.bits_ = a.bits_ & b.bits_;
        return s;
    }
    /// Asymmetric difference a \ b (no subset requirement).
    friend constexpr role_set operator-(role_set a, role_set b) {
        role_set s;
        s.bits_ = a.bits_ & ~b.bits_;
        return s;
    }
    friend constexpr bool operator==(role_set a, role_set b) { return a.bits_ == b.bits_; }
    friend constexpr bool operator!=(role_set a, role_set b) { return a.bits_ != b.bits_; }

    class iterator {
    public:
        using iterator_category = std::forward_iterator_tag;
        using value_type = role;
        using difference_type = std::ptrdiff_t;
        using pointer = const role*;
        using reference = role;

        constexpr iterator() = default;
        constexpr explicit iterator(std::uint32_t rest) : rest_(rest) {}
        constexpr role operator*() const { return static_cast<role>(std::countr_zero(rest_)); }
        constexpr iterator& operator++() {
            rest_ &= rest_ - 1;
            return *this;
        }
        constexpr iterator operator++(int) {
            iterator tmp = *this;
            ++*this;
            return tmp;
        }
        constexpr bool operator==(iterator other) const { return rest_ == other.rest_; }
        constexpr bool operator!=(iterator other) const { return rest_ != other.rest_; }

    private:
        std::uint32_t rest_ = 0;
    };

    constexpr iterator begin() const { return iterator(bits_); }
    constexpr iterator end() const { return iterator(0); }

private:
    static constexpr std::uint32_t bit(role r) { return std::uint32_t{1} << r; }

    std::uint32_t bits_ = 0;
};

constexpr role_set union_of(role_set a, role_set b) { return a | b; }
constexpr role_set intersect(role_set a, role_set b) { return a & b; }

constexpr bool is_subset(role_set a, role_set b) { return a.subset_of(b); }

/// full \ s; s must be contained in full.
constexpr role_set complement(role_set full, role_set s) {
    if (!s.subset_of(full)) throw error(errc::not_subset, "complement: set not within full roles");
    return full - s;
}

/// Textual form `{0,1,2}`; the empty set renders as `{}`.
inline std::string to_string(role_set s) {
    std::string out = "{";
    bool first = true;
    for (role r : s) {
        if (!first) out += ',';
        out += std::to_string(r);
        first = false;
    }
    out += '}';
    return out;
}

/// Parses the textual form produced by to_string. Whitespace is not allowed.
inline role_set parse_role_set(const std::string& text) {
    if (text.size() < 2 || text.front() != '{' || text.back() != '}')
        throw error(errc::syntax, "role set must look like {0,1}");
    role_set out;
    std::size_t i = 1;
    while (i < text.size() - 1) {
        if (!std::isdigit(static_cast<unsigned char>(text[i])))
            throw error(errc::syntax, "expected role number in role set");
        role value = 0;
        while (i < text.size() - 1 && std::isdigit(static_cast<unsigned char>(text[i]))) {
            value = value * 10 + static_cast<role>(text[i] - '0');
            i++;
        }
        if (value >= max_roles) throw error(errc::role_out_of_range, "role exceeds max_roles");
        out.insert(value);
        if (i < text.size() - 1) {
            if (text[i] != ',') throw error(errc::syntax, "expected ',' in role set");
            i++;
            if (i >= text.size() - 1) throw error(errc::syntax, "trailing ',' in role set");
        }
    }
    return out;
}

} // namespace mpstbus

#endif // MPSTBUS_ROLES_HPP
