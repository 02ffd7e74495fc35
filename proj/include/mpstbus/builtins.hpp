#ifndef MPSTBUS_BUILTINS_HPP
#define MPSTBUS_BUILTINS_HPP

#include <string>

#include "mpstbus/error.hpp"
#include "mpstbus/scenario.hpp"

namespace mpstbus {

/// Binary link: two two-party sessions merged by a middle thread; the
/// residual is empty, so the linking thread holds nothing afterwards.
inline std::string builtin_fig1_text() {
    return "session s1 full=2 parts={0}|{1}\n"
           "session s2 full=2 parts={0}|{1}\n"
           "thread alice:\n"
           "  send s1.e0 0 1 \"ping\"\n"
           "  close s1.e0\n"
           "thread linker:\n"
           "  link2 _ = s1.e1 s2.e0\n"
           "thread bob:\n"
           "  recv s2.e1 0 1 expect \"ping\"\n"
           "  close s2.e1\n"
           "expect freed=2\n";
}

/// Three-player game: the middle player creates both sessions, hands out
/// the outer endpoints, links with residual {1}, and everyone exchanges one
/// broadcast each.
inline std::string builtin_game3_text() {
    return "session g1 full=3 parts={0}|{1,2}\n"
           "session g2 full=3 parts={0,1}|{2}\n"
           "thread player1:\n"
           "  link2 r = g1.e1 g2.e0\n"
           "  bsend r 1 \"from1\"\n"
           "  brecv r 0 expect \"from0\"\n"
           "  brecv r 2 expect \"from2\"\n"
           "  close r\n"
           "thread player0:\n"
           "  bsend g1.e0 0 \"from0\"\n"
           "  brecv g1.e0 1 expect \"from1\"\n"
           "  brecv g1.e0 2 expect \"from2\"\n"
           "  close g1.e0\n"
           "thread player2:\n"
           "  bsend g2.e1 2 \"from2\"\n"
           "  brecv g2.e1 0 expect \"from0\"\n"
           "  brecv g2.e1 1 expect \"from1\"\n"
           "  close g2.e1\n"
           "expect freed=2\n";
}

/// Three-way link via a matchmaker thread; the three remaining parties then
/// converse as one session, each message crossing a different redirect path.
inline std::string builtin_fig3_text() {
    return "session s1 full=3 parts={0}|{1,2}\n"
           "session s2 full=3 parts={1}|{0,2}\n"
           "session s3 full=3 parts={2}|{0,1}\n"
           "thread matcher:\n"
           "  link3 _ = s1.e1 s2.e1 s3.e1\n"
           "thread p0:\n"
           "  send s1.e0 0 1 \"a\"\n"
           "  recv s1.e0 2 0 expect \"c\"\n"
           "  close s1.e0\n"
           "thread p1:\n"
           "  send s2.e0 1 2 \"b\"\n"
           "  recv s2.e0 0 1 expect \"a\"\n"
           "  close s2.e0\n"
           "thread p2:\n"
           "  send s3.e0 2 0 \"c\"\n"
           "  recv s3.e0 1 2 expect \"b\"\n"
           "  close s3.e0\n"
           "expect freed=3\n";
}

/// A chain of n binary links over n+1 boards. Every link after the first
/// operates on an endpoint whose home board is already killed, so the engine
/// resolves through the redirect chain; the producer's final receive sweeps
/// every drained KEEP out of the head board.
inline std::string builtin_queue_text(unsigned n) {
    if (n == 0) throw error(errc::syntax, "queue needs at least one link");
    std::string out;
    for (unsigned i = 0; i <= n; ++i)
        out += "session q" + std::to_string(i) + " full=2 parts={0}|{1}\n";
    out += "thread linker:\n";
    for (unsigned i = 0; i < n; ++i)
        out += "  link2 _ = q" + std::to_string(i) + ".e1 q" + std::to_string(i + 1) + ".e0\n";
    out += "thread producer:\n";
    for (unsigned k = 1; k <= n; ++k)
        out += "  send q0.e0 0 1 \"m" + std::to_string(k) + "\"\n";
    out += "  recv q0.e0 1 0 expect \"done\"\n";
    out += "  close q0.e0\n";
    out += "thread consumer:\n";
    for (unsigned k = 1; k <= n; ++k)
        out += "  recv q" + std::to_string(n) + ".e1 0 1 expect \"m" + std::to_string(k) + "\"\n";
    out += "  send q" + std::to_string(n) + ".e1 1 0 \"done\"\n";
    out += "  close q" + std::to_string(n) + ".e1\n";
    out += "expect freed=" + std::to_string(n + 1) + "\n";
    return out;
}

inline scenario builtin_scenario(const std::string& name, unsigned queue_n = 10) {
    if (name == "fig1") return parse_scenario(builtin_fig1_text());
    if (name == "game3") return parse_scenario(builtin_game3_text());
    if (name == "fig3") return parse_scenario(builtin_fig3_text());
    if (name == "queue") return parse_scenario(builtin_queue_text(queue_n));
    throw error(errc::syntax, "unknown example '" + name + "' (fig1|game3|fig3|queue)");
}

} // namespace mpstbus

#endif // MPSTBUS_BUILTINS_HPP
