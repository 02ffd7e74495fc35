#ifndef MPSTBUS_SCENARIO_HPP
#define MPSTBUS_SCENARIO_HPP

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mpstbus/error.hpp"
#include "mpstbus/roles.hpp"

namespace mpstbus {

/// A parsed scenario: session declarations, one verb script per thread, and
/// the run's expectations. Endpoints are addressed as `<session>.e<k>` (k-th
/// part of the declared partition) or by a name bound by a link verb.
struct scenario {
    struct session_decl {
        std::string name;
        unsigned arity = 0;
        std::vector<role_set> parts;
        int line = 0;
    };

    enum class verb_kind : std::uint8_t {
        send,
        recv,
        bsend,
        brecv,
        choose,
        offer,
        link2,
        link3,
        close
    };

    struct verb {
        verb_kind k = verb_kind::close;
        std::string ep;   // primary endpoint operand
        std::string ep2;  // link2/link3 second operand
        std::string ep3;  // link3 third operand
        std::string bind; // link residual binding; "_" discards
        role from = 0;
        role to = 0; // doubles as `me` for recv
        std::string text;
        std::optional<std::string> expect;
        int line = 0;
    };

    struct script {
        std::string name;
        std::vector<verb> verbs;
    };

    std::vector<session_decl> sessions;
    std::vector<script> threads;
    std::optional<std::uint64_t> expect_freed;
};

inline const char* verb_name(scenario::verb_kind k) {
    switch (k) {
        case scenario::verb_kind::send: return "send";
        case scenario::verb_kind::recv: return "recv";
        case scenario::verb_kind::bsend: return "bsend";
        case scenario::verb_kind::brecv: return "brecv";
        case scenario::verb_kind::choose: return "choose";
        case scenario::verb_kind::offer: return "offer";
        case scenario::verb_kind::link2: return "link2";
        case scenario::verb_kind::link3: return "link3";
        case scenario::verb_kind::close: return "close";
    }
    return "?";
}

namespace detail {

struct dsl_token {
    std::string text;
    bool quoted = false;
    int col = 0;
};

inline std::vector<dsl_token> dsl_tokens(const std::string& line, int lineno) {
    std::vector<dsl_token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            i++;
            continue;
        }
        if (line[i] == '#') break;
        int col = static_cast<int>(i) + 1;
        if (line[i] == '"') {
            std::string s;
            i++;
            while (i < line.size() && line[i] != '"') {
                if (line[i] == '\\' && i + 1 < line.size()) i++;
                s += line[i++];
            }
            if (i >= line.size())
                throw error(errc::syntax, "line " + std::to_string(lineno) + ", col " +
                                              std::to_string(col) + ": unterminated string");
            i++;
            out.push_back({s, true, col});
            continue;
        }
        std::string s;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
               line[i] != '#')
            s += line[i++];
        out.push_back({s, false, col});
    }
    return out;
}

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

[[noreturn]] inline void dsl_fail(int line, int col, const std::string& msg) {
    throw error(errc::syntax,
                "line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg);
}

inline role dsl_role(const dsl_token& t, int line) {
    if (t.quoted || t.text.empty()) dsl_fail(line, t.col, "expected a role number");
    for (char c : t.text)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            dsl_fail(line, t.col, "expected a role number, got '" + t.text + "'");
    unsigned long v = std::stoul(t.text);
    if (v >= max_roles) dsl_fail(line, t.col, "role exceeds max_roles");
    return static_cast<role>(v);
}

} // namespace detail

/// Parses the line-oriented scenario DSL. Reports syntax problems with the
/// offending line and column. Also checks statically that every endpoint
/// name is declared, that link bindings are fresh, and that no name is
/// consumed (by link or close) more than once.
inline scenario parse_scenario(const std::string& text) {
    using detail::dsl_fail;
    scenario sc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    scenario::script* cur = nullptr;

    std::set<std::string> names;   // declared endpoint names
    std::set<std::string> threads; // thread names

    auto declare = [&](const std::string& n, int ln) {
        if (!names.insert(n).second) dsl_fail(ln, 1, "endpoint name '" + n + "' already bound");
    };

    while (std::getline(in, line)) {
        lineno++;
        bool indented = !line.empty() && (line[0] == ' ' || line[0] == '\t');
        auto toks = detail::dsl_tokens(line, lineno);
        if (toks.empty()) continue;
        const std::string& head = toks[0].text;

        if (!indented) {
            cur = nullptr;
            if (head == "session") {
                if (toks.size() != 4) dsl_fail(lineno, toks[0].col, "session <name> full=<n> parts=<RS>|<RS>|...");
                scenario::session_decl d;
                d.name = toks[1].text;
                d.line = lineno;
                if (toks[2].text.rfind("full=", 0) != 0)
                    dsl_fail(lineno, toks[2].col, "expected full=<n>");
                d.arity = static_cast<unsigned>(std::stoul(toks[2].text.substr(5)));
                if (toks[3].text.rfind("parts=", 0) != 0)
                    dsl_fail(lineno, toks[3].col, "expected parts=<RS>|<RS>|...");
                std::string rest = toks[3].text.substr(6);
                std::size_t start = 0;
                while (start <= rest.size()) {
                    std::size_t bar = rest.find('|', start);
                    std::string piece =
                        bar == std::string::npos ? rest.substr(start) : rest.substr(start, bar - start);
                    try {
                        d.parts.push_back(parse_role_set(piece));
                    } catch (const error&) {
                        dsl_fail(lineno, toks[3].col, "bad role set '" + piece + "'");
                    }
                    if (bar == std::string::npos) break;
                    start = bar + 1;
                }
                for (std::size_t i = 0; i < d.parts.size(); ++i)
                    declare(d.name + ".e" + std::to_string(i), lineno);
                sc.sessions.push_back(std::move(d));
                continue;
            }
            if (head == "thread") {
                if (toks.size() != 2 || toks[1].text.empty() || toks[1].text.back() != ':')
                    dsl_fail(lineno, toks[0].col, "thread <name>:");
                std::string name = toks[1].text.substr(0, toks[1].text.size() - 1);
                if (!threads.insert(name).second)
                    dsl_fail(lineno, toks[1].col, "duplicate thread '" + name + "'");
                sc.threads.push_back({name, {}});
                cur = &sc.threads.back();
                continue;
            }
            if (head == "expect") {
                if (toks.size() != 2 || toks[1].text.rfind("freed=", 0) != 0)
                    dsl_fail(lineno, toks[0].col, "expect freed=<n>");
                sc.expect_freed = std::stoull(toks[1].text.substr(6));
                continue;
            }
            dsl_fail(lineno, toks[0].col, "unknown directive '" + head + "'");
        }

        // indented: a verb inside the current thread block
        if (!cur) dsl_fail(lineno, toks[0].col, "verb outside a thread block");
        scenario::verb v;
        v.line = lineno;
        auto need = [&](std::size_t n, const char* usage) {
            if (toks.size() < n) dsl_fail(lineno, toks[0].col, std::string("usage: ") + usage);
        };
        auto opt_expect = [&](std::size_t at) {
            if (toks.size() == at) return;
            if (toks.size() == at + 2 && toks[at].text == "expect" && toks[at + 1].quoted) {
                v.expect = toks[at + 1].text;
                return;
            }
            dsl_fail(lineno, toks[0].col, "trailing tokens (use: expect \"...\")");
        };

        if (head == "send") {
            need(5, "send <ep> <from> <to> \"payload\"");
            v.k = scenario::verb_kind::send;
            v.ep = toks[1].text;
            v.from = detail::dsl_role(toks[2], lineno);
            v.to = detail::dsl_role(toks[3], lineno);
            if (!toks[4].quoted) dsl_fail(lineno, toks[4].col, "payload must be quoted");
            v.text = toks[4].text;
            if (toks.size() != 5) dsl_fail(lineno, toks[0].col, "trailing tokens");
        } else if (head == "recv") {
            need(4, "recv <ep> <from> <me> [expect \"payload\"]");
            v.k = scenario::verb_kind::recv;
            v.ep = toks[1].text;
            v.from = detail::dsl_role(toks[2], lineno);
            v.to = detail::dsl_role(toks[3], lineno);
            opt_expect(4);
        } else if (head == "bsend") {
            need(4, "bsend <ep> <from> \"payload\"");
            v.k = scenario::verb_kind::bsend;
            v.ep = toks[1].text;
            v.from = detail::dsl_role(toks[2], lineno);
            if (!toks[3].quoted) dsl_fail(lineno, toks[3].col, "payload must be quoted");
            v.text = toks[3].text;
            if (toks.size() != 4) dsl_fail(lineno, toks[0].col, "trailing tokens");
        } else if (head == "brecv") {
            need(3, "brecv <ep> <from> [expect \"payload\"]");
            v.k = scenario::verb_kind::brecv;
            v.ep = toks[1].text;
            v.from = detail::dsl_role(toks[2], lineno);
            opt_expect(3);
        } else if (head == "choose") {
            need(4, "choose <ep> <from> \"tag\"");
            v.k = scenario::verb_kind::choose;
            v.ep = toks[1].text;
            v.from = detail::dsl_role(toks[2], lineno);
            if (!toks[3].quoted) dsl_fail(lineno, toks[3].col, "tag must be quoted");
            v.text = toks[3].text;
            if (toks.size() != 4) dsl_fail(lineno, toks[0].col, "trailing tokens");
        } else if (head == "offer") {
            need(3, "offer <ep> <from> [expect \"tag\"]");
            v.k = scenario::verb_kind::offer;
            v.ep = toks[1].text;
            v.from = detail::dsl_role(toks[2], lineno);
            opt_expect(3);
        } else if (head == "link2") {
            need(5, "link2 <name|_> = <ep> <ep>");
            if (toks[2].text != "=") dsl_fail(lineno, toks[2].col, "expected '='");
            v.k = scenario::verb_kind::link2;
            v.bind = toks[1].text;
            v.ep = toks[3].text;
            v.ep2 = toks[4].text;
            if (toks.size() != 5) dsl_fail(lineno, toks[0].col, "trailing tokens");
            if (v.bind != "_") declare(v.bind, lineno);
        } else if (head == "link3") {
            need(6, "link3 <name|_> = <ep> <ep> <ep>");
            if (toks[2].text != "=") dsl_fail(lineno, toks[2].col, "expected '='");
            v.k = scenario::verb_kind::link3;
            v.bind = toks[1].text;
            v.ep = toks[3].text;
            v.ep2 = toks[4].text;
            v.ep3 = toks[5].text;
            if (toks.size() != 6) dsl_fail(lineno, toks[0].col, "trailing tokens");
            if (v.bind != "_") declare(v.bind, lineno);
        } else if (head == "close") {
            need(2, "close <ep>");
            v.k = scenario::verb_kind::close;
            v.ep = toks[1].text;
            if (toks.size() != 2) dsl_fail(lineno, toks[0].col, "trailing tokens");
        } else {
            dsl_fail(lineno, toks[0].col, "unknown verb '" + head + "'");
        }
        cur->verbs.push_back(std::move(v));
    }

    // static checks: names exist, each consumed at most once overall, and
    // never used after being consumed within the same thread.
    std::map<std::string, int> consumed; // name -> line of consumption
    auto check_name = [&](const std::string& n, int ln) {
        if (!names.count(n)) dsl_fail(ln, 1, "unknown endpoint '" + n + "'");
    };
    auto consume = [&](const std::string& n, int ln) {
        check_name(n, ln);
        auto [it, fresh] = consumed.emplace(n, ln);
        if (!fresh)
            dsl_fail(ln, 1,
                     "endpoint '" + n + "' already consumed at line " + std::to_string(it->second));
    };
    for (const auto& t : sc.threads) {
        std::set<std::string> gone;
        for (const auto& v : t.verbs) {
            auto use = [&](const std::string& n) {
                check_name(n, v.line);
                if (gone.count(n))
                    dsl_fail(v.line, 1, "endpoint '" + n + "' used after being consumed");
            };
            switch (v.k) {
                case scenario::verb_kind::link2:
                    use(v.ep);
                    use(v.ep2);
                    consume(v.ep, v.line);
                    consume(v.ep2, v.line);
                    gone.insert(v.ep);
                    gone.insert(v.ep2);
                    break;
                case scenario::verb_kind::link3:
                    use(v.ep);
                    use(v.ep2);
                    use(v.ep3);
                    consume(v.ep, v.line);
                    consume(v.ep2, v.line);
                    consume(v.ep3, v.line);
                    gone.insert(v.ep);
                    gone.insert(v.ep2);
                    gone.insert(v.ep3);
                    break;
                case scenario::verb_kind::close:
                    use(v.ep);
                    consume(v.ep, v.line);
                    gone.insert(v.ep);
                    break;
                default:
                    use(v.ep);
                    break;
            }
        }
    }
    return sc;
}

/// Regenerates DSL text that parses back to the same scenario; used for
/// shrunken fuzz counterexamples and the example printer.
inline std::string print_scenario(const scenario& sc) {
    std::string out;
    for (const auto& s : sc.sessions) {
        out += "session " + s.name + " full=" + std::to_string(s.arity) + " parts=";
        for (std::size_t i = 0; i < s.parts.size(); ++i) {
            if (i) out += '|';
            out += to_string(s.parts[i]);
        }
        out += '\n';
    }
    for (const auto& t : sc.threads) {
        out += "thread " + t.name + ":\n";
        for (const auto& v : t.verbs) {
            out += "  ";
            switch (v.k) {
                case scenario::verb_kind::send:
                    out += "send " + v.ep + " " + std::to_string(v.from) + " " +
                           std::to_string(v.to) + " " + detail::quote(v.text);
                    break;
                case scenario::verb_kind::recv:
                    out += "recv " + v.ep + " " + std::to_string(v.from) + " " +
                           std::to_string(v.to);
                    break;
                case scenario::verb_kind::bsend:
                    out += "bsend " + v.ep + " " + std::to_string(v.from) + " " +
                           detail::quote(v.text);
                    break;
                case scenario::verb_kind::brecv:
                    out += "brecv " + v.ep + " " + std::to_string(v.from);
                    break;
                case scenario::verb_kind::choose:
                    out += "choose " + v.ep + " " + std::to_string(v.from) + " " +
                           detail::quote(v.text);
                    break;
                case scenario::verb_kind::offer:
                    out += "offer " + v.ep + " " + std::to_string(v.from);
                    break;
                case scenario::verb_kind::link2:
                    out += "link2 " + v.bind + " = " + v.ep + " " + v.ep2;
                    break;
                case scenario::verb_kind::link3:
                    out += "link3 " + v.bind + " = " + v.ep + " " + v.ep2 + " " + v.ep3;
                    break;
                case scenario::verb_kind::close:
                    out += "close " + v.ep;
                    break;
            }
            if (v.expect) out += " expect " + detail::quote(*v.expect);
            out += '\n';
        }
    }
    if (sc.expect_freed) out += "expect freed=" + std::to_string(*sc.expect_freed) + "\n";
    return out;
}

} // namespace mpstbus

#endif // MPSTBUS_SCENARIO_HPP
