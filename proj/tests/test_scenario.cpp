#include <doctest.h>

#include "helpers.hpp"

using namespace mpstbus;

namespace {

run_report run_lockstep(const scenario& sc, std::uint64_t seed = 1) {
    run_options opt;
    opt.mode = run_options::exec_mode::lockstep;
    opt.seed = seed;
    return run_scenario(sc, opt);
}

run_report run_threaded(const scenario& sc) {
    run_options opt;
    opt.mode = run_options::exec_mode::threads;
    return run_scenario(sc, opt);
}

} // namespace

TEST_CASE("session lines parse into declarations") {
    scenario sc = parse_scenario("session s full=3 parts={0}|{1,2}\n");
    REQUIRE(sc.sessions.size() == 1);
    CHECK(sc.sessions[0].name == "s");
    CHECK(sc.sessions[0].arity == 3);
    REQUIRE(sc.sessions[0].parts.size() == 2);
    CHECK(sc.sessions[0].parts[1] == role_set{1, 2});
}

TEST_CASE("link verbs bind their residual name") {
    scenario sc = parse_scenario("session s1 full=2 parts={0}|{1}\n"
                                 "session s2 full=2 parts={0}|{1}\n"
                                 "thread t:\n"
                                 "  link2 r = s1.e1 s2.e0\n"
                                 "  close r\n");
    REQUIRE(sc.threads.size() == 1);
    CHECK(sc.threads[0].verbs[0].k == scenario::verb_kind::link2);
    CHECK(sc.threads[0].verbs[0].bind == "r");
}

TEST_CASE("a misspelled verb is a positioned syntax error") {
    try {
        parse_scenario("session s full=2 parts={0}|{1}\n"
                       "thread t:\n"
                       "  sned s.e0 0 1 \"x\"\n");
        FAIL("expected a syntax error");
    } catch (const error& e) {
        CHECK(e.code() == errc::syntax);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("static checks catch unknown and doubly consumed endpoints") {
    CHECK_THROWS_AS(parse_scenario("thread t:\n  close nobody\n"), error);
    CHECK_THROWS_AS(parse_scenario("session s full=2 parts={0}|{1}\n"
                                   "thread t:\n"
                                   "  close s.e0\n"
                                   "  close s.e0\n"),
                    error);
    CHECK_THROWS_AS(parse_scenario("session s full=2 parts={0}|{1}\n"
                                   "session z full=2 parts={0}|{1}\n"
                                   "thread t:\n"
                                   "  link2 r = s.e1 z.e0\n"
                                   "  send s.e1 1 0 \"x\"\n"),
                    error);
}

TEST_CASE("printing a scenario round-trips through the parser") {
    for (const char* name : {"fig1", "game3", "fig3"}) {
        scenario sc = builtin_scenario(name);
        scenario again = parse_scenario(print_scenario(sc));
        CHECK(print_scenario(again) == print_scenario(sc));
    }
}

TEST_CASE("built-in scenarios complete in both modes") {
    for (const char* name : {"fig1", "game3", "fig3"}) {
        scenario sc = builtin_scenario(name);
        run_report lk = run_lockstep(sc);
        CHECK_MESSAGE(lk.ok(), name, " lockstep: ", lk.summary());
        run_report th = run_threaded(sc);
        CHECK_MESSAGE(th.ok(), name, " threads: ", th.summary());
    }
}

TEST_CASE("the queue chain drains in order and reclaims every board") {
    scenario sc = builtin_scenario("queue", 4);
    run_report rep = run_lockstep(sc);
    CHECK_MESSAGE(rep.ok(), rep.summary());
    CHECK(rep.stats.boards_allocated == 5);
    CHECK(rep.stats.boards_freed == 5);
    CHECK(rep.stats.keep_deliveries == 0);
}

TEST_CASE("lockstep runs are deterministic for a fixed seed") {
    scenario sc = builtin_scenario("game3");
    run_report a = run_lockstep(sc, 42);
    run_report b = run_lockstep(sc, 42);
    CHECK(a.ok());
    CHECK(render(a.trace) == render(b.trace));
    run_report c = run_lockstep(sc, 43);
    CHECK(c.ok()); // a different schedule still completes
}

TEST_CASE("an unmatched receive is reported as a deadlock") {
    scenario sc = parse_scenario("session s full=2 parts={0}|{1}\n"
                                 "thread t:\n"
                                 "  recv s.e1 0 1\n"
                                 "  close s.e1\n");
    run_report rep = run_lockstep(sc);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations.front().find("deadlock") != std::string::npos);

    run_options opt;
    opt.mode = run_options::exec_mode::threads;
    opt.deadlock_timeout = std::chrono::milliseconds(200);
    run_report threaded = run_scenario(sc, opt);
    REQUIRE_FALSE(threaded.ok());
    CHECK(threaded.violations.front().find("deadlock") != std::string::npos);
}

TEST_CASE("delivery expectations are checked") {
    scenario sc = parse_scenario("session s full=2 parts={0}|{1}\n"
                                 "thread a:\n"
                                 "  send s.e0 0 1 \"actual\"\n"
                                 "  close s.e0\n"
                                 "thread b:\n"
                                 "  recv s.e1 0 1 expect \"wanted\"\n"
                                 "  close s.e1\n");
    run_report rep = run_lockstep(sc);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations.front().find("expected") != std::string::npos);
}

TEST_CASE("the freed-board expectation is checked") {
    scenario sc = parse_scenario("session s full=2 parts={0}|{1}\n"
                                 "thread a:\n"
                                 "  close s.e0\n"
                                 "thread b:\n"
                                 "  close s.e1\n"
                                 "expect freed=9\n");
    run_report rep = run_lockstep(sc);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations.front().find("expected 9 boards freed") != std::string::npos);
}

TEST_CASE("unclosed endpoints do not trip the leak check") {
    scenario sc = parse_scenario("session s full=2 parts={0}|{1}\n"
                                 "thread a:\n"
                                 "  send s.e0 0 1 \"x\"\n"
                                 "thread b:\n"
                                 "  recv s.e1 0 1 expect \"x\"\n");
    run_report rep = run_lockstep(sc);
    CHECK_MESSAGE(rep.ok(), rep.summary());
    CHECK(rep.stats.boards_freed == 0);
}

TEST_CASE("the trace file format renders one event per line") {
    scenario sc = builtin_scenario("fig1");
    run_report rep = run_lockstep(sc);
    std::string text = render(rep.trace);
    CHECK(text.find("WRITE\tboard=") != std::string::npos);
    CHECK(text.find("LINKMSG\tboard=") != std::string::npos);
    CHECK(text.find("kind=KEEP") != std::string::npos);
    CHECK(text.find("kind=KILL") != std::string::npos);
    CHECK(text.find("LINK\tkeep=") != std::string::npos);
    CHECK(text.find("READ\tboard=") != std::string::npos);
    CHECK(text.find("FREE\tboard=") != std::string::npos);
    CHECK(rep.deliver_log.size() == rep.deliveries);
}
