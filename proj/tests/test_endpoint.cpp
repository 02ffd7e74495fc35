#include <doctest.h>

#include <thread>

#include "helpers.hpp"

using namespace mpstbus;

TEST_CASE("session_new hands out one endpoint per part on a shared board") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(3), {{0}, {1, 2}});
    REQUIRE(eps.size() == 2);
    CHECK(eps[0].played() == role_set{0});
    CHECK(eps[1].played() == role_set{1, 2});
    CHECK(eps[0].home() == eps[1].home());
    CHECK(eps[0].home()->refcount() == 2);

    auto binary = session_new(rt, role_set::range(2), {{0}, {1}});
    CHECK(binary[0].full() == role_set{0, 1});
}

TEST_CASE("bad partitions are rejected") {
    runtime rt;
    role_set full = role_set::range(3);
    CHECK_THROWS_AS(session_new(rt, full, {{0}, {0, 1}}), error);
    CHECK_THROWS_AS(session_new(rt, full, {{0}, {1}}), error);
    CHECK_THROWS_AS(session_new(rt, full, {{0}, {}, {1, 2}}), error);
    CHECK_THROWS_AS(session_new(rt, full, {}), error);
    CHECK(rt.stats().boards_allocated == 0);
}

TEST_CASE("point-to-point send and receive") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(3), {{0}, {1, 2}});
    eps[0].send(0, 1, "p");
    CHECK(eps[1].recv(0, 1) == "p");
    eps[1].send(2, 0, "q");
    CHECK(eps[0].recv(2, 0) == "q");
}

TEST_CASE("sends from unplayed or reflexive roles are rejected") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(3), {{0}, {1, 2}});
    CHECK_THROWS_AS(eps[0].send(1, 2, "x"), error);   // not played
    CHECK_THROWS_AS(eps[0].send(0, 0, "x"), error);   // self
    CHECK_THROWS_AS(eps[1].send(1, 2, "x"), error);   // both roles on one endpoint
    CHECK_THROWS_AS(eps[0].send(0, 7, "x"), error);   // outside the session
    try {
        eps[1].send(1, 2, "x");
        FAIL("expected self_send");
    } catch (const error& e) {
        CHECK(e.code() == errc::self_send);
    }
}

TEST_CASE("per-sender order is preserved") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(2), {{0}, {1}});
    eps[0].send(0, 1, "a");
    eps[0].send(0, 1, "b");
    CHECK(eps[1].recv(0, 1) == "a");
    CHECK(eps[1].recv(0, 1) == "b");
}

TEST_CASE("selective receive picks by sender, not arrival order") {
    for (int order = 0; order < 2; ++order) {
        runtime rt;
        auto eps = session_new(rt, role_set::range(3), {{0}, {1}, {2}});
        if (order == 0) {
            eps[0].send(0, 1, "p0");
            eps[2].send(2, 1, "p2");
        } else {
            eps[2].send(2, 1, "p2");
            eps[0].send(0, 1, "p0");
        }
        CHECK(eps[1].recv(2, 1) == "p2");
        CHECK(eps[1].recv(0, 1) == "p0");
    }
}

TEST_CASE("broadcast addresses everyone the sender does not play") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(3), {{0}, {1}, {2}});
    eps[2].bsend(2, "go");
    auto q = eps[0].home()->queue_snapshot();
    REQUIRE(q.size() == 1);
    CHECK(q[0].receivers == role_set{0, 1});
    CHECK(eps[0].brecv(2) == "go");
    CHECK(eps[1].brecv(2) == "go");
    CHECK(eps[0].home()->queue_snapshot().empty());
}

TEST_CASE("a multi-role endpoint consumes a broadcast in one receive") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(3), {{0, 1}, {2}});
    eps[1].bsend(2, "go");
    CHECK(eps[0].brecv(2) == "go");
    CHECK(eps[0].home()->queue_snapshot().empty());
}

TEST_CASE("broadcasting with no other parties is an error") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(2), {{0, 1}});
    CHECK_THROWS_AS(eps[0].bsend(0, "x"), error);
    try {
        eps[0].bsend(0, "x");
        FAIL("expected empty_receivers");
    } catch (const error& e) {
        CHECK(e.code() == errc::empty_receivers);
    }
}

TEST_CASE("broadcast receive blocks until the send arrives") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(2), {{0}, {1}});
    std::thread sender([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        eps[1].bsend(1, "late");
    });
    CHECK(eps[0].brecv(1) == "late");
    sender.join();
}

TEST_CASE("choose and offer broadcast a branch tag") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(3), {{0}, {1}, {2}});
    eps[0].choose(0, "add");
    CHECK(eps[1].offer(0) == "add");
    CHECK(eps[2].offer(0) == "add");
    CHECK_THROWS_AS(eps[1].offer(1), error); // own role
}

TEST_CASE("MSG and BRANCH from one sender are consumed per label in FIFO order") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(2), {{0}, {1}});
    eps[0].send(0, 1, "m1");
    eps[0].choose(0, "t1");
    eps[0].send(0, 1, "m2");
    eps[0].choose(0, "t2");
    CHECK(eps[1].offer(0) == "t1");
    CHECK(eps[1].recv(0, 1) == "m1");
    CHECK(eps[1].offer(0) == "t2");
    CHECK(eps[1].recv(0, 1) == "m2");
    CHECK(testutil::oracle_agrees(rt.trace_log()));
}

TEST_CASE("each broadcast is delivered exactly once per receiving role") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(4), {{0}, {1, 2}, {3}});
    eps[2].bsend(3, "x");
    std::size_t deliveries = 0;
    role_set marked;
    for (auto& e : eps) {
        if (e.played().contains(3)) continue;
        e.brecv(3);
        deliveries++;
        marked = marked | e.played();
    }
    CHECK(deliveries == 2);
    CHECK(marked == role_set{0, 1, 2});
    CHECK(eps[0].home()->queue_snapshot().empty());
}

TEST_CASE("close releases the board reference") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(2), {{0}, {1}});
    auto board = eps[0].home();
    eps[0].close();
    CHECK(board->refcount() == 2); // our snapshot ref plus the peer endpoint
    CHECK_THROWS_AS(eps[0].close(), error);
    CHECK_THROWS_AS(eps[0].send(0, 1, "x"), error);
    eps[1].close();
    board = board_ref();
    CHECK(rt.stats().boards_freed == 1);
}

TEST_CASE("closing one endpoint leaves the session usable for the rest") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(3), {{0}, {1}, {2}});
    eps[1].send(1, 2, "still there");
    eps[0].close();
    CHECK(eps[2].recv(1, 2) == "still there");
    CHECK(rt.stats().boards_freed == 0);
}

TEST_CASE("receive preconditions surface as typed errors") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(3), {{0}, {1, 2}});
    CHECK_THROWS_AS(eps[0].try_recv(0, 0), error);  // from an own role
    CHECK_THROWS_AS(eps[0].try_recv(1, 1), error);  // me not played
    CHECK_THROWS_AS(eps[0].try_recv(9, 0), error);  // out of range
    CHECK_THROWS_AS(eps[1].try_brecv(1), error);    // broadcast from own role
}
