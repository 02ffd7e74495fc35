#include <doctest.h>

#include <optional>
#include <thread>

#include "helpers.hpp"

using namespace mpstbus;
using detail::test_access;

namespace {

void put(const board_ref& b, role from, role_set to, const std::string& text) {
    b->write(label::msg, from, to, data_payload{text});
}

std::optional<std::string> take(const board_ref& b, role from, role_set by) {
    auto got = b->try_read(pattern(label::msg, from, by));
    if (!got) return std::nullopt;
    return payload_text(*got);
}

/// Fig. 5 shape: board1 keeps two messages from 0 and a KEEP into board2;
/// board2 holds one message from 2 and the KILL back to board1.
struct linked_pair {
    explicit linked_pair(runtime& rt)
        : keep(rt.new_board(role_set::range(3))), kill(rt.new_board(role_set::range(3))) {
        put(keep, 0, {1}, "k1");
        put(keep, 0, {2}, "k2");
        put(kill, 2, {0}, "d1");
        test_access::append_control(keep, label::keep, {0, 1}, kill);
        test_access::append_control(kill, label::kill, {2}, keep);
    }
    board_ref keep, kill;
};

} // namespace

TEST_CASE("boards start empty with the creating reference") {
    runtime rt;
    auto b = rt.new_board(role_set::range(3));
    CHECK(b->refcount() == 1);
    CHECK(b->queue_snapshot().empty());
    auto binary = rt.new_board(role_set::range(2));
    CHECK(binary->full() == role_set{0, 1});
    CHECK_THROWS_AS(rt.new_board(role_set{0}), error);
}

TEST_CASE("writes validate their roles") {
    runtime rt;
    auto b = rt.new_board(role_set::range(2));
    CHECK_THROWS_AS(put(b, 5, {1}, "x"), error);
    CHECK_THROWS_AS(put(b, 0, {5}, "x"), error);
    CHECK_THROWS_AS(put(b, 0, {}, "x"), error);
    CHECK_THROWS_AS(put(b, 0, {0, 1}, "x"), error);
}

TEST_CASE("plain writes append locally in seq order") {
    runtime rt;
    auto b = rt.new_board(role_set::range(2));
    put(b, 0, {1}, "a");
    put(b, 0, {1}, "b");
    auto q = b->queue_snapshot();
    REQUIRE(q.size() == 2);
    CHECK(q[0].seq < q[1].seq);
    CHECK(payload_text(q[0].body) == "a");
}

TEST_CASE("writes follow a trailing KILL to the destination board") {
    runtime rt;
    auto b1 = rt.new_board(role_set::range(3));
    auto b2 = rt.new_board(role_set::range(3));
    test_access::append_control(b2, label::kill, {2}, b1);
    put(b2, 2, {0}, "p");
    CHECK(b2->queue_snapshot().size() == 1); // just the KILL
    auto q1 = b1->queue_snapshot();
    REQUIRE(q1.size() == 1);
    CHECK(payload_text(q1[0].body) == "p");
    CHECK(rt.stats().redirects == 1);
}

TEST_CASE("writes ride a whole KILL chain") {
    runtime rt;
    auto b0 = rt.new_board(role_set::range(2));
    auto b1 = rt.new_board(role_set::range(2));
    auto b3 = rt.new_board(role_set::range(2));
    test_access::append_control(b3, label::kill, {0}, b1);
    test_access::append_control(b1, label::kill, {0}, b0);
    put(b3, 1, {0}, "deep");
    CHECK(b3->queue_snapshot().size() == 1);
    CHECK(b1->queue_snapshot().size() == 1);
    auto q = b0->queue_snapshot();
    REQUIRE(q.size() == 1);
    CHECK(payload_text(q[0].body) == "deep");
}

TEST_CASE("reading an empty board yields nothing") {
    runtime rt;
    auto b = rt.new_board(role_set::range(2));
    CHECK_FALSE(take(b, 0, {1}).has_value());
}

TEST_CASE("a read follows a matching KEEP into the drained board") {
    runtime rt;
    linked_pair lp(rt);
    // role 0 reads on the keep board; the only message from 2 is on the
    // kill board, past the KEEP with receivers {0,1}
    auto got = take(lp.keep, 2, {0});
    REQUIRE(got.has_value());
    CHECK(*got == "d1");
    CHECK(rt.stats().keep_deliveries == 1);
    // the kill board drained to its KILL, so the KEEP was deleted
    CHECK(rt.stats().keeps_deleted == 1);
    auto q = lp.keep->queue_snapshot();
    REQUIRE(q.size() == 2);
    CHECK(q[0].lbl == label::msg);
    CHECK(q[1].lbl == label::msg);
}

TEST_CASE("a read follows a matching KILL and skips a foreign KEEP") {
    runtime rt;
    linked_pair lp(rt);
    // role 2 reads on the kill board; no data match there, the KILL with
    // receivers {2} matches, and on the keep board the KEEP {0,1} is skipped
    auto got = take(lp.kill, 0, {2});
    REQUIRE(got.has_value());
    CHECK(*got == "k2");
    CHECK(rt.stats().keep_deliveries == 0);
    CHECK(rt.stats().cycle_guard_hits == 0);
}

TEST_CASE("a KEEP-redirected read never follows the paired KILL back") {
    runtime rt;
    linked_pair lp(rt);
    // role 1 looks for a message from 2: the KEEP {0,1} matches, the kill
    // board has only a message for {0} and the KILL {2} does not match the
    // pattern, so the pass fails without touching the cycle guard
    CHECK_FALSE(take(lp.keep, 2, {1}).has_value());
    CHECK(rt.stats().cycle_guard_hits == 0);
}

TEST_CASE("mark-as-read accumulates across readers before deletion") {
    runtime rt;
    auto b = rt.new_board(role_set::range(3));
    put(b, 2, {0, 1}, "bc");
    CHECK(take(b, 2, {0}) == "bc");
    CHECK(b->queue_snapshot().size() == 1);
    CHECK(b->queue_snapshot()[0].receivers == role_set{1});
    CHECK(take(b, 2, {1}) == "bc");
    CHECK(b->queue_snapshot().empty());
}

TEST_CASE("two KEEPs on one board are searched in queue order") {
    runtime rt;
    auto hub = rt.new_board(role_set::range(2));
    auto d1 = rt.new_board(role_set::range(2));
    auto d2 = rt.new_board(role_set::range(2));
    put(d1, 1, {0}, "first");
    put(d2, 1, {0}, "second");
    test_access::append_control(hub, label::keep, {0}, d1);
    test_access::append_control(hub, label::keep, {0}, d2);
    test_access::append_control(d1, label::kill, {1}, hub);
    test_access::append_control(d2, label::kill, {1}, hub);
    CHECK(take(hub, 1, {0}) == "first");
    CHECK(take(hub, 1, {0}) == "second");
    CHECK(testutil::oracle_agrees(rt.trace_log()));
}

TEST_CASE("blocking read waits for the write") {
    runtime rt;
    auto b = rt.new_board(role_set::range(2));
    std::thread writer([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        put(b, 0, {1}, "late");
    });
    auto got = b->read(pattern(label::msg, 0, {1}));
    CHECK(payload_text(got) == "late");
    writer.join();
}

TEST_CASE("two selective readers each get their message regardless of write order") {
    for (int order = 0; order < 2; ++order) {
        runtime rt;
        auto b = rt.new_board(role_set::range(3));
        if (order == 0) {
            put(b, 0, {2}, "from0");
            put(b, 1, {2}, "from1");
        } else {
            put(b, 1, {2}, "from1");
            put(b, 0, {2}, "from0");
        }
        CHECK(take(b, 0, {2}) == "from0");
        CHECK(take(b, 1, {2}) == "from1");
        CHECK(b->queue_snapshot().empty());
    }
}

TEST_CASE("a board referenced by a control payload survives its other references") {
    runtime rt;
    {
        auto holder = rt.new_board(role_set::range(2));
        {
            auto target = rt.new_board(role_set::range(2));
            test_access::append_control(holder, label::kill, {0}, target);
        }
        // the target's only reference is the queued KILL payload now
        CHECK(rt.stats().boards_freed == 0);
        CHECK(rt.stats().control_refs_live == 1);
    }
    CHECK(rt.stats().boards_freed == 2);
    CHECK(rt.stats().control_refs_live == 0);
}

TEST_CASE("releasing a chain of boards frees all of them") {
    runtime rt;
    {
        auto a = rt.new_board(role_set::range(2));
        auto b = rt.new_board(role_set::range(2));
        auto c = rt.new_board(role_set::range(2));
        test_access::append_control(c, label::kill, {0}, b);
        test_access::append_control(b, label::kill, {0}, a);
    }
    CHECK(rt.stats().boards_allocated == 3);
    CHECK(rt.stats().boards_freed == 3);
}

TEST_CASE("the audit walker flags a message after a KILL") {
    runtime rt;
    auto a = rt.new_board(role_set::range(2));
    auto b = rt.new_board(role_set::range(2));
    rt.set_audit(false);
    test_access::append_control(a, label::kill, {0}, b);
    test_access::append_control(a, label::keep, {1}, b);
    CHECK_THROWS_AS(rt.audit_all(), error);
}

TEST_CASE("operations on a reclaimed board fail closed") {
    runtime rt;
    auto b = rt.new_board(role_set::range(2));
    test_access::set_reclaimed(b, true);
    CHECK_THROWS_AS(put(b, 0, {1}, "x"), error);
    CHECK_THROWS_AS(take(b, 0, {1}), error);
}

TEST_CASE("per-sender delivery follows write order") {
    runtime rt;
    auto b = rt.new_board(role_set::range(3));
    for (int i = 0; i < 5; ++i) put(b, 0, {1}, "a" + std::to_string(i));
    for (int i = 0; i < 5; ++i) put(b, 2, {1}, "c" + std::to_string(i));
    for (int i = 0; i < 5; ++i) {
        CHECK(take(b, 0, {1}) == "a" + std::to_string(i));
        CHECK(take(b, 2, {1}) == "c" + std::to_string(i));
    }
    CHECK(testutil::oracle_agrees(rt.trace_log()));
}
