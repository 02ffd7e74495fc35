#include <doctest.h>

#include "helpers.hpp"

using namespace mpstbus;

namespace {

std::vector<std::string> model_deliveries(const std::vector<trace_event>& trace) {
    flat_oracle model;
    for (const auto& ev : trace) model.step(ev);
    std::vector<std::string> out;
    for (const auto& d : model.deliveries()) out.push_back(d.payload);
    return out;
}

} // namespace

TEST_CASE("the model agrees with the runtime on unlinked sessions") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(3), {{0}, {1}, {2}});
    eps[0].send(0, 1, "x");
    eps[2].send(2, 1, "y");
    eps[1].recv(2, 1);
    eps[1].recv(0, 1);
    CHECK(testutil::oracle_agrees(rt.trace_log()));
}

TEST_CASE("the model merges clusters as keep-pending then kill-pending") {
    runtime rt;
    auto s1 = session_new(rt, role_set::range(3), {{0}, {1, 2}});
    auto s2 = session_new(rt, role_set::range(3), {{0, 1}, {2}});
    s1[0].send(0, 1, "k1");
    s2[1].send(2, 0, "d1");
    auto out = link2(std::move(s1[1]), std::move(s2[0]));
    REQUIRE(out.residual.has_value());

    flat_oracle model;
    for (const auto& ev : rt.trace_log()) model.step(ev);
    CHECK(model.cluster_count() == 1);
    CHECK(model.pending_messages() == 2); // only data, never KEEP or KILL

    CHECK(out.residual->recv(0, 1) == "k1");
    CHECK(s1[0].recv(2, 0) == "d1");
    CHECK(testutil::oracle_agrees(rt.trace_log()));
}

TEST_CASE("the model is deterministic over a fixed event log") {
    runtime rt;
    auto s1 = session_new(rt, role_set::range(3), {{0}, {1, 2}});
    auto s2 = session_new(rt, role_set::range(3), {{0, 1}, {2}});
    s1[0].send(0, 2, "a");
    s2[1].send(2, 0, "b");
    auto out = link2(std::move(s1[1]), std::move(s2[0]));
    s1[0].recv(2, 0);
    s2[1].recv(0, 2);
    auto trace = rt.trace_log();
    CHECK(model_deliveries(trace) == model_deliveries(trace));
    CHECK(testutil::oracle_agrees(trace));
    (void)out;
}

TEST_CASE("a read with no model match is reported as a mismatch") {
    trace_event session;
    session.k = trace_event::kind::session;
    session.board = 1;
    session.full = role_set::range(2);

    trace_event bogus;
    bogus.k = trace_event::kind::read;
    bogus.board = 1;
    bogus.pat_label = label::msg;
    bogus.pat_from = 0;
    bogus.to = role_set{1};
    bogus.payload = "ghost";

    flat_oracle model;
    model.step(session);
    auto got = model.step(bogus);
    CHECK_FALSE(got.has_value());
}

TEST_CASE("the delivery log renders reader, sender, and payload") {
    runtime rt;
    auto eps = session_new(rt, role_set::range(2), {{0}, {1}});
    eps[0].send(0, 1, "p");
    eps[1].recv(0, 1);
    flat_oracle model;
    for (const auto& ev : rt.trace_log()) model.step(ev);
    auto log = model.deliver_log();
    REQUIRE(log.size() == 1);
    CHECK(log[0] == "DELIVER\treader={1}\tfrom=0\tpayload=70\tidx=0");
}
