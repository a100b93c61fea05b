#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "iauth/events.hpp"

using namespace iauth;
using namespace testutil;

TEST_CASE("parse_trace: empty source yields zero-event trace") {
    std::istringstream in("");
    auto t = parse_trace(in);
    CHECK(t.empty());
    CHECK_THROWS(t.span_start());
}

TEST_CASE("parse_trace: out-of-order records are sorted") {
    std::istringstream in(
        "user=alice\n"
        "ts=10 kind=call dir=incoming party=a id=e1\n"
        "ts=5 kind=call dir=incoming party=a id=e2\n"
        "ts=20 kind=call dir=incoming party=a id=e3\n");
    auto t = parse_trace(in);
    REQUIRE(t.events.size() == 3);
    CHECK(t.events[0].ts == 5);
    CHECK(t.events[1].ts == 10);
    CHECK(t.events[2].ts == 20);
    CHECK(t.user == "alice");
}

TEST_CASE("parse_trace: call without direction names the line") {
    std::istringstream in(
        "user=alice\n"
        "ts=10 kind=call party=a id=e1\n");
    CHECK_THROWS_WITH_AS(parse_trace(in), doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("parse_trace: duplicate event ids rejected") {
    std::istringstream in(
        "user=alice\n"
        "ts=10 kind=call dir=incoming party=a id=e1\n"
        "ts=20 kind=call dir=incoming party=b id=e1\n");
    CHECK_THROWS_WITH_AS(parse_trace(in), doctest::Contains("duplicate event id"),
                         std::runtime_error);
}

TEST_CASE("parse_trace: lat/lon projected through the header reference") {
    std::istringstream in(
        "user=alice ref_lat=45 ref_lon=10\n"
        "ts=10 kind=location_ping lat=45 lon=10 id=e1\n"
        "ts=20 kind=location_ping lat=45.01 lon=10 id=e2\n");
    auto t = parse_trace(in);
    REQUIRE(t.events.size() == 2);
    CHECK(t.events[0].loc->x == doctest::Approx(0.0));
    CHECK(t.events[0].loc->y == doctest::Approx(0.0));
    // 0.01 degrees of latitude is ~1112 m
    CHECK(t.events[1].loc->y == doctest::Approx(1111.9).epsilon(0.01));
}

TEST_CASE("classify_call") {
    auto book = book_of("alice", {"A", "B"});
    CHECK(classify_call(call(0, "A", "e1"), book) == CallClass::good);
    CHECK(classify_call(call(0, "Z", "e1"), book) == CallClass::bad);
    auto empty = book_of("alice", {});
    CHECK(classify_call(call(0, "A", "e1"), empty) == CallClass::bad);
    CHECK_THROWS_AS(classify_call(ping(0, 0, 0, "p1"), book), std::invalid_argument);
}

TEST_CASE("split_at: boundary event goes to the suffix") {
    auto t = trace_of("u", {call(1, "a", "e1"), call(2, "a", "e2"), call(3, "a", "e3")});
    auto [before, after] = split_at(t, 2);
    REQUIRE(before.events.size() == 1);
    CHECK(before.events[0].ts == 1);
    REQUIRE(after.events.size() == 2);
    CHECK(after.events[0].ts == 2);

    auto [b2, a2] = split_at(t, 0);
    CHECK(b2.events.empty());
    CHECK(a2.events.size() == 3);
    auto [b3, a3] = split_at(t, 99);
    CHECK(b3.events.size() == 3);
    CHECK(a3.events.empty());
}

TEST_CASE("split_at partitions the event multiset") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Event> ev;
        int n = static_cast<int>(rng() % 40);
        std::int64_t ts = 0;
        for (int i = 0; i < n; ++i) {
            ts += static_cast<std::int64_t>(rng() % 100);
            ev.push_back(call(ts, "p", "e" + std::to_string(i)));
        }
        auto t = trace_of("u", ev);
        std::int64_t cut = static_cast<std::int64_t>(rng() % (ts + 2));
        auto [before, after] = split_at(t, cut);
        std::vector<Event> merged = before.events;
        merged.insert(merged.end(), after.events.begin(), after.events.end());
        REQUIRE(merged.size() == ev.size());
        for (std::size_t i = 0; i < ev.size(); ++i) {
            CHECK(merged[i].ts == ev[i].ts);
            CHECK(merged[i].id == ev[i].id);
        }
        for (const auto& e : before.events) CHECK(e.ts < cut);
        for (const auto& e : after.events) CHECK(e.ts >= cut);
    }
}

TEST_CASE("trace file round-trip is the identity") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Event> ev;
        std::int64_t ts = 0;
        int n = 1 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) {
            ts += static_cast<std::int64_t>(rng() % 500);
            if (rng() % 3 == 0) {
                ev.push_back(ping(ts, static_cast<double>(rng() % 1000) / 3.0,
                                  static_cast<double>(rng() % 1000) / 7.0,
                                  "e" + std::to_string(i)));
            } else {
                auto e = call(ts, "p" + std::to_string(rng() % 5), "e" + std::to_string(i),
                              rng() % 2 ? EventKind::call : EventKind::sms);
                e.dir = rng() % 2 ? Direction::incoming : Direction::outgoing;
                ev.push_back(e);
            }
        }
        auto t = trace_of("user" + std::to_string(trial), ev);
        std::ostringstream out;
        serialize_trace(t, out);
        std::istringstream in(out.str());
        auto back = parse_trace(in);
        REQUIRE(back.events.size() == t.events.size());
        CHECK(back.user == t.user);
        for (std::size_t i = 0; i < t.events.size(); ++i) {
            CHECK(back.events[i].ts == t.events[i].ts);
            CHECK(back.events[i].kind == t.events[i].kind);
            CHECK(back.events[i].dir == t.events[i].dir);
            CHECK(back.events[i].party == t.events[i].party);
            CHECK(back.events[i].id == t.events[i].id);
            CHECK(back.events[i].loc.has_value() == t.events[i].loc.has_value());
            if (t.events[i].loc) {
                CHECK(back.events[i].loc->x == t.events[i].loc->x);
                CHECK(back.events[i].loc->y == t.events[i].loc->y);
            }
        }
    }
}

TEST_CASE("contact book round-trip") {
    auto book = book_of("alice", {"x", "y", "z"});
    std::ostringstream out;
    serialize_contact_book(book, out);
    std::istringstream in(out.str());
    auto back = parse_contact_book(in);
    CHECK(back.owner == "alice");
    CHECK(back.entries == book.entries);
}
