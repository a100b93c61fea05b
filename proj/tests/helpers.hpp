#pragma once

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "iauth/events.hpp"
#include "iauth/model.hpp"
#include "iauth/synth.hpp"

namespace testutil {

inline iauth::Event call(std::int64_t ts, const std::string& party, const std::string& id,
                         iauth::EventKind kind = iauth::EventKind::call) {
    iauth::Event e;
    e.ts = ts;
    e.kind = kind;
    e.dir = iauth::Direction::outgoing;
    e.party = party;
    e.id = id;
    return e;
}

inline iauth::Event ping(std::int64_t ts, double x, double y, const std::string& id) {
    iauth::Event e;
    e.ts = ts;
    e.kind = iauth::EventKind::location_ping;
    e.dir = iauth::Direction::none;
    e.loc = iauth::Point{x, y};
    e.id = id;
    return e;
}

inline iauth::EventTrace trace_of(const std::string& user, std::vector<iauth::Event> events) {
    iauth::EventTrace t;
    t.user = user;
    t.events = std::move(events);
    return t;
}

inline iauth::ContactBook book_of(const std::string& owner,
                                  std::initializer_list<std::string> parties) {
    iauth::ContactBook b;
    b.owner = owner;
    for (const auto& p : parties) b.entries.insert(p);
    return b;
}

/// Profile with dense afternoon activity and a silent night; location optional.
inline iauth::UserProfile demo_profile(const std::string& user, std::uint64_t seed,
                                       bool with_location, double good = 0.85,
                                       iauth::Point home = {0, 0}, iauth::Point work = {4000, 2000}) {
    iauth::UserProfile p;
    p.user = user;
    p.seed = seed;
    p.contacts = 25;
    for (int h = 0; h < 24; ++h) {
        p.call_rate[static_cast<std::size_t>(h)] = 0.0;
        p.good_prob[static_cast<std::size_t>(h)] = good;
        p.visit[static_cast<std::size_t>(h)] = (h >= 9 && h <= 17) ? 1 : 0;
    }
    for (int h = 12; h < 18; ++h) p.call_rate[static_cast<std::size_t>(h)] = 4.0;
    for (int h = 7; h < 12; ++h) p.call_rate[static_cast<std::size_t>(h)] = 1.0;
    for (int h = 18; h < 23; ++h) p.call_rate[static_cast<std::size_t>(h)] = 1.5;
    p.sms_prob = 0.3;
    p.ping_interval = with_location ? 600 : 0;
    p.spread = 40.0;
    p.clusters = {home, work};
    return p;
}

/// Brute-force trailing-bad-run count: the independent oracle for f2.
inline int brute_force_f2(const std::vector<bool>& bad_flags, std::size_t pos) {
    int run = 0;
    for (std::size_t i = pos + 1; i-- > 0;) {
        if (!bad_flags[i]) break;
        ++run;
    }
    return run;
}

/// Brute-force strict-count empirical CDF: Pr(sample < x).
inline double brute_force_strict_cdf(const std::vector<double>& samples, double x) {
    if (samples.empty()) return 0.0;
    std::size_t c = 0;
    for (double s : samples) {
        if (s < x) ++c;
    }
    return static_cast<double>(c) / static_cast<double>(samples.size());
}

}  // namespace testutil
