#include "iauth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <stdexcept>

#include "iauth/kv.hpp"

namespace iauth {

double RandomStream::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double RandomStream::exponential(double rate) {
    double u = uniform();
    return -std::log1p(-u) / rate;
}

double RandomStream::gaussian(double mean, double stddev) {
    // Box-Muller, no caching: two draws per variate keeps the stream position
    // a pure function of the call count
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    return mean + stddev * z;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RandomStream::below(0)");
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = eng_();
    } while (v >= limit);
    return v % n;
}

namespace {

// "rate.7=2.5" or "rate.9-17=4.0" (inclusive hour ranges)
template <typename T, std::size_t N>
bool apply_ranged(const std::string& key, const std::string& value, const std::string& prefix,
                  std::array<T, N>& target) {
    if (key.rfind(prefix + ".", 0) != 0) return false;
    std::string range = key.substr(prefix.size() + 1);
    int lo, hi;
    auto dash = range.find('-');
    if (dash == std::string::npos) {
        lo = hi = static_cast<int>(kv::parse_int(range, key));
    } else {
        lo = static_cast<int>(kv::parse_int(range.substr(0, dash), key));
        hi = static_cast<int>(kv::parse_int(range.substr(dash + 1), key));
    }
    if (lo < 0 || hi >= static_cast<int>(N) || lo > hi) {
        throw std::runtime_error("profile: hour range out of bounds in '" + key + "'");
    }
    T v;
    if constexpr (std::is_integral_v<T>) {
        v = static_cast<T>(kv::parse_int(value, key));
    } else {
        v = static_cast<T>(kv::parse_double(value, key));
    }
    for (int h = lo; h <= hi; ++h) target[static_cast<std::size_t>(h)] = v;
    return true;
}

}  // namespace

UserProfile parse_profile(std::istream& in) {
    auto f = kv::parse_file(in);
    UserProfile p;
    p.good_prob.fill(1.0);
    if (!f.count("user")) throw std::runtime_error("profile: missing 'user'");

    for (const auto& [k, v] : f) {
        if (k == "user") {
            p.user = v;
        } else if (k == "seed") {
            p.seed = static_cast<std::uint64_t>(kv::parse_int(v, k));
        } else if (k == "contacts") {
            p.contacts = static_cast<int>(kv::parse_int(v, k));
        } else if (k == "sms_prob") {
            p.sms_prob = kv::parse_double(v, k);
        } else if (k == "ping_interval") {
            p.ping_interval = kv::parse_int(v, k);
        } else if (k == "spread") {
            p.spread = kv::parse_double(v, k);
        } else if (k == "start_ts") {
            p.start_ts = kv::parse_int(v, k);
        } else if (k.rfind("cluster.", 0) == 0) {
            std::size_t idx = static_cast<std::size_t>(kv::parse_int(k.substr(8), k));
            auto parts = kv::split(v, ',');
            if (parts.size() != 2) throw std::runtime_error("profile: cluster needs 'x,y' in '" + k + "'");
            if (p.clusters.size() <= idx) p.clusters.resize(idx + 1);
            p.clusters[idx] = Point{kv::parse_double(parts[0], k), kv::parse_double(parts[1], k)};
        } else if (apply_ranged(k, v, "rate", p.call_rate) ||
                   apply_ranged(k, v, "good", p.good_prob) ||
                   apply_ranged(k, v, "visit", p.visit)) {
            // handled
        } else {
            throw std::runtime_error("profile: unknown key '" + k + "'");
        }
    }
    if (p.contacts < 1) throw std::runtime_error("profile: contacts must be >= 1");
    for (int h = 0; h < 24; ++h) {
        if (p.ping_interval > 0 &&
            (p.clusters.empty() || p.visit[h] >= static_cast<int>(p.clusters.size()))) {
            throw std::runtime_error("profile: visit." + std::to_string(h) +
                                     " references undefined cluster");
        }
    }
    return p;
}

UserProfile load_profile(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open profile: " + path);
    return parse_profile(f);
}

ContactBook profile_book(const UserProfile& p) {
    ContactBook book;
    book.owner = p.user;
    for (int i = 0; i < p.contacts; ++i) {
        book.entries.insert(p.user + "_c" + std::to_string(i));
    }
    return book;
}

EventTrace generate_trace(const UserProfile& p, int days, std::uint64_t seed) {
    if (days < 1) throw std::invalid_argument("generate_trace: days must be >= 1");
    bool any_rate = false;
    for (double r : p.call_rate) any_rate = any_rate || r > 0.0;
    if (!any_rate) {
        throw std::runtime_error("generate_trace: all call rates are zero for user '" + p.user + "'");
    }

    RandomStream rng(seed ^ (p.seed * 0x9e3779b97f4a7c15ULL));
    std::vector<Event> calls, pings;

    long unknown_counter = 0;
    for (int d = 0; d < days; ++d) {
        for (int h = 0; h < 24; ++h) {
            double rate = p.call_rate[h];
            if (rate <= 0.0) continue;
            double hour_start = static_cast<double>(p.start_ts + (d * 24 + h) * 3600LL);
            double t = hour_start;
            for (;;) {
                t += rng.exponential(rate / 3600.0);
                if (t >= hour_start + 3600.0) break;
                Event e;
                e.ts = static_cast<std::int64_t>(t);
                e.kind = rng.uniform() < p.sms_prob ? EventKind::sms : EventKind::call;
                e.dir = rng.uniform() < 0.5 ? Direction::incoming : Direction::outgoing;
                if (rng.uniform() < p.good_prob[h]) {
                    e.party = p.user + "_c" + std::to_string(rng.below(static_cast<std::uint64_t>(p.contacts)));
                } else {
                    e.party = p.user + "_u" + std::to_string(unknown_counter++);
                }
                calls.push_back(std::move(e));
            }
        }
    }

    if (p.ping_interval > 0) {
        std::int64_t end = p.start_ts + static_cast<std::int64_t>(days) * 86400;
        for (std::int64_t t = p.start_ts + p.ping_interval; t < end; t += p.ping_interval) {
            int h = static_cast<int>(((t - p.start_ts) / 3600) % 24);
            const Point& c = p.clusters[static_cast<std::size_t>(p.visit[h])];
            Event e;
            e.ts = t;
            e.kind = EventKind::location_ping;
            e.dir = Direction::none;
            e.loc = Point{rng.gaussian(c.x, p.spread), rng.gaussian(c.y, p.spread)};
            pings.push_back(std::move(e));
        }
    }

    EventTrace trace;
    trace.user = p.user;
    trace.events.reserve(calls.size() + pings.size());
    std::merge(calls.begin(), calls.end(), pings.begin(), pings.end(),
               std::back_inserter(trace.events),
               [](const Event& a, const Event& b) { return a.ts < b.ts; });
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        trace.events[i].id = "e" + std::to_string(i);
    }
    return trace;
}

AttackTrace wedge(const EventTrace& p, const EventTrace& q, std::int64_t t,
                  bool colocate_attacker) {
    if (p.empty()) throw std::invalid_argument("wedge: victim trace is empty");
    if (q.empty()) throw std::invalid_argument("wedge: attacker trace is empty");
    if (t < p.span_start() || t > p.span_end()) {
        throw std::invalid_argument("wedge: wedge time outside victim span");
    }

    // shift the attacker by whole days so local time-of-day is preserved;
    // no shift when the spans already overlap at t
    std::int64_t shift = 0;
    if (t < q.span_start() || t > q.span_end()) {
        std::int64_t diff = t - q.span_start();
        std::int64_t d = diff / 86400;
        if (diff < 0 && diff % 86400 != 0) --d;
        shift = d * 86400;
    }
    std::int64_t aligned_t = t - shift;

    AttackTrace atk;
    atk.victim = p.user;
    atk.attacker = q.user;
    atk.wedge_time = t;
    atk.trace.user = p.user;
    atk.trace.ref = p.ref;
    atk.trace.events = split_at(p, t).first.events;

    std::optional<Point> victim_last_loc;
    for (auto it = atk.trace.events.rbegin(); it != atk.trace.events.rend(); ++it) {
        if (it->loc) {
            victim_last_loc = it->loc;
            break;
        }
    }

    bool any_suffix = false;
    for (const Event& e : q.events) {
        if (e.ts < aligned_t) continue;
        any_suffix = true;
        Event shifted = e;
        shifted.ts = e.ts + shift;
        shifted.id = q.user + ":" + e.id;
        if (colocate_attacker && shifted.loc && victim_last_loc) {
            shifted.loc = victim_last_loc;
        }
        atk.trace.events.push_back(std::move(shifted));
    }
    if (!any_suffix) {
        throw std::invalid_argument("wedge: attacker has no events in the aligned window");
    }
    return atk;
}

std::vector<AttackTrace> generate_attack_suite(const std::vector<EventTrace>& users, int n,
                                               std::uint64_t seed, bool colocate_attacker) {
    if (n < 1) throw std::invalid_argument("generate_attack_suite: n must be >= 1");
    if (users.size() < 2) {
        throw std::invalid_argument("generate_attack_suite: need at least 2 distinct users");
    }
    RandomStream rng(seed);
    std::vector<AttackTrace> suite;
    suite.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        std::size_t vi = static_cast<std::size_t>(rng.below(users.size()));
        std::size_t ai = static_cast<std::size_t>(rng.below(users.size() - 1));
        if (ai >= vi) ++ai;
        const EventTrace& victim = users[vi];
        // keep a measurable pre-attack baseline and detection window
        std::int64_t lo = victim.span_start() + 86400;
        std::int64_t hi = victim.span_end() - 86400;
        if (hi <= lo) {
            throw std::invalid_argument("generate_attack_suite: victim '" + victim.user +
                                        "' spans fewer than 3 days");
        }
        std::int64_t t = lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo)));
        suite.push_back(wedge(victim, users[ai], t, colocate_attacker));
    }
    return suite;
}

}  // namespace iauth
