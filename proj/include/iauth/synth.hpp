#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "iauth/events.hpp"

namespace iauth {

/// Deterministic random stream: mt19937_64 with explicit variate transforms so
/// the byte output never depends on library distribution internals.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    double uniform();                       // [0, 1)
    double exponential(double rate);        // mean 1/rate
    double gaussian(double mean, double stddev);
    std::uint64_t below(std::uint64_t n);   // uniform in [0, n)

private:
    std::mt19937_64 eng_;
};

struct UserProfile {
    std::string user;
    std::uint64_t seed = 0;
    int contacts = 30;
    std::array<double, 24> call_rate{};   // events/hour per hour-of-day
    std::array<double, 24> good_prob{};
    double sms_prob = 0.3;
    std::int64_t ping_interval = 600;     // seconds; 0 disables location
    double spread = 50.0;                 // meters, gaussian scatter around cluster
    std::vector<Point> clusters;
    std::array<int, 24> visit{};          // cluster index active in each hour
    std::int64_t start_ts = 4 * 86400;    // a Monday at local midnight
};

UserProfile parse_profile(std::istream& in);
UserProfile load_profile(const std::string& path);

/// The contact book implied by the profile's synthetic contacts.
ContactBook profile_book(const UserProfile& p);

EventTrace generate_trace(const UserProfile& p, int days, std::uint64_t seed);

/// Victim prefix spliced with a time-aligned attacker suffix at wedge_time.
struct AttackTrace {
    EventTrace trace;
    std::int64_t wedge_time = 0;
    std::string victim;
    std::string attacker;
};

AttackTrace wedge(const EventTrace& p, const EventTrace& q, std::int64_t t,
                  bool colocate_attacker = false);

std::vector<AttackTrace> generate_attack_suite(const std::vector<EventTrace>& users, int n,
                                               std::uint64_t seed,
                                               bool colocate_attacker = false);

}  // namespace iauth
