#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iauth/events.hpp"
#include "iauth/model.hpp"

namespace iauth {

/// Evolving (f1, f2, loc) inputs to the gain functions. Single writer.
struct ScorerState {
    std::optional<std::int64_t> last_good;
    int bad_run = 0;
    std::optional<Point> last_loc;
    std::int64_t last_loc_time = 0;
    std::int64_t now = -1;
};

struct ScoreSample {
    std::int64_t t = 0;
    std::vector<double> gains;       // size = model.feature_count
    std::vector<char> active;        // inactive gains are excluded from combining
    double score = 1.0;
    std::string trigger;             // event id, or "tick"
    bool bad_event = false;          // trigger was a bad call/SMS
    bool reauth = false;             // score < threshold
};

/// Decay gain for elapsed drift: 1 - H(f1 | bin). Cold start (no f1 yet) is neutral.
double gain_elapsed(const UserModel& m, std::optional<double> f1, TimeBin bin);

/// Bad-run gain: empirical Pr(F2 >= f2 | bin), geometric fallback on sparse bins.
double gain_bad_run(const UserModel& m, int f2, TimeBin bin);

/// Location gain: exp(-(d - radius)+ / sigma) against the nearest cluster of the bin.
double gain_location(const UserModel& m, const Point& loc, TimeBin bin);

/// Combines a full gain vector per the model's combiner. Weighted-sum weights
/// must lie on the simplex (sum 1 within 1e-9).
double combine(const std::vector<double>& gains, const UserModel& m);

struct StepInput {
    const Event* event = nullptr;    // null for a bare tick
    std::int64_t tick_time = 0;      // used when event is null

    std::int64_t time() const { return event ? event->ts : tick_time; }
};

ScoreSample step(ScorerState& state, const UserModel& m, const StepInput& in,
                 const ContactBook& book);

std::vector<ScoreSample> score_timeline(const UserModel& m, const EventTrace& trace,
                                        const ContactBook& book, std::int64_t tick_seconds);

/// Same, with an explicit span (required when the trace carries no events).
std::vector<ScoreSample> score_timeline(const UserModel& m, const EventTrace& trace,
                                        const ContactBook& book, std::int64_t tick_seconds,
                                        std::int64_t span_start, std::int64_t span_end);

void write_timeline(const std::vector<ScoreSample>& samples, std::ostream& out);

}  // namespace iauth
