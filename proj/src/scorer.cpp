#include "iauth/scorer.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "iauth/kv.hpp"

namespace iauth {

double gain_elapsed(const UserModel& m, std::optional<double> f1, TimeBin bin) {
    if (!f1) return 1.0;   // cold start: no evidence either way
    if (*f1 < 0) throw std::invalid_argument("gain_elapsed: negative drift");
    return 1.0 - m.cdf_f1.eval(*f1, bin);
}

double gain_bad_run(const UserModel& m, int f2, TimeBin bin) {
    if (f2 < 0) throw std::invalid_argument("gain_bad_run: negative run length");
    return m.bad_runs.tail_prob(f2, bin);
}

double gain_location(const UserModel& m, const Point& loc, TimeBin bin) {
    const Cluster* c = m.clusters.nearest(loc, bin);
    if (!c) throw std::logic_error("gain_location: model has no clusters");
    double d = distance(loc, c->center);
    double excess = std::max(0.0, d - c->radius);
    return std::exp(-excess / m.clusters.sigma());
}

namespace {

double combine_masked(const std::vector<double>& gains, const std::vector<char>& active,
                      const UserModel& m) {
    if (m.combiner == Combiner::product) {
        double p = 1.0;
        for (std::size_t i = 0; i < gains.size(); ++i) {
            if (active[i]) p *= gains[i];
        }
        return p;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i) {
        if (active[i]) {
            num += m.weights[i] * gains[i];
            den += m.weights[i];
        }
    }
    if (den <= 0.0) return 1.0;   // nothing measurable: neutral
    return num / den;
}

}  // namespace

double combine(const std::vector<double>& gains, const UserModel& m) {
    if (gains.size() != m.weights.size() && m.combiner == Combiner::weighted_sum) {
        throw std::invalid_argument("combine: gain/weight arity mismatch");
    }
    if (m.combiner == Combiner::weighted_sum) {
        double sum = 0.0;
        for (double w : m.weights) sum += w;
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::invalid_argument("combine: weights must sum to 1 (got " +
                                        kv::format_double(sum) + ")");
        }
    }
    std::vector<char> active(gains.size(), 1);
    return combine_masked(gains, active, m);
}

ScoreSample step(ScorerState& state, const UserModel& m, const StepInput& in,
                 const ContactBook& book) {
    std::int64_t t = in.time();
    if (t < state.now) {
        throw std::runtime_error("step: time regression (" + std::to_string(t) + " < " +
                                 std::to_string(state.now) + ")");
    }
    state.now = t;

    ScoreSample s;
    s.t = t;
    s.trigger = "tick";
    if (in.event) {
        const Event& e = *in.event;
        s.trigger = e.id;
        if (e.kind == EventKind::location_ping) {
            state.last_loc = e.loc;
            state.last_loc_time = t;
        } else {
            bool good = classify_call(e, book) == CallClass::good;
            s.bad_event = !good;
            if (good) {
                bool resets = e.kind == EventKind::call || m.cfg.sms_resets_clock;
                if (resets) state.last_good = t;
                state.bad_run = 0;
            } else {
                ++state.bad_run;
            }
        }
    }

    TimeBin bin = assign_bin(t, m.cfg.granularity, m.cfg.utc_offset);
    std::optional<double> f1;
    if (state.last_good) f1 = static_cast<double>(t - *state.last_good);

    s.gains.assign(m.feature_count, 1.0);
    s.active.assign(m.feature_count, 1);
    s.gains[0] = gain_elapsed(m, f1, bin);
    s.gains[1] = gain_bad_run(m, state.bad_run, bin);
    if (m.has_location) {
        bool fresh = state.last_loc && t - state.last_loc_time <= m.cfg.location_staleness;
        if (fresh) {
            s.gains[2] = gain_location(m, *state.last_loc, bin);
        } else {
            s.gains[2] = 1.0;
            s.active[2] = 0;
        }
    }
    s.score = combine_masked(s.gains, s.active, m);
    s.reauth = s.score < m.threshold;
    return s;
}

namespace {

std::vector<ScoreSample> run_timeline(const UserModel& m, const EventTrace& trace,
                                      const ContactBook& book, std::int64_t tick_seconds,
                                      std::int64_t start, std::int64_t end) {
    if (tick_seconds < 1) throw std::invalid_argument("tick_seconds must be >= 1");
    std::vector<ScoreSample> out;
    ScorerState state;
    std::size_t ei = 0;
    const auto& ev = trace.events;

    auto emit_event = [&]() {
        StepInput in;
        in.event = &ev[ei];
        out.push_back(step(state, m, in, book));
        ++ei;
    };

    for (std::int64_t tick_t = start + tick_seconds; tick_t <= end; tick_t += tick_seconds) {
        while (ei < ev.size() && ev[ei].ts < tick_t) emit_event();
        bool collides = false;
        while (ei < ev.size() && ev[ei].ts == tick_t) {
            collides = true;
            emit_event();
        }
        if (!collides) {
            StepInput in;
            in.tick_time = tick_t;
            out.push_back(step(state, m, in, book));
        }
    }
    while (ei < ev.size()) emit_event();
    return out;
}

}  // namespace

std::vector<ScoreSample> score_timeline(const UserModel& m, const EventTrace& trace,
                                        const ContactBook& book, std::int64_t tick_seconds) {
    if (trace.empty()) return {};
    return run_timeline(m, trace, book, tick_seconds, trace.span_start(), trace.span_end());
}

std::vector<ScoreSample> score_timeline(const UserModel& m, const EventTrace& trace,
                                        const ContactBook& book, std::int64_t tick_seconds,
                                        std::int64_t span_start, std::int64_t span_end) {
    return run_timeline(m, trace, book, tick_seconds, span_start, span_end);
}

void write_timeline(const std::vector<ScoreSample>& samples, std::ostream& out) {
    if (samples.empty()) {
        out << "# empty timeline\n";
        return;
    }
    std::size_t r = samples.front().gains.size();
    out << "# t";
    for (std::size_t i = 0; i < r; ++i) out << "\tg" << (i + 1);
    out << "\tscore\ttrigger\tdecision\n";
    for (const auto& s : samples) {
        out << s.t;
        for (std::size_t i = 0; i < r; ++i) {
            out << '\t';
            if (s.active[i]) {
                out << kv::format_double(s.gains[i]);
            } else {
                out << "na";
            }
        }
        out << '\t' << kv::format_double(s.score) << '\t' << s.trigger << '\t'
            << (s.reauth ? "reauth" : "accept") << "\n";
    }
}

}  // namespace iauth
