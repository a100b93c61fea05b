#include "iauth/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "iauth/kv.hpp"

namespace iauth {

std::pair<EventTrace, EventTrace> time_split(const EventTrace& trace, double fraction) {
    if (fraction <= 0.0 || fraction >= 1.0) {
        throw std::invalid_argument("time_split: fraction must be in (0,1)");
    }
    if (trace.empty()) {
        EventTrace a, b;
        a.user = b.user = trace.user;
        a.ref = b.ref = trace.ref;
        return {a, b};
    }
    std::int64_t span = trace.span_end() - trace.span_start();
    std::int64_t cut = trace.span_start() +
                       static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(span)));
    return split_at(trace, cut);
}

int count_prompts(const std::vector<double>& scores, double threshold) {
    int prompts = 0;
    bool armed = true;
    for (double s : scores) {
        if (s < threshold) {
            if (armed) ++prompts;
            armed = false;
        } else {
            armed = true;
        }
    }
    return prompts;
}

namespace {

double rate_per_day(int prompts, std::int64_t t_first, std::int64_t t_last) {
    double days = static_cast<double>(t_last - t_first) / 86400.0;
    if (days <= 0.0) return prompts == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return static_cast<double>(prompts) / days;
}

double calibrate_core(const std::vector<std::int64_t>& times, const std::vector<double>& scores,
                      double target_rate) {
    if (scores.empty()) throw std::invalid_argument("calibrate_threshold: empty timeline");
    if (target_rate <= 0.0) throw std::invalid_argument("calibrate_threshold: target rate must be > 0");

    double days = static_cast<double>(times.back() - times.front()) / 86400.0;

    // prompt count as a function of threshold: a prompt fires at position i
    // exactly when s_i < theta <= s_{i-1} (or i == 0 with s_0 < theta). Only
    // descending adjacent pairs contribute, each on the interval (s_i, s_{i-1}],
    // so count(theta) = #{lows < theta} - #{highs < theta} over those pairs
    // (the virtual predecessor of s_0 is +inf)
    std::vector<double> lows{scores[0]};
    std::vector<double> highs;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] < scores[i - 1]) {
            lows.push_back(scores[i]);
            highs.push_back(scores[i - 1]);
        }
    }
    std::sort(lows.begin(), lows.end());
    std::sort(highs.begin(), highs.end());
    auto count_below = [](const std::vector<double>& v, double theta) {
        return static_cast<int>(std::lower_bound(v.begin(), v.end(), theta) - v.begin());
    };

    std::vector<double> candidates = scores;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    double best = 0.0;
    for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
        double theta = *it;
        int prompts = count_below(lows, theta) - count_below(highs, theta);
        double rate = days > 0.0 ? prompts / days
                                 : (prompts == 0 ? 0.0 : std::numeric_limits<double>::infinity());
        if (rate <= target_rate) {
            best = theta;
            break;
        }
    }
    return best;
}

}  // namespace

double prompts_per_day(const std::vector<ScoreSample>& timeline, double threshold) {
    if (timeline.empty()) return 0.0;
    std::vector<double> scores;
    scores.reserve(timeline.size());
    for (const auto& s : timeline) scores.push_back(s.score);
    return rate_per_day(count_prompts(scores, threshold), timeline.front().t, timeline.back().t);
}

double calibrate_threshold(const std::vector<ScoreSample>& timeline, double target_rate) {
    std::vector<std::int64_t> times;
    std::vector<double> scores;
    times.reserve(timeline.size());
    scores.reserve(timeline.size());
    for (const auto& s : timeline) {
        times.push_back(s.t);
        scores.push_back(s.score);
    }
    return calibrate_core(times, scores, target_rate);
}

std::vector<std::vector<double>> simplex_grid(int r, double step) {
    if (r < 1) throw std::invalid_argument("simplex_grid: r must be >= 1");
    long m = std::lround(1.0 / step);
    if (std::abs(m * step - 1.0) > 1e-9) {
        throw std::invalid_argument("simplex_grid: step must divide 1");
    }
    if (r > 4 && m > 10) {
        throw std::invalid_argument(
            "simplex_grid: grid too large for r > 4 features; use a coarser step");
    }
    std::vector<std::vector<double>> out;
    std::vector<long> counts(static_cast<std::size_t>(r), 0);
    auto rec = [&](auto&& self, int pos, long remaining) -> void {
        if (pos == r - 1) {
            counts[static_cast<std::size_t>(pos)] = remaining;
            std::vector<double> w(static_cast<std::size_t>(r));
            for (int i = 0; i < r; ++i) {
                w[static_cast<std::size_t>(i)] =
                    static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(m);
            }
            out.push_back(std::move(w));
            return;
        }
        for (long c = 0; c <= remaining; ++c) {
            counts[static_cast<std::size_t>(pos)] = c;
            self(self, pos + 1, remaining - c);
        }
    };
    rec(rec, 0, m);

    std::vector<double> uniform(static_cast<std::size_t>(r), 1.0 / r);
    if (std::find(out.begin(), out.end(), uniform) == out.end()) out.push_back(uniform);
    return out;
}

namespace {

double weighted_score(const ScoreSample& s, const std::vector<double>& w) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.gains.size(); ++i) {
        if (s.active[i]) {
            num += w[i] * s.gains[i];
            den += w[i];
        }
    }
    return den > 0.0 ? num / den : 1.0;
}

struct AttackWindow {
    std::int64_t wedge = 0;
    std::vector<ScoreSample> samples;   // [wedge, wedge + horizon]
};

AttackWindow attack_window(const UserModel& m, const AttackTrace& atk, const ContactBook& book,
                           std::int64_t tick_seconds, std::int64_t horizon) {
    auto full = score_timeline(m, atk.trace, book, tick_seconds);
    AttackWindow w;
    w.wedge = atk.wedge_time;
    for (auto& s : full) {
        if (s.t >= atk.wedge_time && s.t <= atk.wedge_time + horizon) {
            w.samples.push_back(std::move(s));
        }
    }
    return w;
}

void evaluate_attacks(const std::vector<AttackWindow>& windows, const std::vector<double>& w,
                      double theta, CandidateResult& out) {
    out.attacks = static_cast<int>(windows.size());
    out.detected = 0;
    double ttd_sum = 0.0;
    for (const auto& win : windows) {
        for (const auto& s : win.samples) {
            if (weighted_score(s, w) < theta) {
                ++out.detected;
                ttd_sum += static_cast<double>(s.t - win.wedge);
                break;
            }
        }
    }
    out.missed_rate = windows.empty()
                          ? 1.0
                          : static_cast<double>(out.attacks - out.detected) / out.attacks;
    out.mean_ttd = out.detected > 0 ? ttd_sum / out.detected : 0.0;
}

// lexicographic: missed rate, then mean time-to-detect, then the weight vector
bool better(const CandidateResult& a, const CandidateResult& b) {
    if (a.missed_rate != b.missed_rate) return a.missed_rate < b.missed_rate;
    double ta = a.detected > 0 ? a.mean_ttd : std::numeric_limits<double>::infinity();
    double tb = b.detected > 0 ? b.mean_ttd : std::numeric_limits<double>::infinity();
    if (ta != tb) return ta < tb;
    return a.weights < b.weights;
}

}  // namespace

TrainResult train_weights(const UserModel& model, const EventTrace& legit,
                          const ContactBook& book, const std::vector<AttackTrace>& attacks,
                          const TrainConfig& cfg) {
    if (model.combiner != Combiner::weighted_sum) {
        throw std::invalid_argument("train_weights: weighted_sum combiner required");
    }
    if (attacks.empty()) throw std::invalid_argument("train_weights: empty attack suite");
    if (legit.empty()) throw std::invalid_argument("train_weights: empty legitimate trace");

    auto [train_trace, eval_trace] = time_split(legit, cfg.split_fraction);
    std::int64_t cut = eval_trace.empty()
                           ? legit.span_end()
                           : eval_trace.span_start();

    auto train_legit = score_timeline(model, train_trace, book, cfg.tick_seconds);
    auto eval_legit = score_timeline(model, eval_trace, book, cfg.tick_seconds);
    if (train_legit.empty()) throw std::runtime_error("train_weights: training split has no samples");

    std::vector<std::int64_t> train_times;
    for (const auto& s : train_legit) train_times.push_back(s.t);

    std::vector<AttackWindow> train_windows, eval_windows;
    for (const auto& atk : attacks) {
        if (atk.victim != model.user) continue;
        auto win = attack_window(model, atk, book, cfg.tick_seconds, cfg.detection_horizon);
        (atk.wedge_time < cut ? train_windows : eval_windows).push_back(std::move(win));
    }
    if (train_windows.empty()) {
        throw std::runtime_error("train_weights: no attacks fall in the training span for user '" +
                                 model.user + "'");
    }

    auto grid = model.feature_count == 1
                    ? std::vector<std::vector<double>>{{1.0}}
                    : simplex_grid(model.feature_count, cfg.grid_step);

    TrainResult result;
    const CandidateResult* best = nullptr;
    const CandidateResult* uniform_cand = nullptr;
    std::vector<double> uniform(static_cast<std::size_t>(model.feature_count),
                                1.0 / model.feature_count);
    result.search_log.reserve(grid.size());

    for (const auto& w : grid) {
        CandidateResult cand;
        cand.weights = w;
        std::vector<double> scores;
        scores.reserve(train_legit.size());
        for (const auto& s : train_legit) scores.push_back(weighted_score(s, w));
        cand.threshold = calibrate_core(train_times, scores, cfg.target_reauth_rate);
        evaluate_attacks(train_windows, w, cand.threshold, cand);
        result.search_log.push_back(std::move(cand));
    }
    for (const auto& cand : result.search_log) {
        if (!best || better(cand, *best)) best = &cand;
        if (cand.weights == uniform) uniform_cand = &cand;
    }
    if (uniform_cand && best->missed_rate > uniform_cand->missed_rate) {
        throw std::logic_error("train_weights: selected candidate worse than uniform weights");
    }

    result.weights = best->weights;
    result.threshold = best->threshold;
    result.train_missed_rate = best->missed_rate;
    result.train_mean_ttd = best->mean_ttd;
    result.train_attacks = best->attacks;
    {
        std::vector<double> scores;
        for (const auto& s : train_legit) scores.push_back(weighted_score(s, result.weights));
        result.train_reauth_rate = rate_per_day(count_prompts(scores, result.threshold),
                                                train_legit.front().t, train_legit.back().t);
    }
    if (!eval_legit.empty()) {
        std::vector<double> scores;
        for (const auto& s : eval_legit) scores.push_back(weighted_score(s, result.weights));
        result.eval_reauth_rate = rate_per_day(count_prompts(scores, result.threshold),
                                               eval_legit.front().t, eval_legit.back().t);
    }
    CandidateResult eval_cand;
    eval_cand.weights = result.weights;
    evaluate_attacks(eval_windows, result.weights, result.threshold, eval_cand);
    result.eval_missed_rate = eval_cand.missed_rate;
    result.eval_mean_ttd = eval_cand.mean_ttd;
    result.eval_attacks = eval_cand.attacks;
    return result;
}

void write_search_log(const TrainResult& r, std::ostream& out) {
    out << "# weights\tthreshold\tmissed_rate\tmean_ttd_s\tdetected/attacks\n";
    for (const auto& c : r.search_log) {
        for (std::size_t i = 0; i < c.weights.size(); ++i) {
            if (i) out << ',';
            out << kv::format_double(c.weights[i]);
        }
        out << '\t' << kv::format_double(c.threshold) << '\t'
            << kv::format_double(c.missed_rate) << '\t' << kv::format_double(c.mean_ttd)
            << '\t' << c.detected << '/' << c.attacks << "\n";
    }
    out << "# selected";
    for (double w : r.weights) out << ' ' << kv::format_double(w);
    out << " threshold=" << kv::format_double(r.threshold)
        << " train_reauth_rate=" << kv::format_double(r.train_reauth_rate)
        << " train_missed_rate=" << kv::format_double(r.train_missed_rate)
        << " train_mean_ttd=" << kv::format_double(r.train_mean_ttd)
        << " eval_reauth_rate=" << kv::format_double(r.eval_reauth_rate)
        << " eval_missed_rate=" << kv::format_double(r.eval_missed_rate)
        << " eval_mean_ttd=" << kv::format_double(r.eval_mean_ttd) << "\n";
}

}  // namespace iauth
