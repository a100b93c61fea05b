#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "iauth/events.hpp"
#include "iauth/model.hpp"
#include "iauth/scorer.hpp"
#include "iauth/synth.hpp"

namespace iauth {

struct TrainConfig {
    double target_reauth_rate = 2.0;   // prompts per day allowed for the owner
    double rate_tolerance = 0.10;
    double grid_step = 0.05;           // simplex grid resolution
    std::int64_t detection_horizon = 4 * 3600;
    double split_fraction = 0.7;       // chronological train share
    std::int64_t tick_seconds = 60;
};

/// Chronological split at the fraction point of the span. Never shuffles.
std::pair<EventTrace, EventTrace> time_split(const EventTrace& trace, double fraction);

/// Re-auth prompts are excursions: one prompt when the score crosses below the
/// threshold, re-armed once it returns to or above it.
int count_prompts(const std::vector<double>& scores, double threshold);

double prompts_per_day(const std::vector<ScoreSample>& timeline, double threshold);

/// Largest threshold among the timeline's distinct score values whose excursion
/// prompt rate stays within target_rate prompts/day.
double calibrate_threshold(const std::vector<ScoreSample>& timeline, double target_rate);

/// All weight vectors on the simplex grid with the given step, plus the exact
/// uniform vector (so uniform weights are always a candidate).
std::vector<std::vector<double>> simplex_grid(int r, double step);

struct CandidateResult {
    std::vector<double> weights;
    double threshold = 0.0;
    double missed_rate = 1.0;
    double mean_ttd = 0.0;        // seconds, over detected attacks
    int attacks = 0;
    int detected = 0;
};

struct TrainResult {
    std::vector<double> weights;
    double threshold = 0.0;
    double train_reauth_rate = 0.0;
    double train_missed_rate = 0.0;
    double train_mean_ttd = 0.0;
    double eval_reauth_rate = 0.0;
    double eval_missed_rate = 0.0;
    double eval_mean_ttd = 0.0;
    int train_attacks = 0;
    int eval_attacks = 0;
    std::vector<CandidateResult> search_log;
};

TrainResult train_weights(const UserModel& model, const EventTrace& legit,
                          const ContactBook& book, const std::vector<AttackTrace>& attacks,
                          const TrainConfig& cfg);

void write_search_log(const TrainResult& r, std::ostream& out);

}  // namespace iauth
