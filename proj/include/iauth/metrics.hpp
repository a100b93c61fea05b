#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iauth/events.hpp"
#include "iauth/model.hpp"
#include "iauth/scorer.hpp"
#include "iauth/synth.hpp"
#include "iauth/trainer.hpp"

namespace iauth {

/// Seconds from wedge_time to the first at-or-after-wedge sample below the
/// threshold; absent when none falls within the horizon.
std::optional<double> detection_time(const std::vector<ScoreSample>& timeline, double threshold,
                                     std::int64_t wedge_time, std::int64_t horizon);

/// Mean score drop per hour over maximal idle tick runs falling in the bin.
std::optional<double> idle_decay_slope(const std::vector<ScoreSample>& timeline, TimeBin bin,
                                       BinGranularity granularity, int utc_offset);

struct UserMetrics {
    double reauth_rate = 0.0;           // prompts per day on the legit trace
    int attacks = 0;
    int detected = 0;
    double missed_rate = 0.0;
    double ttd_mean = 0.0;              // over detected attacks, seconds
    double ttd_median = 0.0;
    double ttd_p90 = 0.0;
    double floor_median = 1.0;          // median post-wedge minimum score
    std::map<int, double> decay_slope;  // bin index -> score/hour
};

struct MetricsReport {
    std::map<std::string, UserMetrics> users;
    int suite_size = 0;
    bool attacks_present = false;
};

MetricsReport compute_metrics(const std::map<std::string, UserModel>& models,
                              const std::map<std::string, EventTrace>& legit,
                              const std::map<std::string, ContactBook>& books,
                              const std::vector<AttackTrace>& attacks, const TrainConfig& cfg);

void write_report(const MetricsReport& r, std::ostream& out);

/// Rows of (local hour-of-day decimal, score, bad-call marker) for plotting.
void write_plot_data(const std::vector<ScoreSample>& timeline, int utc_offset, std::ostream& out);

}  // namespace iauth
