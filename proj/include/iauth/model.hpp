#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "iauth/events.hpp"

namespace iauth {

enum class BinGranularity { hour, hour_daytype };
enum class DayClass { all, weekday, weekend };
enum class Combiner { product, weighted_sum };

const char* to_string(BinGranularity g);
const char* to_string(Combiner c);
BinGranularity parse_granularity(const std::string& s);
Combiner parse_combiner(const std::string& s);

struct TimeBin {
    int hour = 0;                       // 0..23, local
    DayClass day = DayClass::all;

    int index(BinGranularity g) const;  // flat index into per-bin arrays
    bool operator==(const TimeBin&) const = default;
};

int bin_count(BinGranularity g);
TimeBin assign_bin(std::int64_t ts, BinGranularity g, int utc_offset_seconds);

struct FitConfig {
    BinGranularity granularity = BinGranularity::hour;
    int utc_offset = 0;                 // seconds east of UTC
    int min_samples = 5;                // per-bin floor before global fallback
    double beta = 0.5;                  // geometric fallback for bad-run gain
    double radius_join = 250.0;         // meters, greedy cluster join radius
    double sigma = 500.0;               // meters, location gain decay scale
    std::int64_t location_staleness = 1800;   // seconds a fix stays usable
    int min_training_days = 14;
    bool sms_resets_clock = true;       // good SMS resets the f1 clock too
    Combiner combiner = Combiner::product;
    double default_threshold = 0.5;
};

/// The tuple observed at one instant: time bin plus the feature values.
struct FeatureObservation {
    std::int64_t t = 0;
    TimeBin bin;
    bool from_event = false;   // call/sms (true) vs location ping (false)
    bool bad = false;          // current event classified bad (call/sms only)
    bool f1_defined = false;   // false before the first good event
    double f1 = 0.0;           // seconds since previous good event (pre-event)
    int f2 = 0;                // trailing consecutive-bad run incl. current event
    std::optional<Point> loc;  // freshest fix within the staleness window
};

std::vector<FeatureObservation> extract_features(const EventTrace& trace,
                                                 const ContactBook& book,
                                                 const FitConfig& cfg);

/// Per-bin empirical CDF of elapsed-drift samples with pooled-global fallback
/// for sparse bins. eval() returns Pr(F1 < x | bin) with linear interpolation
/// between order statistics.
class ConditionalCdf {
public:
    ConditionalCdf() = default;
    static ConditionalCdf fit(const std::vector<FeatureObservation>& obs, const FitConfig& cfg);

    double eval(double x, TimeBin bin) const;
    const std::vector<double>& bin_samples(int index) const { return bins_.at(index); }
    const std::vector<double>& global_samples() const { return global_; }
    int min_samples() const { return min_samples_; }
    BinGranularity granularity() const { return granularity_; }

    // serialization access
    std::vector<std::vector<double>> bins_;
    std::vector<double> global_;   // pooled, sorted
    int min_samples_ = 5;
    BinGranularity granularity_ = BinGranularity::hour;

private:
    static double eval_sorted(const std::vector<double>& s, double x);
};

/// Per-bin tail counts of consecutive-bad-run lengths:
/// tails_[bin][k-1] = number of observations with f2 >= k.
class BadRunDistribution {
public:
    BadRunDistribution() = default;
    static BadRunDistribution fit(const std::vector<FeatureObservation>& obs, const FitConfig& cfg);

    /// Pr(F2 >= f2 | bin); 1 at f2 = 0; geometric beta^f2 on sparse bins.
    double tail_prob(int f2, TimeBin bin) const;

    std::vector<std::int64_t> totals_;
    std::vector<std::vector<std::int64_t>> tails_;
    double beta_ = 0.5;
    int min_samples_ = 5;
    BinGranularity granularity_ = BinGranularity::hour;
};

struct Cluster {
    Point center;
    double radius = 0.0;   // max member distance from the final center
    int count = 0;
};

class ClusterSet {
public:
    ClusterSet() = default;
    static ClusterSet fit(const std::vector<FeatureObservation>& obs, const FitConfig& cfg);

    bool empty() const;
    /// Nearest cluster in the bin; falls back to nearest across all bins.
    const Cluster* nearest(const Point& p, TimeBin bin) const;
    double sigma() const { return sigma_; }

    std::vector<std::vector<Cluster>> bins_;
    double sigma_ = 500.0;
    BinGranularity granularity_ = BinGranularity::hour;
};

struct UserModel {
    std::string user;
    FitConfig cfg;
    int feature_count = 2;          // R: f1, f2, optionally location
    bool has_location = false;
    ConditionalCdf cdf_f1;
    BadRunDistribution bad_runs;
    ClusterSet clusters;
    std::vector<double> weights;    // simplex, size feature_count
    Combiner combiner = Combiner::product;
    double threshold = 0.5;
};

UserModel fit_model(const EventTrace& trace, const ContactBook& book, const FitConfig& cfg);

void serialize_model(const UserModel& m, std::ostream& out);
UserModel parse_model(std::istream& in);
UserModel load_model(const std::string& path);
void save_model(const UserModel& m, const std::string& path);

}  // namespace iauth
