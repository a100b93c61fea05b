#include "iauth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "iauth/kv.hpp"

namespace iauth {

std::optional<double> detection_time(const std::vector<ScoreSample>& timeline, double threshold,
                                     std::int64_t wedge_time, std::int64_t horizon) {
    for (const auto& s : timeline) {
        if (s.t < wedge_time) continue;
        if (s.t > wedge_time + horizon) break;
        if (s.score < threshold) return static_cast<double>(s.t - wedge_time);
    }
    return std::nullopt;
}

std::optional<double> idle_decay_slope(const std::vector<ScoreSample>& timeline, TimeBin bin,
                                       BinGranularity granularity, int utc_offset) {
    double slope_sum = 0.0;
    int runs = 0;
    std::size_t i = 0;
    while (i < timeline.size()) {
        if (timeline[i].trigger != "tick" ||
            assign_bin(timeline[i].t, granularity, utc_offset).index(granularity) !=
                bin.index(granularity)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < timeline.size() && timeline[j + 1].trigger == "tick" &&
               assign_bin(timeline[j + 1].t, granularity, utc_offset).index(granularity) ==
                   bin.index(granularity)) {
            ++j;
        }
        if (j > i && timeline[j].t > timeline[i].t) {
            double hours = static_cast<double>(timeline[j].t - timeline[i].t) / 3600.0;
            slope_sum += (timeline[i].score - timeline[j].score) / hours;
            ++runs;
        }
        i = j + 1;
    }
    if (runs == 0) return std::nullopt;
    return slope_sum / runs;
}

namespace {

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    auto idx = static_cast<std::size_t>(std::llround(p * static_cast<double>(v.size() - 1)));
    return v[idx];
}

}  // namespace

MetricsReport compute_metrics(const std::map<std::string, UserModel>& models,
                              const std::map<std::string, EventTrace>& legit,
                              const std::map<std::string, ContactBook>& books,
                              const std::vector<AttackTrace>& attacks, const TrainConfig& cfg) {
    MetricsReport report;
    report.suite_size = static_cast<int>(attacks.size());
    report.attacks_present = !attacks.empty();

    for (const auto& [user, model] : models) {
        auto tit = legit.find(user);
        auto bit = books.find(user);
        if (tit == legit.end() || bit == books.end()) {
            throw std::runtime_error("compute_metrics: no trace or contact book for user '" + user + "'");
        }
        UserMetrics um;
        auto timeline = score_timeline(model, tit->second, bit->second, cfg.tick_seconds);
        um.reauth_rate = prompts_per_day(timeline, model.threshold);

        for (int bi = 0; bi < bin_count(model.cfg.granularity); ++bi) {
            TimeBin bin;
            bin.hour = bi % 24;
            bin.day = model.cfg.granularity == BinGranularity::hour
                          ? DayClass::all
                          : (bi >= 24 ? DayClass::weekend : DayClass::weekday);
            if (auto slope = idle_decay_slope(timeline, bin, model.cfg.granularity,
                                             model.cfg.utc_offset)) {
                um.decay_slope[bi] = *slope;
            }
        }

        std::vector<double> ttds, floors;
        for (const auto& atk : attacks) {
            if (atk.victim != user) continue;
            ++um.attacks;
            auto atl = score_timeline(model, atk.trace, bit->second, cfg.tick_seconds);
            auto dt = detection_time(atl, model.threshold, atk.wedge_time, cfg.detection_horizon);
            if (dt) {
                ++um.detected;
                ttds.push_back(*dt);
            }
            double floor = 1.0;
            for (const auto& s : atl) {
                if (s.t >= atk.wedge_time && s.t <= atk.wedge_time + cfg.detection_horizon) {
                    floor = std::min(floor, s.score);
                }
            }
            floors.push_back(floor);
        }
        if (um.attacks > 0) {
            um.missed_rate = static_cast<double>(um.attacks - um.detected) / um.attacks;
            double sum = 0.0;
            for (double t : ttds) sum += t;
            um.ttd_mean = ttds.empty() ? 0.0 : sum / static_cast<double>(ttds.size());
            um.ttd_median = percentile(ttds, 0.5);
            um.ttd_p90 = percentile(ttds, 0.9);
            um.floor_median = percentile(floors, 0.5);
        }
        report.users.emplace(user, std::move(um));
    }
    return report;
}

void write_report(const MetricsReport& r, std::ostream& out) {
    out << "# metrics report\n";
    out << "# terminology note: some of the literature swaps the usual error names;\n";
    out << "#   this report uses descriptive terms throughout:\n";
    out << "#   reauth_rate  = prompts/day shown to the genuine owner\n";
    out << "#                  (elsewhere sometimes called the false-negative rate)\n";
    out << "#   missed_rate  = fraction of attacks never flagged within the horizon\n";
    out << "#                  (elsewhere sometimes called the false-positive rate)\n";
    out << "suite_size=" << r.suite_size << "\n";
    out << "attacks_present=" << (r.attacks_present ? 1 : 0) << "\n";
    for (const auto& [user, um] : r.users) {
        out << user << ".reauth_rate=" << kv::format_double(um.reauth_rate) << "\n";
        out << user << ".attacks=" << um.attacks << "\n";
        if (um.attacks > 0) {
            out << user << ".detected=" << um.detected << "\n";
            out << user << ".missed_rate=" << kv::format_double(um.missed_rate) << "\n";
            out << user << ".ttd_mean_s=" << kv::format_double(um.ttd_mean) << "\n";
            out << user << ".ttd_median_s=" << kv::format_double(um.ttd_median) << "\n";
            out << user << ".ttd_p90_s=" << kv::format_double(um.ttd_p90) << "\n";
            out << user << ".score_floor_median=" << kv::format_double(um.floor_median) << "\n";
        } else {
            out << user << ".attack_section=absent\n";
        }
        for (const auto& [bi, slope] : um.decay_slope) {
            out << user << ".decay_slope.bin" << bi << "=" << kv::format_double(slope) << "\n";
        }
    }
}

void write_plot_data(const std::vector<ScoreSample>& timeline, int utc_offset,
                     std::ostream& out) {
    out << "# hour\tscore\tbad_call\n";
    for (const auto& s : timeline) {
        std::int64_t local = s.t + utc_offset;
        std::int64_t sec = ((local % 86400) + 86400) % 86400;
        double hour = static_cast<double>(sec) / 3600.0;
        out << kv::format_double(hour) << '\t' << kv::format_double(s.score) << '\t'
            << (s.bad_event ? 1 : 0) << "\n";
    }
}

}  // namespace iauth
