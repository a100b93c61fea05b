#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "iauth/model.hpp"

using namespace iauth;
using namespace testutil;

namespace {

FitConfig quick_fit_config() {
    FitConfig cfg;
    cfg.min_training_days = 1;
    return cfg;
}

FeatureObservation obs_event(std::int64_t t, double f1, int f2, bool bad,
                             const FitConfig& cfg) {
    FeatureObservation o;
    o.t = t;
    o.bin = assign_bin(t, cfg.granularity, cfg.utc_offset);
    o.from_event = true;
    o.bad = bad;
    o.f1_defined = true;
    o.f1 = f1;
    o.f2 = f2;
    return o;
}

FeatureObservation obs_ping(std::int64_t t, Point p, const FitConfig& cfg) {
    FeatureObservation o;
    o.t = t;
    o.bin = assign_bin(t, cfg.granularity, cfg.utc_offset);
    o.from_event = false;
    o.loc = p;
    return o;
}

}  // namespace

TEST_CASE("assign_bin") {
    CHECK(assign_bin(0, BinGranularity::hour, 0).hour == 0);
    CHECK(assign_bin(0, BinGranularity::hour, 0).day == DayClass::all);
    // epoch day 2 (1970-01-03) was a Saturday
    auto sat = assign_bin(2 * 86400 + 14 * 3600 + 1800, BinGranularity::hour_daytype, 0);
    CHECK(sat.hour == 14);
    CHECK(sat.day == DayClass::weekend);
    // one second apart across an hour boundary lands in different bins
    auto a = assign_bin(3599, BinGranularity::hour, 0);
    auto b = assign_bin(3600, BinGranularity::hour, 0);
    CHECK(a.hour == 0);
    CHECK(b.hour == 1);
    // local offset shifts the hour
    CHECK(assign_bin(0, BinGranularity::hour, 3600).hour == 1);
}

TEST_CASE("extract_features: worked bad-run cases") {
    auto cfg = quick_fit_config();
    auto book = book_of("u", {"good"});

    SUBCASE("good, bad, bad ends with f2 = 2") {
        auto t = trace_of("u", {call(100, "good", "e1"), call(200, "x1", "e2"),
                                call(300, "x2", "e3")});
        auto obs = extract_features(t, book, cfg);
        REQUIRE(obs.size() == 3);
        CHECK(obs[0].f2 == 0);
        CHECK(obs[1].f2 == 1);
        CHECK(obs[2].f2 == 2);
    }
    SUBCASE("most recent call good resets to 0") {
        auto t = trace_of("u", {call(100, "x1", "e1"), call(200, "x2", "e2"),
                                call(300, "good", "e3")});
        auto obs = extract_features(t, book, cfg);
        CHECK(obs[2].f2 == 0);
    }
    SUBCASE("f1 is elapsed since the previous good event") {
        auto t = trace_of("u", {call(100, "good", "e1"), call(160, "x", "e2")});
        auto obs = extract_features(t, book, cfg);
        CHECK_FALSE(obs[0].f1_defined);   // nothing good before the first event
        CHECK(obs[1].f1_defined);
        CHECK(obs[1].f1 == 60.0);
    }
}

TEST_CASE("extract_features: streaming f2 equals brute force on random sequences") {
    auto cfg = quick_fit_config();
    auto book = book_of("u", {"good"});
    std::mt19937 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Event> ev;
        std::vector<bool> bad_flags;
        int n = 1 + static_cast<int>(rng() % 50);
        for (int i = 0; i < n; ++i) {
            bool bad = rng() % 2;
            bad_flags.push_back(bad);
            ev.push_back(call(100 * (i + 1), bad ? "zz" : "good", "e" + std::to_string(i)));
        }
        auto obs = extract_features(trace_of("u", ev), book, cfg);
        for (std::size_t i = 0; i < obs.size(); ++i) {
            CHECK(obs[i].f2 == brute_force_f2(bad_flags, i));
        }
    }
}

TEST_CASE("cdf_eval on three samples") {
    auto cfg = quick_fit_config();
    cfg.min_samples = 3;
    std::vector<FeatureObservation> obs;
    for (double s : {600.0, 1200.0, 1800.0}) obs.push_back(obs_event(14 * 3600, s, 0, false, cfg));
    auto cdf = ConditionalCdf::fit(obs, cfg);
    TimeBin bin = assign_bin(14 * 3600, cfg.granularity, cfg.utc_offset);

    // strict count at 1200 is 1/3; interpolation may sit anywhere in [1/3, 2/3]
    double v = cdf.eval(1200.0, bin);
    CHECK(v >= 1.0 / 3.0 - 1e-12);
    CHECK(v <= 2.0 / 3.0 + 1e-12);
    CHECK(cdf.eval(0.0, bin) == 0.0);
    CHECK(cdf.eval(1e9, bin) == 1.0);
    CHECK(cdf.eval(1500.0, bin) == doctest::Approx(0.5));
}

TEST_CASE("cdf_eval: single sample behaves as a one-point CDF") {
    auto cfg = quick_fit_config();
    cfg.min_samples = 1;
    std::vector<FeatureObservation> obs{obs_event(3600, 100.0, 0, false, cfg)};
    auto cdf = ConditionalCdf::fit(obs, cfg);
    TimeBin bin = assign_bin(3600, cfg.granularity, cfg.utc_offset);
    CHECK(cdf.eval(50.0, bin) == 0.0);
    CHECK(cdf.eval(100.0, bin) == 0.0);
    CHECK(cdf.eval(100.5, bin) == 1.0);
}

TEST_CASE("cdf_eval: sparse bin falls back to the pooled array") {
    auto cfg = quick_fit_config();
    std::vector<FeatureObservation> obs;
    for (int i = 0; i < 20; ++i) obs.push_back(obs_event(14 * 3600, 100.0 * (i + 1), 0, false, cfg));
    auto cdf = ConditionalCdf::fit(obs, cfg);
    TimeBin other = assign_bin(3 * 3600, cfg.granularity, cfg.utc_offset);
    TimeBin dense = assign_bin(14 * 3600, cfg.granularity, cfg.utc_offset);
    CHECK(cdf.eval(1050.0, other) == cdf.eval(1050.0, dense));   // identical pooled data
    CHECK(cdf.eval(1050.0, other) > 0.0);
}

TEST_CASE("fit_cdf rejects zero observations") {
    auto cfg = quick_fit_config();
    std::vector<FeatureObservation> none;
    CHECK_THROWS(ConditionalCdf::fit(none, cfg));
}

TEST_CASE("cdf_eval properties: monotone, within one empirical step of strict count") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        auto cfg = quick_fit_config();
        std::vector<FeatureObservation> obs;
        int n = cfg.min_samples + static_cast<int>(rng() % 60);
        std::vector<double> samples;
        for (int i = 0; i < n; ++i) {
            double s = static_cast<double>(rng() % 10000);
            samples.push_back(s);
            obs.push_back(obs_event(10 * 3600, s, 0, false, cfg));
        }
        auto cdf = ConditionalCdf::fit(obs, cfg);
        TimeBin bin = assign_bin(10 * 3600, cfg.granularity, cfg.utc_offset);
        double prev = -1.0;
        for (double x = 0.0; x <= 11000.0; x += 137.0) {
            double v = cdf.eval(x, bin);
            CHECK(v >= prev);
            prev = v;
            double strict = brute_force_strict_cdf(samples, x);
            CHECK(std::abs(v - strict) <= 1.0 / n + 1e-12);
        }
    }
}

TEST_CASE("bad-run distribution: tail counts") {
    auto cfg = quick_fit_config();
    // 40 call events in bin 14, 10 of them with a bad run of length >= 1
    std::vector<FeatureObservation> obs;
    for (int i = 0; i < 30; ++i) obs.push_back(obs_event(14 * 3600, 10, 0, false, cfg));
    for (int i = 0; i < 10; ++i) obs.push_back(obs_event(14 * 3600, 10, 1, true, cfg));
    auto d = BadRunDistribution::fit(obs, cfg);
    TimeBin bin = assign_bin(14 * 3600, cfg.granularity, cfg.utc_offset);
    CHECK(d.tail_prob(0, bin) == 1.0);
    CHECK(d.tail_prob(1, bin) == doctest::Approx(0.25));
    CHECK(d.tail_prob(2, bin) == 0.0);
}

TEST_CASE("bad-run distribution: geometric fallback on sparse bins") {
    auto cfg = quick_fit_config();
    std::vector<FeatureObservation> obs{obs_event(14 * 3600, 10, 0, false, cfg)};
    auto d = BadRunDistribution::fit(obs, cfg);
    TimeBin sparse = assign_bin(2 * 3600, cfg.granularity, cfg.utc_offset);
    CHECK(d.tail_prob(3, sparse) == doctest::Approx(0.125));
    CHECK(d.tail_prob(0, sparse) == 1.0);
}

TEST_CASE("bad-run tails are non-increasing in k") {
    std::mt19937 rng(23);
    auto cfg = quick_fit_config();
    std::vector<FeatureObservation> obs;
    for (int i = 0; i < 200; ++i) {
        obs.push_back(obs_event(9 * 3600, 10, static_cast<int>(rng() % 5), false, cfg));
    }
    auto d = BadRunDistribution::fit(obs, cfg);
    TimeBin bin = assign_bin(9 * 3600, cfg.granularity, cfg.utc_offset);
    double prev = 1.0;
    for (int k = 0; k < 10; ++k) {
        double v = d.tail_prob(k, bin);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}

namespace {

// independent re-run of the greedy clustering rule, used as the oracle
struct NaiveCluster {
    Point center;
    int count = 0;
    std::vector<Point> members;
};

std::vector<NaiveCluster> naive_greedy(const std::vector<Point>& pts, double radius_join) {
    std::vector<NaiveCluster> cs;
    for (const Point& p : pts) {
        int best = -1;
        double best_d = 1e300;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            double d = distance(cs[i].center, p);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        if (best >= 0 && best_d <= radius_join) {
            auto& c = cs[static_cast<std::size_t>(best)];
            ++c.count;
            c.center.x += (p.x - c.center.x) / c.count;
            c.center.y += (p.y - c.center.y) / c.count;
            c.members.push_back(p);
        } else {
            cs.push_back(NaiveCluster{p, 1, {p}});
        }
    }
    return cs;
}

}  // namespace

TEST_CASE("greedy clustering: hand cases") {
    auto cfg = quick_fit_config();
    TimeBin bin = assign_bin(8 * 3600, cfg.granularity, cfg.utc_offset);

    SUBCASE("identical points collapse to one zero-radius cluster") {
        std::vector<FeatureObservation> obs;
        for (int i = 0; i < 5; ++i) obs.push_back(obs_ping(8 * 3600 + i, {10, 20}, cfg));
        auto cs = ClusterSet::fit(obs, cfg);
        const auto& clusters = cs.bins_[static_cast<std::size_t>(bin.index(cfg.granularity))];
        REQUIRE(clusters.size() == 1);
        CHECK(clusters[0].center.x == 10.0);
        CHECK(clusters[0].radius == 0.0);
        CHECK(clusters[0].count == 5);
    }
    SUBCASE("groups 10 km apart stay separate") {
        std::vector<FeatureObservation> obs;
        obs.push_back(obs_ping(8 * 3600, {0, 0}, cfg));
        obs.push_back(obs_ping(8 * 3600 + 1, {10000, 0}, cfg));
        auto cs = ClusterSet::fit(obs, cfg);
        CHECK(cs.bins_[static_cast<std::size_t>(bin.index(cfg.granularity))].size() == 2);
    }
    SUBCASE("running mean: {(0,0),(100,0)} joins at center (50,0)") {
        std::vector<FeatureObservation> obs;
        obs.push_back(obs_ping(8 * 3600, {0, 0}, cfg));
        obs.push_back(obs_ping(8 * 3600 + 1, {100, 0}, cfg));
        auto cs = ClusterSet::fit(obs, cfg);
        const auto& clusters = cs.bins_[static_cast<std::size_t>(bin.index(cfg.granularity))];
        REQUIRE(clusters.size() == 1);
        CHECK(clusters[0].center.x == doctest::Approx(50.0));
        CHECK(clusters[0].center.y == doctest::Approx(0.0));
    }
}

TEST_CASE("greedy clustering matches the independent oracle on random points") {
    std::mt19937 rng(29);
    auto cfg = quick_fit_config();
    TimeBin bin = assign_bin(8 * 3600, cfg.granularity, cfg.utc_offset);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Point> pts;
        std::vector<FeatureObservation> obs;
        int n = 1 + static_cast<int>(rng() % 80);
        for (int i = 0; i < n; ++i) {
            Point p{static_cast<double>(rng() % 2000), static_cast<double>(rng() % 2000)};
            pts.push_back(p);
            obs.push_back(obs_ping(8 * 3600 + i, p, cfg));
        }
        auto cs = ClusterSet::fit(obs, cfg);
        auto oracle = naive_greedy(pts, cfg.radius_join);
        const auto& got = cs.bins_[static_cast<std::size_t>(bin.index(cfg.granularity))];
        REQUIRE(got.size() == oracle.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].count == oracle[i].count);
            CHECK(got[i].center.x == doctest::Approx(oracle[i].center.x));
            CHECK(got[i].center.y == doctest::Approx(oracle[i].center.y));
            // every member within radius_join of the final center, or within
            // the recorded radius
            for (const Point& p : oracle[i].members) {
                double d = distance(p, got[i].center);
                CHECK((d <= cfg.radius_join || d <= got[i].radius + 1e-9));
            }
        }
    }
}

TEST_CASE("fit_model: feature count follows location availability") {
    auto profile = demo_profile("alice", 5, true);
    auto trace = generate_trace(profile, 30, 99);
    auto book = profile_book(profile);
    FitConfig cfg;
    auto m = fit_model(trace, book, cfg);
    CHECK(m.feature_count == 3);
    CHECK(m.has_location);

    auto profile2 = demo_profile("bob", 6, false);
    auto trace2 = generate_trace(profile2, 30, 99);
    auto m2 = fit_model(trace2, profile_book(profile2), cfg);
    CHECK(m2.feature_count == 2);
    CHECK_FALSE(m2.has_location);
    CHECK(m2.clusters.empty());
}

TEST_CASE("fit_model: too-short trace rejected with the required span") {
    auto profile = demo_profile("alice", 5, false);
    auto trace = generate_trace(profile, 3, 99);
    FitConfig cfg;
    CHECK_THROWS_WITH_AS(fit_model(trace, profile_book(profile), cfg),
                         doctest::Contains("14 days"), std::runtime_error);
}

TEST_CASE("model serialization round-trip preserves query results bit-exactly") {
    auto profile = demo_profile("alice", 5, true);
    auto trace = generate_trace(profile, 30, 99);
    FitConfig cfg;
    auto m = fit_model(trace, profile_book(profile), cfg);
    m.threshold = 0.123456789012345;

    std::ostringstream out;
    serialize_model(m, out);
    std::istringstream in(out.str());
    auto back = parse_model(in);

    std::ostringstream out2;
    serialize_model(back, out2);
    CHECK(out.str() == out2.str());   // fixed point after one round trip

    std::mt19937 rng(31);
    for (int i = 0; i < 200; ++i) {
        TimeBin bin = assign_bin(static_cast<std::int64_t>(rng() % (30 * 86400)),
                                 cfg.granularity, cfg.utc_offset);
        double x = static_cast<double>(rng() % 100000);
        CHECK(m.cdf_f1.eval(x, bin) == back.cdf_f1.eval(x, bin));
        int f2 = static_cast<int>(rng() % 6);
        CHECK(m.bad_runs.tail_prob(f2, bin) == back.bad_runs.tail_prob(f2, bin));
    }
    CHECK(m.threshold == back.threshold);
    CHECK(m.weights == back.weights);
}

TEST_CASE("fit_model is deterministic") {
    auto profile = demo_profile("alice", 5, true);
    auto trace = generate_trace(profile, 20, 99);
    FitConfig cfg;
    auto m1 = fit_model(trace, profile_book(profile), cfg);
    auto m2 = fit_model(trace, profile_book(profile), cfg);
    std::ostringstream a, b;
    serialize_model(m1, a);
    serialize_model(m2, b);
    CHECK(a.str() == b.str());
}
