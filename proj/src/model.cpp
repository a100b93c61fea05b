#include "iauth/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "iauth/kv.hpp"

namespace iauth {

const char* to_string(BinGranularity g) {
    return g == BinGranularity::hour ? "hour" : "hour_daytype";
}

const char* to_string(Combiner c) {
    return c == Combiner::product ? "product" : "weighted_sum";
}

BinGranularity parse_granularity(const std::string& s) {
    if (s == "hour") return BinGranularity::hour;
    if (s == "hour_daytype") return BinGranularity::hour_daytype;
    throw std::runtime_error("unknown bin granularity '" + s + "'");
}

Combiner parse_combiner(const std::string& s) {
    if (s == "product") return Combiner::product;
    if (s == "weighted_sum") return Combiner::weighted_sum;
    throw std::runtime_error("unknown combiner '" + s + "'");
}

int bin_count(BinGranularity g) {
    return g == BinGranularity::hour ? 24 : 48;
}

int TimeBin::index(BinGranularity g) const {
    if (g == BinGranularity::hour) return hour;
    return hour + (day == DayClass::weekend ? 24 : 0);
}

TimeBin assign_bin(std::int64_t ts, BinGranularity g, int utc_offset_seconds) {
    std::int64_t local = ts + utc_offset_seconds;
    auto floordiv = [](std::int64_t a, std::int64_t b) {
        std::int64_t q = a / b;
        if (a % b != 0 && ((a < 0) != (b < 0))) --q;
        return q;
    };
    std::int64_t day = floordiv(local, 86400);
    std::int64_t sec_of_day = local - day * 86400;
    TimeBin bin;
    bin.hour = static_cast<int>(sec_of_day / 3600);
    if (g == BinGranularity::hour) {
        bin.day = DayClass::all;
    } else {
        // epoch day 0 (1970-01-01) was a Thursday
        int dow = static_cast<int>(((day % 7) + 7 + 4) % 7);
        bin.day = (dow == 0 || dow == 6) ? DayClass::weekend : DayClass::weekday;
    }
    return bin;
}

std::vector<FeatureObservation> extract_features(const EventTrace& trace,
                                                 const ContactBook& book,
                                                 const FitConfig& cfg) {
    std::vector<FeatureObservation> out;
    out.reserve(trace.events.size());

    std::optional<std::int64_t> last_good;
    int bad_run = 0;
    std::optional<Point> last_loc;
    std::int64_t last_loc_time = 0;

    for (const Event& e : trace.events) {
        FeatureObservation obs;
        obs.t = e.ts;
        obs.bin = assign_bin(e.ts, cfg.granularity, cfg.utc_offset);

        if (e.kind == EventKind::location_ping) {
            last_loc = e.loc;
            last_loc_time = e.ts;
            obs.from_event = false;
            obs.f1_defined = last_good.has_value();
            if (obs.f1_defined) obs.f1 = static_cast<double>(e.ts - *last_good);
            obs.f2 = bad_run;
            obs.loc = last_loc;
            out.push_back(obs);
            continue;
        }

        bool good = classify_call(e, book) == CallClass::good;
        obs.from_event = true;
        obs.bad = !good;
        // f1 is the drift measured against the previous good event, before
        // the current event resets the clock
        obs.f1_defined = last_good.has_value();
        if (obs.f1_defined) obs.f1 = static_cast<double>(e.ts - *last_good);
        obs.f2 = good ? 0 : bad_run + 1;
        if (last_loc && e.ts - last_loc_time <= cfg.location_staleness) obs.loc = last_loc;
        out.push_back(obs);

        if (good) {
            bool resets = e.kind == EventKind::call || cfg.sms_resets_clock;
            if (resets) last_good = e.ts;
            bad_run = 0;
        } else {
            ++bad_run;
        }
    }
    return out;
}

double ConditionalCdf::eval_sorted(const std::vector<double>& s, double x) {
    const std::size_t n = s.size();
    if (n == 0) return 0.0;
    if (x <= s.front()) return 0.0;
    if (x > s.back()) return 1.0;
    auto it = std::lower_bound(s.begin(), s.end(), x);
    std::size_t j = static_cast<std::size_t>(it - s.begin());
    double nn = static_cast<double>(n);
    if (*it == x) return static_cast<double>(j) / nn;
    // s[j-1] < x < s[j]: interpolate between order statistics
    double lo = s[j - 1], hi = s[j];
    double frac = (x - lo) / (hi - lo);
    return (static_cast<double>(j - 1) + frac) / nn;
}

ConditionalCdf ConditionalCdf::fit(const std::vector<FeatureObservation>& obs,
                                   const FitConfig& cfg) {
    ConditionalCdf cdf;
    cdf.min_samples_ = cfg.min_samples;
    cdf.granularity_ = cfg.granularity;
    cdf.bins_.assign(bin_count(cfg.granularity), {});
    for (const auto& o : obs) {
        if (!o.from_event || !o.f1_defined) continue;
        cdf.bins_[o.bin.index(cfg.granularity)].push_back(o.f1);
        cdf.global_.push_back(o.f1);
    }
    if (cdf.global_.empty()) {
        throw std::runtime_error("fit_cdf: no elapsed-drift samples in training trace");
    }
    for (auto& b : cdf.bins_) std::sort(b.begin(), b.end());
    std::sort(cdf.global_.begin(), cdf.global_.end());
    return cdf;
}

double ConditionalCdf::eval(double x, TimeBin bin) const {
    const auto& b = bins_.at(bin.index(granularity_));
    if (static_cast<int>(b.size()) >= min_samples_) return eval_sorted(b, x);
    return eval_sorted(global_, x);
}

BadRunDistribution BadRunDistribution::fit(const std::vector<FeatureObservation>& obs,
                                           const FitConfig& cfg) {
    BadRunDistribution d;
    d.beta_ = cfg.beta;
    d.min_samples_ = cfg.min_samples;
    d.granularity_ = cfg.granularity;
    int nb = bin_count(cfg.granularity);
    d.totals_.assign(nb, 0);
    std::vector<std::vector<std::int64_t>> exact(nb);
    for (const auto& o : obs) {
        if (!o.from_event) continue;
        int bi = o.bin.index(cfg.granularity);
        ++d.totals_[bi];
        if (o.f2 >= 1) {
            if (static_cast<int>(exact[bi].size()) < o.f2) exact[bi].resize(o.f2, 0);
            ++exact[bi][o.f2 - 1];
        }
    }
    d.tails_.assign(nb, {});
    for (int bi = 0; bi < nb; ++bi) {
        auto& ex = exact[bi];
        d.tails_[bi].assign(ex.size(), 0);
        std::int64_t acc = 0;
        for (int k = static_cast<int>(ex.size()); k >= 1; --k) {
            acc += ex[k - 1];
            d.tails_[bi][k - 1] = acc;
        }
    }
    return d;
}

double BadRunDistribution::tail_prob(int f2, TimeBin bin) const {
    if (f2 <= 0) return 1.0;
    int bi = bin.index(granularity_);
    if (totals_.at(bi) >= min_samples_) {
        const auto& t = tails_[bi];
        std::int64_t c = f2 <= static_cast<int>(t.size()) ? t[f2 - 1] : 0;
        return static_cast<double>(c) / static_cast<double>(totals_[bi]);
    }
    return std::pow(beta_, f2);
}

ClusterSet ClusterSet::fit(const std::vector<FeatureObservation>& obs, const FitConfig& cfg) {
    ClusterSet cs;
    cs.sigma_ = cfg.sigma;
    cs.granularity_ = cfg.granularity;
    int nb = bin_count(cfg.granularity);
    cs.bins_.assign(nb, {});
    std::vector<std::vector<std::vector<Point>>> members(nb);

    for (const auto& o : obs) {
        if (o.from_event || !o.loc) continue;
        int bi = o.bin.index(cfg.granularity);
        auto& clusters = cs.bins_[bi];
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            double d = distance(clusters[i].center, *o.loc);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        if (best >= 0 && best_d <= cfg.radius_join) {
            Cluster& c = clusters[best];
            ++c.count;
            c.center.x += (o.loc->x - c.center.x) / c.count;
            c.center.y += (o.loc->y - c.center.y) / c.count;
            members[bi][best].push_back(*o.loc);
        } else {
            clusters.push_back(Cluster{*o.loc, 0.0, 1});
            members[bi].push_back({*o.loc});
        }
    }
    // radius = max member distance from the final center
    for (int bi = 0; bi < nb; ++bi) {
        for (std::size_t ci = 0; ci < cs.bins_[bi].size(); ++ci) {
            double r = 0.0;
            for (const Point& p : members[bi][ci]) {
                r = std::max(r, distance(p, cs.bins_[bi][ci].center));
            }
            cs.bins_[bi][ci].radius = r;
        }
    }
    return cs;
}

bool ClusterSet::empty() const {
    for (const auto& b : bins_) {
        if (!b.empty()) return false;
    }
    return true;
}

const Cluster* ClusterSet::nearest(const Point& p, TimeBin bin) const {
    auto scan = [&](const std::vector<Cluster>& clusters, const Cluster* best,
                    double& best_d) {
        for (const Cluster& c : clusters) {
            double d = distance(c.center, p);
            if (d < best_d) {
                best_d = d;
                best = &c;
            }
        }
        return best;
    };
    double best_d = std::numeric_limits<double>::infinity();
    const Cluster* best = scan(bins_.at(bin.index(granularity_)), nullptr, best_d);
    if (best) return best;
    for (const auto& b : bins_) best = scan(b, best, best_d);
    return best;
}

UserModel fit_model(const EventTrace& trace, const ContactBook& book, const FitConfig& cfg) {
    if (trace.empty()) throw std::runtime_error("fit_model: empty trace");
    std::int64_t span = trace.span_end() - trace.span_start();
    std::int64_t required = static_cast<std::int64_t>(cfg.min_training_days) * 86400;
    if (span < required) {
        throw std::runtime_error("fit_model: trace spans " + std::to_string(span) +
                                 " s, requires at least " + std::to_string(cfg.min_training_days) +
                                 " days (" + std::to_string(required) + " s)");
    }
    auto obs = extract_features(trace, book, cfg);
    UserModel m;
    m.user = trace.user;
    m.cfg = cfg;
    m.cdf_f1 = ConditionalCdf::fit(obs, cfg);
    m.bad_runs = BadRunDistribution::fit(obs, cfg);
    m.clusters = ClusterSet::fit(obs, cfg);
    m.has_location = !m.clusters.empty();
    m.feature_count = m.has_location ? 3 : 2;
    m.weights.assign(m.feature_count, 1.0 / m.feature_count);
    m.combiner = cfg.combiner;
    m.threshold = cfg.default_threshold;
    return m;
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += kv::format_double(v[i]);
    }
    return s;
}

std::vector<double> split_doubles(const std::string& s, const std::string& key) {
    std::vector<double> out;
    if (s.empty()) return out;
    for (const auto& tok : kv::split(s, ',')) out.push_back(kv::parse_double(tok, key));
    return out;
}

std::vector<std::int64_t> split_ints(const std::string& s, const std::string& key) {
    std::vector<std::int64_t> out;
    if (s.empty()) return out;
    for (const auto& tok : kv::split(s, ',')) out.push_back(kv::parse_int(tok, key));
    return out;
}

}  // namespace

void serialize_model(const UserModel& m, std::ostream& out) {
    out << "format=1\n";
    out << "user=" << m.user << "\n";
    out << "granularity=" << to_string(m.cfg.granularity) << "\n";
    out << "utc_offset=" << m.cfg.utc_offset << "\n";
    out << "min_samples=" << m.cfg.min_samples << "\n";
    out << "beta=" << kv::format_double(m.cfg.beta) << "\n";
    out << "radius_join=" << kv::format_double(m.cfg.radius_join) << "\n";
    out << "sigma=" << kv::format_double(m.cfg.sigma) << "\n";
    out << "staleness=" << m.cfg.location_staleness << "\n";
    out << "min_training_days=" << m.cfg.min_training_days << "\n";
    out << "sms_resets_clock=" << (m.cfg.sms_resets_clock ? 1 : 0) << "\n";
    out << "combiner=" << to_string(m.combiner) << "\n";
    out << "threshold=" << kv::format_double(m.threshold) << "\n";
    out << "r=" << m.feature_count << "\n";
    out << "has_location=" << (m.has_location ? 1 : 0) << "\n";
    out << "weights=" << join_doubles(m.weights) << "\n";
    out << "cdf.global=" << join_doubles(m.cdf_f1.global_) << "\n";
    for (std::size_t i = 0; i < m.cdf_f1.bins_.size(); ++i) {
        if (!m.cdf_f1.bins_[i].empty()) {
            out << "cdf.bin." << i << "=" << join_doubles(m.cdf_f1.bins_[i]) << "\n";
        }
    }
    for (std::size_t i = 0; i < m.bad_runs.totals_.size(); ++i) {
        if (m.bad_runs.totals_[i] != 0) {
            out << "badrun.total." << i << "=" << m.bad_runs.totals_[i] << "\n";
        }
        if (!m.bad_runs.tails_[i].empty()) {
            out << "badrun.tail." << i << "=";
            for (std::size_t k = 0; k < m.bad_runs.tails_[i].size(); ++k) {
                if (k) out << ',';
                out << m.bad_runs.tails_[i][k];
            }
            out << "\n";
        }
    }
    for (std::size_t i = 0; i < m.clusters.bins_.size(); ++i) {
        if (m.clusters.bins_[i].empty()) continue;
        out << "cluster." << i << "=";
        for (std::size_t ci = 0; ci < m.clusters.bins_[i].size(); ++ci) {
            const Cluster& c = m.clusters.bins_[i][ci];
            if (ci) out << ';';
            out << kv::format_double(c.center.x) << ',' << kv::format_double(c.center.y)
                << ',' << kv::format_double(c.radius) << ',' << c.count;
        }
        out << "\n";
    }
}

UserModel parse_model(std::istream& in) {
    auto f = kv::parse_file(in);
    auto need = [&](const std::string& k) -> const std::string& {
        auto it = f.find(k);
        if (it == f.end()) throw std::runtime_error("model file missing field '" + k + "'");
        return it->second;
    };
    if (need("format") != "1") throw std::runtime_error("unsupported model format version");
    UserModel m;
    m.user = need("user");
    m.cfg.granularity = parse_granularity(need("granularity"));
    m.cfg.utc_offset = static_cast<int>(kv::parse_int(need("utc_offset"), "utc_offset"));
    m.cfg.min_samples = static_cast<int>(kv::parse_int(need("min_samples"), "min_samples"));
    m.cfg.beta = kv::parse_double(need("beta"), "beta");
    m.cfg.radius_join = kv::parse_double(need("radius_join"), "radius_join");
    m.cfg.sigma = kv::parse_double(need("sigma"), "sigma");
    m.cfg.location_staleness = kv::parse_int(need("staleness"), "staleness");
    m.cfg.min_training_days =
        static_cast<int>(kv::parse_int(need("min_training_days"), "min_training_days"));
    m.cfg.sms_resets_clock = need("sms_resets_clock") == "1";
    m.combiner = parse_combiner(need("combiner"));
    m.cfg.combiner = m.combiner;
    m.threshold = kv::parse_double(need("threshold"), "threshold");
    m.feature_count = static_cast<int>(kv::parse_int(need("r"), "r"));
    m.has_location = need("has_location") == "1";
    m.weights = split_doubles(need("weights"), "weights");
    if (static_cast<int>(m.weights.size()) != m.feature_count) {
        throw std::runtime_error("model file: weight count does not match r");
    }

    int nb = bin_count(m.cfg.granularity);
    m.cdf_f1.min_samples_ = m.cfg.min_samples;
    m.cdf_f1.granularity_ = m.cfg.granularity;
    m.cdf_f1.global_ = split_doubles(need("cdf.global"), "cdf.global");
    m.cdf_f1.bins_.assign(nb, {});
    m.bad_runs.beta_ = m.cfg.beta;
    m.bad_runs.min_samples_ = m.cfg.min_samples;
    m.bad_runs.granularity_ = m.cfg.granularity;
    m.bad_runs.totals_.assign(nb, 0);
    m.bad_runs.tails_.assign(nb, {});
    m.clusters.sigma_ = m.cfg.sigma;
    m.clusters.granularity_ = m.cfg.granularity;
    m.clusters.bins_.assign(nb, {});

    for (const auto& [k, v] : f) {
        auto bin_suffix = [&](const std::string& prefix) -> int {
            if (k.rfind(prefix, 0) != 0) return -1;
            int bi = static_cast<int>(kv::parse_int(k.substr(prefix.size()), k));
            if (bi < 0 || bi >= nb) throw std::runtime_error("model file: bin index out of range in '" + k + "'");
            return bi;
        };
        int bi;
        if ((bi = bin_suffix("cdf.bin.")) >= 0) {
            m.cdf_f1.bins_[bi] = split_doubles(v, k);
        } else if ((bi = bin_suffix("badrun.total.")) >= 0) {
            m.bad_runs.totals_[bi] = kv::parse_int(v, k);
        } else if ((bi = bin_suffix("badrun.tail.")) >= 0) {
            m.bad_runs.tails_[bi] = split_ints(v, k);
        } else if ((bi = bin_suffix("cluster.")) >= 0) {
            for (const auto& rec : kv::split(v, ';')) {
                auto parts = kv::split(rec, ',');
                if (parts.size() != 4) throw std::runtime_error("model file: bad cluster record in '" + k + "'");
                Cluster c;
                c.center.x = kv::parse_double(parts[0], k);
                c.center.y = kv::parse_double(parts[1], k);
                c.radius = kv::parse_double(parts[2], k);
                c.count = static_cast<int>(kv::parse_int(parts[3], k));
                m.clusters.bins_[bi].push_back(c);
            }
        }
    }
    return m;
}

UserModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open model file: " + path);
    return parse_model(f);
}

void save_model(const UserModel& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write model file: " + path);
    serialize_model(m, f);
}

}  // namespace iauth
