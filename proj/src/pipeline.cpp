#include "iauth/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "iauth/kv.hpp"
#include "iauth/metrics.hpp"
#include "iauth/scorer.hpp"
#include "iauth/synth.hpp"

namespace fs = std::filesystem;

namespace iauth {

namespace {

[[noreturn]] void config_error(const std::string& what) {
    throw std::invalid_argument("config: " + what);
}

std::ofstream open_out(const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

fs::path trace_path(const RunConfig& c, const std::string& user) {
    return c.out / "traces" / (user + ".trace");
}
fs::path book_path(const RunConfig& c, const std::string& user) {
    return c.out / "traces" / (user + ".book");
}
fs::path model_path(const RunConfig& c, const std::string& user) {
    return c.out / "models" / (user + ".model");
}

std::map<std::string, EventTrace> load_traces(const RunConfig& c) {
    std::map<std::string, EventTrace> out;
    for (const auto& [user, _] : c.profiles) {
        out.emplace(user, load_trace(trace_path(c, user).string()));
    }
    return out;
}

std::map<std::string, ContactBook> load_books(const RunConfig& c) {
    std::map<std::string, ContactBook> out;
    for (const auto& [user, _] : c.profiles) {
        out.emplace(user, load_contact_book(book_path(c, user).string()));
    }
    return out;
}

struct AttackSuiteOnDisk {
    std::vector<AttackTrace> attacks;
};

AttackSuiteOnDisk load_suite(const RunConfig& c) {
    fs::path manifest = c.out / "attacks" / "manifest.txt";
    std::ifstream f(manifest);
    if (!f) throw std::runtime_error("cannot open attack manifest " + manifest.string() +
                                     " (run wedge first)");
    AttackSuiteOnDisk suite;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = kv::parse_line(line, lineno);
        AttackTrace atk;
        atk.victim = fields.at("victim");
        atk.attacker = fields.at("attacker");
        atk.wedge_time = kv::parse_int(fields.at("wedge_time"), "wedge_time");
        atk.trace = load_trace((c.out / "attacks" / fields.at("path")).string());
        suite.attacks.push_back(std::move(atk));
    }
    return suite;
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) config_error("cannot open " + path.string());
    auto kvs = kv::parse_file(f);
    RunConfig c;
    fs::path base = path.parent_path();

    for (const auto& [k, v] : kvs) {
        if (k == "out") {
            c.out = v;
        } else if (k == "days") {
            c.days = static_cast<int>(kv::parse_int(v, k));
        } else if (k == "seed") {
            c.seed = static_cast<std::uint64_t>(kv::parse_int(v, k));
        } else if (k == "attacks") {
            c.attack_count = static_cast<int>(kv::parse_int(v, k));
        } else if (k == "colocate") {
            c.colocate_attacker = v == "1";
        } else if (k == "tick") {
            c.train.tick_seconds = kv::parse_int(v, k);
        } else if (k == "granularity") {
            c.fit.granularity = parse_granularity(v);
        } else if (k == "utc_offset") {
            c.fit.utc_offset = static_cast<int>(kv::parse_int(v, k));
        } else if (k == "combiner") {
            c.fit.combiner = parse_combiner(v);
        } else if (k.rfind("profile.", 0) == 0) {
            fs::path p = v;
            if (p.is_relative()) p = base / p;
            c.profiles[k.substr(8)] = p;
        } else if (k == "fit.min_samples") {
            c.fit.min_samples = static_cast<int>(kv::parse_int(v, k));
        } else if (k == "fit.beta") {
            c.fit.beta = kv::parse_double(v, k);
        } else if (k == "fit.radius_join") {
            c.fit.radius_join = kv::parse_double(v, k);
        } else if (k == "fit.sigma") {
            c.fit.sigma = kv::parse_double(v, k);
        } else if (k == "fit.staleness") {
            c.fit.location_staleness = kv::parse_int(v, k);
        } else if (k == "fit.min_training_days") {
            c.fit.min_training_days = static_cast<int>(kv::parse_int(v, k));
        } else if (k == "fit.sms_resets_clock") {
            c.fit.sms_resets_clock = v == "1";
        } else if (k == "fit.default_threshold") {
            c.fit.default_threshold = kv::parse_double(v, k);
        } else if (k == "train.target_rate") {
            c.train.target_reauth_rate = kv::parse_double(v, k);
        } else if (k == "train.rate_tolerance") {
            c.train.rate_tolerance = kv::parse_double(v, k);
        } else if (k == "train.grid_step") {
            c.train.grid_step = kv::parse_double(v, k);
        } else if (k == "train.horizon") {
            c.train.detection_horizon = kv::parse_int(v, k);
        } else if (k == "train.split") {
            c.train.split_fraction = kv::parse_double(v, k);
        } else {
            config_error("unknown key '" + k + "'");
        }
    }
    if (c.profiles.empty()) config_error("no profile.<user> entries");
    if (c.days < 1) config_error("days must be >= 1");
    if (c.train.split_fraction <= 0.0 || c.train.split_fraction >= 1.0) {
        config_error("train.split must be in (0,1)");
    }
    for (const auto& [user, p] : c.profiles) {
        if (!fs::exists(p)) config_error("profile for '" + user + "' not found: " + p.string());
    }
    return c;
}

void run_synth(const RunConfig& cfg) {
    // validate every profile before writing anything
    std::map<std::string, UserProfile> profiles;
    for (const auto& [user, path] : cfg.profiles) {
        UserProfile p = load_profile(path.string());
        if (p.user != user) {
            config_error("profile file " + path.string() + " declares user '" + p.user +
                         "', expected '" + user + "'");
        }
        profiles.emplace(user, std::move(p));
    }
    for (const auto& [user, profile] : profiles) {
        EventTrace trace = generate_trace(profile, cfg.days, cfg.seed);
        fs::create_directories(cfg.out / "traces");
        save_trace(trace, trace_path(cfg, user).string());
        save_contact_book(profile_book(profile), book_path(cfg, user).string());
        std::cerr << "synth: " << user << ": " << trace.events.size() << " events over "
                  << cfg.days << " days\n";
    }
}

void run_fit(const RunConfig& cfg) {
    auto traces = load_traces(cfg);
    auto books = load_books(cfg);
    std::vector<std::string> failures;
    for (const auto& [user, trace] : traces) {
        try {
            // fit on the chronological training share; the tail stays held out
            auto [train_part, eval_part] = time_split(trace, cfg.train.split_fraction);
            if (eval_part.empty()) {
                std::cerr << "fit: warning: evaluation split for '" << user << "' has no events\n";
            }
            UserModel m = fit_model(train_part, books.at(user), cfg.fit);
            fs::create_directories((cfg.out / "models"));
            save_model(m, model_path(cfg, user).string());
            std::cerr << "fit: " << user << ": R=" << m.feature_count
                      << (m.has_location ? " (with location)" : " (no location)") << "\n";
        } catch (const std::exception& e) {
            failures.push_back(user + ": " + e.what());
        }
    }
    if (!failures.empty()) {
        std::string msg = "fit failed for:";
        for (const auto& f : failures) msg += "\n  " + f;
        throw std::runtime_error(msg);
    }
}

void run_wedge(const RunConfig& cfg) {
    auto traces = load_traces(cfg);
    std::vector<EventTrace> users;
    for (auto& [_, t] : traces) users.push_back(t);
    auto suite = generate_attack_suite(users, cfg.attack_count, cfg.seed, cfg.colocate_attacker);

    fs::create_directories(cfg.out / "attacks");
    std::ofstream manifest = open_out(cfg.out / "attacks" / "manifest.txt");
    for (std::size_t k = 0; k < suite.size(); ++k) {
        std::string name = "atk_" + std::to_string(k) + ".trace";
        save_trace(suite[k].trace, (cfg.out / "attacks" / name).string());
        manifest << "victim=" << suite[k].victim << " attacker=" << suite[k].attacker
                 << " wedge_time=" << suite[k].wedge_time << " path=" << name << "\n";
    }
    std::cerr << "wedge: wrote " << suite.size() << " attack traces\n";
}

void run_train(const RunConfig& cfg) {
    auto traces = load_traces(cfg);
    auto books = load_books(cfg);
    auto suite = load_suite(cfg);
    for (const auto& [user, trace] : traces) {
        UserModel m = load_model(model_path(cfg, user).string());
        fs::create_directories(cfg.out / "train");
        std::ofstream log = open_out(cfg.out / "train" / (user + ".log"));
        if (m.combiner == Combiner::weighted_sum) {
            TrainResult r = train_weights(m, trace, books.at(user), suite.attacks, cfg.train);
            m.weights = r.weights;
            m.threshold = r.threshold;
            write_search_log(r, log);
        } else {
            // product combiner: no weights to train, calibrate the threshold only
            auto [train_part, eval_part] = time_split(trace, cfg.train.split_fraction);
            auto timeline = score_timeline(m, train_part, books.at(user), cfg.train.tick_seconds);
            m.threshold = calibrate_threshold(timeline, cfg.train.target_reauth_rate);
            log << "# product combiner: threshold calibration only\n";
            log << "threshold=" << kv::format_double(m.threshold) << "\n";
            log << "train_reauth_rate=" << kv::format_double(prompts_per_day(timeline, m.threshold))
                << "\n";
        }
        save_model(m, model_path(cfg, user).string());
        std::cerr << "train: " << user << ": threshold=" << m.threshold << "\n";
    }
}

void run_score(const RunConfig& cfg, const fs::path& trace_file, const fs::path& model_file,
               const std::string& out_base) {
    UserModel m = load_model(model_file.string());
    EventTrace trace = load_trace(trace_file.string());
    ContactBook book = load_contact_book(book_path(cfg, m.user).string());
    auto timeline = score_timeline(m, trace, book, cfg.train.tick_seconds);
    fs::path base = cfg.out / "score" / out_base;
    {
        auto f = open_out(base.string() + ".timeline.txt");
        write_timeline(timeline, f);
    }
    {
        auto f = open_out(base.string() + ".plot.txt");
        write_plot_data(timeline, m.cfg.utc_offset, f);
    }
    std::cerr << "score: " << timeline.size() << " samples -> " << base.string() << ".*\n";
}

void run_eval(const RunConfig& cfg) {
    auto traces = load_traces(cfg);
    auto books = load_books(cfg);
    auto suite = load_suite(cfg);
    std::map<std::string, UserModel> models;
    std::map<std::string, EventTrace> eval_traces;
    for (const auto& [user, trace] : traces) {
        models.emplace(user, load_model(model_path(cfg, user).string()));
        // metrics go over the held-out tail only
        eval_traces.emplace(user, time_split(trace, cfg.train.split_fraction).second);
    }
    MetricsReport r = compute_metrics(models, eval_traces, books, suite.attacks, cfg.train);
    auto f = open_out(cfg.out / "eval" / "report.txt");
    write_report(r, f);
    std::cerr << "eval: report written to " << (cfg.out / "eval" / "report.txt").string() << "\n";
}

}  // namespace iauth
