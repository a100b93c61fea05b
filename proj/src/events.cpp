#include "iauth/events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "iauth/kv.hpp"

namespace iauth {

namespace {
constexpr double kEarthRadius = 6371000.0;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

[[noreturn]] void fail_line(int lineno, const std::string& what) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": " + what);
}
}  // namespace

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::call: return "call";
        case EventKind::sms: return "sms";
        case EventKind::location_ping: return "location_ping";
    }
    return "?";
}

const char* to_string(Direction d) {
    switch (d) {
        case Direction::incoming: return "incoming";
        case Direction::outgoing: return "outgoing";
        case Direction::none: return "none";
    }
    return "?";
}

double distance(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

Point project(const GeoRef& ref, double lat, double lon) {
    Point p;
    p.x = (lon - ref.lon) * kDegToRad * kEarthRadius * std::cos(ref.lat * kDegToRad);
    p.y = (lat - ref.lat) * kDegToRad * kEarthRadius;
    return p;
}

std::int64_t EventTrace::span_start() const {
    if (events.empty()) throw std::logic_error("span of empty trace is undefined");
    return events.front().ts;
}

std::int64_t EventTrace::span_end() const {
    if (events.empty()) throw std::logic_error("span of empty trace is undefined");
    return events.back().ts;
}

CallClass classify_call(const Event& e, const ContactBook& book) {
    if (!e.is_classified()) {
        throw std::invalid_argument("classify_call: location_ping has no call class");
    }
    return book.contains(e.party) ? CallClass::good : CallClass::bad;
}

std::pair<EventTrace, EventTrace> split_at(const EventTrace& trace, std::int64_t t) {
    EventTrace before, after;
    before.user = after.user = trace.user;
    before.ref = after.ref = trace.ref;
    for (const Event& e : trace.events) {
        (e.ts < t ? before : after).events.push_back(e);
    }
    return {std::move(before), std::move(after)};
}

namespace {

EventKind parse_kind(const std::string& s, int lineno) {
    if (s == "call") return EventKind::call;
    if (s == "sms") return EventKind::sms;
    if (s == "location_ping") return EventKind::location_ping;
    fail_line(lineno, "unknown kind '" + s + "'");
}

Direction parse_dir(const std::string& s, int lineno) {
    if (s == "incoming") return Direction::incoming;
    if (s == "outgoing") return Direction::outgoing;
    if (s == "none") return Direction::none;
    fail_line(lineno, "unknown dir '" + s + "'");
}

}  // namespace

EventTrace parse_trace(std::istream& in) {
    EventTrace trace;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    std::unordered_set<std::string> seen_ids;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = kv::parse_line(line, lineno);

        if (!have_header) {
            auto it = fields.find("user");
            if (it == fields.end()) fail_line(lineno, "header record must carry 'user'");
            trace.user = it->second;
            if (fields.count("ref_lat") || fields.count("ref_lon")) {
                if (!fields.count("ref_lat") || !fields.count("ref_lon")) {
                    fail_line(lineno, "projection reference needs both ref_lat and ref_lon");
                }
                trace.ref.lat = kv::parse_double(fields.at("ref_lat"), "ref_lat");
                trace.ref.lon = kv::parse_double(fields.at("ref_lon"), "ref_lon");
                trace.ref.valid = true;
            }
            have_header = true;
            continue;
        }

        Event e;
        if (!fields.count("ts")) fail_line(lineno, "missing 'ts'");
        e.ts = kv::parse_int(fields.at("ts"), "ts");
        if (e.ts < 0) fail_line(lineno, "negative timestamp");
        if (!fields.count("kind")) fail_line(lineno, "missing 'kind'");
        e.kind = parse_kind(fields.at("kind"), lineno);
        e.dir = fields.count("dir") ? parse_dir(fields.at("dir"), lineno) : Direction::none;
        if (fields.count("party")) e.party = fields.at("party");
        if (!fields.count("id")) fail_line(lineno, "missing 'id'");
        e.id = fields.at("id");

        if (fields.count("x") || fields.count("y")) {
            if (!fields.count("x") || !fields.count("y")) fail_line(lineno, "x and y must come together");
            e.loc = Point{kv::parse_double(fields.at("x"), "x"),
                          kv::parse_double(fields.at("y"), "y")};
        } else if (fields.count("lat") || fields.count("lon")) {
            if (!fields.count("lat") || !fields.count("lon")) fail_line(lineno, "lat and lon must come together");
            if (!trace.ref.valid) fail_line(lineno, "lat/lon record but header declares no projection reference");
            e.loc = project(trace.ref,
                            kv::parse_double(fields.at("lat"), "lat"),
                            kv::parse_double(fields.at("lon"), "lon"));
        }

        if (e.kind == EventKind::location_ping) {
            if (!e.loc) fail_line(lineno, "location_ping without coordinates");
            if (!e.party.empty()) fail_line(lineno, "location_ping must have empty party");
            if (e.dir != Direction::none) fail_line(lineno, "location_ping must have dir=none");
        } else {
            if (e.dir == Direction::none) fail_line(lineno, "call/sms record needs dir=incoming|outgoing");
        }

        if (!seen_ids.insert(e.id).second) fail_line(lineno, "duplicate event id '" + e.id + "'");
        trace.events.push_back(std::move(e));
    }

    if (!have_header && trace.events.empty() && !in.bad()) {
        // empty source: zero-event trace, span undefined
        return trace;
    }
    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const Event& a, const Event& b) { return a.ts < b.ts; });
    return trace;
}

void serialize_trace(const EventTrace& trace, std::ostream& out) {
    out << "user=" << trace.user;
    if (trace.ref.valid) {
        out << " ref_lat=" << kv::format_double(trace.ref.lat)
            << " ref_lon=" << kv::format_double(trace.ref.lon);
    }
    out << "\n";
    for (const Event& e : trace.events) {
        out << "ts=" << e.ts << " kind=" << to_string(e.kind);
        if (e.kind != EventKind::location_ping) {
            out << " dir=" << to_string(e.dir) << " party=" << e.party;
        }
        if (e.loc) {
            out << " x=" << kv::format_double(e.loc->x)
                << " y=" << kv::format_double(e.loc->y);
        }
        out << " id=" << e.id << "\n";
    }
}

EventTrace load_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open trace file: " + path);
    return parse_trace(f);
}

void save_trace(const EventTrace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write trace file: " + path);
    serialize_trace(trace, f);
}

ContactBook parse_contact_book(std::istream& in) {
    ContactBook book;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line[0] == '#') continue;
        if (!have_header) {
            if (line.rfind("owner=", 0) != 0) fail_line(lineno, "contact book header must be 'owner=<id>'");
            book.owner = line.substr(6);
            have_header = true;
            continue;
        }
        book.entries.insert(line);
    }
    return book;
}

void serialize_contact_book(const ContactBook& book, std::ostream& out) {
    out << "owner=" << book.owner << "\n";
    for (const auto& p : book.entries) out << p << "\n";
}

ContactBook load_contact_book(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open contact book: " + path);
    return parse_contact_book(f);
}

void save_contact_book(const ContactBook& book, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write contact book: " + path);
    serialize_contact_book(book, f);
}

}  // namespace iauth
