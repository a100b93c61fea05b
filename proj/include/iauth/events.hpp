#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace iauth {

enum class EventKind { call, sms, location_ping };
enum class Direction { incoming, outgoing, none };

const char* to_string(EventKind k);
const char* to_string(Direction d);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double distance(const Point& a, const Point& b);

/// One timestamped behavioral observation: a call, an SMS, or a location fix.
struct Event {
    std::int64_t ts = 0;               // UTC seconds since epoch
    EventKind kind = EventKind::call;
    Direction dir = Direction::none;   // none only for location_ping
    std::string party;                 // opaque counterparty id, empty for pings
    std::optional<Point> loc;          // planar meters, local tangent plane
    std::string id;                    // unique within a trace

    bool is_classified() const { return kind != EventKind::location_ping; }
};

struct ContactBook {
    std::string owner;
    std::set<std::string> entries;

    bool contains(const std::string& party) const { return entries.count(party) != 0; }
};

enum class CallClass { good, bad };

/// Reference point for projecting lat/lon input onto local planar meters.
struct GeoRef {
    double lat = 0.0;
    double lon = 0.0;
    bool valid = false;
};

Point project(const GeoRef& ref, double lat, double lon);

struct EventTrace {
    std::string user;
    std::vector<Event> events;   // non-decreasing by ts
    GeoRef ref;

    bool empty() const { return events.empty(); }
    std::int64_t span_start() const;
    std::int64_t span_end() const;
};

CallClass classify_call(const Event& e, const ContactBook& book);

/// Partition at t: first part < t, second part >= t (the suffix owns the boundary).
std::pair<EventTrace, EventTrace> split_at(const EventTrace& trace, std::int64_t t);

EventTrace parse_trace(std::istream& in);
void serialize_trace(const EventTrace& trace, std::ostream& out);
EventTrace load_trace(const std::string& path);
void save_trace(const EventTrace& trace, const std::string& path);

ContactBook parse_contact_book(std::istream& in);
void serialize_contact_book(const ContactBook& book, std::ostream& out);
ContactBook load_contact_book(const std::string& path);
void save_contact_book(const ContactBook& book, const std::string& path);

}  // namespace iauth
