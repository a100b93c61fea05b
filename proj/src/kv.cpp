#include "iauth/kv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace iauth::kv {

std::map<std::string, std::string> parse_line(const std::string& line, int lineno) {
    std::map<std::string, std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw std::runtime_error("line " + std::to_string(lineno) +
                                     ": malformed token '" + tok + "' (expected key=value)");
        }
        std::string key = tok.substr(0, eq);
        if (!out.emplace(key, tok.substr(eq + 1)).second) {
            throw std::runtime_error("line " + std::to_string(lineno) +
                                     ": duplicate field '" + key + "'");
        }
    }
    return out;
}

std::map<std::string, std::string> parse_file(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw std::runtime_error("line " + std::to_string(lineno) +
                                     ": expected key=value, got '" + line + "'");
        }
        out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
        throw std::runtime_error("field '" + key + "': bad number '" + s + "'");
    }
    return v;
}

std::int64_t parse_int(const std::string& s, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
        throw std::runtime_error("field '" + key + "': bad integer '" + s + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace iauth::kv
