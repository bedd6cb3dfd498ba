#pragma once

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace tricomi {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.4.0";

// Shortest decimal that parses back to the same double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw DomainError("not a number: '" + s + "'");
    return v;
}

// ---- CSV ----

using CsvCell = std::variant<std::string, double, long long>;

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<CsvCell>> rows;

    void add(std::vector<CsvCell> row) {
        if (row.size() != header.size()) throw ShapeError("CsvTable: row width does not match header");
        rows.push_back(std::move(row));
    }

    std::string str() const {
        std::string out;
        auto line = [&](const auto& cells, auto&& fmt) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += fmt(cells[i]);
            }
            out += "\r\n";
        };
        line(header, [](const std::string& s) { return csv_escape(s); });
        for (const auto& r : rows)
            line(r, [](const CsvCell& c) {
                if (auto d = std::get_if<double>(&c)) return format_number(*d);
                if (auto i = std::get_if<long long>(&c)) return std::to_string(*i);
                return csv_escape(std::get<std::string>(c));
            });
        return out;
    }
};

// Parses RFC-4180 text into rows of raw fields.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw DomainError("parse_csv: unterminated quoted field");
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- key=value configuration ----

// Lines are `key = value`, `[section]` headers prefix later keys with
// `section.`, and `#` or `;` start a comment line.
class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "<config>") {
        Config c;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = trim(line);
            if (s.empty() || s[0] == '#' || s[0] == ';') continue;
            auto fail = [&](const std::string& why) {
                throw DomainError(origin + ":" + std::to_string(lineno) + ": " + why);
            };
            if (s.front() == '[') {
                if (s.back() != ']') fail("unterminated section header");
                section = trim(s.substr(1, s.size() - 2));
                if (section.empty()) fail("empty section name");
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos) fail("expected key = value");
            std::string key = trim(s.substr(0, eq)), val = trim(s.substr(eq + 1));
            if (key.empty()) fail("empty key");
            if (!section.empty()) key = section + "." + key;
            if (c.values_.count(key)) fail("duplicate key '" + key + "'");
            c.values_[key] = val;
            c.order_.push_back(key);
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw DomainError("cannot read config file '" + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, const std::string& v) {
        if (!values_.count(key)) order_.push_back(key);
        values_[key] = v;
    }

    std::string get_string(const std::string& key, const std::string& def) const {
        used_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? def : it->second;
    }
    double get_double(const std::string& key, double def) const {
        used_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        try {
            return parse_number(it->second);
        } catch (const DomainError&) {
            throw DomainError("config key '" + key + "': expected a number, got '" + it->second + "'");
        }
    }
    long long get_int(const std::string& key, long long def) const {
        double v = get_double(key, double(def));
        if (v != std::floor(v) || std::abs(v) > 9e15)
            throw DomainError("config key '" + key + "': expected an integer");
        return (long long)v;
    }
    bool get_bool(const std::string& key, bool def) const {
        std::string v = get_string(key, def ? "true" : "false");
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw DomainError("config key '" + key + "': expected true or false");
    }
    std::vector<double> get_list(const std::string& key, std::vector<double> def) const {
        used_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item)));
        return out;
    }

    // Keys that were present but never read, in file order.
    std::vector<std::string> unused() const {
        std::vector<std::string> out;
        for (const auto& k : order_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    Json to_json() const {
        Json j = Json::object();
        for (const auto& k : order_) j[k] = values_.at(k);
        return j;
    }

private:
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
    mutable std::set<std::string> used_;
};

// ---- hashing and manifests ----

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct ManifestEntry {
    std::string path;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    std::vector<std::string> command_line;
    Json configuration = Json::object();
    std::uint64_t seed = 0;
    int threads = 1;
    std::string tool_version = kToolVersion;
    std::string started, finished;
    std::string status = "ok";  // ok, numerical_failure
    int exit_code = 0;
    std::string message;
    std::vector<ManifestEntry> outputs;

    // Writes the bytes and records their hash.
    void write_output(const std::string& path, const std::string& bytes) {
        auto parent = std::filesystem::path(path).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write '" + path + "'");
        f.write(bytes.data(), std::streamsize(bytes.size()));
        f.close();
        if (!f) throw std::runtime_error("write failed for '" + path + "'");
        outputs.push_back({path, sha256_hex(bytes), bytes.size()});
    }

    Json to_json() const {
        Json j;
        j["tool_version"] = tool_version;
        j["command_line"] = command_line;
        j["configuration"] = configuration;
        j["seed"] = seed;
        j["threads"] = threads;
        j["started"] = started;
        j["finished"] = finished;
        j["status"] = status;
        j["exit_code"] = exit_code;
        if (!message.empty()) j["message"] = message;
        Json outs = Json::array();
        for (const auto& o : outputs) outs.push_back(Json{{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
        j["outputs"] = outs;
        return j;
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write manifest '" + path + "'");
        f << to_json().dump(2) << '\n';
    }
};

// Re-hashes every listed output; returns the paths whose content no longer matches.
inline std::vector<std::string> verify_manifest(const Json& manifest) {
    std::vector<std::string> bad;
    for (const auto& o : manifest.at("outputs")) {
        std::string path = o.at("path");
        try {
            if (sha256_hex(read_file(path)) != o.at("sha256").get<std::string>()) bad.push_back(path);
        } catch (const std::runtime_error&) {
            bad.push_back(path);
        }
    }
    return bad;
}

}  // namespace tricomi
