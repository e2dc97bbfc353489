#include "cpsw/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace cpsw::config {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

std::string Config::get(const std::string& key,
                        const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string Config::require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        fail(ErrorCode::config_invalid, "missing config key: " + key);
    return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        fail(ErrorCode::config_invalid,
             "config key " + key + " is not a number: " + it->second);
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        fail(ErrorCode::config_invalid,
             "config key " + key + " is not an integer: " + it->second);
    }
}

std::uint64_t Config::get_u64(const std::string& key,
                              std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        fail(ErrorCode::config_invalid,
             "config key " + key + " is not an integer: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorCode::config_invalid,
         "config key " + key + " is not a boolean: " + it->second);
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return {};
    return split_list(it->second);
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_list(key)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            fail(ErrorCode::config_invalid,
                 "config key " + key + " has a non-numeric item: " + item);
        }
    }
    return out;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(value);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

Config parse_config_text(const std::string& text) {
    std::map<std::string, std::string> values;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(ErrorCode::config_invalid,
                     "line " + std::to_string(lineno) + ": unclosed section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::config_invalid,
                 "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            fail(ErrorCode::config_invalid,
                 "line " + std::to_string(lineno) + ": empty key");
        values[section.empty() ? key : section + "." + key] = value;
    }
    return Config(std::move(values));
}

Config parse_config_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorCode::config_invalid,
             std::string("bad json config: ") + e.what());
    }
    std::map<std::string, std::string> values;
    const std::function<void(const nlohmann::json&, const std::string&)>
        walk = [&](const nlohmann::json& node, const std::string& prefix) {
            for (const auto& [key, value] : node.items()) {
                const std::string full =
                    prefix.empty() ? key : prefix + "." + key;
                if (value.is_object()) {
                    walk(value, full);
                } else if (value.is_array()) {
                    std::string joined;
                    for (const auto& item : value) {
                        if (!joined.empty()) joined += ",";
                        joined += item.is_string()
                                      ? item.get<std::string>()
                                      : item.dump();
                    }
                    values[full] = joined;
                } else if (value.is_string()) {
                    values[full] = value.get<std::string>();
                } else {
                    values[full] = value.dump();
                }
            }
        };
    if (!j.is_object())
        fail(ErrorCode::config_invalid, "json config must be an object");
    walk(j, "");
    return Config(std::move(values));
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::file_not_found, "cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
        return parse_config_json(buf.str());
    return parse_config_text(buf.str());
}

} // namespace cpsw::config
