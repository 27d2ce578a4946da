#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lfmm {

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

}  // namespace

const std::set<std::string>& Config::known_keys() {
    static const std::set<std::string> keys = {
        // prior hyperparameters
        "s_sigma", "a_sigma", "b_sigma",
        "a_alpha", "b_alpha", "a_alpha_star", "b_alpha_star",
        "a_phi", "b_phi",
        "anchor_mean", "anchor_var",
        "z_max",
        // sampler controls
        "iterations", "burnin", "thin",
        "hamming_radius", "mh_log_step",
        "seed", "chains", "random_effects", "progress",
        // synthetic-data generation
        "sim_num_subjects", "sim_num_trials", "sim_levels",
        "sim_sigma_eps_sq", "sim_sigma_ua_sq", "sim_sigma_us_sq",
    };
    return keys;
}

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) +
                             ": expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("config line " + std::to_string(lineno) + ": empty key");
        if (value.empty())
            throw ParseError("config line " + std::to_string(lineno) +
                             ": empty value for key '" + key + "'");
        if (!known_keys().count(key))
            throw ParseError("config line " + std::to_string(lineno) +
                             ": unknown key '" + key + "'");
        if (cfg.values_.count(key))
            throw ParseError("config line " + std::to_string(lineno) +
                             ": duplicate key '" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ParseError("config key '" + key + "': cannot parse '" + v + "' as a number");
    return out;
}

int Config::get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    int out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ParseError("config key '" + key + "': cannot parse '" + v + "' as an integer");
    return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ParseError("config key '" + key + "': cannot parse '" + v + "' as a boolean");
}

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<int> out;
    std::istringstream in(it->second);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok.empty())
            throw ParseError("config key '" + key + "': empty element in list");
        int v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
            throw ParseError("config key '" + key + "': cannot parse '" + tok +
                             "' as an integer");
        out.push_back(v);
    }
    if (out.empty())
        throw ParseError("config key '" + key + "': empty list");
    return out;
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

}  // namespace lfmm
