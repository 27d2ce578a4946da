#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lfmm {

/// Error type for all structured-text parsing (config, CSV, sample stream).
/// Carries the offending location so CLI users can fix their files.
struct ParseError : std::exception {
    std::string message;
    explicit ParseError(std::string msg) : message(std::move(msg)) {}
    const char* what() const noexcept override { return message.c_str(); }
};

/// File-system failures (open/write), as opposed to malformed content.
struct IoError : ParseError {
    explicit IoError(std::string msg) : ParseError(std::move(msg)) {}
};

/// Flat key/value configuration: one `key = value` per line, `#` comments,
/// blank lines ignored. Unknown keys are rejected by name so typos surface.
class Config {
public:
    Config() = default;

    /// Parse config text. Throws ParseError with line number on bad syntax,
    /// duplicate keys, or keys absent from the known-key catalog.
    static Config parse(const std::string& text);
    static Config parse_file(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated integer list.
    std::vector<int> get_int_list(const std::string& key,
                                  const std::vector<int>& fallback) const;

    /// Set/override a value programmatically (used for CLI flag overrides).
    void set(const std::string& key, const std::string& value);

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Every key the tools understand; parse() rejects anything else.
    static const std::set<std::string>& known_keys();

private:
    std::map<std::string, std::string> values_;
};

}  // namespace lfmm
