#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rbm {

/// Sectioned key-value config text (INI style):
///   [section]
///   key = value      ; '#' and ';' start comments
/// Keys and section names are case-sensitive identifiers. Values keep inner
/// whitespace, outer whitespace trimmed. Parse errors carry line numbers.
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_text(const std::string& text, const std::string& origin);

    /// Applies "section.key=value"; creates the section/key as needed.
    void apply_override(const std::string& spec);
    void set(const std::string& section, const std::string& key, const std::string& value);

    bool has(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;

    /// Getters throw ConfigError naming section.key (and the defining line
    /// when known) on missing keys or unparseable values.
    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    long get_long(const std::string& section, const std::string& key) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    /// Comma-separated list of reals.
    std::vector<double> get_double_list(const std::string& section,
                                        const std::string& key) const;

    /// Keys of a section in sorted order (empty when the section is absent).
    std::vector<std::string> keys(const std::string& section) const;

    /// Sorted "section.key = value" lines; the digest input.
    std::string canonical_text() const;
    /// FNV-1a 64-bit hash of canonical_text(), lowercase hex.
    std::string digest() const;

private:
    struct Value {
        std::string text;
        int line = 0; // 0 when injected by an override
    };
    std::map<std::string, std::map<std::string, Value>> sections_;
    std::string origin_;

    const Value* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void missing(const std::string& section, const std::string& key) const;
    [[noreturn]] void bad_value(const std::string& section, const std::string& key,
                                const Value& v, const std::string& want) const;
};

} // namespace rbm
