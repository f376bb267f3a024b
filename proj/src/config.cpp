#include "rbmlab/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rbmlab/errors.hpp"

namespace rbm {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_comment(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] == '#' || s[i] == ';') return s.substr(0, i);
    return s;
}

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

} // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_identifier(section))
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": invalid section name '" + section + "'");
            cfg.sections_[section]; // an empty section is detectable via has_section
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!valid_identifier(key))
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": invalid key '" +
                              key + "'");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": key '" + key + "' appears before any [section]");
        auto [it, inserted] = cfg.sections_[section].try_emplace(key, Value{value, line_no});
        if (!inserted)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                              section + "." + key + "' (first set at line " +
                              std::to_string(it->second.line) + ")");
    }
    return cfg;
}

void ConfigFile::apply_override(const std::string& spec) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + spec + "' must look like section.key=value");
    const std::string path = trim(spec.substr(0, eq));
    const std::string value = trim(spec.substr(eq + 1));
    const std::size_t dot = path.find('.');
    if (dot == std::string::npos)
        throw ConfigError("override '" + spec + "' must look like section.key=value");
    const std::string section = trim(path.substr(0, dot));
    const std::string key = trim(path.substr(dot + 1));
    if (!valid_identifier(section) || !valid_identifier(key))
        throw ConfigError("override '" + spec + "' has an invalid section or key name");
    set(section, key, value);
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& value) {
    sections_[section][key] = Value{value, 0};
}

const ConfigFile::Value* ConfigFile::find(const std::string& section,
                                          const std::string& key) const {
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return nullptr;
    const auto kit = sit->second.find(key);
    return kit == sit->second.end() ? nullptr : &kit->second;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

bool ConfigFile::has_section(const std::string& section) const {
    return sections_.count(section) > 0;
}

void ConfigFile::missing(const std::string& section, const std::string& key) const {
    throw ConfigError((origin_.empty() ? std::string("config") : origin_) +
                      ": missing required key '" + section + "." + key + "'");
}

void ConfigFile::bad_value(const std::string& section, const std::string& key, const Value& v,
                           const std::string& want) const {
    std::ostringstream msg;
    msg << (origin_.empty() ? std::string("config") : origin_);
    if (v.line > 0) msg << ":" << v.line;
    msg << ": key '" << section << "." << key << "' = '" << v.text << "' is not " << want;
    throw ConfigError(msg.str());
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) missing(section, key);
    return v->text;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    const Value* v = find(section, key);
    return v ? v->text : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) missing(section, key);
    try {
        std::size_t used = 0;
        const double parsed = std::stod(v->text, &used);
        if (used != v->text.size()) bad_value(section, key, *v, "a real number");
        return parsed;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        bad_value(section, key, *v, "a real number");
    }
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

long ConfigFile::get_long(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) missing(section, key);
    long parsed = 0;
    const char* begin = v->text.data();
    const char* end = begin + v->text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, parsed);
    if (ec != std::errc{} || ptr != end) bad_value(section, key, *v, "an integer");
    return parsed;
}

long ConfigFile::get_long(const std::string& section, const std::string& key,
                          long fallback) const {
    return has(section, key) ? get_long(section, key) : fallback;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (v->text == "true" || v->text == "1" || v->text == "yes" || v->text == "on") return true;
    if (v->text == "false" || v->text == "0" || v->text == "no" || v->text == "off")
        return false;
    bad_value(section, key, *v, "a boolean (true/false)");
}

std::vector<double> ConfigFile::get_double_list(const std::string& section,
                                                const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) missing(section, key);
    std::vector<double> out;
    std::istringstream in(v->text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string token = trim(item);
        if (token.empty()) bad_value(section, key, *v, "a comma-separated list of reals");
        try {
            std::size_t used = 0;
            out.push_back(std::stod(token, &used));
            if (used != token.size())
                bad_value(section, key, *v, "a comma-separated list of reals");
        } catch (const ConfigError&) {
            throw;
        } catch (...) {
            bad_value(section, key, *v, "a comma-separated list of reals");
        }
    }
    if (out.empty()) bad_value(section, key, *v, "a nonempty comma-separated list of reals");
    return out;
}

std::vector<std::string> ConfigFile::keys(const std::string& section) const {
    std::vector<std::string> out;
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return out;
    out.reserve(sit->second.size());
    for (const auto& [key, value] : sit->second) out.push_back(key);
    return out;
}

std::string ConfigFile::canonical_text() const {
    std::ostringstream out;
    for (const auto& [section, table] : sections_)
        for (const auto& [key, value] : table)
            out << section << "." << key << " = " << value.text << "\n";
    return out.str();
}

std::string ConfigFile::digest() const {
    const std::string text = canonical_text();
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

} // namespace rbm
