#include "oscstab/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "oscstab/errors.hpp"

namespace oscstab {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string where(const std::string& origin, int line)
{
    return origin + ":" + std::to_string(line) + ": ";
}

}  // namespace

double parse_number(std::string_view text, std::string_view what)
{
    const std::string s(trim(text));
    if (s.empty()) throw ConfigError(std::string(what) + ": empty value");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ConfigError(std::string(what) + ": not a finite number: '" + s + "'");
    }
    return v;
}

std::vector<double> parse_number_list(std::string_view text, std::string_view what)
{
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto piece = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        out.push_back(parse_number(piece, what));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

KeyValueConfig KeyValueConfig::parse(std::istream& in, std::string origin)
{
    KeyValueConfig cfg;
    cfg.origin_ = std::move(origin);
    cfg.order_.push_back("");
    cfg.sections_[""];
    std::string current;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where(cfg.origin_, line_no) + "unterminated section header");
            current = std::string(trim(line.substr(1, line.size() - 2)));
            if (current.empty()) throw ConfigError(where(cfg.origin_, line_no) + "empty section name");
            if (!cfg.sections_.count(current)) {
                cfg.order_.push_back(current);
                cfg.sections_[current];
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where(cfg.origin_, line_no) + "expected key = value");
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (const auto hash = value.find(" #"); hash != std::string::npos) value = std::string(trim(value.substr(0, hash)));
        if (key.empty()) throw ConfigError(where(cfg.origin_, line_no) + "empty key");
        auto& section = cfg.sections_[current];
        const bool dup = std::any_of(section.begin(), section.end(), [&](const Entry& e) { return e.key == key; });
        if (dup) throw ConfigError(where(cfg.origin_, line_no) + "duplicate key '" + key + "'");
        section.push_back({std::move(key), std::move(value), line_no});
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::parse_string(std::string_view text, std::string origin)
{
    std::istringstream in{std::string(text)};
    return parse(in, std::move(origin));
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file '" + file.string() + "'");
    return parse(in, file.string());
}

bool KeyValueConfig::has_section(std::string_view name) const
{
    return sections_.find(name) != sections_.end();
}

std::vector<std::string> KeyValueConfig::sections() const { return order_; }

const std::vector<KeyValueConfig::Entry>& KeyValueConfig::entries(std::string_view section) const
{
    static const std::vector<Entry> none;
    const auto it = sections_.find(section);
    return it == sections_.end() ? none : it->second;
}

std::optional<std::string> KeyValueConfig::get(std::string_view section, std::string_view key) const
{
    for (const auto& e : entries(section)) {
        if (e.key == key) return e.value;
    }
    return std::nullopt;
}

std::optional<double> KeyValueConfig::number(std::string_view section, std::string_view key) const
{
    const auto v = get(section, key);
    if (!v) return std::nullopt;
    std::string what = origin_ + ": ";
    if (!section.empty()) what += "[" + std::string(section) + "] ";
    what += std::string(key);
    return parse_number(*v, what);
}

double KeyValueConfig::number(std::string_view section, std::string_view key, double fallback) const
{
    return number(section, key).value_or(fallback);
}

std::vector<double> KeyValueConfig::numbers(std::string_view section, std::string_view key) const
{
    const auto v = get(section, key);
    if (!v) return {};
    return parse_number_list(*v, origin_ + ": " + std::string(key));
}

void KeyValueConfig::require_known(std::string_view section, std::initializer_list<std::string_view> known) const
{
    for (const auto& e : entries(section)) {
        if (std::find(known.begin(), known.end(), e.key) == known.end()) {
            std::string sec = section.empty() ? std::string("top level") : "[" + std::string(section) + "]";
            throw ConfigError(where(origin_, e.line) + "unknown key '" + e.key + "' in " + sec);
        }
    }
}

void KeyValueConfig::require_sections(std::initializer_list<std::string_view> known) const
{
    for (const auto& name : order_) {
        if (name.empty()) continue;
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw ConfigError(origin_ + ": unknown section [" + name + "]");
        }
    }
}

void KeyValueConfig::set(std::string_view section, std::string_view key, std::string value)
{
    auto it = sections_.find(section);
    if (it == sections_.end()) {
        order_.emplace_back(section);
        it = sections_.emplace(std::string(section), std::vector<Entry>{}).first;
    }
    for (auto& e : it->second) {
        if (e.key == key) {
            e.value = std::move(value);
            return;
        }
    }
    it->second.push_back({std::string(key), std::move(value), 0});
}

void KeyValueConfig::write(std::ostream& out) const
{
    for (const auto& name : order_) {
        const auto& list = entries(name);
        if (!name.empty()) out << "\n[" << name << "]\n";
        for (const auto& e : list) out << e.key << " = " << e.value << "\n";
    }
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), columns_(header.size())
{
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values)
{
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", values[i]);
        out_ << (i ? "," : "") << buf;
    }
    out_ << "\n";
}

void CsvWriter::row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

}  // namespace oscstab
