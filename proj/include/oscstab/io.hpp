#pragma once

#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oscstab {

/// Plain-text `key = value` configuration with optional `[section]` headers.
/// Lines starting with `#` are comments. Entries outside any section belong
/// to the unnamed section "".
class KeyValueConfig {
public:
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;
    };

    static KeyValueConfig parse(std::istream& in, std::string origin = "<config>");
    static KeyValueConfig parse_string(std::string_view text, std::string origin = "<config>");
    static KeyValueConfig load(const std::filesystem::path& file);

    bool has_section(std::string_view name) const;
    std::vector<std::string> sections() const;
    const std::vector<Entry>& entries(std::string_view section) const;

    std::optional<std::string> get(std::string_view section, std::string_view key) const;
    double number(std::string_view section, std::string_view key, double fallback) const;
    std::optional<double> number(std::string_view section, std::string_view key) const;
    std::vector<double> numbers(std::string_view section, std::string_view key) const;

    /// Throws ConfigError naming the first key of `section` not in `known`.
    void require_known(std::string_view section, std::initializer_list<std::string_view> known) const;
    /// Throws ConfigError naming the first section not in `known`.
    void require_sections(std::initializer_list<std::string_view> known) const;

    void set(std::string_view section, std::string_view key, std::string value);
    void write(std::ostream& out) const;

    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
    std::vector<std::string> order_;
    std::map<std::string, std::vector<Entry>, std::less<>> sections_;
};

double parse_number(std::string_view text, std::string_view what);
std::vector<double> parse_number_list(std::string_view text, std::string_view what);

/// Minimal CSV emitter; numbers are written with 12 significant digits.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> header);
    void row(std::initializer_list<double> values);
    void row(const std::vector<double>& values);
    std::size_t columns() const { return columns_; }

private:
    std::ostream& out_;
    std::size_t columns_;
};

}  // namespace oscstab
