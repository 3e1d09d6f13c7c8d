#pragma once

// Sectioned key/value text shared by profile, platform, plan, scenario and
// experiment files:
//
//   # comment
//   [function]
//   app_id = CG_A
//   x86_ms = 2182
//
// A section header starts a new record. Keys may repeat inside a record.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xartrek::kv {

struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

class Record {
public:
    Record(std::string section, std::size_t line) : section_(std::move(section)), line_(line) {}

    [[nodiscard]] const std::string& section() const noexcept { return section_; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }

    void add(std::string key, std::string value, std::size_t line);

    [[nodiscard]] const Entry* find(std::string_view key) const;
    [[nodiscard]] std::vector<const Entry*> find_all(std::string_view key) const;
    [[nodiscard]] bool has(std::string_view key) const { return find(key) != nullptr; }

    /// Throws ParseError when the key is missing.
    [[nodiscard]] const std::string& str(std::string_view key) const;
    [[nodiscard]] std::string str_or(std::string_view key, std::string fallback) const;
    [[nodiscard]] double number(std::string_view key) const;
    [[nodiscard]] std::optional<double> number_opt(std::string_view key) const;
    [[nodiscard]] std::int64_t integer(std::string_view key) const;
    [[nodiscard]] std::optional<std::int64_t> integer_opt(std::string_view key) const;

    /// Rejects keys outside `allowed`, so typos surface as errors.
    void expect_keys(std::initializer_list<std::string_view> allowed) const;

private:
    std::string section_;
    std::size_t line_;
    std::vector<Entry> entries_;
};

[[nodiscard]] std::vector<Record> parse(std::istream& in);
[[nodiscard]] std::vector<Record> parse_string(std::string_view text);
[[nodiscard]] std::vector<Record> parse_file(const std::string& path);

// Strict scalar parsers; `line` is only used for error messages.
[[nodiscard]] double to_number(std::string_view text, std::size_t line);
[[nodiscard]] std::int64_t to_integer(std::string_view text, std::size_t line);
[[nodiscard]] bool to_bool(std::string_view text, std::size_t line);
[[nodiscard]] std::vector<std::string> split_list(std::string_view text);

/// Shortest decimal form that parses back to the same double.
[[nodiscard]] std::string format_number(double value);

} // namespace xartrek::kv
