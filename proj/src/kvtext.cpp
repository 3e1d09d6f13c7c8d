#include "xartrek/kvtext.hpp"

#include "xartrek/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace xartrek::kv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace

void Record::add(std::string key, std::string value, std::size_t line) {
    entries_.push_back(Entry{std::move(key), std::move(value), line});
}

const Entry* Record::find(std::string_view key) const {
    for (const auto& e : entries_) {
        if (e.key == key) {
            return &e;
        }
    }
    return nullptr;
}

std::vector<const Entry*> Record::find_all(std::string_view key) const {
    std::vector<const Entry*> out;
    for (const auto& e : entries_) {
        if (e.key == key) {
            out.push_back(&e);
        }
    }
    return out;
}

const std::string& Record::str(std::string_view key) const {
    const Entry* e = find(key);
    if (e == nullptr) {
        throw ParseError("[" + section_ + "] is missing required key '" + std::string(key) + "'",
                         line_);
    }
    return e->value;
}

std::string Record::str_or(std::string_view key, std::string fallback) const {
    const Entry* e = find(key);
    return e ? e->value : std::move(fallback);
}

double Record::number(std::string_view key) const {
    const Entry* e = find(key);
    if (e == nullptr) {
        throw ParseError("[" + section_ + "] is missing required key '" + std::string(key) + "'",
                         line_);
    }
    return to_number(e->value, e->line);
}

std::optional<double> Record::number_opt(std::string_view key) const {
    const Entry* e = find(key);
    if (e == nullptr) {
        return std::nullopt;
    }
    return to_number(e->value, e->line);
}

std::int64_t Record::integer(std::string_view key) const {
    const Entry* e = find(key);
    if (e == nullptr) {
        throw ParseError("[" + section_ + "] is missing required key '" + std::string(key) + "'",
                         line_);
    }
    return to_integer(e->value, e->line);
}

std::optional<std::int64_t> Record::integer_opt(std::string_view key) const {
    const Entry* e = find(key);
    if (e == nullptr) {
        return std::nullopt;
    }
    return to_integer(e->value, e->line);
}

void Record::expect_keys(std::initializer_list<std::string_view> allowed) const {
    for (const auto& e : entries_) {
        if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) {
            throw ParseError("unknown key '" + e.key + "' in [" + section_ + "]", e.line);
        }
    }
}

std::vector<Record> parse(std::istream& in) {
    std::vector<Record> records;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ParseError("malformed section header", line_no);
            }
            auto name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) {
                throw ParseError("empty section name", line_no);
            }
            records.emplace_back(std::string(name), line_no);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("expected 'key = value'", line_no);
        }
        if (records.empty()) {
            throw ParseError("key/value pair outside of any [section]", line_no);
        }
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ParseError("empty key", line_no);
        }
        records.back().add(std::string(key), std::string(value), line_no);
    }
    return records;
}

std::vector<Record> parse_string(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse(in);
}

std::vector<Record> parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return parse(in);
}

double to_number(std::string_view text, std::size_t line) {
    text = trim(text);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("expected a number, got '" + std::string(text) + "'", line);
    }
    return value;
}

std::int64_t to_integer(std::string_view text, std::size_t line) {
    text = trim(text);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("expected an integer, got '" + std::string(text) + "'", line);
    }
    return value;
}

bool to_bool(std::string_view text, std::size_t line) {
    text = trim(text);
    if (text == "true" || text == "yes" || text == "1") {
        return true;
    }
    if (text == "false" || text == "no" || text == "0") {
        return false;
    }
    throw ParseError("expected a boolean, got '" + std::string(text) + "'", line);
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                              : comma - start));
        if (!piece.empty()) {
            out.emplace_back(piece);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ec == std::errc{} ? ptr : buf);
}

} // namespace xartrek::kv
