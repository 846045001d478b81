#pragma once

// Plain-text `key = value` files: strategy definitions, scorer rule tables
// and phase schedules all use this format. '#' starts a comment.

#include "objdyn/core.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace objdyn::config {

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in, const std::string& origin = "<input>") {
    KeyValues kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::ParseError, origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        auto key = trim(std::string_view(body).substr(0, eq));
        auto value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw Error(ErrorKind::ParseError, origin + ":" + std::to_string(line_no) + ": empty key");
        if (kv.count(key)) {
            throw Error(ErrorKind::ParseError, origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        kv.emplace(std::move(key), std::move(value));
    }
    return kv;
}

inline KeyValues load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    return parse_key_values(in, path);
}

inline double parse_double(std::string_view text, const std::string& what) {
    const auto s = trim(text);
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc{} || ptr != last) {
        throw Error(ErrorKind::ParseError, what + ": '" + s + "' is not a number");
    }
    return v;
}

inline long long parse_integer(std::string_view text, const std::string& what) {
    const auto s = trim(text);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(ErrorKind::ParseError, what + ": '" + s + "' is not an integer");
    }
    return v;
}

/// Splits on commas and/or whitespace.
inline std::vector<double> parse_list(std::string_view text, const std::string& what) {
    std::vector<double> out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            out.push_back(parse_double(token, what));
            token.clear();
        }
    };
    for (char c : text) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            token.push_back(c);
        }
    }
    flush();
    return out;
}

inline Vector parse_vector(std::string_view text, const std::string& what) {
    const auto values = parse_list(text, what);
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

/// Rows separated by ';'. A single scalar v with `dimension` > 0 yields v * I.
inline Matrix parse_matrix(std::string_view text, const std::string& what, std::size_t dimension = 0) {
    std::vector<std::vector<double>> rows;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto semi = text.find(';', start);
        const auto piece = text.substr(start, semi == std::string_view::npos ? std::string_view::npos : semi - start);
        auto row = parse_list(piece, what);
        if (!row.empty()) rows.push_back(std::move(row));
        if (semi == std::string_view::npos) break;
        start = semi + 1;
    }
    if (rows.size() == 1 && rows[0].size() == 1 && dimension > 0) {
        const auto n = static_cast<Eigen::Index>(dimension);
        return rows[0][0] * Matrix::Identity(n, n);
    }
    if (rows.empty()) throw Error(ErrorKind::ParseError, what + ": empty matrix");
    const auto cols = rows.front().size();
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw Error(ErrorKind::ParseError, what + ": ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

inline const std::string& require(const KeyValues& kv, const std::string& key, const std::string& origin) {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorKind::ParseError, origin + ": missing key '" + key + "'");
    return it->second;
}

}  // namespace objdyn::config
