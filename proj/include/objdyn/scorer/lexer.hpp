#pragma once

// Lightweight lexer for indentation-delimited source (Python-style).
//
// Produces logical lines with string literals and comments masked out, plus
// a structural verdict: balanced brackets, terminated strings, and a
// consistent indentation stack. It never executes or imports anything.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace objdyn::scorer {

struct StringLiteral {
    std::string prefix;   // lower-cased, e.g. "f", "rb"
    std::string content;  // raw text between the quotes
    std::size_t offset;   // position of the `""` placeholder in the masked code
};

struct LogicalLine {
    std::size_t line_no = 0;  // 1-based physical line where it starts
    int indent = 0;
    std::string code;  // comments removed, each string literal replaced by ""
    std::vector<StringLiteral> strings;

    bool only_strings() const;
    bool opens_block() const { return !code.empty() && code.back() == ':'; }
    std::string keyword() const;
};

struct LexResult {
    std::vector<LogicalLine> lines;
    std::size_t nonblank_lines = 0;
    bool brackets_ok = true;
    bool strings_ok = true;
};

namespace detail {

inline bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline bool is_string_prefix(std::string_view p) {
    std::string lower(p);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    static constexpr std::string_view kPrefixes[] = {"r", "u", "b", "f", "br", "rb", "fr", "rf"};
    return std::find(std::begin(kPrefixes), std::end(kPrefixes), lower) != std::end(kPrefixes);
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace detail

inline bool LogicalLine::only_strings() const {
    if (strings.empty()) return false;
    for (char c : code) {
        if (c != '"' && !std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

/// First word of the statement, skipping a leading `async`.
inline std::string LogicalLine::keyword() const {
    std::size_t i = 0;
    auto word = [&] {
        while (i < code.size() && code[i] == ' ') ++i;
        const auto start = i;
        while (i < code.size() && detail::is_ident(code[i])) ++i;
        return code.substr(start, i - start);
    };
    auto w = word();
    if (w == "async") w = word();
    return w;
}

inline LexResult lex(std::string_view src) {
    LexResult out;
    const std::size_t n = src.size();
    std::size_t i = 0;
    std::size_t line_no = 1;
    std::vector<char> brackets;
    LogicalLine cur;
    bool in_line = false;

    {
        std::size_t start = 0;
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == n || src[k] == '\n') {
                if (detail::trim(src.substr(start, k - start)).size() > 0) ++out.nonblank_lines;
                start = k + 1;
            }
        }
    }

    auto finish_line = [&] {
        auto t = detail::trim(cur.code);
        if (!t.empty()) {
            // Offsets shift by the number of leading characters removed.
            const auto lead = cur.code.find_first_not_of(" \t");
            for (auto& s : cur.strings) s.offset -= lead;
            cur.code = std::move(t);
            out.lines.push_back(std::move(cur));
        }
        cur = LogicalLine{};
        in_line = false;
    };

    while (i < n) {
        if (!in_line) {
            // Start of a logical line: measure indentation.
            int indent = 0;
            std::size_t j = i;
            while (j < n && (src[j] == ' ' || src[j] == '\t' || src[j] == '\f')) {
                indent = src[j] == '\t' ? (indent / 8 + 1) * 8 : src[j] == ' ' ? indent + 1 : 0;
                ++j;
            }
            if (j >= n) break;
            if (src[j] == '\n' || src[j] == '\r' || src[j] == '#') {
                while (j < n && src[j] != '\n') ++j;
                if (j < n) ++line_no;
                i = j + 1;
                continue;
            }
            cur.indent = indent;
            cur.line_no = line_no;
            in_line = true;
            i = j;
        }

        const char c = src[i];
        if (c == '#') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (c == '\\' && i + 1 < n && (src[i + 1] == '\n' || (src[i + 1] == '\r' && i + 2 < n && src[i + 2] == '\n'))) {
            i += src[i + 1] == '\r' ? 3 : 2;
            ++line_no;
            cur.code.push_back(' ');
            continue;
        }
        if (c == '\n') {
            ++line_no;
            ++i;
            if (brackets.empty()) {
                finish_line();
            } else {
                cur.code.push_back(' ');
            }
            continue;
        }
        if (c == '\r') {
            ++i;
            continue;
        }
        if (c == '"' || c == '\'') {
            // Identifier characters directly before the quote may be a prefix.
            std::size_t p = cur.code.size();
            while (p > 0 && detail::is_ident(cur.code[p - 1])) --p;
            std::string prefix;
            if (p < cur.code.size() && detail::is_string_prefix(std::string_view(cur.code).substr(p))) {
                prefix = cur.code.substr(p);
                std::transform(prefix.begin(), prefix.end(), prefix.begin(),
                               [](unsigned char ch) { return std::tolower(ch); });
                cur.code.erase(p);
            }
            const bool triple = i + 2 < n && src[i + 1] == c && src[i + 2] == c;
            const std::size_t open_len = triple ? 3 : 1;
            std::size_t j = i + open_len;
            std::string content;
            bool closed = false;
            while (j < n) {
                if (src[j] == '\\' && j + 1 < n) {
                    if (src[j + 1] == '\n') ++line_no;
                    content.push_back(src[j]);
                    content.push_back(src[j + 1]);
                    j += 2;
                    continue;
                }
                if (!triple && src[j] == '\n') break;
                if (src[j] == c && (!triple || (j + 2 < n && src[j + 1] == c && src[j + 2] == c))) {
                    closed = true;
                    j += open_len;
                    break;
                }
                if (src[j] == '\n') ++line_no;
                content.push_back(src[j]);
                ++j;
            }
            if (!closed) out.strings_ok = false;
            cur.strings.push_back({prefix, std::move(content), cur.code.size()});
            cur.code += "\"\"";
            i = j;
            continue;
        }
        if (c == '(' || c == '[' || c == '{') {
            brackets.push_back(c);
        } else if (c == ')' || c == ']' || c == '}') {
            const char want = c == ')' ? '(' : c == ']' ? '[' : '{';
            if (brackets.empty() || brackets.back() != want) {
                out.brackets_ok = false;
            } else {
                brackets.pop_back();
            }
        }
        cur.code.push_back(c == '\t' ? ' ' : c);
        ++i;
    }
    if (in_line) finish_line();
    if (!brackets.empty()) out.brackets_ok = false;
    return out;
}

}  // namespace objdyn::scorer
