#pragma once

// Execution-free scoring of generated source along security, efficiency and
// functionality axes. Each axis score is clip(base + sum of rule deltas, 0, 10)
// and the rule hits that produced it are returned alongside.

#include "objdyn/core.hpp"
#include "objdyn/scorer/lexer.hpp"
#include "objdyn/scorer/rules.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace objdyn::scorer {

struct RuleHit {
    std::string rule_id;
    int count = 0;
    double delta = 0.0;  // total contribution of this rule

    friend bool operator==(const RuleHit&, const RuleHit&) = default;
};

struct AxisScore {
    double score = 0.0;
    double base = 0.0;
    std::vector<RuleHit> hits;

    friend bool operator==(const AxisScore&, const AxisScore&) = default;

    /// clip(base + sum of deltas); equals `score` by construction.
    double reconstruct() const {
        double s = base;
        for (const auto& h : hits) s += h.delta;
        return std::clamp(s, kScoreMin, kScoreMax);
    }
};

struct ScoreBreakdown {
    AxisScore security;
    AxisScore efficiency;
    AxisScore functionality;

    friend bool operator==(const ScoreBreakdown&, const ScoreBreakdown&) = default;

    ObjectiveVector objectives() const {
        ObjectiveVector v(3);
        v << security.score, efficiency.score, functionality.score;
        return v;
    }
};

namespace detail {

inline AxisScore finish(double base, std::vector<RuleHit> hits) {
    AxisScore a;
    a.base = base;
    a.hits = std::move(hits);
    a.score = a.reconstruct();
    return a;
}

inline int count_matches(const std::string& text, const std::regex& re) {
    return static_cast<int>(std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

inline std::size_t skip_space_forward(const std::string& s, std::size_t i) {
    while (i < s.size() && s[i] == ' ') ++i;
    return i;
}

/// Dotted callee name of the innermost call enclosing position `pos`.
inline std::string enclosing_callee(const std::string& code, std::size_t pos) {
    int depth = 0;
    for (std::size_t k = pos; k-- > 0;) {
        const char c = code[k];
        if (c == ')' || c == ']' || c == '}') {
            ++depth;
        } else if (c == '[' || c == '{') {
            if (depth == 0) return {};
            --depth;
        } else if (c == '(') {
            if (depth == 0) {
                std::size_t e = k;
                while (e > 0 && code[e - 1] == ' ') --e;
                std::size_t b = e;
                while (b > 0 && (is_ident(code[b - 1]) || code[b - 1] == '.')) --b;
                return code.substr(b, e - b);
            }
            --depth;
        }
    }
    return {};
}

inline bool is_spawn_callee(const std::string& callee) {
    if (callee.rfind("subprocess.", 0) == 0 || callee.rfind("os.", 0) == 0 || callee.rfind("asyncio.", 0) == 0) {
        return true;
    }
    const auto dot = callee.rfind('.');
    const auto last = dot == std::string::npos ? callee : callee.substr(dot + 1);
    static const char* kSpawn[] = {"run",        "call",   "Popen", "check_call", "check_output",
                                   "getoutput", "system", "popen", "spawn",      "create_subprocess_shell"};
    return std::any_of(std::begin(kSpawn), std::end(kSpawn), [&](const char* s) { return last == s; });
}

inline bool looks_like_sql(const std::string& text) {
    static const std::regex kSql(
        R"(\bselect\b[\s\S]*\bfrom\b|\binsert\s+into\b|\bupdate\b[\s\S]*\bset\b|\bdelete\s+from\b|\bdrop\s+(table|database|index)\b|\bcreate\s+(table|database|index)\b|\balter\s+table\b)",
        std::regex::icase);
    return std::regex_search(text, kSql);
}

inline bool has_interpolation_field(const std::string& content) {
    for (std::size_t k = 0; k < content.size(); ++k) {
        if (content[k] == '{') {
            if (k + 1 < content.size() && content[k + 1] == '{') {
                ++k;
                continue;
            }
            return true;
        }
    }
    return false;
}

/// A string literal is "built" when it is an f-string with fields, or sits
/// next to `+`, is followed by `%` formatting, or has `.format(` applied.
inline bool literal_is_built(const LogicalLine& line, const StringLiteral& lit) {
    if (lit.prefix.find('f') != std::string::npos && has_interpolation_field(lit.content)) return true;
    const auto& code = line.code;
    const std::size_t after = skip_space_forward(code, lit.offset + 2);
    if (after < code.size()) {
        if (code[after] == '+') return true;
        if (code[after] == '%' && (after + 1 >= code.size() || code[after + 1] != '=')) return true;
        if (code.compare(after, 8, ".format(") == 0) return true;
    }
    std::size_t before = lit.offset;
    while (before > 0 && code[before - 1] == ' ') --before;
    if (before > 0 && code[before - 1] == '+') return true;
    return false;
}

struct Features {
    int eval_exec = 0;
    int shell_true = 0;
    int sql_concat = 0;
    bool exception_handling = false;
    bool input_validation = false;

    bool functions = false;
    bool classes = false;
    bool imports = false;
    bool returns = false;
    bool docstrings = false;
};

inline bool has_exception_handling(const std::vector<LogicalLine>& lines) {
    bool has_try = false;
    bool has_handler = false;
    for (const auto& l : lines) {
        const auto kw = l.keyword();
        has_try = has_try || (kw == "try" && l.opens_block());
        has_handler = has_handler || kw == "except";
    }
    return has_try && has_handler;
}

inline bool has_input_validation(const std::vector<LogicalLine>& lines) {
    static const std::regex kTypeCheck(R"((^|[^\w.])(isinstance|issubclass)\s*\(|\btype\s*\([^)]*\)\s*(is|==|!=)\s)");
    static const std::regex kComparison(R"((<=|>=|==|!=|<|>|\bnot\s+in\b|\bin\b))");
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const auto& l = lines[k];
        if (std::regex_search(l.code, kTypeCheck)) return true;
        const auto kw = l.keyword();
        if (kw == "assert" && std::regex_search(l.code, kComparison)) return true;
        if (kw == "if" && std::regex_search(l.code, kComparison)) {
            // Bounds check: a comparison guarding a raise.
            if (l.code.find(": raise") != std::string::npos || l.code.find(":raise") != std::string::npos) return true;
            if (l.opens_block() && k + 1 < lines.size() && lines[k + 1].indent > l.indent &&
                lines[k + 1].keyword() == "raise") {
                return true;
            }
        }
    }
    return false;
}

inline Features extract_features(const LexResult& lexed) {
    static const std::regex kEvalExec(R"((^|[^\w.])(eval|exec)\s*\()");
    static const std::regex kShellTrue(R"(\bshell\s*=\s*True\b)");
    static const std::regex kExecuteCall(R"((\.|\b)(execute|executemany|executescript|raw|query)\s*\()");
    static const std::regex kReturn(R"((^|[^\w.])return\b)");

    Features f;
    const auto& lines = lexed.lines;
    bool any_execute = false;
    int built_sql = 0;
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const auto& l = lines[k];
        f.eval_exec += count_matches(l.code, kEvalExec);
        for (auto it = std::sregex_iterator(l.code.begin(), l.code.end(), kShellTrue); it != std::sregex_iterator();
             ++it) {
            if (is_spawn_callee(enclosing_callee(l.code, static_cast<std::size_t>(it->position())))) ++f.shell_true;
        }
        any_execute = any_execute || std::regex_search(l.code, kExecuteCall);
        for (const auto& s : l.strings) {
            if (looks_like_sql(s.content) && literal_is_built(l, s)) ++built_sql;
        }

        const auto kw = l.keyword();
        f.functions = f.functions || (kw == "def" && l.opens_block());
        f.classes = f.classes || (kw == "class");
        f.imports = f.imports || kw == "import" || (kw == "from" && l.code.find(" import ") != std::string::npos);
        f.returns = f.returns || std::regex_search(l.code, kReturn);
        if (l.only_strings()) {
            const bool first_in_block = k == 0 || lines[k - 1].opens_block();
            f.docstrings = f.docstrings || first_in_block;
        }
    }
    f.sql_concat = any_execute ? built_sql : 0;
    f.exception_handling = has_exception_handling(lines);
    f.input_validation = has_input_validation(lines);
    return f;
}

struct Structure {
    bool parseable = true;
    int max_depth = 0;
    int nested_loop_pairs = 0;
    int control_constructs = 0;
};

inline bool is_loop(const std::string& kw) { return kw == "for" || kw == "while"; }

inline Structure analyze_structure(const LexResult& lexed) {
    Structure s;
    s.parseable = lexed.brackets_ok && lexed.strings_ok;
    std::vector<int> indents{0};
    std::vector<std::string> openers;  // keyword of each enclosing block, innermost last
    bool expect_indent = false;
    for (const auto& l : lexed.lines) {
        if (expect_indent) {
            if (l.indent <= indents.back()) s.parseable = false;
            indents.push_back(l.indent);
        } else if (l.indent > indents.back()) {
            s.parseable = false;  // unexpected indent
            indents.push_back(l.indent);
            openers.emplace_back();
        } else {
            while (l.indent < indents.back()) {
                indents.pop_back();
                openers.pop_back();
            }
            if (l.indent != indents.back()) s.parseable = false;  // dedent to an unknown level
        }
        const auto kw = l.keyword();
        if (kw == "for" || kw == "while" || kw == "if" || kw == "elif") ++s.control_constructs;
        expect_indent = l.opens_block();
        if (expect_indent) {
            const int depth = static_cast<int>(openers.size()) + 1;
            s.max_depth = std::max(s.max_depth, depth);
            if (is_loop(kw) && !openers.empty() && is_loop(openers.back())) ++s.nested_loop_pairs;
            openers.push_back(kw);
        }
    }
    if (expect_indent) s.parseable = false;  // block opener with no body
    return s;
}

inline void add_hit(std::vector<RuleHit>& hits, const char* id, int count, double per) {
    if (count > 0) hits.push_back({id, count, per * count});
}

}  // namespace detail

inline AxisScore score_security(std::string_view src, const RuleTable& rules = {}) {
    const auto f = detail::extract_features(lex(src));
    std::vector<RuleHit> hits;
    detail::add_hit(hits, "eval_exec", f.eval_exec, rules.eval_exec);
    detail::add_hit(hits, "shell_true", f.shell_true, rules.shell_true);
    detail::add_hit(hits, "sql_concat", f.sql_concat, rules.sql_concat);
    detail::add_hit(hits, "exception_handling", f.exception_handling ? 1 : 0, rules.exception_handling);
    detail::add_hit(hits, "input_validation", f.input_validation ? 1 : 0, rules.input_validation);
    return detail::finish(rules.security_base, std::move(hits));
}

inline AxisScore score_efficiency(std::string_view src, const RuleTable& rules = {}) {
    const auto s = detail::analyze_structure(lex(src));
    std::vector<RuleHit> hits;
    if (!s.parseable) {
        hits.push_back({"unparseable", 1, rules.unparseable_baseline - rules.efficiency_base});
        return detail::finish(rules.efficiency_base, std::move(hits));
    }
    detail::add_hit(hits, "nesting_depth", std::max(0, s.max_depth - rules.free_depth), rules.depth_penalty);
    detail::add_hit(hits, "nested_loop", s.nested_loop_pairs, rules.nested_loop);
    detail::add_hit(hits, "control_flow", std::max(0, s.control_constructs - rules.free_constructs),
                    rules.construct_penalty);
    return detail::finish(rules.efficiency_base, std::move(hits));
}

inline AxisScore score_functionality(std::string_view src, long long expected_length, const RuleTable& rules = {}) {
    if (expected_length < 1) {
        throw Error(ErrorKind::InvalidExpectedLength, "expected length must be >= 1, got " + std::to_string(expected_length));
    }
    const auto lexed = lex(src);
    const auto f = detail::extract_features(lexed);
    std::vector<RuleHit> hits;
    detail::add_hit(hits, "function_defs", f.functions ? 1 : 0, rules.feature_class);
    detail::add_hit(hits, "class_defs", f.classes ? 1 : 0, rules.feature_class);
    detail::add_hit(hits, "imports", f.imports ? 1 : 0, rules.feature_class);
    detail::add_hit(hits, "returns", f.returns ? 1 : 0, rules.feature_class);
    detail::add_hit(hits, "docstrings", f.docstrings ? 1 : 0, rules.feature_class);
    detail::add_hit(hits, "error_handling", f.exception_handling ? 1 : 0, rules.feature_class);

    double pre = rules.functionality_base;
    for (const auto& h : hits) pre += h.delta;
    const double full_credit = rules.stub_fraction * static_cast<double>(expected_length);
    const double factor = std::min(1.0, static_cast<double>(lexed.nonblank_lines) / full_credit);
    if (factor < 1.0) hits.push_back({"length_adjustment", 1, pre * (factor - 1.0)});
    return detail::finish(rules.functionality_base, std::move(hits));
}

/// All three axes; deterministic and never executes the input.
inline ScoreBreakdown score_all(std::string_view src, long long expected_length, const RuleTable& rules = {}) {
    ScoreBreakdown b;
    b.functionality = score_functionality(src, expected_length, rules);
    b.security = score_security(src, rules);
    b.efficiency = score_efficiency(src, rules);
    return b;
}

inline nlohmann::ordered_json to_json(const ScoreBreakdown& b) {
    nlohmann::ordered_json j;
    j["schema_version"] = "1";
    j["security"] = b.security.score;
    j["efficiency"] = b.efficiency.score;
    j["functionality"] = b.functionality.score;
    auto hits = nlohmann::ordered_json::array();
    auto add = [&](const char* axis, const AxisScore& a) {
        for (const auto& h : a.hits) {
            nlohmann::ordered_json hit;
            hit["axis"] = axis;
            hit["rule_id"] = h.rule_id;
            hit["count"] = h.count;
            hit["delta"] = h.delta;
            hits.push_back(std::move(hit));
        }
    };
    add("security", b.security);
    add("efficiency", b.efficiency);
    add("functionality", b.functionality);
    j["rule_hits"] = std::move(hits);
    return j;
}

}  // namespace objdyn::scorer
