#pragma once

// Rule magnitudes for the static scorers. The defaults below match
// data/scorer_rules.conf; a rule file may override any subset of keys.

#include "objdyn/config.hpp"
#include "objdyn/core.hpp"

#include <string>

namespace objdyn::scorer {

struct RuleTable {
    double security_base = 5.0;
    double eval_exec = -2.0;           // per call
    double shell_true = -1.5;          // per process-spawn call with shell=True
    double sql_concat = -1.5;          // per concatenated/interpolated SQL string
    double exception_handling = 1.0;   // once
    double input_validation = 0.5;     // once

    double efficiency_base = 10.0;
    double unparseable_baseline = 2.0;
    int free_depth = 2;
    double depth_penalty = -1.0;       // per level beyond free_depth
    double nested_loop = -1.5;         // per directly nested loop pair
    int free_constructs = 5;
    double construct_penalty = -0.25;  // per loop/branch beyond free_constructs

    double functionality_base = 1.0;
    double feature_class = 1.5;        // per feature class present
    double stub_fraction = 0.3;        // full credit at stub_fraction * expected_length lines
};

inline RuleTable rules_from_key_values(const config::KeyValues& kv, const std::string& origin) {
    RuleTable r;
    for (const auto& [key, value] : kv) {
        const auto what = origin + ": " + key;
        auto num = [&] { return config::parse_double(value, what); };
        auto integer = [&] { return static_cast<int>(config::parse_integer(value, what)); };
        if (key == "security.base") r.security_base = num();
        else if (key == "security.eval_exec") r.eval_exec = num();
        else if (key == "security.shell_true") r.shell_true = num();
        else if (key == "security.sql_concat") r.sql_concat = num();
        else if (key == "security.exception_handling") r.exception_handling = num();
        else if (key == "security.input_validation") r.input_validation = num();
        else if (key == "efficiency.base") r.efficiency_base = num();
        else if (key == "efficiency.unparseable_baseline") r.unparseable_baseline = num();
        else if (key == "efficiency.free_depth") r.free_depth = integer();
        else if (key == "efficiency.depth_penalty") r.depth_penalty = num();
        else if (key == "efficiency.nested_loop") r.nested_loop = num();
        else if (key == "efficiency.free_constructs") r.free_constructs = integer();
        else if (key == "efficiency.construct_penalty") r.construct_penalty = num();
        else if (key == "functionality.base") r.functionality_base = num();
        else if (key == "functionality.feature_class") r.feature_class = num();
        else if (key == "functionality.stub_fraction") r.stub_fraction = num();
        else throw Error(ErrorKind::ParseError, origin + ": unknown rule '" + key + "'");
    }
    if (!(r.stub_fraction > 0.0)) throw Error(ErrorKind::ParseError, origin + ": stub_fraction must be > 0");
    return r;
}

inline RuleTable load_rules(const std::string& path) {
    return rules_from_key_values(config::load_key_values(path), path);
}

}  // namespace objdyn::scorer
