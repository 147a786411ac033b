#pragma once

/***
 * Built-in historic study fixtures, embedded verbatim:
 *
 *   tuberculosis1910  mortality by place and ethnicity, N = 4,894,511
 *   streptomycin1948  antibiotic trial by gender and baseline, N = 107
 *   kidney1986        stone treatments by stone size, N = 985
 *
 * Level orderings follow the published tables, so cell indices are stable.
 * The kidney fixture excludes ureterolithotomy and the combined method,
 * whose strata are incomplete in the original data.
 */

#include <string>
#include <string_view>
#include <vector>

#include "deconf/errors.hpp"
#include "deconf/table.hpp"

namespace deconf {

struct BuiltinInfo {
    std::string name;
    std::string description;
};

inline std::vector<BuiltinInfo> builtin_list() {
    return {
        {"tuberculosis1910",
         "1910 US tuberculosis mortality: outcome x place x ethnicity, N=4894511"},
        {"streptomycin1948",
         "1948 streptomycin trial: gender x baseline x improved x treatment, N=107"},
        {"kidney1986",
         "1986 kidney stone study: treatment x stone_size x successful, N=985"},
    };
}

inline JointTable builtin(std::string_view name) {
    if (name == "tuberculosis1910") {
        Schema schema({
            Variable{"outcome", Role::outcome, {"survived", "died"}},
            Variable{"place", Role::independent, {"New York", "Richmond"}},
            Variable{"ethnicity", Role::confounder, {"African American", "White"}},
        });
        return JointTable(schema,
                          {
                              91196, 4666809,  // survived, New York
                              46578, 80764,    // survived, Richmond
                              513, 8365,       // died, New York
                              155, 131,        // died, Richmond
                          },
                          TableKind::counts);
    }
    if (name == "streptomycin1948") {
        Schema schema({
            Variable{"gender", Role::confounder, {"female", "male"}},
            Variable{"baseline", Role::confounder, {"good", "fair", "poor"}},
            Variable{"improved", Role::outcome, {"no", "yes"}},
            Variable{"treatment", Role::independent, {"control", "streptomycin"}},
        });
        return JointTable(schema,
                          {
                              0, 0,    // female, good, no
                              4, 4,    // female, good, yes
                              5, 2,    // female, fair, no
                              5, 8,    // female, fair, yes
                              14, 10,  // female, poor, no
                              0, 7,    // female, poor, yes
                              0, 0,    // male, good, no
                              4, 4,    // male, good, yes
                              6, 1,    // male, fair, no
                              4, 6,    // male, fair, yes
                              10, 4,   // male, poor, no
                              0, 9,    // male, poor, yes
                          },
                          TableKind::counts);
    }
    if (name == "kidney1986") {
        Schema schema({
            Variable{"treatment",
                     Role::independent,
                     {"ESWL", "nephrolithotomy/pyelolithotomy", "percutaneous nephrolithotomy",
                      "pyelolithotomy"}},
            Variable{"stone_size", Role::confounder, {"large", "small"}},
            Variable{"successful", Role::outcome, {"no", "yes"}},
        });
        return JointTable(schema,
                          {
                              23, 101,  // ESWL, large
                              4, 200,   // ESWL, small
                              64, 154,  // nephrolithotomy/pyelolithotomy, large
                              1, 12,    // nephrolithotomy/pyelolithotomy, small
                              25, 55,   // percutaneous nephrolithotomy, large
                              36, 234,  // percutaneous nephrolithotomy, small
                              7, 38,    // pyelolithotomy, large
                              5, 26,    // pyelolithotomy, small
                          },
                          TableKind::counts);
    }
    throw UnknownDataset("unknown builtin dataset '" + std::string(name) +
                         "'; available: tuberculosis1910, streptomycin1948, kidney1986");
}

}  // namespace deconf
