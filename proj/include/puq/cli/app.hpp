#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace puq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitDegenerate = 4;

// args excludes the program name. Reports go to <output>/<task>.json;
// trained models to the models.base / models.meta paths.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace puq::cli
