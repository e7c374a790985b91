#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "smrc/domain.hpp"

namespace smrc::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

/// Entry point of the `smrc` tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// [{text, origin, index, terminal}] and back.
nlohmann::json path_to_json(const ReasoningPath& path);
ReasoningPath path_from_json(const nlohmann::json& steps);

}  // namespace smrc::cli
