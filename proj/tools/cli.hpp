#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fne::cli {

inline constexpr const char* kOutputRootEnv = "FNE_OUTPUT_ROOT";

// Relative output paths land under $FNE_OUTPUT_ROOT when it is set.
std::filesystem::path output_path(const std::string& path);

// Runs one subcommand and returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fne::cli
