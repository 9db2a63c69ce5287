#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fsqkit::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_data = 2;

inline constexpr int report_schema_version = 1;

// Runs one fsqkit invocation. `args` excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

int run(int argc, char **argv);

}  // namespace fsqkit::cli
