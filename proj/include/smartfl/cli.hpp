#pragma once

#include <filesystem>
#include <string>

namespace smartfl {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitRuntimeError = 2,
};

/// Entry point for the `smartfl` tool:
///   run   --config <file> [--seed N] [--out <path>]
///   sweep --config <file> --param <dotted.key> --values a,b,c [--out <path>]
///   check
int run_cli(int argc, char** argv);

/// Where metrics go: `requested`, moved into $SMARTFL_OUTPUT_DIR when that is set.
std::filesystem::path resolve_output_path(const std::string& requested);

/// `base` with "_<key>=<value>" inserted before the extension.
std::filesystem::path sweep_output_path(const std::filesystem::path& base, const std::string& key,
                                        const std::string& value);

}  // namespace smartfl
