#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace symfs::cli {

enum ExitCode : int { kSuccess = 0, kVerificationFailed = 1, kUsageError = 2 };

/// Entry point shared by the `symfs` binary and the tests.
/// argv[0] is the program name, argv[1] the subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads a plain-text key=value file. Blank lines and lines starting with '#'
/// are ignored. Throws ConfigError on malformed lines or duplicate keys.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);

/// Rewrites `args` so entries from a `--config FILE` become `--key=value`
/// flags placed before the user's own flags (which therefore take precedence).
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace symfs::cli
