#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace leukex::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitModel = 3,
};

/// Runs one subcommand. `args` excludes the program name. Never throws;
/// failures are reported on `err` and mapped to an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// {seed, config_digest, tool_version}; the digest is SHA-256 of the compact
/// dump of `config` (object keys sorted).
nlohmann::json artifact_meta(std::uint64_t seed, const nlohmann::json& config);

/// Shortest decimal that round-trips `v`.
std::string format_double(double v);

}  // namespace leukex::cli
