#pragma once

#include "finsler/error.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace finsler::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kPass = 0, kVerdictFail = 1, kUsage = 2, kNumerical = 3 };

/// Bad flags or configuration; `what()` names the offending field path.
class UsageError : public Error {
public:
    using Error::Error;
};

/// A validated run configuration: the subcommand plus every field it reads,
/// with defaults filled in. Values come from the defaults, then the JSON
/// config file, then the command-line flags.
struct RunConfig {
    std::string subcommand;
    Json values = Json::object();

    double number(const std::string& key) const;
    long long integer(const std::string& key) const;
    std::string string(const std::string& key) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<long long> integers(const std::string& key) const;
    bool has(const std::string& key) const;
    /// Tolerance override when configured, else `fallback`.
    double tolerance(const std::string& name, double fallback) const;
};

/// Parses argv-style arguments (without the program name).
RunConfig load_config(const std::vector<std::string>& args);

/// Validates a JSON object as the configuration of `subcommand`.
RunConfig config_from_json(const std::string& subcommand, const Json& object);

/// Runs the configured computation and returns the result envelope:
/// config, version, wall_time, payload, verdicts and the overall pass flag.
/// Trajectory subcommands also fill `csv` when the format is csv.
Json execute(const RunConfig& config, std::string* csv = nullptr);

/// Full entry point: parse, execute, write the output, map errors to exit
/// codes. Usage errors print the synopsis to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::vector<std::string> subcommands();

} // namespace finsler::cli
