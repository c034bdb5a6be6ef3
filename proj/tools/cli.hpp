#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ril/invariance.hpp"

namespace ril::cli {

inline constexpr const char* kVersion = "0.3.1";

enum ExitCode : int { kOk = 0, kTableDiff = 1, kInputError = 2, kNumericalFailure = 3 };

struct ExperimentConfig {
    std::uint64_t seed = 20240601;
    MdpSamplerConfig sampler{};
    std::size_t trials = 100;
    std::size_t budget = 200;
    std::size_t mixed_samples = 50;
    std::size_t order_trials = 60;
    double tolerance = 1e-8;
    double beta = 1.0;
    Resolution resolution{};
    std::string output_dir;
    /// Object roster for `order`; empty means every kind.
    std::vector<ObjectKind> kinds;
    /// Column roster for `table`; empty means every column.
    std::vector<TransformClass> classes;
    std::vector<std::string> rows;

    void validate() const;
    ExperimentParams params() const;
};

/// Throws ParseError listing every bad field.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& c);

/// Lowercase hex SHA-256 of the file's bytes.
std::string file_sha256(const std::string& path);

/// Runs one subcommand; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ril::cli
