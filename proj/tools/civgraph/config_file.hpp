#pragma once

#include <filesystem>

#include <CLI11.hpp>

namespace civgraph::cli {

/// Fills options of `app` that were not given on the command line from a
/// flat JSON object. Keys use the long option name with '_' or '-'; keys
/// that name no option of `app` are ignored so one file can serve every
/// subcommand.
void apply_config_file(CLI::App& app, const std::filesystem::path& file);

}  // namespace civgraph::cli
