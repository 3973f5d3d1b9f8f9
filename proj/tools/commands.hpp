#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mlstereo/config.hpp"

namespace mlstereo::cli {

namespace fs = std::filesystem;

/// Process exit codes.
enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

int cmd_gen(const config::RunConfig& cfg, const fs::path& out_dir, int count, std::uint64_t seed);

/// Single pair.
int cmd_match(const config::RunConfig& cfg, const fs::path& left, const fs::path& right, const fs::path& out_dir);
/// Every sample of a dataset into out_dir/<id>/.
int cmd_match_dataset(const config::RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir);

int cmd_eval(const config::RunConfig& cfg, const fs::path& pred_dir, const fs::path& dataset_dir,
             const fs::path& out_dir);

int cmd_export(const config::RunConfig& cfg, const fs::path& pred_dir, const fs::path& left, const fs::path& out_ply);

struct SelftestOptions {
  /// Debug flag: perturbs the analytic NLL gradient so the gradient check fails.
  bool inject_gradient_fault = false;
};
int cmd_selftest(const SelftestOptions& opts);

}  // namespace mlstereo::cli
