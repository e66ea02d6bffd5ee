#pragma once

#include <ostream>
#include <string>

namespace catnet {

// Exit codes shared by every subcommand: 0 success, 1 usage/config error,
// 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

int cmd_gen(const std::string& spec_path, const std::string& out_path, bool force,
            std::ostream& out, std::ostream& err);

int cmd_run(const std::string& config_path, const std::string& out_dir, bool force,
            std::ostream& out, std::ostream& err);

// `compare_dir` empty means a single-run report.
int cmd_report(const std::string& run_dir, const std::string& compare_dir, std::ostream& out,
               std::ostream& err);

}  // namespace catnet
