#ifndef UWBLOC_TOOLS_CLI_HPP_
#define UWBLOC_TOOLS_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace uwbloc::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsageError = 2 };

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  int runs{1};
};

int cmd_simulate(const std::filesystem::path& config, const GlobalOptions& opts, std::ostream& out,
                 std::ostream& err);
int cmd_replay(const std::filesystem::path& measurements, const std::filesystem::path& config,
               const GlobalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const std::filesystem::path& estimate, const std::filesystem::path& truth,
             const std::optional<std::filesystem::path>& config, const GlobalOptions& opts, std::ostream& out,
             std::ostream& err);

/// Parses argv and dispatches to the verbs above.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uwbloc::cli

#endif  // UWBLOC_TOOLS_CLI_HPP_
