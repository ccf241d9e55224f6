#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ima::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericFailure = 3,
};

/// Environment variables consulted when the matching flag is absent.
inline constexpr const char* kEnvTrain = "IMA_TRAIN";
inline constexpr const char* kEnvDev = "IMA_DEV";
inline constexpr const char* kEnvTest = "IMA_TEST";
inline constexpr const char* kEnvEmbeddings = "IMA_EMBEDDINGS";

/// args excludes the program name. Output goes to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace ima::cli
