#pragma once

#include <filesystem>
#include <iosfwd>

#include "ima/model.hpp"

namespace ima::model {

// Text container:
//   ima-checkpoint 1
//   <key> <value>            one line per ModelConfig field
//   tensor <name> <rank> <dims...>
//   <row-major values, shortest round-trip decimal, space separated>
//   ...
//   end
// Values are printed with std::to_chars so a write/read round trip is exact.

void write_checkpoint(std::ostream& out, ModelParams& params);
ModelParams read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace ima::model
