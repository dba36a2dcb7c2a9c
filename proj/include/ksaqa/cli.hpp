#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace ksaqa {

// Process exit status of the ksaqa tool.
enum class ExitCode : int {
  ok = 0,
  usage = 2,               // bad arguments, unknown subcommand, oversized input without --full
  config = 3,              // unreadable config, unknown key, bad value, missing input file
  input = 4,               // malformed triple/alias/question file
  missing_checkpoint = 5,  // a subcommand needs a checkpoint that was never written
  corrupt_checkpoint = 6,  // checkpoint present but unreadable or inconsistent
  numeric = 7,             // NaN/Inf during training or inference
  data = 8,                // empty splits, mention not found and similar
  internal = 9,
};

// Runs one subcommand. `args` excludes the program name. Prompts go to
// `out`, answers are read from `in`, diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

// Inputs larger than this (bytes, summed over all input files) need --full.
inline constexpr std::uintmax_t kDeskScaleBytes = std::uintmax_t{64} << 20;

}  // namespace ksaqa
