#pragma once

#include <iosfwd>
#include <map>
#include <string>

namespace vbcar::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,          // bad flags or config file
  kMissingInput = 3,   // an input file or checkpoint does not exist
  kDataError = 4,      // malformed or insufficient data
  kTrainingAbort = 5,  // non-finite values during training
  kDegenerate = 6,     // t-test on identical systems
  kIoError = 7,        // unwritable or locked output directory
};

/// Flat key=value configuration; every key doubles as a --key flag.
using Settings = std::map<std::string, std::string>;

/// Built-in defaults for every recognised key.
Settings default_settings();

/// Parses "key=value" lines; '#' starts a comment. Unknown keys are errors.
Settings parse_config(std::istream& in);

/// Entry point: `vbcar <ingest|synth|train|eval|compare|export> [--flags]`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vbcar::cli
