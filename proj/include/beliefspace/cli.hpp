#pragma once

#include <iosfwd>

namespace beliefspace::cli {

// Subcommands: ingest | triplets | train | encode | pca | polarization |
// predict | dissonance | eval | report | synth.
// Exit codes: 0 success, 1 usage, 2 data/validation, 3 internal.
int dispatch(int argc, const char* const* argv);

} // namespace beliefspace::cli
