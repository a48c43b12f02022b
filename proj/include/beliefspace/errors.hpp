#pragma once

#include <stdexcept>
#include <string>

namespace beliefspace {

// Data/validation failures: malformed input files, contract violations on
// values coming from user data. CLI maps these to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad command-line usage. CLI maps these to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace beliefspace
