#pragma once

#include <stdexcept>
#include <string>

namespace weq {

// Bad input or misuse: malformed files, out-of-range parameters, contract
// violations. The CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
  public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// A stage failed while computing: non-convergence, empty results, I/O
// failures. The CLI maps this to exit code 3.
class compute_error : public std::runtime_error {
  public:
    explicit compute_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace weq
