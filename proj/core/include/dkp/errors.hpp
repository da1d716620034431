#ifndef DKP_ERRORS_HPP
#define DKP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dkp {

// Error taxonomy mirrors the CLI exit-code contract:
//   ValidationError   -> exit 2 (malformed input, unknown names, bad parameters)
//   PreconditionError -> exit 3 (mathematical precondition violated)
//   ResolutionError   -> exit 4 (grid/solver resolution or convergence failure)

class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class PreconditionError : public std::runtime_error {
public:
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

class ResolutionError : public std::runtime_error {
public:
  explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dkp

#endif
