#pragma once

#include <stdexcept>
#include <string>

namespace fiberlab {

// Length profile violates Kraft's inequality.
class infeasible_lengths : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// A block or symbol has probability zero under the model that is supposed to
// have generated it.
class model_mismatch : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Encoded bits ran out before a codeword could be matched.
class malformed_stream : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Exhaustive enumeration or allocation would exceed the configured cap.
class resource_limit : public std::length_error {
public:
  using std::length_error::length_error;
};

class precondition_violation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// -log of a zero probability was requested.
class infinite_information : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

}  // namespace fiberlab
