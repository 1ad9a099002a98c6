#pragma once

#include <stdexcept>
#include <string>

namespace markovig {

// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed caller input: bad dimensions, non-finite values, unparsable files.
struct input_error : error {
    using error::error;
};

// Input violates a structural requirement: reducible support, zero column,
// rank-deficient embedding, and similar.
struct structural_error : error {
    using error::error;
};

// A solver failed to reach its tolerance, or a computed quantity violates a
// certified property (e.g. non-positive-definite Fisher matrix).
struct numerical_error : error {
    using error::error;
};

// A requested value lies outside the achievable range (e.g. an expectation
// vector outside the achievable set).
struct range_error : error {
    using error::error;
};

}  // namespace markovig
