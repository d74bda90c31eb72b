#pragma once

#include <stdexcept>
#include <string>

namespace mamba {

// Shape disagreement between an input and a layer/operation.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structurally valid input that the operation cannot act on (empty sequence,
// window shorter than a kernel, team with no prior games).
struct DegenerateInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API contract violation: mismatched schema constants, single-class labels,
// surgery on an already-cut network, and the like.
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CSV / config parsing failure; message carries the offending row or key.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when training encounters a non-finite loss or gradient.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mamba
