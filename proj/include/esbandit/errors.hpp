#pragma once

#include <stdexcept>
#include <string>

namespace esb {

// Arm features do not span the required space.
struct RankError : std::runtime_error {
    explicit RankError(const std::string& what) : std::runtime_error(what) {}
};

// Matrix factorization failed (input not SPD).
struct DecompositionError : std::runtime_error {
    explicit DecompositionError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative fit produced non-finite values.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Operation invoked on an object in the wrong lifecycle state.
struct StateError : std::runtime_error {
    explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace esb
