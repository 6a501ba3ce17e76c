#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace branchtrace {

enum class ErrorKind {
    Domain,          // point outside the open admissible set
    Evaluation,      // non-finite residual or derivative
    Shape,           // dimension mismatch
    Admissibility,   // singular path endpoint or zero on a box boundary
    Degeneracy,      // a zero with singular Jacobian inside a degree box
    SingularPoint,   // caller must route to the singular module
    NotAZero,        // residual above tolerance where a zero is required
    Precondition,
    Reduction,       // Lyapunov-Schmidt complement block is singular
    TrustRegion,     // inner Newton for the implicit map failed
    Unsupported,
    Ambiguous,       // branch pairing is not unique
    Bracket,         // shooting bracket has no sign change
    Refine,          // winding-number boundary polygon too coarse
    Initialization,  // base solution could not be found
    Config,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace branchtrace
