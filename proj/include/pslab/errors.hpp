#pragma once

#include <stdexcept>
#include <string>

namespace pslab {

// Invalid arguments, malformed configs, violated preconditions.
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An exact computation would exceed its enumeration/step budget.
struct budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Remote backend unreachable after retries.
struct transport_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Remote backend reachable but the response violates the wire contract.
struct protocol_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The backend cannot serve what the operation needs (e.g. top-k only).
struct capability_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A stochastic algorithm collapsed (e.g. every particle weight hit zero).
struct degeneracy_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pslab
