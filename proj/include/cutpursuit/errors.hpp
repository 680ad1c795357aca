#pragma once

#include <stdexcept>
#include <string>

namespace cutpursuit {

/* broken precondition or internal invariant (bad input to an operation) */
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/* no feasible point for the requested initialization */
class InfeasibleProblem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/* malformed problem/instance files */
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cutpursuit
