/*=============================================================================
 * Per-iteration records of a solver run and its termination reason.
 *===========================================================================*/
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cutpursuit {

enum class StopReason {
    none,
    direction,        // -F'(x, d) <= tol_dir
    evolution,        // relative iterate evolution <= tol_x (or tol)
    max_iter,
    target_objective, // baseline reached a requested objective value
};

std::string to_string(StopReason reason);

struct TraceRecord {
    std::size_t iter = 0;
    double elapsed = 0.0; // seconds since the start of the solve
    double objective = 0.0;
    std::size_t components = 0;
    std::optional<double> dir_deriv;
};

struct SolveTrace {
    std::vector<TraceRecord> records;
    StopReason stop = StopReason::none;
    std::vector<std::string> warnings;
};

} // namespace cutpursuit
