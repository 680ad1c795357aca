/*=============================================================================
 * Extended reals ]-inf, +inf] used for objective values, one-sided
 * derivatives and flow capacities. Backed by IEEE doubles; the only extra
 * rule is that (+inf) + (-inf) is a contract violation instead of a NaN.
 *===========================================================================*/
#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>

#include "cutpursuit/errors.hpp"

namespace cutpursuit {

class ExtendedReal {
public:
    constexpr ExtendedReal() = default;
    constexpr ExtendedReal(double v) : v_(v) {} // NOLINT: implicit by intent

    static constexpr ExtendedReal plus_infinity()
    { return ExtendedReal(std::numeric_limits<double>::infinity()); }
    static constexpr ExtendedReal minus_infinity()
    { return ExtendedReal(-std::numeric_limits<double>::infinity()); }

    constexpr double value() const { return v_; }
    bool is_finite() const { return std::isfinite(v_); }
    bool is_plus_infinity() const { return std::isinf(v_) && v_ > 0; }
    bool is_minus_infinity() const { return std::isinf(v_) && v_ < 0; }

    friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b)
    {
        if (std::isinf(a.v_) && std::isinf(b.v_) && (a.v_ > 0) != (b.v_ > 0)) {
            throw ContractViolation("extended real: (+inf) + (-inf)");
        }
        return ExtendedReal(a.v_ + b.v_);
    }
    ExtendedReal& operator+=(ExtendedReal b) { return *this = *this + b; }
    friend ExtendedReal operator-(ExtendedReal a) { return ExtendedReal(-a.v_); }
    friend ExtendedReal operator-(ExtendedReal a, ExtendedReal b) { return a + (-b); }

    /* scaling by a finite real; 0 * inf is 0 (directional derivative
     * convention h'(x, 0) = 0) */
    friend ExtendedReal operator*(double s, ExtendedReal a)
    {
        if (s == 0.0) { return ExtendedReal(0.0); }
        return ExtendedReal(s * a.v_);
    }

    friend constexpr auto operator<=>(ExtendedReal a, ExtendedReal b)
    { return a.v_ <=> b.v_; }
    friend constexpr bool operator==(ExtendedReal a, ExtendedReal b)
    { return a.v_ == b.v_; }

    friend std::ostream& operator<<(std::ostream& os, ExtendedReal a)
    { return os << a.v_; }

private:
    double v_ = 0.0;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace cutpursuit
