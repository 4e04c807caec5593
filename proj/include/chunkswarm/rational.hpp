#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace chunkswarm {

// Arbitrary-precision rational used by the exact-arithmetic analysis path.
// Constructing one from a double is exact (the double's binary value).
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& q) { return static_cast<double>(q); }
inline constexpr double to_double(double x) { return x; }

}  // namespace chunkswarm
