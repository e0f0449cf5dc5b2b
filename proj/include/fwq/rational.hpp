#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <vector>

namespace fwq {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

using RVec = std::vector<Rat>;
using RMat = std::vector<std::vector<Rat>>;

inline double to_double(const Rat& r) { return r.template convert_to<double>(); }

// Parses an exact rational from "p/q", integer, plain decimal ("0.25"),
// or scientific decimal ("2.5e-3") text. Decimals convert exactly
// (digits over a power of ten), never through binary floating point.
Rat rat_from_string(const std::string& s);

// Canonical "p/q" (or "p" when the denominator is 1).
std::string rat_to_string(const Rat& r);

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }
inline Rat rat_max(const Rat& a, const Rat& b) { return a < b ? b : a; }
inline Rat rat_min(const Rat& a, const Rat& b) { return a < b ? a : b; }

// r^n for n >= 0.
Rat rat_pow(const Rat& r, unsigned long long n);

}  // namespace fwq
