#include "fwq/rational.hpp"

#include <cctype>
#include <cstdlib>

#include "fwq/error.hpp"

namespace fwq {

namespace {

BigInt pow10(long long e) {
  BigInt r = 1;
  for (long long i = 0; i < e; ++i) r *= 10;
  return r;
}

// cpp_int's string constructor treats a leading zero as an octal prefix, so
// digit strings must be stripped before conversion.
BigInt from_digits(const std::string& digits) {
  std::size_t nz = digits.find_first_not_of('0');
  if (nz == std::string::npos) return BigInt(0);
  return BigInt(digits.substr(nz));
}

// Parses a decimal possibly with exponent: [-]digits[.digits][e[-]digits]
Rat parse_decimal(const std::string& s) {
  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    neg = (s[i] == '-');
    ++i;
  }
  std::string digits;
  long long frac_digits = 0;
  bool seen_digit = false, seen_dot = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_dot) ++frac_digits;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      break;
    }
  }
  if (!seen_digit) fail(Err::ConfigInvalid, "not a number: '" + s + "'");
  long long exp10 = 0;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    bool eneg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
      eneg = (s[i] == '-');
      ++i;
    }
    if (i >= s.size()) fail(Err::ConfigInvalid, "bad exponent in '" + s + "'");
    long long e = 0;
    for (; i < s.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(s[i])))
        fail(Err::ConfigInvalid, "bad exponent in '" + s + "'");
      e = e * 10 + (s[i] - '0');
      if (e > 100000) fail(Err::ConfigInvalid, "exponent out of range in '" + s + "'");
    }
    exp10 = eneg ? -e : e;
  }
  if (i != s.size()) fail(Err::ConfigInvalid, "trailing characters in number '" + s + "'");

  BigInt mant = from_digits(digits);
  if (neg) mant = -mant;
  long long net = exp10 - frac_digits;
  if (net >= 0) return Rat(mant * pow10(net), 1);
  return Rat(mant, pow10(-net));
}

}  // namespace

Rat rat_from_string(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) fail(Err::ConfigInvalid, "empty number");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    if (num.empty() || den.empty()) fail(Err::ConfigInvalid, "bad fraction '" + raw + "'");
    bool nneg = false;
    if (num[0] == '-' || num[0] == '+') {
      nneg = num[0] == '-';
      num.erase(0, 1);
    }
    if (num.empty()) fail(Err::ConfigInvalid, "bad fraction '" + raw + "'");
    for (char c : num)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        fail(Err::ConfigInvalid, "bad fraction numerator '" + raw + "'");
    for (char c : den)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        fail(Err::ConfigInvalid, "bad fraction denominator '" + raw + "'");
    BigInt n = from_digits(num), d = from_digits(den);
    if (d == 0) fail(Err::ConfigInvalid, "zero denominator in '" + raw + "'");
    if (nneg) n = -n;
    return Rat(n, d);
  }
  return parse_decimal(s);
}

std::string rat_to_string(const Rat& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

Rat rat_pow(const Rat& r, unsigned long long n) {
  Rat acc = 1, base = r;
  while (n) {
    if (n & 1ULL) acc *= base;
    base *= base;
    n >>= 1ULL;
  }
  return acc;
}

}  // namespace fwq
