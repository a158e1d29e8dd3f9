#ifndef CORENET_EXACT_HPP
#define CORENET_EXACT_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

#include "corenet/error.hpp"

namespace corenet {

// Path counts grow exponentially in depth, so fixed-width integers are out;
// normalized histograms additionally need exact division.
using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

inline BigInt rat_num(const BigRat& r) { return boost::multiprecision::numerator(r); }
inline BigInt rat_den(const BigRat& r) { return boost::multiprecision::denominator(r); }

inline bool is_integral(const BigRat& r) { return rat_den(r) == 1; }

// "5" for integers, "1/2" otherwise.
inline std::string exact_to_string(const BigRat& r) {
    if (is_integral(r)) return rat_num(r).str();
    return rat_num(r).str() + "/" + rat_den(r).str();
}

inline BigRat exact_from_string(const std::string& s) {
    try {
        const auto slash = s.find('/');
        if (slash == std::string::npos) return BigRat(BigInt(s));
        return BigRat(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
    } catch (const std::exception& e) {
        throw InvalidSpec("bad exact number '" + s + "': " + e.what());
    }
}

}  // namespace corenet

#endif  // CORENET_EXACT_HPP
