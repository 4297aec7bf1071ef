#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <string>

namespace pnax {

// Exact rational arithmetic for error moments. Worst-case magnitudes stay far
// below int64 limits: a single variance term is at most 63/12 * 255^2 and
// aggregation sums keep denominator <= 12.
using Rat = boost::rational<std::int64_t>;

inline double to_double(const Rat& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline std::string to_string(const Rat& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace pnax
