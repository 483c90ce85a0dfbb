#pragma once

#include <functional>
#include <random>

#include <doctest.h>

#include "corvid/error.hpp"

namespace testing {

inline bool throws_kind(const std::function<void()>& fn, corvid::ErrorKind kind) {
    try {
        fn();
    } catch (const corvid::Error& e) {
        return e.kind() == kind;
    }
    return false;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double rel_diff(double a, double b) {
    double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace testing
