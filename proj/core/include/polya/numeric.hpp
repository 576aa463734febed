// Copyright 2026 the polya-urn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>

namespace polya {

/// Neumaier-compensated accumulator. Order-insensitive enough for
/// reproducible reductions when fed in a fixed order.
struct NeumaierSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }

    double value() const { return sum + comp; }
};

/// log(exp(a) + exp(b)) without overflow; handles -inf identity elements.
inline double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = a > b ? a : b;
    const double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

inline constexpr double positive_infinity = std::numeric_limits<double>::infinity();

}  // namespace polya
