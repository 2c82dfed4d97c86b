#pragma once

#include <doctest.h>

// Relative tolerance; doctest's default scale of 1 hides errors in small values.
// A zero target gets an absolute floor of eps * 1e-3.
inline doctest::Approx rel(double v, double eps = 1e-9) {
    return doctest::Approx(v).epsilon(eps).scale(v == 0.0 ? 1e-3 : 0.0);
}
