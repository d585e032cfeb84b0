#pragma once

#include <cmath>

namespace skrl {

// Kahan-Babuska compensated accumulator. Neumaier variant: handles terms
// larger than the running sum.
struct kahan_sum {
    double s = 0.0;
    double c = 0.0;

    void add(double x) {
        double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }

    double value() const { return s + c; }
};

} // namespace skrl
