#pragma once

#include <Eigen/Dense>

namespace skrl::path_resolvent {

// Carrier for M, P, resolvents and Q-type matrices. The symmetric flag is a
// promise made by the producer; norm routines pick algorithms based on it.
struct DenseMatrix {
    Eigen::MatrixXd a;
    bool symmetric = false;

    int n() const { return static_cast<int>(a.rows()); }

    bool symmetry_consistent(double tol = 1e-12) const {
        if (!symmetric) return true;
        for (int i = 0; i < n(); ++i)
            for (int j = i + 1; j < n(); ++j)
                if (std::abs(a(i, j) - a(j, i)) > tol) return false;
        return true;
    }
};

} // namespace skrl::path_resolvent
