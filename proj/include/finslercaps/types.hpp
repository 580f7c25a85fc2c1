#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace finslercaps {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IntVec = Eigen::VectorXi;

/// Phase-space point (x, p) on T*T^n, base point lifted to R^n.
struct PhasePoint {
    Vec x;
    Vec p;
};

inline Vec to_real(const IntVec& a) { return a.cast<double>(); }

} // namespace finslercaps
