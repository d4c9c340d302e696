#pragma once

#include <complex>
#include <Eigen/Dense>

namespace qcmm {

using c64 = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Dense simulation cap: registers above this size are rejected everywhere.
inline constexpr int kMaxQubits = 16;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace qcmm
