#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rfpi {

using Complex = std::complex<double>;

/// Spatial point in R^d, d <= 2. Fixed maximum size keeps it off the heap.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;

/// Maximum spin dimension handled by the pointwise matrix kernels.
inline constexpr int kMaxSpin = 8;

/// l x l complex matrix, stack allocated for l <= kMaxSpin.
using SpinMatrix =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxSpin, kMaxSpin>;
using SpinVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxSpin, 1>;

/// Thrown for contract violations (bad arguments, mismatched shapes).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

}  // namespace rfpi
