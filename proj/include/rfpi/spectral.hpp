#pragma once

#include "rfpi/grid.hpp"

namespace rfpi::spectral {

/// In-place discrete Fourier transform of one scalar grid function.
/// Forward is unscaled; inverse divides by the number of points.
void forward(const Grid& grid, Eigen::ArrayXcd& values);
void inverse(const Grid& grid, Eigen::ArrayXcd& values);

/// Spectral derivative of the given order along one axis. Odd orders drop
/// the Nyquist mode of even-length axes; even orders keep it.
Eigen::ArrayXcd derivative(const Grid& grid, const Eigen::ArrayXcd& values, int axis, int order = 1);

/// Multiplies in Fourier space by a per-mode factor (flat FFT ordering).
Eigen::ArrayXcd apply_multiplier(const Grid& grid, const Eigen::ArrayXcd& values,
                                 const Eigen::ArrayXcd& multiplier);

/// Fourier multiplier of d^order/dx_axis^order at every flat mode index.
Eigen::ArrayXcd derivative_multiplier(const Grid& grid, int axis, int order);

/// Trigonometric interpolation of a 1D grid function onto a grid refined by
/// `refine` (zero padding in Fourier space; the Nyquist coefficient is split
/// symmetrically so real input stays real).
Eigen::ArrayXcd interpolate_1d(const Grid& grid, const Eigen::ArrayXcd& values, int refine);

}  // namespace rfpi::spectral
