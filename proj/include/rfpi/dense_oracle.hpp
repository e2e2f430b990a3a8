#pragma once

#include "rfpi/propagator.hpp"

namespace rfpi {

/// Largest number of unknowns (grid points times l) the dense oracle accepts.
inline constexpr Eigen::Index kDenseOracleLimit = 8192;

/// Dense matrix of a spectral operator on one scalar grid function, built by
/// applying the operator to every unit vector.
Eigen::MatrixXcd dense_spectral_matrix(const Grid& grid, const Eigen::ArrayXcd& multiplier);

/// Full generator M(t) with u_t = M(t) u for the stacked unknown vector
/// (grid point major, spin fastest). Kept for inspection and small tests.
Eigen::MatrixXcd dense_generator(const Grid& grid, const Potential& p, const SpinTerm& hs, const WeightSpec& w,
                                 double t);

struct DenseStats {
  int accepted = 0;
  int rejected = 0;
};

/// Adaptive Dormand-Prince 5(4) integration of u_t = M(t) u with the
/// derivative operators as dense matrices. Local error per step is kept
/// below `tolerance` (mixed absolute/relative, max norm).
SpinorField dense_evolve(const SpinorField& f, const Potential& p, const SpinTerm& hs, const WeightSpec& w,
                         double t0, double t1, double tolerance, DenseStats* stats = nullptr);

}  // namespace rfpi
