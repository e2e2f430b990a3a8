#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace rfpi {

/// Matrix exponential by scaling and squaring with the [13/13] Pade
/// approximant. Works for non-normal input. Template over any dense
/// square Eigen expression.
template <typename Derived>
typename Derived::PlainObject expm(const Eigen::MatrixBase<Derived>& a_in) {
  using Plain = typename Derived::PlainObject;
  using Scalar = typename Derived::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  const Plain a0 = a_in;
  eigen_assert(a0.rows() == a0.cols());
  const Eigen::Index n = a0.rows();
  if (n == 1) {
    Plain r(1, 1);
    r(0, 0) = std::exp(a0(0, 0));
    return r;
  }

  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr Real theta13 = Real(5.371920351148152);

  const Real norm1 = a0.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
  const Plain a = a0 * Scalar(std::ldexp(Real(1), -squarings));

  const Plain ident = Plain::Identity(n, n);
  const Plain a2 = a * a;
  const Plain a4 = a2 * a2;
  const Plain a6 = a4 * a2;
  const Plain u_inner = a6 * (Scalar(b[13]) * a6 + Scalar(b[11]) * a4 + Scalar(b[9]) * a2) + Scalar(b[7]) * a6 +
                        Scalar(b[5]) * a4 + Scalar(b[3]) * a2 + Scalar(b[1]) * ident;
  const Plain u = a * u_inner;
  const Plain v = a6 * (Scalar(b[12]) * a6 + Scalar(b[10]) * a4 + Scalar(b[8]) * a2) + Scalar(b[6]) * a6 +
                  Scalar(b[4]) * a4 + Scalar(b[2]) * a2 + Scalar(b[0]) * ident;
  Plain r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = (r * r).eval();
  return r;
}

/// ||M - M^*|| / max(||M||, tiny), Frobenius norms.
template <typename Derived>
typename Eigen::NumTraits<typename Derived::Scalar>::Real hermiticity_defect(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  const Real scale = std::max(m.norm(), std::numeric_limits<Real>::min());
  return (m - m.adjoint()).norm() / scale;
}

/// exp(factor * H) for Hermitian H via its eigendecomposition.
template <typename Derived>
typename Derived::PlainObject hermitian_exp(const Eigen::MatrixBase<Derived>& h,
                                            typename Eigen::NumTraits<typename Derived::Scalar>::Real factor) {
  using Plain = typename Derived::PlainObject;
  if (h.rows() == 1) {
    Plain r(1, 1);
    r(0, 0) = std::exp(factor * std::real(h(0, 0)));
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Plain> es(h);
  const typename Eigen::SelfAdjointEigenSolver<Plain>::RealVectorType ev = (factor * es.eigenvalues().array()).exp().matrix();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

/// Largest singular value.
template <typename Derived>
typename Eigen::NumTraits<typename Derived::Scalar>::Real operator_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<typename Derived::PlainObject> svd(m);
  return svd.singularValues()(0);
}

/// Smallest eigenvalue of a Hermitian matrix.
template <typename Derived>
typename Eigen::NumTraits<typename Derived::Scalar>::Real min_eigenvalue(const Eigen::MatrixBase<Derived>& h) {
  if (h.rows() == 1) return std::real(h(0, 0));
  Eigen::SelfAdjointEigenSolver<typename Derived::PlainObject> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Spectral radius of a Hermitian matrix (its operator norm).
template <typename Derived>
typename Eigen::NumTraits<typename Derived::Scalar>::Real hermitian_norm(const Eigen::MatrixBase<Derived>& h) {
  if (h.rows() == 1) return std::abs(h(0, 0));
  Eigen::SelfAdjointEigenSolver<typename Derived::PlainObject> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace rfpi
