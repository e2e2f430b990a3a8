#include "rfpi/spectral.hpp"

#include <unsupported/Eigen/FFT>

namespace rfpi::spectral {

namespace {

Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

// Transforms every line of one axis; `inverse_dir` selects the direction.
void transform_axis(const Grid& grid, Eigen::ArrayXcd& values, int axis, bool inverse_dir) {
  auto& fft = engine();
  const int n = grid.points(axis);
  thread_local std::vector<Complex> in, out;
  in.resize(n);
  out.resize(n);

  if (grid.dim() == 1) {
    std::copy(values.data(), values.data() + n, in.begin());
    if (inverse_dir) fft.inv(out.data(), in.data(), n); else fft.fwd(out.data(), in.data(), n);
    std::copy(out.begin(), out.end(), values.data());
    return;
  }

  const int n0 = grid.points(0);
  const int n1 = grid.points(1);
  if (axis == 1) {
    for (int i0 = 0; i0 < n0; ++i0) {
      Complex* row = values.data() + Eigen::Index(i0) * n1;
      std::copy(row, row + n1, in.begin());
      if (inverse_dir) fft.inv(out.data(), in.data(), n1); else fft.fwd(out.data(), in.data(), n1);
      std::copy(out.begin(), out.end(), row);
    }
  } else {
    for (int i1 = 0; i1 < n1; ++i1) {
      for (int i0 = 0; i0 < n0; ++i0) in[i0] = values[Eigen::Index(i0) * n1 + i1];
      if (inverse_dir) fft.inv(out.data(), in.data(), n0); else fft.fwd(out.data(), in.data(), n0);
      for (int i0 = 0; i0 < n0; ++i0) values[Eigen::Index(i0) * n1 + i1] = out[i0];
    }
  }
}

}  // namespace

void forward(const Grid& grid, Eigen::ArrayXcd& values) {
  for (int a = grid.dim() - 1; a >= 0; --a) transform_axis(grid, values, a, false);
}

void inverse(const Grid& grid, Eigen::ArrayXcd& values) {
  for (int a = 0; a < grid.dim(); ++a) transform_axis(grid, values, a, true);
}

Eigen::ArrayXcd derivative_multiplier(const Grid& grid, int axis, int order) {
  const int n = grid.points(axis);
  const auto& k = grid.wavenumbers(axis);
  Eigen::ArrayXcd m(grid.size());
  for (Eigen::Index f = 0; f < grid.size(); ++f) {
    const int i = grid.unflatten(f)[axis];
    if (order % 2 == 1 && n % 2 == 0 && i == n / 2) {
      m[f] = 0.0;
    } else {
      m[f] = std::pow(kI * k[i], order);
    }
  }
  return m;
}

Eigen::ArrayXcd apply_multiplier(const Grid& grid, const Eigen::ArrayXcd& values,
                                 const Eigen::ArrayXcd& multiplier) {
  Eigen::ArrayXcd v = values;
  forward(grid, v);
  v *= multiplier;
  inverse(grid, v);
  return v;
}

Eigen::ArrayXcd derivative(const Grid& grid, const Eigen::ArrayXcd& values, int axis, int order) {
  if (axis < 0 || axis >= grid.dim()) throw Error("spectral derivative: axis out of range");
  if (order < 0) throw Error("spectral derivative: negative order");
  if (order == 0) return values;
  return apply_multiplier(grid, values, derivative_multiplier(grid, axis, order));
}

Eigen::ArrayXcd interpolate_1d(const Grid& grid, const Eigen::ArrayXcd& values, int refine) {
  if (grid.dim() != 1) throw Error("interpolate_1d: grid must be one-dimensional");
  if (refine < 1) throw Error("interpolate_1d: refine must be >= 1");
  const int n = grid.points(0);
  const Eigen::Index m = Eigen::Index(n) * refine;
  Eigen::ArrayXcd c = values;
  forward(grid, c);

  std::vector<Complex> padded(m, Complex(0.0));
  const int half = n / 2;
  if (n % 2 == 0) {
    for (int i = 0; i < half; ++i) padded[i] = c[i];
    for (int i = half + 1; i < n; ++i) padded[m - (n - i)] = c[i];
    if (refine > 1) {
      padded[half] += 0.5 * c[half];
      padded[m - half] += 0.5 * c[half];
    } else {
      padded[half] = c[half];
    }
  } else {
    for (int i = 0; i <= half; ++i) padded[i] = c[i];
    for (int i = half + 1; i < n; ++i) padded[m - (n - i)] = c[i];
  }

  std::vector<Complex> out(m);
  engine().inv(out.data(), padded.data(), m);
  Eigen::ArrayXcd result(m);
  for (Eigen::Index i = 0; i < m; ++i) result[i] = out[i] * static_cast<double>(refine);
  return result;
}

}  // namespace rfpi::spectral
