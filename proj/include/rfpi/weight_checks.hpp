#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "rfpi/weights.hpp"

namespace rfpi {

using KeyValues = std::vector<std::pair<std::string, double>>;

/// "key=value" lines, 17 significant digits.
std::string format_key_values(const KeyValues& kv);

/// Sampled check of the weight assumptions on a lattice and a set of times.
struct AssumptionReport {
  double min_margin = 0.0;              // min eig(W - (w - C_W) I)
  double max_hermiticity_defect = 0.0;
  std::array<double, 2> growth_ratio{};  // sup ||d^a W|| / (1 + w), |a| = 1, 2
  std::array<double, 2> linear_ratio{};  // sup ||d^a W|| / <x>,     |a| = 1, 2
  double time_modulus_ratio = 0.0;       // sup ||W(t)-W(s)|| <x>^-2 / sigma(|t-s|)
  bool pass = false;                     // min_margin >= -1e-8 and Hermitian

  KeyValues key_values() const;
};

/// Centered differences with step fd_step (the usual choice is the grid
/// spacing / 8); derivative norms are operator norms.
AssumptionReport verify_assumption_2d(const WeightSpec& w, const Grid& grid, const std::vector<double>& times,
                                      double fd_step);

struct MultislitReport {
  double min_value = 0.0;                 // min W
  double min_hole_margin = 0.0;           // min W - min_j h1(x'-a'_j) k(x_d)
  std::array<double, 2> c_alpha_beta{};   // sup |d^a W| / <x'>, |a| = 1, 2
  double c_star = 0.0;                    // sup <x'> k(x_d) / (1 + W)
  bool pass = false;                      // min_value >= -1e-10, margin >= -1e-8

  KeyValues key_values() const;
};

/// Requires subtract_offset == false and scale == 1.
MultislitReport verify_multislit_bounds(const MultislitParams& params, const Grid& grid, double fd_step);

}  // namespace rfpi
