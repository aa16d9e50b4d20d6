#pragma once

#include <array>
#include <string>
#include <vector>

#include "imphopf/normalform.hpp"

namespace imphopf {

enum class StabilityClass { StableNode, StableFocus, Saddle, UnstableNode, UnstableFocus, NonHyperbolic };

enum class LabelKind { P0, Pplus, Pminus, PplusStar, PminusStar, Indexed };

struct EquilibriumLabel {
  LabelKind kind = LabelKind::Indexed;
  int index = 0;

  std::string str() const;
  friend bool operator==(const EquilibriumLabel&, const EquilibriumLabel&) = default;
};

struct Equilibrium {
  State position;
  double T = 0.0;
  double D = 0.0;
  double Q = 0.0;  ///< T^2 - 4D
  std::array<Complex, 2> eigenvalues{};
  StabilityClass cls = StabilityClass::NonHyperbolic;
  EquilibriumLabel label;
  /// +1 / -1 for the larger / smaller root r^2 of the branch polynomial, 0
  /// for P0 and for merged (double) roots.
  int branch = 0;
  /// Set when two roots coincide: a double root r^2 on a saddle-node
  /// boundary, or r^2 = 0 coalescing with P0.
  bool merged = false;
};

inline constexpr double kClassifyTol = 1e-9;

std::string to_string(StabilityClass c);

/// Class from trace and determinant; see kClassifyTol.
StabilityClass classify_invariants(double T, double D, double tol = kClassifyTol);

/// Newton iteration on rhs = 0 using the analytic Jacobian. Steps are only
/// accepted while they reduce the residual, so a point that is already exact
/// is returned unchanged.
State newton_polish(const ModelParams& params, State guess, int max_iter = 50);

/// Polishes `position` and fills T, D, Q, eigenvalues and class. Throws
/// std::invalid_argument if |rhs(position)| > 1e-6.
Equilibrium classify(const ModelParams& params, State position);

/// Positive roots rho = r^2 of the branch polynomial
///     |mu + i nu - c rho|^2 = epsilon^2 rho^(p-1)
/// (multiplied through by rho for the constant term). Sorted ascending.
/// For ZmResidual(m >= 5) only roots near L are kept (the far roots lie at
/// r ~ epsilon^(-1/(m-4)), outside the domain of the local normal form).
std::vector<double> branch_roots(const ModelParams& params);

/// The solvers below accept any epsilon > 0 (not only the normalized
/// epsilon = 1) and return equilibria of `params` as given.
std::vector<Equilibrium> fixed_points_const(const ModelParams& params);
std::vector<Equilibrium> fixed_points_z2(const ModelParams& params);
/// Kinds Mixed, Quadratic and ZmResidual(3).
std::vector<Equilibrium> fixed_points_quadratic(const ModelParams& params);
/// ZmResidual(m), m >= 4.
std::vector<Equilibrium> fixed_points_zm(const ModelParams& params);

/// Dispatches on params.kind. With epsilon = 0 (or kind None) only P0 is
/// returned; the circle of equilibria on L is not enumerated.
std::vector<Equilibrium> fixed_points(const ModelParams& params);

}  // namespace imphopf
