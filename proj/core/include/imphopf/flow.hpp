#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "imphopf/equilibria.hpp"
#include "imphopf/normalform.hpp"
#include "imphopf/ode.hpp"

namespace imphopf {

enum class TimeDirection { Forward, Backward };

enum class StopReason { Completed, Escaped, Settled };

/// Accepted steps of an integration. For backward integrations `times`
/// holds the elapsed reversed time, so it is increasing in both directions.
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<State> rates;  ///< d(state)/d(times) at each sample
  ModelParams params;
  TimeDirection direction = TimeDirection::Forward;
  StopReason stop = StopReason::Completed;

  /// Cubic Hermite interpolation between accepted steps.
  State at(double t) const;
};

struct IntegrateOptions {
  Tolerances tol;
  TimeDirection direction = TimeDirection::Forward;
  double escape_radius = std::numeric_limits<double>::infinity();
  /// Stop early when |rhs| drops below this value (0 disables).
  double settle_speed = 0.0;
  double max_step = std::numeric_limits<double>::infinity();
};

/// Throws std::invalid_argument for t_end <= 0 and StiffnessFailure on step
/// underflow.
Trajectory integrate(const ModelParams& params, State initial, double t_end, Tolerances tol = {});
Trajectory integrate(const ModelParams& params, State initial, double t_end, const IntegrateOptions& opt);

enum class CycleStability { Stable, Unstable };

struct LimitCycle {
  std::vector<State> samples;  ///< closed loop in forward-time order
  std::vector<double> times;   ///< forward time from samples.front()
  double period = 0.0;
  CycleStability stability = CycleStability::Stable;
  int winding = 0;                ///< turns around the origin per period
  double floquet_magnitude = 0.0; ///< nontrivial multiplier, forward time
  State section_point;
  double section_angle = 0.0;
  State section_center;
};

enum class CycleSearchStatus { Found, FixedPoint, Escaped, HorizonExceeded };

enum class SectionCenter { Origin, Fixed, Auto };

struct CycleOptions {
  double section_angle = 0.0;
  SectionCenter center_mode = SectionCenter::Origin;
  State center;                ///< used with SectionCenter::Fixed
  double transient = 500.0;
  double max_time = 1e4;
  double match_tol = 1e-9;
  int history = 8;
  Tolerances tol;
  TimeDirection direction = TimeDirection::Forward;
  double escape_radius = 1e3;
  /// Tail speed below which a NotFound result is reported as FixedPoint.
  double fixed_point_speed = 1e-6;
  /// Cycles with a larger period are reported as HorizonExceeded.
  double max_period = std::numeric_limits<double>::infinity();
  bool compute_floquet = true;
};

struct CycleSearch {
  CycleSearchStatus status = CycleSearchStatus::HorizonExceeded;
  std::optional<LimitCycle> cycle;
  State tail;
  double tail_speed = 0.0;
  double time_used = 0.0;

  bool found() const { return status == CycleSearchStatus::Found; }
};

/// Integrates past a transient, then records crossings of the ray at
/// `section_angle` from the section center. A cycle is declared when the
/// latest crossing agrees with one of the previous `history` crossings of
/// the same orientation to `match_tol`. Backward searches find unstable
/// cycles; the returned cycle is expressed in forward time.
CycleSearch find_limit_cycle(const ModelParams& params, State seed, const CycleOptions& opt = {});

/// Multiplier of the return map of the ray section at a point of `cycle`,
/// by central differences of the crossing radius.
double floquet_multiplier(const ModelParams& params, const LimitCycle& cycle, Tolerances tol = {});

struct ReturnPoint {
  double time = 0.0;
  double rho = 0.0;
  State point;
};

/// First return to the ray {center + rho (cos angle, sin angle), rho > 0}
/// of the orbit started on it at radius rho0, crossing in the same
/// orientation as at the start. Empty if no return before t_max.
std::optional<ReturnPoint> first_return(const ModelParams& params, State center, double angle, double rho0,
                                        double t_max, Tolerances tol = {});

/// Winding number of a closed polygon around a point (0 if outside).
int winding_number(const std::vector<State>& loop, State point);

/// Integral of the divergence of rhs along one period; exp of this is the
/// nontrivial Floquet multiplier of a planar cycle.
double divergence_integral(const ModelParams& params, const LimitCycle& cycle);

struct Separatrix {
  int saddle = 0;     ///< index into Portrait::equilibria
  bool unstable = true;  ///< unstable (forward) or stable (backward) manifold
  int sign = 1;
  Trajectory path;
};

struct PortraitOptions {
  int ring_angles = 8;
  std::vector<double> ring_radii;  ///< empty: chosen from the equilibria
  int background_grid = 0;         ///< n x n trajectories; 0 disables
  double background_extent = 0.0;  ///< half width; 0: chosen automatically
  double background_time = 50.0;
  double separatrix_offset = 1e-6;
  double separatrix_time = 200.0;
  bool unstable_cycles = true;
  CycleOptions cycle;
  int jobs = 1;
};

struct Portrait {
  std::vector<Equilibrium> equilibria;
  std::vector<LimitCycle> cycles;
  std::vector<Separatrix> separatrices;
  std::vector<Trajectory> background;

  int count_cycles(CycleStability s) const;
};

/// Equilibria, separatrices, limit cycles from a ring of seeds (plus seeds
/// around each equilibrium) and optional background trajectories.
/// Deterministic for fixed options regardless of `jobs`.
Portrait portrait(const ModelParams& params, const PortraitOptions& opt = {});

/// True if the two loops are the same closed curve to within tol.
bool same_cycle(const LimitCycle& a, const LimitCycle& b, double tol = 1e-4);

}  // namespace imphopf
