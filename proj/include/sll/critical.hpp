#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sll/energy.hpp"

namespace sll {

struct SearchConfig {
  int multistarts = 16;         // random starts on top of the per-component starts
  double grad_tol = 1e-8;
  double trust_radius = 0.1;    // initial trust radius (geodesic length in product normal coordinates)
  double trust_max = 0.5;
  int max_iters = 200;
  std::uint64_t seed = 1;
  double M = 100.0;             // D = {Phi > -M} within M^+
  int curve_samples = 64;
  int minmax_steps = 30;        // ascent steps per sample in approx_minmax
  double tau = 1e-6;            // eigenvalue degeneracy threshold
};

enum class SearchMode { Min, Max, Any };

struct CriticalPointReport {
  Configuration config;
  double value = 0;
  double grad_norm = 0;
  std::vector<double> hessian_spectrum;  // ascending
  std::string classification;            // min / max / saddle / degenerate
  int index = 0;                         // number of negative eigenvalues
  bool stable = false;
  std::string reason;
  double a_value = 0;
  std::string a_sign;                    // + / - / inconclusive
};

// Empty result is valid. DomainEscape when every start left D before converging.
std::vector<CriticalPointReport> find_critical_points(const ProblemData& d, const SearchConfig& cfg, SearchMode mode,
                                                      const std::vector<Configuration>& extra_starts = {});
// NotCritical unless |grad Psi| < grad_tol.
CriticalPointReport classify(const ProblemData& d, const Configuration& xi, double grad_tol = 1e-8,
                             double tau = 1e-6);
// One Newton step on grad Psi = 0.
Configuration newton_polish(const ProblemData& d, const Configuration& xi);

// Same configuration up to permutation: max_j d(a_j, b_pi(j)) < tol for some pi.
bool same_up_to_permutation(const SurfaceModel& s, const Configuration& a, const Configuration& b, double tol = 1e-6);

// Greedy split N = sum N_i with 0 <= N_i <= 1 + [alpha_i]^-; empty if infeasible.
std::optional<std::vector<int>> feasible_split(int N, const std::vector<double>& alpha);

enum class RetractionCase { RayGenus0, TorusCurve, ContractibleCircles };
const char* case_name(RetractionCase c);
RetractionCase parse_case(const std::string& s);

// Closed curve sigma(t), t in [0,1), and a retraction P onto it expressed through its parameter.
struct Curve {
  std::function<SurfacePoint(double)> at;
  std::function<double(const SurfacePoint&)> retract;  // parameter of P(x)
  int source = -1;       // ContractibleCircles: index of the centre source
  double radius = 0;     // circle radius (geodesic or chart)
  SurfacePoint project(const SurfacePoint& x) const { return at(retract(x)); }
};

struct MinMaxSetup {
  RetractionCase kind = RetractionCase::ContractibleCircles;
  double M = 100;
  int curve_samples = 64;
  std::vector<Curve> curves;        // one per point
  std::vector<double> base_params;  // xi^0 in curve parameters
  Configuration base;
  std::vector<int> split;           // N_i per source (contractible case)
  std::vector<double> cone_angle;   // theta_i per source (contractible case)
  std::vector<std::string> notes;

  Configuration at(const std::vector<double>& t) const;
  bool in_open_set(const SurfaceModel& s, const Configuration& xi) const;  // pairwise d > 1/M
  bool in_D(const ProblemData& d, const Configuration& xi) const;
};

MinMaxSetup build_retraction(const ProblemData& d, RetractionCase c, const SearchConfig& cfg);

struct MinMaxResult {
  double psi_star = 0;
  Configuration witness;
  double boundary_gap = 0;
  double min_boundary = 0;       // min over B_0 of Psi
  double min_identity = 0;       // min over B of Psi before deformation
  long samples = 0;
  long boundary_samples = 0;
  bool b_in_D = false;
  bool intersection_found = false;  // a deformed sample retracts onto xi^0 within curve resolution
  double intersection_distance = 0; // best parameter distance to xi^0 (sup norm)
  std::vector<double> psi_star_history;  // min after each ascent sweep
};

MinMaxResult approx_minmax(const ProblemData& d, const MinMaxSetup& setup, const SearchConfig& cfg);

}  // namespace sll
