#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sll/curvature.hpp"
#include "sll/surface.hpp"

namespace sll {

struct SingularData {
  std::vector<SurfacePoint> points;
  std::vector<double> alpha;
};

// Sources are ordered so that the first `ell` lie in {K > 0}.
struct ProblemData {
  SurfaceRef surface;
  FieldRef K;
  SingularData sing;
  int N = 1;
  int ell = 0;

  int m() const { return static_cast<int>(sing.alpha.size()); }
  double alpha_sum() const;
  double chi_alpha() const;
  double rho_geo() const;
};

// Validates and reorders; raises OnNodalLine if a source sits on {K = 0}.
ProblemData make_problem(SurfaceRef s, FieldRef K, SingularData sing, int N);
ProblemData split_ell(const ProblemData& d);

double chi_alpha(const SurfaceModel& s, const SingularData& d);
// {8 pi n + 8 pi sum_{i in I} (1 + alpha_i)} intersected with [0, cap], sorted.
std::vector<double> gamma_set(const std::vector<double>& alpha, double cap);
bool in_gamma(double rho, const std::vector<double>& alpha, double tol = 1e-9);
// Largest integer strictly below a.
int bracket_minus(double a);

double f_g(const SurfaceModel& s, const SurfacePoint& x);
double k_tilde(const ProblemData& d, const SurfacePoint& x);
// log K-tilde and its gradient at x (requires K(x) > 0).
struct LogKTilde {
  double v;
  Vec3 g;
};
LogKTilde log_k_tilde(const ProblemData& d, const SurfacePoint& x);

// Sign structure of K sampled on a triangulated tensor grid.
struct Component {
  int euler = 0;
  bool contractible = false;
  std::vector<long> vertices;
  SurfacePoint peak;  // vertex of largest |K| in the component
  double peak_value = 0;
  double area = 0;
};

struct ZeroCrossing {
  SurfacePoint x;
  double grad_norm = 0;
};

struct SignAnalysis {
  int n1 = 0, n2 = 0;
  double spacing = 0;  // largest edge length
  std::vector<SurfacePoint> vertices;
  std::vector<double> value;
  std::vector<Component> positive, negative;
  std::vector<int> label;  // component index per vertex; -1 outside, positive ids >= 0 and negative ids encoded as -2-k
  std::vector<ZeroCrossing> zeros;
  double max_grad = 0;
  double max_lap_log_k_positive = -1e300;

  double distance_to_zero_set(const SurfaceModel& s, const SurfacePoint& x) const;
  int component_of(const SurfaceModel& s, const SurfacePoint& x) const;  // positive component index or -1
};

SignAnalysis analyze_sign(const SurfaceModel& s, const CurvatureField& K, int n1, int n2);

struct ComponentInfo {
  int euler = 0;
  bool contractible = false;
  long vertices = 0;
  double area = 0;
  std::array<double, 2> peak{};
};

struct Verdict {
  std::string name;
  bool applies = false;
  std::string status;  // "applies", "fails", "needs_certificate"
  double epsilon = 0;
  double window_lo = 0, window_hi = 0;
  std::vector<std::string> reasons;
};

struct HypothesisReport {
  bool h1 = false, h2 = true, h3 = false, h4 = false;
  double h3_ratio = 0;   // min |grad K| on zero set / max |grad K|
  double h4_margin = 0;  // min distance of a source to the zero set, in grid spacings
  int ell = 0;
  int n_plus = 0;
  std::vector<ComponentInfo> components;
  bool has_noncontractible = false;
  std::optional<double> beta;
  bool alpha_positive_inside = false;
  bool alpha_exclusions_ok = false;
  bool split_inequality_ok = false;
  int split_rhs = 0;
  double chi_alpha = 0, rho_geo = 0;
  bool rho_in_gamma = false;
  std::vector<Verdict> verdicts;
  std::vector<std::string> notes;
};

// Raises GridTooCoarse if the component topology changes under one refinement.
HypothesisReport hypotheses(const ProblemData& d, int n1 = 0, int n2 = 0);

}  // namespace sll
