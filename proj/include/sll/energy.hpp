#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sll/problem.hpp"

namespace sll {

struct Configuration {
  std::vector<SurfacePoint> xi;
  int size() const { return static_cast<int>(xi.size()); }
};

struct DomainFlags {
  bool in_M = false;       // off the sources, no collisions
  bool in_M_plus = false;  // additionally every point in {K > 0}
  double min_pair = 0;     // smallest pairwise distance
  double min_source = 0;   // smallest distance to a source
  double min_K = 0;
};

DomainFlags domain_flags(const ProblemData& d, const Configuration& xi);

// Sum over j of h(xi_j, xi_j) and friends; `pair` is the ordered sum over j != k of G.
struct EnergyTerms {
  double h_sum = 0;
  double log_k_sum = 0;
  double f_sum = 0;
  double inner_sources = 0;  // sum_{i <= ell} alpha_i sum_j G(xi_j, p_i)
  double outer_sources = 0;  // sum_{i > ell} alpha_i sum_j G(xi_j, p_i)
  double pair = 0;
};
EnergyTerms energy_terms(const ProblemData& d, const Configuration& xi, bool need_log_k = true);

double psi(const ProblemData& d, const Configuration& xi);
double phi(const ProblemData& d, const Configuration& xi);
// Requires every s_i in [lo, hi]; SOutOfBox otherwise.
double d_s(const ProblemData& d, const Configuration& xi, const std::vector<double>& s,
           double lo = -1.0, double hi = std::numeric_limits<double>::infinity());
double a_fun(const ProblemData& d, const Configuration& xi);

// F = sum h + (w_log/4pi) sum log K + (1/4pi) sum f_g - sum_i s_i sum_j G(xi_j,p_i) + sigma sum_{j!=k} G.
struct Functional {
  double w_log = 1.0;
  double sigma = 1.0;
  std::vector<double> s;

  static Functional psi(const ProblemData& d) { return {1.0, 1.0, d.sing.alpha}; }
  static Functional phi(const ProblemData& d) { return {1.0, -1.0, d.sing.alpha}; }
  static Functional d_s(std::vector<double> s) { return {0.0, 1.0, std::move(s)}; }
};

double evaluate(const ProblemData& d, const Functional& f, const Configuration& xi);
// Riemannian gradient per point (ambient tangent vectors).
std::vector<Vec3> gradient(const ProblemData& d, const Functional& f, const Configuration& xi);

// Orthonormal frames per point, optionally rotated by per-point angles.
std::vector<TangentFrame> frames(const SurfaceModel& s, const Configuration& xi,
                                 const std::vector<double>& angles = {});
Eigen::VectorXd to_coords(const std::vector<Vec3>& g, const std::vector<TangentFrame>& fr);
Configuration step(const SurfaceModel& s, const Configuration& xi, const std::vector<TangentFrame>& fr,
                   const Eigen::VectorXd& v);

std::vector<Vec3> grad_psi(const ProblemData& d, const Configuration& xi);
// Finite differences of the analytic gradient in product normal coordinates.
Eigen::MatrixXd hessian(const ProblemData& d, const Functional& f, const Configuration& xi,
                        const std::vector<TangentFrame>& fr, double h = 1e-4);
Eigen::MatrixXd hessian_psi(const ProblemData& d, const Configuration& xi, const std::vector<double>& angles = {});

struct ClassCertificate {
  char sign = '+';
  double r = 0;
  double positivity_min = 0;  // inf of min_j K(xi_j) over B_r
  bool positivity_ok = false;
  double M = 0, m = 0;        // M^{+/-}, m^{+/-}
  double log_lhs = 0, log_rhs = 0;
  double gap_margin = 0;      // rhs - lhs of the gap inequality
  std::string gap_status;     // pass / fail / inconclusive
  double laplacian_extreme = 0;
  double laplacian_margin = 0;
  bool laplacian_ok = false;
  std::string verdict;        // member / not_member / inconclusive
};

ClassCertificate class_membership(const ProblemData& d, const Configuration& xibar, double r, double alpha_lo,
                                  double alpha_hi, char sign, std::uint64_t seed = 7, int starts = 32);

}  // namespace sll
