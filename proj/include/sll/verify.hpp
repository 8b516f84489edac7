#pragma once

#include <string>
#include <vector>

#include "sll/energy.hpp"

namespace sll {

// Planar Liouville profile log(8 d^2 / (d^2 + r^2)^2).
double bubble_profile(double delta, double r);

// v = sum_j b_j with b_j = 8 pi G(., xi_j) outside 2 r_c and, inside,
// A_j - 2 (1 - chi) log rho^2 - 2 chi log(rho^2 + delta_j^2): a planar bubble in the chordal
// (sphere) or flat (torus) radius rho, glued by the cutoff chi to 8 pi G. A_j is 8 pi times the
// regular part of G, so the match is exact outside the gluing annulus.
struct BubbleAnsatz {
  SurfaceRef surface;
  Configuration centers;
  std::vector<double> delta;
  double r_c = 0;
  ScalarField field;  // v on the model grid

  double value(const SurfacePoint& x) const;
  double laplacian(const SurfacePoint& x) const;
};

// delta_j^2 proportional to K~(xi_j) exp(8 pi h + 8 pi sum_{k != j} G), so every ball carries the same mass.
std::vector<double> balanced_scales(const ProblemData& d, const Configuration& xi, double delta);

// OutOfDomain off M^+; ScaleTooLarge when some delta_j >= 0.1 * injectivity radius.
BubbleAnsatz assemble_bubble(const ProblemData& d, const Configuration& xi, const std::vector<double>& delta);

struct MassReport {
  std::vector<double> masses;
  double total = 0;
  double z = 0;  // integral of K~ e^v
};

// BallsOverlap when two balls meet; balls leaving {K > 0} are reported through OutOfDomain.
MassReport concentration_measure(const ProblemData& d, const BubbleAnsatz& v, double rho, double r);

struct ResidualReport {
  double rho = 0;
  double l2_residual = 0;
  double dual_residual = 0;  // spectral (-Delta)^{-1/2} surrogate on the grid
  std::vector<double> masses;
  double total_mass = 0;
  double gauss_bonnet_gap = 0;
  double j_rho = 0;
  double z = 0;
};

// DomainX when the integral of K~ e^v is not positive. Masses use balls of radius r (r_c when r <= 0).
ResidualReport pde_residual(const ProblemData& d, const BubbleAnsatz& v, double rho, double r = 0.0);
// Grid version with a spectral Laplacian: v and K~ sampled on the model grid.
ResidualReport pde_residual_grid(const ScalarField& v, const ScalarField& ktilde, double rho);
// J_rho on the composite quadrature; `shift` adds a constant to v.
double j_rho(const ProblemData& d, const BubbleAnsatz& v, double rho, double shift = 0.0);

struct GaussBonnetReport {
  double gap = 0;
  double target = 0;       // 4 pi chi(Sigma, alpha)
  double integral = 0;     // 2 * integral of K e^u
  double shift = 0;        // constant added to v by the normalization
};

// NormalizationFailed when chi(Sigma, alpha) <= 0 or the integral of K~ e^v is not positive.
GaussBonnetReport gauss_bonnet_check(const ProblemData& d, const BubbleAnsatz& v);

}  // namespace sll
