#pragma once

#include <iosfwd>
#include <vector>

#include "brinkman/assembly.hpp"
#include "brinkman/eigensolver.hpp"

namespace brinkman {

/// Per-element squared indicator contributions. Facet terms of interior
/// facets are split: each adjacent element receives the half-weighted term.
struct IndicatorField {
  std::vector<double> volume;         // h_T^2 ||lambda u + nu Lap u - kappa u - grad p||^2
  std::vector<double> divergence;     // ||div u||^2
  std::vector<double> stress_jump;    // h_F/2 ||[(nu grad u - p I) n]||^2, interior facets
  std::vector<double> gamma2;         // h_F/2 ||(nu grad u - p I) n||^2, Gamma2 facets
  std::vector<double> velocity_jump;  // h_F^{-1}/2 ||nu [u]||^2, interior facets
  std::vector<double> gamma1;         // h_F^{-1}/2 ||nu u (x) n||^2, Gamma1 facets
  std::vector<double> total;          // eta_T^2
  double eta_sq = 0.0;                // sum of total in element order

  explicit IndicatorField(int num_elements = 0);
  int size() const { return static_cast<int>(total.size()); }
  double eta() const;
  /// Recomputes total and eta_sq from the named contributions.
  void accumulate();
};

struct ElementResidual {
  double volume = 0.0;
  double divergence = 0.0;
};

/// Volume and divergence terms of element `e`. `pair.u` and the first n_p
/// entries of `pair.p` are read in the DofMap layout of `degree`.
ElementResidual element_residual(const Mesh& mesh, int e, const EigenPair& pair, const PhysicalParams& params);

/// Adds all facet contributions to `field` (which must be sized to the mesh).
void facet_residuals(const Mesh& mesh, const EigenPair& pair, const PhysicalParams& params, IndicatorField& field);

IndicatorField compute_eta(const Mesh& mesh, const EigenPair& pair, const PhysicalParams& params);

/// |lambda_h - lambda_ref| / eta^2; infinite when eta = 0 and the error is not.
double effectivity(double lambda_ref, double lambda_h, double eta);

/// `element_id,eta_sq_volume,eta_sq_div,eta_sq_stress_jump,eta_sq_gamma2,eta_sq_vel_jump,eta_sq_gamma1,eta_sq_total`
void write_indicators_csv(std::ostream& os, const IndicatorField& field);

}  // namespace brinkman
