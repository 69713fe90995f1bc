#pragma once

#include <string>
#include <vector>

#include "san/observed.hpp"
#include "san/projection.hpp"

namespace san {

/// Audit record of one backward step.
struct StepDiagnostics {
  std::string variable;
  int position = 0;
  double pi = 0.0;  ///< g(M_j = 1)
  double c = 0.0;   ///< (1 - pi) / pi
  bool skipped = false;  ///< pi = 0: never missing, no projection
  ProbTable reference;   ///< g(x, y*_{<j}, y_{>=j} | M_j = 0)
  ConstraintSet constraints;
  ProjectionResult projection;
  double decomposition_residual = 0.0;
};

struct Reconstruction {
  ProbTable joint;  ///< g(x, y) over the study space
  std::vector<std::string> steps;
  /// g(M_j = 1 | x, y*_{<j}, y_{>=j}) over the state space of step j.
  std::vector<CellFunction> mechanisms;
  ProbTable full;  ///< g(x, y, m), layout of `full_data_space`
  std::vector<StepDiagnostics> diagnostics;
};

struct IdentifyOptions {
  ProjectionOptions projection;
  bool residuals = true;  ///< compute the per-step decomposition residual
};

/// Backward construction of the full-data law from the observed-data law
/// and auxiliary moments.
///
/// `observed` has X plain, Y variables that can go missing materialized and
/// always-observed Y plain. `ordering` lists the Y variables (default: the
/// space's Y order); always-observed ones are moved last. The moments may
/// have any Y scope: the functions of Y_{>=j} in their span, with the
/// implied targets, are used at step j.
Reconstruction reconstruct_algorithm1(const ObservedTable& observed,
                                      const std::vector<MomentConstraint>& moments, Link link,
                                      std::vector<std::string> ordering = {},
                                      const IdentifyOptions& options = {});

/// Basis of the functions of `keep` in the span of `moments`, over the Y
/// space `y_space`, with their implied targets. The basis is orthonormal.
std::vector<MomentConstraint> span_restricted_moments(const VariableSpace& y_space,
                                                      const std::vector<MomentConstraint>& moments,
                                                      const std::vector<std::string>& keep,
                                                      const std::string& label);

struct EquivalenceReport {
  double max_obs_gap = 0.0;
  double max_moment_gap = 0.0;
};

/// Sup-norm gaps between the observed-data laws and the moments of two
/// full-data tables on the same space.
EquivalenceReport observational_equivalence(const ProbTable& a, const ProbTable& b,
                                            const std::vector<MomentConstraint>& moments);

}  // namespace san
