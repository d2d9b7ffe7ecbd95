#pragma once

#include "madmm/solver.hpp"

#include <string>
#include <vector>

namespace madmm {

/// One definiteness hypothesis evaluated on its dense assembly.
struct ConditionEntry {
  std::string name;      ///< assembled operator, e.g. "Q11 + sigma AA^* + S"
  std::string clause;    ///< stable identifier of the hypothesis
  bool strict = true;    ///< true: > 0 required, false: >= 0
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  /// lambda_min minus the pass threshold; negative means the entry fails.
  double margin = 0.0;
  Definiteness verdict = Definiteness::indefinite;
  bool passed = false;
  /// Eigenvector of lambda_min; names the offending direction on failure.
  Vector min_eigenvector;
};

struct ConditionReport {
  std::string title;
  bool applicable = true;
  /// True when the dense assembly would exceed the dimension cap.
  bool unverified = false;
  bool passed = false;
  std::vector<ConditionEntry> entries;
  std::vector<std::string> notes;

  const ConditionEntry* find(const std::string& clause) const;
};

struct ConditionOptions {
  Index cap = kDefaultMaterializeCap;
  DefinitenessThresholds thresholds;
};

/// Evaluates one symmetric matrix against a strict or semidefinite test.
ConditionEntry evaluate_condition(std::string name, std::string clause,
                                  const Matrix& g, bool strict,
                                  const DefinitenessThresholds& t = {});

/// Base conditions plus the sufficient form for tau in (0, 1].
ConditionReport check_theorem1_case_i(const Solver& solver,
                                      const ConditionOptions& options = {});
/// M >= 0, the two quarter-Q block conditions, and the sufficient form.
ConditionReport check_theorem1_case_ii(const Solver& solver,
                                       const ConditionOptions& options = {});
/// O1 > 0 for tau <= 1; M >= 0 and O2 > 0 for the large-step branch. With
/// tau <= 1 both branches are evaluated and either one suffices.
ConditionReport check_theorem2(const Solver& solver,
                               const ConditionOptions& options = {});
/// The block conditions for quadratically coupled objectives (eta = 0).
ConditionReport check_remark2_quadratic(const Solver& solver,
                                        const ConditionOptions& options = {});

struct ConvergenceVerdict {
  bool passed = false;
  bool unverified = false;
  std::string summary;
};

/// Passes when case (i) verifies with tau <= 1 or case (ii) verifies.
ConvergenceVerdict convergence_conditions(const Solver& solver,
                                          const ConditionOptions& options = {});

}  // namespace madmm
