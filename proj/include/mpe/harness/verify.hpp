#pragma once

#include <string>
#include <vector>

#include "mpe/value_tables.hpp"

namespace mpe::harness {

enum class Suite { oracles, optimality, conditions, all };

std::string to_string(Suite s);
Suite suite_from_string(const std::string& name);

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  const CheckResult& find(const std::string& name) const;
  std::string render() const;
};

// Individual checks. A fault corrupts the dynamic-programming side only; the
// enumeration oracles stay exact.
CheckResult check_unbiasedness(FormulaFault fault = FormulaFault::none);
CheckResult check_value_tables(FormulaFault fault = FormulaFault::none);
CheckResult check_pdis_variance(FormulaFault fault = FormulaFault::none);
CheckResult check_q_hat_identity(FormulaFault fault = FormulaFault::none);
CheckResult check_fqe_exactness(FormulaFault fault = FormulaFault::none);
CheckResult check_fqe_ladder();
CheckResult check_optimality(FormulaFault fault = FormulaFault::none);
CheckResult check_lemma_conditions();
CheckResult check_theorem_conditions(FormulaFault fault = FormulaFault::none);
CheckResult check_identical_policies(FormulaFault fault = FormulaFault::none);

VerifyReport run_verify(Suite suite, FormulaFault fault = FormulaFault::none);

}  // namespace mpe::harness
