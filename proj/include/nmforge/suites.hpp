#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmforge/module.hpp"
#include "nmforge/scenario.hpp"

namespace nmforge {

/// One verdict. `context` names the scenario objects involved; a failure
/// carries a witness (point, section, set) that reproduces it.
struct Check {
  std::string name;
  std::string context;
  bool pass = true;
  std::string witness;
};

struct InstanceReport {
  /// "seed N" for generated instances, the file name otherwise.
  std::string instance;
  std::vector<Check> checks;
  std::size_t failures() const;
};

struct Report {
  std::string suite;
  std::vector<InstanceReport> instances;
  double seconds = 0;
  std::size_t checks() const;
  std::size_t failures() const;
  bool ok() const { return failures() == 0; }
};

struct SuiteOptions {
  /// Module exponent; the dual exponent is its conjugate.
  Exponent p = Exponent(2);
  /// Exponent of the weak* uniform bound; both p and q when unset.
  std::optional<Exponent> exponent;
  std::uint64_t seed = 1;
};

/// doob, module-axioms, pullback, dual, dual-of-pullback, lifting, diagram,
/// homloc, weakstar, all.
const std::vector<std::string>& suite_names();

/// Throws UnknownSuite.
std::vector<Check> run_checks(const std::string& suite, const Scenario& scenario, const SuiteOptions& options = {});

Report run_suite(const std::string& suite, const Scenario& scenario, const std::string& label,
                 const SuiteOptions& options = {});
/// Generated instances for seeds first..last inclusive, in seed order.
Report run_suite(const std::string& suite, std::uint64_t first, std::uint64_t last,
                 const SuiteOptions& options = {}, const SizeProfile& profile = {});

/// Header per instance, one line per failure, a total. Timing goes on the
/// last line only, so everything above it is deterministic.
std::string format_text(const Report& report, bool timing = true);
std::string format_json(const Report& report, bool timing = true);

}  // namespace nmforge
