#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nmforge/lifting.hpp"
#include "nmforge/measure.hpp"
#include "nmforge/module.hpp"

namespace nmforge {

// Scenario
//
// Named objects loaded from a scenario document, cross-referenced by name.
// The format is described in docs/scenario-format.md.
struct Scenario {
  struct MapEntry {
    std::string source;
    std::string target;
    MeasurableMap map;
  };
  struct ChainEntry {
    std::string space;
    PartitionChain chain;
  };
  struct BundleEntry {
    std::string space;
    BundlePtr bundle;
    /// Named sections, in document order; together they span Test(V).
    std::vector<std::pair<std::string, Section>> sections;
  };
  struct FunctionEntry {
    std::string space;
    Function values;
  };
  struct LiftingEntry {
    std::string space;
    Lifting lifting;
  };
  struct DualSectionEntry {
    std::string bundle;
    /// When set, the section lives over the map's source with the duals of
    /// the fibers at phi(y).
    std::optional<std::string> map;
    Section values;
  };

  std::map<std::string, FiniteMeasureSpace> spaces;
  std::map<std::string, MapEntry> maps;
  std::map<std::string, ChainEntry> chains;
  std::map<std::string, BundleEntry> bundles;
  std::map<std::string, FunctionEntry> functions;
  std::map<std::string, LiftingEntry> liftings;
  std::map<std::string, DualSectionEntry> dual_sections;

  /// Throws InvalidScenario naming the missing reference.
  const FiniteMeasureSpace& space(const std::string& name) const;
  const MapEntry& map(const std::string& name) const;
  const ChainEntry& chain(const std::string& name) const;
  const BundleEntry& bundle(const std::string& name) const;
  const FunctionEntry& function(const std::string& name) const;
  const DualSectionEntry& dual_section(const std::string& name) const;

  /// Elements of a bundle's named sections with exponent p.
  std::vector<ModuleElement> elements(const std::string& bundle, const Exponent& p = Exponent()) const;
  /// The scenario's lifting on a space, or the default lifting.
  Lifting lifting_on(const std::string& space) const;
};

/// Throws InvalidScenario with the path of the offending field.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

// Random instances

struct SizeProfile {
  std::size_t max_points = 10;  // per space
  std::size_t max_dim = 4;
  std::size_t max_null = 8;     // over all spaces
  std::int64_t max_den = 64;
  std::int64_t coordinate_bound = 8;
};

/// A scenario document with spaces X, Y, a measure-preserving phi: Y -> X
/// (X weights are the fiber sums), bundle M over X with its sections,
/// fully refining chains cX, cY, functions on both spaces, a lifting lX and
/// a dual section omega over Y. Throws InvalidScenario for an empty profile.
std::string generate_scenario_text(std::uint64_t seed, const SizeProfile& profile = {});
Scenario generate_instance(std::uint64_t seed, const SizeProfile& profile = {});

}  // namespace nmforge
