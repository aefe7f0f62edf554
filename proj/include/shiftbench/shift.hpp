#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "shiftbench/manifest.hpp"

namespace shiftbench {

// Scenario ids follow the benchmark table: 1 none, 2 rain, 3 fog, 4 snow, 5 dust.
enum class ShiftName { none = 1, rain = 2, fog = 3, snow = 4, dust = 5 };

std::string_view to_string(ShiftName name) noexcept;
ShiftName parse_shift_name(std::string_view text);
ShiftName shift_name_for_id(int id);

struct RealInterval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const RealInterval&, const RealInterval&) = default;
};

struct IntInterval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  friend bool operator==(const IntInterval&, const IntInterval&) = default;
};

struct ShiftScenario {
  int id = 1;
  ShiftName name = ShiftName::none;
  double boost_factor = 2.0;
  // Per-class affine jitter a*count + b applied to the non-boosted classes.
  RealInterval a_range{0.6, 1.0};
  IntInterval b_range{0, 0};

  // Absent for the no-shift scenario, otherwise the class named by the scenario.
  std::optional<ClassLabel> boosted_class() const;

  friend bool operator==(const ShiftScenario&, const ShiftScenario&) = default;
};

void validate(const ShiftScenario& scenario);

ShiftScenario make_scenario(ShiftName name, double boost_factor = 2.0,
                            RealInterval a_range = {0.6, 1.0}, IntInterval b_range = {0, 0});

// The five scenarios with default jitter, ordered by id.
std::array<ShiftScenario, 5> standard_scenarios();

// {"id": int, "name": str, "boost_factor": num, "a_range": [num,num], "b_range": [int,int]}
ShiftScenario parse_scenario(std::string_view json_text);
ShiftScenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const ShiftScenario& scenario);

// Target distribution for a scenario. The boosted class gets
// round(boost_factor * base); every other class, visited in name order, gets
// max(0, round(a * base + b)) with a then b drawn from the scenario ranges.
// If a jittered class reaches the boosted count, all non-boosted counts are
// rescaled by floor(count * (boosted - 1) / max_other) so the boosted class is
// the strict mode. Rounding is half away from zero.
LabelDistribution make_shift(const ShiftScenario& scenario, const LabelDistribution& base,
                             std::uint64_t seed);

struct ResamplePlan {
  LabelDistribution target;
  bool with_replacement = false;
  std::uint64_t seed = 0;
};

// Replaces the samples of `split` with a per-class draw matching plan.target.
// Samples of the other split are kept first, in their original order; the
// resampled split follows grouped by class name. Without replacement the
// chosen samples keep their original relative order. With replacement the
// draws are i.i.d. in draw order and the k-th repeat of an id is renamed
// "<id>#k" (k >= 1). Classes absent from the target get zero samples.
DatasetManifest resample(const DatasetManifest& manifest, const ResamplePlan& plan, Split split);

// Removes a "#k" duplicate suffix added by resample().
std::string_view base_sample_id(std::string_view id) noexcept;

// Total-variation distance between the normalized distributions.
double shift_divergence(const LabelDistribution& p, const LabelDistribution& q);

}  // namespace shiftbench
