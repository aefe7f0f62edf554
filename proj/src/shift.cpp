#include "shiftbench/shift.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "shiftbench/errors.hpp"
#include "shiftbench/rng.hpp"

namespace shiftbench {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ShiftName name) noexcept {
  switch (name) {
    case ShiftName::none: return "none";
    case ShiftName::rain: return "rain";
    case ShiftName::fog: return "fog";
    case ShiftName::snow: return "snow";
    case ShiftName::dust: return "dust";
  }
  return "none";
}

ShiftName parse_shift_name(std::string_view text) {
  const std::string name = canonical_name(text);
  for (int id = 1; id <= 5; ++id) {
    if (to_string(static_cast<ShiftName>(id)) == name) return static_cast<ShiftName>(id);
  }
  throw ValidationError("unknown shift name \"" + std::string(text) +
                        "\" (expected none|rain|fog|snow|dust)");
}

ShiftName shift_name_for_id(int id) {
  if (id < 1 || id > 5) throw ValidationError("shift id must be 1..5, got " + std::to_string(id));
  return static_cast<ShiftName>(id);
}

std::optional<ClassLabel> ShiftScenario::boosted_class() const {
  if (name == ShiftName::none) return std::nullopt;
  return ClassLabel(to_string(name));
}

void validate(const ShiftScenario& scenario) {
  if (shift_name_for_id(scenario.id) != scenario.name) {
    throw ValidationError("shift id " + std::to_string(scenario.id) + " does not name \"" +
                          std::string(to_string(scenario.name)) + "\"");
  }
  if (!std::isfinite(scenario.boost_factor) || scenario.boost_factor < 1.0) {
    throw ValidationError("boost_factor must be >= 1");
  }
  const auto& a = scenario.a_range;
  if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.lo > a.hi || a.lo < 0.0) {
    throw ValidationError("a_range must be a finite non-negative interval lo <= hi");
  }
  const auto& b = scenario.b_range;
  if (b.lo < 0 || b.lo > b.hi) {
    throw ValidationError("b_range must be a non-negative interval lo <= hi");
  }
}

ShiftScenario make_scenario(ShiftName name, double boost_factor, RealInterval a_range,
                            IntInterval b_range) {
  ShiftScenario s{.id = static_cast<int>(name),
                  .name = name,
                  .boost_factor = boost_factor,
                  .a_range = a_range,
                  .b_range = b_range};
  validate(s);
  return s;
}

std::array<ShiftScenario, 5> standard_scenarios() {
  return {make_scenario(ShiftName::none), make_scenario(ShiftName::rain),
          make_scenario(ShiftName::fog), make_scenario(ShiftName::snow),
          make_scenario(ShiftName::dust)};
}

namespace {

ShiftScenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
  ShiftScenario s;
  if (j.contains("name")) {
    s.name = parse_shift_name(j.at("name").get<std::string>());
    s.id = j.contains("id") ? j.at("id").get<int>() : static_cast<int>(s.name);
  } else if (j.contains("id")) {
    s.id = j.at("id").get<int>();
    s.name = shift_name_for_id(s.id);
  } else {
    throw ValidationError("scenario needs \"id\" or \"name\"");
  }
  if (j.contains("boost_factor")) s.boost_factor = j.at("boost_factor").get<double>();
  if (j.contains("a_range")) {
    auto r = j.at("a_range").get<std::vector<double>>();
    if (r.size() != 2) throw ValidationError("a_range must have two entries");
    s.a_range = {r[0], r[1]};
  }
  if (j.contains("b_range")) {
    auto r = j.at("b_range").get<std::vector<std::int64_t>>();
    if (r.size() != 2) throw ValidationError("b_range must have two entries");
    s.b_range = {r[0], r[1]};
  }
  validate(s);
  return s;
}

}  // namespace

ShiftScenario parse_scenario(std::string_view json_text) {
  try {
    return scenario_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad scenario: ") + e.what());
  }
}

ShiftScenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_text_file(path));
}

std::string serialize_scenario(const ShiftScenario& scenario) {
  ordered_json j;
  j["id"] = scenario.id;
  j["name"] = to_string(scenario.name);
  j["boost_factor"] = scenario.boost_factor;
  j["a_range"] = {scenario.a_range.lo, scenario.a_range.hi};
  j["b_range"] = {scenario.b_range.lo, scenario.b_range.hi};
  return j.dump();
}

LabelDistribution make_shift(const ShiftScenario& scenario, const LabelDistribution& base,
                             std::uint64_t seed) {
  validate(scenario);
  if (base.total() == 0) throw ValidationError("base distribution is empty");
  const auto boosted = scenario.boosted_class();
  if (!boosted) return base;

  auto it = base.counts.find(*boosted);
  if (it == base.counts.end()) {
    throw DegenerateScenarioError("scenario boosts \"" + boosted->name() +
                                  "\" which is not in the base distribution");
  }
  if (it->second == 0) {
    throw DegenerateScenarioError("scenario boosts \"" + boosted->name() +
                                  "\" which has zero samples");
  }

  LabelDistribution out;
  const auto boosted_count = static_cast<std::uint64_t>(
      std::llround(scenario.boost_factor * static_cast<double>(it->second)));
  Pcg32 rng(seed);
  std::uint64_t max_other = 0;
  for (const auto& [cls, n] : base.counts) {
    if (cls == *boosted) {
      out.counts.emplace(cls, boosted_count);
      continue;
    }
    const double a = rng.uniform(scenario.a_range.lo, scenario.a_range.hi);
    const auto b = rng.uniform_int(scenario.b_range.lo, scenario.b_range.hi);
    const auto v = std::llround(a * static_cast<double>(n) + static_cast<double>(b));
    const auto count = static_cast<std::uint64_t>(std::max<long long>(0, v));
    max_other = std::max(max_other, count);
    out.counts.emplace(cls, count);
  }

  if (max_other >= boosted_count) {
    for (auto& [cls, n] : out.counts) {
      if (cls != *boosted) n = n * (boosted_count - 1) / max_other;
    }
  }
  return out;
}

std::string_view base_sample_id(std::string_view id) noexcept {
  const auto hash = id.rfind('#');
  if (hash == std::string_view::npos || hash == 0 || hash + 1 == id.size()) return id;
  const auto digits = id.substr(hash + 1);
  if (!std::all_of(digits.begin(), digits.end(),
                   [](unsigned char c) { return std::isdigit(c) != 0; })) {
    return id;
  }
  return id.substr(0, hash);
}

DatasetManifest resample(const DatasetManifest& manifest, const ResamplePlan& plan, Split split) {
  for (const auto& [cls, n] : plan.target.counts) {
    if (!manifest.classes.contains(cls)) {
      throw ValidationError("target class \"" + cls.name() + "\" is not in the manifest");
    }
  }

  std::map<ClassLabel, std::vector<std::size_t>> pools;
  DatasetManifest out{.name = manifest.name, .classes = manifest.classes, .samples = {}};
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    const auto& s = manifest.samples[i];
    if (s.split == split) {
      pools[s.cls].push_back(i);
    } else {
      out.samples.push_back(s);
    }
  }

  if (!plan.with_replacement) {
    for (const auto& [cls, want] : plan.target.counts) {
      const auto have = pools[cls].size();
      if (want > have) {
        throw CapacityError(cls.name(), "class \"" + cls.name() + "\" has " +
                                            std::to_string(have) + " samples, target asks for " +
                                            std::to_string(want) + " without replacement");
      }
    }
  }

  Pcg32 rng(plan.seed);
  for (const auto& [cls, want] : plan.target.counts) {
    const auto& pool = pools[cls];
    if (want == 0) continue;
    if (pool.empty()) {
      throw CapacityError(cls.name(), "class \"" + cls.name() + "\" has no samples to draw from");
    }
    if (plan.with_replacement) {
      std::map<std::size_t, std::size_t> seen;
      for (std::uint64_t k = 0; k < want; ++k) {
        const auto idx = pool[rng.bounded(pool.size())];
        Sample s = manifest.samples[idx];
        const auto repeat = seen[idx]++;
        if (repeat > 0) s.id += "#" + std::to_string(repeat);
        out.samples.push_back(std::move(s));
      }
    } else {
      auto picks = sample_without_replacement(pool.size(), static_cast<std::size_t>(want), rng);
      std::sort(picks.begin(), picks.end());
      for (auto p : picks) out.samples.push_back(manifest.samples[pool[p]]);
    }
  }
  validate(out);
  return out;
}

double shift_divergence(const LabelDistribution& p, const LabelDistribution& q) {
  if (p.counts.size() != q.counts.size() ||
      !std::equal(p.counts.begin(), p.counts.end(), q.counts.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    throw ValidationError("distributions have different class sets");
  }
  const double pt = static_cast<double>(p.total());
  const double qt = static_cast<double>(q.total());
  if (pt == 0.0 || qt == 0.0) throw ValidationError("distribution total is zero");
  double sum = 0.0;
  auto qi = q.counts.begin();
  for (const auto& [cls, n] : p.counts) {
    sum += std::abs(static_cast<double>(n) / pt - static_cast<double>(qi->second) / qt);
    ++qi;
  }
  return std::min(1.0, 0.5 * sum);
}

}  // namespace shiftbench
