#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace shiftbench {

// Canonical (trimmed, lower-case) class name. Construction fails on names
// that are empty after trimming.
class ClassLabel {
 public:
  explicit ClassLabel(std::string_view name);

  const std::string& name() const noexcept { return name_; }

  friend bool operator==(const ClassLabel&, const ClassLabel&) = default;
  friend auto operator<=>(const ClassLabel&, const ClassLabel&) = default;

 private:
  std::string name_;
};

// ASCII lower-case after trimming surrounding whitespace.
std::string canonical_name(std::string_view raw);

enum class Split { train, test };
enum class Source { real, synthetic };

std::string_view to_string(Split split) noexcept;
std::string_view to_string(Source source) noexcept;
Split parse_split(std::string_view text);
Source parse_source(std::string_view text);

struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  bool well_formed() const noexcept { return x2 > x1 && y2 > y1; }
  friend bool operator==(const Box&, const Box&) = default;
};

struct GroundTruthBox {
  ClassLabel cls;
  Box box;
  friend bool operator==(const GroundTruthBox&, const GroundTruthBox&) = default;
};

struct Sample {
  std::string id;
  ClassLabel cls;
  Split split = Split::train;
  Source source = Source::real;
  std::optional<std::vector<std::string>> prompt_keywords;
  std::optional<std::string> embedding_ref;
  std::optional<std::vector<GroundTruthBox>> boxes;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct DatasetManifest {
  std::string name;
  std::set<ClassLabel> classes;
  std::vector<Sample> samples;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct LabelDistribution {
  std::map<ClassLabel, std::uint64_t> counts;

  std::uint64_t total() const noexcept;
  std::uint64_t at(const ClassLabel& cls) const;
  friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;
};

// Builds a manifest from samples, deriving the class set and checking every
// invariant (unique ids, synthetic samples scorable, well-formed boxes).
DatasetManifest make_manifest(std::string name, std::vector<Sample> samples);

// Throws ValidationError if `manifest` breaks an invariant.
void validate(const DatasetManifest& manifest);

// One JSON object per non-blank line; sample order follows line order.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::string_view text, std::string name = {});

// Writes to a sibling temp file and renames it over `path`.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
std::string serialize_manifest(const DatasetManifest& manifest);

LabelDistribution label_distribution(const DatasetManifest& manifest, Split split);

// Whole-file helpers shared by the other loaders.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace shiftbench
