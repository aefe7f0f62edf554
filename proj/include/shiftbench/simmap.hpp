#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shiftbench/manifest.hpp"

namespace shiftbench {

// Dense real vector with finite entries and at least one dimension.
class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dims() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double norm() const noexcept;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dims);

  std::size_t dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const std::string& key) const { return entries_.contains(key); }
  // nullptr when absent.
  const EmbeddingVector* find(const std::string& key) const;
  const EmbeddingVector& at(const std::string& key) const;
  const std::map<std::string, EmbeddingVector>& entries() const noexcept { return entries_; }

  // Rejects duplicate keys and vectors of the wrong dimension.
  void insert(std::string key, EmbeddingVector vec);

 private:
  std::size_t dims_;
  std::map<std::string, EmbeddingVector> entries_;
};

// CSV with header "key,dim,v0,...,v{d-1}". An empty file yields an empty
// store of dimension `fallback_dims`.
EmbeddingStore load_embeddings(const std::filesystem::path& path, std::size_t fallback_dims = 0);
EmbeddingStore parse_embeddings(std::string_view csv, std::size_t fallback_dims = 0);
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);

// x.y / (|x| |y|), clamped to [-1, 1]. Sums run in index order, so swapping
// the arguments gives a bit-identical result.
double cosine_similarity(const EmbeddingVector& x, const EmbeddingVector& y);

inline constexpr std::size_t kMinKeywordDims = 8;
inline constexpr std::size_t kDefaultDims = 256;

// Hashed bag of words. Each token is lower-cased and hashed with 64-bit
// FNV-1a; bucket = h mod dims, and the token adds -1 when popcount(h) is odd,
// +1 otherwise. The accumulated vector is L2-normalized.
EmbeddingVector keyword_embed(std::span<const std::string> tokens, std::size_t dims);

// Vector used to score a sample: the store entry for embedding_ref when
// present, else keyword_embed over the set of lower-cased prompt keywords
// plus the class name.
EmbeddingVector class_vector(const Sample& sample, const EmbeddingStore& store, std::size_t dims);

// True when class_vector() would succeed without consulting the embedder.
bool is_scorable(const Sample& sample, const EmbeddingStore& store);

// Vector for a class anchor: the store entry keyed by the class name when
// present, else keyword_embed({class name}).
EmbeddingVector anchor_vector(const ClassLabel& cls, const EmbeddingStore& store, std::size_t dims);

}  // namespace shiftbench
