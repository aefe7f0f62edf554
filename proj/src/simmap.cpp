#include "shiftbench/simmap.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <set>

#include "shiftbench/errors.hpp"
#include "shiftbench/hash.hpp"
#include "text_util.hpp"

namespace shiftbench {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("embedding vector has no dimensions");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("embedding vector has a NaN or Inf entry");
  }
}

double EmbeddingVector::norm() const noexcept {
  double sq = 0.0;
  for (double v : values_) sq += v * v;
  return std::sqrt(sq);
}

EmbeddingStore::EmbeddingStore(std::size_t dims) : dims_(dims) {
  if (dims == 0) throw ValidationError("embedding store needs a positive dimension");
}

const EmbeddingVector* EmbeddingStore::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const EmbeddingVector& EmbeddingStore::at(const std::string& key) const {
  if (const auto* v = find(key)) return *v;
  throw ValidationError("no embedding for key \"" + key + "\"");
}

void EmbeddingStore::insert(std::string key, EmbeddingVector vec) {
  if (key.empty()) throw ValidationError("embedding key is empty");
  if (vec.dims() != dims_) {
    throw ValidationError("embedding \"" + key + "\" has " + std::to_string(vec.dims()) +
                          " dims, store has " + std::to_string(dims_));
  }
  if (!entries_.emplace(key, std::move(vec)).second) {
    throw ValidationError("duplicate embedding key \"" + key + "\"");
  }
}

EmbeddingStore parse_embeddings(std::string_view csv, std::size_t fallback_dims) {
  const auto lines = detail::split_lines(csv);
  if (lines.empty()) return EmbeddingStore(fallback_dims == 0 ? kDefaultDims : fallback_dims);

  const auto header = detail::split_csv_row(lines.front().text);
  if (header.size() < 3 || header[0] != "key" || header[1] != "dim") {
    throw ParseError(lines.front().number, "embedding header must be key,dim,v0,...");
  }
  const std::size_t dims = header.size() - 2;
  for (std::size_t d = 0; d < dims; ++d) {
    if (header[d + 2] != "v" + std::to_string(d)) {
      throw ParseError(lines.front().number, "expected column v" + std::to_string(d));
    }
  }

  EmbeddingStore store(dims);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const auto cells = detail::split_csv_row(line.text);
    if (cells.size() != dims + 2) {
      throw ParseError(line.number, "expected " + std::to_string(dims + 2) + " columns, got " +
                                        std::to_string(cells.size()));
    }
    const auto dim = detail::parse_uint(cells[1]);
    if (!dim || *dim != dims) {
      throw ParseError(line.number, "dim column must equal " + std::to_string(dims));
    }
    std::vector<double> values(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      auto v = detail::parse_double(cells[d + 2]);
      if (!v) throw ParseError(line.number, "bad number \"" + std::string(cells[d + 2]) + "\"");
      values[d] = *v;
    }
    try {
      store.insert(std::string(cells[0]), EmbeddingVector(std::move(values)));
    } catch (const ValidationError& e) {
      throw ParseError(line.number, e.what());
    }
  }
  return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, std::size_t fallback_dims) {
  return parse_embeddings(read_text_file(path), fallback_dims);
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::string out = "key,dim";
  for (std::size_t d = 0; d < store.dims(); ++d) out += ",v" + std::to_string(d);
  out += '\n';
  for (const auto& [key, vec] : store.entries()) {
    if (key.find_first_of(",\n\r\"") != std::string::npos) {
      throw ValidationError("embedding key \"" + key + "\" cannot be written to CSV");
    }
    out += key;
    out += ',';
    out += std::to_string(vec.dims());
    for (double v : vec.values()) {
      out += ',';
      out += detail::shortest(v);
    }
    out += '\n';
  }
  write_text_file_atomic(path, out);
}

double cosine_similarity(const EmbeddingVector& x, const EmbeddingVector& y) {
  if (x.dims() != y.dims()) {
    throw ValidationError("cosine of vectors with " + std::to_string(x.dims()) + " and " +
                          std::to_string(y.dims()) + " dims");
  }
  const auto xs = x.values();
  const auto ys = y.values();
  double dot = 0.0;
  double xx = 0.0;
  double yy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    dot += xs[i] * ys[i];
    xx += xs[i] * xs[i];
    yy += ys[i] * ys[i];
  }
  if (xx == 0.0 || yy == 0.0) throw UndefinedSimilarityError("cosine of a zero-norm vector");
  const double c = dot / (std::sqrt(xx) * std::sqrt(yy));
  return std::clamp(c, -1.0, 1.0);
}

EmbeddingVector keyword_embed(std::span<const std::string> tokens, std::size_t dims) {
  if (dims < kMinKeywordDims) {
    throw ValidationError("keyword embedding needs dims >= " + std::to_string(kMinKeywordDims));
  }
  if (tokens.empty()) throw ValidationError("keyword embedding needs at least one token");
  std::vector<double> acc(dims, 0.0);
  for (const auto& token : tokens) {
    const std::string lowered = detail::ascii_lower(token);
    const std::uint64_t h = fnv1a64(lowered);
    const auto bucket = static_cast<std::size_t>(h % dims);
    acc[bucket] += (std::popcount(h) & 1) ? -1.0 : 1.0;
  }
  double sq = 0.0;
  for (double v : acc) sq += v * v;
  if (sq == 0.0) throw UndefinedSimilarityError("keyword hashes cancel to a zero vector");
  const double n = std::sqrt(sq);
  for (double& v : acc) v /= n;
  return EmbeddingVector(std::move(acc));
}

bool is_scorable(const Sample& sample, const EmbeddingStore& store) {
  if (sample.embedding_ref && store.contains(*sample.embedding_ref)) return true;
  return sample.prompt_keywords && !sample.prompt_keywords->empty();
}

EmbeddingVector class_vector(const Sample& sample, const EmbeddingStore& store, std::size_t dims) {
  if (sample.embedding_ref) {
    if (const auto* v = store.find(*sample.embedding_ref)) return *v;
  }
  if (sample.prompt_keywords && !sample.prompt_keywords->empty()) {
    std::set<std::string> words;
    for (const auto& w : *sample.prompt_keywords) words.insert(detail::ascii_lower(w));
    words.insert(sample.cls.name());
    const std::vector<std::string> tokens(words.begin(), words.end());
    return keyword_embed(tokens, dims);
  }
  throw UnscorableSampleError("sample \"" + sample.id +
                              "\" has neither a stored embedding nor prompt keywords");
}

EmbeddingVector anchor_vector(const ClassLabel& cls, const EmbeddingStore& store,
                              std::size_t dims) {
  if (const auto* v = store.find(cls.name())) return *v;
  const std::string token = cls.name();
  return keyword_embed(std::span<const std::string>(&token, 1), dims);
}

}  // namespace shiftbench
