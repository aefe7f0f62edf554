#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "generators.hpp"
#include "oracles.hpp"
#include "shiftbench/errors.hpp"
#include "shiftbench/simmap.hpp"

using namespace shiftbench;

namespace {

EmbeddingVector vec(std::vector<double> v) { return EmbeddingVector(std::move(v)); }

}  // namespace

TEST(EmbeddingVector, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(vec({}), ValidationError);
  EXPECT_THROW(vec({1.0, NAN}), ValidationError);
  EXPECT_THROW(vec({INFINITY}), ValidationError);
  EXPECT_DOUBLE_EQ(vec({3, 4}).norm(), 5.0);
}

TEST(Cosine, HandValues) {
  EXPECT_DOUBLE_EQ(cosine_similarity(vec({1, 2, 3}), vec({1, 2, 3})), 1.0);
  EXPECT_EQ(cosine_similarity(vec({1, 0}), vec({0, 1})), 0.0);
  EXPECT_NEAR(cosine_similarity(vec({1, 1}), vec({1, 0})), 0.7071067811865475, 1e-12);
  EXPECT_DOUBLE_EQ(cosine_similarity(vec({1, 0}), vec({-2, 0})), -1.0);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(cosine_similarity(vec({0, 0}), vec({1, 0})), UndefinedSimilarityError);
  EXPECT_THROW(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), ValidationError);
}

TEST(CosineProperty, SymmetryScaleAndBounds) {
  gen::Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    const auto d = gen::uniform(rng, 1, 40);
    std::vector<double> a(d), b(d);
    for (auto& x : a) x = gen::uniform_real(rng, -10, 10);
    for (auto& x : b) x = gen::uniform_real(rng, -10, 10);
    const auto x = vec(a), y = vec(b);
    const double c = cosine_similarity(x, y);
    ASSERT_EQ(c, cosine_similarity(y, x));
    ASSERT_LE(std::abs(c), 1.0);
    for (double alpha : {0.001, 1.0, 1000.0}) {
      auto s = a;
      for (auto& v : s) v *= alpha;
      ASSERT_NEAR(cosine_similarity(vec(s), y), c, 1e-9);
    }
    // A vector against itself sits on the clamp.
    ASSERT_LE(cosine_similarity(x, x), 1.0);
    ASSERT_NEAR(cosine_similarity(x, x), 1.0, 1e-12);
  }
}

TEST(KeywordEmbed, DeterministicAndOrderInvariant) {
  const std::vector<std::string> rain{"rain"};
  const auto a = keyword_embed(rain, 256);
  EXPECT_EQ(a, keyword_embed(rain, 256));
  EXPECT_DOUBLE_EQ(cosine_similarity(a, keyword_embed(rain, 256)), 1.0);
  const std::vector<std::string> t1{"wet", "road", "night"}, t2{"night", "wet", "road"};
  EXPECT_EQ(keyword_embed(t1, 64), keyword_embed(t2, 64));
  const std::vector<std::string> upper{"RAIN"};
  EXPECT_EQ(keyword_embed(upper, 256), a);
}

TEST(KeywordEmbed, MatchesIndependentHashOracle) {
  const std::vector<std::string> x{"rain", "storm"}, y{"snow", "blizzard"};
  const auto got = cosine_similarity(keyword_embed(x, 256), keyword_embed(y, 256));
  const auto want = ref::cosine(ref::keyword_embed(x, 256), ref::keyword_embed(y, 256));
  EXPECT_NEAR(got, want, 1e-12);
  const auto v = keyword_embed(x, 256);
  const auto ref = ref::keyword_embed(x, 256);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(v.values()[i], ref[i], 1e-15) << i;
}

TEST(KeywordEmbed, Errors) {
  const std::vector<std::string> empty;
  EXPECT_THROW(keyword_embed(empty, 256), ValidationError);
  const std::vector<std::string> one{"rain"};
  EXPECT_THROW(keyword_embed(one, 4), ValidationError);
  // Repeats scale one bucket; normalization removes the scale.
  const std::vector<std::string> twice{"rain", "rain"};
  EXPECT_EQ(keyword_embed(twice, 256), keyword_embed(one, 256));
}

TEST(KeywordEmbedProperty, UnitNormDeterministicOrderInvariant) {
  gen::Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    auto tokens = gen::random_keywords(rng, 8);
    const auto dims = gen::uniform(rng, kMinKeywordDims, 512);
    EmbeddingVector v = [&] {
      try {
        return keyword_embed(tokens, dims);
      } catch (const UndefinedSimilarityError&) {
        return vec({1.0});  // signed counts cancelled exactly
      }
    }();
    if (v.dims() == 1) continue;
    ASSERT_NEAR(v.norm(), 1.0, 1e-9);
    ASSERT_EQ(v, keyword_embed(tokens, dims));
    std::shuffle(tokens.begin(), tokens.end(), rng);
    ASSERT_EQ(v, keyword_embed(tokens, dims));
  }
}

TEST(EmbeddingStore, InsertAndLookup) {
  EmbeddingStore store(2);
  store.insert("e1", vec({1, 0}));
  EXPECT_TRUE(store.contains("e1"));
  EXPECT_EQ(store.at("e1"), vec({1, 0}));
  EXPECT_EQ(store.find("nope"), nullptr);
  EXPECT_THROW(store.insert("e1", vec({0, 1})), ValidationError);
  EXPECT_THROW(store.insert("e2", vec({0, 1, 2})), ValidationError);
  EXPECT_THROW(store.at("nope"), ValidationError);
}

TEST(EmbeddingStore, CsvRoundTrip) {
  const auto store = parse_embeddings("key,dim,v0,v1,v2\ne1,3,1,0,0.5\nrain,3,-1e-3,2,3\n");
  EXPECT_EQ(store.dims(), 3U);
  EXPECT_EQ(store.size(), 2U);
  EXPECT_EQ(store.at("rain"), vec({-1e-3, 2, 3}));
  gen::TempDir dir;
  save_embeddings(store, dir / "emb.csv");
  const auto back = load_embeddings(dir / "emb.csv");
  EXPECT_EQ(back.entries(), store.entries());
}

TEST(EmbeddingStore, CsvErrors) {
  EXPECT_THROW(parse_embeddings("id,dim,v0\ne1,1,1\n"), ValidationError);
  EXPECT_THROW(parse_embeddings("key,dim,v0,v1\ne1,2,1\n"), ValidationError);
  EXPECT_THROW(parse_embeddings("key,dim,v0,v1\ne1,3,1,2\n"), ValidationError);
  EXPECT_THROW(parse_embeddings("key,dim,v0,v1\ne1,2,1,x\n"), ValidationError);
  EXPECT_THROW(parse_embeddings("key,dim,v0,v1\ne1,2,1,2\ne1,2,1,2\n"), ValidationError);
  EXPECT_EQ(parse_embeddings("", 16).dims(), 16U);
  EXPECT_THROW(load_embeddings("/nonexistent/emb.csv"), IoError);
}

TEST(ClassVector, PrecedenceAndFallback) {
  EmbeddingStore store(8);
  store.insert("e1", vec({1, 2, 3, 4, 5, 6, 7, 8}));

  auto by_ref = gen::real("a", "fog");
  by_ref.source = Source::synthetic;
  by_ref.embedding_ref = "e1";
  EXPECT_EQ(class_vector(by_ref, store, 8), store.at("e1"));

  const auto by_words = gen::synthetic("b", "fog", {"foggy", "highway"});
  const std::vector<std::string> words{"foggy", "highway", "fog"};
  EXPECT_EQ(class_vector(by_words, store, 8), keyword_embed(words, 8));

  auto both = by_words;
  both.embedding_ref = "e1";
  EXPECT_EQ(class_vector(both, store, 8), store.at("e1"));

  // The class name joins the keywords as a set, so repeating it changes nothing.
  const auto dup = gen::synthetic("c", "fog", {"fog", "Foggy", "highway"});
  EXPECT_EQ(class_vector(dup, store, 8), keyword_embed(words, 8));

  auto unresolved = gen::real("d", "fog");
  unresolved.embedding_ref = "missing";
  EXPECT_FALSE(is_scorable(unresolved, store));
  EXPECT_THROW(class_vector(unresolved, store, 8), UnscorableSampleError);
  EXPECT_THROW(class_vector(gen::real("e", "fog"), store, 8), UnscorableSampleError);
}

TEST(AnchorVector, StoreThenKeyword) {
  EmbeddingStore store(8);
  store.insert("rain", vec({1, 0, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(anchor_vector(ClassLabel("rain"), store, 8), store.at("rain"));
  const std::vector<std::string> fog{"fog"};
  EXPECT_EQ(anchor_vector(ClassLabel("fog"), store, 8), keyword_embed(fog, 8));
}
