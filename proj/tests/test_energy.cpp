#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/energy.hpp"
#include "stylo/guided_decoder.hpp"
#include "stylo/ngram_lm.hpp"
#include "stylo/style_encoder.hpp"
#include "test_support.hpp"

using namespace stylo;

namespace {

Corpus corpus_of(const std::vector<std::string>& texts) {
  Corpus c;
  c.authors.push_back({"a", {}});
  for (const auto& t : texts) c.authors[0].documents.push_back(testsup::doc(t));
  return c;
}

// Everything an EnergyModel needs, built over one small corpus.
struct Fixture {
  Corpus corpus;
  NgramModel lm;
  StyleEncoder encoder;
  RegressorParams regressor;
  TfidfModel tfidf;
  GuidedDecoder decoder;

  explicit Fixture(const std::vector<std::string>& texts, double lambda = 0.0)
      : corpus(corpus_of(texts)),
        lm(NgramModel::fit(corpus, NgramConfig{})),
        encoder(fit_scaling(corpus)),
        regressor([] {
          Rng rng(1);
          return RegressorParams::near_identity(kStyleDim, kStyleDim, 0.1, 0.0,
                                                rng);
        }()),
        tfidf(TfidfModel::fit(corpus)),
        decoder(lm, regressor, encoder, [lambda] {
          GuidedConfig cfg;
          cfg.lambda = lambda;
          return cfg;
        }()) {}

  EnergyModel energy(EnergyWeights w) const {
    return EnergyModel(decoder, encoder, tfidf, w);
  }
};

}  // namespace

TEST_CASE("tfidf cosine identities") {
  TfidfModel m = TfidfModel::fit(corpus_of({"a b", "a c", "d d d"}));

  SUBCASE("identical content scores one") {
    CHECK(m.cosine(tokenize("a b"), tokenize("a b")) == doctest::Approx(1.0));
  }
  SUBCASE("case and punctuation are ignored") {
    CHECK(m.cosine(tokenize("Dog!"), tokenize("dog")) == doctest::Approx(1.0));
  }
  SUBCASE("disjoint content scores zero") {
    CHECK(m.cosine(tokenize("a b"), tokenize("d")) == doctest::Approx(0.0));
  }
  SUBCASE("two term-free texts agree vacuously") {
    CHECK(m.cosine(tokenize("!!!"), tokenize("... ?")) == 1.0);
  }
  SUBCASE("one term-free text scores zero") {
    CHECK(m.cosine(tokenize("a b"), tokenize("!!!")) == 0.0);
  }
  SUBCASE("hand-computed weighted overlap") {
    // Fit corpus: 3 docs; df(a)=2, df(b)=1, df(c)=1.
    const double idf_a = std::log(4.0 / 3.0) + 1.0;
    const double idf_b = std::log(4.0 / 2.0) + 1.0;
    const double expected =
        (idf_a * idf_a) /
        (std::sqrt(idf_a * idf_a + idf_b * idf_b) *
         std::sqrt(idf_a * idf_a + idf_b * idf_b));
    CHECK(m.cosine(tokenize("a b"), tokenize("a c")) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("repeated terms raise term frequency") {
    // "d d" vs "d": tf differs but the direction is identical.
    CHECK(m.cosine(tokenize("d d"), tokenize("d")) == doctest::Approx(1.0));
  }
}

TEST_CASE("tfidf save and load round-trip bit for bit") {
  TfidfModel m = TfidfModel::fit(corpus_of({"alpha beta", "beta gamma"}));
  std::ostringstream first;
  m.save(first);
  std::istringstream in(first.str());
  TfidfModel back = TfidfModel::load(in);
  CHECK(back.cosine(tokenize("alpha beta"), tokenize("beta gamma")) ==
        m.cosine(tokenize("alpha beta"), tokenize("beta gamma")));
  std::ostringstream second;
  back.save(second);
  CHECK(first.str() == second.str());
}

TEST_CASE("tfidf fit rejects empty corpora") {
  Corpus empty;
  CHECK_THROWS_AS(TfidfModel::fit(empty), std::invalid_argument);
}

TEST_CASE("weight presets") {
  const EnergyWeights gen = EnergyWeights::generation();
  CHECK(gen.fluency == 1.0);
  CHECK(gen.style == 4.0);
  CHECK(gen.semantic == 0.0);
  CHECK(gen.hamming == 0.0);
  const EnergyWeights tr = EnergyWeights::transfer();
  CHECK(tr.fluency == 1.0);
  CHECK(tr.style == 4.0);
  CHECK(tr.semantic == 4.0);
  CHECK(tr.hamming == 2.0);
}

TEST_CASE("energy model validates its weights") {
  Fixture fx({"a b c", "b c a"});
  CHECK_THROWS_AS(fx.energy({-1.0, 4.0, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(fx.energy({0.0, 0.0, 0.0, 0.0}), std::invalid_argument);
  EnergyModel gen = fx.energy(EnergyWeights::generation());
  CHECK(!gen.needs_reference());
  EnergyModel tr = fx.energy(EnergyWeights::transfer());
  CHECK(tr.needs_reference());
}

TEST_CASE("hamming energy counts mismatches and length gaps") {
  Fixture fx({"a b c d e"});
  EnergyModel e = fx.energy(EnergyWeights::transfer());

  CHECK(e.hamming_doc(tokenize("a b c"), tokenize("a b c")) == 0.0);
  CHECK(e.hamming_doc(tokenize("a b"), tokenize("c d")) == 1.0);
  // Two shared positions, one mismatched; two positions of length gap.
  CHECK(e.hamming_doc(tokenize("a b"), tokenize("a c d e")) ==
        doctest::Approx(3.0 / 4.0));
  CHECK(e.hamming_doc(tokenize("a b c d"), tokenize("a b")) ==
        doctest::Approx(2.0 / 4.0));
  CHECK(e.hamming_doc({}, {}) == 0.0);
}

TEST_CASE("semantic energy is negated tf-idf cosine") {
  Fixture fx({"rain on stone", "sun on grass"});
  EnergyModel e = fx.energy(EnergyWeights::transfer());
  const auto doc = tokenize("rain on stone");
  CHECK(e.semantic_doc(doc, doc) == doctest::Approx(-1.0));
  CHECK(e.semantic_doc(doc, tokenize("rain on stone")) ==
        -fx.tfidf.cosine(doc, doc));
}

TEST_CASE("fluency energy is the negated adapted mean log-likelihood") {
  Fixture fx({"the cat sat", "the dog ran"});
  EnergyModel e = fx.energy(EnergyWeights::generation());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  const auto tokens = tokenize("the cat ran");
  const double f = e.fluency_doc(tokens, target);
  CHECK(f > 0.0);
  CHECK(f == -fx.decoder.adapted_seq_mean_logprob(tokens, target).mean_logprob);
}

TEST_CASE("style energy is minus one at the target itself") {
  Fixture fx({"steady words in rows", "steady rows of words"});
  EnergyModel e = fx.energy(EnergyWeights::generation());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  FeatureCounts pooled;
  for (const auto& d : fx.corpus.authors[0].documents) {
    pooled.add(featurize(d));
  }
  CHECK(e.style_energy(pooled, target) == doctest::Approx(-1.0));
}

TEST_CASE("combine applies weights and demands active expert means") {
  Fixture fx({"a b", "b a"});
  EnergyModel e = fx.energy({2.0, 3.0, 1.0, 0.5});
  EnergyBreakdown b = e.combine(1.5, -0.8, -0.6, 0.25);
  CHECK(b.total == doctest::Approx(2.0 * 1.5 + 3.0 * -0.8 + 1.0 * -0.6 +
                                   0.5 * 0.25));
  CHECK(b.fluency == 1.5);
  CHECK(b.style == -0.8);
  REQUIRE(b.semantic.has_value());
  CHECK(*b.semantic == -0.6);

  CHECK_THROWS_AS(e.combine(1.0, -0.5, std::nullopt, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(e.combine(1.0, -0.5, -0.4, std::nullopt),
                  std::invalid_argument);

  // Inactive experts need no mean and contribute nothing.
  EnergyModel gen = fx.energy(EnergyWeights::generation());
  EnergyBreakdown g = gen.combine(1.0, -0.5, std::nullopt, std::nullopt);
  CHECK(g.total == doctest::Approx(1.0 - 4.0 * 0.5));
  CHECK(!g.semantic.has_value());
}

TEST_CASE("total recomputes from the per-expert pieces") {
  Fixture fx({"rivers carve the stone", "winds shape the cloud",
              "rain feeds the garden"});
  EnergyModel e = fx.energy(EnergyWeights::transfer());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);

  std::vector<Document> docs = {testsup::doc("rivers shape the garden"),
                                testsup::doc("rain feeds the stone")};
  std::vector<Document> refs = {testsup::doc("rivers carve the stone"),
                                testsup::doc("rain feeds the garden")};
  EnergyBreakdown got = e.total(docs, target, &refs);

  FeatureCounts pooled;
  double fl = 0.0, sem = 0.0, ham = 0.0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    pooled.add(featurize(docs[i]));
    fl += e.fluency_doc(docs[i].tokens, target);
    sem += e.semantic_doc(docs[i].tokens, refs[i].tokens);
    ham += e.hamming_doc(docs[i].tokens, refs[i].tokens);
  }
  const double style = e.style_energy(pooled, target);
  const double expected =
      1.0 * (fl / 2.0) + 4.0 * style + 4.0 * (sem / 2.0) + 2.0 * (ham / 2.0);
  CHECK(got.total == doctest::Approx(expected).epsilon(1e-12));
  CHECK(got.fluency == doctest::Approx(fl / 2.0));
  CHECK(got.style == doctest::Approx(style));
}

TEST_CASE("total validates its reference pairing") {
  Fixture fx({"a b c", "c b a"});
  EnergyModel e = fx.energy(EnergyWeights::transfer());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  std::vector<Document> docs = {testsup::doc("a b")};
  std::vector<Document> refs;
  CHECK_THROWS_AS(e.total(docs, target, &refs), std::invalid_argument);
  CHECK_THROWS_AS(e.total(docs, target, nullptr), std::invalid_argument);
  std::vector<Document> none;
  CHECK_THROWS_AS(e.total(none, target, nullptr), std::invalid_argument);

  // Generation weights need no reference at all.
  EnergyModel gen = fx.energy(EnergyWeights::generation());
  CHECK_NOTHROW(gen.total(docs, target, nullptr));
}
