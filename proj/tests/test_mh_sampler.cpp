#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/energy.hpp"
#include "stylo/guided_decoder.hpp"
#include "stylo/mh_sampler.hpp"
#include "stylo/ngram_lm.hpp"
#include "stylo/rng.hpp"
#include "stylo/style_encoder.hpp"
#include "test_support.hpp"

using namespace stylo;

namespace {

std::vector<PosTag> tags_of(const std::string& text) {
  return tag_pos(tokenize(text));
}

Corpus corpus_of(const std::vector<std::string>& texts) {
  Corpus c;
  c.authors.push_back({"a", {}});
  for (const auto& t : texts) c.authors[0].documents.push_back(testsup::doc(t));
  return c;
}

struct Fixture {
  Corpus corpus;
  NgramModel lm;
  StyleEncoder encoder;
  RegressorParams regressor;
  TfidfModel tfidf;
  GuidedDecoder decoder;

  Fixture(const std::vector<std::string>& texts, NgramConfig ncfg,
          int top_k = 50)
      : corpus(corpus_of(texts)),
        lm(NgramModel::fit(corpus, ncfg)),
        encoder(fit_scaling(corpus)),
        regressor([] {
          Rng rng(1);
          return RegressorParams::near_identity(kStyleDim, kStyleDim, 0.1, 0.0,
                                                rng);
        }()),
        tfidf(TfidfModel::fit(corpus)),
        decoder(lm, regressor, encoder, [top_k] {
          GuidedConfig cfg;
          cfg.lambda = 0.0;
          cfg.top_k = top_k;
          return cfg;
        }()) {}

  EnergyModel energy(EnergyWeights w) const {
    return EnergyModel(decoder, encoder, tfidf, w);
  }
};

// Unit fixtures are a handful of short documents, so keep every surface.
NgramConfig unit_lm_config() {
  NgramConfig ncfg;
  ncfg.min_count = 1;
  return ncfg;
}

NgramConfig tiny_lm_config() {
  NgramConfig ncfg;
  ncfg.order = 2;
  ncfg.discount = 0.5;
  ncfg.min_count = 1;
  ncfg.max_infill_len = 1;
  return ncfg;
}

SamplerConfig tiny_chain_config() {
  SamplerConfig cfg;
  cfg.mask_width = 1;
  cfg.width_ratio = 0.5;
  cfg.noun_constraint = false;
  cfg.max_doc_len = 3;
  return cfg;
}

bool docs_equal(const StateDoc& a, const StateDoc& b) {
  return a.tokens == b.tokens && a.seps == b.seps && a.ids == b.ids &&
         a.protect == b.protect;
}

}  // namespace

TEST_CASE("part-of-speech tagging") {
  SUBCASE("closed-class words are never nouns") {
    auto t = tags_of("the dog runs");
    CHECK(t[0] == PosTag::other);
    CHECK(t[1] == PosTag::noun);  // lexicon noun
    CHECK(t[2] == PosTag::other);
  }
  SUBCASE("noun-forming suffixes") {
    auto t = tags_of("payment arrives");
    CHECK(t[0] == PosTag::noun);
    CHECK(t[1] == PosTag::other);
  }
  SUBCASE("capitalized unknowns are nouns unless they open a sentence") {
    auto t = tags_of("Velora met Brint");
    CHECK(t[0] == PosTag::other);  // sentence-initial capital proves nothing
    CHECK(t[2] == PosTag::noun);
    t = tags_of("stop. Velora waved");
    CHECK(t[2] == PosTag::other);  // fresh sentence after the period
    t = tags_of("go, Velora waved");
    CHECK(t[2] == PosTag::noun);  // a comma does not restart the sentence
  }
  SUBCASE("non-word tokens are never nouns") {
    auto t = tags_of("dog ... 42");
    CHECK(t[0] == PosTag::noun);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] == PosTag::other);
  }
}

TEST_CASE("editable starts respect the protection mask") {
  Fixture fx({"the dog runs fast", "a cat sleeps now"}, unit_lm_config());
  EnergyModel energy = fx.energy(EnergyWeights::generation());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);

  SUBCASE("nouns block every window that covers them") {
    SamplerConfig cfg;
    cfg.mask_width = 1;
    MhSampler sampler(energy, cfg);
    auto state = sampler.init_state({testsup::doc("the dog runs")}, target,
                                    nullptr);
    CHECK(sampler.editable_starts(state.docs[0]) == std::vector<int>{0, 2});

    cfg.mask_width = 2;
    MhSampler wide(energy, cfg);
    auto state2 = wide.init_state({testsup::doc("the dog runs")}, target,
                                  nullptr);
    CHECK(wide.editable_starts(state2.docs[0]).empty());
  }
  SUBCASE("an all-noun document has no editable start") {
    SamplerConfig cfg;
    cfg.mask_width = 1;
    MhSampler sampler(energy, cfg);
    auto state = sampler.init_state({testsup::doc("dog cat")}, target, nullptr);
    CHECK(sampler.editable_starts(state.docs[0]).empty());
  }
  SUBCASE("disabling the constraint opens every start") {
    SamplerConfig cfg;
    cfg.mask_width = 2;
    cfg.noun_constraint = false;
    MhSampler sampler(energy, cfg);
    auto state = sampler.init_state({testsup::doc("the dog runs")}, target,
                                    nullptr);
    CHECK(sampler.editable_starts(state.docs[0]) == std::vector<int>{0, 1});
  }
}

TEST_CASE("acceptance log probability closed forms") {
  // Symmetric proposal: pure energy difference, capped at zero.
  CHECK(MhSampler::acceptance_log_prob(1.0, 1.0, -2.0, -2.0) == 0.0);
  CHECK(MhSampler::acceptance_log_prob(1.0, 2.0, -2.0, -2.0) ==
        doctest::Approx(-1.0));
  CHECK(MhSampler::acceptance_log_prob(2.0, 1.0, -2.0, -2.0) == 0.0);
  // Asymmetric proposal shifts the ratio.
  CHECK(MhSampler::acceptance_log_prob(1.0, 1.0, -2.0, -3.0) ==
        doctest::Approx(-1.0));
  CHECK(MhSampler::acceptance_log_prob(1.0, 1.0, -3.0, -2.0) == 0.0);
  // Irreversible proposals are always rejected.
  CHECK(MhSampler::acceptance_log_prob(5.0, 0.0, -2.0, kNegInf) == kNegInf);
}

TEST_CASE("rejected steps leave the state untouched") {
  Fixture fx({"rain on the window", "wind in the garden",
              "stone by the river"}, unit_lm_config());
  EnergyModel energy = fx.energy(EnergyWeights::generation());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  SamplerConfig cfg;
  cfg.noun_constraint = false;
  MhSampler sampler(energy, cfg);
  auto state = sampler.init_state(
      {testsup::doc("rain on the window"), testsup::doc("wind in the garden")},
      target, nullptr);
  Rng rng(5);
  int rejected = 0;
  for (int i = 0; i < 200; ++i) {
    const auto before_docs = state.docs;
    const double before_e = state.energy.total;
    const bool accepted = sampler.step(state, target, rng);
    if (!accepted) {
      ++rejected;
      CHECK(state.energy.total == before_e);
      REQUIRE(state.docs.size() == before_docs.size());
      for (std::size_t d = 0; d < state.docs.size(); ++d) {
        CHECK(docs_equal(state.docs[d], before_docs[d]));
      }
    }
  }
  CHECK(rejected > 0);  // the chain does reject at equilibrium
  CHECK(state.steps_taken == 200);
}

TEST_CASE("a fully protected state counts steps as rejections") {
  Fixture fx({"dog cat dog", "cat dog cat"}, unit_lm_config());
  EnergyModel energy = fx.energy(EnergyWeights::generation());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  MhSampler sampler(energy, SamplerConfig{});
  auto state = sampler.init_state({testsup::doc("dog cat")}, target, nullptr);
  Rng rng(1);
  CHECK(!sampler.step(state, target, rng));
  CHECK(state.steps_taken == 1);
  CHECK(state.accepted == 0);
}

TEST_CASE("incremental energy matches a recompute from scratch") {
  Fixture fx({"the river bends east", "dry wind from the north",
              "cold rain all night"}, unit_lm_config());
  EnergyModel energy = fx.energy(EnergyWeights::transfer());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  SamplerConfig cfg;
  cfg.noun_constraint = false;
  cfg.max_doc_len = 12;
  MhSampler sampler(energy, cfg);
  const std::vector<Document> docs = {testsup::doc("dry wind from the north"),
                                      testsup::doc("cold rain all night")};
  auto state = sampler.init_state(docs, target, &docs);
  Rng rng(11);
  for (int i = 0; i < 400; ++i) sampler.step(state, target, rng);
  CHECK(state.accepted > 0);
  const EnergyBreakdown fresh = sampler.recompute_energy(state, target);
  CHECK(state.energy.total == doctest::Approx(fresh.total).epsilon(1e-9));
  CHECK(state.energy.fluency == doctest::Approx(fresh.fluency).epsilon(1e-9));
  CHECK(state.energy.style == doctest::Approx(fresh.style).epsilon(1e-9));
  REQUIRE(state.energy.semantic.has_value());
  CHECK(*state.energy.semantic ==
        doctest::Approx(*fresh.semantic).epsilon(1e-9));
  CHECK(*state.energy.hamming == doctest::Approx(*fresh.hamming).epsilon(1e-9));
}

TEST_CASE("spliced separators always detokenize back to the same tokens") {
  Fixture fx({"odd  spacing stays\there", "plain words in a row",
              "more plain words here"}, unit_lm_config());
  EnergyModel energy = fx.energy(EnergyWeights::generation());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  SamplerConfig cfg;
  cfg.noun_constraint = false;
  MhSampler sampler(energy, cfg);
  auto state = sampler.init_state(
      {testsup::doc("odd  spacing stays\there"),
       testsup::doc("plain words in a row")},
      target, nullptr);
  Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    sampler.step(state, target, rng);
    for (const auto& sd : state.docs) {
      REQUIRE(sd.seps.size() == sd.tokens.size() + 1);
      const std::string raw = detokenize(sd.tokens, sd.seps);
      CHECK(tokenize(raw) == sd.tokens);
    }
  }
}

TEST_CASE("returned best never exceeds the initial or visited energies") {
  Fixture fx({"slow water under the bridge", "heavy cloud over the field",
              "first light on the hill"}, unit_lm_config());
  EnergyModel energy = fx.energy(EnergyWeights::transfer());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  SamplerConfig cfg;
  cfg.noun_constraint = false;
  MhSampler sampler(energy, cfg);
  const std::vector<Document> docs = {
      testsup::doc("heavy cloud over the field")};
  Rng rng(31);
  RunResult result = sampler.run(docs, target, &docs, 250, rng);
  CHECK(result.best_energy.total <= result.initial_energy.total);
  double lowest = result.initial_energy.total;
  for (const auto& t : result.trace) lowest = std::min(lowest, t.energy);
  CHECK(result.best_energy.total == doctest::Approx(lowest).epsilon(1e-12));
  CHECK(result.trace.size() == 250);
  CHECK(result.steps == 250);
}

TEST_CASE("protected tokens survive a long run in order") {
  Fixture fx({"the dog barks at the cat", "a bird sings in the tree",
              "the fish swims past the stone"}, unit_lm_config());
  EnergyModel energy = fx.energy(EnergyWeights::transfer());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  MhSampler sampler(energy, SamplerConfig{});  // noun constraint on
  const std::vector<Document> docs = {testsup::doc("the dog barks at the cat"),
                                      testsup::doc("a bird sings in the tree")};
  auto state = sampler.init_state(docs, target, &docs);

  std::vector<std::vector<std::string>> protected_before;
  for (const auto& sd : state.docs) {
    std::vector<std::string> v;
    for (std::size_t i = 0; i < sd.tokens.size(); ++i) {
      if (sd.protect[i]) v.push_back(sd.tokens[i].surface);
    }
    protected_before.push_back(std::move(v));
  }
  REQUIRE(protected_before[0] == std::vector<std::string>{"dog", "cat"});

  Rng rng(41);
  for (int i = 0; i < 300; ++i) sampler.step(state, target, rng);
  CHECK(state.accepted > 0);
  for (std::size_t d = 0; d < state.docs.size(); ++d) {
    std::vector<std::string> after;
    for (std::size_t i = 0; i < state.docs[d].tokens.size(); ++i) {
      if (state.docs[d].protect[i]) {
        after.push_back(state.docs[d].tokens[i].surface);
      }
    }
    CHECK(after == protected_before[d]);
  }
}

TEST_CASE("runs are bit-identical under the same seed") {
  Fixture fx({"quiet words move slowly", "loud words rush past",
              "words find their level"}, unit_lm_config());
  EnergyModel energy = fx.energy(EnergyWeights::transfer());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  SamplerConfig cfg;
  cfg.noun_constraint = false;
  MhSampler sampler(energy, cfg);
  const std::vector<Document> docs = {testsup::doc("loud words rush past")};
  Rng r1(77), r2(77);
  RunResult a = sampler.run(docs, target, &docs, 150, r1);
  RunResult b = sampler.run(docs, target, &docs, 150, r2);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].energy == b.trace[i].energy);
    CHECK(a.trace[i].accepted == b.trace[i].accepted);
  }
  REQUIRE(a.best.size() == b.best.size());
  for (std::size_t i = 0; i < a.best.size(); ++i) {
    CHECK(a.best[i].raw == b.best[i].raw);
  }
}

TEST_CASE("preset budgets scale with the longest document") {
  Fixture fx({"one two three four five six seven"}, unit_lm_config());
  EnergyModel energy = fx.energy(EnergyWeights::generation());
  SamplerConfig cfg;
  cfg.preset = SamplerConfig::Preset::transfer;
  cfg.steps_multiplier = 80;
  cfg.epochs = 5;
  MhSampler transfer(energy, cfg);
  const std::vector<Document> docs = {
      testsup::doc("one two three four five six seven"),
      testsup::doc("one two")};
  CHECK(transfer.preset_steps(docs) == 7 * 80);
  cfg.preset = SamplerConfig::Preset::revise;
  MhSampler revise(energy, cfg);
  CHECK(revise.preset_steps(docs) == 7 * 5);
}

TEST_CASE("sampler configuration and state inputs are validated") {
  Fixture fx({"a b c"}, unit_lm_config());
  EnergyModel energy = fx.energy(EnergyWeights::transfer());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);

  SamplerConfig bad;
  bad.mask_width = 0;
  CHECK_THROWS_AS(MhSampler(energy, bad), std::invalid_argument);
  bad = SamplerConfig{};
  bad.width_ratio = 0.0;
  CHECK_THROWS_AS(MhSampler(energy, bad), std::invalid_argument);
  bad = SamplerConfig{};
  bad.steps_multiplier = -1;
  CHECK_THROWS_AS(MhSampler(energy, bad), std::invalid_argument);

  MhSampler sampler(energy, SamplerConfig{});
  CHECK_THROWS_AS(sampler.init_state({}, target, nullptr),
                  std::invalid_argument);
  const std::vector<Document> docs = {testsup::doc("a b")};
  // Transfer weights demand 1:1 reference documents.
  CHECK_THROWS_AS(sampler.init_state(docs, target, nullptr),
                  std::invalid_argument);
  const std::vector<Document> empty_doc = {make_document("a", "d", "")};
  CHECK_THROWS_AS(sampler.init_state(empty_doc, target, &empty_doc),
                  std::invalid_argument);
}

TEST_CASE("the chain's long-run visits match the exact stationary law") {
  // Two-token vocabulary, documents of length 1..3: fourteen states whose
  // energies can be enumerated exactly. The empirical visit distribution of
  // the kernel must converge to exp(-E)/Z; this is the end-to-end audit of
  // proposal pricing and the acceptance rule together.
  Fixture fx({"a b", "b a", "a a", "b b"}, tiny_lm_config(), 8);
  EnergyModel energy = fx.energy(EnergyWeights::generation());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  MhSampler sampler(energy, tiny_chain_config());

  const testsup::ChainOracle oracle = testsup::enumerate_chain(energy, target, 3);
  REQUIRE(oracle.states.size() == 14);

  auto state = sampler.init_state({testsup::doc("a b")}, target, nullptr);
  Rng rng(101);
  const long burn = 20000;
  const long keep = 200000;
  for (long i = 0; i < burn; ++i) sampler.step(state, target, rng);
  std::vector<double> visits(oracle.states.size(), 0.0);
  for (long i = 0; i < keep; ++i) {
    sampler.step(state, target, rng);
    const auto it = oracle.index.find(state.docs[0].ids);
    REQUIRE(it != oracle.index.end());
    visits[it->second] += 1.0;
  }
  for (double& v : visits) v /= static_cast<double>(keep);
  const double tv = testsup::total_variation(visits, oracle.probs);
  MESSAGE("stationary total variation: ", tv);
  CHECK(tv < 0.05);
}

TEST_CASE("flattened infill proposals leave the stationary law unchanged") {
  // infill_temperature reshapes only the proposal kernel; the acceptance
  // correction prices the same flattened weights, so exp(-E)/Z must still be
  // the long-run law.
  NgramConfig ncfg = tiny_lm_config();
  ncfg.infill_temperature = 2.5;
  Fixture fx({"a b", "b a", "a a", "b b"}, ncfg, 8);
  EnergyModel energy = fx.energy(EnergyWeights::generation());
  StyleVector target = fx.encoder.encode(fx.corpus.authors[0].documents);
  MhSampler sampler(energy, tiny_chain_config());

  const testsup::ChainOracle oracle = testsup::enumerate_chain(energy, target, 3);
  REQUIRE(oracle.states.size() == 14);

  auto state = sampler.init_state({testsup::doc("a b")}, target, nullptr);
  Rng rng(103);
  const long burn = 20000;
  const long keep = 200000;
  for (long i = 0; i < burn; ++i) sampler.step(state, target, rng);
  std::vector<double> visits(oracle.states.size(), 0.0);
  for (long i = 0; i < keep; ++i) {
    sampler.step(state, target, rng);
    const auto it = oracle.index.find(state.docs[0].ids);
    REQUIRE(it != oracle.index.end());
    visits[it->second] += 1.0;
  }
  for (double& v : visits) v /= static_cast<double>(keep);
  const double tv = testsup::total_variation(visits, oracle.probs);
  MESSAGE("flattened-kernel total variation: ", tv);
  CHECK(tv < 0.05);
}
