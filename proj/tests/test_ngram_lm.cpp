#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/ngram_lm.hpp"
#include "stylo/rng.hpp"
#include "test_support.hpp"

using namespace stylo;

namespace {

Corpus corpus_of(const std::vector<std::string>& texts) {
  Corpus c;
  c.authors.push_back({"a", {}});
  for (const auto& t : texts) c.authors[0].documents.push_back(testsup::doc(t));
  return c;
}

NgramConfig cfg(int order, double discount, int min_count = 1) {
  NgramConfig c;
  c.order = order;
  c.discount = discount;
  c.min_count = min_count;
  return c;
}

double p_of(const NgramModel& m, const std::string& next,
            const std::vector<std::string>& context) {
  std::vector<TokenId> ctx;
  for (const auto& s : context) ctx.push_back(m.vocab().id_or_unk(s));
  return std::exp(m.logprob(m.vocab().id_or_unk(next), ctx));
}

}  // namespace

TEST_CASE("vocabulary is specials followed by sorted surfaces") {
  NgramModel m = NgramModel::fit(corpus_of({"b a c a"}), cfg(1, 0.0));
  const Vocab& v = m.vocab();
  REQUIRE(v.size() == 6);
  CHECK(v.surfaces[0] == "<unk>");
  CHECK(v.surfaces[1] == "<s>");
  CHECK(v.surfaces[2] == "</s>");
  CHECK(v.surfaces[3] == "a");
  CHECK(v.surfaces[4] == "b");
  CHECK(v.surfaces[5] == "c");
  CHECK(v.is_special(0));
  CHECK(!v.is_special(3));
  CHECK(m.predictable_vocab() == 5);
}

TEST_CASE("min_count collapses rare surfaces to unk") {
  NgramModel m = NgramModel::fit(corpus_of({"common common rare"}),
                                 cfg(1, 0.0, 2));
  CHECK(m.vocab().id_or_unk("common") > 2);
  CHECK(m.vocab().id_or_unk("rare") == m.vocab().unk);
  auto ids = m.ids(tokenize("common rare"));
  CHECK(ids[1] == m.vocab().unk);
}

TEST_CASE("undiscounted unigram reproduces raw frequencies") {
  NgramModel m = NgramModel::fit(corpus_of({"a a b"}), cfg(1, 0.0));
  CHECK(p_of(m, "a", {}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(p_of(m, "b", {}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // EOS carries no mass at order 1, so token frequencies are exact.
  CHECK(p_of(m, "</s>", {}) == 0.0);
  CHECK(p_of(m, "<unk>", {}) == 0.0);
}

TEST_CASE("discounted bigram matches the closed form") {
  // Docs "a b" and "a a" with delta = 0.5. Hand-derived expected values:
  //   unigram counts a:3 b:1 (total 4, 2 distinct, 4 predictable ids)
  //   p1(x) = max(c - d, 0)/4 + (d * 2/4)/4
  //   context [a] events {a:1, b:1, </s>:1}; p(x|a) = max(c-d,0)/3 + d * p1(x)
  NgramModel m = NgramModel::fit(corpus_of({"a b", "a a"}), cfg(2, 0.5));
  const double p1a = 2.5 / 4.0 + 0.0625;
  const double p1b = 0.5 / 4.0 + 0.0625;
  const double p1e = 0.0625;
  CHECK(p_of(m, "b", {"a"}) ==
        doctest::Approx(0.5 / 3.0 + 0.5 * p1b).epsilon(1e-12));
  CHECK(p_of(m, "a", {"a"}) ==
        doctest::Approx(0.5 / 3.0 + 0.5 * p1a).epsilon(1e-12));
  CHECK(p_of(m, "</s>", {"a"}) ==
        doctest::Approx(0.5 / 3.0 + 0.5 * p1e).epsilon(1e-12));
  CHECK(p_of(m, "<unk>", {"a"}) == doctest::Approx(0.5 * 0.0625).epsilon(1e-12));
  // Document starts: context [<s>] saw only "a" (twice).
  CHECK(p_of(m, "a", {}) ==
        doctest::Approx(1.5 / 2.0 + (0.5 * 0.5) * p1a).epsilon(1e-12));
  // seq_mean_logprob is the mean of the per-position conditionals.
  auto ids = m.ids(tokenize("a b"));
  const double expected =
      0.5 * (std::log(1.5 / 2.0 + 0.25 * p1a) + std::log(0.5 / 3.0 + 0.5 * p1b));
  CHECK(m.seq_mean_logprob(ids) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(m.perplexity(ids) == doctest::Approx(std::exp(-expected)).epsilon(1e-12));
}

TEST_CASE("conditionals sum to one over the predictable vocabulary") {
  NgramModel m = NgramModel::fit(
      corpus_of({"the cat sat on the mat", "the dog sat", "a cat ran on"}),
      cfg(3, 0.75));
  Rng rng(11);
  std::vector<TokenId> all;
  for (TokenId id = 0; id < m.vocab().size(); ++id) all.push_back(id);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenId> ctx;
    const std::size_t len = rng.uniform_index(4);
    for (std::size_t i = 0; i < len; ++i) {
      ctx.push_back(all[rng.uniform_index(all.size())]);
    }
    std::vector<double> lp = m.next_logprobs(ctx);
    CHECK(lp[m.vocab().bos] == kNegInf);
    double sum = 0.0;
    for (TokenId id = 0; id < m.vocab().size(); ++id) {
      if (id == m.vocab().bos) continue;
      CHECK(lp[id] > kNegInf);  // positive discount floors every token
      sum += std::exp(lp[id]);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("unseen contexts back off to the unigram") {
  NgramModel m = NgramModel::fit(corpus_of({"a b", "a a"}), cfg(2, 0.5));
  // <unk> never appears as a context, so no bigram level applies.
  CHECK(p_of(m, "a", {"<unk>"}) == doctest::Approx(p_of(m, "a", {"zzz"})));
  const double p1a = 2.5 / 4.0 + 0.0625;
  CHECK(p_of(m, "a", {"zzz"}) == doctest::Approx(p1a).epsilon(1e-12));
}

TEST_CASE("end of document is predicted after final tokens") {
  NgramModel m = NgramModel::fit(corpus_of({"a b", "a a"}), cfg(2, 0.5));
  // Context [b] ended a document every time it occurred.
  const double p1e = 0.0625;
  CHECK(p_of(m, "</s>", {"b"}) ==
        doctest::Approx(0.5 / 1.0 + 0.5 * p1e).epsilon(1e-12));
}

TEST_CASE("uniform two-token model has perplexity two") {
  NgramModel m = NgramModel::fit(corpus_of({"a b"}), cfg(1, 0.0));
  auto ids = m.ids(tokenize("a b"));
  CHECK(m.perplexity(ids) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("sampling is deterministic per seed and matches the model") {
  NgramModel m = NgramModel::fit(corpus_of({"a a b"}), cfg(1, 0.0));
  Rng r1(42), r2(42);
  CHECK(m.sample(8, 1.0, r1) == m.sample(8, 1.0, r2));

  // Monte Carlo: single-token draws follow the unigram within 1%.
  Rng rng(5);
  int hits = 0;
  const int draws = 100000;
  const TokenId a = m.vocab().id_or_unk("a");
  for (int i = 0; i < draws; ++i) {
    auto ids = m.sample(1, 1.0, rng);
    REQUIRE(ids.size() == 1);
    if (ids[0] == a) ++hits;
  }
  CHECK(static_cast<double>(hits) / draws ==
        doctest::Approx(2.0 / 3.0).epsilon(0.015));
}

TEST_CASE("sampling never emits specials and respects max_len") {
  NgramModel m = NgramModel::fit(
      corpus_of({"one two three four", "two three four five"}), cfg(2, 0.75));
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    auto ids = m.sample(6, 1.0, rng);
    CHECK(ids.size() <= 6);
    CHECK(!ids.empty());
    for (TokenId id : ids) CHECK(!m.vocab().is_special(id));
  }
}

TEST_CASE("infill beams are normalized and exhaustive on tiny vocabularies") {
  NgramModel m = NgramModel::fit(corpus_of({"a b a", "b a b"}), cfg(2, 0.5));
  const TokenId a = m.vocab().id_or_unk("a");
  const TokenId b = m.vocab().id_or_unk("b");
  for (int len : {0, 1, 2}) {
    auto beam = m.infill_beam(std::vector<TokenId>{a}, std::vector<TokenId>{b},
                              len);
    double sum = 0.0;
    for (double w : beam.log_w) sum += std::exp(w);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    // beam_width 64 covers every content-token sequence over {a, b};
    // specials are never proposed.
    const std::size_t expect = len == 0 ? 1 : (len == 1 ? 2 : 4);
    CHECK(beam.candidates.size() == expect);
  }
}

TEST_CASE("length prior is a normalized truncated geometric") {
  NgramModel m = NgramModel::fit(corpus_of({"a b"}), cfg(2, 0.5));
  double sum = 0.0;
  for (int len = 0; len <= 4; ++len) {
    sum += std::exp(m.length_log_prior(len, 2, 0, 4));
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  // Peak is the mask width; decay is symmetric around it.
  CHECK(m.length_log_prior(2, 2, 0, 4) > m.length_log_prior(1, 2, 0, 4));
  CHECK(m.length_log_prior(1, 2, 0, 4) ==
        doctest::Approx(m.length_log_prior(3, 2, 0, 4)));
  // Support is clamped to max_infill_len (default 4).
  CHECK(m.length_log_prior(5, 2, 0, 9) == kNegInf);
  CHECK_THROWS_AS(m.length_log_prior(1, 1, 3, 2), std::invalid_argument);
}

TEST_CASE("proposal log q prices the draw it made") {
  NgramModel m = NgramModel::fit(
      corpus_of({"a b a b", "b a a b", "a a b b"}), cfg(2, 0.5));
  const std::vector<TokenId> left{m.vocab().id_or_unk("a")};
  const std::vector<TokenId> right{m.vocab().id_or_unk("b")};
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    InfillProposal p = m.propose_infill(left, right, 1, 0, 2, rng);
    CHECK(p.replacement.size() <= 2);
    const double q = m.infill_logprob(left, right, p.replacement, 1, 0, 2);
    CHECK(q == doctest::Approx(p.log_q).epsilon(1e-12));
  }
  // Out-of-support spans price to zero probability.
  const std::vector<TokenId> too_long(3, m.vocab().id_or_unk("a"));
  CHECK(m.infill_logprob(left, right, too_long, 1, 0, 2) == kNegInf);
}

TEST_CASE("proposal distribution over a tiny support sums to one") {
  NgramModel m = NgramModel::fit(corpus_of({"a b a", "b a b"}), cfg(2, 0.5));
  const std::vector<TokenId> left{m.vocab().id_or_unk("a")};
  const std::vector<TokenId> right{m.vocab().id_or_unk("b")};
  const TokenId a = m.vocab().id_or_unk("a");
  const TokenId b = m.vocab().id_or_unk("b");
  const TokenId u = m.vocab().unk;
  // mask_width 1 with lengths 0..1: support is {empty, [a], [b]}.
  std::map<std::vector<TokenId>, double> q;
  for (const auto& span : std::vector<std::vector<TokenId>>{{}, {a}, {b}}) {
    q[span] = std::exp(m.infill_logprob(left, right, span, 1, 0, 1));
  }
  double total = 0.0;
  for (const auto& [span, p] : q) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  // Specials are not proposable.
  CHECK(m.infill_logprob(left, right, std::vector<TokenId>{u}, 1, 0, 1) ==
        kNegInf);

  // Monte Carlo agreement between propose_infill and its stated law.
  std::map<std::vector<TokenId>, int> counts;
  Rng rng(23);
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) {
    counts[m.propose_infill(left, right, 1, 0, 1, rng).replacement] += 1;
  }
  for (const auto& [span, p] : q) {
    const double freq = static_cast<double>(counts[span]) / draws;
    CHECK(std::abs(freq - p) < 0.01);
  }
}

TEST_CASE("save and load round-trip bit for bit") {
  NgramModel m = NgramModel::fit(
      corpus_of({"the cat sat", "the dog ran", "a cat ran fast"}),
      cfg(3, 0.75));
  std::ostringstream first;
  m.save(first);
  std::istringstream in(first.str());
  NgramModel back = NgramModel::load(in);
  CHECK(back.vocab().size() == m.vocab().size());
  CHECK(back.config().order == 3);
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<TokenId> ctx;
    for (std::size_t i = 0; i < rng.uniform_index(3); ++i) {
      ctx.push_back(static_cast<TokenId>(rng.uniform_index(m.vocab().size())));
    }
    const TokenId next =
        static_cast<TokenId>(rng.uniform_index(m.vocab().size()));
    CHECK(m.logprob(next, ctx) == back.logprob(next, ctx));
  }
  std::ostringstream second;
  back.save(second);
  CHECK(first.str() == second.str());
}

TEST_CASE("fit rejects empty corpora and bad configs") {
  Corpus empty;
  CHECK_THROWS_AS(NgramModel::fit(empty, cfg(2, 0.5)), std::invalid_argument);
  Corpus c = corpus_of({"a b"});
  CHECK_THROWS_AS(NgramModel::fit(c, cfg(0, 0.5)), std::invalid_argument);
  CHECK_THROWS_AS(NgramModel::fit(c, cfg(2, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(NgramModel::fit(c, cfg(2, -0.1)), std::invalid_argument);
}
