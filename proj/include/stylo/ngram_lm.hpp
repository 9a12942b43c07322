#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/mathutil.hpp"
#include "stylo/rng.hpp"

namespace stylo {

using TokenId = std::uint32_t;

struct Vocab {
  std::vector<std::string> surfaces;  // id order: unk, bos, eos, then sorted
  std::vector<TokenKind> kinds;
  std::unordered_map<std::string, TokenId> index;
  TokenId unk = 0, bos = 1, eos = 2;

  std::size_t size() const { return surfaces.size(); }
  TokenId id_or_unk(std::string_view surface) const;
  Token token(TokenId id) const;
  bool is_special(TokenId id) const { return id <= 2; }
};

struct NgramConfig {
  int order = 3;
  double discount = 0.75;       // absolute discount, in [0,1)
  int min_count = 2;            // rarer surfaces collapse to unk
  int beam_width = 64;          // infill candidate set size per length
  int max_infill_len = 4;       // longest replacement an infill may propose
  double length_ratio = 0.5;    // geometric decay of the infill length prior
  double infill_temperature = 1.0;  // >1 flattens infill proposal weights
};

struct InfillProposal {
  std::vector<TokenId> replacement;
  double log_q = kNegInf;  // exact probability of this draw
};

// Interpolated absolute-discounting n-gram model over the document token
// stream. EOS is predicted at orders >= 2 and carries only smoothing mass at
// order 1, so plain unigram fits reproduce raw token frequencies exactly.
// BOS pads contexts and is never predicted.
class NgramModel {
 public:
  static NgramModel fit(const Corpus& corpus, const NgramConfig& cfg);

  const NgramConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  // All ids a conditional distribution ranges over (everything but BOS).
  std::size_t predictable_vocab() const { return vocab_.size() - 1; }

  std::vector<TokenId> ids(const std::vector<Token>& tokens) const;

  // context is the full preceding sequence; it is truncated to the last
  // order-1 ids and BOS-padded internally.
  double logprob(TokenId next, std::span<const TokenId> context) const;
  std::vector<double> next_logprobs(std::span<const TokenId> context) const;

  double seq_mean_logprob(std::span<const TokenId> token_ids) const;
  double perplexity(std::span<const TokenId> token_ids) const;

  // Ancestral sampling; stops at EOS or max_len. Never emits unk, never
  // emits EOS first (documents are non-empty).
  std::vector<TokenId> sample(int max_len, double temperature, Rng& rng) const;

  struct Beam {
    std::vector<std::vector<TokenId>> candidates;
    std::vector<double> log_w;  // normalized over the beam
  };
  // Candidate replacements of exactly len tokens for the gap between left
  // and right, scored by LM probability including the right-edge
  // continuation factor, flattened by infill_temperature before
  // normalization. Deterministic; exhaustive when beam_width covers every
  // content-token sequence of that length.
  Beam infill_beam(std::span<const TokenId> left,
                   std::span<const TokenId> right, int len) const;

  // log prior over replacement length: ratio^|len-peak| normalized over
  // [len_lo, len_hi] (clamped to [0, max_infill_len]).
  double length_log_prior(int len, int peak, int len_lo, int len_hi) const;

  // Draw a replacement for a masked span of mask_width tokens. len_lo/len_hi
  // bound the replacement length (doc-level constraints). log_q prices the
  // full draw: length prior times beam weight.
  InfillProposal propose_infill(std::span<const TokenId> left,
                                std::span<const TokenId> right, int mask_width,
                                int len_lo, int len_hi, Rng& rng) const;

  // Exact probability propose_infill would assign to span_tokens under the
  // same bounds; -inf if the span is outside the beam or bounds.
  double infill_logprob(std::span<const TokenId> left,
                        std::span<const TokenId> right,
                        std::span<const TokenId> span_tokens, int mask_width,
                        int len_lo, int len_hi) const;

  void save(std::ostream& out) const;
  static NgramModel load(std::istream& in);

 private:
  struct ContextStats {
    std::int64_t total = 0;
    std::vector<std::pair<TokenId, std::int64_t>> by_id;  // sorted by id
    std::vector<std::uint32_t> by_count;  // index into by_id, count desc
  };
  using ContextTable = std::map<std::vector<TokenId>, ContextStats>;

  NgramConfig cfg_;
  Vocab vocab_;
  ContextStats unigram_;
  std::vector<ContextTable> tables_;  // tables_[o-2] holds order-o contexts

  std::vector<TokenId> padded_context(std::span<const TokenId> context) const;
  const ContextStats* find_context(int order, std::span<const TokenId> key) const;
  double prob_from_levels(
      TokenId next, const std::vector<const ContextStats*>& levels) const;
  std::vector<const ContextStats*> backoff_levels(
      std::span<const TokenId> padded) const;
  std::vector<TokenId> expansion_candidates(
      std::span<const TokenId> padded) const;
  static void finalize_stats(ContextStats& st);
};

}  // namespace stylo
