#pragma once

#include <span>
#include <vector>

#include "stylo/future_regressor.hpp"
#include "stylo/ngram_lm.hpp"
#include "stylo/rng.hpp"
#include "stylo/style_encoder.hpp"

namespace stylo {

struct GuidedConfig {
  int top_k = 50;            // base-model candidates rescored per position
  double lambda = 1.0;       // weight on the style-regressor term
  double temperature = 1.0;  // sampling temperature over rescored scores
  int max_len = 32;          // generation length cap
};

// Next-token guidance: the base model's top-k candidates are rescored by
// log p_base(v | prefix) - lambda * NLL(target | prefix + v) and
// renormalized. lambda = 0 reduces exactly to the base model restricted to
// its top-k set.
class GuidedDecoder {
 public:
  GuidedDecoder(const NgramModel& lm, const RegressorParams& regressor,
                const StyleEncoder& encoder, GuidedConfig cfg);

  const GuidedConfig& config() const { return cfg_; }
  const NgramModel& lm() const { return lm_; }

  // Mutable buffers for a scoring pass; feats must always mirror the prefix
  // the caller is scoring against.
  struct Workspace {
    PrefixFeaturizer feats;
    RegressorScratch scratch;
    std::vector<double> input;
  };

  struct Rescored {
    std::vector<TokenId> candidates;
    std::vector<double> log_p;  // normalized over candidates
  };
  Rescored rescore_next(std::span<const TokenId> prefix_ids,
                        const StyleVector& target, Workspace& ws) const;

  // Rescored log-prob of `actual` at the current position, falling back to
  // the base model when it is outside the top-k set.
  struct PositionScore {
    double log_p = 0.0;
    bool fallback = false;
  };
  PositionScore score_position(std::span<const TokenId> prefix_ids,
                               TokenId actual, const StyleVector& target,
                               Workspace& ws) const;

  std::vector<Token> generate(const StyleVector& target, Rng& rng) const;

  struct AdaptedScore {
    double mean_logprob = 0.0;
    int fallback_positions = 0;
  };
  AdaptedScore adapted_seq_mean_logprob(const std::vector<Token>& tokens,
                                        const StyleVector& target) const;

 private:
  const NgramModel& lm_;
  const RegressorParams& regressor_;
  const StyleEncoder& encoder_;
  GuidedConfig cfg_;
};

}  // namespace stylo
