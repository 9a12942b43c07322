#include "stylo/guided_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stylo/mathutil.hpp"

namespace stylo {

GuidedDecoder::GuidedDecoder(const NgramModel& lm,
                             const RegressorParams& regressor,
                             const StyleEncoder& encoder, GuidedConfig cfg)
    : lm_(lm), regressor_(regressor), encoder_(encoder), cfg_(cfg) {
  if (cfg_.top_k < 1) throw std::invalid_argument("decoder: top_k >= 1");
  if (cfg_.temperature <= 0.0) {
    throw std::invalid_argument("decoder: temperature > 0");
  }
  if (cfg_.max_len < 1) throw std::invalid_argument("decoder: max_len >= 1");
  if (cfg_.lambda < 0.0) throw std::invalid_argument("decoder: lambda >= 0");
}

GuidedDecoder::Rescored GuidedDecoder::rescore_next(
    std::span<const TokenId> prefix_ids, const StyleVector& target,
    Workspace& ws) const {
  const Vocab& v = lm_.vocab();
  std::vector<double> base = lm_.next_logprobs(prefix_ids);
  base[v.unk] = kNegInf;
  if (prefix_ids.empty()) base[v.eos] = kNegInf;

  // Top-k base candidates, ties broken by id for determinism.
  std::vector<TokenId> order;
  order.reserve(base.size());
  for (TokenId id = 0; id < base.size(); ++id) {
    if (base[id] > kNegInf) order.push_back(id);
  }
  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.top_k), order.size());
  if (k == 0) throw std::runtime_error("rescore_next: no viable candidates");
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&base](TokenId a, TokenId b) {
                      if (base[a] != base[b]) return base[a] > base[b];
                      return a < b;
                    });
  order.resize(k);

  Rescored out;
  out.candidates = std::move(order);
  out.log_p.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const TokenId cand = out.candidates[i];
    double score = base[cand];
    if (cfg_.lambda != 0.0) {
      double nll;
      if (cand == v.eos) {
        // Sequence ends here: the finished text is the prefix itself.
        const StyleVector f = encoder_.encode_counts(ws.feats.counts());
        nll = prediction_nll(regressor_, f.span(), target.span(), ws.scratch);
      } else {
        ws.feats.push(v.token(cand));
        const StyleVector f = encoder_.encode_counts(ws.feats.counts());
        nll = prediction_nll(regressor_, f.span(), target.span(), ws.scratch);
        ws.feats.pop();
      }
      score -= cfg_.lambda * nll;
    }
    out.log_p[i] = score;
  }
  const double z = log_sum_exp(out.log_p);
  for (double& lp : out.log_p) lp -= z;
  return out;
}

GuidedDecoder::PositionScore GuidedDecoder::score_position(
    std::span<const TokenId> prefix_ids, TokenId actual,
    const StyleVector& target, Workspace& ws) const {
  const Rescored r = rescore_next(prefix_ids, target, ws);
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    if (r.candidates[i] == actual) return {r.log_p[i], false};
  }
  return {lm_.logprob(actual, prefix_ids), true};
}

std::vector<Token> GuidedDecoder::generate(const StyleVector& target,
                                           Rng& rng) const {
  const Vocab& v = lm_.vocab();
  Workspace ws;
  std::vector<TokenId> prefix;
  std::vector<Token> out;
  while (static_cast<int>(out.size()) < cfg_.max_len) {
    const Rescored r = rescore_next(prefix, target, ws);
    double mx = kNegInf;
    for (double lp : r.log_p) mx = std::max(mx, lp);
    std::vector<double> w(r.log_p.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = std::exp((r.log_p[i] - mx) / cfg_.temperature);
    }
    const TokenId pick = r.candidates[rng.categorical(w)];
    if (pick == v.eos) break;
    const Token tok = v.token(pick);
    ws.feats.push(tok);
    prefix.push_back(pick);
    out.push_back(tok);
  }
  return out;
}

GuidedDecoder::AdaptedScore GuidedDecoder::adapted_seq_mean_logprob(
    const std::vector<Token>& tokens, const StyleVector& target) const {
  if (tokens.empty()) {
    throw std::invalid_argument("adapted_seq_mean_logprob: empty sequence");
  }
  const std::vector<TokenId> ids = lm_.ids(tokens);
  Workspace ws;
  AdaptedScore score;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const PositionScore ps = score_position(
        std::span<const TokenId>(ids.data(), i), ids[i], target, ws);
    score.mean_logprob += ps.log_p;
    if (ps.fallback) ++score.fallback_positions;
    // Advance with the real token so OOV surfaces keep their features.
    ws.feats.push(tokens[i]);
  }
  score.mean_logprob /= static_cast<double>(ids.size());
  return score;
}

}  // namespace stylo
