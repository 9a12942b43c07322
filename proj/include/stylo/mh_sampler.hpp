#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/energy.hpp"
#include "stylo/ngram_lm.hpp"
#include "stylo/rng.hpp"

namespace stylo {

enum class PosTag { noun, other };

// Heuristic tagger: lexicon nouns, noun-forming suffixes, capitalized
// non-sentence-initial unknowns. Deterministic; word tokens only.
std::vector<PosTag> tag_pos(const std::vector<Token>& tokens);

struct SamplerConfig {
  enum class Preset { transfer, revise };
  Preset preset = Preset::transfer;
  int mask_width = 2;        // peak of the randomized span width
  int steps_multiplier = 80; // transfer budget: steps per initial token
  int epochs = 5;            // revise budget: passes per initial token
  double width_ratio = 0.5;  // geometric decay of the width distribution
  bool noun_constraint = true;
  int max_doc_len = 64;      // growth cap per document; 0 = unbounded
};

struct StateDoc {
  std::string author_id, domain_label;
  std::vector<Token> tokens;
  std::vector<std::string> seps;
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> protect;  // positions edits must not touch
  std::vector<double> pos_logprob;    // adapted per-position log-likelihood
  FeatureCounts feats;
  double fluency = 0.0, semantic = 0.0, hamming = 0.0;
  int len_cap = 0;  // max token count this doc may grow to (0 = none)
};

struct SamplerState {
  std::vector<StateDoc> docs;
  std::vector<std::vector<Token>> reference_tokens;  // empty if unused
  FeatureCounts pooled;
  double fluency_sum = 0.0, semantic_sum = 0.0, hamming_sum = 0.0;
  EnergyBreakdown energy;
  std::vector<StateDoc> best_docs;
  EnergyBreakdown best_energy;
  long steps_taken = 0;
  long accepted = 0;
};

struct StepTrace {
  long step = 0;
  double energy = 0.0;
  bool accepted = false;
};

struct RunResult {
  std::vector<Document> best;
  EnergyBreakdown best_energy;
  EnergyBreakdown initial_energy;
  long steps = 0;
  long accepted = 0;
  std::vector<StepTrace> trace;
};

// Metropolis-Hastings over multi-document states. One step: pick a document,
// pick an editable start, draw a mask width around the configured peak, draw
// a same-gap replacement from the LM infill beam, and accept with the exact
// asymmetric ratio. Every stochastic choice (start, width, length, span)
// enters log q in both directions, so the chain has e^{-E} as stationary
// law; the reverse move of (mask M, insert L) is (mask L, insert M) at the
// same start, which is why the width must be randomized rather than fixed.
class MhSampler {
 public:
  MhSampler(const EnergyModel& energy, SamplerConfig cfg);

  const SamplerConfig& config() const { return cfg_; }

  SamplerState init_state(const std::vector<Document>& docs,
                          const StyleVector& target,
                          const std::vector<Document>* reference) const;

  // One proposal; returns whether it was accepted. No-ops (nothing
  // editable) count as a rejected step.
  bool step(SamplerState& state, const StyleVector& target, Rng& rng) const;

  long preset_steps(const std::vector<Document>& docs) const;

  // steps < 0 selects the preset budget. The result is the lowest-energy
  // state visited, initial state included.
  RunResult run(const std::vector<Document>& docs, const StyleVector& target,
                const std::vector<Document>* reference, long steps,
                Rng& rng) const;

  static double acceptance_log_prob(double e_old, double e_new,
                                    double log_q_fwd, double log_q_rev);

  std::vector<int> editable_starts(const StateDoc& doc) const;

  // Recompute the state's energy from scratch (cache audit hook).
  EnergyBreakdown recompute_energy(const SamplerState& state,
                                   const StyleVector& target) const;

 private:
  const EnergyModel& energy_;
  SamplerConfig cfg_;

  const NgramModel& lm() const { return energy_.decoder().lm(); }
  StateDoc make_state_doc(const Document& doc, const StyleVector& target,
                          const std::vector<Token>* reference) const;
  void score_positions(StateDoc& doc, const StyleVector& target,
                       int from) const;
  int protected_limit(const StateDoc& doc, int start) const;
};

}  // namespace stylo
