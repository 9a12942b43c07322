#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/guided_decoder.hpp"
#include "stylo/ngram_lm.hpp"
#include "stylo/style_encoder.hpp"

namespace stylo {

// Percentage change in perplexity relative to the reference.
double delta_fluency_pct(double generated_ppl, double reference_ppl);
double delta_fluency_signed(double generated_ppl, double reference_ppl);

// Byte-level edit distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Equal error rate over distance scores (small = genuine). Linear
// interpolation between the ROC operating points where FAR crosses FRR.
double equal_error_rate(std::vector<double> genuine,
                        std::vector<double> impostor);

// Attribution: every query sample scored against every target sample by
// style-vector cosine distance; same author_id = genuine.
double attribution_eer(const std::vector<AuthorSample>& queries,
                       const std::vector<AuthorSample>& targets,
                       const StyleEncoder& encoder);

// Surface-style rates over raw text.
double cap_rate(std::string_view text);    // upper / letters
double punct_rate(std::string_view text);  // punct / non-whitespace

// All (content, style) index pairs whose domain labels differ. An author's
// domain is its first document's label.
std::vector<std::pair<std::size_t, std::size_t>> round_robin_pairs(
    const std::vector<AuthorSample>& contents,
    const std::vector<AuthorSample>& styles);

// Spearman rank correlation (average ranks on ties).
double spearman(std::span<const double> x, std::span<const double> y);

// Machine-text detector: logistic regression over scaled style features
// plus the base LM's mean negative log-likelihood, standardized on the
// training set. Trained by full-batch gradient descent (deterministic).
struct DetectorModel {
  std::vector<double> w;
  double b = 0.0;
  std::vector<double> feat_mean, feat_std;
};

std::vector<double> detector_features(const Document& doc,
                                      const StyleEncoder& encoder,
                                      const NgramModel& lm);

DetectorModel train_detector(const std::vector<Document>& real_docs,
                             const std::vector<Document>& fake_docs,
                             const StyleEncoder& encoder, const NgramModel& lm,
                             int steps = 500, double learning_rate = 0.5);

// P(machine-generated).
double detector_score(const DetectorModel& model,
                      std::span<const double> features);

double detector_accuracy(const DetectorModel& model,
                         const std::vector<Document>& real_docs,
                         const std::vector<Document>& fake_docs,
                         const StyleEncoder& encoder, const NgramModel& lm);

// Generations along the slerp path from the ablated to the base style
// vector; per-weight means of the surface rates.
struct SweepPoint {
  double weight = 0.0;
  double mean_cap_rate = 0.0;
  double mean_punct_rate = 0.0;
};

std::vector<SweepPoint> interpolation_sweep(const GuidedDecoder& decoder,
                                            const StyleVector& ablated,
                                            const StyleVector& base,
                                            std::span<const double> weights,
                                            int gens_per_weight,
                                            std::uint64_t seed);

// Quantile of bootstrap-resampled means; used for one-sided confidence
// bounds in the acceptance harness.
double bootstrap_mean_quantile(std::span<const double> values, double quantile,
                               int resamples, std::uint64_t seed);

}  // namespace stylo
