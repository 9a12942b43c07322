#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/guided_decoder.hpp"
#include "stylo/style_encoder.hpp"

namespace stylo {

// Smoothed idf over lowercased word/number terms; cosine over tf*idf.
class TfidfModel {
 public:
  static TfidfModel fit(const Corpus& corpus);

  std::map<std::string, double> vectorize(const std::vector<Token>& tokens) const;
  // Both termless: 1 (nothing to disagree about); one termless: 0.
  double cosine(const std::vector<Token>& a, const std::vector<Token>& b) const;

  void save(std::ostream& out) const;
  static TfidfModel load(std::istream& in);

 private:
  std::map<std::string, double> idf_;
  double default_idf_ = 1.0;
};

struct EnergyWeights {
  double fluency = 1.0;
  double style = 4.0;
  double semantic = 4.0;
  double hamming = 2.0;

  static EnergyWeights generation() { return {1.0, 4.0, 0.0, 0.0}; }
  static EnergyWeights transfer() { return {1.0, 4.0, 4.0, 2.0}; }
};

struct EnergyBreakdown {
  double fluency = 0.0;               // mean over documents
  double style = 0.0;                 // pooled over the whole state
  std::optional<double> semantic;     // mean over documents; unset if off
  std::optional<double> hamming;
  double total = 0.0;
};

// Product-of-experts energy over a multi-document state. Lower is better:
//   fluency   -mean adapted log-likelihood per document
//   style     -angular similarity of the pooled state style to the target
//   semantic  -tf-idf cosine to the reference document (per document)
//   hamming   token mismatch rate vs the reference (length-aware)
class EnergyModel {
 public:
  EnergyModel(const GuidedDecoder& decoder, const StyleEncoder& encoder,
              const TfidfModel& tfidf, EnergyWeights weights);

  const EnergyWeights& weights() const { return weights_; }
  const GuidedDecoder& decoder() const { return decoder_; }
  const StyleEncoder& encoder() const { return encoder_; }
  bool needs_reference() const {
    return weights_.semantic > 0.0 || weights_.hamming > 0.0;
  }

  double fluency_doc(const std::vector<Token>& tokens,
                     const StyleVector& target) const;
  double style_energy(const FeatureCounts& pooled,
                      const StyleVector& target) const;
  double semantic_doc(const std::vector<Token>& doc,
                      const std::vector<Token>& reference) const;
  double hamming_doc(const std::vector<Token>& doc,
                     const std::vector<Token>& reference) const;

  // Weighted total from per-expert means; breakdown fields echoed back.
  EnergyBreakdown combine(double fluency_mean, double style,
                          std::optional<double> semantic_mean,
                          std::optional<double> hamming_mean) const;

  // Full recompute from scratch. reference docs pair with state docs by
  // index and are required when semantic or hamming weights are active.
  EnergyBreakdown total(std::span<const Document> docs,
                        const StyleVector& target,
                        const std::vector<Document>* reference) const;

 private:
  const GuidedDecoder& decoder_;
  const StyleEncoder& encoder_;
  const TfidfModel& tfidf_;
  EnergyWeights weights_;
};

}  // namespace stylo
