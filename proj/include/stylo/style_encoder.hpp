#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylo/corpus.hpp"

namespace stylo {

inline constexpr int kStyleDim = 64;

// Fixed feature layout (all rates in [0,1] except means / run lengths,
// which the affine scaling maps into [0,1]):
//   0       capitalized-letter fraction
//   1..10   punctuation class rates: . , ! ? ' " :; - brackets other
//   11      whitespace-run token rate
//   12      mean whitespace run length (chars)
//   13      newline share of whitespace
//   14      mean word length
//   15      type/token ratio over words
//   16      digit share of non-whitespace chars
//   17..48  function-word rates (32 words)
//   49..63  hashed char-trigram bins (15 bins)
inline constexpr int kPunctClasses = 10;
inline constexpr int kFunctionWords = 32;
inline constexpr int kTrigramBins = 15;

const std::array<std::string, kFunctionWords>& function_word_list();
int punct_class(char c);
int trigram_bin(const char* p);  // FNV-1a over 3 bytes, mod kTrigramBins

// Additive integer counters; exact under add/subtract, so pooled state
// features can be maintained incrementally across MH edits.
struct FeatureCounts {
  std::int64_t letters = 0, upper_letters = 0;
  std::array<std::int64_t, kPunctClasses> punct{};
  std::int64_t tokens = 0, space_run_tokens = 0;
  std::int64_t ws_runs = 0, ws_chars = 0, newlines = 0;
  std::int64_t word_tokens = 0, word_chars = 0;
  std::int64_t digit_chars = 0, nonws_chars = 0;
  std::array<std::int64_t, kFunctionWords> fw{};
  std::array<std::int64_t, kTrigramBins> tri{};
  std::int64_t trigrams = 0;
  std::unordered_map<std::string, std::int64_t> word_counts;

  void add(const FeatureCounts& o);
  void subtract(const FeatureCounts& o);
  bool empty() const { return tokens == 0; }
};

FeatureCounts featurize(const std::vector<Token>& tokens,
                        const std::vector<std::string>& seps);
FeatureCounts featurize(const Document& doc);

using FeatureVec = std::array<double, kStyleDim>;

// Raw (unscaled) feature values from counters.
FeatureVec feature_breakdown(const FeatureCounts& c);

// Incremental prefix features for token-by-token decoding. Tokens are laid
// out with canonical separators; push/pop are exact inverses.
class PrefixFeaturizer {
 public:
  void push(const Token& t);
  void pop();
  const FeatureCounts& counts() const { return counts_; }
  std::size_t size() const { return tokens_.size(); }
  void clear();

 private:
  FeatureCounts counts_;
  std::string buffer_;
  std::vector<Token> tokens_;
  std::vector<std::uint32_t> appended_bytes_;

  void apply_trigrams(std::size_t old_len, int sign);
};

struct FeatureScaling {
  FeatureVec lo{};
  FeatureVec hi{};
  static FeatureScaling identity();  // lo 0, hi 1
};

// Per-dimension min/max over per-author pooled rows and per-document rows.
FeatureScaling fit_scaling(const Corpus& corpus);

struct StyleVector {
  FeatureVec v{};
  std::span<const double> span() const { return {v.data(), v.size()}; }
};

class StyleEncoder {
 public:
  StyleEncoder() : scaling_(FeatureScaling::identity()) {}
  explicit StyleEncoder(FeatureScaling scaling) : scaling_(scaling) {}

  const FeatureScaling& scaling() const { return scaling_; }

  // Affine map into [0,1] per dimension (clamped); equal lo/hi pins to 0.5.
  FeatureVec scale(const FeatureVec& raw) const;

  // scale then L2-normalize; throws if the scaled vector is all ~zero.
  StyleVector encode_counts(const FeatureCounts& counts) const;
  StyleVector encode(std::span<const Document> docs) const;
  StyleVector encode(const AuthorSample& sample) const;

 private:
  FeatureScaling scaling_;
};

double cosine_similarity(std::span<const double> u, std::span<const double> v);

// 1 - angle/pi for unit vectors; throws if either norm is off unit by >1e-6.
double angular_similarity(std::span<const double> u, std::span<const double> v);

// Spherical interpolation; w in [0,1]; antipodal inputs are an error.
StyleVector slerp(const StyleVector& u, const StyleVector& v, double w);

}  // namespace stylo
