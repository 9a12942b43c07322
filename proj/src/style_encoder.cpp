#include "stylo/style_encoder.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include "stylo/mathutil.hpp"

namespace stylo {

const std::array<std::string, kFunctionWords>& function_word_list() {
  static const std::array<std::string, kFunctionWords> words = {
      "the", "a",   "an",  "and",  "or",  "but",  "if",   "of",
      "to",  "in",  "on",  "at",   "by",  "for",  "with", "is",
      "are", "was", "be",  "i",    "you", "it",   "he",   "she",
      "we",  "they", "this", "that", "not", "so",  "do",   "have"};
  return words;
}

int punct_class(char c) {
  switch (c) {
    case '.': return 0;
    case ',': return 1;
    case '!': return 2;
    case '?': return 3;
    case '\'': return 4;
    case '"': return 5;
    case ':': case ';': return 6;
    case '-': return 7;
    case '(': case ')': case '[': case ']': case '{': case '}': return 8;
    default: return 9;
  }
}

int trigram_bin(const char* p) {
  std::uint32_t h = 2166136261u;
  for (int i = 0; i < 3; ++i) {
    h ^= static_cast<unsigned char>(p[i]);
    h *= 16777619u;
  }
  return static_cast<int>(h % kTrigramBins);
}

void FeatureCounts::add(const FeatureCounts& o) {
  letters += o.letters;
  upper_letters += o.upper_letters;
  for (int i = 0; i < kPunctClasses; ++i) punct[i] += o.punct[i];
  tokens += o.tokens;
  space_run_tokens += o.space_run_tokens;
  ws_runs += o.ws_runs;
  ws_chars += o.ws_chars;
  newlines += o.newlines;
  word_tokens += o.word_tokens;
  word_chars += o.word_chars;
  digit_chars += o.digit_chars;
  nonws_chars += o.nonws_chars;
  for (int i = 0; i < kFunctionWords; ++i) fw[i] += o.fw[i];
  for (int i = 0; i < kTrigramBins; ++i) tri[i] += o.tri[i];
  trigrams += o.trigrams;
  for (const auto& [w, c] : o.word_counts) word_counts[w] += c;
}

void FeatureCounts::subtract(const FeatureCounts& o) {
  letters -= o.letters;
  upper_letters -= o.upper_letters;
  for (int i = 0; i < kPunctClasses; ++i) punct[i] -= o.punct[i];
  tokens -= o.tokens;
  space_run_tokens -= o.space_run_tokens;
  ws_runs -= o.ws_runs;
  ws_chars -= o.ws_chars;
  newlines -= o.newlines;
  word_tokens -= o.word_tokens;
  word_chars -= o.word_chars;
  digit_chars -= o.digit_chars;
  nonws_chars -= o.nonws_chars;
  for (int i = 0; i < kFunctionWords; ++i) fw[i] -= o.fw[i];
  for (int i = 0; i < kTrigramBins; ++i) tri[i] -= o.tri[i];
  trigrams -= o.trigrams;
  for (const auto& [w, c] : o.word_counts) {
    auto it = word_counts.find(w);
    it->second -= c;
    if (it->second == 0) word_counts.erase(it);
  }
}

namespace {

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

int function_word_index(const std::string& lower) {
  const auto& list = function_word_list();
  for (int i = 0; i < kFunctionWords; ++i) {
    if (list[i] == lower) return i;
  }
  return -1;
}

void count_token(FeatureCounts& c, const Token& t) {
  c.tokens += 1;
  switch (t.kind) {
    case TokenKind::word: {
      c.word_tokens += 1;
      c.word_chars += static_cast<std::int64_t>(t.surface.size());
      c.nonws_chars += static_cast<std::int64_t>(t.surface.size());
      for (char ch : t.surface) {
        c.letters += 1;
        if (std::isupper(static_cast<unsigned char>(ch))) c.upper_letters += 1;
      }
      c.word_counts[t.surface] += 1;
      const int fw = function_word_index(lowercase(t.surface));
      if (fw >= 0) c.fw[fw] += 1;
      break;
    }
    case TokenKind::number:
      c.digit_chars += static_cast<std::int64_t>(t.surface.size());
      c.nonws_chars += static_cast<std::int64_t>(t.surface.size());
      break;
    case TokenKind::punct:
      c.punct[punct_class(t.surface[0])] += 1;
      c.nonws_chars += 1;
      break;
    case TokenKind::space_run:
      c.space_run_tokens += 1;
      c.ws_runs += 1;
      c.ws_chars += static_cast<std::int64_t>(t.surface.size());
      for (char ch : t.surface) {
        if (ch == '\n') c.newlines += 1;
      }
      break;
    case TokenKind::other:
      c.nonws_chars += static_cast<std::int64_t>(t.surface.size());
      break;
  }
}

void count_sep(FeatureCounts& c, const std::string& sep) {
  if (sep.empty()) return;
  c.ws_runs += 1;
  c.ws_chars += static_cast<std::int64_t>(sep.size());
  for (char ch : sep) {
    if (ch == '\n') c.newlines += 1;
  }
}

void count_trigrams(FeatureCounts& c, const std::string& text) {
  if (text.size() < 3) return;
  for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
    c.tri[trigram_bin(text.data() + i)] += 1;
    c.trigrams += 1;
  }
}

}  // namespace

FeatureCounts featurize(const std::vector<Token>& tokens,
                        const std::vector<std::string>& seps) {
  FeatureCounts c;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    count_sep(c, seps[i]);
    count_token(c, tokens[i]);
  }
  count_sep(c, seps.back());
  count_trigrams(c, detokenize(tokens, seps));
  return c;
}

FeatureCounts featurize(const Document& doc) {
  return featurize(doc.tokens, doc.seps);
}

FeatureVec feature_breakdown(const FeatureCounts& c) {
  FeatureVec f{};
  auto ratio = [](std::int64_t num, std::int64_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  f[0] = ratio(c.upper_letters, c.letters);
  for (int i = 0; i < kPunctClasses; ++i) f[1 + i] = ratio(c.punct[i], c.tokens);
  f[11] = ratio(c.space_run_tokens, c.tokens);
  f[12] = ratio(c.ws_chars, c.ws_runs);
  f[13] = ratio(c.newlines, c.ws_chars);
  f[14] = ratio(c.word_chars, c.word_tokens);
  f[15] = ratio(static_cast<std::int64_t>(c.word_counts.size()), c.word_tokens);
  f[16] = ratio(c.digit_chars, c.nonws_chars);
  for (int i = 0; i < kFunctionWords; ++i) {
    f[17 + i] = ratio(c.fw[i], c.word_tokens);
  }
  for (int i = 0; i < kTrigramBins; ++i) {
    f[49 + i] = ratio(c.tri[i], c.trigrams);
  }
  return f;
}

void PrefixFeaturizer::apply_trigrams(std::size_t old_len, int sign) {
  if (buffer_.size() < 3) return;
  const std::size_t first = old_len >= 2 ? old_len - 2 : 0;
  for (std::size_t i = first; i + 3 <= buffer_.size(); ++i) {
    counts_.tri[trigram_bin(buffer_.data() + i)] += sign;
    counts_.trigrams += sign;
  }
}

void PrefixFeaturizer::push(const Token& t) {
  const Token* prev = tokens_.empty() ? nullptr : &tokens_.back();
  const std::string sep = canonical_sep(prev, t);
  const std::size_t old_len = buffer_.size();
  buffer_ += sep;
  buffer_ += t.surface;
  apply_trigrams(old_len, +1);
  count_sep(counts_, sep);
  count_token(counts_, t);
  tokens_.push_back(t);
  appended_bytes_.push_back(static_cast<std::uint32_t>(buffer_.size() - old_len));
}

void PrefixFeaturizer::pop() {
  const Token t = tokens_.back();
  tokens_.pop_back();
  const std::size_t bytes = appended_bytes_.back();
  appended_bytes_.pop_back();
  const std::size_t old_len = buffer_.size() - bytes;
  apply_trigrams(old_len, -1);
  buffer_.resize(old_len);
  const Token* prev = tokens_.empty() ? nullptr : &tokens_.back();
  const std::string sep = canonical_sep(prev, t);
  FeatureCounts delta;
  count_sep(delta, sep);
  count_token(delta, t);
  counts_.subtract(delta);
}

void PrefixFeaturizer::clear() {
  counts_ = FeatureCounts{};
  buffer_.clear();
  tokens_.clear();
  appended_bytes_.clear();
}

FeatureScaling FeatureScaling::identity() {
  FeatureScaling s;
  s.lo.fill(0.0);
  s.hi.fill(1.0);
  return s;
}

FeatureScaling fit_scaling(const Corpus& corpus) {
  std::vector<FeatureVec> rows;
  for (const auto& a : corpus.authors) {
    FeatureCounts pooled;
    for (const auto& d : a.documents) {
      FeatureCounts fc = featurize(d);
      rows.push_back(feature_breakdown(fc));
      pooled.add(fc);
    }
    if (!pooled.empty()) rows.push_back(feature_breakdown(pooled));
  }
  if (rows.empty()) throw std::invalid_argument("fit_scaling: empty corpus");
  FeatureScaling s;
  s.lo = rows[0];
  s.hi = rows[0];
  for (const auto& r : rows) {
    for (int d = 0; d < kStyleDim; ++d) {
      s.lo[d] = std::min(s.lo[d], r[d]);
      s.hi[d] = std::max(s.hi[d], r[d]);
    }
  }
  return s;
}

FeatureVec StyleEncoder::scale(const FeatureVec& raw) const {
  FeatureVec out{};
  for (int d = 0; d < kStyleDim; ++d) {
    const double lo = scaling_.lo[d], hi = scaling_.hi[d];
    out[d] = hi > lo ? clamp01((raw[d] - lo) / (hi - lo)) : 0.5;
  }
  return out;
}

StyleVector StyleEncoder::encode_counts(const FeatureCounts& counts) const {
  if (counts.empty()) {
    throw std::invalid_argument("encode: no tokens to featurize");
  }
  FeatureVec scaled = scale(feature_breakdown(counts));
  double norm2 = 0.0;
  for (double x : scaled) norm2 += x * x;
  const double norm = std::sqrt(norm2);
  if (norm < 1e-9) {
    throw std::invalid_argument("encode: degenerate (all-zero) feature vector");
  }
  StyleVector v;
  for (int d = 0; d < kStyleDim; ++d) v.v[d] = scaled[d] / norm;
  return v;
}

StyleVector StyleEncoder::encode(std::span<const Document> docs) const {
  FeatureCounts pooled;
  for (const auto& d : docs) pooled.add(featurize(d));
  return encode_counts(pooled);
}

StyleVector StyleEncoder::encode(const AuthorSample& sample) const {
  return encode(std::span<const Document>(sample.documents));
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: dimension mismatch");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu <= 0.0 || nv <= 0.0) {
    throw std::invalid_argument("cosine: zero-norm input");
  }
  return dot / std::sqrt(nu * nv);
}

double angular_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("angular: dimension mismatch");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (std::abs(std::sqrt(nu) - 1.0) > 1e-6 ||
      std::abs(std::sqrt(nv) - 1.0) > 1e-6) {
    throw std::invalid_argument("angular: inputs must be unit vectors");
  }
  const double c = std::clamp(dot, -1.0, 1.0);
  return 1.0 - std::acos(c) / 3.14159265358979323846;
}

StyleVector slerp(const StyleVector& u, const StyleVector& v, double w) {
  if (w < 0.0 || w > 1.0) throw std::invalid_argument("slerp: w outside [0,1]");
  double dot = 0.0;
  for (int d = 0; d < kStyleDim; ++d) dot += u.v[d] * v.v[d];
  dot = std::clamp(dot, -1.0, 1.0);
  if (dot < -1.0 + 1e-9) {
    throw std::invalid_argument("slerp: antipodal endpoints are undefined");
  }
  StyleVector out;
  if (dot > 1.0 - 1e-12) {
    // Numerically parallel: linear blend keeps direction.
    for (int d = 0; d < kStyleDim; ++d) {
      out.v[d] = (1.0 - w) * u.v[d] + w * v.v[d];
    }
  } else {
    const double omega = std::acos(dot);
    const double denom = std::sin(omega);
    const double cu = std::sin((1.0 - w) * omega) / denom;
    const double cv = std::sin(w * omega) / denom;
    for (int d = 0; d < kStyleDim; ++d) out.v[d] = cu * u.v[d] + cv * v.v[d];
  }
  double norm2 = 0.0;
  for (double x : out.v) norm2 += x * x;
  const double norm = std::sqrt(norm2);
  for (double& x : out.v) x /= norm;
  return out;
}

}  // namespace stylo
