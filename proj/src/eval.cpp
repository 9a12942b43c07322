#include "stylo/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stylo/mathutil.hpp"
#include "stylo/rng.hpp"

namespace stylo {

double delta_fluency_signed(double generated_ppl, double reference_ppl) {
  if (reference_ppl <= 0.0) {
    throw std::invalid_argument("delta_fluency: reference perplexity <= 0");
  }
  return 100.0 * (generated_ppl - reference_ppl) / reference_ppl;
}

double delta_fluency_pct(double generated_ppl, double reference_ppl) {
  return std::abs(delta_fluency_signed(generated_ppl, reference_ppl));
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double equal_error_rate(std::vector<double> genuine,
                        std::vector<double> impostor) {
  if (genuine.empty() || impostor.empty()) {
    throw std::invalid_argument("eer: both score sets must be non-empty");
  }
  std::sort(genuine.begin(), genuine.end());
  std::sort(impostor.begin(), impostor.end());
  // Candidate thresholds: below everything, between distinct scores, above
  // everything. FAR rises with the threshold, FRR falls.
  std::vector<double> cuts;
  {
    std::vector<double> all;
    all.reserve(genuine.size() + impostor.size());
    all.insert(all.end(), genuine.begin(), genuine.end());
    all.insert(all.end(), impostor.begin(), impostor.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    cuts.push_back(all.front() - 1.0);
    for (std::size_t i = 0; i + 1 < all.size(); ++i) {
      cuts.push_back(0.5 * (all[i] + all[i + 1]));
    }
    cuts.push_back(all.back() + 1.0);
  }
  auto frac_leq = [](const std::vector<double>& v, double t) {
    const auto it = std::upper_bound(v.begin(), v.end(), t);
    return static_cast<double>(it - v.begin()) / static_cast<double>(v.size());
  };
  double prev_far = 0.0, prev_frr = 1.0;
  bool have_prev = false;
  for (double t : cuts) {
    const double far = frac_leq(impostor, t);       // impostors accepted
    const double frr = 1.0 - frac_leq(genuine, t);  // genuines rejected
    if (far >= frr) {
      if (!have_prev || far == frr) return 0.5 * (far + frr);
      // Interpolate between the previous and current operating points.
      const double denom = (far - prev_far) + (prev_frr - frr);
      const double alpha = denom > 0.0 ? (prev_frr - prev_far) / denom : 0.0;
      return prev_far + alpha * (far - prev_far);
    }
    prev_far = far;
    prev_frr = frr;
    have_prev = true;
  }
  return 0.5 * (prev_far + prev_frr);  // never crossed: degenerate scores
}

double attribution_eer(const std::vector<AuthorSample>& queries,
                       const std::vector<AuthorSample>& targets,
                       const StyleEncoder& encoder) {
  if (queries.empty() || targets.empty()) {
    throw std::invalid_argument("attribution: empty sample sets");
  }
  std::vector<StyleVector> q_vec, t_vec;
  q_vec.reserve(queries.size());
  t_vec.reserve(targets.size());
  for (const auto& s : queries) q_vec.push_back(encoder.encode(s));
  for (const auto& s : targets) t_vec.push_back(encoder.encode(s));
  std::vector<double> genuine, impostor;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const double dist =
          1.0 - cosine_similarity(q_vec[i].span(), t_vec[j].span());
      if (queries[i].author_id == targets[j].author_id) {
        genuine.push_back(dist);
      } else {
        impostor.push_back(dist);
      }
    }
  }
  return equal_error_rate(std::move(genuine), std::move(impostor));
}

double cap_rate(std::string_view text) {
  std::int64_t letters = 0, upper = 0;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalpha(c)) {
      ++letters;
      if (std::isupper(c)) ++upper;
    }
  }
  return letters > 0 ? static_cast<double>(upper) / letters : 0.0;
}

double punct_rate(std::string_view text) {
  std::int64_t nonws = 0, punct = 0;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) continue;
    ++nonws;
    if (c < 0x80 && std::ispunct(c)) ++punct;
  }
  return nonws > 0 ? static_cast<double>(punct) / nonws : 0.0;
}

std::vector<std::pair<std::size_t, std::size_t>> round_robin_pairs(
    const std::vector<AuthorSample>& contents,
    const std::vector<AuthorSample>& styles) {
  auto domain_of = [](const AuthorSample& s) -> const std::string& {
    if (s.documents.empty()) {
      throw std::invalid_argument("round_robin: author without documents");
    }
    return s.documents.front().domain_label;
  };
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t c = 0; c < contents.size(); ++c) {
    for (std::size_t s = 0; s < styles.size(); ++s) {
      if (domain_of(contents[c]) != domain_of(styles[s])) {
        pairs.emplace_back(c, s);
      }
    }
  }
  return pairs;
}

namespace {

std::vector<double> ranks_with_ties(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman: need matched series, length >= 2");
  }
  const std::vector<double> rx = ranks_with_ties(x);
  const std::vector<double> ry = ranks_with_ties(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::invalid_argument("spearman: constant series");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> detector_features(const Document& doc,
                                      const StyleEncoder& encoder,
                                      const NgramModel& lm) {
  const FeatureVec scaled = encoder.scale(feature_breakdown(featurize(doc)));
  std::vector<double> out(scaled.begin(), scaled.end());
  const std::vector<TokenId> ids = lm.ids(doc.tokens);
  out.push_back(-lm.seq_mean_logprob(ids));
  return out;
}

double detector_score(const DetectorModel& model,
                      std::span<const double> features) {
  if (features.size() != model.w.size()) {
    throw std::invalid_argument("detector: feature dimension mismatch");
  }
  double z = model.b;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double x = (features[i] - model.feat_mean[i]) / model.feat_std[i];
    z += model.w[i] * x;
  }
  return sigmoid(z);
}

DetectorModel train_detector(const std::vector<Document>& real_docs,
                             const std::vector<Document>& fake_docs,
                             const StyleEncoder& encoder, const NgramModel& lm,
                             int steps, double learning_rate) {
  if (real_docs.empty() || fake_docs.empty()) {
    throw std::invalid_argument("detector: both classes must be non-empty");
  }
  std::vector<std::vector<double>> feats;
  std::vector<double> labels;
  for (const auto& d : real_docs) {
    feats.push_back(detector_features(d, encoder, lm));
    labels.push_back(0.0);
  }
  for (const auto& d : fake_docs) {
    feats.push_back(detector_features(d, encoder, lm));
    labels.push_back(1.0);
  }
  const std::size_t dim = feats.front().size();
  DetectorModel model;
  model.w.assign(dim, 0.0);
  model.feat_mean.assign(dim, 0.0);
  model.feat_std.assign(dim, 0.0);
  const double n = static_cast<double>(feats.size());
  for (const auto& f : feats) {
    for (std::size_t i = 0; i < dim; ++i) model.feat_mean[i] += f[i];
  }
  for (std::size_t i = 0; i < dim; ++i) model.feat_mean[i] /= n;
  for (const auto& f : feats) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = f[i] - model.feat_mean[i];
      model.feat_std[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    model.feat_std[i] = std::sqrt(model.feat_std[i] / n);
    if (model.feat_std[i] < 1e-9) model.feat_std[i] = 1.0;
  }
  // Standardize once, then full-batch logistic regression.
  for (auto& f : feats) {
    for (std::size_t i = 0; i < dim; ++i) {
      f[i] = (f[i] - model.feat_mean[i]) / model.feat_std[i];
    }
  }
  for (int step = 0; step < steps; ++step) {
    std::vector<double> gw(dim, 0.0);
    double gb = 0.0;
    for (std::size_t e = 0; e < feats.size(); ++e) {
      double z = model.b;
      for (std::size_t i = 0; i < dim; ++i) z += model.w[i] * feats[e][i];
      const double err = sigmoid(z) - labels[e];
      for (std::size_t i = 0; i < dim; ++i) gw[i] += err * feats[e][i];
      gb += err;
    }
    for (std::size_t i = 0; i < dim; ++i) {
      model.w[i] -= learning_rate * gw[i] / n;
    }
    model.b -= learning_rate * gb / n;
  }
  return model;
}

double detector_accuracy(const DetectorModel& model,
                         const std::vector<Document>& real_docs,
                         const std::vector<Document>& fake_docs,
                         const StyleEncoder& encoder, const NgramModel& lm) {
  if (real_docs.empty() && fake_docs.empty()) {
    throw std::invalid_argument("detector_accuracy: no documents");
  }
  std::size_t correct = 0;
  for (const auto& d : real_docs) {
    if (detector_score(model, detector_features(d, encoder, lm)) < 0.5) {
      ++correct;
    }
  }
  for (const auto& d : fake_docs) {
    if (detector_score(model, detector_features(d, encoder, lm)) >= 0.5) {
      ++correct;
    }
  }
  return static_cast<double>(correct) /
         static_cast<double>(real_docs.size() + fake_docs.size());
}

std::vector<SweepPoint> interpolation_sweep(const GuidedDecoder& decoder,
                                            const StyleVector& ablated,
                                            const StyleVector& base,
                                            std::span<const double> weights,
                                            int gens_per_weight,
                                            std::uint64_t seed) {
  if (gens_per_weight < 1) {
    throw std::invalid_argument("sweep: gens_per_weight >= 1");
  }
  std::vector<SweepPoint> out;
  for (std::size_t wi = 0; wi < weights.size(); ++wi) {
    const StyleVector target = slerp(ablated, base, weights[wi]);
    SweepPoint point;
    point.weight = weights[wi];
    for (int g = 0; g < gens_per_weight; ++g) {
      Rng rng(seed + 1009 * wi + static_cast<std::uint64_t>(g));
      const std::vector<Token> tokens = decoder.generate(target, rng);
      const std::string text = detokenize_canonical(tokens);
      point.mean_cap_rate += cap_rate(text);
      point.mean_punct_rate += punct_rate(text);
    }
    point.mean_cap_rate /= gens_per_weight;
    point.mean_punct_rate /= gens_per_weight;
    out.push_back(point);
  }
  return out;
}

double bootstrap_mean_quantile(std::span<const double> values, double quantile,
                               int resamples, std::uint64_t seed) {
  if (values.empty()) throw std::invalid_argument("bootstrap: empty sample");
  if (quantile < 0.0 || quantile > 1.0) {
    throw std::invalid_argument("bootstrap: quantile outside [0,1]");
  }
  Rng rng(seed);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      sum += values[rng.uniform_index(values.size())];
    }
    means.push_back(sum / static_cast<double>(values.size()));
  }
  std::sort(means.begin(), means.end());
  const double pos = quantile * static_cast<double>(means.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, means.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return means[lo] * (1.0 - frac) + means[hi] * frac;
}

}  // namespace stylo
