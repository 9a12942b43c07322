#include "stylo/energy.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include "stylo/binio.hpp"

namespace stylo {

namespace {

// Content terms for semantic comparison: words and numbers, case-folded.
std::vector<std::string> content_terms(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::word && t.kind != TokenKind::number) continue;
    std::string s = t.surface;
    for (char& c : s) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TfidfModel TfidfModel::fit(const Corpus& corpus) {
  TfidfModel m;
  std::map<std::string, std::int64_t> df;
  std::int64_t n_docs = 0;
  for (const auto& a : corpus.authors) {
    for (const auto& d : a.documents) {
      ++n_docs;
      std::map<std::string, bool> seen;
      for (auto& term : content_terms(d.tokens)) seen.emplace(std::move(term), true);
      for (const auto& [term, _] : seen) df[term] += 1;
    }
  }
  if (n_docs == 0) throw std::invalid_argument("tfidf fit: empty corpus");
  for (const auto& [term, count] : df) {
    m.idf_[term] = std::log(static_cast<double>(1 + n_docs) /
                            static_cast<double>(1 + count)) +
                   1.0;
  }
  m.default_idf_ =
      std::log(static_cast<double>(1 + n_docs)) + 1.0;  // df = 0
  return m;
}

std::map<std::string, double> TfidfModel::vectorize(
    const std::vector<Token>& tokens) const {
  std::map<std::string, double> tf;
  for (auto& term : content_terms(tokens)) tf[std::move(term)] += 1.0;
  for (auto& [term, weight] : tf) {
    auto it = idf_.find(term);
    weight *= it != idf_.end() ? it->second : default_idf_;
  }
  return tf;
}

double TfidfModel::cosine(const std::vector<Token>& a,
                          const std::vector<Token>& b) const {
  const auto va = vectorize(a);
  const auto vb = vectorize(b);
  if (va.empty() && vb.empty()) return 1.0;
  if (va.empty() || vb.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [term, w] : va) {
    na += w * w;
    auto it = vb.find(term);
    if (it != vb.end()) dot += w * it->second;
  }
  for (const auto& [term, w] : vb) nb += w * w;
  return dot / std::sqrt(na * nb);
}

void TfidfModel::save(std::ostream& out) const {
  using namespace binio;
  write_f64(out, default_idf_);
  write_u32(out, static_cast<std::uint32_t>(idf_.size()));
  for (const auto& [term, w] : idf_) {
    write_str(out, term);
    write_f64(out, w);
  }
}

TfidfModel TfidfModel::load(std::istream& in) {
  using namespace binio;
  TfidfModel m;
  m.default_idf_ = read_f64(in);
  const std::uint32_t n = read_u32(in);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string term = read_str(in);
    m.idf_[std::move(term)] = read_f64(in);
  }
  return m;
}

EnergyModel::EnergyModel(const GuidedDecoder& decoder,
                         const StyleEncoder& encoder, const TfidfModel& tfidf,
                         EnergyWeights weights)
    : decoder_(decoder), encoder_(encoder), tfidf_(tfidf), weights_(weights) {
  if (weights_.fluency < 0.0 || weights_.style < 0.0 ||
      weights_.semantic < 0.0 || weights_.hamming < 0.0) {
    throw std::invalid_argument("energy: weights must be non-negative");
  }
  if (weights_.fluency + weights_.style + weights_.semantic +
          weights_.hamming <=
      0.0) {
    throw std::invalid_argument("energy: at least one weight must be > 0");
  }
}

double EnergyModel::fluency_doc(const std::vector<Token>& tokens,
                                const StyleVector& target) const {
  return -decoder_.adapted_seq_mean_logprob(tokens, target).mean_logprob;
}

double EnergyModel::style_energy(const FeatureCounts& pooled,
                                 const StyleVector& target) const {
  const StyleVector state = encoder_.encode_counts(pooled);
  return -angular_similarity(state.span(), target.span());
}

double EnergyModel::semantic_doc(const std::vector<Token>& doc,
                                 const std::vector<Token>& reference) const {
  return -tfidf_.cosine(doc, reference);
}

double EnergyModel::hamming_doc(const std::vector<Token>& doc,
                                const std::vector<Token>& reference) const {
  const std::size_t la = doc.size(), lb = reference.size();
  const std::size_t longest = std::max(la, lb);
  if (longest == 0) return 0.0;
  const std::size_t shared = std::min(la, lb);
  std::size_t mismatch = longest - shared;  // length gap counts as mismatch
  for (std::size_t i = 0; i < shared; ++i) {
    if (doc[i].surface != reference[i].surface) ++mismatch;
  }
  return static_cast<double>(mismatch) / static_cast<double>(longest);
}

EnergyBreakdown EnergyModel::combine(double fluency_mean, double style,
                                     std::optional<double> semantic_mean,
                                     std::optional<double> hamming_mean) const {
  EnergyBreakdown b;
  b.fluency = fluency_mean;
  b.style = style;
  b.semantic = semantic_mean;
  b.hamming = hamming_mean;
  b.total = weights_.fluency * fluency_mean + weights_.style * style;
  if (weights_.semantic > 0.0) {
    if (!semantic_mean) {
      throw std::invalid_argument("energy: semantic active but not supplied");
    }
    b.total += weights_.semantic * *semantic_mean;
  }
  if (weights_.hamming > 0.0) {
    if (!hamming_mean) {
      throw std::invalid_argument("energy: hamming active but not supplied");
    }
    b.total += weights_.hamming * *hamming_mean;
  }
  return b;
}

EnergyBreakdown EnergyModel::total(std::span<const Document> docs,
                                   const StyleVector& target,
                                   const std::vector<Document>* reference) const {
  if (docs.empty()) throw std::invalid_argument("energy: empty state");
  if (needs_reference()) {
    if (reference == nullptr || reference->size() != docs.size()) {
      throw std::invalid_argument(
          "energy: reference documents required and must pair 1:1");
    }
  }
  FeatureCounts pooled;
  double fluency = 0.0, semantic = 0.0, hamming = 0.0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    pooled.add(featurize(docs[i]));
    fluency += fluency_doc(docs[i].tokens, target);
    if (needs_reference()) {
      semantic += semantic_doc(docs[i].tokens, (*reference)[i].tokens);
      hamming += hamming_doc(docs[i].tokens, (*reference)[i].tokens);
    }
  }
  const double n = static_cast<double>(docs.size());
  std::optional<double> sem, ham;
  if (needs_reference()) {
    sem = semantic / n;
    ham = hamming / n;
  }
  return combine(fluency / n, style_energy(pooled, target), sem, ham);
}

}  // namespace stylo
