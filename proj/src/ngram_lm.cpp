#include "stylo/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stylo/binio.hpp"

namespace stylo {

TokenId Vocab::id_or_unk(std::string_view surface) const {
  auto it = index.find(std::string(surface));
  return it == index.end() ? unk : it->second;
}

Token Vocab::token(TokenId id) const {
  return Token{surfaces.at(id), kinds.at(id)};
}

namespace {

void check_config(const NgramConfig& cfg) {
  if (cfg.order < 1) throw std::invalid_argument("ngram: order must be >= 1");
  if (cfg.discount < 0.0 || cfg.discount >= 1.0) {
    throw std::invalid_argument("ngram: discount must be in [0,1)");
  }
  if (cfg.min_count < 1) throw std::invalid_argument("ngram: min_count >= 1");
  if (cfg.beam_width < 1) throw std::invalid_argument("ngram: beam_width >= 1");
  if (cfg.max_infill_len < 1) {
    throw std::invalid_argument("ngram: max_infill_len >= 1");
  }
  if (cfg.length_ratio <= 0.0 || cfg.length_ratio > 1.0) {
    throw std::invalid_argument("ngram: length_ratio in (0,1]");
  }
  if (cfg.infill_temperature <= 0.0) {
    throw std::invalid_argument("ngram: infill_temperature must be > 0");
  }
}

}  // namespace

void NgramModel::finalize_stats(ContextStats& st) {
  std::sort(st.by_id.begin(), st.by_id.end());
  st.total = 0;
  for (const auto& [id, c] : st.by_id) st.total += c;
  st.by_count.resize(st.by_id.size());
  for (std::uint32_t i = 0; i < st.by_count.size(); ++i) st.by_count[i] = i;
  std::sort(st.by_count.begin(), st.by_count.end(),
            [&st](std::uint32_t a, std::uint32_t b) {
              if (st.by_id[a].second != st.by_id[b].second) {
                return st.by_id[a].second > st.by_id[b].second;
              }
              return st.by_id[a].first < st.by_id[b].first;
            });
}

NgramModel NgramModel::fit(const Corpus& corpus, const NgramConfig& cfg) {
  check_config(cfg);
  NgramModel m;
  m.cfg_ = cfg;

  std::map<std::string, std::int64_t> surface_counts;
  std::map<std::string, TokenKind> surface_kinds;
  for (const auto& a : corpus.authors) {
    for (const auto& d : a.documents) {
      for (const auto& t : d.tokens) {
        surface_counts[t.surface] += 1;
        surface_kinds.emplace(t.surface, t.kind);
      }
    }
  }
  if (surface_counts.empty()) {
    throw std::invalid_argument("ngram fit: corpus has no tokens");
  }

  Vocab& v = m.vocab_;
  v.surfaces = {"<unk>", "<s>", "</s>"};
  v.kinds = {TokenKind::other, TokenKind::other, TokenKind::other};
  for (const auto& [s, c] : surface_counts) {  // std::map: sorted, canonical
    if (c >= cfg.min_count) {
      v.surfaces.push_back(s);
      v.kinds.push_back(surface_kinds[s]);
    }
  }
  for (TokenId id = 0; id < v.surfaces.size(); ++id) v.index[v.surfaces[id]] = id;

  // Event counting. Unigrams see only real tokens (no EOS) so a plain
  // unigram fit equals raw frequencies; orders >= 2 predict EOS after the
  // final token and pad contexts with BOS.
  std::map<TokenId, std::int64_t> uni;
  m.tables_.assign(cfg.order >= 2 ? cfg.order - 1 : 0, ContextTable{});
  for (const auto& a : corpus.authors) {
    for (const auto& d : a.documents) {
      std::vector<TokenId> ids = m.ids(d.tokens);
      for (TokenId id : ids) uni[id] += 1;
      const std::size_t len = ids.size();
      for (int o = 2; o <= cfg.order; ++o) {
        ContextTable& table = m.tables_[o - 2];
        for (std::size_t i = 0; i <= len; ++i) {
          const TokenId target = i < len ? ids[i] : v.eos;
          std::vector<TokenId> key(o - 1);
          for (int j = 0; j < o - 1; ++j) {
            const long pos = static_cast<long>(i) - (o - 1) + j;
            key[j] = pos >= 0 ? ids[static_cast<std::size_t>(pos)] : v.bos;
          }
          ContextStats& st = table[key];
          auto it = std::find_if(st.by_id.begin(), st.by_id.end(),
                                 [target](const auto& p) {
                                   return p.first == target;
                                 });
          if (it == st.by_id.end()) {
            st.by_id.emplace_back(target, 1);
          } else {
            it->second += 1;
          }
        }
      }
    }
  }
  m.unigram_.by_id.assign(uni.begin(), uni.end());
  finalize_stats(m.unigram_);
  for (auto& table : m.tables_) {
    for (auto& [key, st] : table) finalize_stats(st);
  }
  return m;
}

std::vector<TokenId> NgramModel::ids(const std::vector<Token>& tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(vocab_.id_or_unk(t.surface));
  return out;
}

std::vector<TokenId> NgramModel::padded_context(
    std::span<const TokenId> context) const {
  const std::size_t width = static_cast<std::size_t>(cfg_.order - 1);
  std::vector<TokenId> out(width, vocab_.bos);
  const std::size_t take = std::min(context.size(), width);
  for (std::size_t j = 0; j < take; ++j) {
    out[width - take + j] = context[context.size() - take + j];
  }
  return out;
}

const NgramModel::ContextStats* NgramModel::find_context(
    int order, std::span<const TokenId> key) const {
  const ContextTable& table = tables_[order - 2];
  auto it = table.find(std::vector<TokenId>(key.begin(), key.end()));
  return it == table.end() ? nullptr : &it->second;
}

// Backoff chain for one padded context, highest order first. Levels with no
// mass are omitted (full pass-through to the next lower order).
std::vector<const NgramModel::ContextStats*> NgramModel::backoff_levels(
    std::span<const TokenId> padded) const {
  std::vector<const ContextStats*> levels;
  for (int o = cfg_.order; o >= 2; --o) {
    const auto key = padded.subspan(padded.size() - (o - 1));
    const ContextStats* st = find_context(o, key);
    if (st != nullptr && st->total > 0) levels.push_back(st);
  }
  return levels;
}

double NgramModel::prob_from_levels(
    TokenId next, const std::vector<const ContextStats*>& levels) const {
  if (next == vocab_.bos) return 0.0;
  const double delta = cfg_.discount;
  // Unigram base: discounted counts plus uniform smoothing over all
  // predictable ids.
  double p;
  {
    const ContextStats& st = unigram_;
    auto it = std::lower_bound(
        st.by_id.begin(), st.by_id.end(), next,
        [](const auto& pr, TokenId id) { return pr.first < id; });
    const double c = (it != st.by_id.end() && it->first == next)
                         ? static_cast<double>(it->second)
                         : 0.0;
    const double total = static_cast<double>(st.total);
    const double distinct = static_cast<double>(st.by_id.size());
    p = std::max(c - delta, 0.0) / total +
        (delta * distinct / total) / static_cast<double>(predictable_vocab());
  }
  // Fold higher orders over the base, lowest applicable first.
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    const ContextStats& st = **it;
    auto pos = std::lower_bound(
        st.by_id.begin(), st.by_id.end(), next,
        [](const auto& pr, TokenId id) { return pr.first < id; });
    const double c = (pos != st.by_id.end() && pos->first == next)
                         ? static_cast<double>(pos->second)
                         : 0.0;
    const double total = static_cast<double>(st.total);
    const double n1p = static_cast<double>(st.by_id.size());
    p = std::max(c - delta, 0.0) / total + (delta * n1p / total) * p;
  }
  return p;
}

double NgramModel::logprob(TokenId next,
                           std::span<const TokenId> context) const {
  const std::vector<TokenId> padded = padded_context(context);
  const double p = prob_from_levels(next, backoff_levels(padded));
  return p > 0.0 ? std::log(p) : kNegInf;
}

std::vector<double> NgramModel::next_logprobs(
    std::span<const TokenId> context) const {
  const std::vector<TokenId> padded = padded_context(context);
  const auto levels = backoff_levels(padded);
  std::vector<double> out(vocab_.size(), kNegInf);
  for (TokenId id = 0; id < vocab_.size(); ++id) {
    if (id == vocab_.bos) continue;
    const double p = prob_from_levels(id, levels);
    out[id] = p > 0.0 ? std::log(p) : kNegInf;
  }
  return out;
}

double NgramModel::seq_mean_logprob(std::span<const TokenId> token_ids) const {
  if (token_ids.empty()) {
    throw std::invalid_argument("seq_mean_logprob: empty sequence");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    sum += logprob(token_ids[i], token_ids.subspan(0, i));
  }
  return sum / static_cast<double>(token_ids.size());
}

double NgramModel::perplexity(std::span<const TokenId> token_ids) const {
  return std::exp(-seq_mean_logprob(token_ids));
}

std::vector<TokenId> NgramModel::sample(int max_len, double temperature,
                                        Rng& rng) const {
  if (temperature <= 0.0) {
    throw std::invalid_argument("sample: temperature must be > 0");
  }
  if (max_len < 1) throw std::invalid_argument("sample: max_len must be >= 1");
  std::vector<TokenId> out;
  while (static_cast<int>(out.size()) < max_len) {
    std::vector<double> lp = next_logprobs(out);
    lp[vocab_.unk] = kNegInf;
    if (out.empty()) lp[vocab_.eos] = kNegInf;
    double mx = kNegInf;
    for (double x : lp) mx = std::max(mx, x);
    std::vector<double> w(lp.size(), 0.0);
    for (std::size_t i = 0; i < lp.size(); ++i) {
      if (lp[i] > kNegInf) w[i] = std::exp((lp[i] - mx) / temperature);
    }
    const TokenId pick = static_cast<TokenId>(rng.categorical(w));
    if (pick == vocab_.eos) break;
    out.push_back(pick);
  }
  return out;
}

std::vector<TokenId> NgramModel::expansion_candidates(
    std::span<const TokenId> padded) const {
  const std::size_t want = static_cast<std::size_t>(cfg_.beam_width);
  std::vector<TokenId> out;
  std::vector<bool> seen(vocab_.size(), false);
  auto take_from = [&](const ContextStats& st) {
    for (std::uint32_t idx : st.by_count) {
      if (out.size() >= want) return;
      const TokenId id = st.by_id[idx].first;
      if (vocab_.is_special(id) || seen[id]) continue;
      seen[id] = true;
      out.push_back(id);
    }
  };
  for (int o = cfg_.order; o >= 2 && out.size() < want; --o) {
    const auto key = padded.subspan(padded.size() - (o - 1));
    const ContextStats* st = find_context(o, key);
    if (st != nullptr) take_from(*st);
  }
  if (out.size() < want) take_from(unigram_);
  return out;
}

NgramModel::Beam NgramModel::infill_beam(std::span<const TokenId> left,
                                         std::span<const TokenId> right,
                                         int len) const {
  if (len < 0) throw std::invalid_argument("infill_beam: negative length");
  Beam beam;
  if (len == 0) {
    beam.candidates.push_back({});
    beam.log_w.push_back(0.0);
    return beam;
  }
  {
    std::vector<std::pair<std::vector<TokenId>, double>> frontier{{{}, 0.0}};
    std::vector<std::pair<std::vector<TokenId>, double>> pool;
    std::vector<TokenId> ctx;
    for (int pos = 0; pos < len; ++pos) {
      pool.clear();
      for (const auto& [seq, lp] : frontier) {
        ctx.assign(left.begin(), left.end());
        ctx.insert(ctx.end(), seq.begin(), seq.end());
        const std::vector<TokenId> padded = padded_context(ctx);
        const auto levels = backoff_levels(padded);
        for (TokenId cand : expansion_candidates(padded)) {
          const double p = prob_from_levels(cand, levels);
          if (p <= 0.0) continue;
          auto ext = seq;
          ext.push_back(cand);
          pool.emplace_back(std::move(ext), lp + std::log(p));
        }
      }
      std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      if (pool.size() > static_cast<std::size_t>(cfg_.beam_width)) {
        pool.resize(static_cast<std::size_t>(cfg_.beam_width));
      }
      frontier = std::move(pool);
      pool = {};
      if (frontier.empty()) break;
    }
    if (frontier.empty()) {
      throw std::runtime_error("infill_beam: no candidates (empty vocab?)");
    }
    // Right-edge continuation: positions whose context overlaps the span.
    const int jmax =
        std::min<int>(cfg_.order - 1, static_cast<int>(right.size()) + 1);
    for (auto& [seq, lp] : frontier) {
      double score = lp;
      for (int j = 1; j <= jmax; ++j) {
        const TokenId target = j <= static_cast<int>(right.size())
                                   ? right[static_cast<std::size_t>(j - 1)]
                                   : vocab_.eos;
        ctx.assign(left.begin(), left.end());
        ctx.insert(ctx.end(), seq.begin(), seq.end());
        ctx.insert(ctx.end(), right.begin(), right.begin() + (j - 1));
        score += logprob(target, ctx);
      }
      beam.candidates.push_back(std::move(seq));
      // Flattened by the proposal temperature. Sampling and pricing share
      // these weights, so the MH correction stays exact at any temperature.
      beam.log_w.push_back(score / cfg_.infill_temperature);
    }
  }
  const double z = log_sum_exp(beam.log_w);
  if (z == kNegInf) {
    throw std::runtime_error("infill_beam: all candidates have zero mass");
  }
  for (double& w : beam.log_w) w -= z;
  return beam;
}

double NgramModel::length_log_prior(int len, int peak, int len_lo,
                                    int len_hi) const {
  const int lo = std::max(0, len_lo);
  const int hi = std::min(len_hi, cfg_.max_infill_len);
  if (lo > hi) throw std::invalid_argument("length prior: empty support");
  if (len < lo || len > hi) return kNegInf;
  double z = 0.0;
  for (int l = lo; l <= hi; ++l) {
    z += std::pow(cfg_.length_ratio, std::abs(l - peak));
  }
  return std::log(std::pow(cfg_.length_ratio, std::abs(len - peak))) -
         std::log(z);
}

InfillProposal NgramModel::propose_infill(std::span<const TokenId> left,
                                          std::span<const TokenId> right,
                                          int mask_width, int len_lo,
                                          int len_hi, Rng& rng) const {
  if (mask_width < 0) {
    throw std::invalid_argument("propose_infill: negative mask width");
  }
  const int lo = std::max(0, len_lo);
  const int hi = std::min(len_hi, cfg_.max_infill_len);
  if (lo > hi) throw std::invalid_argument("propose_infill: empty support");
  std::vector<double> len_w;
  for (int l = lo; l <= hi; ++l) {
    len_w.push_back(std::pow(cfg_.length_ratio, std::abs(l - mask_width)));
  }
  const int len = lo + static_cast<int>(rng.categorical(len_w));
  const Beam beam = infill_beam(left, right, len);
  std::vector<double> w(beam.log_w.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(beam.log_w[i]);
  const std::size_t pick = rng.categorical(w);
  InfillProposal out;
  out.replacement = beam.candidates[pick];
  out.log_q =
      length_log_prior(len, mask_width, lo, hi) + beam.log_w[pick];
  return out;
}

double NgramModel::infill_logprob(std::span<const TokenId> left,
                                  std::span<const TokenId> right,
                                  std::span<const TokenId> span_tokens,
                                  int mask_width, int len_lo,
                                  int len_hi) const {
  const int len = static_cast<int>(span_tokens.size());
  const double prior = [&] {
    const int lo = std::max(0, len_lo);
    const int hi = std::min(len_hi, cfg_.max_infill_len);
    if (lo > hi) throw std::invalid_argument("infill_logprob: empty support");
    if (len < lo || len > hi) return kNegInf;
    return length_log_prior(len, mask_width, lo, hi);
  }();
  if (prior == kNegInf) return kNegInf;
  const Beam beam = infill_beam(left, right, len);
  for (std::size_t i = 0; i < beam.candidates.size(); ++i) {
    if (beam.candidates[i].size() == span_tokens.size() &&
        std::equal(span_tokens.begin(), span_tokens.end(),
                   beam.candidates[i].begin())) {
      return prior + beam.log_w[i];
    }
  }
  return kNegInf;
}

void NgramModel::save(std::ostream& out) const {
  using namespace binio;
  write_u32(out, static_cast<std::uint32_t>(cfg_.order));
  write_f64(out, cfg_.discount);
  write_u32(out, static_cast<std::uint32_t>(cfg_.min_count));
  write_u32(out, static_cast<std::uint32_t>(cfg_.beam_width));
  write_u32(out, static_cast<std::uint32_t>(cfg_.max_infill_len));
  write_f64(out, cfg_.length_ratio);
  write_f64(out, cfg_.infill_temperature);
  write_u32(out, static_cast<std::uint32_t>(vocab_.size()));
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    write_str(out, vocab_.surfaces[i]);
    write_u8(out, static_cast<std::uint8_t>(vocab_.kinds[i]));
  }
  auto write_stats = [&out](const ContextStats& st) {
    write_u32(out, static_cast<std::uint32_t>(st.by_id.size()));
    for (const auto& [id, c] : st.by_id) {
      write_u32(out, id);
      write_i64(out, c);
    }
  };
  write_stats(unigram_);
  write_u32(out, static_cast<std::uint32_t>(tables_.size()));
  for (const auto& table : tables_) {
    write_u32(out, static_cast<std::uint32_t>(table.size()));
    for (const auto& [key, st] : table) {  // std::map order: canonical
      write_u32(out, static_cast<std::uint32_t>(key.size()));
      for (TokenId id : key) write_u32(out, id);
      write_stats(st);
    }
  }
}

NgramModel NgramModel::load(std::istream& in) {
  using namespace binio;
  NgramModel m;
  m.cfg_.order = static_cast<int>(read_u32(in));
  m.cfg_.discount = read_f64(in);
  m.cfg_.min_count = static_cast<int>(read_u32(in));
  m.cfg_.beam_width = static_cast<int>(read_u32(in));
  m.cfg_.max_infill_len = static_cast<int>(read_u32(in));
  m.cfg_.length_ratio = read_f64(in);
  m.cfg_.infill_temperature = read_f64(in);
  const std::uint32_t vsize = read_u32(in);
  for (std::uint32_t i = 0; i < vsize; ++i) {
    m.vocab_.surfaces.push_back(read_str(in));
    m.vocab_.kinds.push_back(static_cast<TokenKind>(read_u8(in)));
  }
  for (TokenId id = 0; id < m.vocab_.surfaces.size(); ++id) {
    m.vocab_.index[m.vocab_.surfaces[id]] = id;
  }
  auto read_stats = [&in](ContextStats& st) {
    const std::uint32_t n = read_u32(in);
    st.by_id.clear();
    for (std::uint32_t i = 0; i < n; ++i) {
      const TokenId id = read_u32(in);
      const std::int64_t c = read_i64(in);
      st.by_id.emplace_back(id, c);
    }
    finalize_stats(st);
  };
  read_stats(m.unigram_);
  const std::uint32_t ntables = read_u32(in);
  m.tables_.assign(ntables, ContextTable{});
  for (std::uint32_t t = 0; t < ntables; ++t) {
    const std::uint32_t ncontexts = read_u32(in);
    for (std::uint32_t i = 0; i < ncontexts; ++i) {
      const std::uint32_t klen = read_u32(in);
      std::vector<TokenId> key(klen);
      for (std::uint32_t j = 0; j < klen; ++j) key[j] = read_u32(in);
      read_stats(m.tables_[t][key]);
    }
  }
  return m;
}

}  // namespace stylo
