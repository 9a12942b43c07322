#include "stylo/mh_sampler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "stylo/guided_decoder.hpp"
#include "stylo/mathutil.hpp"

namespace stylo {

namespace {

const std::unordered_set<std::string>& closed_class_words() {
  static const std::unordered_set<std::string> words = {
      "the",  "a",     "an",    "and",   "or",    "but",   "if",    "then",
      "else", "when",  "while", "of",    "to",    "in",    "on",    "at",
      "by",   "for",   "with",  "from",  "into",  "over",  "under", "about",
      "after", "before", "between", "through", "during", "above", "below",
      "up",   "down",  "out",   "off",   "again", "once",  "here",  "there",
      "is",   "am",    "are",   "was",   "were",  "be",    "been",  "being",
      "do",   "does",  "did",   "done",  "have",  "has",   "had",   "having",
      "will", "would", "can",   "could", "shall", "should", "may",  "might",
      "must", "not",   "no",    "nor",   "so",    "too",   "very",  "just",
      "than", "that",  "this",  "these", "those", "it",    "its",   "i",
      "me",   "my",    "mine",  "we",    "us",    "our",   "ours",  "you",
      "your", "yours", "he",    "him",   "his",   "she",   "her",   "hers",
      "they", "them",  "their", "theirs", "what", "which", "who",   "whom",
      "whose", "how",  "why",   "where", "all",   "any",   "both",  "each",
      "few",  "more",  "most",  "other", "some",  "such",  "only",  "own",
      "same", "as",    "because", "until", "against", "further", "yes", "also",
      "now",  "ever",  "never", "always", "often", "really", "quite", "still"};
  return words;
}

const std::unordered_set<std::string>& noun_lexicon() {
  static const std::unordered_set<std::string> words = {
      "time", "year", "people", "way", "day", "man", "woman", "thing",
      "child", "world", "life", "hand", "part", "place", "case", "week",
      "company", "system", "program", "question", "work", "government",
      "number", "night", "point", "home", "water", "room", "mother", "area",
      "money", "story", "fact", "month", "lot", "right", "study", "book",
      "eye", "job", "word", "business", "issue", "side", "kind", "head",
      "house", "service", "friend", "father", "power", "hour", "game",
      "line", "end", "member", "law", "car", "city", "community", "name",
      "president", "team", "minute", "idea", "kid", "body", "information",
      "back", "parent", "face", "others", "level", "office", "door",
      "health", "person", "art", "war", "history", "party", "result",
      "change", "morning", "reason", "research", "girl", "guy", "moment",
      "air", "teacher", "force", "education", "foot", "boy", "age", "policy",
      "process", "music", "market", "sense", "nation", "plan", "college",
      "interest", "death", "experience", "effect", "use", "class", "control",
      "care", "field", "development", "role", "effort", "rate", "heart",
      "drug", "show", "leader", "light", "voice", "wife", "police", "mind",
      "price", "report", "decision", "son", "view", "relationship", "town",
      "road", "arm", "difference", "value", "building", "action", "model",
      "season", "society", "tax", "director", "position", "player", "record",
      "paper", "space", "ground", "form", "event", "matter", "center",
      "couple", "site", "project", "activity", "star", "table", "court",
      "oil", "situation", "cost", "industry", "figure", "street", "image",
      "phone", "data", "picture", "practice", "piece", "land", "product",
      "doctor", "wall", "patient", "worker", "news", "test", "movie",
      "north", "love", "support", "technology", "thanks", "dog", "cat",
      "tree", "river", "mountain", "food", "school", "computer", "letter",
      "song", "bird", "fish", "stone", "garden", "window", "bridge", "cup",
      "chair", "clock", "beach", "cloud", "rain", "snow", "fire", "storm"};
  return words;
}

bool noun_suffix(const std::string& lower) {
  static const std::vector<std::string> suffixes = {
      "tion", "ment", "ness", "ship", "ism", "ology", "sion", "ity"};
  if (lower.size() < 6) return false;
  for (const auto& suf : suffixes) {
    if (lower.size() > suf.size() &&
        lower.compare(lower.size() - suf.size(), suf.size(), suf) == 0) {
      return true;
    }
  }
  return false;
}

std::string lowercased(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

// Chain states must re-tokenize to themselves. Adjacent whitespace-run
// tokens are the one kind pair that merges under its canonical (empty)
// separator, so a splice creating one leaves the state space.
bool creates_merged_run(const std::vector<Token>& tokens, int lo, int hi) {
  const int last = static_cast<int>(tokens.size()) - 1;
  for (int i = std::max(0, lo); i < std::min(hi, last); ++i) {
    if (tokens[i].kind == TokenKind::space_run &&
        tokens[i + 1].kind == TokenKind::space_run) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<PosTag> tag_pos(const std::vector<Token>& tokens) {
  std::vector<PosTag> tags(tokens.size(), PosTag::other);
  bool sentence_start = true;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.kind == TokenKind::space_run) continue;
    if (t.kind == TokenKind::punct) {
      const char c = t.surface[0];
      if (c == '.' || c == '!' || c == '?') sentence_start = true;
      continue;
    }
    if (t.kind == TokenKind::word) {
      const std::string lower = lowercased(t.surface);
      if (!closed_class_words().contains(lower)) {
        const bool capitalized =
            std::isupper(static_cast<unsigned char>(t.surface[0])) != 0;
        if (noun_lexicon().contains(lower) || noun_suffix(lower) ||
            (capitalized && !sentence_start)) {
          tags[i] = PosTag::noun;
        }
      }
    }
    sentence_start = false;
  }
  return tags;
}

MhSampler::MhSampler(const EnergyModel& energy, SamplerConfig cfg)
    : energy_(energy), cfg_(cfg) {
  if (cfg_.mask_width < 1) throw std::invalid_argument("sampler: mask_width >= 1");
  if (cfg_.steps_multiplier < 0 || cfg_.epochs < 0) {
    throw std::invalid_argument("sampler: negative step budget");
  }
  if (cfg_.width_ratio <= 0.0 || cfg_.width_ratio > 1.0) {
    throw std::invalid_argument("sampler: width_ratio in (0,1]");
  }
  if (cfg_.max_doc_len < 0) throw std::invalid_argument("sampler: max_doc_len >= 0");
}

int MhSampler::protected_limit(const StateDoc& doc, int start) const {
  const int m = static_cast<int>(doc.tokens.size());
  for (int p = start; p < m; ++p) {
    if (doc.protect[p]) return p - start;
  }
  return m - start;
}

std::vector<int> MhSampler::editable_starts(const StateDoc& doc) const {
  const int m = static_cast<int>(doc.tokens.size());
  if (m == 0) return {};
  const int k = cfg_.mask_width;
  std::vector<int> starts;
  for (int s = 0; s <= std::max(0, m - k); ++s) {
    const int window_end = std::min(s + k, m);
    bool blocked = false;
    for (int p = s; p < window_end; ++p) {
      if (doc.protect[p]) {
        blocked = true;
        break;
      }
    }
    if (!blocked) starts.push_back(s);
  }
  return starts;
}

void MhSampler::score_positions(StateDoc& doc, const StyleVector& target,
                                int from) const {
  const GuidedDecoder& decoder = energy_.decoder();
  const bool track_feats = decoder.config().lambda != 0.0;
  GuidedDecoder::Workspace ws;
  if (track_feats) {
    for (int i = 0; i < from; ++i) ws.feats.push(doc.tokens[i]);
  }
  const int m = static_cast<int>(doc.tokens.size());
  doc.pos_logprob.resize(m);
  for (int i = from; i < m; ++i) {
    const auto ps = decoder.score_position(
        std::span<const TokenId>(doc.ids.data(), i), doc.ids[i], target, ws);
    doc.pos_logprob[i] = ps.log_p;
    if (track_feats) ws.feats.push(doc.tokens[i]);
  }
  double sum = 0.0;
  for (double lp : doc.pos_logprob) sum += lp;
  doc.fluency = -sum / static_cast<double>(m);
}

StateDoc MhSampler::make_state_doc(const Document& doc,
                                   const StyleVector& target,
                                   const std::vector<Token>* reference) const {
  if (doc.tokens.empty()) {
    throw std::invalid_argument("sampler: documents must be non-empty");
  }
  StateDoc sd;
  sd.author_id = doc.author_id;
  sd.domain_label = doc.domain_label;
  sd.tokens = doc.tokens;
  sd.seps = doc.seps;
  sd.ids = lm().ids(doc.tokens);
  sd.protect.assign(doc.tokens.size(), 0);
  if (cfg_.noun_constraint) {
    const std::vector<PosTag> tags = tag_pos(doc.tokens);
    for (std::size_t i = 0; i < tags.size(); ++i) {
      sd.protect[i] = tags[i] == PosTag::noun ? 1 : 0;
    }
  }
  // State features use canonical separators: the chain's law must depend on
  // token content alone (a reverse move cannot reconstruct raw spacing), and
  // recorded separators stay attached purely so untouched text round-trips.
  sd.feats = featurize(sd.tokens, canonical_seps(sd.tokens));
  const int m = static_cast<int>(sd.tokens.size());
  sd.len_cap = cfg_.max_doc_len > 0 ? std::max(cfg_.max_doc_len, m) : 0;
  score_positions(sd, target, 0);
  if (reference != nullptr) {
    sd.semantic = energy_.semantic_doc(sd.tokens, *reference);
    sd.hamming = energy_.hamming_doc(sd.tokens, *reference);
  }
  return sd;
}

SamplerState MhSampler::init_state(const std::vector<Document>& docs,
                                   const StyleVector& target,
                                   const std::vector<Document>* reference) const {
  if (docs.empty()) throw std::invalid_argument("sampler: empty state");
  const bool needs_ref = energy_.needs_reference();
  if (needs_ref) {
    if (reference == nullptr || reference->size() != docs.size()) {
      throw std::invalid_argument(
          "sampler: reference documents must pair 1:1 with the state");
    }
  }
  SamplerState state;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (needs_ref) {
      state.reference_tokens.push_back((*reference)[i].tokens);
    }
    StateDoc sd = make_state_doc(
        docs[i], target, needs_ref ? &state.reference_tokens.back() : nullptr);
    state.pooled.add(sd.feats);
    state.fluency_sum += sd.fluency;
    state.semantic_sum += sd.semantic;
    state.hamming_sum += sd.hamming;
    state.docs.push_back(std::move(sd));
  }
  const double n = static_cast<double>(state.docs.size());
  std::optional<double> sem, ham;
  if (needs_ref) {
    sem = state.semantic_sum / n;
    ham = state.hamming_sum / n;
  }
  state.energy = energy_.combine(state.fluency_sum / n,
                                 energy_.style_energy(state.pooled, target),
                                 sem, ham);
  state.best_docs = state.docs;
  state.best_energy = state.energy;
  return state;
}

double MhSampler::acceptance_log_prob(double e_old, double e_new,
                                      double log_q_fwd, double log_q_rev) {
  if (log_q_rev == kNegInf) return kNegInf;
  return std::min(0.0, (e_old - e_new) + log_q_rev - log_q_fwd);
}

bool MhSampler::step(SamplerState& state, const StyleVector& target,
                     Rng& rng) const {
  ++state.steps_taken;
  const std::size_t d = rng.uniform_index(state.docs.size());
  StateDoc& doc = state.docs[d];
  const int m = static_cast<int>(doc.tokens.size());
  const int k = cfg_.mask_width;

  const std::vector<int> starts = editable_starts(doc);
  if (starts.empty()) return false;
  const int s = starts[rng.uniform_index(starts.size())];

  // Mask width: geometric around the configured peak, truncated by the doc
  // end and the nearest protected position.
  const int maxw = protected_limit(doc, s);
  std::vector<double> width_w(static_cast<std::size_t>(maxw) + 1);
  for (int w = 0; w <= maxw; ++w) {
    width_w[w] = std::pow(cfg_.width_ratio, std::abs(w - k));
  }
  const int mask = static_cast<int>(rng.categorical(width_w));
  double width_z = 0.0;
  for (double w : width_w) width_z += w;
  const double log_width =
      std::log(width_w[static_cast<std::size_t>(mask)] / width_z);

  // Replacement length bounds: the doc may never empty and never outgrow
  // its cap. Both bounds are functions of the doc's length alone, so the
  // reverse bounds are always consistent.
  const int len_lo = mask == m ? 1 : 0;
  const int len_hi = doc.len_cap > 0
                         ? doc.len_cap - m + mask
                         : lm().config().max_infill_len;
  const std::span<const TokenId> all_ids(doc.ids);
  const auto left = all_ids.first(static_cast<std::size_t>(s));
  const auto right = all_ids.subspan(static_cast<std::size_t>(s + mask));
  const InfillProposal prop =
      lm().propose_infill(left, right, mask, len_lo, len_hi, rng);
  const int rep_len = static_cast<int>(prop.replacement.size());
  const double log_q_fwd =
      -std::log(static_cast<double>(starts.size())) + log_width + prop.log_q;

  // Candidate document: splice tokens, separators, ids, protection flags.
  StateDoc cand;
  cand.author_id = doc.author_id;
  cand.domain_label = doc.domain_label;
  cand.len_cap = doc.len_cap;
  const int m2 = m - mask + rep_len;
  cand.tokens.reserve(m2);
  cand.ids.reserve(m2);
  cand.tokens.assign(doc.tokens.begin(), doc.tokens.begin() + s);
  cand.ids.assign(doc.ids.begin(), doc.ids.begin() + s);
  cand.protect.assign(doc.protect.begin(), doc.protect.begin() + s);
  for (TokenId id : prop.replacement) {
    cand.tokens.push_back(lm().vocab().token(id));
    cand.ids.push_back(id);
    cand.protect.push_back(0);
  }
  cand.tokens.insert(cand.tokens.end(), doc.tokens.begin() + s + mask,
                     doc.tokens.end());
  cand.ids.insert(cand.ids.end(), doc.ids.begin() + s + mask, doc.ids.end());
  cand.protect.insert(cand.protect.end(), doc.protect.begin() + s + mask,
                      doc.protect.end());
  // Separators decorate the output only (the chain's features always use
  // canonical separators). A boundary whose adjacent token pair survives
  // the edit keeps its raw bytes; every newly created adjacency gets the
  // canonical separator for its token kinds.
  if (mask == 0 && rep_len == 0) {
    cand.seps = doc.seps;
  } else {
    cand.seps.assign(doc.seps.begin(), doc.seps.begin() + s);
    const Token* left_tok = s > 0 ? &cand.tokens[s - 1] : nullptr;
    if (rep_len >= 1) {
      if (mask >= 1 && cand.tokens[s] == doc.tokens[s]) {
        cand.seps.push_back(doc.seps[s]);
      } else {
        cand.seps.push_back(canonical_sep(left_tok, cand.tokens[s]));
      }
      for (int j = 1; j < rep_len; ++j) {
        cand.seps.push_back(canonical_sep(&cand.tokens[s + j - 1],
                                          cand.tokens[s + j]));
      }
    }
    if (s + mask == m) {
      cand.seps.push_back(doc.seps[m]);  // surviving trailing whitespace
    } else {
      const Token* new_prev =
          rep_len >= 1 ? &cand.tokens[s + rep_len - 1] : left_tok;
      const bool pair_unchanged =
          rep_len >= 1 && mask >= 1 &&
          cand.tokens[s + rep_len - 1] == doc.tokens[s + mask - 1];
      cand.seps.push_back(pair_unchanged
                              ? doc.seps[s + mask]
                              : canonical_sep(new_prev, doc.tokens[s + mask]));
      cand.seps.insert(cand.seps.end(), doc.seps.begin() + s + mask + 1,
                       doc.seps.end());
    }
  }

  // Reverse move: mask the replacement (width rep_len) at the same start
  // and propose the original span. Start selection, width, length prior and
  // beam weight all priced under the candidate state. Candidates outside
  // the state space (merged whitespace runs) carry zero target density and
  // are rejected through the same irreversible-move path.
  const std::vector<int> rev_starts = editable_starts(cand);
  const bool rev_start_ok =
      !creates_merged_run(cand.tokens, s - 1, s + rep_len + 1) &&
      std::find(rev_starts.begin(), rev_starts.end(), s) != rev_starts.end();
  double log_q_rev = kNegInf;
  if (rev_start_ok) {
    const int rev_maxw = protected_limit(cand, s);
    if (rep_len <= rev_maxw) {
      std::vector<double> rev_width_w(static_cast<std::size_t>(rev_maxw) + 1);
      for (int w = 0; w <= rev_maxw; ++w) {
        rev_width_w[w] = std::pow(cfg_.width_ratio, std::abs(w - k));
      }
      double rev_width_z = 0.0;
      for (double w : rev_width_w) rev_width_z += w;
      const double rev_log_width = std::log(
          rev_width_w[static_cast<std::size_t>(rep_len)] / rev_width_z);
      const int rev_len_lo = rep_len == m2 ? 1 : 0;
      const int rev_len_hi = cand.len_cap > 0
                                 ? cand.len_cap - m2 + rep_len
                                 : lm().config().max_infill_len;
      const auto original_span =
          all_ids.subspan(static_cast<std::size_t>(s),
                          static_cast<std::size_t>(mask));
      const double span_lp = lm().infill_logprob(
          left, right, original_span, rep_len, rev_len_lo, rev_len_hi);
      if (span_lp > kNegInf) {
        log_q_rev = -std::log(static_cast<double>(rev_starts.size())) +
                    rev_log_width + span_lp;
      }
    }
  }

  double new_total = kNegInf;
  FeatureCounts pooled2;
  const bool needs_ref = energy_.needs_reference();
  std::optional<double> sem2, ham2;
  double fluency_sum2 = 0.0, semantic_sum2 = 0.0, hamming_sum2 = 0.0;
  EnergyBreakdown breakdown2;
  if (log_q_rev > kNegInf) {
    cand.feats = featurize(cand.tokens, canonical_seps(cand.tokens));
    pooled2 = state.pooled;
    pooled2.subtract(doc.feats);
    pooled2.add(cand.feats);
    // Fluency: prefixes before the edit are untouched, so those position
    // scores carry over exactly.
    cand.pos_logprob.assign(doc.pos_logprob.begin(),
                            doc.pos_logprob.begin() + s);
    cand.pos_logprob.resize(m2);
    score_positions(cand, target, s);
    if (needs_ref) {
      cand.semantic = energy_.semantic_doc(cand.tokens,
                                           state.reference_tokens[d]);
      cand.hamming = energy_.hamming_doc(cand.tokens,
                                         state.reference_tokens[d]);
    }
    fluency_sum2 = state.fluency_sum - doc.fluency + cand.fluency;
    semantic_sum2 = state.semantic_sum - doc.semantic + cand.semantic;
    hamming_sum2 = state.hamming_sum - doc.hamming + cand.hamming;
    const double n = static_cast<double>(state.docs.size());
    if (needs_ref) {
      sem2 = semantic_sum2 / n;
      ham2 = hamming_sum2 / n;
    }
    breakdown2 = energy_.combine(fluency_sum2 / n,
                                 energy_.style_energy(pooled2, target),
                                 sem2, ham2);
    new_total = breakdown2.total;
  }

  const double a =
      acceptance_log_prob(state.energy.total, new_total, log_q_fwd, log_q_rev);
  const double u = rng.uniform();
  const bool accept = std::log(u) < a;
  if (!accept) return false;

  state.pooled = std::move(pooled2);
  state.fluency_sum = fluency_sum2;
  state.semantic_sum = semantic_sum2;
  state.hamming_sum = hamming_sum2;
  state.docs[d] = std::move(cand);
  state.energy = breakdown2;
  ++state.accepted;
  if (state.energy.total < state.best_energy.total) {
    state.best_docs = state.docs;
    state.best_energy = state.energy;
  }
  return true;
}

long MhSampler::preset_steps(const std::vector<Document>& docs) const {
  std::size_t longest = 0;
  for (const auto& d : docs) longest = std::max(longest, d.tokens.size());
  const long per_token = cfg_.preset == SamplerConfig::Preset::transfer
                             ? cfg_.steps_multiplier
                             : cfg_.epochs;
  return per_token * static_cast<long>(longest);
}

RunResult MhSampler::run(const std::vector<Document>& docs,
                         const StyleVector& target,
                         const std::vector<Document>* reference, long steps,
                         Rng& rng) const {
  SamplerState state = init_state(docs, target, reference);
  if (steps < 0) steps = preset_steps(docs);
  RunResult result;
  result.initial_energy = state.energy;
  result.trace.reserve(static_cast<std::size_t>(steps));
  for (long t = 0; t < steps; ++t) {
    const bool accepted = step(state, target, rng);
    result.trace.push_back(StepTrace{t + 1, state.energy.total, accepted});
  }
  result.steps = steps;
  result.accepted = state.accepted;
  result.best_energy = state.best_energy;
  for (const auto& sd : state.best_docs) {
    result.best.push_back(make_document(sd.author_id, sd.domain_label,
                                        detokenize(sd.tokens, sd.seps)));
  }
  return result;
}

EnergyBreakdown MhSampler::recompute_energy(const SamplerState& state,
                                            const StyleVector& target) const {
  std::vector<Document> docs;
  for (const auto& sd : state.docs) {
    Document doc;
    doc.author_id = sd.author_id;
    doc.domain_label = sd.domain_label;
    doc.tokens = sd.tokens;
    doc.seps = canonical_seps(sd.tokens);  // states featurize canonically
    doc.raw = detokenize(doc.tokens, doc.seps);
    docs.push_back(std::move(doc));
  }
  std::vector<Document> ref;
  if (energy_.needs_reference()) {
    for (const auto& toks : state.reference_tokens) {
      Document doc;
      doc.tokens = toks;
      doc.seps = canonical_seps(toks);
      doc.raw = detokenize_canonical(toks);
      ref.push_back(std::move(doc));
    }
  }
  return energy_.total(docs, target,
                       energy_.needs_reference() ? &ref : nullptr);
}

}  // namespace stylo
