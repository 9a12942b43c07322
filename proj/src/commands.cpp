#include "stylo/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stylo/eval.hpp"
#include "stylo/model_io.hpp"
#include "stylo/rng.hpp"
#include "stylo/style_encoder.hpp"

namespace stylo {

namespace {

[[noreturn]] void usage_error(const std::string& msg) {
  throw std::invalid_argument(msg);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: bad integer for " + key + ": " + value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: bad number for " + key + ": " + value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: bad seed for " + key + ": " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw std::invalid_argument("config: bad flag for " + key + ": " + value);
}

std::vector<double> parse_weights(const std::string& key,
                                  const std::string& value) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::string part =
        trim(value.substr(start, comma == std::string::npos ? std::string::npos
                                                            : comma - start));
    if (part.empty()) {
      throw std::invalid_argument("config: empty entry in " + key);
    }
    out.push_back(parse_double(key, part));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path.string());
  }
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::vector<Document> all_documents(const Corpus& corpus) {
  std::vector<Document> docs;
  for (const auto& author : corpus.authors) {
    docs.insert(docs.end(), author.documents.begin(), author.documents.end());
  }
  return docs;
}

Corpus load_required(const std::string& path, const char* what, int truncate) {
  if (path.empty()) {
    usage_error(std::string(what) + " path required");
  }
  Corpus corpus = load_jsonl(path, static_cast<std::size_t>(truncate));
  if (corpus.total_documents() == 0) {
    throw std::runtime_error(std::string(what) + ": no usable documents in " +
                             path);
  }
  return corpus;
}

std::filesystem::path ensure_out_dir(const AppConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

double doc_perplexity(const NgramModel& lm, const Document& doc) {
  return lm.perplexity(lm.ids(doc.tokens));
}

double style_similarity(const StyleEncoder& encoder, const Document& doc,
                        const StyleVector& target) {
  const StyleVector v = encoder.encode(std::span<const Document>(&doc, 1));
  return cosine_similarity(v.span(), target.span());
}

void write_trace_header(std::ostream& out) { out << "doc,step,energy,accepted\n"; }

void append_trace(std::ostream& out, std::size_t doc_index,
                  const std::vector<StepTrace>& trace) {
  for (const auto& t : trace) {
    out << doc_index << ',' << t.step << ',' << format_double(t.energy) << ','
        << (t.accepted ? 1 : 0) << '\n';
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void AppConfig::set(const std::string& key, const std::string& value) {
  if (key == "corpus") { corpus = value; return; }
  if (key == "model") { model = value; return; }
  if (key == "sample") { sample = value; return; }
  if (key == "content") { content = value; return; }
  if (key == "style") { style = value; return; }
  if (key == "out_dir") { out_dir = value; return; }
  if (key == "truncate_tokens") { truncate_tokens = parse_int(key, value); return; }
  if (key == "order") { order = parse_int(key, value); return; }
  if (key == "discount") { discount = parse_double(key, value); return; }
  if (key == "min_count") { min_count = parse_int(key, value); return; }
  if (key == "beam_width") { beam_width = parse_int(key, value); return; }
  if (key == "max_infill_len") { max_infill_len = parse_int(key, value); return; }
  if (key == "length_ratio") { length_ratio = parse_double(key, value); return; }
  if (key == "infill_temperature") { infill_temperature = parse_double(key, value); return; }
  if (key == "hidden_dim") { hidden_dim = parse_int(key, value); return; }
  if (key == "train_steps") { train_steps = parse_int(key, value); return; }
  if (key == "batch_size") { batch_size = parse_int(key, value); return; }
  if (key == "learning_rate") { learning_rate = parse_double(key, value); return; }
  if (key == "momentum") { momentum = parse_double(key, value); return; }
  if (key == "clip_norm") { clip_norm = parse_double(key, value); return; }
  if (key == "sigma0") { sigma0 = parse_double(key, value); return; }
  if (key == "init_noise") { init_noise = parse_double(key, value); return; }
  if (key == "top_k") { top_k = parse_int(key, value); return; }
  if (key == "lambda") { lambda = parse_double(key, value); return; }
  if (key == "temperature") { temperature = parse_double(key, value); return; }
  if (key == "max_len") { max_len = parse_int(key, value); return; }
  if (key == "alpha_fluency") { alpha_fluency = parse_double(key, value); return; }
  if (key == "alpha_style") { alpha_style = parse_double(key, value); return; }
  if (key == "alpha_semantic") { alpha_semantic = parse_double(key, value); return; }
  if (key == "alpha_hamming") { alpha_hamming = parse_double(key, value); return; }
  if (key == "mask_width") { mask_width = parse_int(key, value); return; }
  if (key == "steps_multiplier") { steps_multiplier = parse_int(key, value); return; }
  if (key == "epochs") { epochs = parse_int(key, value); return; }
  if (key == "width_ratio") { width_ratio = parse_double(key, value); return; }
  if (key == "noun_constraint") { noun_constraint = parse_bool(key, value); return; }
  if (key == "max_doc_len") { max_doc_len = parse_int(key, value); return; }
  if (key == "preset") {
    if (value != "" && value != "revise" && value != "transfer") {
      throw std::invalid_argument("config: preset must be revise or transfer");
    }
    preset = value;
    return;
  }
  if (key == "n_gen") { n_gen = parse_int(key, value); return; }
  if (key == "revise") { revise = parse_bool(key, value); return; }
  if (key == "transform") {
    transform_from_name(value);  // validates
    transform = value;
    return;
  }
  if (key == "sweep_weights") { sweep_weights = parse_weights(key, value); return; }
  if (key == "sweep_gens") { sweep_gens = parse_int(key, value); return; }
  if (key == "detect_n") { detect_n = parse_int(key, value); return; }
  if (key == "detect_steps") { detect_steps = parse_int(key, value); return; }
  if (key == "detect_lr") { detect_lr = parse_double(key, value); return; }
  if (key == "seed") { seed = parse_u64(key, value); return; }
  throw std::invalid_argument("config: unknown key: " + key);
}

AppConfig AppConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  AppConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key");
    }
    try {
      cfg.set(key, value);
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": " + e.what());
    }
  }
  return cfg;
}

NgramConfig AppConfig::ngram_config() const {
  NgramConfig c;
  c.order = order;
  c.discount = discount;
  c.min_count = min_count;
  c.beam_width = beam_width;
  c.max_infill_len = max_infill_len;
  c.length_ratio = length_ratio;
  c.infill_temperature = infill_temperature;
  return c;
}

GuidedConfig AppConfig::guided_config() const {
  GuidedConfig c;
  c.top_k = top_k;
  c.lambda = lambda;
  c.temperature = temperature;
  c.max_len = max_len;
  return c;
}

TrainOptions AppConfig::train_options() const {
  TrainOptions o;
  o.steps = train_steps;
  o.batch_size = batch_size;
  o.learning_rate = learning_rate;
  o.momentum = momentum;
  o.clip_norm = clip_norm;
  o.seed = seed;
  return o;
}

EnergyWeights AppConfig::weights_or(EnergyWeights preset_default) const {
  EnergyWeights w = preset_default;
  if (alpha_fluency) w.fluency = *alpha_fluency;
  if (alpha_style) w.style = *alpha_style;
  if (alpha_semantic) w.semantic = *alpha_semantic;
  if (alpha_hamming) w.hamming = *alpha_hamming;
  return w;
}

SamplerConfig AppConfig::sampler_config(
    SamplerConfig::Preset command_default) const {
  SamplerConfig c;
  c.preset = command_default;
  if (preset == "revise") c.preset = SamplerConfig::Preset::revise;
  if (preset == "transfer") c.preset = SamplerConfig::Preset::transfer;
  c.mask_width = mask_width;
  c.steps_multiplier = steps_multiplier;
  c.epochs = epochs;
  c.width_ratio = width_ratio;
  c.noun_constraint = noun_constraint;
  c.max_doc_len = max_doc_len;
  return c;
}

int cmd_train(const AppConfig& cfg) {
  if (cfg.model.empty()) usage_error("train: model output path required");
  const Corpus corpus =
      load_required(cfg.corpus, "train: corpus", cfg.truncate_tokens);
  const auto out_dir = ensure_out_dir(cfg);

  ModelBundle bundle;
  bundle.scaling = fit_scaling(corpus);
  const StyleEncoder encoder(bundle.scaling);
  bundle.lm = NgramModel::fit(corpus, cfg.ngram_config());
  bundle.tfidf = TfidfModel::fit(corpus);

  const std::vector<PrefixExample> data = build_prefix_dataset(corpus, encoder);
  Rng init_rng(cfg.seed);
  RegressorParams init = RegressorParams::near_identity(
      kStyleDim, cfg.hidden_dim, cfg.sigma0, cfg.init_noise, init_rng);
  TrainResult trained = train_regressor(data, std::move(init),
                                        cfg.train_options());
  bundle.regressor = std::move(trained.params);

  save_model(cfg.model, bundle);

  std::ofstream loss = open_out(out_dir / "train_loss.csv");
  loss << "step,nll\n";
  for (std::size_t i = 0; i < trained.nll_trace.size(); ++i) {
    loss << (i + 1) << ',' << format_double(trained.nll_trace[i]) << '\n';
  }

  std::cout << "trained model: authors=" << corpus.authors.size()
            << " documents=" << corpus.total_documents()
            << " vocab=" << bundle.lm.vocab().size()
            << " prefix_examples=" << data.size() << " final_nll="
            << format_double(trained.nll_trace.empty()
                                 ? 0.0
                                 : trained.nll_trace.back())
            << '\n';
  return 0;
}

int cmd_generate(const AppConfig& cfg) {
  if (cfg.model.empty()) usage_error("generate: model path required");
  const Corpus sample =
      load_required(cfg.sample, "generate: sample", cfg.truncate_tokens);
  if (cfg.n_gen < 0) usage_error("generate: n_gen must be >= 0");
  const auto out_dir = ensure_out_dir(cfg);

  const ModelBundle bundle = load_model(cfg.model);
  const StyleEncoder encoder(bundle.scaling);
  const GuidedDecoder decoder(bundle.lm, bundle.regressor, encoder,
                              cfg.guided_config());
  const std::vector<Document> sample_docs = all_documents(sample);
  const StyleVector target = encoder.encode(
      std::span<const Document>(sample_docs.data(), sample_docs.size()));

  const EnergyModel energy(decoder, encoder, bundle.tfidf,
                           cfg.weights_or(EnergyWeights::generation()));
  const MhSampler sampler(energy,
                          cfg.sampler_config(SamplerConfig::Preset::revise));

  Corpus generated;
  std::ofstream metrics = open_out(out_dir / "gen_metrics.csv");
  metrics << "index,tokens,energy_initial,energy_final\n";
  std::ofstream trace;
  if (cfg.revise) {
    trace = open_out(out_dir / "trace.csv");
    write_trace_header(trace);
  }

  for (int i = 0; i < cfg.n_gen; ++i) {
    Rng rng(cfg.seed + static_cast<std::uint64_t>(i));
    const std::vector<Token> tokens = decoder.generate(target, rng);
    Document doc = make_document("gen-" + std::to_string(i), "generated",
                                 detokenize_canonical(tokens));
    const double e_initial =
        energy.total(std::span<const Document>(&doc, 1), target, nullptr).total;
    double e_final = e_initial;
    if (cfg.revise) {
      const std::vector<Document> docs{doc};
      const RunResult res = sampler.run(docs, target, nullptr, -1, rng);
      doc = res.best.front();
      e_final = res.best_energy.total;
      append_trace(trace, static_cast<std::size_t>(i), res.trace);
    }
    metrics << i << ',' << doc.tokens.size() << ',' << format_double(e_initial)
            << ',' << format_double(e_final) << '\n';
    generated.authors.push_back(AuthorSample{doc.author_id, {std::move(doc)}});
  }
  write_jsonl(generated, (out_dir / "generated.jsonl").string());

  std::cout << "generated " << cfg.n_gen << " documents\n";
  return 0;
}

int cmd_transfer(const AppConfig& cfg) {
  if (cfg.model.empty()) usage_error("transfer: model path required");
  const Corpus content =
      load_required(cfg.content, "transfer: content", cfg.truncate_tokens);
  const Corpus style =
      load_required(cfg.style, "transfer: style", cfg.truncate_tokens);
  const auto out_dir = ensure_out_dir(cfg);

  const ModelBundle bundle = load_model(cfg.model);
  const StyleEncoder encoder(bundle.scaling);
  const GuidedDecoder decoder(bundle.lm, bundle.regressor, encoder,
                              cfg.guided_config());
  const std::vector<Document> style_docs = all_documents(style);
  const StyleVector target = encoder.encode(
      std::span<const Document>(style_docs.data(), style_docs.size()));

  const EnergyModel energy(decoder, encoder, bundle.tfidf,
                           cfg.weights_or(EnergyWeights::transfer()));
  const MhSampler sampler(energy,
                          cfg.sampler_config(SamplerConfig::Preset::transfer));

  const std::vector<Document> inputs = all_documents(content);
  Corpus transferred;
  std::ofstream metrics = open_out(out_dir / "transfer_metrics.csv");
  metrics << "index,author_id,style_sim_initial,style_sim_final,semantic_sim,"
             "levenshtein,delta_ppl_pct,delta_ppl_signed,energy_initial,"
             "energy_final,steps,accepted\n";
  std::ofstream trace = open_out(out_dir / "trace.csv");
  write_trace_header(trace);

  for (std::size_t d = 0; d < inputs.size(); ++d) {
    const Document& input = inputs[d];
    const std::vector<Document> docs{input};
    Rng rng(cfg.seed + d);
    const RunResult res = sampler.run(docs, target, &docs, -1, rng);
    const Document& out_doc = res.best.front();

    const double ppl_in = doc_perplexity(bundle.lm, input);
    const double ppl_out = doc_perplexity(bundle.lm, out_doc);
    metrics << d << ',' << csv_escape(input.author_id) << ','
            << format_double(style_similarity(encoder, input, target)) << ','
            << format_double(style_similarity(encoder, out_doc, target)) << ','
            << format_double(bundle.tfidf.cosine(input.tokens, out_doc.tokens))
            << ',' << levenshtein(input.raw, out_doc.raw) << ','
            << format_double(delta_fluency_pct(ppl_out, ppl_in)) << ','
            << format_double(delta_fluency_signed(ppl_out, ppl_in)) << ','
            << format_double(res.initial_energy.total) << ','
            << format_double(res.best_energy.total) << ',' << res.steps << ','
            << res.accepted << '\n';
    append_trace(trace, d, res.trace);
    transferred.authors.push_back(
        AuthorSample{out_doc.author_id, {out_doc}});
  }
  write_jsonl(transferred, (out_dir / "transferred.jsonl").string());

  std::cout << "transferred " << inputs.size() << " documents\n";
  return 0;
}

int cmd_anonymize(const AppConfig& cfg) {
  if (cfg.model.empty()) usage_error("anonymize: model path required");
  const Corpus corpus =
      load_required(cfg.corpus, "anonymize: corpus", cfg.truncate_tokens);
  const std::size_t n = corpus.authors.size();
  if (n < 2) usage_error("anonymize: need at least 2 authors");
  const auto out_dir = ensure_out_dir(cfg);

  const ModelBundle bundle = load_model(cfg.model);
  const StyleEncoder encoder(bundle.scaling);
  const GuidedDecoder decoder(bundle.lm, bundle.regressor, encoder,
                              cfg.guided_config());
  const EnergyModel energy(decoder, encoder, bundle.tfidf,
                           cfg.weights_or(EnergyWeights::transfer()));
  const MhSampler sampler(energy,
                          cfg.sampler_config(SamplerConfig::Preset::transfer));

  // First half of each author = attacker's known documents (queries);
  // second half = the documents to anonymize (targets).
  std::vector<AuthorSample> queries, targets;
  for (const auto& author : corpus.authors) {
    auto [query_half, target_half] = split_author(author);
    queries.push_back(std::move(query_half));
    targets.push_back(std::move(target_half));
  }
  const double eer_before = attribution_eer(queries, targets, encoder);

  // Each author is rewritten toward a decoy: the author halfway around the
  // roster, so decoys are always someone else.
  const std::size_t shift = n / 2;
  std::vector<AuthorSample> anonymized = targets;
  double lev_sum = 0.0;
  std::size_t doc_count = 0;
  std::uint64_t run_index = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const StyleVector decoy = encoder.encode(targets[(i + shift) % n]);
    for (auto& doc : anonymized[i].documents) {
      const std::vector<Document> docs{doc};
      Rng rng(cfg.seed + run_index++);
      const RunResult res = sampler.run(docs, decoy, &docs, -1, rng);
      lev_sum += static_cast<double>(levenshtein(doc.raw, res.best.front().raw));
      ++doc_count;
      doc = res.best.front();
    }
  }
  const double eer_after = attribution_eer(queries, anonymized, encoder);

  Corpus out_corpus;
  out_corpus.authors = anonymized;
  write_jsonl(out_corpus, (out_dir / "anonymized.jsonl").string());
  std::ofstream report = open_out(out_dir / "eer_report.csv");
  report << "eer_before,eer_after,mean_levenshtein\n";
  report << format_double(eer_before) << ',' << format_double(eer_after) << ','
         << format_double(lev_sum / static_cast<double>(doc_count)) << '\n';

  std::cout << "anonymized " << doc_count << " documents: eer "
            << format_double(eer_before) << " -> " << format_double(eer_after)
            << '\n';
  return 0;
}

int cmd_interpolate(const AppConfig& cfg) {
  if (cfg.model.empty()) usage_error("interpolate: model path required");
  const Corpus sample =
      load_required(cfg.sample, "interpolate: sample", cfg.truncate_tokens);
  const auto out_dir = ensure_out_dir(cfg);

  const ModelBundle bundle = load_model(cfg.model);
  const StyleEncoder encoder(bundle.scaling);
  const GuidedDecoder decoder(bundle.lm, bundle.regressor, encoder,
                              cfg.guided_config());

  const std::vector<Document> base_docs = all_documents(sample);
  const Corpus ablated_corpus =
      apply_transform(sample, transform_from_name(cfg.transform));
  const std::vector<Document> ablated_docs = all_documents(ablated_corpus);
  const StyleVector base = encoder.encode(
      std::span<const Document>(base_docs.data(), base_docs.size()));
  const StyleVector ablated = encoder.encode(
      std::span<const Document>(ablated_docs.data(), ablated_docs.size()));

  const std::vector<SweepPoint> sweep = interpolation_sweep(
      decoder, ablated, base, cfg.sweep_weights, cfg.sweep_gens, cfg.seed);

  std::ofstream out = open_out(out_dir / "interpolation.csv");
  out << "weight,mean_cap_rate,mean_punct_rate\n";
  for (const auto& p : sweep) {
    out << format_double(p.weight) << ',' << format_double(p.mean_cap_rate)
        << ',' << format_double(p.mean_punct_rate) << '\n';
  }

  std::cout << "interpolation sweep: " << sweep.size() << " weights, "
            << cfg.sweep_gens << " generations each\n";
  return 0;
}

int cmd_eval_detect(const AppConfig& cfg) {
  if (cfg.model.empty()) usage_error("eval-detect: model path required");
  const Corpus corpus =
      load_required(cfg.corpus, "eval-detect: corpus", cfg.truncate_tokens);
  if (cfg.detect_n < 2) usage_error("eval-detect: detect_n must be >= 2");
  const auto out_dir = ensure_out_dir(cfg);

  const ModelBundle bundle = load_model(cfg.model);
  const StyleEncoder encoder(bundle.scaling);
  const GuidedDecoder decoder(bundle.lm, bundle.regressor, encoder,
                              cfg.guided_config());
  const std::vector<Document> real = all_documents(corpus);
  if (real.size() < 2) usage_error("eval-detect: need at least 2 documents");
  const StyleVector target =
      encoder.encode(std::span<const Document>(real.data(), real.size()));

  // In-domain fakes come from the guided decoder; the zero-shot detector is
  // instead trained against plain base-model samples.
  std::vector<Document> fake_guided, fake_base;
  for (int i = 0; i < cfg.detect_n; ++i) {
    Rng rng(cfg.seed + static_cast<std::uint64_t>(i));
    fake_guided.push_back(make_document(
        "guided-" + std::to_string(i), "generated",
        detokenize_canonical(decoder.generate(target, rng))));
  }
  for (int i = 0; i < cfg.detect_n; ++i) {
    Rng rng(cfg.seed + static_cast<std::uint64_t>(cfg.detect_n + i));
    const std::vector<TokenId> ids =
        bundle.lm.sample(cfg.max_len, cfg.temperature, rng);
    std::vector<Token> tokens;
    tokens.reserve(ids.size());
    for (TokenId id : ids) tokens.push_back(bundle.lm.vocab().token(id));
    fake_base.push_back(make_document("base-" + std::to_string(i), "generated",
                                      detokenize_canonical(tokens)));
  }

  auto split_even_odd = [](const std::vector<Document>& docs) {
    std::pair<std::vector<Document>, std::vector<Document>> halves;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      (i % 2 == 0 ? halves.first : halves.second).push_back(docs[i]);
    }
    return halves;
  };
  const auto [real_train, real_test] = split_even_odd(real);
  const auto [guided_train, guided_test] = split_even_odd(fake_guided);

  const DetectorModel in_domain =
      train_detector(real_train, guided_train, encoder, bundle.lm,
                     cfg.detect_steps, cfg.detect_lr);
  const DetectorModel zero_shot = train_detector(
      real_train, fake_base, encoder, bundle.lm, cfg.detect_steps,
      cfg.detect_lr);
  const double acc_in = detector_accuracy(in_domain, real_test, guided_test,
                                          encoder, bundle.lm);
  const double acc_zs = detector_accuracy(zero_shot, real_test, guided_test,
                                          encoder, bundle.lm);

  std::ofstream report = open_out(out_dir / "detect_report.csv");
  report << "in_domain_accuracy,zero_shot_accuracy,train_real,test_real,"
            "fake_per_class\n";
  report << format_double(acc_in) << ',' << format_double(acc_zs) << ','
         << real_train.size() << ',' << real_test.size() << ',' << cfg.detect_n
         << '\n';

  std::cout << "detector accuracy: in-domain " << format_double(acc_in)
            << ", zero-shot " << format_double(acc_zs) << '\n';
  return 0;
}

int cmd_eval_eer(const AppConfig& cfg) {
  if (cfg.model.empty()) usage_error("eval-eer: model path required");
  const Corpus corpus =
      load_required(cfg.corpus, "eval-eer: corpus", cfg.truncate_tokens);
  if (corpus.authors.size() < 2) usage_error("eval-eer: need >= 2 authors");
  const auto out_dir = ensure_out_dir(cfg);

  const ModelBundle bundle = load_model(cfg.model);
  const StyleEncoder encoder(bundle.scaling);

  std::vector<AuthorSample> queries, targets;
  for (const auto& author : corpus.authors) {
    auto [query_half, target_half] = split_author(author);
    queries.push_back(std::move(query_half));
    targets.push_back(std::move(target_half));
  }
  const double eer = attribution_eer(queries, targets, encoder);

  std::ofstream report = open_out(out_dir / "eer.csv");
  report << "authors,comparisons,eer\n";
  report << corpus.authors.size() << ','
         << queries.size() * targets.size() << ',' << format_double(eer)
         << '\n';

  std::cout << "attribution eer: " << format_double(eer) << " over "
            << corpus.authors.size() << " authors\n";
  return 0;
}

}  // namespace stylo
