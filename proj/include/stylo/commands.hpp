#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stylo/energy.hpp"
#include "stylo/future_regressor.hpp"
#include "stylo/guided_decoder.hpp"
#include "stylo/mh_sampler.hpp"
#include "stylo/ngram_lm.hpp"

namespace stylo {

// One flat key=value schema shared by the config file and the CLI flags;
// flags override file entries by calling set() after the file is parsed.
struct AppConfig {
  // Paths.
  std::string corpus;   // training / evaluation corpus (JSONL)
  std::string model;    // model bundle file
  std::string sample;   // style-sample corpus for generate/interpolate
  std::string content;  // transfer inputs
  std::string style;    // transfer style targets
  std::string out_dir = "out";

  // Corpus handling.
  int truncate_tokens = 0;  // 0 = keep full documents

  // Base language model.
  int order = 3;
  double discount = 0.75;
  int min_count = 2;
  int beam_width = 64;
  int max_infill_len = 4;
  double length_ratio = 0.5;
  double infill_temperature = 1.0;

  // Future regressor.
  int hidden_dim = 128;
  int train_steps = 20000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double clip_norm = 5.0;
  double sigma0 = 0.1;
  double init_noise = 0.01;

  // Guided decoding.
  int top_k = 50;
  double lambda = 1.0;
  double temperature = 1.0;
  int max_len = 32;

  // Energy weights; unset entries fall back to the command's preset.
  std::optional<double> alpha_fluency, alpha_style, alpha_semantic,
      alpha_hamming;

  // Sampler.
  int mask_width = 2;
  int steps_multiplier = 80;
  int epochs = 5;
  double width_ratio = 0.5;
  bool noun_constraint = true;
  int max_doc_len = 64;
  std::string preset;  // "", "revise", or "transfer"; "" = command default

  // Command knobs.
  int n_gen = 16;
  bool revise = false;
  std::string transform = "nocaps";
  std::vector<double> sweep_weights = {0.0, 0.25, 0.5, 0.75, 1.0};
  int sweep_gens = 16;
  int detect_n = 200;
  int detect_steps = 500;
  double detect_lr = 0.5;

  std::uint64_t seed = 1;

  // Parses and assigns one key; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  // key = value lines, # comments, blank lines ignored.
  static AppConfig from_file(const std::string& path);

  NgramConfig ngram_config() const;
  GuidedConfig guided_config() const;
  TrainOptions train_options() const;
  EnergyWeights weights_or(EnergyWeights preset_default) const;
  SamplerConfig sampler_config(SamplerConfig::Preset command_default) const;
};

// Fixed-width decimal text for CSV cells; identical doubles give identical
// bytes, which is what makes re-runs byte-comparable.
std::string format_double(double v);

int cmd_train(const AppConfig& cfg);
int cmd_generate(const AppConfig& cfg);
int cmd_transfer(const AppConfig& cfg);
int cmd_anonymize(const AppConfig& cfg);
int cmd_interpolate(const AppConfig& cfg);
int cmd_eval_detect(const AppConfig& cfg);
int cmd_eval_eer(const AppConfig& cfg);

}  // namespace stylo
