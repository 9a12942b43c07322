#include <functional>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "stylo/commands.hpp"

namespace {

using stylo::AppConfig;

struct Cli {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  void add_key(CLI::App* cmd, const std::string& flag, const std::string& key,
               const std::string& desc) {
    cmd->add_option_function<std::string>(
        flag,
        [this, key](const std::string& v) { overrides.emplace_back(key, v); },
        desc);
  }

  void add_bool_flag(CLI::App* cmd, const std::string& flag,
                     const std::string& key, const std::string& desc) {
    cmd->add_flag_callback(
        flag, [this, key]() { overrides.emplace_back(key, "1"); }, desc);
  }

  void add_common(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value config file");
    add_key(cmd, "--seed", "seed", "random seed");
    add_key(cmd, "--out-dir", "out_dir", "output directory");
    cmd->add_option_function<std::vector<std::string>>(
        "--set",
        [this](const std::vector<std::string>& pairs) {
          for (const auto& p : pairs) {
            const std::size_t eq = p.find('=');
            if (eq == std::string::npos) {
              throw CLI::ValidationError("--set expects key=value: " + p);
            }
            overrides.emplace_back(p.substr(0, eq), p.substr(eq + 1));
          }
        },
        "override any config key (key=value, repeatable)");
    add_key(cmd, "--truncate-tokens", "truncate_tokens",
            "cap loaded documents to this many tokens (0 = off)");
  }

  void add_decoder_flags(CLI::App* cmd) {
    add_key(cmd, "--top-k", "top_k", "base-model candidates rescored");
    add_key(cmd, "--lambda", "lambda", "style-regressor weight");
    add_key(cmd, "--temperature", "temperature", "sampling temperature");
    add_key(cmd, "--max-len", "max_len", "generation length cap");
  }

  void add_sampler_flags(CLI::App* cmd) {
    add_key(cmd, "--mask-width", "mask_width", "span mask width peak");
    add_key(cmd, "--steps-multiplier", "steps_multiplier",
            "transfer steps per initial token");
    add_key(cmd, "--epochs", "epochs", "revise passes per initial token");
    add_key(cmd, "--width-ratio", "width_ratio", "mask width decay ratio");
    add_key(cmd, "--noun-constraint", "noun_constraint",
            "protect noun tokens (0/1)");
    add_key(cmd, "--max-doc-len", "max_doc_len",
            "document growth cap (0 = unbounded)");
    add_key(cmd, "--preset", "preset", "step budget preset: revise|transfer");
    add_key(cmd, "--alpha-fluency", "alpha_fluency", "fluency expert weight");
    add_key(cmd, "--alpha-style", "alpha_style", "style expert weight");
    add_key(cmd, "--alpha-semantic", "alpha_semantic",
            "semantic expert weight");
    add_key(cmd, "--alpha-hamming", "alpha_hamming",
            "edit-distance expert weight");
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"style-controlled text generation and transfer"};
  app.require_subcommand(1);
  Cli cli;

  CLI::App* train = app.add_subcommand("train", "fit the model bundle");
  cli.add_common(train);
  cli.add_key(train, "--corpus", "corpus", "training corpus (JSONL)");
  cli.add_key(train, "--model", "model", "model bundle output path");
  cli.add_key(train, "--order", "order", "n-gram order");
  cli.add_key(train, "--discount", "discount", "absolute discount");
  cli.add_key(train, "--min-count", "min_count", "vocabulary count floor");
  cli.add_key(train, "--beam-width", "beam_width", "infill beam width");
  cli.add_key(train, "--max-infill-len", "max_infill_len",
              "longest infill replacement");
  cli.add_key(train, "--length-ratio", "length_ratio",
              "infill length prior decay");
  cli.add_key(train, "--infill-temp", "infill_temperature",
              "infill proposal flattening (>1 widens edit support)");
  cli.add_key(train, "--hidden-dim", "hidden_dim", "regressor hidden width");
  cli.add_key(train, "--train-steps", "train_steps", "regressor steps");
  cli.add_key(train, "--batch-size", "batch_size", "regressor batch size");
  cli.add_key(train, "--learning-rate", "learning_rate",
              "regressor learning rate");
  cli.add_key(train, "--momentum", "momentum", "regressor momentum");
  cli.add_key(train, "--clip-norm", "clip_norm",
              "gradient norm clip (0 = off)");
  cli.add_key(train, "--sigma0", "sigma0", "initial predicted deviation");
  cli.add_key(train, "--init-noise", "init_noise",
              "initialization weight noise");

  CLI::App* generate =
      app.add_subcommand("generate", "guided generation toward a style");
  cli.add_common(generate);
  cli.add_key(generate, "--model", "model", "model bundle path");
  cli.add_key(generate, "--sample", "sample", "style sample corpus (JSONL)");
  cli.add_key(generate, "--n", "n_gen", "number of generations");
  cli.add_bool_flag(generate, "--revise", "revise",
                    "refine each output with the sampler");
  cli.add_decoder_flags(generate);
  cli.add_sampler_flags(generate);

  CLI::App* transfer =
      app.add_subcommand("transfer", "rewrite content toward a style");
  cli.add_common(transfer);
  cli.add_key(transfer, "--model", "model", "model bundle path");
  cli.add_key(transfer, "--content", "content", "documents to rewrite (JSONL)");
  cli.add_key(transfer, "--style", "style", "style sample corpus (JSONL)");
  cli.add_decoder_flags(transfer);
  cli.add_sampler_flags(transfer);

  CLI::App* anonymize =
      app.add_subcommand("anonymize", "rewrite each author toward a decoy");
  cli.add_common(anonymize);
  cli.add_key(anonymize, "--model", "model", "model bundle path");
  cli.add_key(anonymize, "--corpus", "corpus", "multi-author corpus (JSONL)");
  cli.add_decoder_flags(anonymize);
  cli.add_sampler_flags(anonymize);

  CLI::App* interpolate =
      app.add_subcommand("interpolate", "sweep between style vectors");
  cli.add_common(interpolate);
  cli.add_key(interpolate, "--model", "model", "model bundle path");
  cli.add_key(interpolate, "--sample", "sample", "style sample corpus (JSONL)");
  cli.add_key(interpolate, "--transform", "transform",
              "ablation transform: identity|nocaps|nopunct");
  cli.add_key(interpolate, "--weights", "sweep_weights",
              "comma-separated interpolation weights");
  cli.add_key(interpolate, "--gens", "sweep_gens", "generations per weight");
  cli.add_decoder_flags(interpolate);

  CLI::App* eval_detect =
      app.add_subcommand("eval-detect", "machine-text detector comparison");
  cli.add_common(eval_detect);
  cli.add_key(eval_detect, "--model", "model", "model bundle path");
  cli.add_key(eval_detect, "--corpus", "corpus", "human corpus (JSONL)");
  cli.add_key(eval_detect, "--n", "detect_n", "fake samples per generator");
  cli.add_key(eval_detect, "--detect-steps", "detect_steps",
              "detector training steps");
  cli.add_key(eval_detect, "--detect-lr", "detect_lr",
              "detector learning rate");
  cli.add_decoder_flags(eval_detect);

  CLI::App* eval_eer =
      app.add_subcommand("eval-eer", "attribution equal error rate");
  cli.add_common(eval_eer);
  cli.add_key(eval_eer, "--model", "model", "model bundle path");
  cli.add_key(eval_eer, "--corpus", "corpus", "multi-author corpus (JSONL)");

  CLI11_PARSE(app, argc, argv);

  try {
    AppConfig cfg = cli.config_path.empty()
                        ? AppConfig{}
                        : AppConfig::from_file(cli.config_path);
    for (const auto& [key, value] : cli.overrides) cfg.set(key, value);

    if (app.got_subcommand(train)) return stylo::cmd_train(cfg);
    if (app.got_subcommand(generate)) return stylo::cmd_generate(cfg);
    if (app.got_subcommand(transfer)) return stylo::cmd_transfer(cfg);
    if (app.got_subcommand(anonymize)) return stylo::cmd_anonymize(cfg);
    if (app.got_subcommand(interpolate)) return stylo::cmd_interpolate(cfg);
    if (app.got_subcommand(eval_detect)) return stylo::cmd_eval_detect(cfg);
    if (app.got_subcommand(eval_eer)) return stylo::cmd_eval_eer(cfg);
    std::cerr << "error: no command selected\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
