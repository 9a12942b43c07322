#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "stylo/corpus.hpp"
#include "stylo/rng.hpp"
#include "stylo/style_encoder.hpp"

namespace stylo {

inline constexpr double kVarianceFloor = 1e-6;

struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;
  Mat() = default;
  Mat(int r, int c)
      : rows(r), cols(c),
        a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}
  double& at(int r, int c) {
    return a[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + c];
  }
  double at(int r, int c) const {
    return a[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + c];
  }
};

// Diagonal-Gaussian regressor from prefix style features to the complete
// text's style vector: two tanh layers, linear mean head, softplus variance
// head with a floor. All tensors double precision; gradients are analytic.
struct RegressorParams {
  int input_dim = 0, hidden_dim = 0, output_dim = 0;
  Mat w1;                   // hidden x input
  std::vector<double> b1;   // hidden
  Mat w2;                   // output x hidden
  std::vector<double> b2;   // output
  Mat w_mu;                 // output x output
  std::vector<double> b_mu;
  Mat w_sigma;              // output x output
  std::vector<double> b_sigma;

  static RegressorParams zeros(int input_dim, int hidden_dim, int output_dim);

  // Stacked-identity first layer, averaging second layer, identity mean
  // head, variance head biased to softplus^-1(sigma0); plus Gaussian noise
  // on the weights. With zero noise and small inputs the mean head
  // reproduces the input up to tanh curvature.
  static RegressorParams near_identity(int dim, int hidden_dim, double sigma0,
                                       double noise, Rng& rng);

  // Flat parameter views in a fixed order; params and grads share layout.
  std::vector<std::span<double>> flat();
  std::vector<std::span<const double>> flat() const;

  void save(std::ostream& out) const;
  static RegressorParams load(std::istream& in);
};

struct GaussianPrediction {
  std::vector<double> mean;
  std::vector<double> variance;  // floor already applied
};

GaussianPrediction predict(const RegressorParams& p,
                           std::span<const double> input);

// Reusable forward-pass buffers for hot loops (candidate rescoring).
struct RegressorScratch {
  std::vector<double> x, h1, z, mu, eta, var;
};

// Forward pass plus NLL of target, no allocation beyond the scratch.
double prediction_nll(const RegressorParams& p, std::span<const double> input,
                      std::span<const double> target,
                      RegressorScratch& scratch);

double gaussian_nll(const GaussianPrediction& pred,
                    std::span<const double> target);

struct PrefixExample {
  std::vector<double> input;   // unit-norm scaled features of the prefix
  std::vector<double> target;  // unit-norm scaled features of the whole text
};

// Every non-empty prefix of every document, all sharing the document's
// full-text style vector as target.
std::vector<PrefixExample> build_prefix_dataset(const Corpus& corpus,
                                                const StyleEncoder& encoder);

// Mean NLL over the selected examples plus its gradient (same layout as
// RegressorParams::flat). Throws on an empty selection.
double batch_nll_grad(const RegressorParams& p,
                      const std::vector<PrefixExample>& data,
                      std::span<const std::size_t> indices,
                      RegressorParams& grad_out);

struct TrainOptions {
  int steps = 20000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double clip_norm = 5.0;  // global gradient-norm clip; <= 0 disables
  std::uint64_t seed = 1;
};

struct TrainResult {
  RegressorParams params;
  std::vector<double> nll_trace;  // one mean-batch NLL per step
};

TrainResult train_regressor(const std::vector<PrefixExample>& data,
                            RegressorParams init, const TrainOptions& opts);

}  // namespace stylo
