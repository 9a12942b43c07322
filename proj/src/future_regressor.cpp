#include "stylo/future_regressor.hpp"

#include <cmath>
#include <stdexcept>

#include "stylo/binio.hpp"
#include "stylo/mathutil.hpp"

namespace stylo {

namespace {

void matvec(const Mat& m, std::span<const double> x, std::span<double> out) {
  for (int r = 0; r < m.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < m.cols; ++c) s += m.at(r, c) * x[c];
    out[r] = s;
  }
}

void matvec_t(const Mat& m, std::span<const double> y, std::span<double> out) {
  for (int c = 0; c < m.cols; ++c) out[c] = 0.0;
  for (int r = 0; r < m.rows; ++r) {
    const double yr = y[r];
    for (int c = 0; c < m.cols; ++c) out[c] += m.at(r, c) * yr;
  }
}

void outer_acc(Mat& m, std::span<const double> y, std::span<const double> x) {
  for (int r = 0; r < m.rows; ++r) {
    const double yr = y[r];
    for (int c = 0; c < m.cols; ++c) m.at(r, c) += yr * x[c];
  }
}

using Activations = RegressorScratch;

void forward(const RegressorParams& p, std::span<const double> input,
             Activations& act) {
  const int h = p.hidden_dim, d = p.output_dim;
  act.x.assign(input.begin(), input.end());
  act.h1.resize(h);
  act.z.resize(d);
  act.mu.resize(d);
  act.eta.resize(d);
  act.var.resize(d);
  matvec(p.w1, act.x, act.h1);
  for (int i = 0; i < h; ++i) act.h1[i] = std::tanh(act.h1[i] + p.b1[i]);
  matvec(p.w2, act.h1, act.z);
  for (int i = 0; i < d; ++i) act.z[i] = std::tanh(act.z[i] + p.b2[i]);
  matvec(p.w_mu, act.z, act.mu);
  for (int i = 0; i < d; ++i) act.mu[i] += p.b_mu[i];
  matvec(p.w_sigma, act.z, act.eta);
  for (int i = 0; i < d; ++i) {
    act.eta[i] += p.b_sigma[i];
    act.var[i] = softplus(act.eta[i]) + kVarianceFloor;
  }
}

}  // namespace

RegressorParams RegressorParams::zeros(int input_dim, int hidden_dim,
                                       int output_dim) {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("regressor: dimensions must be positive");
  }
  RegressorParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.output_dim = output_dim;
  p.w1 = Mat(hidden_dim, input_dim);
  p.b1.assign(hidden_dim, 0.0);
  p.w2 = Mat(output_dim, hidden_dim);
  p.b2.assign(output_dim, 0.0);
  p.w_mu = Mat(output_dim, output_dim);
  p.b_mu.assign(output_dim, 0.0);
  p.w_sigma = Mat(output_dim, output_dim);
  p.b_sigma.assign(output_dim, 0.0);
  return p;
}

RegressorParams RegressorParams::near_identity(int dim, int hidden_dim,
                                               double sigma0, double noise,
                                               Rng& rng) {
  if (hidden_dim < dim) {
    throw std::invalid_argument("near_identity: hidden_dim must be >= dim");
  }
  if (sigma0 <= 0.0) {
    throw std::invalid_argument("near_identity: sigma0 must be > 0");
  }
  RegressorParams p = zeros(dim, hidden_dim, dim);
  for (int r = 0; r < hidden_dim; ++r) p.w1.at(r, r % dim) = 1.0;
  const int stacks = hidden_dim / dim;
  for (int d = 0; d < dim; ++d) {
    for (int s = 0; s < stacks; ++s) {
      p.w2.at(d, d + s * dim) = 1.0 / stacks;
    }
  }
  for (int d = 0; d < dim; ++d) p.w_mu.at(d, d) = 1.0;
  const double eta0 = softplus_inv(sigma0);
  for (int d = 0; d < dim; ++d) p.b_sigma[d] = eta0;
  if (noise > 0.0) {
    for (Mat* m : {&p.w1, &p.w2, &p.w_mu, &p.w_sigma}) {
      for (double& x : m->a) x += noise * rng.gaussian();
    }
  }
  return p;
}

std::vector<std::span<double>> RegressorParams::flat() {
  return {std::span<double>(w1.a),      std::span<double>(b1),
          std::span<double>(w2.a),      std::span<double>(b2),
          std::span<double>(w_mu.a),    std::span<double>(b_mu),
          std::span<double>(w_sigma.a), std::span<double>(b_sigma)};
}

std::vector<std::span<const double>> RegressorParams::flat() const {
  return {std::span<const double>(w1.a),      std::span<const double>(b1),
          std::span<const double>(w2.a),      std::span<const double>(b2),
          std::span<const double>(w_mu.a),    std::span<const double>(b_mu),
          std::span<const double>(w_sigma.a), std::span<const double>(b_sigma)};
}

GaussianPrediction predict(const RegressorParams& p,
                           std::span<const double> input) {
  if (static_cast<int>(input.size()) != p.input_dim) {
    throw std::invalid_argument("predict: input dimension mismatch");
  }
  Activations act;
  forward(p, input, act);
  return GaussianPrediction{std::move(act.mu), std::move(act.var)};
}

double gaussian_nll(const GaussianPrediction& pred,
                    std::span<const double> target) {
  if (pred.mean.size() != target.size() ||
      pred.variance.size() != target.size()) {
    throw std::invalid_argument("gaussian_nll: dimension mismatch");
  }
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  double nll = 0.0;
  for (std::size_t d = 0; d < target.size(); ++d) {
    const double v = pred.variance[d];
    const double r = target[d] - pred.mean[d];
    nll += 0.5 * (kLog2Pi + std::log(v) + r * r / v);
  }
  return nll;
}

double prediction_nll(const RegressorParams& p, std::span<const double> input,
                      std::span<const double> target,
                      RegressorScratch& scratch) {
  forward(p, input, scratch);
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  double nll = 0.0;
  for (std::size_t d = 0; d < target.size(); ++d) {
    const double v = scratch.var[d];
    const double r = target[d] - scratch.mu[d];
    nll += 0.5 * (kLog2Pi + std::log(v) + r * r / v);
  }
  return nll;
}

std::vector<PrefixExample> build_prefix_dataset(const Corpus& corpus,
                                                const StyleEncoder& encoder) {
  std::vector<PrefixExample> out;
  for (const auto& a : corpus.authors) {
    for (const auto& doc : a.documents) {
      if (doc.tokens.empty()) continue;
      const StyleVector target = encoder.encode({&doc, 1});
      PrefixFeaturizer pf;
      for (const auto& tok : doc.tokens) {
        pf.push(tok);
        const StyleVector in = encoder.encode_counts(pf.counts());
        PrefixExample ex;
        ex.input.assign(in.v.begin(), in.v.end());
        ex.target.assign(target.v.begin(), target.v.end());
        out.push_back(std::move(ex));
      }
    }
  }
  return out;
}

double batch_nll_grad(const RegressorParams& p,
                      const std::vector<PrefixExample>& data,
                      std::span<const std::size_t> indices,
                      RegressorParams& grad_out) {
  if (indices.empty()) {
    throw std::invalid_argument("batch_nll_grad: empty batch");
  }
  grad_out = RegressorParams::zeros(p.input_dim, p.hidden_dim, p.output_dim);
  const int h = p.hidden_dim, d = p.output_dim;
  Activations act;
  std::vector<double> dmu(d), deta(d), dz(d), dh2(d), da1(h), dh1(h);
  double total = 0.0;
  for (std::size_t idx : indices) {
    const PrefixExample& ex = data.at(idx);
    forward(p, ex.input, act);
    double nll = 0.0;
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    for (int i = 0; i < d; ++i) {
      const double v = act.var[i];
      const double r = ex.target[i] - act.mu[i];
      nll += 0.5 * (kLog2Pi + std::log(v) + r * r / v);
      dmu[i] = (act.mu[i] - ex.target[i]) / v;
      const double dv = 0.5 * (1.0 / v - r * r / (v * v));
      deta[i] = dv * sigmoid(act.eta[i]);
    }
    total += nll;
    matvec_t(p.w_mu, dmu, dz);
    {
      std::vector<double> tmp(d);
      matvec_t(p.w_sigma, deta, tmp);
      for (int i = 0; i < d; ++i) dz[i] += tmp[i];
    }
    for (int i = 0; i < d; ++i) dh2[i] = dz[i] * (1.0 - act.z[i] * act.z[i]);
    outer_acc(grad_out.w_mu, dmu, act.z);
    outer_acc(grad_out.w_sigma, deta, act.z);
    for (int i = 0; i < d; ++i) {
      grad_out.b_mu[i] += dmu[i];
      grad_out.b_sigma[i] += deta[i];
    }
    matvec_t(p.w2, dh2, da1);
    outer_acc(grad_out.w2, dh2, act.h1);
    for (int i = 0; i < d; ++i) grad_out.b2[i] += dh2[i];
    for (int i = 0; i < h; ++i) dh1[i] = da1[i] * (1.0 - act.h1[i] * act.h1[i]);
    outer_acc(grad_out.w1, dh1, act.x);
    for (int i = 0; i < h; ++i) grad_out.b1[i] += dh1[i];
  }
  const double scale = 1.0 / static_cast<double>(indices.size());
  for (auto span : grad_out.flat()) {
    for (double& g : span) g *= scale;
  }
  return total * scale;
}

TrainResult train_regressor(const std::vector<PrefixExample>& data,
                            RegressorParams init, const TrainOptions& opts) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (opts.steps < 0 || opts.batch_size < 1 || opts.learning_rate < 0.0 ||
      opts.momentum < 0.0 || opts.momentum >= 1.0) {
    throw std::invalid_argument("train: bad options");
  }
  TrainResult result;
  result.params = std::move(init);
  RegressorParams vel = RegressorParams::zeros(
      result.params.input_dim, result.params.hidden_dim,
      result.params.output_dim);
  RegressorParams grad = vel;
  Rng rng(opts.seed);
  const std::size_t n = data.size();
  const std::size_t batch =
      std::min<std::size_t>(static_cast<std::size_t>(opts.batch_size), n);
  std::vector<std::size_t> perm = rng.permutation(n);
  std::size_t cursor = 0;
  std::vector<std::size_t> batch_idx(batch);
  for (int step = 0; step < opts.steps; ++step) {
    if (cursor + batch > n) {
      perm = rng.permutation(n);
      cursor = 0;
    }
    for (std::size_t i = 0; i < batch; ++i) batch_idx[i] = perm[cursor + i];
    cursor += batch;
    const double nll = batch_nll_grad(result.params, data, batch_idx, grad);
    if (!std::isfinite(nll)) {
      throw std::runtime_error("train: non-finite loss at step " +
                               std::to_string(step));
    }
    auto pspans = result.params.flat();
    auto vspans = vel.flat();
    auto gspans = grad.flat();
    // Tight initial variances make the loss stiff; clip by global norm so
    // early steps cannot blow past the curvature.
    double scale = 1.0;
    if (opts.clip_norm > 0.0) {
      double sq = 0.0;
      for (auto span : gspans) {
        for (double g : span) sq += g * g;
      }
      const double norm = std::sqrt(sq);
      if (norm > opts.clip_norm) scale = opts.clip_norm / norm;
    }
    for (std::size_t f = 0; f < pspans.size(); ++f) {
      for (std::size_t i = 0; i < pspans[f].size(); ++i) {
        vspans[f][i] = opts.momentum * vspans[f][i] -
                       opts.learning_rate * scale * gspans[f][i];
        pspans[f][i] += vspans[f][i];
      }
    }
    result.nll_trace.push_back(nll);
  }
  return result;
}

void RegressorParams::save(std::ostream& out) const {
  using namespace binio;
  write_u32(out, static_cast<std::uint32_t>(input_dim));
  write_u32(out, static_cast<std::uint32_t>(hidden_dim));
  write_u32(out, static_cast<std::uint32_t>(output_dim));
  for (auto span : flat()) {
    for (double x : span) write_f64(out, x);
  }
}

RegressorParams RegressorParams::load(std::istream& in) {
  using namespace binio;
  const int input = static_cast<int>(read_u32(in));
  const int hidden = static_cast<int>(read_u32(in));
  const int output = static_cast<int>(read_u32(in));
  RegressorParams p = zeros(input, hidden, output);
  for (auto span : p.flat()) {
    for (double& x : span) x = read_f64(in);
  }
  return p;
}

}  // namespace stylo
