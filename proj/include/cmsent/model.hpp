#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmsent/errors.hpp"
#include "cmsent/math.hpp"
#include "cmsent/rng.hpp"

namespace cmsent::model {

/// Probabilities below this floor are clamped inside the cross-entropy.
inline constexpr double kProbFloor = 1e-12;

enum Gate { kGateInput = 0, kGateForget = 1, kGateCell = 2, kGateOutput = 3 };
inline constexpr int kGateCount = 4;

struct ModelConfig {
  int input_dim = 0;    // feature dimension D
  int hidden = 64;      // recurrent units H per direction
  int classes = 5;      // output classes C
  bool bidirectional = true;

  int directions() const { return bidirectional ? 2 : 1; }
  int context_dim() const { return directions() * hidden; }

  void validate() const {
    if (input_dim <= 0) throw ConfigError("model input_dim must be positive");
    if (hidden <= 0) throw ConfigError("model hidden must be positive");
    if (classes <= 0) throw ConfigError("model classes must be positive");
  }
};

/// All trainable parameters in one flat double vector. Layout, in order:
/// for each direction (forward, then backward if bidirectional), for each
/// gate in {input, forget, cell, output}: W (H x D row-major), U (H x H
/// row-major), b (H); then dense W (C x context_dim row-major), dense b (C).
struct ClassifierParams {
  ModelConfig config;
  std::vector<double> flat;

  ClassifierParams() = default;
  explicit ClassifierParams(const ModelConfig& cfg) : config(cfg) {
    cfg.validate();
    flat.assign(param_count(cfg), 0.0);
  }

  static std::size_t param_count(const ModelConfig& cfg) {
    const std::size_t H = static_cast<std::size_t>(cfg.hidden);
    const std::size_t D = static_cast<std::size_t>(cfg.input_dim);
    const std::size_t C = static_cast<std::size_t>(cfg.classes);
    const std::size_t per_gate = H * D + H * H + H;
    return static_cast<std::size_t>(cfg.directions()) * kGateCount * per_gate +
           C * static_cast<std::size_t>(cfg.context_dim()) + C;
  }

  std::size_t gate_block() const {
    const std::size_t H = static_cast<std::size_t>(config.hidden);
    const std::size_t D = static_cast<std::size_t>(config.input_dim);
    return H * D + H * H + H;
  }
  std::size_t dir_block() const { return kGateCount * gate_block(); }

  std::size_t gate_W_offset(int dir, int gate) const {
    return static_cast<std::size_t>(dir) * dir_block() +
           static_cast<std::size_t>(gate) * gate_block();
  }
  std::size_t gate_U_offset(int dir, int gate) const {
    return gate_W_offset(dir, gate) +
           static_cast<std::size_t>(config.hidden) * static_cast<std::size_t>(config.input_dim);
  }
  std::size_t gate_b_offset(int dir, int gate) const {
    return gate_U_offset(dir, gate) +
           static_cast<std::size_t>(config.hidden) * static_cast<std::size_t>(config.hidden);
  }
  std::size_t dense_W_offset() const {
    return static_cast<std::size_t>(config.directions()) * dir_block();
  }
  std::size_t dense_b_offset() const {
    return dense_W_offset() +
           static_cast<std::size_t>(config.classes) * static_cast<std::size_t>(config.context_dim());
  }

  std::span<double> gate_W(int dir, int gate) {
    return {flat.data() + gate_W_offset(dir, gate),
            static_cast<std::size_t>(config.hidden) * static_cast<std::size_t>(config.input_dim)};
  }
  std::span<const double> gate_W(int dir, int gate) const {
    return {flat.data() + gate_W_offset(dir, gate),
            static_cast<std::size_t>(config.hidden) * static_cast<std::size_t>(config.input_dim)};
  }
  std::span<double> gate_U(int dir, int gate) {
    return {flat.data() + gate_U_offset(dir, gate),
            static_cast<std::size_t>(config.hidden) * static_cast<std::size_t>(config.hidden)};
  }
  std::span<const double> gate_U(int dir, int gate) const {
    return {flat.data() + gate_U_offset(dir, gate),
            static_cast<std::size_t>(config.hidden) * static_cast<std::size_t>(config.hidden)};
  }
  std::span<double> gate_b(int dir, int gate) {
    return {flat.data() + gate_b_offset(dir, gate), static_cast<std::size_t>(config.hidden)};
  }
  std::span<const double> gate_b(int dir, int gate) const {
    return {flat.data() + gate_b_offset(dir, gate), static_cast<std::size_t>(config.hidden)};
  }
  std::span<double> dense_W() {
    return {flat.data() + dense_W_offset(),
            static_cast<std::size_t>(config.classes) * static_cast<std::size_t>(config.context_dim())};
  }
  std::span<const double> dense_W() const {
    return {flat.data() + dense_W_offset(),
            static_cast<std::size_t>(config.classes) * static_cast<std::size_t>(config.context_dim())};
  }
  std::span<double> dense_b() {
    return {flat.data() + dense_b_offset(), static_cast<std::size_t>(config.classes)};
  }
  std::span<const double> dense_b() const {
    return {flat.data() + dense_b_offset(), static_cast<std::size_t>(config.classes)};
  }
};

/// Glorot-uniform weights drawn sequentially in flat-layout order; forget
/// gate biases start at 1.0, every other bias at 0.
inline ClassifierParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ClassifierParams params(cfg);
  SplitMix64 rng(seed);
  auto fill_uniform = [&](std::span<double> w, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w) v = rng.uniform(-bound, bound);
  };
  const double D = static_cast<double>(cfg.input_dim);
  const double H = static_cast<double>(cfg.hidden);
  for (int dir = 0; dir < cfg.directions(); ++dir) {
    for (int gate = 0; gate < kGateCount; ++gate) {
      fill_uniform(params.gate_W(dir, gate), D, H);
      fill_uniform(params.gate_U(dir, gate), H, H);
      if (gate == kGateForget) {
        for (double& v : params.gate_b(dir, gate)) v = 1.0;
      }
    }
  }
  fill_uniform(params.dense_W(), static_cast<double>(cfg.context_dim()),
               static_cast<double>(cfg.classes));
  return params;
}

/// A right-padded batch of feature sequences. `x[(b * steps + t) * dim + d]`
/// holds the features; time steps at or beyond `mask_len[b]` are padding and
/// never influence the forward result. `labels` may be empty for inference.
struct SequenceBatch {
  int batch = 0;
  int steps = 0;
  int dim = 0;
  std::vector<double> x;
  std::vector<int> mask_len;
  std::vector<int> labels;

  void validate(const ModelConfig& cfg) const {
    if (batch <= 0) throw std::invalid_argument("SequenceBatch: batch must be positive");
    if (steps < 0 || dim <= 0) throw std::invalid_argument("SequenceBatch: bad shape");
    if (dim != cfg.input_dim) {
      throw DimensionError("batch feature dim " + std::to_string(dim) +
                           " does not match model input_dim " + std::to_string(cfg.input_dim));
    }
    if (x.size() != static_cast<std::size_t>(batch) * static_cast<std::size_t>(steps) *
                        static_cast<std::size_t>(dim)) {
      throw std::invalid_argument("SequenceBatch: x size mismatch");
    }
    if (mask_len.size() != static_cast<std::size_t>(batch)) {
      throw std::invalid_argument("SequenceBatch: mask_len size mismatch");
    }
    for (int len : mask_len) {
      if (len < 0 || len > steps) throw std::invalid_argument("SequenceBatch: bad mask_len");
    }
    if (!labels.empty()) {
      if (labels.size() != static_cast<std::size_t>(batch)) {
        throw std::invalid_argument("SequenceBatch: labels size mismatch");
      }
      for (int label : labels) {
        if (label < 0 || label >= cfg.classes) {
          throw std::invalid_argument("SequenceBatch: label out of range");
        }
      }
    }
  }
};

/// In-place softmax with max subtraction.
inline void softmax_inplace(std::span<double> v) {
  if (v.empty()) throw std::invalid_argument("softmax_inplace: empty input");
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

/// Sparse categorical cross-entropy for one example.
inline double sparse_cce(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw std::invalid_argument("sparse_cce: label out of range");
  }
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], kProbFloor));
}

/// One LSTM cell step for a single sequence element:
///   i/f/o = sigmoid(W x + U h_prev + b), g = tanh(W x + U h_prev + b),
///   c = f * c_prev + i * g, h = o * tanh(c).
/// Output spans must each have length H.
inline void lstm_cell_forward(const ClassifierParams& params, int dir, std::span<const double> x_t,
                              std::span<const double> h_prev, std::span<const double> c_prev,
                              std::span<double> i_out, std::span<double> f_out,
                              std::span<double> g_out, std::span<double> o_out,
                              std::span<double> c_out, std::span<double> h_out) {
  const int H = params.config.hidden;
  const int D = params.config.input_dim;
  auto Wi = params.gate_W(dir, kGateInput), Wf = params.gate_W(dir, kGateForget),
       Wc = params.gate_W(dir, kGateCell), Wo = params.gate_W(dir, kGateOutput);
  auto Ui = params.gate_U(dir, kGateInput), Uf = params.gate_U(dir, kGateForget),
       Uc = params.gate_U(dir, kGateCell), Uo = params.gate_U(dir, kGateOutput);
  auto bi = params.gate_b(dir, kGateInput), bf = params.gate_b(dir, kGateForget),
       bc = params.gate_b(dir, kGateCell), bo = params.gate_b(dir, kGateOutput);
  for (int u = 0; u < H; ++u) {
    double ai = bi[static_cast<std::size_t>(u)];
    double af = bf[static_cast<std::size_t>(u)];
    double ag = bc[static_cast<std::size_t>(u)];
    double ao = bo[static_cast<std::size_t>(u)];
    const std::size_t wrow = static_cast<std::size_t>(u) * static_cast<std::size_t>(D);
    for (int d = 0; d < D; ++d) {
      const double xv = x_t[static_cast<std::size_t>(d)];
      ai += Wi[wrow + static_cast<std::size_t>(d)] * xv;
      af += Wf[wrow + static_cast<std::size_t>(d)] * xv;
      ag += Wc[wrow + static_cast<std::size_t>(d)] * xv;
      ao += Wo[wrow + static_cast<std::size_t>(d)] * xv;
    }
    const std::size_t urow = static_cast<std::size_t>(u) * static_cast<std::size_t>(H);
    for (int v = 0; v < H; ++v) {
      const double hv = h_prev[static_cast<std::size_t>(v)];
      ai += Ui[urow + static_cast<std::size_t>(v)] * hv;
      af += Uf[urow + static_cast<std::size_t>(v)] * hv;
      ag += Uc[urow + static_cast<std::size_t>(v)] * hv;
      ao += Uo[urow + static_cast<std::size_t>(v)] * hv;
    }
    const double iv = nn::sigmoid(ai);
    const double fv = nn::sigmoid(af);
    const double gv = std::tanh(ag);
    const double ov = nn::sigmoid(ao);
    const double cv = fv * c_prev[static_cast<std::size_t>(u)] + iv * gv;
    i_out[static_cast<std::size_t>(u)] = iv;
    f_out[static_cast<std::size_t>(u)] = fv;
    g_out[static_cast<std::size_t>(u)] = gv;
    o_out[static_cast<std::size_t>(u)] = ov;
    c_out[static_cast<std::size_t>(u)] = cv;
    h_out[static_cast<std::size_t>(u)] = ov * std::tanh(cv);
  }
}

namespace detail {

/// Per-direction activations, each indexed [(t * batch + b) * hidden + u].
/// Masked steps carry the previous state through unchanged, so the entry at
/// the direction's last processed step is always the state after the final
/// valid token.
struct DirCache {
  std::vector<double> i, f, g, o, c, h;
};

inline int step_at(int dir, int s, int steps) { return dir == 0 ? s : steps - 1 - s; }

inline void forward_direction(const ClassifierParams& params, const SequenceBatch& batch, int dir,
                              DirCache& cache) {
  const int B = batch.batch, T = batch.steps, H = params.config.hidden;
  const std::size_t total = static_cast<std::size_t>(T) * static_cast<std::size_t>(B) *
                            static_cast<std::size_t>(H);
  cache.i.assign(total, 0.0);
  cache.f.assign(total, 0.0);
  cache.g.assign(total, 0.0);
  cache.o.assign(total, 0.0);
  cache.c.assign(total, 0.0);
  cache.h.assign(total, 0.0);
  const std::vector<double> zeros(static_cast<std::size_t>(H), 0.0);
  for (int s = 0; s < T; ++s) {
    const int t = step_at(dir, s, T);
    const int prev_t = s == 0 ? -1 : step_at(dir, s - 1, T);
    for (int b = 0; b < B; ++b) {
      const std::size_t idx =
          (static_cast<std::size_t>(t) * static_cast<std::size_t>(B) + static_cast<std::size_t>(b)) *
          static_cast<std::size_t>(H);
      const std::size_t pidx =
          prev_t < 0 ? 0
                     : (static_cast<std::size_t>(prev_t) * static_cast<std::size_t>(B) +
                        static_cast<std::size_t>(b)) *
                           static_cast<std::size_t>(H);
      const double* hp = prev_t < 0 ? zeros.data() : cache.h.data() + pidx;
      const double* cp = prev_t < 0 ? zeros.data() : cache.c.data() + pidx;
      const std::size_t hsz = static_cast<std::size_t>(H);
      if (t >= batch.mask_len[static_cast<std::size_t>(b)]) {
        std::copy(hp, hp + H, cache.h.data() + idx);
        std::copy(cp, cp + H, cache.c.data() + idx);
        continue;
      }
      const double* xt = batch.x.data() +
                         (static_cast<std::size_t>(b) * static_cast<std::size_t>(T) +
                          static_cast<std::size_t>(t)) *
                             static_cast<std::size_t>(batch.dim);
      lstm_cell_forward(params, dir, {xt, static_cast<std::size_t>(batch.dim)}, {hp, hsz},
                        {cp, hsz}, {cache.i.data() + idx, hsz}, {cache.f.data() + idx, hsz},
                        {cache.g.data() + idx, hsz}, {cache.o.data() + idx, hsz},
                        {cache.c.data() + idx, hsz}, {cache.h.data() + idx, hsz});
    }
  }
}

}  // namespace detail

struct BatchCache {
  SequenceBatch batch;
  std::vector<detail::DirCache> dirs;
  std::vector<double> context;  // batch x context_dim
  std::vector<double> probs;    // batch x classes
};

struct ForwardResult {
  double loss = 0.0;            // mean sparse CCE over the batch (0 without labels)
  std::vector<double> probs;    // batch x classes
  std::vector<double> context;  // batch x context_dim
};

/// Full forward pass: per-direction LSTM encoding with masking, final-state
/// concatenation, dense layer, softmax, and (with labels) mean cross-entropy.
inline ForwardResult forward_batch(const ClassifierParams& params, const SequenceBatch& batch,
                                   BatchCache* cache = nullptr) {
  batch.validate(params.config);
  const ModelConfig& cfg = params.config;
  const int B = batch.batch, T = batch.steps, H = cfg.hidden, C = cfg.classes;
  const int dirs = cfg.directions();
  const int ctx_dim = cfg.context_dim();

  std::vector<detail::DirCache> dir_caches(static_cast<std::size_t>(dirs));
  for (int dir = 0; dir < dirs; ++dir) {
    detail::forward_direction(params, batch, dir, dir_caches[static_cast<std::size_t>(dir)]);
  }

  // Context per sequence: the state after the last valid step of each
  // direction (forward ends at t = T-1, backward at t = 0).
  std::vector<double> context(static_cast<std::size_t>(B) * static_cast<std::size_t>(ctx_dim), 0.0);
  if (T > 0) {
    for (int dir = 0; dir < dirs; ++dir) {
      const int last_t = dir == 0 ? T - 1 : 0;
      const auto& h = dir_caches[static_cast<std::size_t>(dir)].h;
      for (int b = 0; b < B; ++b) {
        const double* src = h.data() + (static_cast<std::size_t>(last_t) * static_cast<std::size_t>(B) +
                                        static_cast<std::size_t>(b)) *
                                           static_cast<std::size_t>(H);
        double* dst = context.data() +
                      static_cast<std::size_t>(b) * static_cast<std::size_t>(ctx_dim) +
                      static_cast<std::size_t>(dir) * static_cast<std::size_t>(H);
        std::copy(src, src + H, dst);
      }
    }
  }

  auto dW = params.dense_W();
  auto db = params.dense_b();
  std::vector<double> probs(static_cast<std::size_t>(B) * static_cast<std::size_t>(C), 0.0);
  for (int b = 0; b < B; ++b) {
    double* row = probs.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(C);
    const double* ctx = context.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(ctx_dim);
    for (int k = 0; k < C; ++k) {
      double acc = db[static_cast<std::size_t>(k)];
      const std::size_t wrow = static_cast<std::size_t>(k) * static_cast<std::size_t>(ctx_dim);
      for (int j = 0; j < ctx_dim; ++j) acc += dW[wrow + static_cast<std::size_t>(j)] * ctx[j];
      row[k] = acc;
    }
    softmax_inplace({row, static_cast<std::size_t>(C)});
  }

  ForwardResult result;
  result.probs = probs;
  result.context = context;
  if (!batch.labels.empty()) {
    double loss = 0.0;
    for (int b = 0; b < B; ++b) {
      loss += sparse_cce({probs.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(C),
                          static_cast<std::size_t>(C)},
                         batch.labels[static_cast<std::size_t>(b)]);
    }
    result.loss = loss / static_cast<double>(B);
  }
  if (cache) {
    cache->batch = batch;
    cache->dirs = std::move(dir_caches);
    cache->context = std::move(context);
    cache->probs = std::move(probs);
  }
  return result;
}

/// Recurrent encoding only: the per-sequence context vectors (batch x
/// context_dim) formed from the final state of each direction.
inline std::vector<double> encode_sequence(const ClassifierParams& params,
                                           const SequenceBatch& batch) {
  return forward_batch(params, batch).context;
}

/// Backpropagation through time. Returns the gradient of the mean batch loss
/// with respect to every parameter, in flat layout order.
inline std::vector<double> backward_batch(const ClassifierParams& params, const BatchCache& cache) {
  const SequenceBatch& batch = cache.batch;
  if (batch.labels.empty()) {
    throw std::invalid_argument("backward_batch: batch has no labels");
  }
  const ModelConfig& cfg = params.config;
  const int B = batch.batch, T = batch.steps, H = cfg.hidden, C = cfg.classes, D = cfg.input_dim;
  const int dirs = cfg.directions();
  const int ctx_dim = cfg.context_dim();
  std::vector<double> grad(params.flat.size(), 0.0);
  ClassifierParams grad_view;  // span arithmetic over the gradient vector
  grad_view.config = cfg;
  grad_view.flat.swap(grad);

  const double inv_batch = 1.0 / static_cast<double>(B);
  std::vector<double> dlogits(static_cast<std::size_t>(B) * static_cast<std::size_t>(C), 0.0);
  for (int b = 0; b < B; ++b) {
    const double* p = cache.probs.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(C);
    double* dl = dlogits.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(C);
    for (int k = 0; k < C; ++k) dl[k] = p[k] * inv_batch;
    dl[batch.labels[static_cast<std::size_t>(b)]] -= inv_batch;
  }

  auto dW = grad_view.dense_W();
  auto db = grad_view.dense_b();
  auto denseW = params.dense_W();
  std::vector<double> dcontext(static_cast<std::size_t>(B) * static_cast<std::size_t>(ctx_dim), 0.0);
  for (int b = 0; b < B; ++b) {
    const double* ctx = cache.context.data() +
                        static_cast<std::size_t>(b) * static_cast<std::size_t>(ctx_dim);
    const double* dl = dlogits.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(C);
    double* dctx = dcontext.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(ctx_dim);
    for (int k = 0; k < C; ++k) {
      const std::size_t wrow = static_cast<std::size_t>(k) * static_cast<std::size_t>(ctx_dim);
      db[static_cast<std::size_t>(k)] += dl[k];
      for (int j = 0; j < ctx_dim; ++j) {
        dW[wrow + static_cast<std::size_t>(j)] += dl[k] * ctx[j];
        dctx[j] += dl[k] * denseW[wrow + static_cast<std::size_t>(j)];
      }
    }
  }

  const std::vector<double> zeros(static_cast<std::size_t>(H), 0.0);
  for (int dir = 0; dir < dirs; ++dir) {
    const auto& dc_fwd = cache.dirs[static_cast<std::size_t>(dir)];
    auto gWi = grad_view.gate_W(dir, kGateInput), gWf = grad_view.gate_W(dir, kGateForget),
         gWc = grad_view.gate_W(dir, kGateCell), gWo = grad_view.gate_W(dir, kGateOutput);
    auto gUi = grad_view.gate_U(dir, kGateInput), gUf = grad_view.gate_U(dir, kGateForget),
         gUc = grad_view.gate_U(dir, kGateCell), gUo = grad_view.gate_U(dir, kGateOutput);
    auto gbi = grad_view.gate_b(dir, kGateInput), gbf = grad_view.gate_b(dir, kGateForget),
         gbc = grad_view.gate_b(dir, kGateCell), gbo = grad_view.gate_b(dir, kGateOutput);
    auto Ui = params.gate_U(dir, kGateInput), Uf = params.gate_U(dir, kGateForget),
         Uc = params.gate_U(dir, kGateCell), Uo = params.gate_U(dir, kGateOutput);

    std::vector<double> dh(static_cast<std::size_t>(B) * static_cast<std::size_t>(H), 0.0);
    std::vector<double> dc(static_cast<std::size_t>(B) * static_cast<std::size_t>(H), 0.0);
    // Inject the context gradient at the direction's last processed step.
    for (int b = 0; b < B; ++b) {
      const double* src = dcontext.data() +
                          static_cast<std::size_t>(b) * static_cast<std::size_t>(ctx_dim) +
                          static_cast<std::size_t>(dir) * static_cast<std::size_t>(H);
      std::copy(src, src + H, dh.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(H));
    }
    std::vector<double> da_i(static_cast<std::size_t>(H)), da_f(static_cast<std::size_t>(H)),
        da_g(static_cast<std::size_t>(H)), da_o(static_cast<std::size_t>(H));
    for (int s = T - 1; s >= 0; --s) {
      const int t = detail::step_at(dir, s, T);
      const int prev_t = s == 0 ? -1 : detail::step_at(dir, s - 1, T);
      for (int b = 0; b < B; ++b) {
        if (t >= batch.mask_len[static_cast<std::size_t>(b)]) continue;  // state passes through
        const std::size_t idx =
            (static_cast<std::size_t>(t) * static_cast<std::size_t>(B) +
             static_cast<std::size_t>(b)) *
            static_cast<std::size_t>(H);
        const double* hp =
            prev_t < 0 ? zeros.data()
                       : dc_fwd.h.data() + (static_cast<std::size_t>(prev_t) *
                                                static_cast<std::size_t>(B) +
                                            static_cast<std::size_t>(b)) *
                                               static_cast<std::size_t>(H);
        const double* cp =
            prev_t < 0 ? zeros.data()
                       : dc_fwd.c.data() + (static_cast<std::size_t>(prev_t) *
                                                static_cast<std::size_t>(B) +
                                            static_cast<std::size_t>(b)) *
                                               static_cast<std::size_t>(H);
        double* dhb = dh.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(H);
        double* dcb = dc.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(H);
        const double* xt = batch.x.data() +
                           (static_cast<std::size_t>(b) * static_cast<std::size_t>(T) +
                            static_cast<std::size_t>(t)) *
                               static_cast<std::size_t>(D);
        for (int u = 0; u < H; ++u) {
          const std::size_t k = idx + static_cast<std::size_t>(u);
          const double iv = dc_fwd.i[k], fv = dc_fwd.f[k], gv = dc_fwd.g[k], ov = dc_fwd.o[k];
          const double tc = std::tanh(dc_fwd.c[k]);
          const double dh_u = dhb[u];
          const double dc_u = dcb[u] + dh_u * ov * (1.0 - tc * tc);
          da_o[static_cast<std::size_t>(u)] = dh_u * tc * ov * (1.0 - ov);
          da_i[static_cast<std::size_t>(u)] = dc_u * gv * iv * (1.0 - iv);
          da_f[static_cast<std::size_t>(u)] =
              dc_u * cp[static_cast<std::size_t>(u)] * fv * (1.0 - fv);
          da_g[static_cast<std::size_t>(u)] = dc_u * iv * (1.0 - gv * gv);
          dcb[u] = dc_u * fv;  // gradient for c_prev
        }
        for (int u = 0; u < H; ++u) {
          const std::size_t su = static_cast<std::size_t>(u);
          const std::size_t wrow = su * static_cast<std::size_t>(D);
          for (int d = 0; d < D; ++d) {
            const double xv = xt[static_cast<std::size_t>(d)];
            gWi[wrow + static_cast<std::size_t>(d)] += da_i[su] * xv;
            gWf[wrow + static_cast<std::size_t>(d)] += da_f[su] * xv;
            gWc[wrow + static_cast<std::size_t>(d)] += da_g[su] * xv;
            gWo[wrow + static_cast<std::size_t>(d)] += da_o[su] * xv;
          }
          const std::size_t urow = su * static_cast<std::size_t>(H);
          for (int v = 0; v < H; ++v) {
            const double hv = hp[static_cast<std::size_t>(v)];
            gUi[urow + static_cast<std::size_t>(v)] += da_i[su] * hv;
            gUf[urow + static_cast<std::size_t>(v)] += da_f[su] * hv;
            gUc[urow + static_cast<std::size_t>(v)] += da_g[su] * hv;
            gUo[urow + static_cast<std::size_t>(v)] += da_o[su] * hv;
          }
          gbi[su] += da_i[su];
          gbf[su] += da_f[su];
          gbc[su] += da_g[su];
          gbo[su] += da_o[su];
        }
        // Recurrent gradient for h_prev overwrites dh (final state is the
        // only direct consumer of h).
        for (int v = 0; v < H; ++v) {
          double acc = 0.0;
          for (int u = 0; u < H; ++u) {
            const std::size_t urow = static_cast<std::size_t>(u) * static_cast<std::size_t>(H);
            const std::size_t sv = static_cast<std::size_t>(v);
            acc += da_i[static_cast<std::size_t>(u)] * Ui[urow + sv];
            acc += da_f[static_cast<std::size_t>(u)] * Uf[urow + sv];
            acc += da_g[static_cast<std::size_t>(u)] * Uc[urow + sv];
            acc += da_o[static_cast<std::size_t>(u)] * Uo[urow + sv];
          }
          dhb[static_cast<std::size_t>(v)] = acc;
        }
      }
    }
  }
  return grad_view.flat;
}

// ---------------------------------------------------------------------------
// Adam optimizer with bias correction.
// ---------------------------------------------------------------------------

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<double> m, v;

  explicit AdamState(std::size_t n, double learning_rate = 1e-3)
      : lr(learning_rate), m(n, 0.0), v(n, 0.0) {}
};

/// One Adam update in place. Throws NumericError naming the parameter index
/// when a gradient or updated parameter is non-finite.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grad,
                      AdamState& state) {
  if (params.size() != grad.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t idx = 0; idx < params.size(); ++idx) {
    const double g = grad[idx];
    if (!std::isfinite(g)) {
      throw NumericError("non-finite gradient at parameter index " + std::to_string(idx));
    }
    state.m[idx] = state.beta1 * state.m[idx] + (1.0 - state.beta1) * g;
    state.v[idx] = state.beta2 * state.v[idx] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[idx] / bc1;
    const double v_hat = state.v[idx] / bc2;
    params[idx] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    if (!std::isfinite(params[idx])) {
      throw NumericError("non-finite parameter at index " + std::to_string(idx));
    }
  }
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central-difference check of backward_batch against forward_batch. The
/// relative error denominator is max(|analytic|, |numeric|, 1e-3) so that
/// near-zero gradient pairs do not blow up the ratio.
inline GradCheckResult grad_check(ClassifierParams& params, const SequenceBatch& batch,
                                  double eps = 1e-4) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");
  if (batch.labels.empty()) throw std::invalid_argument("grad_check: batch needs labels");
  BatchCache cache;
  forward_batch(params, batch, &cache);
  const std::vector<double> analytic = backward_batch(params, cache);
  GradCheckResult result;
  for (std::size_t idx = 0; idx < params.flat.size(); ++idx) {
    const double orig = params.flat[idx];
    params.flat[idx] = orig + eps;
    const double fp = forward_batch(params, batch).loss;
    params.flat[idx] = orig - eps;
    const double fm = forward_batch(params, batch).loss;
    params.flat[idx] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = analytic[idx];
    const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-3});
    const double rel = std::fabs(a - numeric) / denom;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = idx;
      result.analytic = a;
      result.numeric = numeric;
    }
  }
  return result;
}

}  // namespace cmsent::model
