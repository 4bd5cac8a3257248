#pragma once

// Single-layer LSTM regressor with a linear output head, exact BPTT
// gradients, Adam, seeded minibatch training and a finite-difference checker.

#include <adlstm/common.hpp>
#include <adlstm/data.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace adlstm {

enum class Gate : std::size_t { forget = 0, input = 1, candidate = 2, output = 3 };
inline constexpr std::size_t kNumGates = 4;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Flat parameter vector in checkpoint order:
///   W_f, W_i, W_C, W_o   (each hidden x (hidden + input), row-major, columns [h_prev | x])
///   b_f, b_i, b_C, b_o   (each hidden)
///   V (hidden), c (scalar)
/// Gradients use the same type and layout.
class LstmParams {
 public:
  LstmParams() = default;
  LstmParams(std::size_t hidden, std::size_t input)
      : hidden_(hidden), input_(input), values_(count(hidden, input), 0.0) {
    if (hidden == 0 || input == 0) throw Error(ErrorKind::shape, "hidden and input sizes must be >= 1");
  }

  static std::size_t count(std::size_t hidden, std::size_t input) {
    return kNumGates * hidden * (hidden + input) + kNumGates * hidden + hidden + 1;
  }

  /// Uniform in [-1/sqrt(H), 1/sqrt(H)] from a seeded generator.
  static LstmParams random(std::size_t hidden, std::size_t input, std::uint64_t seed) {
    LstmParams p(hidden, input);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : p.values_) v = dist(rng);
    return p;
  }

  std::size_t hidden() const noexcept { return hidden_; }
  std::size_t input() const noexcept { return input_; }
  std::size_t cols() const noexcept { return hidden_ + input_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::size_t weights_offset(Gate g) const noexcept {
    return static_cast<std::size_t>(g) * hidden_ * cols();
  }
  std::size_t bias_offset(Gate g) const noexcept {
    return kNumGates * hidden_ * cols() + static_cast<std::size_t>(g) * hidden_;
  }
  std::size_t head_offset() const noexcept { return kNumGates * hidden_ * cols() + kNumGates * hidden_; }
  std::size_t head_bias_offset() const noexcept { return head_offset() + hidden_; }

  std::span<double> weights(Gate g) noexcept { return {values_.data() + weights_offset(g), hidden_ * cols()}; }
  std::span<const double> weights(Gate g) const noexcept {
    return {values_.data() + weights_offset(g), hidden_ * cols()};
  }
  std::span<double> bias(Gate g) noexcept { return {values_.data() + bias_offset(g), hidden_}; }
  std::span<const double> bias(Gate g) const noexcept { return {values_.data() + bias_offset(g), hidden_}; }
  std::span<double> head() noexcept { return {values_.data() + head_offset(), hidden_}; }
  std::span<const double> head() const noexcept { return {values_.data() + head_offset(), hidden_}; }
  double& head_bias() noexcept { return values_.back(); }
  double head_bias() const noexcept { return values_.back(); }

  bool same_shape(const LstmParams& o) const noexcept { return hidden_ == o.hidden_ && input_ == o.input_; }
  bool operator==(const LstmParams&) const = default;

 private:
  std::size_t hidden_ = 0;
  std::size_t input_ = 0;
  std::vector<double> values_;
};

struct CellState {
  std::vector<double> c;  // cell state C_t
  std::vector<double> h;  // hidden output h_t

  static CellState zeros(std::size_t hidden) { return {std::vector<double>(hidden), std::vector<double>(hidden)}; }
};

/// Gate activations of one step, kept for backpropagation.
struct GateActivations {
  std::vector<double> forget, input, candidate, output;
};

struct StepResult {
  CellState state;
  GateActivations gates;
};

namespace detail {

/// One cell step on raw buffers of length H (x has length I).
inline void step_kernel(const LstmParams& p, const double* h_prev, const double* c_prev, const double* x,
                        double* f, double* i, double* g, double* o, double* c, double* tanh_c, double* h) {
  const std::size_t H = p.hidden();
  const std::size_t I = p.input();
  const std::size_t cols = p.cols();
  const double* vals = p.values().data();
  double* outs[kNumGates] = {f, i, g, o};
  for (std::size_t gate = 0; gate < kNumGates; ++gate) {
    const double* W = vals + gate * H * cols;
    const double* b = vals + kNumGates * H * cols + gate * H;
    for (std::size_t r = 0; r < H; ++r) {
      const double* row = W + r * cols;
      double z = b[r];
      for (std::size_t k = 0; k < H; ++k) z += row[k] * h_prev[k];
      for (std::size_t k = 0; k < I; ++k) z += row[H + k] * x[k];
      outs[gate][r] = gate == static_cast<std::size_t>(Gate::candidate) ? std::tanh(z) : sigmoid(z);
    }
  }
  for (std::size_t r = 0; r < H; ++r) {
    c[r] = f[r] * c_prev[r] + i[r] * g[r];
    tanh_c[r] = std::tanh(c[r]);
    h[r] = o[r] * tanh_c[r];
  }
}

/// Reusable buffers for unrolling one sample over T steps.
class Unroller {
 public:
  Unroller(std::size_t hidden, std::size_t input, std::size_t steps)
      : H_(hidden), I_(input), T_(steps), f_(T_ * H_), i_(T_ * H_), g_(T_ * H_), o_(T_ * H_),
        c_((T_ + 1) * H_), tanh_c_(T_ * H_), h_((T_ + 1) * H_), x_(T_ * I_), dh_(H_), dc_(H_),
        dz_(kNumGates * H_), dh_prev_(H_) {}

  double forward(const LstmParams& p, const SequenceSample& s) {
    check(p, s);
    std::fill(c_.begin(), c_.begin() + H_, 0.0);
    std::fill(h_.begin(), h_.begin() + H_, 0.0);
    for (std::size_t t = 0; t < T_; ++t) {
      std::copy(s.window[t].begin(), s.window[t].begin() + I_, x_.begin() + t * I_);
      step_kernel(p, &h_[t * H_], &c_[t * H_], &x_[t * I_], &f_[t * H_], &i_[t * H_], &g_[t * H_],
                  &o_[t * H_], &c_[(t + 1) * H_], &tanh_c_[t * H_], &h_[(t + 1) * H_]);
    }
    const auto V = p.head();
    double y = p.head_bias();
    for (std::size_t r = 0; r < H_; ++r) y += V[r] * h_[T_ * H_ + r];
    return y;
  }

  /// Adds d(loss)/d(params) into `grad` given d(loss)/d(yhat) for the last forward() call.
  void backward(const LstmParams& p, double dy, LstmParams& grad) {
    const std::size_t cols = p.cols();
    const double* vals = p.values().data();
    double* gv = grad.values().data();
    const auto V = p.head();
    double* gV = gv + p.head_offset();
    for (std::size_t r = 0; r < H_; ++r) {
      gV[r] += dy * h_[T_ * H_ + r];
      dh_[r] = dy * V[r];
      dc_[r] = 0.0;
    }
    gv[p.head_bias_offset()] += dy;

    for (std::size_t t = T_; t-- > 0;) {
      const double* f = &f_[t * H_];
      const double* i = &i_[t * H_];
      const double* g = &g_[t * H_];
      const double* o = &o_[t * H_];
      const double* tc = &tanh_c_[t * H_];
      const double* c_prev = &c_[t * H_];
      const double* h_prev = &h_[t * H_];
      const double* x = &x_[t * I_];
      double* dzf = &dz_[0];
      double* dzi = &dz_[H_];
      double* dzg = &dz_[2 * H_];
      double* dzo = &dz_[3 * H_];
      for (std::size_t r = 0; r < H_; ++r) {
        dzo[r] = dh_[r] * tc[r] * o[r] * (1.0 - o[r]);
        dc_[r] += dh_[r] * o[r] * (1.0 - tc[r] * tc[r]);
        dzf[r] = dc_[r] * c_prev[r] * f[r] * (1.0 - f[r]);
        dzi[r] = dc_[r] * g[r] * i[r] * (1.0 - i[r]);
        dzg[r] = dc_[r] * i[r] * (1.0 - g[r] * g[r]);
      }
      std::fill(dh_prev_.begin(), dh_prev_.end(), 0.0);
      for (std::size_t gate = 0; gate < kNumGates; ++gate) {
        const double* W = vals + gate * H_ * cols;
        double* gW = gv + gate * H_ * cols;
        double* gb = gv + kNumGates * H_ * cols + gate * H_;
        const double* dz = &dz_[gate * H_];
        for (std::size_t r = 0; r < H_; ++r) {
          const double d = dz[r];
          gb[r] += d;
          double* grow = gW + r * cols;
          const double* row = W + r * cols;
          for (std::size_t k = 0; k < H_; ++k) {
            grow[k] += d * h_prev[k];
            dh_prev_[k] += row[k] * d;
          }
          for (std::size_t k = 0; k < I_; ++k) grow[H_ + k] += d * x[k];
        }
      }
      for (std::size_t r = 0; r < H_; ++r) {
        dh_[r] = dh_prev_[r];
        dc_[r] *= f[r];
      }
    }
  }

 private:
  void check(const LstmParams& p, const SequenceSample& s) const {
    if (p.hidden() != H_ || p.input() != I_) throw Error(ErrorKind::shape, "parameter shape mismatch");
    if (s.window.size() != T_) {
      throw Error(ErrorKind::shape, "window length " + std::to_string(s.window.size()) + " != time step " +
                                        std::to_string(T_));
    }
    if (I_ > kNumFeatures) throw Error(ErrorKind::shape, "input size exceeds feature count");
  }

  std::size_t H_, I_, T_;
  std::vector<double> f_, i_, g_, o_, c_, tanh_c_, h_, x_;
  std::vector<double> dh_, dc_, dz_, dh_prev_;
};

inline std::size_t window_length(std::span<const SequenceSample> samples) {
  if (samples.empty()) return 0;
  return samples.front().window.size();
}

}  // namespace detail

/// One LSTM step from `prev` on input `x`.
inline StepResult cell_step(const LstmParams& p, const CellState& prev, std::span<const double> x) {
  const std::size_t H = p.hidden();
  if (prev.c.size() != H || prev.h.size() != H || x.size() != p.input()) {
    throw Error(ErrorKind::shape, "cell_step shape mismatch");
  }
  StepResult out{CellState::zeros(H), {std::vector<double>(H), std::vector<double>(H),
                                       std::vector<double>(H), std::vector<double>(H)}};
  std::vector<double> tanh_c(H);
  detail::step_kernel(p, prev.h.data(), prev.c.data(), x.data(), out.gates.forget.data(), out.gates.input.data(),
                      out.gates.candidate.data(), out.gates.output.data(), out.state.c.data(), tanh_c.data(),
                      out.state.h.data());
  return out;
}

/// Unrolls the window from a zero state and applies yhat = V . h_T + c (unclamped).
inline double forward(const LstmParams& p, const SequenceSample& sample) {
  detail::Unroller u(p.hidden(), p.input(), sample.window.size());
  return u.forward(p, sample);
}

/// Mean squared error over `samples`.
inline double loss(const LstmParams& p, std::span<const SequenceSample> samples) {
  if (samples.empty()) throw Error(ErrorKind::undefined_metric, "loss of an empty sample set");
  detail::Unroller u(p.hidden(), p.input(), detail::window_length(samples));
  double sum = 0.0;
  for (const auto& s : samples) {
    const double r = u.forward(p, s) - s.target;
    sum += r * r;
  }
  return sum / static_cast<double>(samples.size());
}

/// Exact gradient of the minibatch MSE with respect to every parameter.
inline LstmParams backward(const LstmParams& p, std::span<const SequenceSample> minibatch) {
  if (minibatch.empty()) throw Error(ErrorKind::undefined_metric, "gradient of an empty minibatch");
  LstmParams grad(p.hidden(), p.input());
  detail::Unroller u(p.hidden(), p.input(), detail::window_length(minibatch));
  const double scale = 2.0 / static_cast<double>(minibatch.size());
  for (const auto& s : minibatch) {
    const double yhat = u.forward(p, s);
    u.backward(p, scale * (yhat - s.target), grad);
  }
  return grad;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.001;

  static AdamState for_params(const LstmParams& p, double learning_rate = 0.001) {
    AdamState s;
    s.m.assign(p.size(), 0.0);
    s.v.assign(p.size(), 0.0);
    s.learning_rate = learning_rate;
    return s;
  }
};

/// Bias-corrected Adam update. A non-finite gradient leaves params and state untouched.
inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (state.m.size() != params.size() || state.v.size() != params.size() || grads.size() != params.size()) {
    throw Error(ErrorKind::shape, "optimizer state does not match parameters");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw Error(ErrorKind::optimizer, "non-finite gradient");
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * grads[k];
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * grads[k] * grads[k];
    const double m_hat = state.m[k] / bc1;
    const double v_hat = state.v[k] / bc2;
    params[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

inline void adam_step(AdamState& state, LstmParams& params, const LstmParams& grads) {
  adam_step(state, params.values(), grads.values());
}

struct TrainOptions {
  std::size_t epochs = 500;
  std::size_t batch_size = 256;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;
  bool track_train_loss = true;  // full-set train loss after each epoch (NaN when off)
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double train = 0.0;
  double validation = std::numeric_limits<double>::quiet_NaN();  // NaN without a validation set
};

struct TrainResult {
  LstmParams params;  // best-validation snapshot, or the final epoch without validation
  std::vector<EpochLoss> trace;
  std::size_t best_epoch = 0;  // 0 when epochs == 0
};

/// Seeded minibatch Adam. Sample order is reshuffled every epoch; the last
/// short minibatch is kept. With a validation set the lowest-validation epoch
/// is returned, otherwise the last.
inline TrainResult train(const LstmParams& init, std::span<const SequenceSample> samples, const TrainOptions& opt,
                         std::span<const SequenceSample> validation = {}) {
  if (samples.empty()) throw Error(ErrorKind::parameter, "training needs at least one sample");
  if (opt.batch_size == 0) throw Error(ErrorKind::parameter, "batch_size must be >= 1");
  if (!(opt.learning_rate > 0.0)) throw Error(ErrorKind::parameter, "learning rate must be > 0");

  TrainResult result{init, {}, 0};
  if (opt.epochs == 0) return result;

  LstmParams params = init;
  LstmParams grad(init.hidden(), init.input());
  AdamState adam = AdamState::for_params(params, opt.learning_rate);
  detail::Unroller u(init.hidden(), init.input(), detail::window_length(samples));
  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_val = std::numeric_limits<double>::infinity();
  result.trace.reserve(opt.epochs);
  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t stop = std::min(order.size(), start + opt.batch_size);
      const double scale = 2.0 / static_cast<double>(stop - start);
      std::fill(grad.values().begin(), grad.values().end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& s = samples[order[k]];
        const double yhat = u.forward(params, s);
        u.backward(params, scale * (yhat - s.target), grad);
      }
      adam_step(adam, params, grad);
    }
    EpochLoss row;
    row.epoch = epoch;
    row.train = opt.track_train_loss ? loss(params, samples) : std::numeric_limits<double>::quiet_NaN();
    if (!validation.empty()) {
      row.validation = loss(params, validation);
      if (row.validation < best_val) {
        best_val = row.validation;
        result.params = params;
        result.best_epoch = epoch;
      }
    }
    result.trace.push_back(row);
  }
  if (validation.empty()) {
    result.params = std::move(params);
    result.best_epoch = opt.epochs;
  }
  return result;
}

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares backward() with central differences. `indices` restricts the
/// check to selected parameter positions; empty means all of them.
/// Relative error is |a - n| / max(|a|, |n|, 1e-6).
inline GradCheckReport grad_check(const LstmParams& params, std::span<const SequenceSample> samples, double fd_step,
                                  std::span<const std::size_t> indices = {}) {
  if (!(fd_step > 0.0)) throw Error(ErrorKind::parameter, "fd_step must be > 0");
  const LstmParams analytic = backward(params, samples);
  LstmParams probe = params;
  GradCheckReport report;
  auto check_one = [&](std::size_t k) {
    const double saved = probe.values()[k];
    probe.values()[k] = saved + fd_step;
    const double up = loss(probe, samples);
    probe.values()[k] = saved - fd_step;
    const double down = loss(probe, samples);
    probe.values()[k] = saved;
    const double numeric = (up - down) / (2.0 * fd_step);
    const double a = analytic.values()[k];
    const double abs_err = std::abs(a - numeric);
    const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), 1e-6});
    if (rel > report.max_relative_error || report.checked == 0) {
      report.max_relative_error = rel;
      report.worst_index = k;
    }
    report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
    ++report.checked;
  };
  if (indices.empty()) {
    for (std::size_t k = 0; k < params.size(); ++k) check_one(k);
  } else {
    for (std::size_t k : indices) {
      if (k >= params.size()) throw Error(ErrorKind::parameter, "grad_check index out of range");
      check_one(k);
    }
  }
  return report;
}

inline constexpr const char* kParamsMagic = "adlstm-params";
inline constexpr int kParamsVersion = 1;

/// Text checkpoint: magic/version line, hyper-parameters, then every value in
/// layout order using shortest round-trip decimal text (bit-exact reload).
inline void save_params(std::ostream& out, const LstmParams& p, std::size_t time_step) {
  out << kParamsMagic << " v" << kParamsVersion << '\n';
  out << "layers 1\n";
  out << "hidden " << p.hidden() << '\n';
  out << "time_step " << time_step << '\n';
  out << "input_size " << p.input() << '\n';
  out << "count " << p.size() << '\n';
  for (double v : p.values()) out << format_exact(v) << '\n';
}

struct LoadedParams {
  LstmParams params;
  std::size_t time_step = 0;
};

inline LoadedParams load_params(std::istream& in) {
  auto fail = [](const std::string& msg) { return Error(ErrorKind::io, "bad parameter checkpoint: " + msg); };
  std::string magic, version;
  if (!(in >> magic >> version) || magic != kParamsMagic) throw fail("missing header");
  if (version != "v" + std::to_string(kParamsVersion)) throw fail("unsupported version " + version);
  auto field = [&](const char* name) {
    std::string key;
    long long value = 0;
    std::string token;
    if (!(in >> key >> token) || key != name || !parse_long(token, value) || value < 0) {
      throw fail(std::string("expected ") + name);
    }
    return static_cast<std::size_t>(value);
  };
  if (field("layers") != 1) throw fail("only one layer is supported");
  const std::size_t hidden = field("hidden");
  const std::size_t time_step = field("time_step");
  const std::size_t input = field("input_size");
  const std::size_t count = field("count");
  if (hidden == 0 || input == 0 || time_step == 0) throw fail("zero-sized dimension");
  LoadedParams out{LstmParams(hidden, input), time_step};
  if (count != out.params.size()) throw fail("value count does not match shape");
  for (auto& v : out.params.values()) {
    std::string token;
    if (!(in >> token) || !parse_double(token, v) || !std::isfinite(v)) throw fail("bad value");
  }
  return out;
}

}  // namespace adlstm
