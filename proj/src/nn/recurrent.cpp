#include <algorithm>
#include <cmath>

#include "bitwave/error.hpp"
#include "bitwave/linalg.hpp"
#include "bitwave/nn.hpp"

namespace bitwave::nn {
namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void uniform_init(Tensor& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.storage()) v = dist(rng);
}

Shape sequence_output(const Shape& in, std::size_t input, std::size_t width, const char* who) {
  if (in.size() != 2 || in[1] != input)
    throw Error(ErrorKind::shape, std::string(who) + " expects (steps, " + std::to_string(input) + ") input, got " +
                                      to_string(in));
  if (in[0] == 0) throw Error(ErrorKind::shape, std::string(who) + " received an empty sequence");
  return {in[0], width};
}

}  // namespace

// --- LSTM --------------------------------------------------------------------------

Lstm::Lstm(std::size_t input_size, std::size_t hidden_size, Rng& rng)
    : input_(input_size),
      hidden_(hidden_size),
      w_ih_("w_ih", {4 * hidden_size, input_size}),
      w_hh_("w_hh", {4 * hidden_size, hidden_size}),
      bias_("bias", {4 * hidden_size}) {
  if (input_size == 0 || hidden_size == 0) throw Error(ErrorKind::config, "lstm sizes must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  uniform_init(w_ih_.value, bound, rng);
  uniform_init(w_hh_.value, bound, rng);
  for (std::size_t j = 0; j < hidden_size; ++j) bias_.value[hidden_size + j] = 1.0;  // forget gate
}

Shape Lstm::output_shape(const Shape& in) const { return sequence_output(in, input_, hidden_, "lstm"); }

LayerSpec Lstm::spec() const { return {.kind = LayerKind::lstm, .in_channels = input_, .hidden_size = hidden_}; }

LstmState Lstm::step(std::span<const double> x, const LstmState& state) const {
  const std::size_t H = hidden_;
  if (x.size() != input_ || state.h.size() != H || state.c.size() != H)
    throw Error(ErrorKind::shape, "lstm step dimension mismatch");
  std::vector<double> a(4 * H);
  linalg::gemv(4 * H, input_, w_ih_.value.data(), x.data(), a.data(), false);
  linalg::gemv(4 * H, H, w_hh_.value.data(), state.h.data(), a.data(), true);
  LstmState next{std::vector<double>(H), std::vector<double>(H)};
  for (std::size_t j = 0; j < H; ++j) {
    const double i = sigmoid(a[j] + bias_.value[j]);
    const double f = sigmoid(a[H + j] + bias_.value[H + j]);
    const double g = std::tanh(a[2 * H + j] + bias_.value[2 * H + j]);
    const double o = sigmoid(a[3 * H + j] + bias_.value[3 * H + j]);
    next.c[j] = f * state.c[j] + i * g;
    next.h[j] = o * std::tanh(next.c[j]);
  }
  return next;
}

Tensor Lstm::forward(const Tensor& x, Mode) {
  const Shape out_shape = output_shape(x.shape());
  const std::size_t steps = out_shape[0], H = hidden_, G = 4 * H;
  input_cache_ = x;
  gates_.assign(steps * G, 0.0);
  cells_.assign(steps * H, 0.0);
  tanh_cells_.assign(steps * H, 0.0);
  hiddens_.assign(steps * H, 0.0);

  // Input projections for all steps at once.
  linalg::gemm_nt(steps, G, input_, x.data(), w_ih_.value.data(), gates_.data(), false);
  std::vector<double> zeros(H, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    double* a = gates_.data() + t * G;
    const double* h_prev = t ? hiddens_.data() + (t - 1) * H : zeros.data();
    const double* c_prev = t ? cells_.data() + (t - 1) * H : zeros.data();
    linalg::gemv(G, H, w_hh_.value.data(), h_prev, a, true);
    for (std::size_t j = 0; j < H; ++j) {
      a[j] = sigmoid(a[j] + bias_.value[j]);
      a[H + j] = sigmoid(a[H + j] + bias_.value[H + j]);
      a[2 * H + j] = std::tanh(a[2 * H + j] + bias_.value[2 * H + j]);
      a[3 * H + j] = sigmoid(a[3 * H + j] + bias_.value[3 * H + j]);
      const double c = a[H + j] * c_prev[j] + a[j] * a[2 * H + j];
      cells_[t * H + j] = c;
      tanh_cells_[t * H + j] = std::tanh(c);
      hiddens_[t * H + j] = a[3 * H + j] * tanh_cells_[t * H + j];
    }
  }
  return Tensor(out_shape, hiddens_);
}

Tensor Lstm::backward(const Tensor& grad_out) {
  const Shape out_shape = output_shape(input_cache_.shape());
  if (grad_out.shape() != out_shape) throw Error(ErrorKind::shape, "lstm gradient shape mismatch");
  const std::size_t steps = out_shape[0], H = hidden_, G = 4 * H;

  std::vector<double> d_pre(steps * G);
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), zeros(H, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    const double* a = gates_.data() + t * G;
    const double* c_prev = t ? cells_.data() + (t - 1) * H : zeros.data();
    const double* h_prev = t ? hiddens_.data() + (t - 1) * H : zeros.data();
    double* da = d_pre.data() + t * G;
    for (std::size_t j = 0; j < H; ++j) {
      const double i = a[j], f = a[H + j], g = a[2 * H + j], o = a[3 * H + j];
      const double tc = tanh_cells_[t * H + j];
      const double dh = grad_out[t * H + j] + dh_next[j];
      const double dc = dh * o * (1.0 - tc * tc) + dc_next[j];
      da[j] = dc * g * i * (1.0 - i);
      da[H + j] = dc * c_prev[j] * f * (1.0 - f);
      da[2 * H + j] = dc * i * (1.0 - g * g);
      da[3 * H + j] = dh * tc * o * (1.0 - o);
      dc_next[j] = dc * f;
    }
    linalg::ger(G, H, da, h_prev, w_hh_.grad.data());
    linalg::gemv_t(G, H, w_hh_.value.data(), da, dh_next.data(), false);
  }
  linalg::gemm_tn(G, input_, steps, d_pre.data(), input_cache_.data(), w_ih_.grad.data(), true);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t k = 0; k < G; ++k) bias_.grad[k] += d_pre[t * G + k];
  Tensor grad_in(input_cache_.shape());
  linalg::gemm_nn(steps, input_, G, d_pre.data(), w_ih_.value.data(), grad_in.data(), false);
  return grad_in;
}

// --- GRU ---------------------------------------------------------------------------

Gru::Gru(std::size_t input_size, std::size_t hidden_size, bool reverse, Rng& rng)
    : input_(input_size),
      hidden_(hidden_size),
      reverse_(reverse),
      w_ih_("w_ih", {3 * hidden_size, input_size}),
      w_hh_("w_hh", {3 * hidden_size, hidden_size}),
      bias_("bias", {3 * hidden_size}) {
  if (input_size == 0 || hidden_size == 0) throw Error(ErrorKind::config, "gru sizes must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  uniform_init(w_ih_.value, bound, rng);
  uniform_init(w_hh_.value, bound, rng);
}

Shape Gru::output_shape(const Shape& in) const { return sequence_output(in, input_, hidden_, "gru"); }

LayerSpec Gru::spec() const {
  return {.kind = LayerKind::gru, .in_channels = input_, .hidden_size = hidden_, .reverse = reverse_};
}

std::vector<double> Gru::step(std::span<const double> x, std::span<const double> h) const {
  const std::size_t H = hidden_;
  if (x.size() != input_ || h.size() != H) throw Error(ErrorKind::shape, "gru step dimension mismatch");
  std::vector<double> a(3 * H);
  linalg::gemv(3 * H, input_, w_ih_.value.data(), x.data(), a.data(), false);
  std::vector<double> u(2 * H);
  linalg::gemv(2 * H, H, w_hh_.value.data(), h.data(), u.data(), false);
  std::vector<double> z(H), rh(H);
  for (std::size_t j = 0; j < H; ++j) {
    z[j] = sigmoid(a[j] + u[j] + bias_.value[j]);
    const double r = sigmoid(a[H + j] + u[H + j] + bias_.value[H + j]);
    rh[j] = r * h[j];
  }
  std::vector<double> un(H);
  linalg::gemv(H, H, w_hh_.value.data() + 2 * H * H, rh.data(), un.data(), false);
  std::vector<double> next(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double n = std::tanh(a[2 * H + j] + un[j] + bias_.value[2 * H + j]);
    next[j] = (1.0 - z[j]) * h[j] + z[j] * n;
  }
  return next;
}

Tensor Gru::forward(const Tensor& x, Mode) {
  const Shape out_shape = output_shape(x.shape());
  const std::size_t steps = out_shape[0], H = hidden_, G = 3 * H;
  input_cache_ = x;
  z_.assign(steps * H, 0.0);
  r_.assign(steps * H, 0.0);
  n_.assign(steps * H, 0.0);
  hprev_.assign(steps * H, 0.0);
  rh_.assign(steps * H, 0.0);

  std::vector<double> xw(steps * G);
  linalg::gemm_nt(steps, G, input_, x.data(), w_ih_.value.data(), xw.data(), false);

  Tensor out(out_shape);
  std::vector<double> h(H, 0.0), u(2 * H), un(H);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = index(s, steps);
    const double* a = xw.data() + t * G;
    std::copy(h.begin(), h.end(), hprev_.begin() + static_cast<std::ptrdiff_t>(s * H));
    linalg::gemv(2 * H, H, w_hh_.value.data(), h.data(), u.data(), false);
    for (std::size_t j = 0; j < H; ++j) {
      z_[s * H + j] = sigmoid(a[j] + u[j] + bias_.value[j]);
      r_[s * H + j] = sigmoid(a[H + j] + u[H + j] + bias_.value[H + j]);
      rh_[s * H + j] = r_[s * H + j] * h[j];
    }
    linalg::gemv(H, H, w_hh_.value.data() + 2 * H * H, rh_.data() + s * H, un.data(), false);
    for (std::size_t j = 0; j < H; ++j) {
      const double n = std::tanh(a[2 * H + j] + un[j] + bias_.value[2 * H + j]);
      n_[s * H + j] = n;
      const double z = z_[s * H + j];
      h[j] = (1.0 - z) * h[j] + z * n;
      out[t * H + j] = h[j];
    }
  }
  return out;
}

Tensor Gru::backward(const Tensor& grad_out) {
  const Shape out_shape = output_shape(input_cache_.shape());
  if (grad_out.shape() != out_shape) throw Error(ErrorKind::shape, "gru gradient shape mismatch");
  const std::size_t steps = out_shape[0], H = hidden_, G = 3 * H;
  const double* u_n = w_hh_.value.data() + 2 * H * H;
  double* gu_n = w_hh_.grad.data() + 2 * H * H;

  std::vector<double> d_pre(steps * G);
  std::vector<double> dh_next(H, 0.0), dh(H), da_n(H), drh(H), da_zr(2 * H), tmp(H);
  for (std::size_t s = steps; s-- > 0;) {
    const std::size_t t = index(s, steps);
    const double* hp = hprev_.data() + s * H;
    double* da = d_pre.data() + t * G;
    for (std::size_t j = 0; j < H; ++j) {
      dh[j] = grad_out[t * H + j] + dh_next[j];
      const double n = n_[s * H + j];
      da_n[j] = dh[j] * z_[s * H + j] * (1.0 - n * n);
    }
    linalg::gemv_t(H, H, u_n, da_n.data(), drh.data(), false);
    linalg::ger(H, H, da_n.data(), rh_.data() + s * H, gu_n);
    for (std::size_t j = 0; j < H; ++j) {
      const double z = z_[s * H + j], r = r_[s * H + j];
      const double dz = dh[j] * (n_[s * H + j] - hp[j]);
      const double dr = drh[j] * hp[j];
      da_zr[j] = dz * z * (1.0 - z);
      da_zr[H + j] = dr * r * (1.0 - r);
      dh_next[j] = dh[j] * (1.0 - z) + drh[j] * r;
      da[j] = da_zr[j];
      da[H + j] = da_zr[H + j];
      da[2 * H + j] = da_n[j];
    }
    linalg::ger(2 * H, H, da_zr.data(), hp, w_hh_.grad.data());
    linalg::gemv_t(2 * H, H, w_hh_.value.data(), da_zr.data(), tmp.data(), false);
    for (std::size_t j = 0; j < H; ++j) dh_next[j] += tmp[j];
  }
  linalg::gemm_tn(G, input_, steps, d_pre.data(), input_cache_.data(), w_ih_.grad.data(), true);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t k = 0; k < G; ++k) bias_.grad[k] += d_pre[t * G + k];
  Tensor grad_in(input_cache_.shape());
  linalg::gemm_nn(steps, input_, G, d_pre.data(), w_ih_.value.data(), grad_in.data(), false);
  return grad_in;
}

// --- BiGRU -------------------------------------------------------------------------

BiGru::BiGru(std::size_t input_size, std::size_t hidden_size, Rng& rng)
    : hidden_(hidden_size), fwd_(input_size, hidden_size, false, rng), bwd_(input_size, hidden_size, true, rng) {}

Shape BiGru::output_shape(const Shape& in) const {
  const Shape s = fwd_.output_shape(in);
  return {s[0], 2 * hidden_};
}

LayerSpec BiGru::spec() const {
  LayerSpec s = fwd_.spec();
  s.kind = LayerKind::bigru;
  s.reverse = false;
  return s;
}

std::vector<Param*> BiGru::params() {
  auto out = fwd_.params();
  for (Param* p : bwd_.params()) out.push_back(p);
  return out;
}

Tensor BiGru::forward(const Tensor& x, Mode mode) {
  const Tensor f = fwd_.forward(x, mode);
  const Tensor b = bwd_.forward(x, mode);
  const std::size_t steps = f.dim(0), H = hidden_;
  Tensor out({steps, 2 * H});
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(f.data() + t * H, H, out.data() + t * 2 * H);
    std::copy_n(b.data() + t * H, H, out.data() + t * 2 * H + H);
  }
  return out;
}

Tensor BiGru::backward(const Tensor& grad_out) {
  if (grad_out.rank() != 2 || grad_out.dim(1) != 2 * hidden_)
    throw Error(ErrorKind::shape, "bigru gradient shape mismatch");
  const std::size_t steps = grad_out.dim(0), H = hidden_;
  Tensor gf({steps, H}), gb({steps, H});
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(grad_out.data() + t * 2 * H, H, gf.data() + t * H);
    std::copy_n(grad_out.data() + t * 2 * H + H, H, gb.data() + t * H);
  }
  Tensor gx = fwd_.backward(gf);
  const Tensor gx_b = bwd_.backward(gb);
  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gx_b[i];
  return gx;
}

}  // namespace bitwave::nn
