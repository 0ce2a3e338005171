#include <algorithm>
#include <cmath>
#include <sstream>

#include "bitwave/error.hpp"
#include "bitwave/linalg.hpp"
#include "bitwave/nn.hpp"

namespace bitwave::nn {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::dropout: return "dropout";
    case LayerKind::fc: return "fc";
    case LayerKind::lstm: return "lstm";
    case LayerKind::gru: return "gru";
    case LayerKind::bigru: return "bigru";
    case LayerKind::to_sequence: return "to_sequence";
    case LayerKind::last_step: return "last_step";
    case LayerKind::bidir_final: return "bidir_final";
    case LayerKind::add_channel: return "add_channel";
  }
  return "?";
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride) {
  if (stride == 0 || kernel == 0) throw Error(ErrorKind::config, "kernel and stride must be >= 1");
  if (kernel > in)
    throw Error(ErrorKind::shape, "kernel extent " + std::to_string(kernel) + " exceeds input extent " +
                                      std::to_string(in));
  return (in - kernel) / stride + 1;
}

std::string Layer::describe() const {
  const LayerSpec s = spec();
  std::ostringstream os;
  os << to_string(s.kind);
  switch (s.kind) {
    case LayerKind::conv1d:
    case LayerKind::conv2d:
      os << " " << s.in_channels << "->" << s.out_channels << " kernel=(" << s.kernel[0] << "," << s.kernel[1]
         << ") stride=(" << s.stride[0] << "," << s.stride[1] << ")";
      break;
    case LayerKind::fc: os << " " << s.in_channels << "->" << s.out_channels; break;
    case LayerKind::dropout: os << " rate=" << s.rate; break;
    case LayerKind::lstm:
    case LayerKind::gru:
    case LayerKind::bigru:
      os << " input=" << s.in_channels << " hidden=" << s.hidden_size << (s.reverse ? " reverse" : "");
      break;
    default: break;
  }
  return os.str();
}

namespace {

void uniform_init(Tensor& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.storage()) v = dist(rng);
}

void require_same_shape(const Shape& expected, const Tensor& g, const char* who) {
  if (g.shape() != expected)
    throw Error(ErrorKind::shape, std::string(who) + " gradient shape " + to_string(g.shape()) +
                                      " does not match " + to_string(expected));
}

constexpr std::size_t kIm2colBudget = std::size_t{1} << 22;  // doubles per column chunk

}  // namespace

// --- Conv -------------------------------------------------------------------

Conv::Conv(LayerKind kind, std::size_t in_channels, std::size_t out_channels, std::array<std::size_t, 2> kernel,
           std::array<std::size_t, 2> stride, Rng& rng)
    : kind_(kind),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      weight_("weight", {out_channels, in_channels * kernel[0] * kernel[1]}),
      bias_("bias", {out_channels}) {
  if (kind != LayerKind::conv1d && kind != LayerKind::conv2d)
    throw Error(ErrorKind::config, "Conv layer kind must be conv1d or conv2d");
  if (kind == LayerKind::conv1d && kernel[0] != 1)
    throw Error(ErrorKind::config, "conv1d kernels have height 1");
  if (in_channels == 0 || out_channels == 0) throw Error(ErrorKind::config, "conv channels must be positive");
  if (kernel[0] == 0 || kernel[1] == 0 || stride[0] == 0 || stride[1] == 0)
    throw Error(ErrorKind::config, "conv kernel and stride must be >= 1");
  const double fan_in = static_cast<double>(in_channels * kernel[0] * kernel[1]);
  uniform_init(weight_.value, std::sqrt(6.0 / fan_in), rng);
}

Conv::Geometry Conv::geometry(const Shape& in) const {
  const std::size_t want_rank = kind_ == LayerKind::conv1d ? 2 : 3;
  if (in.size() != want_rank)
    throw Error(ErrorKind::shape, std::string(to_string(kind_)) + " expects rank " + std::to_string(want_rank) +
                                      " input, got " + to_string(in));
  if (in[0] != in_channels_)
    throw Error(ErrorKind::shape, std::string(to_string(kind_)) + " expects " + std::to_string(in_channels_) +
                                      " input channels, got " + std::to_string(in[0]));
  Geometry g{};
  g.h = want_rank == 2 ? 1 : in[1];
  g.w = in[want_rank - 1];
  g.out_h = conv_output_extent(g.h, kernel_[0], stride_[0]);
  g.out_w = conv_output_extent(g.w, kernel_[1], stride_[1]);
  return g;
}

Shape Conv::output_shape(const Shape& in) const {
  const Geometry g = geometry(in);
  if (kind_ == LayerKind::conv1d) return {out_channels_, g.out_w};
  return {out_channels_, g.out_h, g.out_w};
}

LayerSpec Conv::spec() const {
  return {.kind = kind_, .kernel = kernel_, .stride = stride_, .in_channels = in_channels_,
          .out_channels = out_channels_};
}

void Conv::im2col(const Tensor& x, const Geometry& g, std::size_t col0, std::size_t ncols, double* cols) const {
  const std::size_t kh = kernel_[0], kw = kernel_[1];
  const double* xd = x.data();
  for (std::size_t c = 0; c < in_channels_; ++c) {
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) {
        double* row = cols + ((c * kh + i) * kw + j) * ncols;
        for (std::size_t q = 0; q < ncols; ++q) {
          const std::size_t p = col0 + q;
          const std::size_t oh = p / g.out_w, ow = p % g.out_w;
          row[q] = xd[(c * g.h + oh * stride_[0] + i) * g.w + ow * stride_[1] + j];
        }
      }
    }
  }
}

Tensor Conv::forward(const Tensor& x, Mode) {
  const Geometry g = geometry(x.shape());
  input_ = x;
  const std::size_t positions = g.out_h * g.out_w;
  const std::size_t patch = in_channels_ * kernel_[0] * kernel_[1];
  const std::size_t chunk = std::clamp<std::size_t>(kIm2colBudget / patch, 1, positions);

  Tensor out(output_shape(x.shape()));
  std::vector<double> cols(patch * chunk);
  std::vector<double> tmp(out_channels_ * chunk);
  for (std::size_t col0 = 0; col0 < positions; col0 += chunk) {
    const std::size_t nc = std::min(chunk, positions - col0);
    im2col(x, g, col0, nc, cols.data());
    linalg::gemm_nn(out_channels_, nc, patch, weight_.value.data(), cols.data(), tmp.data(), false);
    for (std::size_t o = 0; o < out_channels_; ++o) {
      const double b = bias_.value[o];
      double* dst = out.data() + o * positions + col0;
      const double* src = tmp.data() + o * nc;
      for (std::size_t q = 0; q < nc; ++q) dst[q] = src[q] + b;
    }
  }
  return out;
}

Tensor Conv::backward(const Tensor& grad_out) {
  if (input_.empty()) throw Error(ErrorKind::shape, "conv backward called without a forward cache");
  const Geometry g = geometry(input_.shape());
  require_same_shape(output_shape(input_.shape()), grad_out, "conv");
  const std::size_t positions = g.out_h * g.out_w;
  const std::size_t patch = in_channels_ * kernel_[0] * kernel_[1];
  const std::size_t chunk = std::clamp<std::size_t>(kIm2colBudget / patch, 1, positions);
  const std::size_t kh = kernel_[0], kw = kernel_[1];

  for (std::size_t o = 0; o < out_channels_; ++o) {
    const double* src = grad_out.data() + o * positions;
    double acc = 0.0;
    for (std::size_t p = 0; p < positions; ++p) acc += src[p];
    bias_.grad[o] += acc;
  }

  Tensor grad_in(input_.shape());
  std::vector<double> cols(patch * chunk);
  std::vector<double> gchunk(out_channels_ * chunk);
  std::vector<double> gcols(patch * chunk);
  for (std::size_t col0 = 0; col0 < positions; col0 += chunk) {
    const std::size_t nc = std::min(chunk, positions - col0);
    im2col(input_, g, col0, nc, cols.data());
    for (std::size_t o = 0; o < out_channels_; ++o)
      std::copy_n(grad_out.data() + o * positions + col0, nc, gchunk.data() + o * nc);
    linalg::gemm_nt(out_channels_, patch, nc, gchunk.data(), cols.data(), weight_.grad.data(), true);
    linalg::gemm_tn(patch, nc, out_channels_, weight_.value.data(), gchunk.data(), gcols.data(), false);
    double* gx = grad_in.data();
    for (std::size_t c = 0; c < in_channels_; ++c) {
      for (std::size_t i = 0; i < kh; ++i) {
        for (std::size_t j = 0; j < kw; ++j) {
          const double* row = gcols.data() + ((c * kh + i) * kw + j) * nc;
          for (std::size_t q = 0; q < nc; ++q) {
            const std::size_t p = col0 + q;
            const std::size_t oh = p / g.out_w, ow = p % g.out_w;
            gx[(c * g.h + oh * stride_[0] + i) * g.w + ow * stride_[1] + j] += row[q];
          }
        }
      }
    }
  }
  return grad_in;
}

// --- Relu / Dropout ----------------------------------------------------------

Tensor Relu::forward(const Tensor& x, Mode) {
  input_ = x;
  Tensor out = x;
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor Relu::backward(const Tensor& grad_out) {
  require_same_shape(input_.shape(), grad_out, "relu");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(input_[i] > 0.0)) g[i] = 0.0;
  return g;
}

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::config, "dropout rate must lie in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode) {
  if (mode == Mode::eval || rate_ == 0.0) {
    mask_.clear();
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate_);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  mask_.resize(x.size());
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask_[i] = u(rng_) < rate_ ? 0.0 : keep_scale;
    out[i] *= mask_[i];
  }
  return out;
}

Tensor Dropout::backward(const Tensor& grad_out) {
  if (mask_.empty()) return grad_out;
  if (mask_.size() != grad_out.size()) throw Error(ErrorKind::shape, "dropout gradient size mismatch");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask_[i];
  return g;
}

// --- Dense -------------------------------------------------------------------

Dense::Dense(std::size_t in_features, std::size_t out_features, Rng& rng)
    : in_(in_features),
      out_(out_features),
      weight_("weight", {out_features, in_features}),
      bias_("bias", {out_features}) {
  if (in_features == 0 || out_features == 0) throw Error(ErrorKind::config, "fc widths must be positive");
  uniform_init(weight_.value, std::sqrt(6.0 / static_cast<double>(in_features)), rng);
}

Shape Dense::output_shape(const Shape& in) const {
  if (in.empty() || in.back() != in_)
    throw Error(ErrorKind::shape, "fc expects last axis " + std::to_string(in_) + ", got " + to_string(in));
  Shape out = in;
  out.back() = out_;
  return out;
}

LayerSpec Dense::spec() const { return {.kind = LayerKind::fc, .in_channels = in_, .out_channels = out_}; }

Tensor Dense::forward(const Tensor& x, Mode) {
  Tensor out(output_shape(x.shape()));
  input_ = x;
  const std::size_t rows = x.size() / in_;
  linalg::gemm_nt(rows, out_, in_, x.data(), weight_.value.data(), out.data(), false);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < out_; ++o) out[r * out_ + o] += bias_.value[o];
  return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
  require_same_shape(output_shape(input_.shape()), grad_out, "fc");
  const std::size_t rows = input_.size() / in_;
  linalg::gemm_tn(out_, in_, rows, grad_out.data(), input_.data(), weight_.grad.data(), true);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += grad_out[r * out_ + o];
  Tensor grad_in(input_.shape());
  linalg::gemm_nn(rows, in_, out_, grad_out.data(), weight_.value.data(), grad_in.data(), false);
  return grad_in;
}

// --- Shape adapters ------------------------------------------------------------

Shape ToSequence::output_shape(const Shape& in) const {
  if (in.size() == 2) return {in[1], in[0]};
  if (in.size() == 3) return {in[1], in[0] * in[2]};
  throw Error(ErrorKind::shape, "to_sequence expects rank 2 or 3 input, got " + to_string(in));
}

Tensor ToSequence::forward(const Tensor& x, Mode) {
  in_shape_ = x.shape();
  Tensor out(output_shape(in_shape_));
  const std::size_t c_count = in_shape_[0], steps = in_shape_[1];
  const std::size_t f_count = in_shape_.size() == 3 ? in_shape_[2] : 1;
  const std::size_t width = c_count * f_count;
  for (std::size_t c = 0; c < c_count; ++c)
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t f = 0; f < f_count; ++f)
        out[t * width + c * f_count + f] = x[(c * steps + t) * f_count + f];
  return out;
}

Tensor ToSequence::backward(const Tensor& grad_out) {
  require_same_shape(output_shape(in_shape_), grad_out, "to_sequence");
  Tensor g(in_shape_);
  const std::size_t c_count = in_shape_[0], steps = in_shape_[1];
  const std::size_t f_count = in_shape_.size() == 3 ? in_shape_[2] : 1;
  const std::size_t width = c_count * f_count;
  for (std::size_t c = 0; c < c_count; ++c)
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t f = 0; f < f_count; ++f)
        g[(c * steps + t) * f_count + f] = grad_out[t * width + c * f_count + f];
  return g;
}

Shape LastStep::output_shape(const Shape& in) const {
  if (in.size() != 2 || in[0] == 0) throw Error(ErrorKind::shape, "last_step expects a non-empty (N, H) sequence");
  return {in[1]};
}

Tensor LastStep::forward(const Tensor& x, Mode) {
  in_shape_ = x.shape();
  const Shape out_shape = output_shape(in_shape_);
  const std::size_t h = out_shape[0];
  const double* last = x.data() + (in_shape_[0] - 1) * h;
  return Tensor(out_shape, std::vector<double>(last, last + h));
}

Tensor LastStep::backward(const Tensor& grad_out) {
  require_same_shape(output_shape(in_shape_), grad_out, "last_step");
  Tensor g(in_shape_);
  std::copy(grad_out.storage().begin(), grad_out.storage().end(), g.data() + (in_shape_[0] - 1) * in_shape_[1]);
  return g;
}

Shape BidirectionalFinal::output_shape(const Shape& in) const {
  if (in.size() != 2 || in[0] == 0 || in[1] % 2 != 0)
    throw Error(ErrorKind::shape, "bidir_final expects a non-empty (N, 2H) sequence");
  return {in[1]};
}

Tensor BidirectionalFinal::forward(const Tensor& x, Mode) {
  in_shape_ = x.shape();
  const Shape out_shape = output_shape(in_shape_);
  const std::size_t width = in_shape_[1], h = width / 2, last = in_shape_[0] - 1;
  Tensor out(out_shape);
  for (std::size_t j = 0; j < h; ++j) {
    out[j] = x[last * width + j];
    out[h + j] = x[h + j];
  }
  return out;
}

Tensor BidirectionalFinal::backward(const Tensor& grad_out) {
  require_same_shape(output_shape(in_shape_), grad_out, "bidir_final");
  const std::size_t width = in_shape_[1], h = width / 2, last = in_shape_[0] - 1;
  Tensor g(in_shape_);
  for (std::size_t j = 0; j < h; ++j) {
    g[last * width + j] += grad_out[j];
    g[h + j] += grad_out[h + j];
  }
  return g;
}

Shape AddChannel::output_shape(const Shape& in) const {
  Shape out{1};
  out.insert(out.end(), in.begin(), in.end());
  return out;
}

Tensor AddChannel::forward(const Tensor& x, Mode) {
  in_shape_ = x.shape();
  return x.reshaped(output_shape(in_shape_));
}

Tensor AddChannel::backward(const Tensor& grad_out) { return grad_out.reshaped(in_shape_); }

// --- Sequential ------------------------------------------------------------------

Layer& Sequential::add(LayerPtr layer) {
  layers_.push_back(std::move(layer));
  return *layers_.back();
}

Tensor Sequential::forward(const Tensor& x, Mode mode) {
  non_finite_layer_ = -1;
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i]->forward(h, mode);
    if (check_finite_ && non_finite_layer_ < 0 && !h.all_finite()) non_finite_layer_ = static_cast<int>(i);
  }
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

Shape Sequential::output_shape(const Shape& in) const {
  Shape s = in;
  for (const auto& layer : layers_) s = layer->output_shape(s);
  return s;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_)
    for (Param* p : layer->params()) out.push_back(p);
  return out;
}

std::string Sequential::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < layers_.size(); ++i) os << "[" << i << "] " << layers_[i]->describe() << "\n";
  return os.str();
}

void zero_grad(std::span<Param* const> params) {
  for (Param* p : params) p->grad.fill(0.0);
}

}  // namespace bitwave::nn
