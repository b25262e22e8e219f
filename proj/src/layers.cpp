#include "statn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "statn/errors.hpp"

namespace statn {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw config_error(msg);
}

int conv_out_extent(int in, int kernel, int stride, int pad) {
  const int out = (in + 2 * pad - kernel) / stride + 1;
  require(out >= 1, "conv output extent is not positive");
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& in, const Tensor& weights, const Tensor& bias, int stride,
              int pad) {
  require(in.rank() == 3, "conv2d: input must be HxWxC");
  require(weights.rank() == 4, "conv2d: weights must be kh x kw x Cin x Cout");
  require(stride >= 1, "conv2d: stride must be >= 1");
  require(pad >= 0, "conv2d: pad must be >= 0");
  const int h = in.dim(0), w = in.dim(1), cin = in.dim(2);
  const int kh = weights.dim(0), kw = weights.dim(1);
  const int cout = weights.dim(3);
  require(weights.dim(2) == cin, "conv2d: channel count mismatch");
  require(bias.rank() == 1 && bias.dim(0) == cout, "conv2d: bias size mismatch");
  const int oh = conv_out_extent(h, kh, stride, pad);
  const int ow = conv_out_extent(w, kw, stride, pad);

  Tensor out({oh, ow, cout});
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double* o = &out(oy, ox, 0);
      for (int oc = 0; oc < cout; ++oc) o[oc] = bias[oc];
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= w) continue;
          const double* ip = &in(iy, ix, 0);
          for (int ic = 0; ic < cin; ++ic) {
            const double v = ip[ic];
            const double* wp = &weights(ky, kx, ic, 0);
            for (int oc = 0; oc < cout; ++oc) o[oc] += v * wp[oc];
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& in, const Tensor& weights, int stride, int pad,
                     const Tensor& dout, Tensor* din, Tensor* dweights, Tensor* dbias) {
  const int h = in.dim(0), w = in.dim(1), cin = in.dim(2);
  const int kh = weights.dim(0), kw = weights.dim(1);
  const int cout = weights.dim(3);
  const int oh = dout.dim(0), ow = dout.dim(1);
  require(dout.rank() == 3 && dout.dim(2) == cout, "conv2d_backward: dout shape mismatch");

  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const double* go = &dout(oy, ox, 0);
      if (dbias) {
        for (int oc = 0; oc < cout; ++oc) (*dbias)[oc] += go[oc];
      }
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= w) continue;
          const double* ip = &in(iy, ix, 0);
          for (int ic = 0; ic < cin; ++ic) {
            const double* wp = &weights(ky, kx, ic, 0);
            double acc = 0.0;
            if (dweights) {
              double* dwp = &(*dweights)(ky, kx, ic, 0);
              const double v = ip[ic];
              for (int oc = 0; oc < cout; ++oc) {
                dwp[oc] += v * go[oc];
                acc += wp[oc] * go[oc];
              }
            } else {
              for (int oc = 0; oc < cout; ++oc) acc += wp[oc] * go[oc];
            }
            if (din) (*din)(iy, ix, ic) += acc;
          }
        }
      }
    }
  }
}

Tensor relu(const Tensor& in) {
  Tensor out = in;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

void relu_backward(const Tensor& in, const Tensor& dout, Tensor* din) {
  for (std::size_t i = 0; i < in.data.size(); ++i)
    din->data[i] += in.data[i] > 0.0 ? dout.data[i] : 0.0;
}

Tensor maxpool(const Tensor& in, int window) {
  require(in.rank() == 3, "maxpool: input must be HxWxC");
  require(window >= 1, "maxpool: window must be >= 1");
  const int h = in.dim(0), w = in.dim(1), c = in.dim(2);
  require(window <= h && window <= w, "maxpool: window larger than spatial extent");
  const int oh = h / window, ow = w / window;

  Tensor out({oh, ow, c});
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int ch = 0; ch < c; ++ch) {
        double best = in(oy * window, ox * window, ch);
        for (int ky = 0; ky < window; ++ky)
          for (int kx = 0; kx < window; ++kx)
            best = std::max(best, in(oy * window + ky, ox * window + kx, ch));
        out(oy, ox, ch) = best;
      }
  return out;
}

void maxpool_backward(const Tensor& in, int window, const Tensor& dout, Tensor* din) {
  const int c = in.dim(2);
  const int oh = dout.dim(0), ow = dout.dim(1);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int ch = 0; ch < c; ++ch) {
        // gradient goes to the first maximal element in row-major scan
        int by = oy * window, bx = ox * window;
        double best = in(by, bx, ch);
        for (int ky = 0; ky < window; ++ky)
          for (int kx = 0; kx < window; ++kx) {
            const double v = in(oy * window + ky, ox * window + kx, ch);
            if (v > best) {
              best = v;
              by = oy * window + ky;
              bx = ox * window + kx;
            }
          }
        (*din)(by, bx, ch) += dout(oy, ox, ch);
      }
}

Tensor fully_connected(const Tensor& in, const Tensor& weights, const Tensor& bias) {
  require(weights.rank() == 2, "fc: weights must be 2D");
  const int l = weights.dim(0), u = weights.dim(1);
  require(in.size() == l, "fc: input length mismatch");
  require(bias.rank() == 1 && bias.dim(0) == u, "fc: bias size mismatch");

  Tensor out({u});
  for (int j = 0; j < u; ++j) out[j] = bias[j];
  for (int i = 0; i < l; ++i) {
    const double v = in[i];
    if (v == 0.0) continue;
    const double* wp = &weights(i, 0);
    for (int j = 0; j < u; ++j) out[j] += v * wp[j];
  }
  return out;
}

void fully_connected_backward(const Tensor& in, const Tensor& weights, const Tensor& dout,
                              Tensor* din, Tensor* dweights, Tensor* dbias) {
  const int l = weights.dim(0), u = weights.dim(1);
  if (dbias)
    for (int j = 0; j < u; ++j) (*dbias)[j] += dout[j];
  for (int i = 0; i < l; ++i) {
    const double* wp = &weights(i, 0);
    double acc = 0.0;
    if (dweights) {
      double* dwp = &(*dweights)(i, 0);
      const double v = in[i];
      for (int j = 0; j < u; ++j) {
        dwp[j] += v * dout[j];
        acc += wp[j] * dout[j];
      }
    } else {
      for (int j = 0; j < u; ++j) acc += wp[j] * dout[j];
    }
    if (din) din->data[static_cast<std::size_t>(i)] += acc;
  }
}

Tensor softmax(const Tensor& logits) {
  Tensor p = logits;
  double m = logits[0];
  for (double v : logits.data) m = std::max(m, v);
  double z = 0.0;
  for (double& v : p.data) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : p.data) v /= z;
  return p;
}

double softmax_cross_entropy(const Tensor& logits, int label) {
  if (label < 0 || label >= logits.size())
    throw input_error("softmax_cross_entropy: label out of range");
  double m = logits[0];
  for (double v : logits.data) m = std::max(m, v);
  double z = 0.0;
  for (double v : logits.data) z += std::exp(v - m);
  return std::log(z) - (logits[label] - m);
}

Tensor softmax_cross_entropy_backward(const Tensor& logits, int label) {
  if (label < 0 || label >= logits.size())
    throw input_error("softmax_cross_entropy: label out of range");
  Tensor g = softmax(logits);
  g[label] -= 1.0;
  return g;
}

LayerSpec LayerSpec::conv(int kernel, int out_channels, int stride, int pad,
                          int in_channels) {
  LayerSpec s;
  s.kind = Kind::conv;
  s.kernel = kernel;
  s.out_channels = out_channels;
  s.stride = stride;
  s.pad = pad;
  s.in_channels = in_channels;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = Kind::relu;
  return s;
}

LayerSpec LayerSpec::maxpool(int window) {
  LayerSpec s;
  s.kind = Kind::maxpool;
  s.window = window;
  return s;
}

LayerSpec LayerSpec::fc(int units, int in_units) {
  LayerSpec s;
  s.kind = Kind::fc;
  s.units = units;
  s.in_units = in_units;
  return s;
}

std::string LayerSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::conv:
      os << "conv " << kernel << " " << in_channels << " " << out_channels << " " << stride
         << " " << pad;
      break;
    case Kind::relu:
      os << "relu";
      break;
    case Kind::maxpool:
      os << "maxpool " << window;
      break;
    case Kind::fc:
      os << "fc " << in_units << " " << units;
      break;
  }
  return os.str();
}

std::vector<int> layer_output_shape(const LayerSpec& spec, const std::vector<int>& in_shape) {
  switch (spec.kind) {
    case LayerSpec::Kind::conv: {
      require(in_shape.size() == 3, "conv input must be HxWxC");
      require(spec.in_channels == in_shape[2], "conv channel count mismatch");
      const int oh = conv_out_extent(in_shape[0], spec.kernel, spec.stride, spec.pad);
      const int ow = conv_out_extent(in_shape[1], spec.kernel, spec.stride, spec.pad);
      return {oh, ow, spec.out_channels};
    }
    case LayerSpec::Kind::relu:
      return in_shape;
    case LayerSpec::Kind::maxpool: {
      require(in_shape.size() == 3, "maxpool input must be HxWxC");
      require(spec.window <= in_shape[0] && spec.window <= in_shape[1],
              "maxpool window larger than spatial extent");
      return {in_shape[0] / spec.window, in_shape[1] / spec.window, in_shape[2]};
    }
    case LayerSpec::Kind::fc:
      require(spec.in_units == shape_product(in_shape), "fc input length mismatch");
      return {spec.units};
  }
  throw config_error("unknown layer kind");
}

LayerStack LayerStack::build(std::vector<LayerSpec> layer_specs, std::vector<int> input_shape,
                             Rng& rng) {
  LayerStack stack;
  stack.input_shape = input_shape;
  std::vector<int> shape = input_shape;

  for (LayerSpec spec : layer_specs) {
    stack.first_param.push_back(-1);
    switch (spec.kind) {
      case LayerSpec::Kind::conv: {
        if (spec.in_channels == 0) {
          require(shape.size() == 3, "conv input must be HxWxC");
          spec.in_channels = shape[2];
        }
        stack.first_param.back() = static_cast<int>(stack.params.size());
        const double stddev =
            std::sqrt(2.0 / (spec.kernel * spec.kernel * spec.in_channels));
        Tensor w({spec.kernel, spec.kernel, spec.in_channels, spec.out_channels});
        for (double& v : w.data) v = rng.gaussian(0.0, stddev);
        stack.params.emplace_back(std::move(w));
        stack.params.emplace_back(Tensor({spec.out_channels}));
        break;
      }
      case LayerSpec::Kind::fc: {
        if (spec.in_units == 0) spec.in_units = static_cast<int>(shape_product(shape));
        stack.first_param.back() = static_cast<int>(stack.params.size());
        const double stddev = std::sqrt(2.0 / spec.in_units);
        Tensor w({spec.in_units, spec.units});
        for (double& v : w.data) v = rng.gaussian(0.0, stddev);
        stack.params.emplace_back(std::move(w));
        stack.params.emplace_back(Tensor({spec.units}));
        break;
      }
      default:
        break;
    }
    shape = layer_output_shape(spec, shape);
    stack.specs.push_back(spec);
  }
  stack.output_shape = shape;
  return stack;
}

Tensor LayerStack::forward(const Tensor& in, std::vector<Tensor>* acts) const {
  if (in.shape != input_shape) throw config_error("layer stack: input shape mismatch");
  if (acts) {
    acts->clear();
    acts->push_back(in);
  }
  Tensor x = in;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    switch (s.kind) {
      case LayerSpec::Kind::conv:
        x = conv2d(x, params[first_param[i]].value, params[first_param[i] + 1].value,
                   s.stride, s.pad);
        break;
      case LayerSpec::Kind::relu:
        x = relu(x);
        break;
      case LayerSpec::Kind::maxpool:
        x = maxpool(x, s.window);
        break;
      case LayerSpec::Kind::fc:
        x = fully_connected(x, params[first_param[i]].value,
                            params[first_param[i] + 1].value);
        break;
    }
    if (acts) acts->push_back(x);
  }
  return x;
}

Tensor LayerStack::backward(const std::vector<Tensor>& acts, const Tensor& dout,
                            std::vector<Tensor>& param_grads) const {
  if (acts.size() != specs.size() + 1)
    throw config_error("layer stack: activation cache size mismatch");
  Tensor g = dout;
  for (int i = static_cast<int>(specs.size()) - 1; i >= 0; --i) {
    const LayerSpec& s = specs[i];
    const Tensor& in = acts[i];
    Tensor din = Tensor::zeros(in.shape);
    switch (s.kind) {
      case LayerSpec::Kind::conv:
        conv2d_backward(in, params[first_param[i]].value, s.stride, s.pad, g, &din,
                        &param_grads[first_param[i]], &param_grads[first_param[i] + 1]);
        break;
      case LayerSpec::Kind::relu:
        relu_backward(in, g, &din);
        break;
      case LayerSpec::Kind::maxpool:
        maxpool_backward(in, s.window, g, &din);
        break;
      case LayerSpec::Kind::fc:
        fully_connected_backward(in, params[first_param[i]].value, g, &din,
                                 &param_grads[first_param[i]],
                                 &param_grads[first_param[i] + 1]);
        break;
    }
    g = std::move(din);
  }
  return g;
}

std::vector<Tensor> LayerStack::make_grad_buffer() const {
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (const Param& p : params) grads.push_back(Tensor::zeros(p.value.shape));
  return grads;
}

}  // namespace statn
