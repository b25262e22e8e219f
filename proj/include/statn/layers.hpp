#pragma once

#include <string>
#include <vector>

#include "statn/param.hpp"
#include "statn/rng.hpp"
#include "statn/tensor.hpp"

namespace statn {

// Feature maps are H x W x C row-major. Convolutions are cross-correlations
// with zero padding; pooling strides by its window.

Tensor conv2d(const Tensor& in, const Tensor& weights, const Tensor& bias,
              int stride = 1, int pad = 0);
void conv2d_backward(const Tensor& in, const Tensor& weights, int stride, int pad,
                     const Tensor& dout, Tensor* din, Tensor* dweights, Tensor* dbias);

Tensor relu(const Tensor& in);
void relu_backward(const Tensor& in, const Tensor& dout, Tensor* din);

Tensor maxpool(const Tensor& in, int window);
void maxpool_backward(const Tensor& in, int window, const Tensor& dout, Tensor* din);

// Input of any rank is treated as flat; weights are {in_units, units}.
Tensor fully_connected(const Tensor& in, const Tensor& weights, const Tensor& bias);
void fully_connected_backward(const Tensor& in, const Tensor& weights, const Tensor& dout,
                              Tensor* din, Tensor* dweights, Tensor* dbias);

Tensor softmax(const Tensor& logits);
double softmax_cross_entropy(const Tensor& logits, int label);
// d(loss)/d(logits) = softmax(logits) - one_hot(label)
Tensor softmax_cross_entropy_backward(const Tensor& logits, int label);

struct LayerSpec {
  enum class Kind { conv, relu, maxpool, fc };
  Kind kind = Kind::relu;
  // conv
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  int in_channels = 0;   // 0 = infer from input at build time
  int out_channels = 0;
  // maxpool
  int window = 0;
  // fc
  int in_units = 0;      // 0 = infer from input at build time
  int units = 0;

  static LayerSpec conv(int kernel, int out_channels, int stride = 1, int pad = 0,
                        int in_channels = 0);
  static LayerSpec relu();
  static LayerSpec maxpool(int window);
  static LayerSpec fc(int units, int in_units = 0);

  std::string describe() const;
};

// A fixed sequence of layers with hand-wired backward. Parameters live in
// order (conv/fc: weight then bias). Activations are caller-owned so a
// const stack can evaluate many inputs concurrently.
struct LayerStack {
  std::vector<LayerSpec> specs;
  std::vector<Param> params;
  std::vector<int> first_param;  // per layer; -1 for parameterless layers
  std::vector<int> input_shape;
  std::vector<int> output_shape;

  // Resolves inferred channel/unit counts against `input_shape`, validates
  // spatial dims, and He-initialises conv/fc weights.
  static LayerStack build(std::vector<LayerSpec> layer_specs, std::vector<int> input_shape,
                          Rng& rng);

  bool empty() const { return specs.empty(); }

  // acts (optional) receives input plus every layer output: size layers+1.
  Tensor forward(const Tensor& in, std::vector<Tensor>* acts = nullptr) const;

  // Accumulates parameter gradients into `param_grads` (same length/order as
  // `params`, shapes matching) and returns d(loss)/d(input).
  Tensor backward(const std::vector<Tensor>& acts, const Tensor& dout,
                  std::vector<Tensor>& param_grads) const;

  std::vector<Tensor> make_grad_buffer() const;
};

std::vector<int> layer_output_shape(const LayerSpec& spec, const std::vector<int>& in_shape);

}  // namespace statn
