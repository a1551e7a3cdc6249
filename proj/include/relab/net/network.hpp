#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "relab/types.hpp"

namespace relab {

enum class LayerKind { Conv2d, Relu, Flatten, Linear, Softmax, Concat };

const char* layer_kind_name(LayerKind k);

/// Declarative layer description; only the fields matching `kind` are read.
struct LayerSpec {
  LayerKind kind;
  int in_channels = 0, out_channels = 0, kernel = 3, stride = 2;  // conv2d
  int in_features = 0, out_features = 0;                          // linear
  int concat_features = 0;                                        // concat

  static LayerSpec conv2d(int in_ch, int out_ch, int kernel = 3, int stride = 2);
  static LayerSpec relu() { return {LayerKind::Relu}; }
  static LayerSpec flatten() { return {LayerKind::Flatten}; }
  static LayerSpec linear(int in_f, int out_f);
  static LayerSpec softmax() { return {LayerKind::Softmax}; }
  static LayerSpec concat(int extra_features);
};

/// Per-parameter-tensor gradients plus the gradient w.r.t. the network input
/// (and the concat side input, when present).
struct Gradients {
  std::vector<Matrix> dW;  // one entry per layer; empty for non-parameter layers
  std::vector<Vector> db;
  Matrix input;  // batch x in_size
  Matrix aux;    // batch x concat_features, empty without a concat layer

  Scalar squared_norm() const;
  void scale(Scalar s);
  bool all_finite() const;
};

struct AdamState {
  std::vector<Matrix> mW, vW;
  std::vector<Vector> mb, vb;
  std::int64_t step = 0;
  Scalar beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

/// Fixed-vocabulary feedforward net over batched row-major inputs. A row is
/// one sample; spatial data is flattened HWC. Forward caches activations for
/// the following backward call. One network is owned by one training loop.
class Network {
 public:
  Network() = default;  // identity network, 0 parameters

  /// input_shape: {h, w, c} for spatial input or {n} for flat input.
  Network(std::vector<LayerSpec> specs, std::vector<int> input_shape, std::uint64_t seed);

  /// aux must be supplied iff the spec contains a concat layer.
  const Matrix& forward(const Matrix& input, const Matrix& aux = Matrix());

  /// Requires a preceding forward; output_grad shape must match its output.
  Gradients backward(const Matrix& output_grad);

  Gradients zero_gradients() const;

  int parameter_count() const;
  int input_size() const { return input_size_; }
  int output_size() const { return output_size_; }
  int aux_size() const { return aux_size_; }
  const std::vector<LayerSpec>& specs() const { return specs_; }

  AdamState make_adam_state() const;

  /// Standard bias-corrected Adam. Returns false (and leaves parameters and
  /// state untouched) when the gradients are not finite.
  bool adam_step(const Gradients& grads, AdamState& state, Scalar learning_rate);

  void copy_parameters_from(const Network& other);
  bool parameters_equal(const Network& other) const;
  bool parameters_finite() const;

  void save(std::ostream& os, const std::string& name) const;
  void load(std::istream& is, const std::string& name);

  // test hooks: flat access to every parameter scalar
  int flat_parameter_size() const { return parameter_count(); }
  Scalar get_parameter(int flat_index) const;
  void set_parameter(int flat_index, Scalar value);
  Scalar get_flat_gradient(const Gradients& g, int flat_index) const;

 private:
  struct Layer {
    LayerSpec spec;
    // resolved shapes
    int in_h = 0, in_w = 0, in_c = 0;
    int out_h = 0, out_w = 0, out_c = 0;
    int in_size = 0, out_size = 0;
    Matrix W;  // linear: out x in; conv: out_ch x (k*k*in_c)
    Vector b;
    Matrix cols;  // conv im2col cache, (batch*positions) x (k*k*in_c)
  };

  void im2col(const Matrix& X, const Layer& L, Matrix& cols) const;
  void col2im(const Matrix& dcols, const Layer& L, Matrix& dX) const;

  std::vector<LayerSpec> specs_;
  std::vector<Layer> layers_;
  std::vector<Matrix> acts_;  // acts_[i] = input of layer i; acts_.back() = output
  int input_size_ = 0, output_size_ = 0, aux_size_ = 0;
  int batch_ = 0;
  bool forward_done_ = false;
};

/// Global-norm gradient clipping across several gradient sets.
void clip_gradient_norm(std::vector<Gradients*> grads, Scalar max_norm);

void save_checkpoint(std::ostream& os, const std::vector<std::pair<std::string, const Network*>>& nets);
void load_checkpoint(std::istream& is, const std::vector<std::pair<std::string, Network*>>& nets);

}  // namespace relab
