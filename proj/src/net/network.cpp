#include "relab/net/network.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace relab {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Linear: return "linear";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::Concat: return "concat";
  }
  return "?";
}

LayerSpec LayerSpec::conv2d(int in_ch, int out_ch, int kernel, int stride) {
  LayerSpec s{LayerKind::Conv2d};
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::linear(int in_f, int out_f) {
  LayerSpec s{LayerKind::Linear};
  s.in_features = in_f;
  s.out_features = out_f;
  return s;
}

LayerSpec LayerSpec::concat(int extra_features) {
  LayerSpec s{LayerKind::Concat};
  s.concat_features = extra_features;
  return s;
}

Scalar Gradients::squared_norm() const {
  Scalar n = 0;
  for (const auto& m : dW) n += m.squaredNorm();
  for (const auto& v : db) n += v.squaredNorm();
  return n;
}

void Gradients::scale(Scalar s) {
  for (auto& m : dW) m *= s;
  for (auto& v : db) v *= s;
}

bool Gradients::all_finite() const {
  for (const auto& m : dW)
    if (m.size() && !m.allFinite()) return false;
  for (const auto& v : db)
    if (v.size() && !v.allFinite()) return false;
  return true;
}

namespace {

[[noreturn]] void chain_error(int idx, const LayerSpec& spec, const std::string& got,
                              const std::string& want) {
  std::ostringstream ss;
  ss << "build_network: layer " << idx << " (" << layer_kind_name(spec.kind) << ") expects "
     << want << " but preceding layer produces " << got;
  throw std::invalid_argument(ss.str());
}

struct ShapeCursor {
  bool spatial;
  int h, w, c, flat;
  std::string str() const {
    std::ostringstream ss;
    if (spatial)
      ss << h << "x" << w << "x" << c;
    else
      ss << flat;
    return ss.str();
  }
};

}  // namespace

Network::Network(std::vector<LayerSpec> specs, std::vector<int> input_shape, std::uint64_t seed)
    : specs_(std::move(specs)) {
  ShapeCursor cur{};
  if (input_shape.size() == 3) {
    cur = {true, input_shape[0], input_shape[1], input_shape[2], 0};
    input_size_ = cur.h * cur.w * cur.c;
  } else if (input_shape.size() == 1) {
    cur = {false, 0, 0, 0, input_shape[0]};
    input_size_ = cur.flat;
  } else {
    throw std::invalid_argument("build_network: input shape must be {h,w,c} or {n}");
  }
  if (input_size_ <= 0) throw std::invalid_argument("build_network: empty input shape");

  std::mt19937_64 rng(seed);
  int idx = 0;
  for (const LayerSpec& spec : specs_) {
    Layer L;
    L.spec = spec;
    L.in_size = cur.spatial ? cur.h * cur.w * cur.c : cur.flat;
    switch (spec.kind) {
      case LayerKind::Conv2d: {
        if (!cur.spatial) chain_error(idx, spec, cur.str(), "spatial input");
        if (cur.c != spec.in_channels)
          chain_error(idx, spec, cur.str(), std::to_string(spec.in_channels) + " channels");
        if (cur.h < spec.kernel || cur.w < spec.kernel)
          chain_error(idx, spec, cur.str(), "input at least kernel-sized");
        L.in_h = cur.h;
        L.in_w = cur.w;
        L.in_c = cur.c;
        L.out_h = (cur.h - spec.kernel) / spec.stride + 1;
        L.out_w = (cur.w - spec.kernel) / spec.stride + 1;
        L.out_c = spec.out_channels;
        L.W.resize(spec.out_channels, spec.kernel * spec.kernel * spec.in_channels);
        L.b.resize(spec.out_channels);
        cur = {true, L.out_h, L.out_w, L.out_c, 0};
        break;
      }
      case LayerKind::Relu:
      case LayerKind::Softmax:
        break;
      case LayerKind::Flatten:
        if (cur.spatial) cur = {false, 0, 0, 0, cur.h * cur.w * cur.c};
        break;
      case LayerKind::Linear: {
        if (cur.spatial) chain_error(idx, spec, cur.str(), "flat input (insert flatten)");
        if (cur.flat != spec.in_features)
          chain_error(idx, spec, cur.str(), std::to_string(spec.in_features) + " features");
        L.W.resize(spec.out_features, spec.in_features);
        L.b.resize(spec.out_features);
        cur = {false, 0, 0, 0, spec.out_features};
        break;
      }
      case LayerKind::Concat: {
        if (cur.spatial) chain_error(idx, spec, cur.str(), "flat input (insert flatten)");
        if (spec.concat_features <= 0)
          throw std::invalid_argument("build_network: concat_features must be positive");
        if (aux_size_ != 0)
          throw std::invalid_argument("build_network: at most one concat layer supported");
        aux_size_ = spec.concat_features;
        cur = {false, 0, 0, 0, cur.flat + spec.concat_features};
        break;
      }
    }
    L.out_size = cur.spatial ? cur.h * cur.w * cur.c : cur.flat;
    if (L.W.size()) {
      int fan_in = (spec.kind == LayerKind::Conv2d)
                       ? spec.kernel * spec.kernel * spec.in_channels
                       : spec.in_features;
      Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(fan_in));
      std::uniform_real_distribution<Scalar> dist(-bound, bound);
      for (Eigen::Index i = 0; i < L.W.rows(); ++i)
        for (Eigen::Index j = 0; j < L.W.cols(); ++j) L.W(i, j) = dist(rng);
      for (Eigen::Index i = 0; i < L.b.size(); ++i) L.b(i) = dist(rng);
    }
    layers_.push_back(std::move(L));
    ++idx;
  }
  output_size_ = layers_.empty() ? input_size_ : layers_.back().out_size;
}

void Network::im2col(const Matrix& X, const Layer& L, Matrix& cols) const {
  const int k = L.spec.kernel, s = L.spec.stride;
  const int P = L.out_h * L.out_w;
  const int patch = k * k * L.in_c;
  const Eigen::Index batch = X.rows();
  cols.resize(batch * P, patch);
  const int run = k * L.in_c;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Scalar* src = X.data() + b * X.cols();
    for (int oy = 0; oy < L.out_h; ++oy) {
      for (int ox = 0; ox < L.out_w; ++ox) {
        Scalar* dst = cols.data() + (b * P + oy * L.out_w + ox) * patch;
        for (int ky = 0; ky < k; ++ky) {
          const Scalar* row = src + ((oy * s + ky) * L.in_w + ox * s) * L.in_c;
          std::copy(row, row + run, dst + ky * run);
        }
      }
    }
  }
}

void Network::col2im(const Matrix& dcols, const Layer& L, Matrix& dX) const {
  const int k = L.spec.kernel, s = L.spec.stride;
  const int P = L.out_h * L.out_w;
  const int patch = k * k * L.in_c;
  const Eigen::Index batch = dX.rows();
  const int run = k * L.in_c;
  dX.setZero();
  for (Eigen::Index b = 0; b < batch; ++b) {
    Scalar* dst = dX.data() + b * dX.cols();
    for (int oy = 0; oy < L.out_h; ++oy) {
      for (int ox = 0; ox < L.out_w; ++ox) {
        const Scalar* src = dcols.data() + (b * P + oy * L.out_w + ox) * patch;
        for (int ky = 0; ky < k; ++ky) {
          Scalar* row = dst + ((oy * s + ky) * L.in_w + ox * s) * L.in_c;
          for (int j = 0; j < run; ++j) row[j] += src[ky * run + j];
        }
      }
    }
  }
}

const Matrix& Network::forward(const Matrix& input, const Matrix& aux) {
  if (input.cols() != input_size_)
    throw std::invalid_argument("forward: input width " + std::to_string(input.cols()) +
                                " does not match network input " + std::to_string(input_size_));
  if (!input.allFinite()) throw std::invalid_argument("forward: non-finite input");
  if (aux_size_ == 0 && aux.size() != 0)
    throw std::invalid_argument("forward: aux input supplied but no concat layer");
  if (aux_size_ != 0 && (aux.rows() != input.rows() || aux.cols() != aux_size_))
    throw std::invalid_argument("forward: aux input shape mismatch");

  batch_ = static_cast<int>(input.rows());
  acts_.assign(layers_.size() + 1, Matrix());
  acts_[0] = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Layer& L = layers_[i];
    const Matrix& X = acts_[i];
    Matrix& Y = acts_[i + 1];
    switch (L.spec.kind) {
      case LayerKind::Conv2d: {
        im2col(X, L, L.cols);
        Y.resize(batch_, L.out_size);
        Eigen::Map<Matrix> Yr(Y.data(), static_cast<Eigen::Index>(batch_) * L.out_h * L.out_w,
                              L.out_c);
        Yr.noalias() = L.cols * L.W.transpose();
        Yr.rowwise() += L.b.transpose();
        break;
      }
      case LayerKind::Relu:
        Y = X.cwiseMax(Scalar(0));
        break;
      case LayerKind::Flatten:
        Y = X;
        break;
      case LayerKind::Linear:
        Y.resize(batch_, L.out_size);
        Y.noalias() = X * L.W.transpose();
        Y.rowwise() += L.b.transpose();
        break;
      case LayerKind::Softmax: {
        Y.resize(batch_, L.out_size);
        for (int r = 0; r < batch_; ++r) {
          ArrayX row = X.row(r).transpose().array();
          row -= row.maxCoeff();
          ArrayX e = row.exp();
          Y.row(r) = (e / e.sum()).matrix().transpose();
        }
        break;
      }
      case LayerKind::Concat: {
        Y.resize(batch_, L.out_size);
        Y.leftCols(L.in_size) = X;
        Y.rightCols(aux_size_) = aux;
        break;
      }
    }
  }
  forward_done_ = true;
  return acts_.back();
}

Gradients Network::zero_gradients() const {
  Gradients g;
  g.dW.resize(layers_.size());
  g.db.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].W.size()) {
      g.dW[i] = Matrix::Zero(layers_[i].W.rows(), layers_[i].W.cols());
      g.db[i] = Vector::Zero(layers_[i].b.size());
    }
  }
  return g;
}

Gradients Network::backward(const Matrix& output_grad) {
  if (!forward_done_) throw std::logic_error("backward called before forward");
  if (output_grad.rows() != batch_ || output_grad.cols() != output_size_)
    throw std::invalid_argument("backward: output gradient shape mismatch");

  Gradients g = zero_gradients();
  Matrix d = output_grad;
  for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
    Layer& L = layers_[i];
    const Matrix& X = acts_[i];
    const Matrix& Y = acts_[i + 1];
    switch (L.spec.kind) {
      case LayerKind::Conv2d: {
        Eigen::Map<const Matrix> dYr(d.data(), static_cast<Eigen::Index>(batch_) * L.out_h * L.out_w,
                                     L.out_c);
        g.dW[i].noalias() = dYr.transpose() * L.cols;
        g.db[i] = dYr.colwise().sum().transpose();
        Matrix dcols(dYr.rows(), L.W.cols());
        dcols.noalias() = dYr * L.W;
        Matrix dX(batch_, L.in_size);
        col2im(dcols, L, dX);
        d = std::move(dX);
        break;
      }
      case LayerKind::Relu:
        d = d.cwiseProduct((Y.array() > Scalar(0)).cast<Scalar>().matrix());
        break;
      case LayerKind::Flatten:
        break;
      case LayerKind::Linear: {
        g.dW[i].noalias() = d.transpose() * X;
        g.db[i] = d.colwise().sum().transpose();
        Matrix dX(batch_, L.in_size);
        dX.noalias() = d * L.W;
        d = std::move(dX);
        break;
      }
      case LayerKind::Softmax: {
        Matrix dX(batch_, L.in_size);
        for (int r = 0; r < batch_; ++r) {
          Scalar dot = d.row(r).dot(Y.row(r));
          dX.row(r) = Y.row(r).cwiseProduct(d.row(r).array().matrix() -
                                            Matrix::Constant(1, L.in_size, dot));
        }
        d = std::move(dX);
        break;
      }
      case LayerKind::Concat: {
        g.aux = d.rightCols(aux_size_);
        Matrix dX = d.leftCols(L.in_size);
        d = std::move(dX);
        break;
      }
    }
  }
  g.input = std::move(d);
  return g;
}

int Network::parameter_count() const {
  int n = 0;
  for (const auto& L : layers_) n += static_cast<int>(L.W.size() + L.b.size());
  return n;
}

AdamState Network::make_adam_state() const {
  AdamState s;
  for (const auto& L : layers_) {
    s.mW.push_back(Matrix::Zero(L.W.rows(), L.W.cols()));
    s.vW.push_back(Matrix::Zero(L.W.rows(), L.W.cols()));
    s.mb.push_back(Vector::Zero(L.b.size()));
    s.vb.push_back(Vector::Zero(L.b.size()));
  }
  return s;
}

bool Network::adam_step(const Gradients& grads, AdamState& state, Scalar lr) {
  if (!grads.all_finite()) return false;
  state.step += 1;
  const Scalar b1 = state.beta1, b2 = state.beta2;
  const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(state.step));
  const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(state.step));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Layer& L = layers_[i];
    if (!L.W.size()) continue;
    state.mW[i] = b1 * state.mW[i] + (1 - b1) * grads.dW[i];
    state.vW[i] = b2 * state.vW[i].array().matrix() +
                  (1 - b2) * grads.dW[i].cwiseProduct(grads.dW[i]);
    L.W.array() -= lr * (state.mW[i].array() / c1) /
                   ((state.vW[i].array() / c2).sqrt() + state.eps);
    state.mb[i] = b1 * state.mb[i] + (1 - b1) * grads.db[i];
    state.vb[i] = b2 * state.vb[i] + (1 - b2) * grads.db[i].cwiseProduct(grads.db[i]);
    L.b.array() -= lr * (state.mb[i].array() / c1) /
                   ((state.vb[i].array() / c2).sqrt() + state.eps);
  }
  return true;
}

void Network::copy_parameters_from(const Network& other) {
  if (other.layers_.size() != layers_.size())
    throw std::invalid_argument("copy_parameters_from: layer count mismatch");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].W = other.layers_[i].W;
    layers_[i].b = other.layers_[i].b;
  }
}

bool Network::parameters_equal(const Network& other) const {
  if (other.layers_.size() != layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].W != other.layers_[i].W) return false;
    if (layers_[i].b != other.layers_[i].b) return false;
  }
  return true;
}

bool Network::parameters_finite() const {
  for (const auto& L : layers_) {
    if (L.W.size() && !L.W.allFinite()) return false;
    if (L.b.size() && !L.b.allFinite()) return false;
  }
  return true;
}

Scalar Network::get_parameter(int flat_index) const {
  for (const auto& L : layers_) {
    int nw = static_cast<int>(L.W.size());
    int nb = static_cast<int>(L.b.size());
    if (flat_index < nw) return L.W.data()[flat_index];
    flat_index -= nw;
    if (flat_index < nb) return L.b(flat_index);
    flat_index -= nb;
  }
  throw std::out_of_range("get_parameter");
}

void Network::set_parameter(int flat_index, Scalar value) {
  for (auto& L : layers_) {
    int nw = static_cast<int>(L.W.size());
    int nb = static_cast<int>(L.b.size());
    if (flat_index < nw) {
      L.W.data()[flat_index] = value;
      return;
    }
    flat_index -= nw;
    if (flat_index < nb) {
      L.b(flat_index) = value;
      return;
    }
    flat_index -= nb;
  }
  throw std::out_of_range("set_parameter");
}

Scalar Network::get_flat_gradient(const Gradients& g, int flat_index) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    int nw = static_cast<int>(layers_[i].W.size());
    int nb = static_cast<int>(layers_[i].b.size());
    if (flat_index < nw) return g.dW[i].data()[flat_index];
    flat_index -= nw;
    if (flat_index < nb) return g.db[i](flat_index);
    flat_index -= nb;
  }
  throw std::out_of_range("get_flat_gradient");
}

void clip_gradient_norm(std::vector<Gradients*> grads, Scalar max_norm) {
  Scalar sq = 0;
  for (const Gradients* g : grads) sq += g->squared_norm();
  Scalar norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    Scalar s = max_norm / norm;
    for (Gradients* g : grads) g->scale(s);
  }
}

namespace {

void write_values(std::ostream& os, const Scalar* p, Eigen::Index n) {
  char buf[48];
  for (Eigen::Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%a", p[i]);
    os << buf << (i + 1 == n ? '\n' : ' ');
  }
  if (n == 0) os << '\n';
}

void read_values(std::istream& is, Scalar* p, Eigen::Index n) {
  std::string tok;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(is >> tok)) throw std::runtime_error("checkpoint: truncated tensor data");
    p[i] = std::strtod(tok.c_str(), nullptr);
  }
}

}  // namespace

void Network::save(std::ostream& os, const std::string& name) const {
  os << "net " << name << " layers " << layers_.size() << " params " << parameter_count() << "\n";
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& L = layers_[i];
    if (!L.W.size()) continue;
    os << "tensor " << i << " W " << L.W.rows() << " " << L.W.cols() << "\n";
    write_values(os, L.W.data(), L.W.size());
    os << "tensor " << i << " b " << L.b.size() << "\n";
    write_values(os, L.b.data(), L.b.size());
  }
}

void Network::load(std::istream& is, const std::string& name) {
  std::string tok, got_name;
  std::size_t nlayers;
  int nparams;
  is >> tok >> got_name >> tok >> nlayers >> tok >> nparams;
  if (got_name != name || nlayers != layers_.size() || nparams != parameter_count())
    throw std::runtime_error("checkpoint: header mismatch for net '" + name + "'");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Layer& L = layers_[i];
    if (!L.W.size()) continue;
    std::size_t idx;
    Eigen::Index r, c, n;
    is >> tok >> idx >> tok >> r >> c;
    if (idx != i || r != L.W.rows() || c != L.W.cols())
      throw std::runtime_error("checkpoint: W shape mismatch at layer " + std::to_string(i));
    read_values(is, L.W.data(), L.W.size());
    is >> tok >> idx >> tok >> n;
    if (idx != i || n != L.b.size())
      throw std::runtime_error("checkpoint: b shape mismatch at layer " + std::to_string(i));
    read_values(is, L.b.data(), L.b.size());
  }
}

void save_checkpoint(std::ostream& os,
                     const std::vector<std::pair<std::string, const Network*>>& nets) {
  os << "relab-checkpoint v1 nets " << nets.size() << "\n";
  for (const auto& [name, net] : nets) net->save(os, name);
  os << "end\n";
}

void load_checkpoint(std::istream& is, const std::vector<std::pair<std::string, Network*>>& nets) {
  std::string magic, ver, tok;
  std::size_t n;
  is >> magic >> ver >> tok >> n;
  if (magic != "relab-checkpoint" || ver != "v1")
    throw std::runtime_error("checkpoint: bad header");
  if (n != nets.size()) throw std::runtime_error("checkpoint: net count mismatch");
  for (const auto& [name, net] : nets) net->load(is, name);
  is >> tok;
  if (tok != "end") throw std::runtime_error("checkpoint: missing trailer");
}

}  // namespace relab
