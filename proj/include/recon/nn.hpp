#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recon/errors.hpp"
#include "recon/graph.hpp"
#include "recon/graph_io.hpp"
#include "recon/rng.hpp"

namespace recon::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A named parameter with its gradient accumulator and Adam moments.
struct Tensor {
  std::string name;
  Matrix value, grad, m, v;

  Tensor() = default;
  Tensor(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)),
        m(Matrix::Zero(rows, cols)),
        v(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

inline void check_cols(const Matrix& x, Eigen::Index want, const char* where) {
  if (x.cols() != want)
    throw ShapeError(std::string(where) + ": expected width " + std::to_string(want) + ", got " +
                     std::to_string(x.cols()));
}

/// y = x W + b. Weights uniform in ±sqrt(6 / (fan_in + fan_out)), bias in ±1/sqrt(fan_in).
struct Dense {
  Tensor W, b;

  Dense() = default;
  Dense(const std::string& name, int in, int out) : W(name + ".W", in, out), b(name + ".b", 1, out) {}

  int in() const { return static_cast<int>(W.value.rows()); }
  int out() const { return static_cast<int>(W.value.cols()); }

  void init(Rng& rng) {
    const double a = std::sqrt(6.0 / (in() + out()));
    for (Eigen::Index i = 0; i < W.value.size(); ++i) W.value.data()[i] = uniform_real(rng, -a, a);
    // Nonzero biases: with constant vertex inputs a bias-free ReLU stack is
    // positively homogeneous and collapses most structure at initialization.
    const double c = 1.0 / std::sqrt(static_cast<double>(in()));
    for (Eigen::Index i = 0; i < b.value.size(); ++i) b.value.data()[i] = uniform_real(rng, -c, c);
  }

  Matrix forward(const Matrix& x) const {
    check_cols(x, in(), W.name.c_str());
    Matrix y = x * W.value;
    y.rowwise() += b.value.row(0);
    return y;
  }

  Matrix backward(const Matrix& x, const Matrix& dy) {
    W.grad.noalias() += x.transpose() * dy;
    b.grad += dy.colwise().sum();
    return dy * W.value.transpose();
  }

  std::vector<Tensor*> params() { return {&W, &b}; }
};

/// Dense layers with ReLU between them; ReLU after the last layer only when
/// `relu_last`. An MLP with no layers is the identity.
struct MLP {
  std::vector<Dense> layers;
  bool relu_last = false;

  struct Cache {
    std::vector<Matrix> inputs;  // input of each layer (post-activation of the previous)
    std::vector<Matrix> pre;     // pre-activation output of each layer
  };

  MLP() = default;
  MLP(const std::string& name, std::vector<int> dims, bool relu_last_ = false) : relu_last(relu_last_) {
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
      layers.emplace_back(name + "." + std::to_string(i), dims[i], dims[i + 1]);
  }

  bool identity() const { return layers.empty(); }
  int out(int in) const { return layers.empty() ? in : layers.back().out(); }

  void init(Rng& rng) {
    for (auto& l : layers) l.init(rng);
  }

  bool relu_after(std::size_t i) const { return i + 1 < layers.size() || relu_last; }

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const {
    if (cache) {
      cache->inputs.clear();
      cache->pre.clear();
    }
    Matrix h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (cache) cache->inputs.push_back(h);
      Matrix z = layers[i].forward(h);
      if (cache) cache->pre.push_back(z);
      h = relu_after(i) ? Matrix(z.cwiseMax(0.0)) : z;
    }
    return h;
  }

  Matrix backward(const Cache& cache, const Matrix& dy) {
    Matrix d = dy;
    for (std::size_t i = layers.size(); i-- > 0;) {
      if (relu_after(i)) d = d.cwiseProduct((cache.pre[i].array() > 0.0).cast<double>().matrix());
      d = layers[i].backward(cache.inputs[i], d);
    }
    return d;
  }

  std::vector<Tensor*> params() {
    std::vector<Tensor*> out;
    for (auto& l : layers)
      for (auto* p : l.params()) out.push_back(p);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Message passing

/// (A + I) h
inline Matrix gin_aggregate(const Graph& g, const Matrix& h) {
  if (h.rows() != g.n()) throw ShapeError("gin_aggregate: feature rows != n");
  Matrix z = h;
  for (int v = 0; v < g.n(); ++v)
    for (Vertex u : g.neighbors(v)) z.row(v) += h.row(u);
  return z;
}

/// D^-1/2 (A + I) D^-1/2 h with degrees counted including the self-loop.
inline Matrix gcn_propagate(const Graph& g, const Matrix& h) {
  if (h.rows() != g.n()) throw ShapeError("gcn_propagate: feature rows != n");
  Matrix z(h.rows(), h.cols());
  for (int v = 0; v < g.n(); ++v) {
    const double dv = g.degree(v) + 1.0;
    z.row(v) = h.row(v) / dv;
    for (Vertex u : g.neighbors(v)) z.row(v) += h.row(u) / std::sqrt(dv * (g.degree(u) + 1.0));
  }
  return z;
}

/// Per-row standardization to zero mean and unit variance (no affine part).
inline Matrix standardize_rows(const Matrix& x, Matrix* normalized = nullptr, Eigen::VectorXd* inv_std = nullptr) {
  constexpr double eps = 1e-5;
  Matrix y(x.rows(), x.cols());
  Eigen::VectorXd is(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    is(r) = 1.0 / std::sqrt(var + eps);
    y.row(r) = (x.row(r).array() - mean) * is(r);
  }
  if (normalized) *normalized = y;
  if (inv_std) *inv_std = is;
  return y;
}

inline Matrix standardize_rows_backward(const Matrix& y, const Eigen::VectorXd& inv_std, const Matrix& dy) {
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_dy = dy.row(r).mean();
    const double mean_dyy = dy.row(r).cwiseProduct(y.row(r)).mean();
    dx.row(r) = inv_std(r) * (dy.row(r).array() - mean_dy - y.row(r).array() * mean_dyy);
  }
  return dx;
}

enum class ConvKind { gin, gcn };

inline ConvKind parse_conv(const std::string& s) {
  if (s == "gin") return ConvKind::gin;
  if (s == "gcn") return ConvKind::gcn;
  throw InvalidArgument("unknown conv kind '" + s + "' (expected gin|gcn)");
}

inline std::string to_string(ConvKind c) { return c == ConvKind::gin ? "gin" : "gcn"; }

/// Feature standardization inside conv layers: none, per vertex across
/// features, or per feature across the vertices of one graph.
enum class Norm { none, vertex, graph };

inline Norm parse_norm(const std::string& s) {
  if (s == "none") return Norm::none;
  if (s == "vertex") return Norm::vertex;
  if (s == "graph") return Norm::graph;
  throw InvalidArgument("unknown norm '" + s + "' (expected none|vertex|graph)");
}

inline std::string to_string(Norm n) { return n == Norm::none ? "none" : n == Norm::vertex ? "vertex" : "graph"; }

/// One message-passing layer.
///   GIN: relu(norm(MLP((A + I) h)))   with a two-layer MLP
///   GCN: relu(norm(Â h W + b))
struct ConvLayer {
  ConvKind kind = ConvKind::gin;
  MLP transform;
  Norm norm = Norm::none;

  struct Cache {
    Matrix aggregated;
    MLP::Cache mlp;
    Matrix pre;  // transform output
    Matrix normalized;
    Eigen::VectorXd inv_std;
  };

  ConvLayer() = default;
  ConvLayer(const std::string& name, ConvKind k, int in, int out, Norm norm_)
      : kind(k),
        transform(name, k == ConvKind::gin ? std::vector<int>{in, out, out} : std::vector<int>{in, out}, false),
        norm(norm_) {}

  int in() const { return transform.layers.front().in(); }
  int out() const { return transform.layers.back().out(); }

  Matrix forward(const Graph& g, const Matrix& h, Cache* cache = nullptr) const {
    check_cols(h, in(), "conv layer");
    Matrix agg = kind == ConvKind::gin ? gin_aggregate(g, h) : gcn_propagate(g, h);
    MLP::Cache mc;
    Matrix pre = transform.forward(agg, cache ? &mc : nullptr);
    Matrix y = pre;
    if (norm == Norm::vertex) {
      y = standardize_rows(pre, cache ? &cache->normalized : nullptr, cache ? &cache->inv_std : nullptr);
    } else if (norm == Norm::graph) {
      Matrix t = pre.transpose();
      Matrix yt = standardize_rows(t, cache ? &cache->normalized : nullptr, cache ? &cache->inv_std : nullptr);
      y = yt.transpose();
    }
    if (cache) {
      cache->aggregated = std::move(agg);
      cache->mlp = std::move(mc);
      cache->pre = y;
    }
    return y.cwiseMax(0.0);
  }

  /// Returns d(loss)/d(h).
  Matrix backward(const Graph& g, const Cache& cache, const Matrix& dy) {
    Matrix d = dy.cwiseProduct((cache.pre.array() > 0.0).cast<double>().matrix());
    if (norm == Norm::vertex) d = standardize_rows_backward(cache.normalized, cache.inv_std, d);
    if (norm == Norm::graph) {
      Matrix dt = d.transpose();
      d = standardize_rows_backward(cache.normalized, cache.inv_std, dt).transpose();
    }
    d = transform.backward(cache.mlp, d);
    // Both propagation operators are symmetric.
    return kind == ConvKind::gin ? gin_aggregate(g, d) : gcn_propagate(g, d);
  }

  std::vector<Tensor*> params() { return transform.params(); }
};

enum class Readout { sum, mean };

inline Readout parse_readout(const std::string& s) {
  if (s == "sum") return Readout::sum;
  if (s == "mean") return Readout::mean;
  throw InvalidArgument("unknown readout '" + s + "' (expected sum|mean)");
}

inline std::string to_string(Readout r) { return r == Readout::sum ? "sum" : "mean"; }

inline Matrix readout(const Matrix& h, Readout kind) {
  Matrix r = h.colwise().sum();
  if (kind == Readout::mean && h.rows() > 0) r /= static_cast<double>(h.rows());
  return r;
}

inline Matrix readout_backward(const Matrix& dr, Eigen::Index rows, Readout kind) {
  Matrix d = dr.replicate(rows, 1);
  if (kind == Readout::mean && rows > 0) d /= static_cast<double>(rows);
  return d;
}

struct GnnConfig {
  ConvKind conv = ConvKind::gin;
  int in_dim = 1;
  int hidden = 64;
  int layers = 4;
  Readout readout = Readout::sum;
  bool jumping_knowledge = true;
  Norm norm = Norm::none;
};

/// Vertex input features: attribute vectors as numbers, or the constant 1.
inline Matrix vertex_features(const Graph& g, int in_dim) {
  Matrix x = Matrix::Zero(g.n(), in_dim);
  for (int v = 0; v < g.n(); ++v) {
    auto a = g.attr(v);
    if (a.empty()) {
      x(v, 0) = 1.0;
      continue;
    }
    if (static_cast<int>(a.size()) != in_dim)
      throw ShapeError("vertex_features: attribute length " + std::to_string(a.size()) + " != in_dim " +
                       std::to_string(in_dim));
    for (int i = 0; i < in_dim; ++i) x(v, i) = a[i];
  }
  return x;
}

/// Graph encoder h^GNN: stacked conv layers, then readout of the last layer
/// or (with jumping knowledge) the concatenated readouts of every layer.
struct GnnModel {
  GnnConfig cfg;
  std::vector<ConvLayer> convs;

  struct Cache {
    std::vector<Matrix> h;  // h[0] input, h[i+1] output of layer i
    std::vector<ConvLayer::Cache> layers;
  };

  GnnModel() = default;
  explicit GnnModel(const GnnConfig& c, const std::string& name = "gnn") : cfg(c) {
    if (c.layers < 1 || c.hidden < 1 || c.in_dim < 1) throw ShapeError("gnn: layers, hidden and in_dim must be >= 1");
    for (int i = 0; i < c.layers; ++i)
      convs.emplace_back(name + ".conv" + std::to_string(i), c.conv, i == 0 ? c.in_dim : c.hidden, c.hidden,
                         c.norm);
  }

  int out_dim() const { return cfg.jumping_knowledge ? cfg.hidden * cfg.layers : cfg.hidden; }

  void init(Rng& rng) {
    for (auto& c : convs) c.transform.init(rng);
  }

  Matrix forward(const Graph& g, Cache* cache = nullptr) const {
    Matrix h = vertex_features(g, cfg.in_dim);
    if (cache) {
      cache->h.assign(1, h);
      cache->layers.assign(convs.size(), {});
    }
    Matrix out(1, out_dim());
    for (std::size_t i = 0; i < convs.size(); ++i) {
      h = convs[i].forward(g, h, cache ? &cache->layers[i] : nullptr);
      if (cache) cache->h.push_back(h);
      if (cfg.jumping_knowledge) out.block(0, i * cfg.hidden, 1, cfg.hidden) = readout(h, cfg.readout);
    }
    if (!cfg.jumping_knowledge) out = readout(h, cfg.readout);
    return out;
  }

  void backward(const Graph& g, const Cache& cache, const Matrix& dout) {
    const Eigen::Index n = g.n();
    Matrix dh = Matrix::Zero(n, cfg.hidden);
    if (!cfg.jumping_knowledge) dh = readout_backward(dout, n, cfg.readout);
    for (std::size_t i = convs.size(); i-- > 0;) {
      if (cfg.jumping_knowledge) dh += readout_backward(dout.block(0, i * cfg.hidden, 1, cfg.hidden), n, cfg.readout);
      dh = convs[i].backward(g, cache.layers[i], dh);
    }
  }

  std::vector<Tensor*> params() {
    std::vector<Tensor*> out;
    for (auto& c : convs)
      for (auto* p : c.params()) out.push_back(p);
    return out;
  }
};

enum class Pooling { mean, sum };

inline Pooling parse_pooling(const std::string& s) {
  if (s == "mean") return Pooling::mean;
  if (s == "sum") return Pooling::sum;
  throw InvalidArgument("unknown pooling '" + s + "' (expected mean|sum)");
}

inline std::string to_string(Pooling p) { return p == Pooling::mean ? "mean" : "sum"; }

/// rho(pool(phi(x) for x in xs)).
struct DeepSetsHead {
  MLP phi, rho;
  Pooling pooling = Pooling::mean;

  struct Cache {
    Matrix xs;
    MLP::Cache phi, rho;
    Matrix pooled;
  };

  Matrix pool(const Matrix& ys) const {
    Matrix p = ys.colwise().sum();
    if (pooling == Pooling::mean) p /= static_cast<double>(ys.rows());
    return p;
  }

  /// Rows of xs are the multiset elements.
  Matrix apply(const Matrix& xs, Cache* cache = nullptr) const {
    if (xs.rows() == 0) throw InvalidArgument("deepsets_apply: empty multiset");
    Matrix ys = phi.forward(xs, cache ? &cache->phi : nullptr);
    Matrix pooled = pool(ys);
    if (cache) {
      cache->xs = xs;
      cache->pooled = pooled;
    }
    return rho.forward(pooled, cache ? &cache->rho : nullptr);
  }

  /// Returns d(loss)/d(xs).
  Matrix backward(const Cache& cache, const Matrix& dout) {
    Matrix dp = rho.backward(cache.rho, dout);
    Matrix dys = dp.replicate(cache.xs.rows(), 1);
    if (pooling == Pooling::mean) dys /= static_cast<double>(cache.xs.rows());
    return phi.backward(cache.phi, dys);
  }

  std::vector<Tensor*> params() {
    auto out = phi.params();
    for (auto* p : rho.params()) out.push_back(p);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Losses and optimizer

struct LossValue {
  double value = 0;
  Matrix grad;  // d(loss)/d(prediction), same shape as the prediction
};

/// Softmax cross-entropy of a 1 x C logit row against class `y`.
inline LossValue cross_entropy(const Matrix& logits, int y) {
  if (logits.rows() != 1 || y < 0 || y >= logits.cols())
    throw ShapeError("cross_entropy: need a 1 x C logit row and 0 <= y < C");
  const double mx = logits.maxCoeff();
  Eigen::RowVectorXd e = (logits.row(0).array() - mx).exp();
  const double z = e.sum();
  LossValue out;
  out.value = std::log(z) - (logits(0, y) - mx);
  out.grad = (e / z);
  out.grad(0, y) -= 1.0;
  return out;
}

/// Mean squared error over the entries of a 1 x D prediction.
inline LossValue mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw ShapeError("mse: shape mismatch");
  LossValue out;
  Matrix diff = pred - target;
  out.value = diff.squaredNorm() / static_cast<double>(diff.size());
  out.grad = diff * (2.0 / static_cast<double>(diff.size()));
  return out;
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction; moments live in the tensors.
struct Adam {
  AdamConfig cfg;
  long long t = 0;

  void step(const std::vector<Tensor*>& params) {
    ++t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (Tensor* p : params) {
      p->m = cfg.beta1 * p->m + (1.0 - cfg.beta1) * p->grad;
      p->v = cfg.beta2 * p->v + (1.0 - cfg.beta2) * p->grad.cwiseAbs2();
      p->value.array() -= cfg.lr * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + cfg.eps);
    }
  }
};

inline void zero_grads(const std::vector<Tensor*>& params) {
  for (Tensor* p : params) p->zero_grad();
}

// ---------------------------------------------------------------------------
// Checkpoints: {"shapes": {name: [rows, cols]}, "params": {name: [values]}}

inline json params_to_json(const std::vector<Tensor*>& params) {
  json shapes = json::object(), values = json::object();
  for (const Tensor* p : params) {
    shapes[p->name] = {p->value.rows(), p->value.cols()};
    values[p->name] = std::vector<double>(p->value.data(), p->value.data() + p->value.size());
  }
  return {{"shapes", shapes}, {"params", values}};
}

inline void params_from_json(const std::vector<Tensor*>& params, const json& j) {
  const json& shapes = j.at("shapes");
  const json& values = j.at("params");
  if (shapes.size() != params.size())
    throw ShapeError("checkpoint: " + std::to_string(shapes.size()) + " tensors, model has " +
                     std::to_string(params.size()));
  for (Tensor* p : params) {
    if (!shapes.contains(p->name)) throw ShapeError("checkpoint: missing tensor " + p->name);
    auto shape = shapes[p->name].get<std::vector<Eigen::Index>>();
    if (shape.size() != 2 || shape[0] != p->value.rows() || shape[1] != p->value.cols())
      throw ShapeError("checkpoint: shape mismatch for " + p->name);
    auto data = values.at(p->name).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != p->value.size())
      throw ShapeError("checkpoint: value count mismatch for " + p->name);
    std::copy(data.begin(), data.end(), p->value.data());
  }
}

}  // namespace recon::nn
