#include "s2p/gradengine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "s2p/errors.hpp"

namespace s2p::grad {

Node* Graph::emplace(Node node) {
  node.grad = Matrix(node.value.rows(), node.value.cols());
  nodes_.push_back(std::move(node));
  return &nodes_.back();
}

Node* Graph::param(ParamTensor& tensor) {
  Node n;
  n.op = Op::kParam;
  n.value = tensor.value;
  n.bound = &tensor;
  return emplace(std::move(n));
}

Node* Graph::constant(Matrix value) {
  Node n;
  n.op = Op::kConst;
  n.value = std::move(value);
  return emplace(std::move(n));
}

Node* Graph::matmul(Node* a, Node* b) {
  if (a->value.cols() != b->value.rows()) {
    throw ShapeError("matmul: " + std::to_string(a->value.rows()) + "x" +
                     std::to_string(a->value.cols()) + " * " + std::to_string(b->value.rows()) +
                     "x" + std::to_string(b->value.cols()));
  }
  Node n;
  n.op = Op::kMatmul;
  n.a = a;
  n.b = b;
  n.value = Matrix(a->value.rows(), b->value.cols());
  Node* out = emplace(std::move(n));
  compute(*out);
  return out;
}

Node* Graph::add(Node* a, Node* b) {
  if (!a->value.same_shape(b->value)) throw ShapeError("add: operand shapes differ");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.value = Matrix(a->value.rows(), a->value.cols());
  Node* out = emplace(std::move(n));
  compute(*out);
  return out;
}

Node* Graph::mul(Node* a, Node* b) {
  if (!a->value.same_shape(b->value)) throw ShapeError("elementwise mul: operand shapes differ");
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.value = Matrix(a->value.rows(), a->value.cols());
  Node* out = emplace(std::move(n));
  compute(*out);
  return out;
}

Node* Graph::affine(Node* w, Node* x, Node* bias) {
  if (w->value.cols() != x->value.rows()) throw ShapeError("affine: W and x are incompatible");
  if (bias->value.rows() != w->value.rows() || bias->value.cols() != 1) {
    throw ShapeError("affine: bias must be a column vector matching W's rows");
  }
  Node n;
  n.op = Op::kAffine;
  n.a = w;
  n.b = x;
  n.c = bias;
  n.value = Matrix(w->value.rows(), x->value.cols());
  Node* out = emplace(std::move(n));
  compute(*out);
  return out;
}

Node* Graph::moving_average(Node* x, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw ShapeError("moving average kernel must be odd and >= 1");
  Node n;
  n.op = Op::kMovingAvg;
  n.a = x;
  n.kernel = kernel;
  n.value = Matrix(x->value.rows(), x->value.cols());
  Node* out = emplace(std::move(n));
  compute(*out);
  return out;
}

Node* Graph::maxpool_time(Node* x, int window) {
  if (window < 1 || x->value.rows() % window != 0) {
    throw ShapeError("maxpool window " + std::to_string(window) + " does not divide " +
                     std::to_string(x->value.rows()) + " rows");
  }
  Node n;
  n.op = Op::kMaxPool;
  n.a = x;
  n.kernel = window;
  n.value = Matrix(x->value.rows() / window, x->value.cols());
  n.argmax.assign(n.value.size(), 0);
  Node* out = emplace(std::move(n));
  compute(*out);
  return out;
}

Node* Graph::mse(Node* a, Node* b) {
  if (!a->value.same_shape(b->value)) throw ShapeError("mse: operand shapes differ");
  Node n;
  n.op = Op::kMse;
  n.a = a;
  n.b = b;
  n.value = Matrix(1, 1);
  Node* out = emplace(std::move(n));
  compute(*out);
  return out;
}

Node* Graph::scale_add(Node* a, double s1, Node* b, double s2) {
  if (!a->value.same_shape(b->value)) throw ShapeError("scale_add: operand shapes differ");
  Node n;
  n.op = Op::kScaleAdd;
  n.a = a;
  n.b = b;
  n.s1 = s1;
  n.s2 = s2;
  n.value = Matrix(a->value.rows(), a->value.cols());
  Node* out = emplace(std::move(n));
  compute(*out);
  return out;
}

Node* Graph::tanh(Node* x) {
  Node n;
  n.op = Op::kTanh;
  n.a = x;
  n.value = Matrix(x->value.rows(), x->value.cols());
  Node* out = emplace(std::move(n));
  compute(*out);
  return out;
}

Node* Graph::clamp_min(Node* x, double floor) {
  Node n;
  n.op = Op::kClampMin;
  n.a = x;
  n.s1 = floor;
  n.value = Matrix(x->value.rows(), x->value.cols());
  n.pass_mask.assign(n.value.size(), true);
  Node* out = emplace(std::move(n));
  compute(*out);
  return out;
}

void Graph::compute(Node& n) {
  switch (n.op) {
    case Op::kParam:
      n.value = n.bound->value;
      break;
    case Op::kConst:
      break;
    case Op::kMatmul:
      n.value.zero();
      add_matmul(n.value, n.a->value, n.b->value);
      break;
    case Op::kAdd: {
      const std::size_t sz = n.value.size();
      for (std::size_t i = 0; i < sz; ++i) n.value.data()[i] = n.a->value.data()[i] + n.b->value.data()[i];
      break;
    }
    case Op::kMul: {
      const std::size_t sz = n.value.size();
      for (std::size_t i = 0; i < sz; ++i) n.value.data()[i] = n.a->value.data()[i] * n.b->value.data()[i];
      break;
    }
    case Op::kAffine: {
      n.value.zero();
      add_matmul(n.value, n.a->value, n.b->value);
      for (int r = 0; r < n.value.rows(); ++r) {
        const double bv = n.c->value(r, 0);
        double* row = n.value.row(r);
        for (int j = 0; j < n.value.cols(); ++j) row[j] += bv;
      }
      break;
    }
    case Op::kMovingAvg: {
      const Matrix& x = n.a->value;
      const int rows = x.rows(), cols = x.cols(), half = n.kernel / 2;
      for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < cols; ++j) {
          double acc = 0.0;
          for (int d = -half; d <= half; ++d) {
            const int rr = std::clamp(r + d, 0, rows - 1);
            acc += x(rr, j);
          }
          n.value(r, j) = acc / n.kernel;
        }
      }
      break;
    }
    case Op::kMaxPool: {
      const Matrix& x = n.a->value;
      const int days = n.value.rows(), cols = x.cols(), w = n.kernel;
      for (int d = 0; d < days; ++d) {
        for (int j = 0; j < cols; ++j) {
          int best = d * w;
          double bv = x(best, j);
          for (int r = d * w + 1; r < (d + 1) * w; ++r) {
            if (x(r, j) > bv) {  // strict: earliest index wins ties
              bv = x(r, j);
              best = r;
            }
          }
          n.value(d, j) = bv;
          n.argmax[static_cast<std::size_t>(d) * cols + j] = best;
        }
      }
      break;
    }
    case Op::kMse: {
      const std::size_t sz = n.a->value.size();
      double acc = 0.0;
      for (std::size_t i = 0; i < sz; ++i) {
        const double d = n.a->value.data()[i] - n.b->value.data()[i];
        acc += d * d;
      }
      n.value(0, 0) = acc / static_cast<double>(sz);
      break;
    }
    case Op::kScaleAdd: {
      const std::size_t sz = n.value.size();
      for (std::size_t i = 0; i < sz; ++i) {
        n.value.data()[i] = n.s1 * n.a->value.data()[i] + n.s2 * n.b->value.data()[i];
      }
      break;
    }
    case Op::kTanh: {
      const std::size_t sz = n.value.size();
      for (std::size_t i = 0; i < sz; ++i) n.value.data()[i] = std::tanh(n.a->value.data()[i]);
      break;
    }
    case Op::kClampMin: {
      const std::size_t sz = n.value.size();
      for (std::size_t i = 0; i < sz; ++i) {
        const double v = n.a->value.data()[i];
        const bool pass = v >= n.s1;
        n.pass_mask[i] = pass;
        n.value.data()[i] = pass ? v : n.s1;
      }
      break;
    }
  }
}

void Graph::forward() {
  for (Node& n : nodes_) compute(n);
}

void Graph::backward(Node* loss) {
  if (loss->value.rows() != 1 || loss->value.cols() != 1) {
    throw ShapeError("backward requires a scalar loss node");
  }
  for (Node& n : nodes_) n.grad.zero();
  loss->grad(0, 0) = 1.0;

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = *it;
    switch (n.op) {
      case Op::kParam:
      case Op::kConst:
        break;
      case Op::kMatmul:
        add_matmul_nt(n.a->grad, n.grad, n.b->value);
        add_matmul_tn(n.b->grad, n.a->value, n.grad);
        break;
      case Op::kAdd:
        axpy(n.a->grad, 1.0, n.grad);
        axpy(n.b->grad, 1.0, n.grad);
        break;
      case Op::kMul: {
        const std::size_t sz = n.grad.size();
        for (std::size_t i = 0; i < sz; ++i) {
          n.a->grad.data()[i] += n.grad.data()[i] * n.b->value.data()[i];
          n.b->grad.data()[i] += n.grad.data()[i] * n.a->value.data()[i];
        }
        break;
      }
      case Op::kAffine: {
        add_matmul_nt(n.a->grad, n.grad, n.b->value);
        add_matmul_tn(n.b->grad, n.a->value, n.grad);
        for (int r = 0; r < n.grad.rows(); ++r) {
          const double* row = n.grad.row(r);
          double acc = 0.0;
          for (int j = 0; j < n.grad.cols(); ++j) acc += row[j];
          n.c->grad(r, 0) += acc;
        }
        break;
      }
      case Op::kMovingAvg: {
        const int rows = n.grad.rows(), cols = n.grad.cols(), half = n.kernel / 2;
        const double inv = 1.0 / n.kernel;
        for (int r = 0; r < rows; ++r) {
          for (int j = 0; j < cols; ++j) {
            const double g = n.grad(r, j) * inv;
            for (int d = -half; d <= half; ++d) {
              n.a->grad(std::clamp(r + d, 0, rows - 1), j) += g;
            }
          }
        }
        break;
      }
      case Op::kMaxPool: {
        const int days = n.grad.rows(), cols = n.grad.cols();
        for (int d = 0; d < days; ++d) {
          for (int j = 0; j < cols; ++j) {
            n.a->grad(n.argmax[static_cast<std::size_t>(d) * cols + j], j) += n.grad(d, j);
          }
        }
        break;
      }
      case Op::kMse: {
        const double g = n.grad(0, 0) * 2.0 / static_cast<double>(n.a->value.size());
        const std::size_t sz = n.a->value.size();
        for (std::size_t i = 0; i < sz; ++i) {
          const double d = g * (n.a->value.data()[i] - n.b->value.data()[i]);
          n.a->grad.data()[i] += d;
          n.b->grad.data()[i] -= d;
        }
        break;
      }
      case Op::kScaleAdd:
        axpy(n.a->grad, n.s1, n.grad);
        axpy(n.b->grad, n.s2, n.grad);
        break;
      case Op::kTanh: {
        const std::size_t sz = n.grad.size();
        for (std::size_t i = 0; i < sz; ++i) {
          const double y = n.value.data()[i];
          n.a->grad.data()[i] += n.grad.data()[i] * (1.0 - y * y);
        }
        break;
      }
      case Op::kClampMin: {
        const std::size_t sz = n.grad.size();
        for (std::size_t i = 0; i < sz; ++i) {
          if (n.pass_mask[i]) n.a->grad.data()[i] += n.grad.data()[i];
        }
        break;
      }
    }
  }

  for (Node& n : nodes_) {
    if (n.op == Op::kParam) axpy(n.bound->grad, 1.0, n.grad);
  }
}

std::vector<int> Graph::routing_signature() const {
  std::vector<int> sig;
  for (const Node& n : nodes_) {
    if (n.op == Op::kMaxPool) {
      sig.insert(sig.end(), n.argmax.begin(), n.argmax.end());
    } else if (n.op == Op::kClampMin) {
      for (bool b : n.pass_mask) sig.push_back(b ? 1 : 0);
    }
  }
  return sig;
}

std::string FiniteDiffReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << ": " << coords_checked << " coordinates, max rel err "
     << max_rel_err;
  if (!excluded.empty()) os << ", " << excluded.size() << " excluded near tie boundaries";
  if (!failures.empty()) {
    os << "; first failure " << failures.front().param << "[" << failures.front().index
       << "] analytic " << failures.front().analytic << " vs numeric " << failures.front().numeric;
  }
  return os.str();
}

FiniteDiffReport finite_diff_check(const std::function<Node*(Graph&)>& build,
                                   const std::vector<ParamTensor*>& params, double h, double tol,
                                   const std::function<void()>& tamper) {
  FiniteDiffReport report;

  Graph graph;
  Node* loss = build(graph);
  if (loss->value.rows() != 1 || loss->value.cols() != 1) {
    throw ShapeError("finite_diff_check requires a scalar loss");
  }
  for (ParamTensor* p : params) p->zero_grad();
  graph.backward(loss);
  if (tamper) tamper();

  for (ParamTensor* p : params) {
    const int count = static_cast<int>(p->value.size());
    for (int i = 0; i < count; ++i) {
      const double saved = p->value.data()[i];
      p->value.data()[i] = saved + h;
      graph.forward();
      const double f_plus = loss->value(0, 0);
      const auto sig_plus = graph.routing_signature();
      p->value.data()[i] = saved - h;
      graph.forward();
      const double f_minus = loss->value(0, 0);
      const auto sig_minus = graph.routing_signature();
      p->value.data()[i] = saved;

      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double analytic = p->grad.data()[i];
      if (sig_plus != sig_minus) {
        report.excluded.push_back({p->name, i, analytic, numeric, 0.0});
        continue;
      }
      const double rel =
          std::fabs(analytic - numeric) / std::max(1e-6, std::fabs(analytic) + std::fabs(numeric));
      ++report.coords_checked;
      report.max_rel_err = std::max(report.max_rel_err, rel);
      if (rel > tol) {
        report.pass = false;
        report.failures.push_back({p->name, i, analytic, numeric, rel});
      }
    }
  }
  // Restore values for any downstream use of the graph.
  graph.forward();
  return report;
}

}  // namespace s2p::grad
