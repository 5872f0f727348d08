#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "s2p/matrix.hpp"

namespace s2p::grad {

// A named trainable tensor. The value lives outside the graph so the
// optimizer can mutate it between steps and so multiple per-sample graphs
// can accumulate into one gradient buffer.
struct ParamTensor {
  std::string name;
  Matrix value;
  Matrix grad;

  ParamTensor() = default;
  ParamTensor(std::string n, int rows, int cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

  void zero_grad() { grad.zero(); }
};

enum class Op : unsigned char {
  kParam,
  kConst,
  kMatmul,
  kAdd,
  kMul,        // elementwise
  kAffine,     // W*x + b, b broadcast across columns
  kMovingAvg,  // along rows, edge-replicate padding
  kMaxPool,    // along rows, stride == kernel, argmax recorded
  kMse,
  kScaleAdd,  // s1*a + s2*b
  kTanh,
  kClampMin,
};

struct Node {
  Op op;
  Matrix value;
  Matrix grad;
  Node* a = nullptr;
  Node* b = nullptr;
  Node* c = nullptr;
  // Op extras.
  double s1 = 0.0;
  double s2 = 0.0;
  int kernel = 0;
  std::vector<int> argmax;      // kMaxPool: winning row per (day, column)
  std::vector<bool> pass_mask;  // kClampMin: true where gradient flows
  ParamTensor* bound = nullptr;
};

// One computation graph. Creation order is topological, so the backward
// sweep is simply the reverse iteration; each node is visited exactly once.
// forward() re-evaluates every node from the leaves, which makes the graph
// reusable for finite-difference probing without rebuilding.
class Graph {
 public:
  Node* param(ParamTensor& tensor);
  Node* constant(Matrix value);

  Node* matmul(Node* a, Node* b);
  Node* add(Node* a, Node* b);
  Node* mul(Node* a, Node* b);
  Node* affine(Node* w, Node* x, Node* bias);
  Node* moving_average(Node* x, int kernel);
  Node* maxpool_time(Node* x, int window = 24);
  Node* mse(Node* a, Node* b);
  Node* scale_add(Node* a, double s1, Node* b, double s2);
  Node* tanh(Node* x);
  Node* clamp_min(Node* x, double floor);

  // Recompute all node values in creation order.
  void forward();

  // Exact reverse-mode sweep from a scalar loss; accumulates into the
  // bound ParamTensor::grad buffers (callers zero those between batches).
  void backward(Node* loss);

  std::size_t node_count() const { return nodes_.size(); }

  // Concatenated maxpool argmaxes and clamp masks; two evaluations with a
  // different signature took different subgradient branches.
  std::vector<int> routing_signature() const;

 private:
  Node* emplace(Node node);
  void compute(Node& n);

  std::deque<Node> nodes_;
};

struct FiniteDiffIssue {
  std::string param;
  int index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct FiniteDiffReport {
  bool pass = true;
  double max_rel_err = 0.0;
  int coords_checked = 0;
  std::vector<FiniteDiffIssue> failures;
  std::vector<FiniteDiffIssue> excluded;  // perturbation crossed a pooling/clamp boundary

  std::string summary() const;
};

// Central-difference verification of the analytic gradients of the scalar
// loss produced by `build`. Coordinates whose +/-h evaluations select
// different maxpool argmaxes or clamp branches are excluded from the
// comparison and reported separately. `tamper`, when set, runs after the
// backward pass; it exists so tests can corrupt gradients and watch the
// check fail.
FiniteDiffReport finite_diff_check(const std::function<Node*(Graph&)>& build,
                                   const std::vector<ParamTensor*>& params, double h, double tol,
                                   const std::function<void()>& tamper = nullptr);

}  // namespace s2p::grad
