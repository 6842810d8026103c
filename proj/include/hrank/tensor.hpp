#ifndef HRANK_TENSOR_HPP_
#define HRANK_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hrank {

// Reverse-mode differentiable matrix. Every tensor is a dense 2-D array
// [rows x cols] of doubles; scalars are [1x1] and row vectors [1xn].
// Ops build a dynamic graph; backward() walks it once in reverse
// topological order. Grads of leaf tensors accumulate across backward
// calls until zero_grad() — callers sum per-question losses this way.
//
// Single-threaded per graph. Distinct graphs may live on distinct
// threads as long as they share no tensors mid-step.
class Tensor {
 public:
  struct Node {
    int rows = 0;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad;  // empty until touched by backward
    bool requires_grad = false;
    std::uint64_t id = 0;
    std::vector<Tensor> parents;
    std::function<void(Node&)> backward;

    int numel() const { return rows * cols; }
    void ensure_grad() {
      if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
  };

  Tensor() = default;

  static Tensor constant(int rows, int cols, std::vector<double> values);
  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor full(int rows, int cols, double v);
  static Tensor scalar(double v);
  // Trainable leaf.
  static Tensor parameter(int rows, int cols, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  // Leaf tensors only (frozen vs. fine-tuned embedding tables).
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  int numel() const { return node_->numel(); }
  std::uint64_t id() const { return node_->id; }
  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& mutable_values() { return node_->value; }
  double at(int r, int c) const { return node_->value[static_cast<std::size_t>(r) * node_->cols + c]; }
  double value() const;  // scalar tensors only

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const { return node_->grad; }
  std::vector<double>& mutable_grad() { return node_->grad; }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  // Value copy outside the graph; gradients do not flow through it.
  Tensor detached() const;

  Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  static Tensor make(int rows, int cols, bool requires_grad);

  std::shared_ptr<Node> node_;

  friend Tensor make_op(int rows, int cols, std::vector<Tensor> parents,
                        std::function<void(Tensor::Node&)> backward);
};

std::string shape_str(const Tensor& t);

// --- graph ops -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
// a [n x k] * b^T where b is [m x k]; avoids materializing the transpose.
Tensor matmul_transb(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);          // same shape
Tensor add_rowvec(const Tensor& a, const Tensor& b);   // b is [1 x cols], broadcast over rows
Tensor sub(const Tensor& a, const Tensor& b);          // same shape
Tensor mul(const Tensor& a, const Tensor& b);          // elementwise, same shape
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);

Tensor sigmoid(const Tensor& x);
Tensor tanh_op(const Tensor& x);
Tensor relu(const Tensor& x);
// log(max(x, eps)); zero derivative inside the clamped region.
Tensor log_clamped(const Tensor& x, double eps = 1e-12);

// Each row becomes a probability distribution; -inf entries are treated as
// masked out (weight 0). A row with no finite entry is an error.
Tensor row_softmax(const Tensor& x);

// Keeps the k largest entries per row, replaces the rest with -inf.
// Ties broken toward the lower column index.
Tensor kmax_row_filter(const Tensor& x, int k);

// Sets columns with keep[c] == 0 to -inf (attention padding mask).
Tensor mask_cols_neginf(const Tensor& x, const std::vector<unsigned char>& keep);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);

Tensor gather_rows(const Tensor& x, const std::vector<int>& indices);

// Sliding windows of `size` consecutive rows, flattened: [len x in] ->
// [(len-size+1) x (size*in)]. The im2col step of a 1-D convolution.
Tensor unfold_rows(const Tensor& x, int size);

// Appends zero rows up to target_rows.
Tensor pad_rows(const Tensor& x, int target_rows);

// Column-wise max over rows: [len x ch] -> [1 x ch]. Gradient is routed
// only to the argmax row per column, ties to the lowest row index.
Tensor max_over_time(const Tensor& x);

Tensor sum_all(const Tensor& x);   // [1 x 1]
Tensor mean_all(const Tensor& x);  // [1 x 1]

// Populates grads of every trainable ancestor of `root` (a scalar).
// Leaf grads accumulate across calls; interior grads are per-call.
void backward(const Tensor& root);

}  // namespace hrank

#endif  // HRANK_TENSOR_HPP_
