#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/error.hpp"

namespace mf {

// 64-byte aligned storage for every buffer the GEMM kernels see. With all
// operands identically aligned the vectorized kernels take identical code
// paths, which keeps results bit-reproducible across runs.
template <typename T, std::size_t Align>
struct AlignedAllocator {
  using value_type = T;
  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(Align)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(Align));
  }
  template <class U>
  bool operator==(const AlignedAllocator<U, Align>&) const {
    return true;
  }
};

using DVec = std::vector<double, AlignedAllocator<double, 64>>;

// Backing store of a tensor. Identity of the node is identity of the tensor
// as far as gradient bookkeeping is concerned.
struct TensorNode {
  std::vector<int> shape;
  DVec data;   // row-major, size == product(shape)
  DVec grad;   // empty until a backward pass touches it
  bool requires_grad = false;
  bool produced = false;  // true for op outputs; leaves keep persistent grads
};

// Dense n-dimensional double tensor with value semantics on the handle and
// shared ownership of the node. Shapes are fixed at construction.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value,
                     bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                          bool requires_grad = false);
  // takes ownership of an already-aligned buffer
  static Tensor wrap(std::vector<int> shape, DVec data,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int axis) const;
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::int64_t numel() const {
    return static_cast<std::int64_t>(node_->data.size());
  }

  double* data() { return node_->data.data(); }
  const double* data() const { return node_->data.data(); }
  DVec& vec() { return node_->data; }
  const DVec& vec() const { return node_->data; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  DVec& grad();        // allocates zeros on first use
  const DVec& grad() const;
  void zero_grad();

  // Value of a rank-0/size-1 tensor.
  double item() const;
  // Convenience element access for tests and small code paths.
  double at(std::initializer_list<int> idx) const;

  TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<TensorNode>& node_ptr() const { return node_; }

  std::string shape_str() const;

 private:
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<TensorNode> node_;

  friend class GradTape;
};

std::int64_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

// Scratch gradients of one backward pass, keyed by node identity. Values
// flow through these buffers and are flushed into TensorNode::grad (with +=)
// for every requires_grad node, so repeating backward on the same tape
// doubles accumulated gradients exactly. Each op's backward closure calls
// finalize() on its output once consumed, releasing the scratch buffer
// early; leaves are flushed at the end of the pass.
class BackwardCtx {
 public:
  // Gradient flowing into `node`'s output, or nullptr if nothing reached it.
  const double* incoming(const TensorNode* node) const;
  // Buffer to accumulate gradient for `node`; allocated (zeroed) on demand.
  double* accumulate_into(TensorNode* node);
  // Flush `node`'s scratch gradient into its persistent grad and drop it.
  void finalize(TensorNode* node);

 private:
  friend class GradTape;
  static void flush(TensorNode* node, const DVec& buf);
  std::unordered_map<const TensorNode*, DVec> buffers_;
};

// Ordered record of executed operations (define-by-run). Ops append an entry
// while a tape is active via TapeScope; backward replays entries in reverse
// execution order.
class GradTape {
 public:
  using BackwardFn = std::function<void(BackwardCtx&)>;

  void record(BackwardFn fn) { entries_.push_back(std::move(fn)); }
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and propagates through the recorded ops.
  // loss must be scalar (numel == 1).
  void backward(const Tensor& loss);

  static GradTape* active();

 private:
  std::vector<BackwardFn> entries_;
  friend class TapeScope;
};

// RAII activation of a tape on the current thread.
class TapeScope {
 public:
  explicit TapeScope(GradTape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradTape* previous_;
};

}  // namespace mf
