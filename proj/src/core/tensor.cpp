#include "core/tensor.hpp"

#include <malloc.h>

#include <numeric>
#include <sstream>

namespace mf {

std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_to_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  std::int64_t n = shape_numel(shape);
  node->shape = std::move(shape);
  node->data.assign(static_cast<std::size_t>(n), 0.0);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.node_->data.begin(), t.node_->data.end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data,
                         bool requires_grad) {
  std::int64_t n = shape_numel(shape);
  if (n != static_cast<std::int64_t>(data.size()))
    throw ShapeError("data size " + std::to_string(data.size()) +
                     " does not match shape " + shape_to_string(shape));
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data.assign(data.begin(), data.end());
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::wrap(std::vector<int> shape, DVec data, bool requires_grad) {
  std::int64_t n = shape_numel(shape);
  if (n != static_cast<std::int64_t>(data.size()))
    throw ShapeError("data size " + std::to_string(data.size()) +
                     " does not match shape " + shape_to_string(shape));
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

int Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  return node_->shape.at(static_cast<std::size_t>(axis));
}

DVec& Tensor::grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
  return node_->grad;
}

const DVec& Tensor::grad() const {
  if (node_->grad.empty())
    throw ContractError("gradient requested but backward never reached this tensor");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty())
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1)
    throw ContractError("item() on tensor of shape " + shape_str());
  return node_->data[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
  const auto& shape = node_->shape;
  if (idx.size() != shape.size())
    throw ShapeError("index rank mismatch for shape " + shape_str());
  std::int64_t flat = 0;
  std::size_t axis = 0;
  for (int i : idx) {
    flat = flat * shape[axis] + i;
    ++axis;
  }
  return node_->data[static_cast<std::size_t>(flat)];
}

std::string Tensor::shape_str() const { return shape_to_string(node_->shape); }

const double* BackwardCtx::incoming(const TensorNode* node) const {
  auto it = buffers_.find(node);
  return it == buffers_.end() ? nullptr : it->second.data();
}

double* BackwardCtx::accumulate_into(TensorNode* node) {
  auto& buf = buffers_[node];
  if (buf.empty()) buf.assign(node->data.size(), 0.0);
  return buf.data();
}

void BackwardCtx::flush(TensorNode* node, const DVec& buf) {
  // persistent gradients live on leaves (inputs, parameters); op outputs
  // are transient once their consumers have run
  if (!node->requires_grad || node->produced) return;
  if (node->grad.empty()) node->grad.assign(node->data.size(), 0.0);
  for (std::size_t i = 0; i < buf.size(); ++i) node->grad[i] += buf[i];
}

void BackwardCtx::finalize(TensorNode* node) {
  auto it = buffers_.find(node);
  if (it == buffers_.end()) return;
  flush(node, it->second);
  buffers_.erase(it);
}

namespace {
thread_local GradTape* g_active_tape = nullptr;

// Activation buffers are a few MB each; keep them on the main heap so freed
// blocks are reused warm instead of being returned to the kernel every step.
struct MallocTuning {
  MallocTuning() {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  }
} g_malloc_tuning;
}

GradTape* GradTape::active() { return g_active_tape; }

TapeScope::TapeScope(GradTape& tape) : previous_(g_active_tape) {
  g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = previous_; }

void GradTape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? loss.shape_str() : std::string("<empty>")));
  BackwardCtx ctx;
  ctx.accumulate_into(loss.node())[0] = 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)(ctx);
  // whatever remains belongs to leaves (graph inputs and parameters)
  for (auto& [node, buf] : ctx.buffers_)
    BackwardCtx::flush(const_cast<TensorNode*>(node), buf);
}

}  // namespace mf
