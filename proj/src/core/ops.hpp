#pragma once

#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace mf {

// Integer id matrix (token ids). Kept separate from Tensor: ids are not
// differentiable.
struct IdMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> ids;  // row-major, size rows*cols

  static IdMatrix zeros(int r, int c) { return {r, c, std::vector<int>(static_cast<std::size_t>(r) * c, 0)}; }
  int& at(int r, int c) { return ids[static_cast<std::size_t>(r) * cols + c]; }
  int at(int r, int c) const { return ids[static_cast<std::size_t>(r) * cols + c]; }
};

namespace ops {

// -- linear algebra ---------------------------------------------------------

// Rank-2 matrix product [m x k] . [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);

// x [..., in] -> [..., out]: the trailing axis through w [in x out] plus b.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

// Batched matrix product alpha * ([B x m x k] . [B x k x n]).
Tensor bmm(const Tensor& a, const Tensor& b, double alpha = 1.0);

// -- elementwise ------------------------------------------------------------
// Binary ops accept equal shapes, or a second operand whose shape is a
// suffix of the first (broadcast over the leading axes).

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);

// -- shape ------------------------------------------------------------------

Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor permute(const Tensor& a, const std::vector<int>& perm);
Tensor concat_lastdim(const Tensor& a, const Tensor& b);
// [s0 x ... x sk] -> [s0 x ... x sk x d], replicating along the new axis.
Tensor expand_last(const Tensor& a, int d);
// [b x t x d] -> [b*h x t x d/h]; transpose_last yields [b*h x d/h x t]
// (keys laid out for q . k^T).
Tensor split_heads(const Tensor& x, int n_heads, bool transpose_last = false);
Tensor merge_heads(const Tensor& x, int batch, int n_heads);

// -- reductions -------------------------------------------------------------

Tensor sum(const Tensor& a);  // scalar

// -- neural net primitives --------------------------------------------------

// Softmax over the last axis, computed with max-subtraction.
Tensor softmax_lastdim(const Tensor& a);

// softmax(a + mask_bias) in one pass. mask_bias must be a constant tensor
// whose shape is a suffix of a's (or undefined for plain softmax).
Tensor masked_softmax(const Tensor& a, const Tensor& mask_bias);

// Per-row normalization over the last axis followed by gain/bias; the
// variance estimate carries epsilon 1e-6 inside the square root.
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias);

// table [v x d], ids [r x c] -> [r x c x d].
Tensor embedding_lookup(const Tensor& table, const IdMatrix& ids);

// Mean negative log-softmax over non-pad positions of logits [b x t x v]
// against targets [b x t]. label_smoothing distributes that fraction of
// probability mass uniformly over the vocabulary.
Tensor cross_entropy(const Tensor& logits, const IdMatrix& targets, int pad_id,
                     double label_smoothing = 0.0);

// Training: zero each element with probability `rate`, scale survivors by
// 1/(1-rate). Inference (or rate 0): returns the input tensor unchanged.
Tensor dropout(const Tensor& a, double rate, bool training, Rng& rng);

}  // namespace ops
}  // namespace mf
