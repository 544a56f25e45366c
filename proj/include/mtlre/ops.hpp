#pragma once

#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "mtlre/tensor.hpp"

namespace mtlre {

// Elementwise arithmetic.  Operands must share a tape and either have equal
// shapes, or one side is a scalar, or one side is a vector of length n
// combined with an m x n matrix (the vector is applied to every row).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

// Matrix product with vector promotion: a vector on the left acts as a 1 x k
// row, a vector on the right as a k x 1 column, and promoted axes are
// squeezed from the result (vector . vector yields a scalar).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);

// Numerically stable softmax along `axis` (0 for vectors; 0 = down columns,
// 1 = along rows for matrices).  Each slice of the result sums to 1.
Tensor softmax(const Tensor& a, Index axis);

// Concatenation along an existing axis; all parts must share the other
// extent.  Vectors concatenate along axis 0 only.
Tensor concat(std::span<const Tensor> parts, Index axis);
Tensor concat(std::initializer_list<Tensor> parts, Index axis);

// Stacks equal-length vectors as the rows of a new matrix.
Tensor stack_rows(std::span<const Tensor> rows);

// Same data, new extents (total size preserved).
Tensor reshape(const Tensor& a, Shape target);

// Row r of a matrix as a vector.
Tensor row(const Tensor& m, Index r);

// Rows of a matrix selected by index, in order, as a new matrix.  Repeated
// indices are allowed; their gradients accumulate into the same source row.
Tensor gather_rows(const Tensor& m, const std::vector<Index>& row_indices);

// Sum of all elements, as a scalar.
Tensor sum(const Tensor& a);

// Total cross-entropy -sum(gold * log(pred)) over a batch of probability
// rows.  `gold` must be exactly one-hot per row.  Predictions are clamped
// to 1e-12 inside the log so zero probabilities stay finite.
Tensor cross_entropy(const Tensor& predictions, const Tensor& gold_onehot);

// Inverted dropout: during training keeps each element with probability
// 1-rate and rescales by 1/(1-rate) so expectations match; outside training
// it is the identity.  rate must lie in [0, 1).
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng, bool training);

// Identity in the forward pass; multiplies the incoming gradient by -lambda
// in the backward pass.
Tensor gradient_reversal(const Tensor& a, double lambda);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(double factor, const Tensor& a) { return scale(a, factor); }
inline Tensor operator*(const Tensor& a, double factor) { return scale(a, factor); }

}  // namespace mtlre
