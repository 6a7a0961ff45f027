#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "supgcl/tape.hpp"

// Differentiable operations over Var. Every op checks shapes and throws
// ContractError on mismatch; log and the softmax family reject non-finite
// input with NumericError.
namespace supgcl::ad {

Var matmul(Var a, Var b);
Var transpose(Var a);
Var reshape(Var a, std::size_t rows, std::size_t cols);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// Adds a 1 x c row vector to every row of an r x c matrix.
Var add_row(Var a, Var row);
/// Multiplies row i of an r x c matrix by entry i of an r x 1 column.
Var mul_rows(Var a, Var column);

Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var relu(Var a);
Var sigmoid(Var a);
/// log(1 + exp(a)), stable for large |a|.
Var softplus(Var a);

/// Sum of all entries, 1 x 1.
Var sum(Var a);
/// Mean of all entries, 1 x 1.
Var mean(Var a);
/// Column means, 1 x c.
Var mean_rows(Var a);
/// Row-wise dot products of two r x c matrices, r x 1.
Var rowwise_dot(Var a, Var b);
/// Sum of elementwise products, 1 x 1.
Var frobenius_inner(Var a, Var b);

/// Divides every row by its Euclidean norm; a zero row raises NumericError.
Var rowwise_l2_normalize(Var a);
/// Row softmax of a / temperature with row-max subtraction.
Var softmax_rows(Var a, double temperature = 1.0);
/// Row log-softmax of a / temperature.
Var log_softmax_rows(Var a, double temperature = 1.0);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// Selects rows by index (repeats allowed).
Var gather_rows(Var a, std::span<const std::size_t> index);
/// out[index[k]] += a[k]; out has `out_rows` rows.
Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t out_rows);
/// Softmax of each column of an E x h matrix within groups of rows sharing
/// `segment[k]`. Rows of empty segments do not exist, so no special case.
Var segment_softmax(Var logits, std::span<const std::size_t> segment, std::size_t segments);
/// Head-blocked dot product: a, b are r x (h*w); result r x h holds the dot
/// product of each w-wide block.
Var head_dot(Var a, Var b, std::size_t heads);
/// Scales each w-wide block of an r x (h*w) matrix by the matching entry of an r x h matrix.
Var scale_head_blocks(Var a, Var weights);

/// Diagonal of a square matrix as an n x 1 column.
Var diagonal(Var a);
/// Single entry as 1 x 1.
Var element(Var a, std::size_t r, std::size_t c);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator*(double s, Var a) { return scale(a, s); }

} // namespace supgcl::ad
