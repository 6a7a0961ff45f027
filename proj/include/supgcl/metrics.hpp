#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "supgcl/labels.hpp"

namespace supgcl {

/// Rows of 0/1 predictions or labels.
using BitMatrix = std::vector<std::vector<int>>;

/// Fraction of rows whose whole label vector matches.
double subset_accuracy(const BitMatrix& pred, const BitMatrix& truth);

/// Mean over rows of |pred & truth| / |pred | truth|; a row with an empty
/// union scores 1.
double jaccard_index(const BitMatrix& pred, const BitMatrix& truth);

/// Mean over columns of the per-column F1; a column with no true and no
/// predicted positives scores 0.
double macro_f1(const BitMatrix& pred, const BitMatrix& truth);

/// Macro F1 over classes 0..num_classes-1 of single-label predictions.
double macro_f1(std::span<const std::size_t> pred, std::span<const std::size_t> truth, std::size_t num_classes);

double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth);

/// Harrell's concordance: over pairs (i, j) with an event at i and
/// time_i < time_j, the fraction with risk_i > risk_j, risk ties counting 0.5.
/// Throws ContractError when there is no comparable pair.
double c_index(std::span<const double> risks, std::span<const SurvivalRecord> records);

} // namespace supgcl
