#include "supgcl/metrics.hpp"

#include <string>

#include "supgcl/error.hpp"

namespace supgcl {

namespace {

void require_matrices(const BitMatrix& pred, const BitMatrix& truth, const char* what) {
    if (pred.empty()) throw ContractError(std::string(what) + ": empty input");
    if (pred.size() != truth.size()) throw ContractError(std::string(what) + ": row counts differ");
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i].size() != truth[i].size() || pred[i].size() != pred[0].size()) {
            throw ContractError(std::string(what) + ": row " + std::to_string(i) + " has a different width");
        }
    }
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
    const std::size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

} // namespace

double subset_accuracy(const BitMatrix& pred, const BitMatrix& truth) {
    require_matrices(pred, truth, "subset_accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double jaccard_index(const BitMatrix& pred, const BitMatrix& truth) {
    require_matrices(pred, truth, "jaccard_index");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        std::size_t inter = 0, uni = 0;
        for (std::size_t c = 0; c < pred[i].size(); ++c) {
            inter += (pred[i][c] && truth[i][c]) ? 1 : 0;
            uni += (pred[i][c] || truth[i][c]) ? 1 : 0;
        }
        total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return total / static_cast<double>(pred.size());
}

double macro_f1(const BitMatrix& pred, const BitMatrix& truth) {
    require_matrices(pred, truth, "macro_f1");
    const std::size_t cols = pred[0].size();
    if (cols == 0) throw ContractError("macro_f1: no label columns");
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            tp += (pred[i][c] && truth[i][c]) ? 1 : 0;
            fp += (pred[i][c] && !truth[i][c]) ? 1 : 0;
            fn += (!pred[i][c] && truth[i][c]) ? 1 : 0;
        }
        total += f1(tp, fp, fn);
    }
    return total / static_cast<double>(cols);
}

double macro_f1(std::span<const std::size_t> pred, std::span<const std::size_t> truth, std::size_t num_classes) {
    if (pred.empty()) throw ContractError("macro_f1: empty input");
    if (pred.size() != truth.size()) throw ContractError("macro_f1: lengths differ");
    if (num_classes == 0) throw ContractError("macro_f1: no classes");
    double total = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            tp += (pred[i] == c && truth[i] == c) ? 1 : 0;
            fp += (pred[i] == c && truth[i] != c) ? 1 : 0;
            fn += (pred[i] != c && truth[i] == c) ? 1 : 0;
        }
        total += f1(tp, fp, fn);
    }
    return total / static_cast<double>(num_classes);
}

double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
    if (pred.empty()) throw ContractError("accuracy: empty input");
    if (pred.size() != truth.size()) throw ContractError("accuracy: lengths differ");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double c_index(std::span<const double> risks, std::span<const SurvivalRecord> records) {
    if (risks.size() != records.size()) throw ContractError("c_index: lengths differ");
    double concordant = 0.0;
    std::size_t comparable = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].event != 1) continue;
        for (std::size_t j = 0; j < records.size(); ++j) {
            if (!(records[i].time < records[j].time)) continue;
            ++comparable;
            if (risks[i] > risks[j]) {
                concordant += 1.0;
            } else if (risks[i] == risks[j]) {
                concordant += 0.5;
            }
        }
    }
    if (comparable == 0) throw ContractError("c_index: no comparable pairs");
    return concordant / static_cast<double>(comparable);
}

} // namespace supgcl
