#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "supgcl/grn.hpp"

namespace supgcl {

/// Genes x samples matrix of normalized expression, stored gene-major.
class ExpressionMatrix {
public:
    ExpressionMatrix() = default;
    /// `values` has genes() * samples() entries, row g holding gene g.
    ExpressionMatrix(VocabularyRef genes, std::vector<std::string> samples, std::vector<double> values);

    const VocabularyRef& vocab() const { return genes_; }
    std::size_t num_genes() const { return genes_ ? genes_->size() : 0; }
    std::size_t num_samples() const { return samples_.size(); }
    const std::vector<std::string>& sample_ids() const { return samples_; }

    double operator()(std::size_t gene, std::size_t sample) const { return values_[gene * samples_.size() + sample]; }
    std::span<const double> gene(std::size_t g) const {
        return {values_.data() + g * samples_.size(), samples_.size()};
    }
    /// Expression of every gene in one sample.
    std::vector<double> sample(std::size_t s) const;

    /// Columns `columns` (repeats allowed), relabelled by position.
    ExpressionMatrix select_samples(std::span<const std::size_t> columns) const;

    bool operator==(const ExpressionMatrix& other) const;

private:
    VocabularyRef genes_;
    std::vector<std::string> samples_;
    std::vector<double> values_;
};

/// One-sample matrix holding each gene's mean over samples.
ExpressionMatrix mean_profile(const ExpressionMatrix& m, std::string id = "mean");

/// TSV: header "gene<TAB>sample...", then one row per gene.
ExpressionMatrix read_expression_tsv(const std::filesystem::path& path);
void write_expression_tsv(const ExpressionMatrix& m, const std::filesystem::path& path);

} // namespace supgcl
