#include "supgcl/expression.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "supgcl/error.hpp"

namespace supgcl {

ExpressionMatrix::ExpressionMatrix(VocabularyRef genes, std::vector<std::string> samples, std::vector<double> values)
    : genes_(std::move(genes)), samples_(std::move(samples)), values_(std::move(values)) {
    if (!genes_) throw ValidationError("expression matrix without a gene vocabulary");
    if (values_.size() != genes_->size() * samples_.size()) {
        throw ValidationError("expression matrix has " + std::to_string(values_.size()) + " values for " +
                              std::to_string(genes_->size()) + " genes x " + std::to_string(samples_.size()) +
                              " samples");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw ValidationError("expression value for gene '" + genes_->name(i / samples_.size()) +
                                  "' is not finite");
        }
    }
}

std::vector<double> ExpressionMatrix::sample(std::size_t s) const {
    std::vector<double> out(num_genes());
    for (std::size_t g = 0; g < out.size(); ++g) out[g] = (*this)(g, s);
    return out;
}

ExpressionMatrix ExpressionMatrix::select_samples(std::span<const std::size_t> columns) const {
    std::vector<std::string> ids;
    std::vector<double> v(num_genes() * columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] >= num_samples()) throw ContractError("sample column out of range");
        ids.push_back(samples_[columns[c]]);
        for (std::size_t g = 0; g < num_genes(); ++g) v[g * columns.size() + c] = (*this)(g, columns[c]);
    }
    ExpressionMatrix out;
    out.genes_ = genes_;
    out.samples_ = std::move(ids);
    out.values_ = std::move(v);
    return out;
}

bool ExpressionMatrix::operator==(const ExpressionMatrix& other) const {
    return genes_ && other.genes_ && *genes_ == *other.genes_ && samples_ == other.samples_ &&
           values_ == other.values_;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace

ExpressionMatrix read_expression_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("expression file not found: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ":1: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_tabs(line);
    if (header.size() < 2) throw ParseError(path.string() + ":1: header needs a gene column and samples");
    std::vector<std::string> samples(header.begin() + 1, header.end());

    std::vector<std::string> genes;
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (fields.size() != header.size()) {
            throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                             std::to_string(fields.size()));
        }
        genes.push_back(fields[0]);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double v = 0.0;
            const char* b = fields[c].data();
            const char* e = b + fields[c].size();
            auto [ptr, ec] = std::from_chars(b, e, v);
            if (ec != std::errc() || ptr != e || !std::isfinite(v)) {
                throw ParseError(where + ": column '" + header[c] + "' holds '" + fields[c] +
                                 "', not a finite number");
            }
            values.push_back(v);
        }
    }
    try {
        return ExpressionMatrix(make_vocabulary(std::move(genes)), std::move(samples), std::move(values));
    } catch (const ValidationError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_expression_tsv(const ExpressionMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write expression file " + path.string());
    out << "gene";
    for (const auto& s : m.sample_ids()) out << '\t' << s;
    out << '\n';
    char buf[64];
    for (std::size_t g = 0; g < m.num_genes(); ++g) {
        out << m.vocab()->name(g);
        for (std::size_t s = 0; s < m.num_samples(); ++s) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m(g, s));
            out << '\t' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
        }
        out << '\n';
    }
}

ExpressionMatrix mean_profile(const ExpressionMatrix& m, std::string id) {
    if (m.num_samples() == 0) throw ContractError("mean_profile of a matrix without samples");
    std::vector<double> means(m.num_genes(), 0.0);
    for (std::size_t g = 0; g < m.num_genes(); ++g) {
        for (double v : m.gene(g)) means[g] += v;
        means[g] /= static_cast<double>(m.num_samples());
    }
    return ExpressionMatrix(m.vocab(), {std::move(id)}, std::move(means));
}

} // namespace supgcl
