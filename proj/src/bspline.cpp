#include "supgcl/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "supgcl/error.hpp"

namespace supgcl {

BsplineBasis::BsplineBasis(double lo, double hi, std::vector<double> interior, std::size_t degree)
    : degree_(degree), num_bases_(interior.size() + degree + 1) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw ContractError("B-spline domain must be a finite interval with lo < hi");
    }
    double prev = lo;
    for (double k : interior) {
        if (!(k > prev) || !(k < hi)) throw ContractError("interior knots must increase strictly inside (lo, hi)");
        prev = k;
    }
    knots_.assign(degree + 1, lo);
    knots_.insert(knots_.end(), interior.begin(), interior.end());
    knots_.insert(knots_.end(), degree + 1, hi);
}

bool BsplineBasis::evaluate(double x, std::span<double> out) const {
    if (out.size() != num_bases_) throw ContractError("basis output has the wrong length");
    const bool clamped = x < lo() || x > hi();
    x = std::clamp(x, lo(), hi());
    std::fill(out.begin(), out.end(), 0.0);

    // Knot span: t[i] <= x < t[i+1], using the last nonempty span at x == hi.
    const std::size_t p = degree_;
    std::size_t i = num_bases_ - 1;
    if (x < hi()) {
        auto it = std::upper_bound(knots_.begin() + static_cast<std::ptrdiff_t>(p),
                                   knots_.begin() + static_cast<std::ptrdiff_t>(num_bases_ + 1), x);
        i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    }

    // Cox-de Boor triangle for the p + 1 nonzero functions N[i-p..i].
    std::vector<double> n(p + 1, 0.0), left(p + 1, 0.0), right(p + 1, 0.0);
    n[0] = 1.0;
    for (std::size_t j = 1; j <= p; ++j) {
        left[j] = x - knots_[i + 1 - j];
        right[j] = knots_[i + j] - x;
        double saved = 0.0;
        for (std::size_t r = 0; r < j; ++r) {
            const double temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    for (std::size_t r = 0; r <= p; ++r) out[i - p + r] = n[r];
    return clamped;
}

std::vector<double> BsplineBasis::operator()(double x) const {
    std::vector<double> out(num_bases_);
    evaluate(x, out);
    return out;
}

BsplineBasis uniform_basis(double lo, double hi, std::size_t num_bases, std::size_t degree) {
    if (num_bases < degree + 1) throw ContractError("need at least degree + 1 basis functions");
    const std::size_t n_int = num_bases - degree - 1;
    std::vector<double> interior;
    for (std::size_t k = 1; k <= n_int; ++k)
        interior.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n_int + 1));
    return BsplineBasis(lo, hi, std::move(interior), degree);
}

BsplineBasis quantile_basis(std::span<const double> values, std::size_t num_bases, std::size_t degree) {
    if (values.empty()) throw ContractError("cannot place knots without data");
    if (num_bases < degree + 1) throw ContractError("need at least degree + 1 basis functions");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double lo = sorted.front(), hi = sorted.back();
    if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(lo)))) {
        lo -= 0.5;
        hi += 0.5;
        return uniform_basis(lo, hi, num_bases, degree);
    }
    const std::size_t n_int = num_bases - degree - 1;
    std::vector<double> interior;
    double prev = lo;
    bool ok = true;
    for (std::size_t k = 1; k <= n_int; ++k) {
        const double pos = static_cast<double>(k) / static_cast<double>(n_int + 1) * static_cast<double>(sorted.size() - 1);
        const auto below = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(below);
        const double q = below + 1 < sorted.size() ? sorted[below] * (1.0 - frac) + sorted[below + 1] * frac
                                                   : sorted[below];
        if (!(q > prev) || !(q < hi)) {
            ok = false;
            break;
        }
        interior.push_back(q);
        prev = q;
    }
    if (!ok) return uniform_basis(lo, hi, num_bases, degree);
    return BsplineBasis(lo, hi, std::move(interior), degree);
}

double BsplineCurve::operator()(double x, bool* clamped) const {
    std::vector<double> b(basis.size());
    const bool c = basis.evaluate(x, b);
    if (clamped) *clamped = c;
    double s = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) s += weights[k] * b[k];
    return s;
}

nlohmann::json to_json(const BsplineCurve& c) {
    const auto& k = c.basis.knots();
    const std::size_t p = c.basis.degree();
    std::vector<double> interior(k.begin() + static_cast<std::ptrdiff_t>(p + 1),
                                 k.end() - static_cast<std::ptrdiff_t>(p + 1));
    return {{"lo", c.basis.lo()}, {"hi", c.basis.hi()}, {"degree", p}, {"interior_knots", interior},
            {"weights", c.weights}};
}

BsplineCurve curve_from_json(const nlohmann::json& j) {
    BsplineCurve c;
    c.basis = BsplineBasis(j.at("lo").get<double>(), j.at("hi").get<double>(),
                           j.at("interior_knots").get<std::vector<double>>(), j.at("degree").get<std::size_t>());
    c.weights = j.at("weights").get<std::vector<double>>();
    if (c.weights.size() != c.basis.size()) throw ParseError("curve weights do not match its basis size");
    return c;
}

} // namespace supgcl
