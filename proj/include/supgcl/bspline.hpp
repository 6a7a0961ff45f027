#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

namespace supgcl {

/// Clamped B-spline basis of `num_bases` functions of degree `degree` on
/// [lo, hi]. The full knot vector repeats lo and hi degree + 1 times.
class BsplineBasis {
public:
    BsplineBasis() = default;
    /// `interior` must be strictly increasing inside (lo, hi) and hold
    /// num_bases - degree - 1 knots.
    BsplineBasis(double lo, double hi, std::vector<double> interior, std::size_t degree);

    std::size_t size() const { return num_bases_; }
    std::size_t degree() const { return degree_; }
    double lo() const { return knots_.front(); }
    double hi() const { return knots_.back(); }
    const std::vector<double>& knots() const { return knots_; }

    /// Writes all basis values at x into `out` (size()). Points outside
    /// [lo, hi] are evaluated at the nearest end; returns true in that case.
    bool evaluate(double x, std::span<double> out) const;
    std::vector<double> operator()(double x) const;

private:
    std::vector<double> knots_;
    std::size_t degree_ = 0;
    std::size_t num_bases_ = 0;
};

/// Interior knots at equally spaced quantiles of `values`; falls back to
/// equally spaced knots when quantiles repeat. A constant sample gets the
/// range [v - 0.5, v + 0.5].
BsplineBasis quantile_basis(std::span<const double> values, std::size_t num_bases = 10, std::size_t degree = 3);
BsplineBasis uniform_basis(double lo, double hi, std::size_t num_bases = 10, std::size_t degree = 3);

/// m(x) = sum_s w_s b_s(x).
struct BsplineCurve {
    BsplineBasis basis;
    std::vector<double> weights;

    double operator()(double x, bool* clamped = nullptr) const;
};

nlohmann::json to_json(const BsplineCurve& c);
BsplineCurve curve_from_json(const nlohmann::json& j);

} // namespace supgcl
