#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <vector>

#include "supgcl/labels.hpp"

// Brute-force references written independently of src/metrics.cpp and
// src/heads.cpp: set algebra and per-event risk-set sums.
namespace supgcl::oracle {

inline std::set<std::size_t> ones(const std::vector<int>& row) {
    std::set<std::size_t> s;
    for (std::size_t c = 0; c < row.size(); ++c)
        if (row[c] != 0) s.insert(c);
    return s;
}

inline double subset_accuracy(const std::vector<std::vector<int>>& p, const std::vector<std::vector<int>>& t) {
    double hits = 0;
    for (std::size_t i = 0; i < p.size(); ++i) hits += ones(p[i]) == ones(t[i]);
    return hits / static_cast<double>(p.size());
}

inline double jaccard(const std::vector<std::vector<int>>& p, const std::vector<std::vector<int>>& t) {
    double total = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto a = ones(p[i]), b = ones(t[i]);
        std::set<std::size_t> u = a, x;
        u.insert(b.begin(), b.end());
        for (auto v : a)
            if (b.count(v)) x.insert(v);
        total += u.empty() ? 1.0 : static_cast<double>(x.size()) / static_cast<double>(u.size());
    }
    return total / static_cast<double>(p.size());
}

// Per-column precision and recall, F1 as their harmonic mean.
inline double macro_f1(const std::vector<std::vector<int>>& p, const std::vector<std::vector<int>>& t) {
    const std::size_t cols = p[0].size();
    double total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
        std::set<std::size_t> pred, truth, both;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i][c]) pred.insert(i);
            if (t[i][c]) truth.insert(i);
            if (p[i][c] && t[i][c]) both.insert(i);
        }
        if (both.empty()) continue;
        const double prec = static_cast<double>(both.size()) / static_cast<double>(pred.size());
        const double rec = static_cast<double>(both.size()) / static_cast<double>(truth.size());
        total += 2 * prec * rec / (prec + rec);
    }
    return total / static_cast<double>(cols);
}

// Unordered pairs; the member with the shorter time must have an event.
inline double c_index(const std::vector<double>& r, const std::vector<SurvivalRecord>& s) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        for (std::size_t j = i + 1; j < r.size(); ++j) {
            if (s[i].time == s[j].time) continue;
            const std::size_t early = s[i].time < s[j].time ? i : j;
            const std::size_t late = early == i ? j : i;
            if (s[early].event != 1) continue;
            den += 1;
            if (r[early] > r[late]) num += 1;
            if (r[early] == r[late]) num += 0.5;
        }
    }
    return num / den;
}

// Breslow: each event contributes log sum_{T_j >= T_i} e^{r_j} - r_i.
inline double cox_npll(const std::vector<double>& r, const std::vector<SurvivalRecord>& s) {
    long double total = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (s[i].event != 1) continue;
        long double sum = 0;
        for (std::size_t j = 0; j < r.size(); ++j)
            if (s[j].time >= s[i].time) sum += std::exp(static_cast<long double>(r[j]));
        total += std::log(sum) - r[i];
    }
    return static_cast<double>(total);
}

} // namespace supgcl::oracle
