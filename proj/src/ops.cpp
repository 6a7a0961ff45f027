#include "supgcl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "supgcl/error.hpp"

namespace supgcl::ad {
namespace {

std::string shape_str(const Tensor& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ContractError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                            shape_str(b));
    }
}

void require_finite(const char* op, const Tensor& a) {
    if (!a.all_finite()) {
        throw NumericError(std::string(op) + ": non-finite input");
    }
}

Tape& same_tape(Var a, Var b) {
    if (&a.tape() != &b.tape()) {
        throw ContractError("operands recorded on different tapes");
    }
    return a.tape();
}

// c += a * b (row-major, naive i-k-j order).
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = &c(i, 0);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a(i, p);
            if (av == 0.0) continue;
            const double* brow = b.data().data() + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

// c += a * b^T
void gemm_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.data().data() + i * k;
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = b.data().data() + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            c(i, j) += s;
        }
    }
}

// c += a^T * b
void gemm_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t r = 0; r < n; ++r) {
        const double* brow = b.data().data() + r * m;
        for (std::size_t i = 0; i < k; ++i) {
            const double av = a(r, i);
            if (av == 0.0) continue;
            double* crow = &c(i, 0);
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

template <class Fwd, class Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
    const Tensor& av = a.value();
    Tensor out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
    const std::size_t ia = a.id();
    const std::size_t self = a.tape().size();
    return a.tape().record(std::move(out), {a}, [ia, self, deriv](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        const Tensor& x = t.value(ia);
        const Tensor& y = t.value(self);
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * deriv(x[i], y[i]);
    });
}

} // namespace

Var matmul(Var a, Var b) {
    Tape& t = same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != bv.rows()) {
        throw ContractError("matmul: inner dimensions differ " + shape_str(av) + " * " +
                            shape_str(bv));
    }
    Tensor out(av.rows(), bv.cols());
    gemm_acc(av, bv, out);
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
        if (Tensor* ga = tp.grad_sink(ia)) gemm_nt_acc(g, tp.value(ib), *ga);
        if (Tensor* gb = tp.grad_sink(ib)) gemm_tn_acc(tp.value(ia), g, *gb);
    });
}

Var transpose(Var a) {
    const Tensor& av = a.value();
    Tensor out(av.cols(), av.rows());
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) out(j, i) = av(i, j);
    const std::size_t ia = a.id();
    return a.tape().record(std::move(out), {a}, [ia](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(j, i) += g(i, j);
    });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
    const Tensor& av = a.value();
    if (rows * cols != av.size()) {
        throw ContractError("reshape: cannot view " + shape_str(av) + " as " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    }
    Tensor out(rows, cols, std::vector<double>(av.data().begin(), av.data().end()));
    const std::size_t ia = a.id();
    return a.tape().record(std::move(out), {a}, [ia](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    });
}

Var add(Var a, Var b) {
    Tape& t = same_tape(a, b);
    require_same_shape("add", a.value(), b.value());
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
        if (Tensor* ga = tp.grad_sink(ia))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        if (Tensor* gb = tp.grad_sink(ib))
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
    });
}

Var sub(Var a, Var b) {
    Tape& t = same_tape(a, b);
    require_same_shape("sub", a.value(), b.value());
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
        if (Tensor* ga = tp.grad_sink(ia))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        if (Tensor* gb = tp.grad_sink(ib))
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    });
}

Var mul(Var a, Var b) {
    Tape& t = same_tape(a, b);
    require_same_shape("mul", a.value(), b.value());
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
        if (Tensor* ga = tp.grad_sink(ia)) {
            const Tensor& bv2 = tp.value(ib);
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv2[i];
        }
        if (Tensor* gb = tp.grad_sink(ib)) {
            const Tensor& av2 = tp.value(ia);
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av2[i];
        }
    });
}

Var scale(Var a, double s) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
    const std::size_t ia = a.id();
    return a.tape().record(std::move(out), {a}, [ia, s](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * s;
    });
}

Var add_scalar(Var a, double s) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s;
    const std::size_t ia = a.id();
    return a.tape().record(std::move(out), {a}, [ia](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    });
}

Var add_row(Var a, Var row) {
    Tape& t = same_tape(a, row);
    const Tensor& av = a.value();
    const Tensor& rv = row.value();
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw ContractError("add_row: expected 1x" + std::to_string(av.cols()) + " row, got " +
                            shape_str(rv));
    }
    Tensor out = av;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv[j];
    const std::size_t ia = a.id(), ir = row.id();
    return t.record(std::move(out), {a, row}, [ia, ir](Tape& tp, const Tensor& g) {
        if (Tensor* ga = tp.grad_sink(ia))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        if (Tensor* gr = tp.grad_sink(ir))
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) (*gr)[j] += g(i, j);
    });
}

Var mul_rows(Var a, Var column) {
    Tape& t = same_tape(a, column);
    const Tensor& av = a.value();
    const Tensor& cv = column.value();
    if (cv.cols() != 1 || cv.rows() != av.rows()) {
        throw ContractError("mul_rows: expected " + std::to_string(av.rows()) + "x1 column, got " +
                            shape_str(cv));
    }
    Tensor out = av;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= cv[i];
    const std::size_t ia = a.id(), ic = column.id();
    return t.record(std::move(out), {a, column}, [ia, ic](Tape& tp, const Tensor& g) {
        const Tensor& av2 = tp.value(ia);
        const Tensor& cv2 = tp.value(ic);
        if (Tensor* ga = tp.grad_sink(ia))
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(i, j) += g(i, j) * cv2[i];
        if (Tensor* gc = tp.grad_sink(ic))
            for (std::size_t i = 0; i < g.rows(); ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < g.cols(); ++j) s += g(i, j) * av2(i, j);
                (*gc)[i] += s;
            }
    });
}

Var exp(Var a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
    const Tensor& av = a.value();
    require_finite("log", av);
    for (double v : av.data()) {
        if (v <= 0.0) throw NumericError("log: non-positive input");
    }
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var tanh(Var a) {
    return unary(a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
    return unary(
        a,
        [](double x) {
            if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var a) {
    return unary(
        a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
        [](double x, double) {
            if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        });
}

Var sum(Var a) {
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    const std::size_t ia = a.id();
    return a.tape().record(Tensor::scalar(s), {a}, [ia](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g[0];
    });
}

Var mean(Var a) {
    const std::size_t n = a.value().size();
    if (n == 0) throw ContractError("mean of an empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var mean_rows(Var a) {
    const Tensor& av = a.value();
    if (av.rows() == 0) throw ContractError("mean_rows of a matrix with no rows");
    Tensor out(1, av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) out[j] += av(i, j);
    const double inv = 1.0 / static_cast<double>(av.rows());
    for (std::size_t j = 0; j < av.cols(); ++j) out[j] *= inv;
    const std::size_t ia = a.id();
    return a.tape().record(std::move(out), {a}, [ia, inv](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        for (std::size_t i = 0; i < ga->rows(); ++i)
            for (std::size_t j = 0; j < ga->cols(); ++j) (*ga)(i, j) += g[j] * inv;
    });
}

Var rowwise_dot(Var a, Var b) {
    Tape& t = same_tape(a, b);
    require_same_shape("rowwise_dot", a.value(), b.value());
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Tensor out(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) s += av(i, j) * bv(i, j);
        out[i] = s;
    }
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
        const Tensor& av2 = tp.value(ia);
        const Tensor& bv2 = tp.value(ib);
        if (Tensor* ga = tp.grad_sink(ia))
            for (std::size_t i = 0; i < av2.rows(); ++i)
                for (std::size_t j = 0; j < av2.cols(); ++j) (*ga)(i, j) += g[i] * bv2(i, j);
        if (Tensor* gb = tp.grad_sink(ib))
            for (std::size_t i = 0; i < av2.rows(); ++i)
                for (std::size_t j = 0; j < av2.cols(); ++j) (*gb)(i, j) += g[i] * av2(i, j);
    });
}

Var frobenius_inner(Var a, Var b) {
    Tape& t = same_tape(a, b);
    require_same_shape("frobenius_inner", a.value(), b.value());
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(Tensor::scalar(s), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
        if (Tensor* ga = tp.grad_sink(ia)) {
            const Tensor& bv2 = tp.value(ib);
            for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g[0] * bv2[i];
        }
        if (Tensor* gb = tp.grad_sink(ib)) {
            const Tensor& av2 = tp.value(ia);
            for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += g[0] * av2[i];
        }
    });
}

Var rowwise_l2_normalize(Var a) {
    const Tensor& av = a.value();
    require_finite("rowwise_l2_normalize", av);
    Tensor out(av.rows(), av.cols());
    std::vector<double> norms(av.rows());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) s += av(i, j) * av(i, j);
        const double n = std::sqrt(s);
        if (!(n > 0.0)) {
            throw NumericError("rowwise_l2_normalize: row " + std::to_string(i) +
                               " has zero norm; cosine similarity is undefined");
        }
        norms[i] = n;
        for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) = av(i, j) / n;
    }
    const std::size_t ia = a.id();
    const std::size_t self = a.tape().size();
    return a.tape().record(std::move(out), {a},
                           [ia, self, norms = std::move(norms)](Tape& t, const Tensor& g) {
                               Tensor* ga = t.grad_sink(ia);
                               const Tensor& y = t.value(self);
                               for (std::size_t i = 0; i < y.rows(); ++i) {
                                   double yg = 0.0;
                                   for (std::size_t j = 0; j < y.cols(); ++j) yg += y(i, j) * g(i, j);
                                   for (std::size_t j = 0; j < y.cols(); ++j)
                                       (*ga)(i, j) += (g(i, j) - y(i, j) * yg) / norms[i];
                               }
                           });
}

Var softmax_rows(Var a, double temperature) {
    if (!(temperature > 0.0)) throw ContractError("softmax_rows: temperature must be positive");
    const Tensor& av = a.value();
    require_finite("softmax_rows", av);
    Tensor out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < av.cols(); ++j) mx = std::max(mx, av(i, j) / temperature);
        double z = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) {
            out(i, j) = std::exp(av(i, j) / temperature - mx);
            z += out(i, j);
        }
        for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) /= z;
    }
    const std::size_t ia = a.id();
    const std::size_t self = a.tape().size();
    return a.tape().record(std::move(out), {a}, [ia, self, temperature](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        const Tensor& y = t.value(self);
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < y.cols(); ++j)
                (*ga)(i, j) += y(i, j) * (g(i, j) - dot) / temperature;
        }
    });
}

Var log_softmax_rows(Var a, double temperature) {
    if (!(temperature > 0.0)) throw ContractError("log_softmax_rows: temperature must be positive");
    const Tensor& av = a.value();
    require_finite("log_softmax_rows", av);
    Tensor out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < av.cols(); ++j) mx = std::max(mx, av(i, j) / temperature);
        double z = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) z += std::exp(av(i, j) / temperature - mx);
        const double lse = mx + std::log(z);
        for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) = av(i, j) / temperature - lse;
    }
    const std::size_t ia = a.id();
    const std::size_t self = a.tape().size();
    return a.tape().record(std::move(out), {a}, [ia, self, temperature](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        const Tensor& y = t.value(self);
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double gs = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) gs += g(i, j);
            for (std::size_t j = 0; j < y.cols(); ++j)
                (*ga)(i, j) += (g(i, j) - std::exp(y(i, j)) * gs) / temperature;
        }
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ContractError("concat_rows of nothing");
    Tape& t = parts.front().tape();
    const std::size_t cols = parts.front().cols();
    std::size_t rows = 0;
    for (const Var& p : parts) {
        if (p.cols() != cols) throw ContractError("concat_rows: column counts differ");
        rows += p.rows();
    }
    Tensor out(rows, cols);
    std::vector<std::size_t> ids, offsets;
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        std::copy(v.data().begin(), v.data().end(), out.data().begin() + off * cols);
        ids.push_back(p.id());
        offsets.push_back(off);
        off += v.rows();
    }
    return t.record(std::move(out), parts, [ids, offsets, cols](Tape& tp, const Tensor& g) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (Tensor* gp = tp.grad_sink(ids[k])) {
                const std::size_t base = offsets[k] * cols;
                for (std::size_t i = 0; i < gp->size(); ++i) (*gp)[i] += g[base + i];
            }
        }
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ContractError("concat_cols of nothing");
    Tape& t = parts.front().tape();
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
        if (p.rows() != rows) throw ContractError("concat_cols: row counts differ");
        cols += p.cols();
    }
    Tensor out(rows, cols);
    std::vector<std::size_t> ids, offsets;
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < v.cols(); ++j) out(i, off + j) = v(i, j);
        ids.push_back(p.id());
        offsets.push_back(off);
        off += v.cols();
    }
    return t.record(std::move(out), parts, [ids, offsets](Tape& tp, const Tensor& g) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (Tensor* gp = tp.grad_sink(ids[k])) {
                for (std::size_t i = 0; i < gp->rows(); ++i)
                    for (std::size_t j = 0; j < gp->cols(); ++j) (*gp)(i, j) += g(i, offsets[k] + j);
            }
        }
    });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
    const Tensor& av = a.value();
    Tensor out(index.size(), av.cols());
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] >= av.rows()) throw ContractError("gather_rows: index out of range");
        std::copy(av.row(index[k]).begin(), av.row(index[k]).end(), out.row(k).begin());
    }
    const std::size_t ia = a.id();
    std::vector<std::size_t> idx(index.begin(), index.end());
    return a.tape().record(std::move(out), {a}, [ia, idx = std::move(idx)](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            auto dst = ga->row(idx[k]);
            auto src = g.row(k);
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
    });
}

Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t out_rows) {
    const Tensor& av = a.value();
    if (index.size() != av.rows()) throw ContractError("scatter_add_rows: index length mismatch");
    Tensor out(out_rows, av.cols());
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] >= out_rows) throw ContractError("scatter_add_rows: index out of range");
        auto dst = out.row(index[k]);
        auto src = av.row(k);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    const std::size_t ia = a.id();
    std::vector<std::size_t> idx(index.begin(), index.end());
    return a.tape().record(std::move(out), {a}, [ia, idx = std::move(idx)](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            auto dst = ga->row(k);
            auto src = g.row(idx[k]);
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
    });
}

Var segment_softmax(Var logits, std::span<const std::size_t> segment, std::size_t segments) {
    const Tensor& lv = logits.value();
    require_finite("segment_softmax", lv);
    if (segment.size() != lv.rows()) throw ContractError("segment_softmax: segment length mismatch");
    const std::size_t h = lv.cols();
    Tensor mx(segments, h, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < segment.size(); ++k) {
        if (segment[k] >= segments) throw ContractError("segment_softmax: segment out of range");
        for (std::size_t c = 0; c < h; ++c) mx(segment[k], c) = std::max(mx(segment[k], c), lv(k, c));
    }
    Tensor out(lv.rows(), h);
    Tensor z(segments, h);
    for (std::size_t k = 0; k < segment.size(); ++k)
        for (std::size_t c = 0; c < h; ++c) {
            out(k, c) = std::exp(lv(k, c) - mx(segment[k], c));
            z(segment[k], c) += out(k, c);
        }
    for (std::size_t k = 0; k < segment.size(); ++k)
        for (std::size_t c = 0; c < h; ++c) out(k, c) /= z(segment[k], c);
    const std::size_t il = logits.id();
    const std::size_t self = logits.tape().size();
    std::vector<std::size_t> seg(segment.begin(), segment.end());
    return logits.tape().record(
        std::move(out), {logits}, [il, self, seg = std::move(seg), segments](Tape& t, const Tensor& g) {
            Tensor* gl = t.grad_sink(il);
            const Tensor& y = t.value(self);
            const std::size_t hh = y.cols();
            Tensor dot(segments, hh);
            for (std::size_t k = 0; k < seg.size(); ++k)
                for (std::size_t c = 0; c < hh; ++c) dot(seg[k], c) += g(k, c) * y(k, c);
            for (std::size_t k = 0; k < seg.size(); ++k)
                for (std::size_t c = 0; c < hh; ++c)
                    (*gl)(k, c) += y(k, c) * (g(k, c) - dot(seg[k], c));
        });
}

Var head_dot(Var a, Var b, std::size_t heads) {
    Tape& t = same_tape(a, b);
    require_same_shape("head_dot", a.value(), b.value());
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (heads == 0 || av.cols() % heads != 0) {
        throw ContractError("head_dot: width " + std::to_string(av.cols()) +
                            " not divisible by heads " + std::to_string(heads));
    }
    const std::size_t w = av.cols() / heads;
    Tensor out(av.rows(), heads);
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t h = 0; h < heads; ++h) {
            double s = 0.0;
            for (std::size_t j = h * w; j < (h + 1) * w; ++j) s += av(i, j) * bv(i, j);
            out(i, h) = s;
        }
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {a, b}, [ia, ib, w](Tape& tp, const Tensor& g) {
        const Tensor& av2 = tp.value(ia);
        const Tensor& bv2 = tp.value(ib);
        Tensor* ga = tp.grad_sink(ia);
        Tensor* gb = tp.grad_sink(ib);
        for (std::size_t i = 0; i < av2.rows(); ++i)
            for (std::size_t j = 0; j < av2.cols(); ++j) {
                const double gh = g(i, j / w);
                if (ga) (*ga)(i, j) += gh * bv2(i, j);
                if (gb) (*gb)(i, j) += gh * av2(i, j);
            }
    });
}

Var scale_head_blocks(Var a, Var weights) {
    Tape& t = same_tape(a, weights);
    const Tensor& av = a.value();
    const Tensor& wv = weights.value();
    if (wv.rows() != av.rows() || wv.cols() == 0 || av.cols() % wv.cols() != 0) {
        throw ContractError("scale_head_blocks: incompatible shapes " + shape_str(av) + " and " +
                            shape_str(wv));
    }
    const std::size_t w = av.cols() / wv.cols();
    Tensor out = av;
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) *= wv(i, j / w);
    const std::size_t ia = a.id(), iw = weights.id();
    return t.record(std::move(out), {a, weights}, [ia, iw, w](Tape& tp, const Tensor& g) {
        const Tensor& av2 = tp.value(ia);
        const Tensor& wv2 = tp.value(iw);
        Tensor* ga = tp.grad_sink(ia);
        Tensor* gw = tp.grad_sink(iw);
        for (std::size_t i = 0; i < av2.rows(); ++i)
            for (std::size_t j = 0; j < av2.cols(); ++j) {
                if (ga) (*ga)(i, j) += g(i, j) * wv2(i, j / w);
                if (gw) (*gw)(i, j / w) += g(i, j) * av2(i, j);
            }
    });
}

Var diagonal(Var a) {
    const Tensor& av = a.value();
    if (av.rows() != av.cols()) throw ContractError("diagonal of non-square " + shape_str(av));
    Tensor out(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) out[i] = av(i, i);
    const std::size_t ia = a.id();
    return a.tape().record(std::move(out), {a}, [ia](Tape& t, const Tensor& g) {
        Tensor* ga = t.grad_sink(ia);
        for (std::size_t i = 0; i < g.rows(); ++i) (*ga)(i, i) += g[i];
    });
}

Var element(Var a, std::size_t r, std::size_t c) {
    const Tensor& av = a.value();
    if (r >= av.rows() || c >= av.cols()) {
        throw ContractError("element: (" + std::to_string(r) + "," + std::to_string(c) +
                            ") outside " + shape_str(av));
    }
    const std::size_t ia = a.id();
    return a.tape().record(Tensor::scalar(av(r, c)), {a}, [ia, r, c](Tape& t, const Tensor& g) {
        (*t.grad_sink(ia))(r, c) += g[0];
    });
}

} // namespace supgcl::ad
