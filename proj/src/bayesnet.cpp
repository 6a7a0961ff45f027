#include "supgcl/bayesnet.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <numbers>
#include <thread>

#include <Eigen/Dense>

#include "supgcl/error.hpp"
#include "supgcl/random.hpp"

namespace supgcl {

namespace {

struct GeneBasis {
    BsplineBasis basis;
    Eigen::MatrixXd design;  // samples x num_bases
};

GeneBasis make_gene_basis(std::span<const double> x, const SplineOptions& opt) {
    GeneBasis g{quantile_basis(x, opt.num_bases, opt.degree), Eigen::MatrixXd(x.size(), opt.num_bases)};
    std::vector<double> row(opt.num_bases);
    for (std::size_t s = 0; s < x.size(); ++s) {
        g.basis.evaluate(x[s], row);
        for (std::size_t k = 0; k < row.size(); ++k) g.design(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = row[k];
    }
    return g;
}

double gaussian_log_likelihood(double rss, std::size_t n, double* var_out) {
    const double var = std::max(rss / static_cast<double>(n), 1e-12);
    if (var_out) *var_out = var;
    return -0.5 * static_cast<double>(n) * (std::log(2.0 * std::numbers::pi * var) + 1.0);
}

NodeFit fit_with_bases(std::span<const double> child, std::vector<std::size_t> parent_ids,
                       const std::vector<const GeneBasis*>& bases, const SplineOptions& opt) {
    const std::size_t n = child.size();
    NodeFit fit;
    fit.parents = std::move(parent_ids);
    Eigen::Map<const Eigen::VectorXd> y(child.data(), static_cast<Eigen::Index>(n));
    if (bases.empty()) {
        fit.mean = y.mean();
        const double rss = (y.array() - fit.mean).square().sum();
        fit.log_likelihood = gaussian_log_likelihood(rss, n, &fit.noise_var);
        fit.parameters = 2;
        return fit;
    }
    const auto m = static_cast<Eigen::Index>(opt.num_bases);
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(n), m * static_cast<Eigen::Index>(bases.size()));
    for (std::size_t p = 0; p < bases.size(); ++p) phi.middleCols(static_cast<Eigen::Index>(p) * m, m) = bases[p]->design;
    Eigen::MatrixXd gram = phi.transpose() * phi;
    gram.diagonal().array() += opt.ridge;
    const Eigen::VectorXd w = gram.llt().solve(phi.transpose() * y);
    const double rss = (y - phi * w).squaredNorm();
    fit.log_likelihood = gaussian_log_likelihood(rss, n, &fit.noise_var);
    fit.parameters = opt.num_bases * bases.size() + 1;
    for (std::size_t p = 0; p < bases.size(); ++p) {
        const auto seg = w.segment(static_cast<Eigen::Index>(p) * m, m);
        fit.curves.push_back({bases[p]->basis, std::vector<double>(seg.begin(), seg.end())});
    }
    return fit;
}

void check_data(const ExpressionMatrix& data, const SplineOptions& opt) {
    if (data.num_genes() == 0) throw ContractError("expression matrix has no genes");
    if (data.num_samples() < opt.num_bases) {
        throw ContractError("need at least " + std::to_string(opt.num_bases) + " samples, found " +
                            std::to_string(data.num_samples()));
    }
}

bool reaches(const ParentSets& parents, std::size_t from, std::size_t to, const Edge* ignore = nullptr) {
    // Walk children of `from`; children are recovered from parent lists.
    const std::size_t n = parents.size();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        if (u == to) return true;
        for (std::size_t c = 0; c < n; ++c) {
            if (seen[c]) continue;
            const auto& pa = parents[c];
            if (std::find(pa.begin(), pa.end(), u) == pa.end()) continue;
            if (ignore && ignore->src == u && ignore->dst == c) continue;
            seen[c] = 1;
            stack.push_back(c);
        }
    }
    return false;
}

// Local scores on one dataset, cached per (child, sorted parent set).
class LocalScorer {
public:
    LocalScorer(const ExpressionMatrix& data, const ScoreOptions& opt) : data_(data), opt_(opt) {
        for (std::size_t g = 0; g < data.num_genes(); ++g) bases_.push_back(make_gene_basis(data.gene(g), opt.spline));
    }

    double score(std::size_t child, std::vector<std::size_t> parents) {
        std::sort(parents.begin(), parents.end());
        auto key = std::make_pair(child, parents);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        std::vector<const GeneBasis*> b;
        for (std::size_t p : parents) b.push_back(&bases_[p]);
        const double s = local_score(fit_with_bases(data_.gene(child), parents, b, opt_.spline),
                                     data_.num_samples(), opt_.kappa);
        cache_.emplace(std::move(key), s);
        return s;
    }

private:
    const ExpressionMatrix& data_;
    ScoreOptions opt_;
    std::vector<GeneBasis> bases_;
    std::map<std::pair<std::size_t, std::vector<std::size_t>>, double> cache_;
};

std::vector<std::size_t> with(std::vector<std::size_t> v, std::size_t x) {
    v.push_back(x);
    return v;
}

std::vector<std::size_t> without(std::vector<std::size_t> v, std::size_t x) {
    v.erase(std::remove(v.begin(), v.end(), x), v.end());
    return v;
}

} // namespace

double NodeFit::predict(std::span<const double> parent_values) const {
    if (curves.empty()) return mean;
    double s = 0.0;
    for (std::size_t p = 0; p < curves.size(); ++p) s += curves[p](parent_values[p]);
    return s;
}

NodeFit fit_regression(std::span<const double> child, const std::vector<std::span<const double>>& parents,
                       const SplineOptions& opt) {
    if (child.size() < opt.num_bases) throw ContractError("too few samples for the spline basis");
    for (double v : child)
        if (!std::isfinite(v)) throw ContractError("child values must be finite");
    std::vector<GeneBasis> bases;
    std::vector<std::size_t> ids;
    for (std::size_t p = 0; p < parents.size(); ++p) {
        if (parents[p].size() != child.size()) throw ContractError("parent and child sample counts differ");
        bases.push_back(make_gene_basis(parents[p], opt));
        ids.push_back(p);
    }
    std::vector<const GeneBasis*> ptrs;
    for (const auto& b : bases) ptrs.push_back(&b);
    return fit_with_bases(child, ids, ptrs, opt);
}

double local_score(const NodeFit& fit, std::size_t samples, double kappa) {
    return fit.log_likelihood -
           kappa * static_cast<double>(fit.parameters) * std::log(static_cast<double>(samples)) / 2.0;
}

std::vector<Edge> BsplineBayesNet::edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j : nodes[i].parents) out.push_back({j, i});
    std::sort(out.begin(), out.end());
    return out;
}

const BsplineCurve& BsplineBayesNet::curve(std::size_t j, std::size_t i) const {
    const auto& pa = nodes.at(i).parents;
    auto it = std::find(pa.begin(), pa.end(), j);
    if (it == pa.end()) throw ContractError("no edge " + std::to_string(j) + " -> " + std::to_string(i));
    return nodes[i].curves[static_cast<std::size_t>(it - pa.begin())];
}

bool is_acyclic(const ParentSets& parents) {
    const std::size_t n = parents.size();
    std::vector<std::size_t> indeg(n, 0);
    for (std::size_t i = 0; i < n; ++i) indeg[i] = parents[i].size();
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    std::size_t done = 0;
    while (!ready.empty()) {
        const std::size_t u = ready.back();
        ready.pop_back();
        ++done;
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t p : parents[c])
                if (p == u && --indeg[c] == 0) ready.push_back(c);
    }
    return done == n;
}

BsplineBayesNet fit_network(const ParentSets& parents, const ExpressionMatrix& data, const SplineOptions& opt) {
    check_data(data, opt);
    if (parents.size() != data.num_genes()) throw ContractError("parent sets do not match the gene count");
    if (!is_acyclic(parents)) throw ContractError("network structure is not acyclic");
    std::vector<GeneBasis> bases;
    for (std::size_t g = 0; g < data.num_genes(); ++g) bases.push_back(make_gene_basis(data.gene(g), opt));
    BsplineBayesNet net;
    net.vocab = data.vocab();
    for (std::size_t i = 0; i < parents.size(); ++i) {
        std::vector<std::size_t> pa = parents[i];
        std::sort(pa.begin(), pa.end());
        std::vector<const GeneBasis*> b;
        for (std::size_t p : pa) {
            if (p >= data.num_genes() || p == i) throw ContractError("invalid parent index");
            b.push_back(&bases[p]);
        }
        net.nodes.push_back(fit_with_bases(data.gene(i), pa, b, opt));
    }
    return net;
}

double network_score(const ParentSets& parents, const ExpressionMatrix& data, const ScoreOptions& opt) {
    const BsplineBayesNet net = fit_network(parents, data, opt.spline);
    double s = 0.0;
    for (const auto& node : net.nodes) s += local_score(node, data.num_samples(), opt.kappa);
    return s;
}

double network_score(const BsplineBayesNet& net, const ExpressionMatrix& data, const ScoreOptions& opt) {
    ParentSets parents;
    for (const auto& node : net.nodes) parents.push_back(node.parents);
    return network_score(parents, data, opt);
}

HillClimbResult hill_climb(const ExpressionMatrix& data, const HillClimbOptions& opt) {
    check_data(data, opt.score.spline);
    const std::size_t n = data.num_genes();
    LocalScorer scorer(data, opt.score);
    HillClimbResult res;
    res.parents.assign(n, {});
    std::vector<double> local(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += (local[i] = scorer.score(i, {}));
    res.score_trace.push_back(total);

    enum Kind { add, remove, reverse };
    constexpr double min_gain = 1e-9;
    auto has = [&](std::size_t j, std::size_t i) {
        const auto& pa = res.parents[i];
        return std::find(pa.begin(), pa.end(), j) != pa.end();
    };

    while (res.iterations < opt.max_iters) {
        double best = min_gain;
        int best_kind = -1;
        std::size_t bj = 0, bi = 0;
        for (int kind : {add, remove, reverse}) {
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == j) continue;
                    double delta = 0.0;
                    if (kind == add) {
                        if (has(j, i) || has(i, j) || res.parents[i].size() >= opt.max_parents) continue;
                        if (reaches(res.parents, i, j)) continue;
                        delta = scorer.score(i, with(res.parents[i], j)) - local[i];
                    } else if (kind == remove) {
                        if (!has(j, i)) continue;
                        delta = scorer.score(i, without(res.parents[i], j)) - local[i];
                    } else {
                        if (!has(j, i) || res.parents[j].size() >= opt.max_parents) continue;
                        const Edge direct{j, i};
                        if (reaches(res.parents, j, i, &direct)) continue;
                        delta = scorer.score(i, without(res.parents[i], j)) - local[i] +
                                scorer.score(j, with(res.parents[j], i)) - local[j];
                    }
                    if (delta > best) {
                        best = delta;
                        best_kind = kind;
                        bj = j;
                        bi = i;
                    }
                }
            }
        }
        if (best_kind < 0) break;
        if (best_kind == add) {
            res.parents[bi].push_back(bj);
        } else if (best_kind == remove) {
            res.parents[bi] = without(res.parents[bi], bj);
        } else {
            res.parents[bi] = without(res.parents[bi], bj);
            res.parents[bj].push_back(bi);
            local[bj] = scorer.score(bj, res.parents[bj]);
        }
        local[bi] = scorer.score(bi, res.parents[bi]);
        total = 0.0;
        for (double s : local) total += s;
        res.score_trace.push_back(total);
        ++res.iterations;
    }
    for (auto& pa : res.parents) std::sort(pa.begin(), pa.end());
    return res;
}

BootstrapResult bootstrap_structure(const ExpressionMatrix& data, const BootstrapOptions& opt) {
    if (opt.runs == 0) throw ContractError("bootstrap needs at least one run");
    if (!(opt.threshold > 0.0 && opt.threshold <= 1.0)) throw ContractError("threshold must lie in (0, 1]");
    check_data(data, opt.search.score.spline);
    const std::size_t n = data.num_genes(), m = data.num_samples();

    std::vector<ParentSets> found(opt.runs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t r = next++; r < opt.runs; r = next++) {
            try {
                Rng rng(derive_seed(opt.seed, r));
                std::vector<std::size_t> cols(m);
                for (auto& c : cols) c = uniform_index(rng, m);
                found[r] = hill_climb(data.select_samples(cols), opt.search).parents;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(opt.threads, opt.runs));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    BootstrapResult res;
    std::map<Edge, std::size_t> counts;
    for (const auto& parents : found)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j : parents[i]) ++counts[{j, i}];
    std::vector<std::pair<Edge, std::size_t>> kept;
    for (const auto& [e, c] : counts) {
        const double f = static_cast<double>(c) / static_cast<double>(opt.runs);
        res.frequencies[e] = f;
        if (f >= opt.threshold) kept.emplace_back(e, c);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    ParentSets parents(n);
    for (const auto& [e, c] : kept) {
        if (reaches(parents, e.dst, e.src)) continue;
        parents[e.dst].push_back(e.src);
    }
    res.network = fit_network(parents, data, opt.search.score.spline);
    res.edges = res.network.edges();
    return res;
}

std::vector<Grn> derive_sample_grns(const BsplineBayesNet& net, const ExpressionMatrix& data, std::size_t* clamped) {
    if (!net.vocab || !data.vocab() || !(*net.vocab == *data.vocab())) {
        throw ContractError("network and expression matrix use different gene sets");
    }
    const std::vector<Edge> edges = net.edges();
    std::vector<const BsplineCurve*> curves;
    for (const Edge& e : edges) curves.push_back(&net.curve(e.src, e.dst));
    std::vector<Grn> out;
    out.reserve(data.num_samples());
    for (std::size_t s = 0; s < data.num_samples(); ++s) {
        std::vector<double> x = data.sample(s);
        std::vector<double> ef(edges.size());
        for (std::size_t k = 0; k < edges.size(); ++k) {
            bool c = false;
            ef[k] = (*curves[k])(x[edges[k].src], &c);
            if (c && clamped) ++*clamped;
        }
        out.emplace_back(net.vocab, edges, std::move(x), std::move(ef));
    }
    return out;
}

nlohmann::json to_json(const BsplineBayesNet& net) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        const NodeFit& f = net.nodes[i];
        nlohmann::json parents = nlohmann::json::array(), curves = nlohmann::json::array();
        for (std::size_t p = 0; p < f.parents.size(); ++p) {
            parents.push_back(net.vocab->name(f.parents[p]));
            curves.push_back(to_json(f.curves[p]));
        }
        nodes.push_back({{"gene", net.vocab->name(i)},
                         {"parents", parents},
                         {"curves", curves},
                         {"mean", f.mean},
                         {"noise_var", f.noise_var}});
    }
    return {{"vocab", net.vocab->names()}, {"nodes", nodes}};
}

nlohmann::json frequencies_to_json(const BootstrapResult& r, const GeneVocabulary& vocab, const BootstrapOptions& opt) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [e, f] : r.frequencies) {
        const bool kept = std::binary_search(r.edges.begin(), r.edges.end(), e);
        edges.push_back({{"src", vocab.name(e.src)}, {"dst", vocab.name(e.dst)}, {"frequency", f}, {"kept", kept}});
    }
    return {{"runs", opt.runs}, {"threshold", opt.threshold}, {"seed", opt.seed}, {"edges", edges}};
}

} // namespace supgcl
