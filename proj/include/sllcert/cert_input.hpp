#pragma once

#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sllcert/linalg.hpp"
#include "sllcert/network.hpp"
#include "sllcert/parallel.hpp"

namespace sllcert {

inline constexpr double kCertifyTol = 1e-6;

// Per-boundary sparsity levels (s^0, s^1, ..., s^K); s^0 stays 0 when
// certifying against unconstrained input perturbations.
using SparsityVector = std::vector<std::size_t>;

inline SparsityVector zero_sparsity(std::size_t depth) { return SparsityVector(depth + 1, 0); }

// Feasible levels never exceed the number of inactive neurons at the input.
inline bool sparsity_feasible(const ForwardTrace& trace, const SparsityVector& s) {
    if (s.size() != trace.layers.size() + 1) throw std::invalid_argument("sparsity vector length != depth + 1");
    std::size_t zeros0 = 0;
    for (double v : trace.input)
        if (v == 0.0) ++zeros0;
    if (s[0] > zeros0) return false;
    for (std::size_t k = 0; k < trace.layers.size(); ++k)
        if (s[k + 1] > trace.layers[k].inactive.size()) return false;
    return true;
}

struct LayerRadius {
    IndexSet stable_inactive;
    double radius = 0.0;
};

// Stable inactive set and sparse local radius of layer `layer_idx` (0-based)
// at the traced input: the top s_k entries of -q^k and the ReLU of the s_k-th
// largest. s_k = 0 is the global case with an empty set and infinite radius;
// infeasible s_k naturally yields radius 0.
inline LayerRadius layer_radius(const ForwardTrace& trace, std::size_t layer_idx, std::size_t s_k) {
    const LayerTrace& lt = trace.layers.at(layer_idx);
    const std::size_t d = lt.q.size();
    if (s_k > d) throw std::invalid_argument("layer_radius: sparsity level exceeds layer width");
    if (s_k == 0) return {IndexSet::empty(d), kInf};
    Vector neg_q(d);
    for (std::size_t i = 0; i < d; ++i) neg_q[i] = -lt.q[i];
    LayerRadius out;
    out.stable_inactive = top_k_indices(neg_q, s_k);
    double v = kth_largest(neg_q, s_k);
    out.radius = v > 0.0 ? v : 0.0;
    return out;
}

// Operator norm of W^k restricted to rows J_cur and columns J_prev.
inline double layer_scale(const Network& net, const IndexSet& j_prev, const IndexSet& j_cur,
                          std::size_t layer_idx) {
    if (j_cur.size() == 0) return 0.0;
    return spectral_norm(submatrix(net.layers.at(layer_idx).weight, j_cur, j_prev));
}

// Memo for reduced-block operator norms, keyed per layer by the (s_in, s_out)
// pair; the retained sets are Top-k selections so the pair determines them.
using ScaleCache = std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double>;

namespace detail {

inline double cached_layer_scale(const Network& net, const ForwardTrace& trace, std::size_t layer_idx,
                                 std::size_t s_in, std::size_t s_out, const IndexSet& j_prev,
                                 ScaleCache* cache) {
    if (cache) {
        auto key = std::make_tuple(layer_idx, s_in, s_out);
        auto it = cache->find(key);
        if (it != cache->end()) return it->second;
        double v = layer_scale(net, j_prev, layer_radius(trace, layer_idx, s_out).stable_inactive.complement(),
                               layer_idx);
        cache->emplace(key, v);
        return v;
    }
    return layer_scale(net, j_prev, layer_radius(trace, layer_idx, s_out).stable_inactive.complement(),
                       layer_idx);
}

} // namespace detail

struct ComposeResult {
    double r_cum = 0.0;
    double l_cum = 1.0;
    std::vector<IndexSet> retained;        // J^0 .. J^K
    std::vector<double> layer_radii;       // r^(k)
    std::vector<double> layer_scales;      // l^(k)
    bool feasible = true;
};

// Cumulative sparse local radius and Lipschitz scale for the whole
// representation map at sparsity vector s. Index sets are fixed per layer by
// the Top-k rule; an infeasible s collapses to radius 0 with full-map scales.
inline ComposeResult compose(const Network& net, const ForwardTrace& trace, const SparsityVector& s,
                             ScaleCache* cache = nullptr) {
    const std::size_t depth = net.depth();
    if (s.size() != depth + 1) throw std::invalid_argument("compose: sparsity vector length != depth + 1");

    ComposeResult out;
    if (!sparsity_feasible(trace, s)) {
        out.feasible = false;
        out.r_cum = 0.0;
        out.l_cum = 1.0;
        out.retained.push_back(IndexSet::full(net.input_dim()));
        for (std::size_t k = 0; k < depth; ++k) {
            out.retained.push_back(IndexSet::full(net.layer_dim(k)));
            double full = spectral_norm(net.layers[k].weight);
            out.layer_radii.push_back(0.0);
            out.layer_scales.push_back(full);
            out.l_cum *= full;
        }
        return out;
    }

    out.retained.reserve(depth + 1);
    out.retained.push_back(IndexSet::full(net.input_dim()));  // J^0 = [d^0], s^0 = 0 for certification
    double l_prefix = 1.0;  // l^[k-1]
    out.r_cum = kInf;
    for (std::size_t k = 0; k < depth; ++k) {
        LayerRadius lr = layer_radius(trace, k, s[k + 1]);
        IndexSet j_cur = lr.stable_inactive.complement();
        double scale = detail::cached_layer_scale(net, trace, k, s[k], s[k + 1], out.retained.back(), cache);
        out.layer_radii.push_back(lr.radius);
        out.layer_scales.push_back(scale);
        double term = l_prefix > 0.0 ? lr.radius / l_prefix : kInf;
        out.r_cum = std::min(out.r_cum, term);
        l_prefix *= scale;
        out.retained.push_back(std::move(j_cur));
    }
    out.l_cum = l_prefix;
    return out;
}

// Certified radius at a fixed sparsity vector: the smaller
// of the cumulative radius and the margin term.
inline double certify_at(const Network& net, const ForwardTrace& trace, const SparsityVector& s,
                         double classifier_norm = -1.0, ScaleCache* cache = nullptr) {
    if (trace.margin <= 0.0) return 0.0;
    if (classifier_norm < 0.0) classifier_norm = spectral_norm(net.classifier);
    ComposeResult c = compose(net, trace, s, cache);
    double denom = 2.0 * classifier_norm * c.l_cum;
    double margin_term = denom > 0.0 ? trace.margin / denom : kInf;
    return std::min(c.r_cum, margin_term);
}

inline double certify_at(const Network& net, const Vector& x, const SparsityVector& s) {
    ForwardTrace trace = forward(net, x);
    return certify_at(net, trace, s);
}

struct GreedyResult {
    SparsityVector s;
    double l_cum = 1.0;
    std::vector<IndexSet> retained;
};

namespace detail {

inline GreedyResult greedy_sparsity_impl(const Network& net, const ForwardTrace& trace, double nu,
                                         ScaleCache* cache) {
    if (nu < 0.0) throw std::invalid_argument("greedy_sparsity: nu must be nonnegative");
    const std::size_t depth = net.depth();
    GreedyResult out;
    out.s = zero_sparsity(depth);
    out.retained.push_back(IndexSet::full(net.input_dim()));
    double nu_hat = nu;
    for (std::size_t k = 0; k < depth; ++k) {
        const LayerTrace& lt = trace.layers[k];
        const std::size_t cap = lt.inactive.size();
        std::size_t s_k;
        if (nu_hat > 0.0) {
            // r^(k)(s) >= nu_hat iff the s-th largest of -q clears nu_hat
            std::size_t count = 0;
            for (double q : lt.q)
                if (-q >= nu_hat) ++count;
            s_k = std::min(count, cap);
        } else {
            s_k = cap;  // zero perturbation passes every radius test; cap at feasibility
        }
        out.s[k + 1] = s_k;
        double scale = cached_layer_scale(net, trace, k, out.s[k], s_k, out.retained.back(), cache);
        out.retained.push_back(layer_radius(trace, k, s_k).stable_inactive.complement());
        out.l_cum *= scale;
        nu_hat *= scale;
    }
    return out;
}

} // namespace detail

// Algorithm-1 greedy sparsity: per layer the maximal level whose sparse local
// radius still admits the propagated perturbation energy.
inline SparsityVector greedy_sparsity(const Network& net, const ForwardTrace& trace, double nu) {
    return detail::greedy_sparsity_impl(net, trace, nu, nullptr).s;
}

struct InputCertificate {
    double r_sparse = 0.0;
    double r_global = 0.0;
    SparsityVector s_hat;
    std::vector<double> layer_radii;
    std::vector<double> layer_scales;
    double r_cum = 0.0;
    double l_cum = 1.0;
    double l_cum_global = 1.0;
    double margin = 0.0;
    std::size_t predicted = 0;
    double classifier_norm = 0.0;
    double classifier_norm_reduced = 0.0;  // diagnostic only; certification uses the full ||A||_2
    double tol = kCertifyTol;
};

// Binary search over the perturbation energy: a probe nu is safe when the
// margin term at the greedy sparsity vector admits it. Safety is monotone
// (greedy levels shrink entrywise as nu grows), so the search brackets the
// optimal certificate; the domain grows past ||x||_2 only if the global
// certificate already exceeds it, which keeps r_sparse >= r_global - tol.
inline InputCertificate certify(const Network& net, const Vector& x, double tol = kCertifyTol) {
    if (tol <= 0.0) throw std::invalid_argument("certify: tol must be positive");
    ForwardTrace trace = forward(net, x);
    ScaleCache cache;

    InputCertificate cert;
    cert.tol = tol;
    cert.margin = trace.margin;
    cert.predicted = trace.predicted;
    cert.classifier_norm = spectral_norm(net.classifier);
    cert.r_global = certify_at(net, trace, zero_sparsity(net.depth()), cert.classifier_norm, &cache);
    {
        ComposeResult full = compose(net, trace, zero_sparsity(net.depth()), &cache);
        cert.l_cum_global = full.l_cum;
    }

    auto safe = [&](double nu) {
        GreedyResult g = detail::greedy_sparsity_impl(net, trace, nu, &cache);
        double denom = 2.0 * cert.classifier_norm * g.l_cum;
        double bound = denom > 0.0 ? trace.margin / denom : kInf;
        return nu <= bound;
    };

    double lo = 0.0;
    if (trace.margin > 0.0) {
        double hi = std::max(norm2(x), tol);
        if (safe(hi)) {
            for (int i = 0; i < 64 && safe(hi); ++i) {
                lo = hi;
                hi *= 2.0;
            }
        }
        while (hi - lo > tol) {
            double mid = lo + 0.5 * (hi - lo);
            if (safe(mid)) lo = mid;
            else hi = mid;
        }
    }
    cert.r_sparse = lo;

    GreedyResult g = detail::greedy_sparsity_impl(net, trace, lo, &cache);
    cert.s_hat = g.s;
    ComposeResult c = compose(net, trace, g.s, &cache);
    cert.layer_radii = c.layer_radii;
    cert.layer_scales = c.layer_scales;
    cert.r_cum = c.r_cum;
    cert.l_cum = c.l_cum;
    cert.classifier_norm_reduced =
        spectral_norm(submatrix(net.classifier, IndexSet::full(net.classifier.rows), c.retained.back()));
    return cert;
}

struct SecurityCurvePoint {
    double nu = 0.0;
    double certified_acc_sparse = 0.0;
    double certified_acc_global = 0.0;
    double clean_acc = 0.0;
};

template <typename DatasetT>
inline std::vector<SecurityCurvePoint> security_curve(const Network& net, const DatasetT& data,
                                                      const std::vector<double>& nu_grid,
                                                      double tol = kCertifyTol) {
    if (data.size() == 0) throw std::invalid_argument("security_curve: empty dataset");
    for (std::size_t i = 1; i < nu_grid.size(); ++i)
        if (nu_grid[i] < nu_grid[i - 1]) throw std::invalid_argument("security_curve: grid must be ascending");

    struct PerSample {
        bool correct = false;
        double r_sparse = 0.0;
        double r_global = 0.0;
    };
    std::vector<PerSample> per(data.size());
    parallel_for(data.size(), [&](std::size_t i) {
        InputCertificate cert = certify(net, data.inputs[i], tol);
        per[i].correct = cert.predicted == data.labels[i];
        per[i].r_sparse = cert.r_sparse;
        per[i].r_global = cert.r_global;
    });

    std::vector<SecurityCurvePoint> curve;
    curve.reserve(nu_grid.size());
    double n = static_cast<double>(data.size());
    for (double nu : nu_grid) {
        SecurityCurvePoint p;
        p.nu = nu;
        std::size_t sp = 0, gl = 0, clean = 0;
        for (const auto& s : per) {
            if (!s.correct) continue;
            ++clean;
            if (s.r_sparse >= nu) ++sp;
            if (s.r_global >= nu) ++gl;
        }
        p.certified_acc_sparse = sp / n;
        p.certified_acc_global = gl / n;
        p.clean_acc = clean / n;
        curve.push_back(p);
    }
    return curve;
}

// ---- monotone ordering harness -------------------------------------------

struct MonotoneReport {
    bool ok = true;
    std::vector<std::string> violations;

    void fail(std::string what) {
        ok = false;
        violations.push_back(std::move(what));
    }
};

struct LayerSensitivityTable {
    std::vector<double> radius;              // indexed by s_out
    std::vector<std::vector<double>> scale;  // [s_in][s_out]
};

inline void check_monotone_tables(const LayerSensitivityTable& t, std::size_t layer_idx,
                                  MonotoneReport& report) {
    for (std::size_t s = 0; s + 1 < t.radius.size(); ++s)
        if (t.radius[s + 1] > t.radius[s] + 1e-12)
            report.fail("layer " + std::to_string(layer_idx) + ": radius increases at s_out=" +
                        std::to_string(s + 1));
    for (std::size_t si = 0; si < t.scale.size(); ++si)
        for (std::size_t so = 0; so + 1 < t.scale[si].size(); ++so)
            if (t.scale[si][so + 1] > t.scale[si][so] + 1e-9)
                report.fail("layer " + std::to_string(layer_idx) + ": scale increases in s_out at (" +
                            std::to_string(si) + "," + std::to_string(so + 1) + ")");
    for (std::size_t si = 0; si + 1 < t.scale.size(); ++si)
        for (std::size_t so = 0; so < t.scale[si].size(); ++so)
            if (t.scale[si + 1][so] > t.scale[si][so] + 1e-9)
                report.fail("layer " + std::to_string(layer_idx) + ": scale increases in s_in at (" +
                            std::to_string(si + 1) + "," + std::to_string(so) + ")");
}

// Builds the full radius/scale tables of every layer and verifies the
// monotone-ordering conditions; intended for small test networks.
inline MonotoneReport monotone_check(const Network& net, const ForwardTrace& trace) {
    MonotoneReport report;
    for (std::size_t k = 0; k < net.depth(); ++k) {
        const std::size_t cap_out = trace.layers[k].inactive.size();
        std::size_t cap_in;
        std::vector<std::size_t> in_order;  // inactive input indices, most stable first
        if (k == 0) {
            for (std::size_t i = 0; i < trace.input.size(); ++i)
                if (trace.input[i] == 0.0) in_order.push_back(i);
            cap_in = in_order.size();
        } else {
            Vector neg_q(trace.layers[k - 1].q.size());
            for (std::size_t i = 0; i < neg_q.size(); ++i) neg_q[i] = -trace.layers[k - 1].q[i];
            in_order = detail::order_desc(neg_q);
            cap_in = trace.layers[k - 1].inactive.size();
        }

        LayerSensitivityTable t;
        t.radius.resize(cap_out + 1);
        for (std::size_t so = 0; so <= cap_out; ++so) t.radius[so] = layer_radius(trace, k, so).radius;
        const std::size_t d_in = net.layers[k].weight.cols;
        t.scale.assign(cap_in + 1, std::vector<double>(cap_out + 1, 0.0));
        for (std::size_t si = 0; si <= cap_in; ++si) {
            IndexSet i_in(std::vector<std::size_t>(in_order.begin(),
                                                   in_order.begin() + static_cast<std::ptrdiff_t>(si)),
                          d_in);
            IndexSet j_in = i_in.complement();
            for (std::size_t so = 0; so <= cap_out; ++so) {
                IndexSet j_out = layer_radius(trace, k, so).stable_inactive.complement();
                t.scale[si][so] = layer_scale(net, j_in, j_out, k);
            }
        }
        check_monotone_tables(t, k, report);
    }
    return report;
}

} // namespace sllcert
