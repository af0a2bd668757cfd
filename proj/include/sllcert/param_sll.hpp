#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sllcert/babel.hpp"
#include "sllcert/cert_input.hpp"
#include "sllcert/network.hpp"

namespace sllcert {

inline void require_zero_bias(const Network& net) {
    if (!net.zero_bias())
        throw std::invalid_argument("parameter-sensitivity analysis requires a zero-bias network");
}

// Hypothesis-class constants: per parameter matrix a group-norm bound M_W and
// a babel table M_s[s] valid for every column sparsity level. Matrices are
// ordered W^1..W^K followed by the transposed classifier, whose rows index
// the representation coordinates.
struct HypothesisConstraints {
    std::vector<double> m_w;
    std::vector<std::vector<double>> m_s;
    std::size_t depth = 0;  // K

    std::size_t matrices() const { return m_w.size(); }

    void validate() const {
        if (m_w.size() != depth + 1 || m_s.size() != depth + 1)
            throw std::invalid_argument("constraints: expected one entry per layer plus classifier");
        for (std::size_t t = 0; t < m_s.size(); ++t) {
            const auto& tab = m_s[t];
            if (tab.empty()) throw std::invalid_argument("constraints: empty babel table");
            if (tab.back() != 0.0) throw std::invalid_argument("constraints: M_s at d-1 must be 0");
            for (std::size_t s = 0; s + 1 < tab.size(); ++s)
                if (tab[s + 1] > tab[s] + 1e-12)
                    throw std::invalid_argument("constraints: babel table must be non-increasing");
        }
    }

    double babel_at(std::size_t t, std::size_t s) const {
        const auto& tab = m_s[t];
        if (s >= tab.size()) s = tab.size() - 1;  // levels past d-1 keep the zero bound
        return tab[s];
    }
};

// Predictor-dependent constants of a trained zero-bias network. Cheap mode
// uses the column-size-free babel upper bound so the table dominates
// mu_{s, s_in} for every s_in, as the class definition requires; exact mode
// maximizes over s_in explicitly and only fits tiny matrices.
inline HypothesisConstraints constraints_from_network(const Network& net,
                                                      BabelMode mode = BabelMode::Cheap) {
    net.validate();
    require_zero_bias(net);
    HypothesisConstraints c;
    c.depth = net.depth();
    auto add_matrix = [&](const DenseMatrix& w) {
        c.m_w.push_back(row_group_norm(w));
        if (mode == BabelMode::Cheap) {
            c.m_s.push_back(reduced_babel_column_max(w));
        } else {
            std::vector<double> tab(w.rows, 0.0);
            for (std::size_t s = 0; s + 1 < w.rows; ++s)
                for (std::size_t s_in = 0; s_in < w.cols; ++s_in)
                    tab[s] = std::max(tab[s], reduced_babel(w, s, s_in, BabelMode::Exact));
            c.m_s.push_back(std::move(tab));
        }
    };
    for (const auto& l : net.layers) add_matrix(l.weight);
    add_matrix(transpose(net.classifier));
    c.validate();
    return c;
}

// Smallest class containing both predictors: elementwise max of the constants.
inline HypothesisConstraints merge(const HypothesisConstraints& a, const HypothesisConstraints& b) {
    if (a.depth != b.depth || a.m_w.size() != b.m_w.size())
        throw std::invalid_argument("merge: constraint shapes differ");
    HypothesisConstraints c = a;
    for (std::size_t t = 0; t < c.m_w.size(); ++t) {
        c.m_w[t] = std::max(c.m_w[t], b.m_w[t]);
        if (c.m_s[t].size() != b.m_s[t].size()) throw std::invalid_argument("merge: babel table sizes differ");
        for (std::size_t s = 0; s < c.m_s[t].size(); ++s) c.m_s[t][s] = std::max(c.m_s[t][s], b.m_s[t][s]);
    }
    return c;
}

// zeta^k(s): product over the first k matrices of M_W * sqrt(1 + M_s[s]).
// The classifier factor is indexed by s^K (its rows are the representation
// coordinates). zeta^0 = 1.
inline double zeta(const HypothesisConstraints& c, const SparsityVector& s, std::size_t k) {
    if (s.size() != c.depth + 1) throw std::invalid_argument("zeta: sparsity vector length != depth + 1");
    if (k > c.depth + 1) throw std::invalid_argument("zeta: k out of range");
    double z = 1.0;
    for (std::size_t t = 0; t < k; ++t) {
        std::size_t level = t < c.depth ? s[t + 1] : s[c.depth];
        z *= c.m_w[t] * std::sqrt(1.0 + c.babel_at(t, level));
    }
    return z;
}

// Scaled parameter metric: max over matrices of sqrt(rows)/M_W * ||diff||_{2,inf}.
inline double hypothesis_distance(const Network& a, const Network& b, const HypothesisConstraints& c) {
    if (a.dims() != b.dims()) throw std::invalid_argument("hypothesis_distance: architecture mismatch");
    auto group_diff = [](const DenseMatrix& x, const DenseMatrix& y) {
        double best = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            double s = 0.0;
            const double* px = x.row_ptr(i);
            const double* py = y.row_ptr(i);
            for (std::size_t j = 0; j < x.cols; ++j) {
                double d = px[j] - py[j];
                s += d * d;
            }
            best = std::max(best, std::sqrt(s));
        }
        return best;
    };
    double dist = 0.0;
    for (std::size_t t = 0; t < a.depth(); ++t) {
        double diff = group_diff(a.layers[t].weight, b.layers[t].weight);
        double rows = static_cast<double>(a.layers[t].weight.rows);
        double term = diff == 0.0 ? 0.0 : (c.m_w[t] > 0.0 ? std::sqrt(rows) * diff / c.m_w[t] : kInf);
        dist = std::max(dist, term);
    }
    DenseMatrix at = transpose(a.classifier);
    DenseMatrix bt = transpose(b.classifier);
    double diff = group_diff(at, bt);
    double rows = static_cast<double>(at.rows);
    double term = diff == 0.0 ? 0.0 : (c.m_w.back() > 0.0 ? std::sqrt(rows) * diff / c.m_w.back() : kInf);
    return std::max(dist, term);
}

// Robust global Lipschitz constant w.r.t. parameters: (K+1) * zeta^{K+1}(0) * (1+nu).
inline double robust_global_lipschitz(const HypothesisConstraints& c, double nu) {
    SparsityVector zeros(c.depth + 1, 0);
    return static_cast<double>(c.depth + 1) * zeta(c, zeros, c.depth + 1) * (1.0 + nu);
}

// Angular distances beta^k between layer rows and the layer input, normalized
// by the class bounds M_W^k * zeta^{k-1}(0); entries live in [0, 1].
inline std::vector<Vector> angular_distances(const Network& net, const ForwardTrace& trace,
                                             const HypothesisConstraints& c) {
    require_zero_bias(net);
    if (c.depth != net.depth()) throw std::invalid_argument("angular_distances: constraints depth mismatch");
    if (norm2(trace.input) > 1.0 + 1e-9)
        throw std::invalid_argument("angular_distances: input must lie in the unit ball");
    SparsityVector zeros(c.depth + 1, 0);
    std::vector<Vector> betas;
    betas.reserve(net.depth());
    for (std::size_t k = 0; k < net.depth(); ++k) {
        const Vector& rep = trace.rep(k);
        double bound = c.m_w[k] * zeta(c, zeros, k);
        const DenseMatrix& w = net.layers[k].weight;
        Vector beta(w.rows);
        for (std::size_t i = 0; i < w.rows; ++i) {
            double ip = dot(w.row(i), rep);
            double arg;
            if (bound > 0.0) {
                arg = ip / bound;
            } else {
                // a zero layer never activates; treat rows as maximally stable
                arg = -1.0;
            }
            if (arg > 1.0 + 1e-12 || arg < -1.0 - 1e-12)
                throw std::logic_error("angular_distances: normalized inner product outside [-1,1]; "
                                       "zeta bound violated");
            arg = std::min(1.0, std::max(-1.0, arg));
            beta[i] = std::acos(arg) / kPi;
        }
        betas.push_back(std::move(beta));
    }
    return betas;
}

inline std::vector<Vector> angular_distances(const Network& net, const Vector& x,
                                             const HypothesisConstraints& c) {
    return angular_distances(net, forward(net, x), c);
}

// s-th largest angular distance (critical angular distance); s >= 1.
inline double critical_angle(const Vector& beta, std::size_t s) { return kth_largest(beta, s); }

// Robust sparse local radius w.r.t. parameters. Layers with s^k = 0
// impose no constraint; the all-zero vector has infinite radius. Levels that
// exceed the inactive set collapse to radius 0 through the cosine term.
inline double robust_radius(const Network& net, const ForwardTrace& trace, const SparsityVector& s,
                            double nu, const HypothesisConstraints& c) {
    if (s.size() != c.depth + 1) throw std::invalid_argument("robust_radius: sparsity length != depth + 1");
    std::vector<Vector> betas = angular_distances(net, trace, c);
    double radius = kInf;
    for (std::size_t k = 0; k < net.depth(); ++k) {
        std::size_t level = s[k + 1];
        if (level == 0) continue;
        if (level > betas[k].size()) return 0.0;
        double theta = critical_angle(betas[k], level);
        double slack = -std::cos(kPi * theta) - nu;
        double term = std::max(0.0, slack) / (static_cast<double>(k + 1) * (1.0 + nu));
        radius = std::min(radius, term);
    }
    return radius;
}

inline double robust_radius(const Network& net, const Vector& x, const SparsityVector& s, double nu,
                            const HypothesisConstraints& c) {
    return robust_radius(net, forward(net, x), s, nu, c);
}

// Robust sparse local Lipschitz scale; input independent.
inline double robust_scale(const HypothesisConstraints& c, const SparsityVector& s, double nu) {
    return static_cast<double>(c.depth + 1) * zeta(c, s, c.depth + 1) * (1.0 + nu);
}

// The stable inactive sets certified by the angular analysis.
inline std::vector<IndexSet> angular_stable_sets(const std::vector<Vector>& betas, const SparsityVector& s) {
    std::vector<IndexSet> sets;
    sets.reserve(betas.size());
    for (std::size_t k = 0; k < betas.size(); ++k) sets.push_back(top_k_indices(betas[k], s[k + 1]));
    return sets;
}

// Robust optimal sparsity over a reference set: per layer the maximal level
// whose angular slack clears epsilon at every reference input. Maximizing
// each layer independently minimizes the (entrywise monotone) scale.
inline SparsityVector optimal_robust_sparsity(const Network& net, const std::vector<Vector>& reference,
                                              double epsilon, double nu, const HypothesisConstraints& c) {
    if (reference.empty()) throw std::invalid_argument("optimal_robust_sparsity: empty reference set");
    if (epsilon <= 0.0) throw std::invalid_argument("optimal_robust_sparsity: epsilon must be positive");
    SparsityVector s_star(c.depth + 1, 0);
    std::vector<std::size_t> per_layer(net.depth(), std::numeric_limits<std::size_t>::max());
    for (const Vector& x : reference) {
        std::vector<Vector> betas = angular_distances(net, x, c);
        for (std::size_t k = 0; k < net.depth(); ++k) {
            double need = nu + epsilon * static_cast<double>(k + 1) * (1.0 + nu);
            std::size_t count = 0;
            for (double b : betas[k])
                if (-std::cos(kPi * b) >= need) ++count;
            per_layer[k] = std::min(per_layer[k], count);
        }
    }
    for (std::size_t k = 0; k < net.depth(); ++k) s_star[k + 1] = per_layer[k];
    return s_star;
}

struct RobustSensitivity {
    double nu = 0.0;
    double epsilon = 0.0;
    SparsityVector s_star;
    double r_par = 0.0;    // min over the reference set of the robust radius at s_star
    double l_par = 0.0;    // robust scale at s_star
    double l_rob = 0.0;    // robust sparse regularity
    double l_global = 0.0; // robust global Lipschitz constant
};

inline RobustSensitivity robust_sparse_regularity(const Network& net, const std::vector<Vector>& reference,
                                                  double epsilon, double nu,
                                                  const HypothesisConstraints& c) {
    RobustSensitivity out;
    out.nu = nu;
    out.epsilon = epsilon;
    out.s_star = optimal_robust_sparsity(net, reference, epsilon, nu, c);
    out.r_par = kInf;
    for (const Vector& x : reference)
        out.r_par = std::min(out.r_par, robust_radius(net, x, out.s_star, nu, c));
    out.l_par = robust_scale(c, out.s_star, nu);
    out.l_rob = out.l_par;
    out.l_global = robust_global_lipschitz(c, nu);
    return out;
}

struct FlatnessResult {
    double radius = 0.0;
    bool input_radius_ok = true;
    double min_input_radius = 0.0;  // min over the set of the input-side cumulative radius at s
};

// Robust flatness of a trained predictor over its training set: the parameter
// perturbation budget under which every training prediction survives inputs
// corrupted up to nu. Valid only when nu fits inside the input-side radius.
inline FlatnessResult flatness_radius(const Network& net, const std::vector<Vector>& train_inputs,
                                      const SparsityVector& s, double nu, const HypothesisConstraints& c) {
    if (train_inputs.empty()) throw std::invalid_argument("flatness_radius: empty training set");
    FlatnessResult out;
    out.min_input_radius = kInf;
    double z = zeta(c, s, c.depth + 1);
    double scale = robust_scale(c, s, nu);
    double radius = kInf;
    for (const Vector& x : train_inputs) {
        ForwardTrace trace = forward(net, x);
        out.min_input_radius = std::min(out.min_input_radius, compose(net, trace, s).r_cum);
        double margin_slack = std::max(trace.margin - z * nu, 0.0);
        double margin_term = scale > 0.0 ? margin_slack / (2.0 * scale) : kInf;
        radius = std::min(radius, std::min(robust_radius(net, trace, s, nu, c), margin_term));
    }
    if (nu > out.min_input_radius) {
        out.input_radius_ok = false;
        out.radius = 0.0;
        return out;
    }
    out.radius = radius;
    return out;
}

struct BoundReport {
    double term1 = 0.0;      // covering term at resolution 1/(m(K+1))
    double term2 = 0.0;      // margin-normalized sparse regularity term
    double total = 0.0;
    double log_cover = 0.0;  // ln N
};

// Robust generalization bound evaluated on a trained
// predictor; O(.) constants are taken as 1 and reported as such.
inline BoundReport generalization_bound(const Network& net, double gamma, double nu, double alpha,
                                        std::size_t m, const SparsityVector& s) {
    require_zero_bias(net);
    if (gamma <= 0.0) throw std::invalid_argument("generalization_bound: gamma must be positive");
    if (m == 0) throw std::invalid_argument("generalization_bound: m must be positive");
    if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("generalization_bound: alpha in (0,1)");
    if (s.size() != net.depth() + 1)
        throw std::invalid_argument("generalization_bound: sparsity length != depth + 1");

    const std::size_t kp1 = net.depth() + 1;
    const double md = static_cast<double>(m);

    // parameter-count covering bound at resolution 1/(m(K+1))
    double log_cover = 0.0;
    auto cover_term = [&](std::size_t rows, std::size_t cols) {
        log_cover += static_cast<double>(rows * cols) *
                     std::log(1.0 + 4.0 * std::sqrt(static_cast<double>(rows)) * md * static_cast<double>(kp1));
    };
    for (const auto& l : net.layers) cover_term(l.weight.rows, l.weight.cols);
    cover_term(net.classifier.cols, net.classifier.rows);  // classifier enters transposed

    BoundReport rep;
    rep.log_cover = log_cover;
    rep.term1 = std::sqrt((log_cover + std::log(2.0 / alpha)) / md);

    double product = 1.0;
    auto factor = [&](const DenseMatrix& w, std::size_t s_out, std::size_t s_in) {
        s_out = std::min(s_out, w.rows - 1);
        s_in = std::min(s_in, w.cols - 1);
        product *= row_group_norm(w) * std::sqrt(1.0 + reduced_babel(w, s_out, s_in, BabelMode::Cheap));
    };
    for (std::size_t k = 0; k < net.depth(); ++k) factor(net.layers[k].weight, s[k + 1], s[k]);
    factor(transpose(net.classifier), s[net.depth()], 0);
    rep.term2 = (1.0 + nu) / (gamma * md) * product;
    rep.total = rep.term1 + rep.term2;
    return rep;
}

} // namespace sllcert
