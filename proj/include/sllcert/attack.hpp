#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sllcert/network.hpp"
#include "sllcert/rng.hpp"

namespace sllcert {

struct AttackConfig {
    std::size_t steps = 50;
    double step_size = 0.0;  // <= 0: auto, 2.5 * nu / steps
    std::size_t restarts = 10;
    std::uint64_t seed = 1;

    void validate() const {
        if (steps < 1) throw std::invalid_argument("attack: steps must be >= 1");
    }
};

namespace detail {

struct ForwardBuffers {
    std::vector<Vector> pre;   // z^k per layer
    std::vector<Vector> post;  // ReLU(z^k)
    Vector logits;
};

inline void forward_record(const Network& net, const Vector& x, ForwardBuffers& fb) {
    const std::size_t depth = net.depth();
    fb.pre.resize(depth);
    fb.post.resize(depth);
    const Vector* cur = &x;
    for (std::size_t k = 0; k < depth; ++k) {
        matvec(net.layers[k].weight, *cur, fb.pre[k]);
        Vector& z = fb.pre[k];
        Vector& a = fb.post[k];
        a.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += net.layers[k].bias[i];
            a[i] = z[i] > 0.0 ? z[i] : 0.0;
        }
        cur = &a;
    }
    matvec(net.classifier, *cur, fb.logits);
}

// Gradient of <coeff, logits> w.r.t. the input; ReLU subgradient 0 at z = 0.
inline Vector input_gradient(const Network& net, const ForwardBuffers& fb, const Vector& coeff) {
    Vector g = matvec_t(net.classifier, coeff);
    for (std::size_t k = net.depth(); k-- > 0;) {
        const Vector& z = fb.pre[k];
        for (std::size_t i = 0; i < g.size(); ++i)
            if (z[i] <= 0.0) g[i] = 0.0;
        g = matvec_t(net.layers[k].weight, g);
    }
    return g;
}

} // namespace detail

// Gradient of the margin-violation surrogate max_{j != y} logits_j - logits_y
// at input x (competitor chosen by argmax, lowest index on ties).
inline Vector margin_surrogate_gradient(const Network& net, const Vector& x, std::size_t y) {
    detail::ForwardBuffers fb;
    detail::forward_record(net, x, fb);
    std::size_t best = y == 0 ? 1 : 0;
    for (std::size_t j = 0; j < fb.logits.size(); ++j)
        if (j != y && fb.logits[j] > fb.logits[best]) best = j;
    Vector coeff(fb.logits.size(), 0.0);
    coeff[best] = 1.0;
    coeff[y] -= 1.0;
    return detail::input_gradient(net, fb, coeff);
}

// l2 PGD around x with radius nu: projected normalized-gradient ascent on the
// margin-violation surrogate. Returns a point with a flipped argmax if one is
// found; deterministic given the seed.
inline std::optional<Vector> pgd_attack(const Network& net, const Vector& x, std::size_t y, double nu,
                                        const AttackConfig& cfg = {}) {
    cfg.validate();
    if (x.size() != net.input_dim()) throw std::invalid_argument("pgd_attack: input dimension mismatch");
    if (nu < 0.0) throw std::invalid_argument("pgd_attack: nu must be nonnegative");

    const double step = cfg.step_size > 0.0 ? cfg.step_size : 2.5 * nu / static_cast<double>(cfg.steps);
    const std::size_t d = x.size();

    auto project = [&](Vector& p) {
        double dist2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double diff = p[i] - x[i];
            dist2 += diff * diff;
        }
        double dist = std::sqrt(dist2);
        if (dist > nu) {
            double f = nu / dist;
            for (std::size_t i = 0; i < d; ++i) p[i] = x[i] + (p[i] - x[i]) * f;
        }
    };

    detail::ForwardBuffers fb;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        Rng rng(cfg.seed * 0x9e3779b97f4a7c15ULL + r);
        Vector p = x;
        if (r > 0 && nu > 0.0) {
            Vector noise = rng.ball(d, nu);
            for (std::size_t i = 0; i < d; ++i) p[i] += noise[i];
        }
        for (std::size_t t = 0; t <= cfg.steps; ++t) {
            detail::forward_record(net, p, fb);
            if (argmax_lowest_tie(fb.logits) != y) return p;
            if (t == cfg.steps || nu == 0.0) break;

            std::size_t best = y == 0 ? 1 : 0;
            for (std::size_t j = 0; j < fb.logits.size(); ++j)
                if (j != y && fb.logits[j] > fb.logits[best]) best = j;
            Vector coeff(fb.logits.size(), 0.0);
            coeff[best] = 1.0;
            coeff[y] -= 1.0;
            Vector g = detail::input_gradient(net, fb, coeff);
            double gn = norm2(g);
            if (gn == 0.0) break;
            for (std::size_t i = 0; i < d; ++i) p[i] += step * g[i] / gn;
            project(p);
        }
    }
    return std::nullopt;
}

inline constexpr double kAttackCeiling = 2.0;

struct AdvRadius {
    double radius = kInf;  // +inf when no attack succeeds up to the ceiling
    bool found = false;
};

// Empirical upper bound on the robust radius: bisection on the attack energy,
// shrinking on success and growing on failure.
inline AdvRadius min_adv_radius(const Network& net, const Vector& x, double tol,
                                const AttackConfig& cfg = {}) {
    if (tol <= 0.0) throw std::invalid_argument("min_adv_radius: tol must be positive");
    ForwardTrace trace = forward(net, x);
    const std::size_t y = trace.predicted;

    if (!pgd_attack(net, x, y, kAttackCeiling, cfg)) return {};

    double lo = 0.0;
    double hi = kAttackCeiling;
    while (hi - lo > tol) {
        double mid = lo + 0.5 * (hi - lo);
        if (pgd_attack(net, x, y, mid, cfg)) hi = mid;
        else lo = mid;
    }
    return {hi, true};
}

} // namespace sllcert
