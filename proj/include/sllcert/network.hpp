#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sllcert/linalg.hpp"
#include "sllcert/matrix.hpp"

namespace sllcert {

struct LayerWeights {
    DenseMatrix weight;  // d^k x d^{k-1}
    Vector bias;         // d^k

    void validate() const {
        if (bias.size() != weight.rows) throw std::invalid_argument("layer: bias length != weight rows");
        if (!weight.finite() || !all_finite(bias)) throw std::invalid_argument("layer: non-finite entries");
    }
};

// Feedforward ReLU hypothesis h(x) = A * Phi(x) with Phi the composition of
// K affine+ReLU maps. Immutable after construction.
struct Network {
    std::vector<LayerWeights> layers;
    DenseMatrix classifier;  // C x d^K

    std::size_t depth() const { return layers.size(); }
    std::size_t input_dim() const { return layers.front().weight.cols; }
    std::size_t output_dim() const { return classifier.rows; }
    std::size_t layer_dim(std::size_t k) const { return layers[k].weight.rows; }

    // d^0, d^1, ..., d^K, C
    std::vector<std::size_t> dims() const {
        std::vector<std::size_t> d;
        d.push_back(input_dim());
        for (const auto& l : layers) d.push_back(l.weight.rows);
        d.push_back(classifier.rows);
        return d;
    }

    bool zero_bias() const {
        for (const auto& l : layers)
            for (double b : l.bias)
                if (b != 0.0) return false;
        return true;
    }

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("network: needs at least one layer");
        for (std::size_t k = 0; k < layers.size(); ++k) {
            layers[k].validate();
            if (k > 0 && layers[k].weight.cols != layers[k - 1].weight.rows)
                throw std::invalid_argument("network: layer " + std::to_string(k) + " shape does not compose");
        }
        if (classifier.cols != layers.back().weight.rows)
            throw std::invalid_argument("network: classifier cols != last layer width");
        if (classifier.rows < 2) throw std::invalid_argument("network: classifier needs at least two classes");
        if (!classifier.finite()) throw std::invalid_argument("network: non-finite classifier");
    }
};

// Correct-class score minus best competitor. Negative for misclassified labels.
inline double margin(const Vector& logits, std::size_t label) {
    if (logits.size() < 2) throw std::invalid_argument("margin: need at least two logits");
    if (label >= logits.size()) throw std::invalid_argument("margin: label out of range");
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (j != label) best_other = std::max(best_other, logits[j]);
    }
    return logits[label] - best_other;
}

inline std::size_t argmax_lowest_tie(const Vector& v) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (v[j] > v[best]) best = j;
    return best;
}

struct LayerTrace {
    Vector pre;          // z^k = W^k t + b^k
    Vector q;            // z^k_i / ||w^k_i||, +-inf convention for zero rows
    Vector phi;          // ReLU(z^k)
    IndexSet inactive;   // { i : z^k_i <= 0 }
};

struct ForwardTrace {
    Vector input;
    std::vector<LayerTrace> layers;
    Vector logits;
    std::size_t predicted = 0;
    double margin = 0.0;

    // Phi^[k]; rep(0) is the input itself
    const Vector& rep(std::size_t k) const { return k == 0 ? input : layers[k - 1].phi; }
};

inline ForwardTrace forward(const Network& net, const Vector& x) {
    if (x.size() != net.input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
    ForwardTrace tr;
    tr.input = x;
    tr.layers.reserve(net.depth());
    const Vector* cur = &tr.input;
    for (const auto& layer : net.layers) {
        LayerTrace lt;
        matvec(layer.weight, *cur, lt.pre);
        const std::size_t d = lt.pre.size();
        lt.q.resize(d);
        lt.phi.resize(d);
        std::vector<std::size_t> inactive;
        for (std::size_t i = 0; i < d; ++i) {
            lt.pre[i] += layer.bias[i];
            double z = lt.pre[i];
            double wn = layer.weight.row_norm(i);
            if (wn == 0.0) {
                // a zero row never changes activity under input perturbations
                lt.q[i] = z <= 0.0 ? -std::numeric_limits<double>::infinity()
                                   : std::numeric_limits<double>::infinity();
            } else {
                lt.q[i] = z / wn;
            }
            lt.phi[i] = z > 0.0 ? z : 0.0;
            if (z <= 0.0) inactive.push_back(i);
        }
        lt.inactive = IndexSet(std::move(inactive), d);
        tr.layers.push_back(std::move(lt));
        cur = &tr.layers.back().phi;
    }
    matvec(net.classifier, *cur, tr.logits);
    tr.predicted = argmax_lowest_tie(tr.logits);
    tr.margin = margin(tr.logits, tr.predicted);
    return tr;
}

// Lean forward pass for attack/training loops: representations only.
inline Vector forward_logits(const Network& net, const Vector& x) {
    Vector cur = x;
    Vector next;
    for (const auto& layer : net.layers) {
        matvec(layer.weight, cur, next);
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] += layer.bias[i];
            if (next[i] < 0.0) next[i] = 0.0;
        }
        cur.swap(next);
    }
    return matvec(net.classifier, cur);
}

struct ReducedNetwork {
    Network net;
    std::vector<IndexSet> retained;  // J^0 .. J^K
};

// Sub-network on the retained sets J^0..J^K: rows J^k, columns J^{k-1}, and
// the classifier reduced on columns by J^K.
inline ReducedNetwork reduce(const Network& net, const std::vector<IndexSet>& retained) {
    if (retained.size() != net.depth() + 1)
        throw std::invalid_argument("reduce: expected one retained set per layer boundary");
    const auto dims = net.dims();
    for (std::size_t k = 0; k + 1 < dims.size(); ++k)
        if (retained[k].universe != dims[k])
            throw std::invalid_argument("reduce: retained set " + std::to_string(k) + " universe mismatch");

    ReducedNetwork out;
    out.retained = retained;
    out.net.layers.reserve(net.depth());
    for (std::size_t k = 0; k < net.depth(); ++k) {
        LayerWeights lw;
        lw.weight = submatrix(net.layers[k].weight, retained[k + 1], retained[k]);
        lw.bias.reserve(retained[k + 1].size());
        for (std::size_t i : retained[k + 1].idx) lw.bias.push_back(net.layers[k].bias[i]);
        out.net.layers.push_back(std::move(lw));
    }
    out.net.classifier = submatrix(net.classifier, IndexSet::full(net.classifier.rows), retained.back());
    return out;
}

// Forward through the reduced model from a full-dimension input.
inline Vector reduced_logits(const ReducedNetwork& rn, const Vector& x) {
    Vector cur;
    cur.reserve(rn.retained[0].size());
    for (std::size_t i : rn.retained[0].idx) cur.push_back(x[i]);
    Vector next;
    for (const auto& layer : rn.net.layers) {
        matvec(layer.weight, cur, next);
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] += layer.bias[i];
            if (next[i] < 0.0) next[i] = 0.0;
        }
        cur.swap(next);
    }
    return matvec(rn.net.classifier, cur);
}

// Embed the reduced representation back into full coordinates (zeros on the
// dropped indices); used by the reduced-model equivalence checks.
inline Vector reduced_representation_full(const ReducedNetwork& rn, const Vector& x) {
    Vector cur;
    cur.reserve(rn.retained[0].size());
    for (std::size_t i : rn.retained[0].idx) cur.push_back(x[i]);
    Vector next;
    for (const auto& layer : rn.net.layers) {
        matvec(layer.weight, cur, next);
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] += layer.bias[i];
            if (next[i] < 0.0) next[i] = 0.0;
        }
        cur.swap(next);
    }
    const IndexSet& jk = rn.retained.back();
    Vector full(jk.universe, 0.0);
    for (std::size_t a = 0; a < jk.size(); ++a) full[jk.idx[a]] = cur[a];
    return full;
}

} // namespace sllcert
