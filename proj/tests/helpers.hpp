#pragma once

// Shared fixtures for the test suites.

#include <functional>
#include <vector>

#include "oracles.hpp"
#include "sllcert/cert_input.hpp"
#include "sllcert/network.hpp"

namespace fixtures {

using namespace sllcert;

// single ReLU layer [[3,4],[0,-5]], zero bias, identity classifier
inline Network e1_network() {
    Network net;
    LayerWeights l;
    l.weight = DenseMatrix(2, 2, {3, 4, 0, -5});
    l.bias = {0.0, 0.0};
    net.layers.push_back(l);
    net.classifier = DenseMatrix::identity(2);
    net.validate();
    return net;
}

inline Network random_network(Rng& rng, const std::vector<std::size_t>& dims, bool bias = true,
                              double scale = 0.8) {
    Network net;
    for (std::size_t k = 0; k + 2 < dims.size(); ++k) {
        LayerWeights l;
        l.weight = oracle::random_matrix(rng, dims[k + 1], dims[k], scale / std::sqrt(double(dims[k])));
        l.bias.assign(dims[k + 1], 0.0);
        if (bias)
            for (auto& b : l.bias) b = 0.1 * rng.gaussian();
        net.layers.push_back(l);
    }
    net.classifier = oracle::random_matrix(rng, dims.back(), dims[dims.size() - 2],
                                           scale / std::sqrt(double(dims[dims.size() - 2])));
    net.validate();
    return net;
}

// every feasible sparsity vector with s^0 = 0 for the traced input
inline std::vector<SparsityVector> all_feasible_sparsity(const ForwardTrace& trace) {
    std::vector<SparsityVector> out;
    SparsityVector cur(trace.layers.size() + 1, 0);
    std::vector<std::size_t> caps;
    for (const auto& lt : trace.layers) caps.push_back(lt.inactive.size());
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == caps.size()) {
            out.push_back(cur);
            return;
        }
        for (std::size_t s = 0; s <= caps[k]; ++s) {
            cur[k + 1] = s;
            rec(k + 1);
        }
    };
    rec(0);
    return out;
}

} // namespace fixtures
