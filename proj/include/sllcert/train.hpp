#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sllcert/dataset.hpp"
#include "sllcert/network.hpp"
#include "sllcert/rng.hpp"

namespace sllcert {

struct TrainConfig {
    std::vector<std::size_t> arch;  // d^0, hidden widths..., C
    double eta = 0.0;               // orthogonal-frame coefficient
    std::size_t steps = 2000;
    std::size_t batch = 100;
    double lr = 0.01;
    std::uint64_t seed = 1;
    bool bias = true;

    void validate() const {
        if (arch.size() < 3) throw std::invalid_argument("train: arch needs input, one hidden, output");
        for (std::size_t w : arch)
            if (w < 1) throw std::invalid_argument("train: widths must be >= 1");
        if (eta < 0.0) throw std::invalid_argument("train: eta must be nonnegative");
        if (steps < 1 || batch < 1) throw std::invalid_argument("train: steps and batch must be >= 1");
        if (lr <= 0.0) throw std::invalid_argument("train: lr must be positive");
    }
};

// KEY=VALUE config file; '#' starts a comment. arch is comma-separated.
inline TrainConfig parse_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_train_config: cannot open " + path);
    TrainConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            std::size_t a = s.find_first_not_of(" \t\r");
            std::size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "arch") {
                cfg.arch.clear();
                std::istringstream ss(value);
                std::string cell;
                while (std::getline(ss, cell, ',')) cfg.arch.push_back(std::stoul(cell));
            } else if (key == "eta") cfg.eta = std::stod(value);
            else if (key == "steps") cfg.steps = std::stoul(value);
            else if (key == "batch") cfg.batch = std::stoul(value);
            else if (key == "lr") cfg.lr = std::stod(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "bias") cfg.bias = value == "on" || value == "true" || value == "1";
            else throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::exception& e) {
            throw ParseError("parse_train_config: " + path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

// ---- losses ----------------------------------------------------------------

inline double cross_entropy(const Vector& logits, std::size_t y) {
    if (y >= logits.size()) throw std::invalid_argument("cross_entropy: label out of range");
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    return std::log(sum) - (logits[y] - mx);
}

inline double margin_loss(const Vector& logits, std::size_t y, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("margin_loss: gamma must be positive");
    double m = margin(logits, y);
    return std::min(1.0, std::max(0.0, 1.0 - m / gamma));
}

inline double zero_one_loss(const Vector& logits, std::size_t y) {
    return argmax_lowest_tie(logits) == y ? 0.0 : 1.0;
}

// ---- orthogonal frame regularization ---------------------------------------

namespace detail {

inline DenseMatrix row_normalized(const DenseMatrix& w) {
    DenseMatrix out = w;
    for (std::size_t i = 0; i < w.rows; ++i) {
        double n = w.row_norm(i);
        if (n == 0.0) continue;  // zero rows stay as-is and contribute no gradient
        double* p = out.data.data() + i * out.cols;
        for (std::size_t j = 0; j < out.cols; ++j) p[j] /= n;
    }
    return out;
}

} // namespace detail

// ||I - Wt Wt^T||_F^2 with row-normalized Wt.
inline double orth_frame_penalty(const DenseMatrix& w) {
    DenseMatrix wt = detail::row_normalized(w);
    double s = 0.0;
    Vector gram_row(wt.rows);
    for (std::size_t i = 0; i < wt.rows; ++i) {
        for (std::size_t j = 0; j < wt.rows; ++j) {
            double g = dot(wt.row(i), wt.row(j));
            double target = i == j ? 1.0 : 0.0;
            double diff = target - g;
            s += diff * diff;
        }
    }
    return s;
}

// Analytic gradient of orth_frame_penalty w.r.t. the raw weights, chaining
// through the row normalization.
inline DenseMatrix orth_frame_gradient(const DenseMatrix& w) {
    const std::size_t p = w.rows;
    DenseMatrix wt = detail::row_normalized(w);

    // G = I - Wt Wt^T, d/dWt ||G||_F^2 = -4 G Wt
    DenseMatrix g(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) g(i, j) = (i == j ? 1.0 : 0.0) - dot(wt.row(i), wt.row(j));

    DenseMatrix grad(w.rows, w.cols, 0.0);
    Vector gtilde(w.cols);
    for (std::size_t i = 0; i < p; ++i) {
        double n = w.row_norm(i);
        if (n == 0.0) continue;
        for (std::size_t c = 0; c < w.cols; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < p; ++j) s += g(i, j) * wt(j, c);
            gtilde[c] = -4.0 * s;
        }
        // project out the radial component: dwt/dw = (I - wt wt^T) / ||w||
        double radial = dot(gtilde, wt.row(i));
        for (std::size_t c = 0; c < w.cols; ++c) grad(i, c) = (gtilde[c] - radial * wt(i, c)) / n;
    }
    return grad;
}

// ---- SGD --------------------------------------------------------------------

// Plain SGD on cross-entropy plus orthogonal frame regularization. Fixed
// shuffling and init make the result bit-identical for a given seed.
inline Network sgd_train(const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    if (data.size() == 0) throw std::invalid_argument("sgd_train: empty dataset");
    if (data.inputs[0].size() != cfg.arch.front())
        throw std::invalid_argument("sgd_train: arch input width != data dimension");
    if (data.num_classes > cfg.arch.back())
        throw std::invalid_argument("sgd_train: arch output width below class count");

    Rng rng(cfg.seed);
    Network net;
    const std::size_t depth = cfg.arch.size() - 2;
    for (std::size_t k = 0; k < depth; ++k) {
        LayerWeights l;
        l.weight = DenseMatrix(cfg.arch[k + 1], cfg.arch[k]);
        double bound = 1.0 / std::sqrt(static_cast<double>(cfg.arch[k]));
        for (auto& v : l.weight.data) v = rng.uniform(-bound, bound);
        l.bias.assign(cfg.arch[k + 1], 0.0);
        net.layers.push_back(std::move(l));
    }
    net.classifier = DenseMatrix(cfg.arch.back(), cfg.arch[cfg.arch.size() - 2]);
    {
        double bound = 1.0 / std::sqrt(static_cast<double>(cfg.arch[cfg.arch.size() - 2]));
        for (auto& v : net.classifier.data) v = rng.uniform(-bound, bound);
    }

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::size_t pos = 0;

    std::vector<DenseMatrix> grad_w(depth);
    std::vector<Vector> grad_b(depth);
    DenseMatrix grad_a;
    std::vector<Vector> pre(depth), post(depth);
    const double reg_coeff = cfg.eta / static_cast<double>(depth + 1);

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        for (std::size_t k = 0; k < depth; ++k) {
            grad_w[k] = DenseMatrix(net.layers[k].weight.rows, net.layers[k].weight.cols);
            grad_b[k].assign(net.layers[k].bias.size(), 0.0);
        }
        grad_a = DenseMatrix(net.classifier.rows, net.classifier.cols);

        for (std::size_t b = 0; b < cfg.batch; ++b) {
            if (pos >= order.size()) {
                rng.shuffle(order);
                pos = 0;
            }
            const std::size_t idx = order[pos++];
            const Vector& x = data.inputs[idx];
            const std::size_t y = data.labels[idx];

            const Vector* cur = &x;
            for (std::size_t k = 0; k < depth; ++k) {
                matvec(net.layers[k].weight, *cur, pre[k]);
                post[k].resize(pre[k].size());
                for (std::size_t i = 0; i < pre[k].size(); ++i) {
                    pre[k][i] += net.layers[k].bias[i];
                    post[k][i] = pre[k][i] > 0.0 ? pre[k][i] : 0.0;
                }
                cur = &post[k];
            }
            Vector logits = matvec(net.classifier, *cur);

            // softmax - onehot
            double mx = logits[0];
            for (double v : logits) mx = std::max(mx, v);
            double sum = 0.0;
            for (double v : logits) sum += std::exp(v - mx);
            Vector delta(logits.size());
            for (std::size_t j = 0; j < logits.size(); ++j) delta[j] = std::exp(logits[j] - mx) / sum;
            delta[y] -= 1.0;

            const Vector& rep_last = depth > 0 ? post[depth - 1] : x;
            for (std::size_t i = 0; i < grad_a.rows; ++i)
                for (std::size_t j = 0; j < grad_a.cols; ++j) grad_a(i, j) += delta[i] * rep_last[j];

            Vector g = matvec_t(net.classifier, delta);
            for (std::size_t k = depth; k-- > 0;) {
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (pre[k][i] <= 0.0) g[i] = 0.0;
                const Vector& rep = k == 0 ? x : post[k - 1];
                for (std::size_t i = 0; i < grad_w[k].rows; ++i) {
                    if (g[i] == 0.0) continue;
                    double* row = grad_w[k].data.data() + i * grad_w[k].cols;
                    for (std::size_t j = 0; j < grad_w[k].cols; ++j) row[j] += g[i] * rep[j];
                }
                if (cfg.bias)
                    for (std::size_t i = 0; i < g.size(); ++i) grad_b[k][i] += g[i];
                if (k > 0) g = matvec_t(net.layers[k].weight, g);
            }
        }

        const double inv_batch = 1.0 / static_cast<double>(cfg.batch);
        for (std::size_t k = 0; k < depth; ++k) {
            DenseMatrix reg = reg_coeff > 0.0 ? orth_frame_gradient(net.layers[k].weight)
                                              : DenseMatrix(grad_w[k].rows, grad_w[k].cols);
            for (std::size_t i = 0; i < grad_w[k].data.size(); ++i)
                net.layers[k].weight.data[i] -= cfg.lr * (grad_w[k].data[i] * inv_batch +
                                                          reg_coeff * reg.data[i]);
            if (cfg.bias)
                for (std::size_t i = 0; i < grad_b[k].size(); ++i)
                    net.layers[k].bias[i] -= cfg.lr * grad_b[k][i] * inv_batch;
        }
        DenseMatrix reg_a = reg_coeff > 0.0 ? orth_frame_gradient(net.classifier)
                                            : DenseMatrix(grad_a.rows, grad_a.cols);
        for (std::size_t i = 0; i < grad_a.data.size(); ++i)
            net.classifier.data[i] -= cfg.lr * (grad_a.data[i] * inv_batch + reg_coeff * reg_a.data[i]);
    }
    net.validate();
    return net;
}

inline double accuracy(const Network& net, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (argmax_lowest_tie(forward_logits(net, data.inputs[i])) == data.labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

// ---- synthetic data ---------------------------------------------------------

enum class SynthKind { Blobs, Spiral };

inline Dataset synth_data(SynthKind kind, std::size_t n, std::size_t c, std::uint64_t seed,
                          std::size_t dim = 2) {
    if (c < 2) throw std::invalid_argument("synth_data: need at least two classes");
    if (dim < 2) throw std::invalid_argument("synth_data: need dim >= 2");
    Rng rng(seed);
    Dataset ds;
    ds.num_classes = c;
    ds.inputs.reserve(n);
    ds.labels.reserve(n);
    if (kind == SynthKind::Blobs) {
        std::vector<Vector> centers;
        for (std::size_t k = 0; k < c; ++k) centers.push_back(rng.sphere(dim, 0.6));
        const double noise = 0.35 / std::sqrt(static_cast<double>(dim));
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t label = i % c;
            Vector x = centers[label];
            for (auto& v : x) v += noise * rng.gaussian();
            normalize_to_unit_ball(x);
            ds.inputs.push_back(std::move(x));
            ds.labels.push_back(label);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t label = i % c;
            double t = rng.uniform();
            double radius = 0.1 + 0.7 * t;
            double angle = 2.0 * kPi * (static_cast<double>(label) / static_cast<double>(c)) +
                           3.0 * t + 0.1 * rng.gaussian();
            Vector x(dim, 0.0);
            x[0] = radius * std::cos(angle);
            x[1] = radius * std::sin(angle);
            normalize_to_unit_ball(x);
            ds.inputs.push_back(std::move(x));
            ds.labels.push_back(label);
        }
    }
    return ds;
}

// ---- activity diagnostics ----------------------------------------------------

struct ActivityReport {
    // active_histogram[k][a] counts inputs whose layer-k active set has size a
    std::vector<std::vector<std::size_t>> active_histogram;
    std::vector<double> nu_list;
    std::vector<double> mean_flips;  // mean over data and draws of flipped neurons, all layers
};

inline ActivityReport activity_report(const Network& net, const Dataset& data,
                                      const std::vector<double>& nu_list, std::uint64_t seed = 7,
                                      std::size_t draws = 20) {
    if (data.size() == 0) throw std::invalid_argument("activity_report: empty dataset");
    ActivityReport rep;
    rep.nu_list = nu_list;
    rep.active_histogram.resize(net.depth());
    for (std::size_t k = 0; k < net.depth(); ++k) rep.active_histogram[k].assign(net.layer_dim(k) + 1, 0);

    std::vector<std::vector<char>> signs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        ForwardTrace tr = forward(net, data.inputs[i]);
        std::vector<char>& sg = signs[i];
        for (std::size_t k = 0; k < net.depth(); ++k) {
            std::size_t active = net.layer_dim(k) - tr.layers[k].inactive.size();
            rep.active_histogram[k][active]++;
            for (double z : tr.layers[k].pre) sg.push_back(z > 0.0 ? 1 : 0);
        }
    }

    Rng rng(seed);
    for (double nu : nu_list) {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            for (std::size_t t = 0; t < draws; ++t) {
                Vector delta = rng.sphere(net.input_dim(), nu);
                Vector x = data.inputs[i];
                for (std::size_t j = 0; j < x.size(); ++j) x[j] += delta[j];
                ForwardTrace tr = forward(net, x);
                std::size_t flips = 0;
                std::size_t off = 0;
                for (std::size_t k = 0; k < net.depth(); ++k)
                    for (double z : tr.layers[k].pre) {
                        char s = z > 0.0 ? 1 : 0;
                        if (s != signs[i][off]) ++flips;
                        ++off;
                    }
                total += static_cast<double>(flips);
                ++count;
            }
        }
        rep.mean_flips.push_back(total / static_cast<double>(count));
    }
    return rep;
}

} // namespace sllcert
