#pragma once

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sllcert/attack.hpp"
#include "sllcert/cert_input.hpp"
#include "sllcert/csv.hpp"
#include "sllcert/dataset.hpp"
#include "sllcert/model_io.hpp"
#include "sllcert/parallel.hpp"
#include "sllcert/param_sll.hpp"
#include "sllcert/train.hpp"

namespace sllcert::cli {

inline std::vector<double> parse_grid(const std::string& spec) {
    // "start:stop:step", inclusive of stop up to a half-step slack
    double start, stop, step;
    char c1, c2;
    std::istringstream ss(spec);
    if (!(ss >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0)
        throw std::invalid_argument("grid must be start:stop:step with positive step, got '" + spec + "'");
    std::vector<double> grid;
    for (double v = start; v <= stop + 0.5 * step; v += step) grid.push_back(v);
    return grid;
}

inline std::vector<double> parse_list(const std::string& spec) {
    std::vector<double> out;
    std::istringstream ss(spec);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
}

inline SparsityVector parse_levels(const std::string& spec) {
    SparsityVector out;
    std::istringstream ss(spec);
    std::string cell;
    while (std::getline(ss, cell, ':')) out.push_back(std::stoul(cell));
    return out;
}

namespace detail {

struct DataOptions {
    std::string data;
    std::string labels;
    std::size_t limit = 0;  // 0 = all

    Dataset load() const {
        std::size_t cap = limit == 0 ? kLoadAll : limit;
        if (!labels.empty()) return load_idx(data, labels, cap);
        return load_csv_dataset(data, cap);
    }
};

inline void add_data_options(CLI::App* cmd, DataOptions& opt, bool required = true) {
    auto* d = cmd->add_option("--data", opt.data, "dataset file (CSV, or IDX images when --labels is given)");
    if (required) d->required();
    cmd->add_option("--labels", opt.labels, "IDX label file (switches --data to IDX images)");
    cmd->add_option("--limit", opt.limit, "use at most this many samples (0 = all)");
}

} // namespace detail

inline int run(std::vector<std::string> args) {
    CLI::App app{"sparse local Lipschitz robustness certification for feedforward ReLU networks"};
    app.require_subcommand(1);

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train a network with orthogonal frame regularization");
    struct {
        std::string config;
        std::string arch = "2,16,2";
        std::string synth = "blobs";
        std::size_t n = 500;
        std::size_t classes = 2;
        std::size_t dim = 2;
        detail::DataOptions data;
        double eta = 0.0;
        std::size_t steps = 2000;
        std::size_t batch = 100;
        double lr = 0.01;
        std::uint64_t seed = 1;
        bool no_bias = false;
        std::string out;
    } tr;
    train_cmd->add_option("--config", tr.config, "KEY=VALUE config file; explicit flags override");
    train_cmd->add_option("--arch", tr.arch, "comma-separated widths incl. input and output");
    train_cmd->add_option("--synth", tr.synth, "synthetic dataset kind: blobs|spiral")
        ->check(CLI::IsMember({"blobs", "spiral"}));
    train_cmd->add_option("--n", tr.n, "synthetic sample count");
    train_cmd->add_option("--classes", tr.classes, "synthetic class count");
    train_cmd->add_option("--dim", tr.dim, "synthetic input dimension");
    detail::add_data_options(train_cmd, tr.data, /*required=*/false);
    train_cmd->add_option("--eta", tr.eta, "orthogonal frame coefficient");
    train_cmd->add_option("--steps", tr.steps, "SGD steps");
    train_cmd->add_option("--batch", tr.batch, "batch size");
    train_cmd->add_option("--lr", tr.lr, "learning rate");
    train_cmd->add_option("--seed", tr.seed, "RNG seed");
    train_cmd->add_flag("--no-bias", tr.no_bias, "train with biases fixed to zero");
    train_cmd->add_option("--out", tr.out, "output model path")->required();

    // ---- certify ----
    auto* cert_cmd = app.add_subcommand("certify", "per-input certified radii (sparse and global)");
    struct {
        std::string model;
        detail::DataOptions data;
        double tol = kCertifyTol;
        std::string out;
    } ce;
    cert_cmd->add_option("--model", ce.model, "model manifest")->required();
    detail::add_data_options(cert_cmd, ce.data);
    cert_cmd->add_option("--tol", ce.tol, "binary search tolerance");
    cert_cmd->add_option("--out", ce.out, "output CSV")->required();

    // ---- curve ----
    auto* curve_cmd = app.add_subcommand("curve", "security curve: certified accuracy vs attack energy");
    struct {
        std::string model;
        detail::DataOptions data;
        std::string grid = "0:0.5:0.01";
        double tol = kCertifyTol;
        std::string out;
    } cu;
    curve_cmd->add_option("--model", cu.model, "model manifest")->required();
    detail::add_data_options(curve_cmd, cu.data);
    curve_cmd->add_option("--grid", cu.grid, "nu grid start:stop:step");
    curve_cmd->add_option("--tol", cu.tol, "binary search tolerance");
    curve_cmd->add_option("--out", cu.out, "output CSV")->required();

    // ---- activity ----
    auto* act_cmd = app.add_subcommand("activity", "active-neuron histograms and flip counts");
    struct {
        std::string model;
        detail::DataOptions data;
        std::string nu_list = "0.05,0.1,0.2";
        std::uint64_t seed = 7;
        std::string out_hist;
        std::string out_flips;
    } ac;
    act_cmd->add_option("--model", ac.model, "model manifest")->required();
    detail::add_data_options(act_cmd, ac.data);
    act_cmd->add_option("--nu-list", ac.nu_list, "comma-separated perturbation energies");
    act_cmd->add_option("--seed", ac.seed, "RNG seed for perturbation draws");
    act_cmd->add_option("--out-hist", ac.out_hist, "histogram CSV")->required();
    act_cmd->add_option("--out-flips", ac.out_flips, "flip-count CSV")->required();

    // ---- regularity ----
    auto* reg_cmd = app.add_subcommand("regularity", "robust sparse regularity sweep over nu");
    struct {
        std::string model;
        detail::DataOptions data;
        std::string sweep = "0:1:0.05";
        std::string epsilon = "auto";
        std::string out;
    } rg;
    reg_cmd->add_option("--model", rg.model, "zero-bias model manifest")->required();
    detail::add_data_options(reg_cmd, rg.data);
    reg_cmd->add_option("--nu-sweep", rg.sweep, "nu grid start:stop:step");
    reg_cmd->add_option("--epsilon", rg.epsilon, "radius threshold, or 'auto' = 1/(|V|(K+1))");
    reg_cmd->add_option("--out", rg.out, "output CSV")->required();

    // ---- attack ----
    auto* atk_cmd = app.add_subcommand("attack", "PGD-based minimal adversarial radius per input");
    struct {
        std::string model;
        detail::DataOptions data;
        double tol = 1e-3;
        double cert_tol = kCertifyTol;
        std::size_t steps = 50;
        std::size_t restarts = 10;
        std::uint64_t seed = 1;
        std::string out;
    } at;
    atk_cmd->add_option("--model", at.model, "model manifest")->required();
    detail::add_data_options(atk_cmd, at.data);
    atk_cmd->add_option("--tol", at.tol, "bisection tolerance for r_adv");
    atk_cmd->add_option("--cert-tol", at.cert_tol, "certification tolerance");
    atk_cmd->add_option("--steps", at.steps, "PGD steps");
    atk_cmd->add_option("--restarts", at.restarts, "PGD restarts");
    atk_cmd->add_option("--seed", at.seed, "attack seed");
    atk_cmd->add_option("--out", at.out, "output CSV")->required();

    // ---- bound ----
    auto* bound_cmd = app.add_subcommand("bound", "robust generalization bound for a trained predictor");
    struct {
        std::string model;
        detail::DataOptions data;
        double gamma = 1.0;
        double nu = 0.0;
        double alpha = 0.05;
        std::size_t m = 0;
        std::string epsilon = "auto";
        std::string sparsity;
        std::string out;
    } bd;
    bound_cmd->add_option("--model", bd.model, "zero-bias model manifest")->required();
    detail::add_data_options(bound_cmd, bd.data, /*required=*/false);
    bound_cmd->add_option("--gamma", bd.gamma, "margin threshold");
    bound_cmd->add_option("--nu", bd.nu, "adversarial energy");
    bound_cmd->add_option("--alpha", bd.alpha, "failure probability");
    bound_cmd->add_option("--m", bd.m, "sample count (defaults to reference set size)");
    bound_cmd->add_option("--epsilon", bd.epsilon, "radius threshold for s*, or 'auto'");
    bound_cmd->add_option("--sparsity", bd.sparsity, "explicit colon-separated sparsity levels");
    bound_cmd->add_option("--out", bd.out, "output CSV")->required();

    // ---- inspect ----
    auto* ins_cmd = app.add_subcommand("inspect", "print model dimensions and norms");
    struct {
        std::string model;
    } in;
    ins_cmd->add_option("--model", in.model, "model manifest")->required();

    std::vector<const char*> argv;
    argv.push_back("sllcert");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (train_cmd->parsed()) {
            TrainConfig cfg;
            if (!tr.config.empty()) cfg = parse_train_config(tr.config);
            if (train_cmd->count("--arch") || tr.config.empty()) {
                cfg.arch.clear();
                for (double v : parse_list(tr.arch)) cfg.arch.push_back(static_cast<std::size_t>(v));
            }
            if (train_cmd->count("--eta")) cfg.eta = tr.eta;
            if (train_cmd->count("--steps")) cfg.steps = tr.steps;
            if (train_cmd->count("--batch")) cfg.batch = tr.batch;
            if (train_cmd->count("--lr")) cfg.lr = tr.lr;
            if (train_cmd->count("--seed")) cfg.seed = tr.seed;
            if (tr.no_bias) cfg.bias = false;

            Dataset data;
            if (!tr.data.data.empty()) {
                data = tr.data.load();
            } else {
                SynthKind kind = tr.synth == "spiral" ? SynthKind::Spiral : SynthKind::Blobs;
                data = synth_data(kind, tr.n, tr.classes, tr.seed, tr.dim);
            }
            Network net = sgd_train(data, cfg);
            save_network(net, tr.out);
            std::cout << "trained " << cfg.arch.size() - 2 << "-hidden-layer model, train accuracy "
                      << format_double(accuracy(net, data)) << ", saved to " << tr.out << "\n";
        } else if (cert_cmd->parsed()) {
            Network net = load_network(ce.model);
            Dataset data = ce.data.load();
            struct Row {
                double margin, r_global, r_sparse;
                SparsityVector s_hat;
            };
            std::vector<Row> rows(data.size());
            parallel_for(data.size(), [&](std::size_t i) {
                InputCertificate cert = certify(net, data.inputs[i], ce.tol);
                rows[i] = {cert.margin, cert.r_global, cert.r_sparse, cert.s_hat};
            });
            CsvWriter csv(ce.out);
            csv.row({"x_id", "margin", "r_global", "r_sparse", "s_hat"});
            for (std::size_t i = 0; i < rows.size(); ++i)
                csv.row({std::to_string(i), format_double(rows[i].margin), format_double(rows[i].r_global),
                         format_double(rows[i].r_sparse), join_levels(rows[i].s_hat)});
        } else if (curve_cmd->parsed()) {
            Network net = load_network(cu.model);
            Dataset data = cu.data.load();
            auto curve = security_curve(net, data, parse_grid(cu.grid), cu.tol);
            CsvWriter csv(cu.out);
            csv.row({"nu", "certified_acc_sparse", "certified_acc_global", "clean_acc"});
            for (const auto& p : curve)
                csv.row({format_double(p.nu), format_double(p.certified_acc_sparse),
                         format_double(p.certified_acc_global), format_double(p.clean_acc)});
        } else if (act_cmd->parsed()) {
            Network net = load_network(ac.model);
            Dataset data = ac.data.load();
            ActivityReport rep = activity_report(net, data, parse_list(ac.nu_list), ac.seed);
            CsvWriter hist(ac.out_hist);
            hist.row({"layer", "active_count", "inputs"});
            for (std::size_t k = 0; k < rep.active_histogram.size(); ++k)
                for (std::size_t a = 0; a < rep.active_histogram[k].size(); ++a)
                    if (rep.active_histogram[k][a] > 0)
                        hist.row({std::to_string(k + 1), std::to_string(a),
                                  std::to_string(rep.active_histogram[k][a])});
            CsvWriter flips(ac.out_flips);
            flips.row({"nu", "mean_flips"});
            for (std::size_t i = 0; i < rep.nu_list.size(); ++i)
                flips.row({format_double(rep.nu_list[i]), format_double(rep.mean_flips[i])});
        } else if (reg_cmd->parsed()) {
            Network net = load_network(rg.model);
            Dataset data = rg.data.load();
            HypothesisConstraints cons = constraints_from_network(net);
            double eps = rg.epsilon == "auto"
                             ? 1.0 / (static_cast<double>(data.size()) * static_cast<double>(net.depth() + 1))
                             : std::stod(rg.epsilon);
            CsvWriter csv(rg.out);
            csv.row({"nu", "L_rob", "L_global", "ratio", "s_star"});
            for (double nu : parse_grid(rg.sweep)) {
                RobustSensitivity sens = robust_sparse_regularity(net, data.inputs, eps, nu, cons);
                csv.row({format_double(nu), format_double(sens.l_rob), format_double(sens.l_global),
                         format_double(sens.l_rob / sens.l_global), join_levels(sens.s_star)});
            }
        } else if (atk_cmd->parsed()) {
            Network net = load_network(at.model);
            Dataset data = at.data.load();
            AttackConfig cfg;
            cfg.steps = at.steps;
            cfg.restarts = at.restarts;
            cfg.seed = at.seed;
            struct Row {
                double margin, r_global, r_sparse, r_adv;
            };
            std::vector<Row> rows(data.size());
            parallel_for(data.size(), [&](std::size_t i) {
                InputCertificate cert = certify(net, data.inputs[i], at.cert_tol);
                AttackConfig percfg = cfg;
                percfg.seed = cfg.seed + i;  // distinct restart noise per input, still reproducible
                AdvRadius adv = min_adv_radius(net, data.inputs[i], at.tol, percfg);
                rows[i] = {cert.margin, cert.r_global, cert.r_sparse, adv.radius};
            });
            CsvWriter csv(at.out);
            csv.row({"x_id", "margin", "r_global", "r_sparse", "r_adv"});
            for (std::size_t i = 0; i < rows.size(); ++i)
                csv.row({std::to_string(i), format_double(rows[i].margin), format_double(rows[i].r_global),
                         format_double(rows[i].r_sparse), format_double(rows[i].r_adv)});
        } else if (bound_cmd->parsed()) {
            Network net = load_network(bd.model);
            SparsityVector s;
            std::size_t m = bd.m;
            if (!bd.sparsity.empty()) {
                s = parse_levels(bd.sparsity);
            } else {
                if (bd.data.data.empty())
                    throw std::invalid_argument("bound: need --data for the optimal sparsity or --sparsity");
                Dataset data = bd.data.load();
                HypothesisConstraints cons = constraints_from_network(net);
                double eps =
                    bd.epsilon == "auto"
                        ? 1.0 / (static_cast<double>(data.size()) * static_cast<double>(net.depth() + 1))
                        : std::stod(bd.epsilon);
                s = optimal_robust_sparsity(net, data.inputs, eps, bd.nu, cons);
                if (m == 0) m = data.size();
            }
            if (m == 0) throw std::invalid_argument("bound: --m is required with --sparsity");
            BoundReport rep = generalization_bound(net, bd.gamma, bd.nu, bd.alpha, m, s);
            CsvWriter csv(bd.out);
            csv.row({"term1", "term2", "total", "log_cover", "s_star"});
            csv.row({format_double(rep.term1), format_double(rep.term2), format_double(rep.total),
                     format_double(rep.log_cover), join_levels(s)});
        } else if (ins_cmd->parsed()) {
            Network net = load_network(in.model);
            auto dims = net.dims();
            std::cout << "dims:";
            for (std::size_t d : dims) std::cout << ' ' << d;
            std::cout << "\nzero_bias: " << (net.zero_bias() ? "yes" : "no") << "\n";
            for (std::size_t k = 0; k < net.depth(); ++k) {
                const auto& w = net.layers[k].weight;
                std::cout << "layer " << k + 1 << ": spectral " << format_double(spectral_norm(w))
                          << ", group " << format_double(row_group_norm(w)) << "\n";
            }
            std::cout << "classifier: spectral " << format_double(spectral_norm(net.classifier))
                      << ", group(T) " << format_double(row_group_norm(transpose(net.classifier))) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace sllcert::cli
