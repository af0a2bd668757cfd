#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sllcert/network.hpp"

namespace sllcert {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kModelFormatVersion = 1;

// Self-describing JSON manifest. nlohmann serializes doubles with
// shortest-round-trip printing, so save/load is exact on the 64-bit values.
inline void save_network(const Network& net, const std::string& path) {
    net.validate();
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["dims"] = net.dims();
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers) {
        nlohmann::json jl;
        jl["rows"] = l.weight.rows;
        jl["cols"] = l.weight.cols;
        jl["weights"] = l.weight.data;
        jl["bias"] = l.bias;
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    j["classifier"] = {{"rows", net.classifier.rows},
                       {"cols", net.classifier.cols},
                       {"weights", net.classifier.data}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_network: cannot open " + path);
    out << j.dump();
    out << '\n';
}

inline Network load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_network: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("load_network: " + path + ": " + e.what());
    }

    auto require = [&](const nlohmann::json& obj, const char* key) -> const nlohmann::json& {
        if (!obj.contains(key)) throw SchemaError(std::string("load_network: missing field '") + key + "'");
        return obj.at(key);
    };

    try {
        if (require(j, "format_version").get<int>() != kModelFormatVersion)
            throw SchemaError("load_network: unsupported format_version");
        Network net;
        for (const auto& jl : require(j, "layers")) {
            LayerWeights l;
            std::size_t rows = require(jl, "rows").get<std::size_t>();
            std::size_t cols = require(jl, "cols").get<std::size_t>();
            auto w = require(jl, "weights").get<std::vector<double>>();
            if (w.size() != rows * cols) throw SchemaError("load_network: layer weights length != rows*cols");
            l.weight = DenseMatrix(rows, cols, std::move(w));
            l.bias = require(jl, "bias").get<Vector>();
            net.layers.push_back(std::move(l));
        }
        const auto& jc = require(j, "classifier");
        std::size_t crows = require(jc, "rows").get<std::size_t>();
        std::size_t ccols = require(jc, "cols").get<std::size_t>();
        auto cw = require(jc, "weights").get<std::vector<double>>();
        if (cw.size() != crows * ccols) throw SchemaError("load_network: classifier weights length != rows*cols");
        net.classifier = DenseMatrix(crows, ccols, std::move(cw));

        auto dims = require(j, "dims").get<std::vector<std::size_t>>();
        if (dims != net.dims()) throw SchemaError("load_network: dims header does not match layer shapes");
        net.validate();
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("load_network: malformed manifest: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("load_network: ") + e.what());
    }
}

} // namespace sllcert
