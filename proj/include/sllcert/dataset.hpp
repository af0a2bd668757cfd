#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sllcert/matrix.hpp"
#include "sllcert/model_io.hpp"

namespace sllcert {

// Samples live in the unit l2 ball; labels in [0, C).
struct Dataset {
    std::vector<Vector> inputs;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return inputs.size(); }

    void validate() const {
        if (inputs.size() != labels.size()) throw std::invalid_argument("dataset: inputs/labels length mismatch");
        for (std::size_t l : labels)
            if (l >= num_classes) throw std::invalid_argument("dataset: label out of range");
    }
};

// Scale to the unit ball: pixels in [0,1] then x <- x / max(1, ||x||).
inline void normalize_to_unit_ball(Vector& x) {
    double n = norm2(x);
    if (n > 1.0)
        for (auto& v : x) v /= n;
}

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ParseError("idx: truncated header in " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

} // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::size_t kLoadAll = std::numeric_limits<std::size_t>::max();

// IDX pair loader (big-endian headers, unsigned byte payloads). `limit` caps
// the number of samples; 0 yields an empty dataset.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        std::size_t limit = kLoadAll) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw std::runtime_error("load_idx: cannot open " + images_path);
    std::ifstream lbls(labels_path, std::ios::binary);
    if (!lbls) throw std::runtime_error("load_idx: cannot open " + labels_path);

    if (detail::read_be32(imgs, images_path) != kIdxImagesMagic)
        throw ParseError("load_idx: bad magic number in " + images_path);
    if (detail::read_be32(lbls, labels_path) != kIdxLabelsMagic)
        throw ParseError("load_idx: bad magic number in " + labels_path);

    std::uint32_t n_images = detail::read_be32(imgs, images_path);
    std::uint32_t rows = detail::read_be32(imgs, images_path);
    std::uint32_t cols = detail::read_be32(imgs, images_path);
    std::uint32_t n_labels = detail::read_be32(lbls, labels_path);
    if (n_images != n_labels)
        throw SchemaError("load_idx: image count " + std::to_string(n_images) + " != label count " +
                          std::to_string(n_labels));

    const std::size_t dim = std::size_t(rows) * std::size_t(cols);
    const std::size_t count = std::min<std::size_t>(n_images, limit);

    Dataset ds;
    ds.inputs.reserve(count);
    ds.labels.reserve(count);
    std::vector<unsigned char> buf(dim);
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < count; ++i) {
        imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
        if (!imgs) throw ParseError("load_idx: truncated image payload in " + images_path);
        char lb;
        lbls.read(&lb, 1);
        if (!lbls) throw ParseError("load_idx: truncated label payload in " + labels_path);
        Vector x(dim);
        for (std::size_t j = 0; j < dim; ++j) x[j] = double(buf[j]) / 255.0;
        normalize_to_unit_ball(x);
        ds.inputs.push_back(std::move(x));
        std::size_t label = static_cast<unsigned char>(lb);
        max_label = std::max(max_label, label);
        ds.labels.push_back(label);
    }
    ds.num_classes = std::max<std::size_t>(max_label + 1, 2);
    return ds;
}

// IDX writer for fixtures; quantizes [0,1] floats back to bytes.
inline void save_idx(const Dataset& ds, std::size_t rows, std::size_t cols,
                     const std::string& images_path, const std::string& labels_path) {
    auto write_be32 = [](std::ostream& out, std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    std::ofstream imgs(images_path, std::ios::binary);
    std::ofstream lbls(labels_path, std::ios::binary);
    if (!imgs || !lbls) throw std::runtime_error("save_idx: cannot open output files");
    write_be32(imgs, kIdxImagesMagic);
    write_be32(imgs, static_cast<std::uint32_t>(ds.size()));
    write_be32(imgs, static_cast<std::uint32_t>(rows));
    write_be32(imgs, static_cast<std::uint32_t>(cols));
    write_be32(lbls, kIdxLabelsMagic);
    write_be32(lbls, static_cast<std::uint32_t>(ds.size()));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.inputs[i].size() != rows * cols) throw std::invalid_argument("save_idx: sample dim != rows*cols");
        for (double v : ds.inputs[i]) {
            double clamped = std::min(1.0, std::max(0.0, v));
            auto byte = static_cast<unsigned char>(clamped * 255.0 + 0.5);
            imgs.write(reinterpret_cast<const char*>(&byte), 1);
        }
        auto lb = static_cast<unsigned char>(ds.labels[i]);
        lbls.write(reinterpret_cast<const char*>(&lb), 1);
    }
}

// CSV datasets: one sample per row, label first.
inline Dataset load_csv_dataset(const std::string& path, std::size_t limit = kLoadAll) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv_dataset: cannot open " + path);
    Dataset ds;
    std::string line;
    std::size_t dim = 0;
    std::size_t max_label = 0;
    std::size_t line_no = 0;
    while (ds.size() < limit && std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        Vector x;
        bool first = true;
        std::size_t label = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                if (first) {
                    label = static_cast<std::size_t>(std::stoul(cell));
                    first = false;
                } else {
                    x.push_back(std::stod(cell));
                }
            } catch (const std::exception&) {
                throw ParseError("load_csv_dataset: " + path + ":" + std::to_string(line_no) +
                                 ": bad numeric field '" + cell + "'");
            }
        }
        if (first) throw ParseError("load_csv_dataset: " + path + ":" + std::to_string(line_no) + ": empty row");
        if (dim == 0) dim = x.size();
        if (x.size() != dim)
            throw SchemaError("load_csv_dataset: " + path + ":" + std::to_string(line_no) +
                              ": inconsistent sample dimension");
        normalize_to_unit_ball(x);
        max_label = std::max(max_label, label);
        ds.inputs.push_back(std::move(x));
        ds.labels.push_back(label);
    }
    ds.num_classes = std::max<std::size_t>(max_label + 1, 2);
    return ds;
}

} // namespace sllcert
