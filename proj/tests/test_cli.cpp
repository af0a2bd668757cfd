#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sllcert/cli.hpp"

using namespace sllcert;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path dir;
    TempDir() : dir(fs::temp_directory_path() / "sllcert_cli_test") {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string operator/(const char* name) const { return (dir / name).string(); }
};

} // namespace

TEST_CASE("cli end to end on a small synthetic task") {
    TempDir tmp;
    std::string model = tmp / "model.json";

    CHECK(cli::run({"train", "--synth", "blobs", "--n", "200", "--classes", "2", "--dim", "6",
                    "--arch", "6,12,2", "--steps", "300", "--batch", "40", "--eta", "0.01",
                    "--seed", "4", "--out", model}) == 0);
    CHECK(fs::exists(model));

    // dataset file for the remaining subcommands
    std::string data = tmp / "val.csv";
    {
        Dataset ds = synth_data(SynthKind::Blobs, 40, 2, 5, 6);
        std::ofstream out(data);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            out << ds.labels[i];
            for (double v : ds.inputs[i]) out << ',' << format_double(v);
            out << '\n';
        }
    }

    std::string certs = tmp / "certs.csv";
    CHECK(cli::run({"certify", "--model", model, "--data", data, "--tol", "1e-6", "--out", certs}) == 0);
    {
        std::ifstream in(certs);
        std::string header;
        std::getline(in, header);
        CHECK(header == "x_id,margin,r_global,r_sparse,s_hat");
        std::string line;
        std::size_t rows = 0;
        while (std::getline(in, line)) {
            std::istringstream ss(line);
            std::string cell;
            std::getline(ss, cell, ',');
            std::getline(ss, cell, ',');
            std::getline(ss, cell, ',');
            double r_global = std::stod(cell);
            std::getline(ss, cell, ',');
            double r_sparse = std::stod(cell);
            CHECK(r_sparse >= r_global - 1e-6);  // row-wise dominance
            ++rows;
        }
        CHECK(rows == 40);
    }

    // byte-identical reruns
    std::string certs2 = tmp / "certs2.csv";
    CHECK(cli::run({"certify", "--model", model, "--data", data, "--tol", "1e-6", "--out", certs2}) == 0);
    CHECK(slurp(certs) == slurp(certs2));

    // curve consumes the IDX pair surface
    std::string imgs = tmp / "val-images.idx";
    std::string lbls = tmp / "val-labels.idx";
    {
        Dataset ds = synth_data(SynthKind::Blobs, 30, 2, 6, 6);
        for (auto& x : ds.inputs)
            for (auto& v : x) v = std::min(1.0, std::max(0.0, 0.5 * (v + 1.0)));
        save_idx(ds, 2, 3, imgs, lbls);
    }
    std::string curve_idx = tmp / "curve_idx.csv";
    CHECK(cli::run({"curve", "--model", model, "--data", imgs, "--labels", lbls, "--grid", "0:0.1:0.05",
                    "--out", curve_idx}) == 0);
    {
        std::ifstream in(curve_idx);
        std::string header;
        std::getline(in, header);
        CHECK(header == "nu,certified_acc_sparse,certified_acc_global,clean_acc");
    }

    std::string curve = tmp / "curve.csv";
    CHECK(cli::run({"curve", "--model", model, "--data", data, "--grid", "0:0.2:0.05", "--out", curve}) == 0);
    {
        std::ifstream in(curve);
        std::string header;
        std::getline(in, header);
        CHECK(header == "nu,certified_acc_sparse,certified_acc_global,clean_acc");
        std::string line;
        double prev = 2.0;
        std::size_t rows = 0;
        while (std::getline(in, line)) {
            std::istringstream ss(line);
            std::string cell;
            std::getline(ss, cell, ',');
            std::getline(ss, cell, ',');
            double acc = std::stod(cell);
            CHECK(acc <= prev + 1e-12);
            prev = acc;
            ++rows;
        }
        CHECK(rows == 5);
    }

    std::string hist = tmp / "hist.csv";
    std::string flips = tmp / "flips.csv";
    CHECK(cli::run({"activity", "--model", model, "--data", data, "--nu-list", "0.05,0.1",
                    "--out-hist", hist, "--out-flips", flips}) == 0);
    CHECK(slurp(hist).rfind("layer,active_count,inputs", 0) == 0);
    CHECK(slurp(flips).rfind("nu,mean_flips", 0) == 0);

    std::string attacks = tmp / "attack.csv";
    CHECK(cli::run({"attack", "--model", model, "--data", data, "--limit", "5", "--steps", "25",
                    "--restarts", "4", "--tol", "1e-2", "--out", attacks}) == 0);
    {
        std::ifstream in(attacks);
        std::string header;
        std::getline(in, header);
        CHECK(header == "x_id,margin,r_global,r_sparse,r_adv");
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ss(line);
            std::string cell;
            for (int i = 0; i < 4; ++i) std::getline(ss, cell, ',');
            double r_sparse = std::stod(cell);
            std::getline(ss, cell, ',');
            double r_adv = cell == "inf" ? kInf : std::stod(cell);
            CHECK(r_sparse <= r_adv + 1e-2);
        }
    }
}

TEST_CASE("cli regularity and bound run on zero-bias models") {
    TempDir tmp;
    std::string model = tmp / "model.json";
    CHECK(cli::run({"train", "--synth", "blobs", "--n", "150", "--classes", "2", "--dim", "5",
                    "--arch", "5,10,2", "--steps", "200", "--batch", "30", "--no-bias",
                    "--seed", "8", "--out", model}) == 0);

    std::string data = tmp / "ref.csv";
    {
        Dataset ds = synth_data(SynthKind::Blobs, 25, 2, 9, 5);
        std::ofstream out(data);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            out << ds.labels[i];
            for (double v : ds.inputs[i]) out << ',' << format_double(v);
            out << '\n';
        }
    }

    std::string reg = tmp / "reg.csv";
    CHECK(cli::run({"regularity", "--model", model, "--data", data, "--nu-sweep", "0:0.4:0.2",
                    "--epsilon", "auto", "--out", reg}) == 0);
    {
        std::ifstream in(reg);
        std::string header;
        std::getline(in, header);
        CHECK(header == "nu,L_rob,L_global,ratio,s_star");
        std::string line;
        std::size_t rows = 0;
        while (std::getline(in, line)) {
            std::istringstream ss(line);
            std::string cell;
            for (int i = 0; i < 4; ++i) std::getline(ss, cell, ',');
            CHECK(std::stod(cell) <= 1.0 + 1e-12);
            ++rows;
        }
        CHECK(rows == 3);
    }

    std::string bound = tmp / "bound.csv";
    CHECK(cli::run({"bound", "--model", model, "--data", data, "--gamma", "1.0", "--nu", "0.1",
                    "--alpha", "0.05", "--out", bound}) == 0);
    CHECK(slurp(bound).rfind("term1,term2,total,log_cover,s_star", 0) == 0);

    CHECK(cli::run({"inspect", "--model", model}) == 0);
}

TEST_CASE("cli error paths") {
    TempDir tmp;
    // unknown flag: usage error
    CHECK(cli::run({"certify", "--bogus"}) == 1);
    CHECK(cli::run({"frobnicate"}) == 1);
    // missing model file: data error
    CHECK(cli::run({"certify", "--model", tmp / "nope.json", "--data", tmp / "nope.csv",
                    "--out", tmp / "x.csv"}) == 2);
    // regularity on a biased model: model error
    std::string model = tmp / "biased.json";
    CHECK(cli::run({"train", "--synth", "blobs", "--n", "80", "--dim", "4", "--arch", "4,6,2",
                    "--steps", "50", "--batch", "20", "--seed", "2", "--out", model}) == 0);
    std::string data = tmp / "d.csv";
    {
        Dataset ds = synth_data(SynthKind::Blobs, 10, 2, 3, 4);
        std::ofstream out(data);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            out << ds.labels[i];
            for (double v : ds.inputs[i]) out << ',' << format_double(v);
            out << '\n';
        }
    }
    CHECK(cli::run({"regularity", "--model", model, "--data", data, "--out", tmp / "r.csv"}) == 2);
    CHECK(cli::run({"--help"}) == 0);
}
