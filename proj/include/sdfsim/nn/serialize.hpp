#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdfsim/core/types.hpp"
#include "sdfsim/nn/mlp.hpp"
#include "sdfsim/nn/normalizer.hpp"

namespace sdfsim::nn {

static_assert(std::endian::native == std::endian::little,
              "tensor container assumes a little-endian host");

// Self-describing binary container: magic, version, a JSON header describing
// every tensor (name, dtype, shape) plus free-form metadata, then the raw
// little-endian payload in header order. f32 for weights, f64 where running
// statistics need the precision.
class TensorBundle {
public:
    static constexpr char kMagic[4] = {'S', 'D', 'F', 'B'};
    static constexpr std::uint32_t kVersion = 1;

    nlohmann::json meta;

    void add_f32(const std::string& name, const MatF& t) {
        names_.push_back(name);
        dtypes_.push_back("f32");
        f32_.push_back(t);
        f64_.emplace_back();
    }

    void add_f64(const std::string& name, const MatD& t) {
        names_.push_back(name);
        dtypes_.push_back("f64");
        f32_.emplace_back();
        f64_.push_back(t);
    }

    bool has(const std::string& name) const { return index_of(name) >= 0; }

    const MatF& f32(const std::string& name) const {
        int i = index_of(name);
        require(i >= 0 && dtypes_[i] == "f32", "io", "tensor '" + name + "' missing or not f32");
        return f32_[i];
    }

    const MatD& f64(const std::string& name) const {
        int i = index_of(name);
        require(i >= 0 && dtypes_[i] == "f64", "io", "tensor '" + name + "' missing or not f64");
        return f64_[i];
    }

    void save(const std::filesystem::path& path) const {
        nlohmann::json header;
        header["schema"] = "sdfsim.tensors/1";
        header["meta"] = meta;
        nlohmann::json tensors = nlohmann::json::array();
        for (std::size_t i = 0; i < names_.size(); ++i) {
            std::int64_t rows = dtypes_[i] == "f32" ? f32_[i].rows() : f64_[i].rows();
            std::int64_t cols = dtypes_[i] == "f32" ? f32_[i].cols() : f64_[i].cols();
            tensors.push_back({{"name", names_[i]}, {"dtype", dtypes_[i]}, {"rows", rows}, {"cols", cols}});
        }
        header["tensors"] = tensors;
        std::string hs = header.dump();

        std::ofstream out(path, std::ios::binary);
        require(out.good(), "io", "cannot open '" + path.string() + "' for writing");
        out.write(kMagic, 4);
        write_pod(out, kVersion);
        write_pod(out, std::uint64_t(hs.size()));
        out.write(hs.data(), std::streamsize(hs.size()));
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (dtypes_[i] == "f32")
                out.write(reinterpret_cast<const char*>(f32_[i].data()),
                          std::streamsize(f32_[i].size() * sizeof(float)));
            else
                out.write(reinterpret_cast<const char*>(f64_[i].data()),
                          std::streamsize(f64_[i].size() * sizeof(double)));
        }
        require(out.good(), "io", "short write to '" + path.string() + "'");
    }

    static TensorBundle load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        require(in.good(), "io", "cannot open '" + path.string() + "'");
        char magic[4];
        in.read(magic, 4);
        require(in.good() && std::equal(magic, magic + 4, kMagic), "io",
                "'" + path.string() + "' is not a tensor container");
        std::uint32_t version = read_pod<std::uint32_t>(in);
        require(version == kVersion, "io", "unsupported container version " + std::to_string(version));
        auto hlen = read_pod<std::uint64_t>(in);
        std::string hs(hlen, '\0');
        in.read(hs.data(), std::streamsize(hlen));
        nlohmann::json header = nlohmann::json::parse(hs);

        TensorBundle b;
        b.meta = header.value("meta", nlohmann::json::object());
        for (const auto& t : header.at("tensors")) {
            std::string name = t.at("name");
            std::string dtype = t.at("dtype");
            std::int64_t rows = t.at("rows"), cols = t.at("cols");
            if (dtype == "f32") {
                MatF m(rows, cols);
                in.read(reinterpret_cast<char*>(m.data()), std::streamsize(m.size() * sizeof(float)));
                b.add_f32(name, m);
            } else if (dtype == "f64") {
                MatD m(rows, cols);
                in.read(reinterpret_cast<char*>(m.data()), std::streamsize(m.size() * sizeof(double)));
                b.add_f64(name, m);
            } else {
                throw Error("io", "unknown dtype '" + dtype + "' in '" + path.string() + "'");
            }
        }
        require(in.good(), "io", "truncated tensor container '" + path.string() + "'");
        return b;
    }

private:
    template <typename T>
    static void write_pod(std::ofstream& out, T v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    template <typename T>
    static T read_pod(std::ifstream& in) {
        T v{};
        in.read(reinterpret_cast<char*>(&v), sizeof(T));
        return v;
    }

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return int(i);
        return -1;
    }

    std::vector<std::string> names_;
    std::vector<std::string> dtypes_;
    std::vector<MatF> f32_;
    std::vector<MatD> f64_;
};

inline nlohmann::json mlp_config_json(const MlpConfig& c) {
    return {{"input", c.input},
            {"output", c.output},
            {"width", c.width},
            {"hidden_layers", c.hidden_layers},
            {"activation", activation_name(c.activation)},
            {"layer_norm", c.layer_norm}};
}

inline MlpConfig mlp_config_from_json(const nlohmann::json& j) {
    MlpConfig c;
    c.input = j.at("input");
    c.output = j.at("output");
    c.width = j.at("width");
    c.hidden_layers = j.at("hidden_layers");
    c.activation = activation_from_name(j.at("activation"));
    c.layer_norm = j.at("layer_norm");
    return c;
}

inline void bundle_add_mlp(TensorBundle& b, const std::string& prefix, const Mlp& mlp) {
    for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
        const auto& layer = mlp.layers()[l];
        std::string p = prefix + "/layer" + std::to_string(l);
        b.add_f32(p + "/w", layer.w);
        b.add_f32(p + "/b", layer.b);
        if (layer.gamma.size()) {
            b.add_f32(p + "/gamma", layer.gamma);
            b.add_f32(p + "/beta", layer.beta);
        }
    }
}

inline Mlp bundle_read_mlp(const TensorBundle& b, const std::string& prefix, const MlpConfig& cfg) {
    Rng rng(0);
    Mlp mlp(cfg, rng);
    for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
        auto& layer = mlp.layers()[l];
        std::string p = prefix + "/layer" + std::to_string(l);
        layer.w = b.f32(p + "/w");
        layer.b = b.f32(p + "/b");
        if (cfg.layer_norm && l + 1 < mlp.layers().size()) {
            layer.gamma = b.f32(p + "/gamma");
            layer.beta = b.f32(p + "/beta");
        }
    }
    return mlp;
}

inline void bundle_add_normalizer(TensorBundle& b, const std::string& prefix, const Normalizer& n) {
    b.add_f64(prefix + "/sum", n.raw_sum());
    b.add_f64(prefix + "/sumsq", n.raw_sumsq());
    MatD state(1, 2);
    state(0, 0) = n.count();
    state(0, 1) = n.frozen() ? 1.0 : 0.0;
    b.add_f64(prefix + "/state", state);
}

inline Normalizer bundle_read_normalizer(const TensorBundle& b, const std::string& prefix, int dim) {
    Normalizer n(dim);
    MatD state = b.f64(prefix + "/state");
    n.restore(b.f64(prefix + "/sum").reshaped(dim, 1), b.f64(prefix + "/sumsq").reshaped(dim, 1),
              state(0, 0), state(0, 1) != 0.0);
    return n;
}

}  // namespace sdfsim::nn
