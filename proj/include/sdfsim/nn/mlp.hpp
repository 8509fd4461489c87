#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sdfsim/core/rng.hpp"
#include "sdfsim/core/types.hpp"

namespace sdfsim::nn {

enum class Activation { Identity, Relu, Elu };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Elu: return "elu";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "elu") return Activation::Elu;
    throw Error("config", "unknown activation '" + s + "'");
}

struct MlpConfig {
    int input = 0;
    int output = 0;
    int width = 0;
    int hidden_layers = 0;  // hidden layers of `width` units; total linear layers = hidden_layers + 1
    Activation activation = Activation::Relu;
    bool layer_norm = false;  // LayerNorm between each hidden linear layer and its activation

    int linear_layers() const { return hidden_layers + 1; }
};

// Multilayer perceptron with an explicit tape-based backward pass. The output
// layer is always linear; LayerNorm and the activation apply to hidden layers
// only. Templated on the scalar so the float production path and the
// double-precision gradient checks share one implementation.
template <typename T>
class MlpT {
public:
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Row = Eigen::Matrix<T, 1, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    struct Layer {
        Mat w;  // [out, in]
        Row b;  // [out]
        Row gamma, beta;  // LayerNorm parameters, empty unless enabled
    };

    struct Tape {
        std::vector<Mat> inputs;   // input of each linear layer
        std::vector<Mat> ln_xhat;  // normalized pre-activations per hidden layer
        std::vector<Vec> ln_rstd;  // per-row 1/std per hidden layer
        Mat output;
        bool valid = false;
    };

    struct Grads {
        std::vector<Layer> layers;

        void set_zero() {
            for (auto& l : layers) {
                l.w.setZero();
                l.b.setZero();
                if (l.gamma.size()) l.gamma.setZero();
                if (l.beta.size()) l.beta.setZero();
            }
        }
        void add(const Grads& other, T scale = T(1)) {
            for (std::size_t i = 0; i < layers.size(); ++i) {
                layers[i].w += scale * other.layers[i].w;
                layers[i].b += scale * other.layers[i].b;
                if (layers[i].gamma.size()) layers[i].gamma += scale * other.layers[i].gamma;
                if (layers[i].beta.size()) layers[i].beta += scale * other.layers[i].beta;
            }
        }
    };

    MlpT() = default;

    MlpT(const MlpConfig& cfg, Rng& rng) : cfg_(cfg) {
        require(cfg.input > 0 && cfg.output > 0, "config", "mlp needs positive input/output widths");
        require(cfg.hidden_layers == 0 || cfg.width > 0, "config", "mlp hidden layers need positive width");
        layers_.resize(cfg.linear_layers());
        for (int l = 0; l < cfg.linear_layers(); ++l) {
            int in = (l == 0) ? cfg.input : cfg.width;
            int out = (l == cfg.linear_layers() - 1) ? cfg.output : cfg.width;
            double s = 1.0 / std::sqrt(double(in));  // fan-in scaled uniform
            layers_[l].w.resize(out, in);
            layers_[l].b.resize(out);
            for (int i = 0; i < out; ++i) {
                layers_[l].b(i) = T(rng.uniform(-s, s));
                for (int j = 0; j < in; ++j) layers_[l].w(i, j) = T(rng.uniform(-s, s));
            }
            if (cfg.layer_norm && l < cfg.linear_layers() - 1) {
                layers_[l].gamma = Row::Ones(out);
                layers_[l].beta = Row::Zero(out);
            }
        }
    }

    // Casts parameters from another scalar width, keeping the architecture.
    template <typename U>
    static MlpT from(const MlpT<U>& other) {
        MlpT m;
        m.cfg_ = other.config();
        m.layers_.resize(other.layers().size());
        for (std::size_t l = 0; l < m.layers_.size(); ++l) {
            m.layers_[l].w = other.layers()[l].w.template cast<T>();
            m.layers_[l].b = other.layers()[l].b.template cast<T>();
            if (other.layers()[l].gamma.size()) {
                m.layers_[l].gamma = other.layers()[l].gamma.template cast<T>();
                m.layers_[l].beta = other.layers()[l].beta.template cast<T>();
            }
        }
        return m;
    }

    const MlpConfig& config() const { return cfg_; }
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    Grads make_grads() const {
        Grads g;
        g.layers.resize(layers_.size());
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            g.layers[i].w = Mat::Zero(layers_[i].w.rows(), layers_[i].w.cols());
            g.layers[i].b = Row::Zero(layers_[i].b.size());
            if (layers_[i].gamma.size()) {
                g.layers[i].gamma = Row::Zero(layers_[i].gamma.size());
                g.layers[i].beta = Row::Zero(layers_[i].beta.size());
            }
        }
        return g;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_)
            n += std::size_t(l.w.size() + l.b.size() + l.gamma.size() + l.beta.size());
        return n;
    }

    // x: [rows, input] -> [rows, output]; fills the tape for backward.
    Mat forward(const Mat& x, Tape& tape) const {
        require(x.cols() == cfg_.input, "shape",
                "mlp forward: got " + std::to_string(x.cols()) + " columns, want " +
                    std::to_string(cfg_.input));
        int L = cfg_.linear_layers();
        tape.inputs.assign(L, Mat());
        tape.ln_xhat.assign(cfg_.layer_norm ? L - 1 : 0, Mat());
        tape.ln_rstd.assign(cfg_.layer_norm ? L - 1 : 0, Vec());
        Mat a = x;
        for (int l = 0; l < L; ++l) {
            tape.inputs[l] = a;
            Mat z = a * layers_[l].w.transpose();
            z.rowwise() += layers_[l].b;
            if (l == L - 1) {
                a = std::move(z);
                break;
            }
            if (cfg_.layer_norm) layer_norm_forward(l, z, tape);
            apply_activation(z);
            a = std::move(z);
        }
        tape.output = a;
        tape.valid = true;
        return a;
    }

    Mat forward(const Mat& x) const {
        Tape t;
        return forward(x, t);
    }

    // dy: [rows, output]. Accumulates parameter gradients into `grads`;
    // returns dL/dx through *dx when requested.
    void backward(const Tape& tape, const Mat& dy, Grads& grads, Mat* dx = nullptr) const {
        require(tape.valid, "shape", "mlp backward: tape not filled by a forward pass");
        int L = cfg_.linear_layers();
        Mat da = dy;
        for (int l = L - 1; l >= 0; --l) {
            Mat dz;
            if (l == L - 1) {
                dz = std::move(da);
            } else {
                // Activation backward reads this layer's output (= next layer's input).
                const Mat& act_out = tape.inputs[l + 1];
                dz = activation_backward(da, act_out);
                if (cfg_.layer_norm) dz = layer_norm_backward(l, dz, tape, grads);
            }
            grads.layers[l].w.noalias() += dz.transpose() * tape.inputs[l];
            grads.layers[l].b += dz.colwise().sum();
            if (l > 0 || dx != nullptr) {
                da.noalias() = dz * layers_[l].w;
            }
        }
        if (dx) *dx = std::move(da);
    }

    // Flat, ordered access to every parameter tensor; gradient structures
    // visit in the same order.
    template <typename F>
    void visit_tensors_mut(F&& f) {
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            std::string p = "layer" + std::to_string(l);
            f(p + "/w", layers_[l].w.data(), std::size_t(layers_[l].w.size()));
            f(p + "/b", layers_[l].b.data(), std::size_t(layers_[l].b.size()));
            if (layers_[l].gamma.size()) {
                f(p + "/gamma", layers_[l].gamma.data(), std::size_t(layers_[l].gamma.size()));
                f(p + "/beta", layers_[l].beta.data(), std::size_t(layers_[l].beta.size()));
            }
        }
    }

    template <typename F>
    static void visit_grads(Grads& g, F&& f) {
        for (auto& l : g.layers) {
            f(l.w.data(), std::size_t(l.w.size()));
            f(l.b.data(), std::size_t(l.b.size()));
            if (l.gamma.size()) {
                f(l.gamma.data(), std::size_t(l.gamma.size()));
                f(l.beta.data(), std::size_t(l.beta.size()));
            }
        }
    }

private:
    static constexpr T kLnEps = T(1e-5);

    void apply_activation(Mat& z) const {
        switch (cfg_.activation) {
            case Activation::Identity:
                return;
            case Activation::Relu:
                z = z.cwiseMax(T(0));
                return;
            case Activation::Elu:
                z = z.unaryExpr([](T v) { return v > T(0) ? v : T(std::expm1(double(v))); });
                return;
        }
    }

    Mat activation_backward(const Mat& da, const Mat& act_out) const {
        switch (cfg_.activation) {
            case Activation::Identity:
                return da;
            case Activation::Relu:
                return da.cwiseProduct(act_out.unaryExpr([](T v) { return v > T(0) ? T(1) : T(0); }));
            case Activation::Elu:
                // elu'(x) = 1 for x > 0, exp(x) = elu(x) + 1 otherwise.
                return da.cwiseProduct(act_out.unaryExpr([](T v) { return v > T(0) ? T(1) : v + T(1); }));
        }
        return da;
    }

    void layer_norm_forward(int l, Mat& z, Tape& tape) const {
        const int n = int(z.cols());
        Vec rstd(z.rows());
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            T mean = z.row(r).mean();
            z.row(r).array() -= mean;
            T var = z.row(r).squaredNorm() / T(n);
            T rs = T(1) / std::sqrt(var + kLnEps);
            z.row(r) *= rs;
            rstd(r) = rs;
        }
        tape.ln_xhat[l] = z;
        tape.ln_rstd[l] = rstd;
        z = (z.array().rowwise() * layers_[l].gamma.array()).rowwise() + layers_[l].beta.array();
    }

    Mat layer_norm_backward(int l, const Mat& dh, const Tape& tape, Grads& grads) const {
        const Mat& xhat = tape.ln_xhat[l];
        const Vec& rstd = tape.ln_rstd[l];
        grads.layers[l].beta += dh.colwise().sum();
        grads.layers[l].gamma += dh.cwiseProduct(xhat).colwise().sum();
        Mat dxhat = dh.array().rowwise() * layers_[l].gamma.array();
        const T inv_n = T(1) / T(xhat.cols());
        Mat dz(dh.rows(), dh.cols());
        for (Eigen::Index r = 0; r < dh.rows(); ++r) {
            T m1 = dxhat.row(r).sum() * inv_n;
            T m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).sum() * inv_n;
            dz.row(r) = rstd(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
        }
        return dz;
    }

    MlpConfig cfg_;
    std::vector<Layer> layers_;
};

using Mlp = MlpT<float>;

}  // namespace sdfsim::nn
