#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sdfsim/nn/adam.hpp"
#include "sdfsim/nn/mlp.hpp"
#include "sdfsim/nn/normalizer.hpp"
#include "sdfsim/nn/serialize.hpp"
#include "sdfsim/scene/graph.hpp"

namespace sdfsim::sim {

struct GnnConfig {
    int latent = 128;
    int message_passing_steps = 10;
    int mlp_hidden_layers = 2;  // per update MLP, LayerNorm on hidden layers

    static constexpr int kSurfaceFeat = 11;
    static constexpr int kObjectFeat = 12;
    static constexpr int kIntraFeat = 4;
    static constexpr int kCollFeat = 8;
    static constexpr int kOut = 3;
};

// Encode-process-decode graph network over the typed simulation graph.
//
// Every stored edge acts as two directed messages (surface -> object and
// object -> surface). Edge updates see [edge latent, sender, receiver]; node
// updates see [node latent, summed intra messages, summed collision
// messages]; both carry residual connections. The decoder reads surface-node
// latents only.
class GnnModel {
public:
    GnnModel() = default;

    GnnModel(const GnnConfig& cfg, Rng& rng)
        : cfg_(cfg),
          enc_surface_(mlp_cfg(GnnConfig::kSurfaceFeat, cfg.latent), rng),
          enc_object_(mlp_cfg(GnnConfig::kObjectFeat, cfg.latent), rng),
          enc_intra_(mlp_cfg(GnnConfig::kIntraFeat, cfg.latent), rng),
          enc_coll_(mlp_cfg(GnnConfig::kCollFeat, cfg.latent), rng),
          decoder_(mlp_cfg(cfg.latent, GnnConfig::kOut), rng),
          norm_surface_(GnnConfig::kSurfaceFeat),
          norm_object_(GnnConfig::kObjectFeat),
          norm_intra_(GnnConfig::kIntraFeat),
          norm_coll_(GnnConfig::kCollFeat),
          norm_accel_(GnnConfig::kOut) {
        blocks_.reserve(cfg.message_passing_steps);
        for (int b = 0; b < cfg.message_passing_steps; ++b) {
            blocks_.push_back({nn::Mlp(mlp_cfg(3 * cfg.latent, cfg.latent), rng),
                               nn::Mlp(mlp_cfg(3 * cfg.latent, cfg.latent), rng),
                               nn::Mlp(mlp_cfg(3 * cfg.latent, cfg.latent), rng),
                               nn::Mlp(mlp_cfg(3 * cfg.latent, cfg.latent), rng)});
        }
    }

    struct Block {
        nn::Mlp edge_intra, edge_coll, node_surface, node_object;
    };

    struct BlockGrads {
        nn::Mlp::Grads edge_intra, edge_coll, node_surface, node_object;
    };

    struct Grads {
        nn::Mlp::Grads enc_surface, enc_object, enc_intra, enc_coll, decoder;
        std::vector<BlockGrads> blocks;

        void set_zero() {
            enc_surface.set_zero();
            enc_object.set_zero();
            enc_intra.set_zero();
            enc_coll.set_zero();
            decoder.set_zero();
            for (auto& b : blocks) {
                b.edge_intra.set_zero();
                b.edge_coll.set_zero();
                b.node_surface.set_zero();
                b.node_object.set_zero();
            }
        }
        void add(const Grads& o, float s = 1.0f) {
            enc_surface.add(o.enc_surface, s);
            enc_object.add(o.enc_object, s);
            enc_intra.add(o.enc_intra, s);
            enc_coll.add(o.enc_coll, s);
            decoder.add(o.decoder, s);
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                blocks[b].edge_intra.add(o.blocks[b].edge_intra, s);
                blocks[b].edge_coll.add(o.blocks[b].edge_coll, s);
                blocks[b].node_surface.add(o.blocks[b].node_surface, s);
                blocks[b].node_object.add(o.blocks[b].node_object, s);
            }
        }
    };

    struct BlockTape {
        nn::Mlp::Tape edge_intra, edge_coll, node_surface, node_object;
    };

    struct Tape {
        const scene::SimGraph* graph = nullptr;
        nn::Mlp::Tape enc_surface, enc_object, enc_intra, enc_coll, decoder;
        std::vector<BlockTape> blocks;
        MatF pred_norm;  // decoder output, normalized acceleration per surface node
    };

    const GnnConfig& config() const { return cfg_; }
    nn::Normalizer& norm_surface() { return norm_surface_; }
    nn::Normalizer& norm_object() { return norm_object_; }
    nn::Normalizer& norm_intra() { return norm_intra_; }
    nn::Normalizer& norm_coll() { return norm_coll_; }
    nn::Normalizer& norm_accel() { return norm_accel_; }
    const nn::Normalizer& norm_accel() const { return norm_accel_; }

    void freeze_normalizers() {
        norm_surface_.freeze();
        norm_object_.freeze();
        norm_intra_.freeze();
        norm_coll_.freeze();
        norm_accel_.freeze();
    }

    void update_input_normalizers(const scene::SimGraph& g) {
        norm_surface_.update(g.surface_feat);
        norm_object_.update(g.object_feat);
        norm_intra_.update(g.intra_feat);
        if (g.coll_feat.rows() > 0) norm_coll_.update(g.coll_feat);
    }

    // Normalized per-surface-node acceleration prediction [Ns, 3].
    MatF forward(const scene::SimGraph& g, Tape& tape) const {
        tape.graph = &g;
        const int L = cfg_.latent;
        const int Ns = g.num_surface_nodes();
        const int I = g.num_objects;
        const int Ni = int(g.intra.size());
        const int Nc = int(g.coll.size());

        MatF s = enc_surface_.forward(norm_surface_.apply(g.surface_feat), tape.enc_surface);
        MatF o = enc_object_.forward(norm_object_.apply(g.object_feat), tape.enc_object);
        MatF ei0 = enc_intra_.forward(norm_intra_.apply(g.intra_feat), tape.enc_intra);
        MatF ec0(0, L);
        if (Nc > 0) ec0 = enc_coll_.forward(norm_coll_.apply(g.coll_feat), tape.enc_coll);

        // Both directions of an edge start from the same encoded latent.
        MatF ei(2 * Ni, L), ec(2 * Nc, L);
        ei.topRows(Ni) = ei0;
        ei.bottomRows(Ni) = ei0;
        if (Nc > 0) {
            ec.topRows(Nc) = ec0;
            ec.bottomRows(Nc) = ec0;
        }

        tape.blocks.resize(blocks_.size());
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            auto& bt = tape.blocks[b];
            const Block& blk = blocks_[b];

            // Edge updates (direction A = surface->object rows, B = reverse).
            ei += blk.edge_intra.forward(edge_inputs(g.intra, ei, s, o), bt.edge_intra);
            if (Nc > 0) ec += blk.edge_coll.forward(edge_inputs(coll_pairs(g), ec, s, o), bt.edge_coll);

            // Node updates consume the refreshed edge latents.
            MatF in_s(Ns, 3 * L), in_o(I, 3 * L);
            in_s.leftCols(L) = s;
            in_o.leftCols(L) = o;
            scatter_sums(g, ei, ec, in_s, in_o, L);
            s += blk.node_surface.forward(in_s, bt.node_surface);
            o += blk.node_object.forward(in_o, bt.node_object);

            if (!s.allFinite() || !o.allFinite())
                throw Error("numeric", "non-finite latents after message-passing block " +
                                           std::to_string(b));
        }

        tape.pred_norm = decoder_.forward(s, tape.decoder);
        return tape.pred_norm;
    }

    // Denormalized accelerations, one row per surface node.
    MatF predict(const scene::SimGraph& g) const {
        Tape tape;
        forward(g, tape);
        return norm_accel_.invert(tape.pred_norm);
    }

    Grads make_grads() const {
        Grads gr;
        gr.enc_surface = enc_surface_.make_grads();
        gr.enc_object = enc_object_.make_grads();
        gr.enc_intra = enc_intra_.make_grads();
        gr.enc_coll = enc_coll_.make_grads();
        gr.decoder = decoder_.make_grads();
        gr.blocks.resize(blocks_.size());
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            gr.blocks[b].edge_intra = blocks_[b].edge_intra.make_grads();
            gr.blocks[b].edge_coll = blocks_[b].edge_coll.make_grads();
            gr.blocks[b].node_surface = blocks_[b].node_surface.make_grads();
            gr.blocks[b].node_object = blocks_[b].node_object.make_grads();
        }
        return gr;
    }

    // dpred: gradient w.r.t. the normalized decoder output.
    void backward(const Tape& tape, const MatF& dpred, Grads& grads) const {
        const scene::SimGraph& g = *tape.graph;
        const int L = cfg_.latent;
        const int Ns = g.num_surface_nodes();
        const int I = g.num_objects;
        const int Ni = int(g.intra.size());
        const int Nc = int(g.coll.size());

        MatF ds;
        decoder_.backward(tape.decoder, dpred, grads.decoder, &ds);
        MatF dobj = MatF::Zero(I, L);
        MatF dei = MatF::Zero(2 * Ni, L), dec = MatF::Zero(2 * Nc, L);

        auto coll = coll_pairs(g);
        for (int b = int(blocks_.size()) - 1; b >= 0; --b) {
            const auto& bt = tape.blocks[b];
            const Block& blk = blocks_[b];

            // Node updates backward. The residual passes ds/dobj through; the
            // MLP adds contributions to the entry latents and the edge sums.
            MatF din;
            blk.node_surface.backward(bt.node_surface, ds, grads.blocks[b].node_surface, &din);
            ds += din.leftCols(L);
            for (int e = 0; e < Ni; ++e)
                dei.row(Ni + e) += din.block(g.intra[e].first, L, 1, L);
            for (int e = 0; e < Nc; ++e)
                dec.row(Nc + e) += din.block(g.coll[e].surface, 2 * L, 1, L);

            blk.node_object.backward(bt.node_object, dobj, grads.blocks[b].node_object, &din);
            dobj += din.leftCols(L);
            for (int e = 0; e < Ni; ++e)
                dei.row(e) += din.block(g.intra[e].second, L, 1, L);
            for (int e = 0; e < Nc; ++e)
                dec.row(e) += din.block(g.coll[e].object, 2 * L, 1, L);

            // Edge updates backward.
            blk.edge_intra.backward(bt.edge_intra, dei, grads.blocks[b].edge_intra, &din);
            dei += din.leftCols(L);
            accumulate_edge_inputs(g.intra, din, ds, dobj, L);
            if (Nc > 0) {
                blk.edge_coll.backward(bt.edge_coll, dec, grads.blocks[b].edge_coll, &din);
                dec += din.leftCols(L);
                accumulate_edge_inputs(coll, din, ds, dobj, L);
            }
        }

        // Both directed copies fold back into the single encoded latent.
        MatF dei0 = dei.topRows(Ni) + dei.bottomRows(Ni);
        enc_surface_.backward(tape.enc_surface, ds, grads.enc_surface);
        enc_object_.backward(tape.enc_object, dobj, grads.enc_object);
        enc_intra_.backward(tape.enc_intra, dei0, grads.enc_intra);
        if (Nc > 0) {
            MatF dec0 = dec.topRows(Nc) + dec.bottomRows(Nc);
            enc_coll_.backward(tape.enc_coll, dec0, grads.enc_coll);
        }
    }

    // Fixed parameter order shared by the optimizer and serialization.
    template <typename F>
    void visit_mlps(F&& f) {
        f("enc_surface", enc_surface_);
        f("enc_object", enc_object_);
        f("enc_intra", enc_intra_);
        f("enc_coll", enc_coll_);
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            std::string p = "block" + std::to_string(b);
            f(p + "/edge_intra", blocks_[b].edge_intra);
            f(p + "/edge_coll", blocks_[b].edge_coll);
            f(p + "/node_surface", blocks_[b].node_surface);
            f(p + "/node_object", blocks_[b].node_object);
        }
        f("decoder", decoder_);
    }

    template <typename F>
    static void visit_grads(Grads& g, F&& f) {
        f(g.enc_surface);
        f(g.enc_object);
        f(g.enc_intra);
        f(g.enc_coll);
        for (auto& b : g.blocks) {
            f(b.edge_intra);
            f(b.edge_coll);
            f(b.node_surface);
            f(b.node_object);
        }
        f(g.decoder);
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        visit_mlps([&](const std::string&, nn::Mlp& m) { n += m.parameter_count(); });
        return n;
    }

    void save(const std::filesystem::path& path, const nlohmann::json& extra_meta = {}) {
        nn::TensorBundle b;
        b.meta["kind"] = "gnn_checkpoint";
        b.meta["latent"] = cfg_.latent;
        b.meta["message_passing_steps"] = cfg_.message_passing_steps;
        b.meta["mlp_hidden_layers"] = cfg_.mlp_hidden_layers;
        if (!extra_meta.is_null()) b.meta["train"] = extra_meta;
        visit_mlps([&](const std::string& name, nn::Mlp& m) { nn::bundle_add_mlp(b, name, m); });
        nn::bundle_add_normalizer(b, "norm_surface", norm_surface_);
        nn::bundle_add_normalizer(b, "norm_object", norm_object_);
        nn::bundle_add_normalizer(b, "norm_intra", norm_intra_);
        nn::bundle_add_normalizer(b, "norm_coll", norm_coll_);
        nn::bundle_add_normalizer(b, "norm_accel", norm_accel_);
        b.save(path);
    }

    static GnnModel load(const std::filesystem::path& path) {
        nn::TensorBundle b = nn::TensorBundle::load(path);
        require(b.meta.value("kind", "") == "gnn_checkpoint", "io",
                "'" + path.string() + "' is not a simulator checkpoint");
        GnnConfig cfg;
        cfg.latent = b.meta.at("latent");
        cfg.message_passing_steps = b.meta.at("message_passing_steps");
        cfg.mlp_hidden_layers = b.meta.at("mlp_hidden_layers");
        Rng rng(0);
        GnnModel m(cfg, rng);
        m.visit_mlps([&](const std::string& name, nn::Mlp& mlp) {
            mlp = nn::bundle_read_mlp(b, name, mlp.config());
        });
        m.norm_surface_ = nn::bundle_read_normalizer(b, "norm_surface", GnnConfig::kSurfaceFeat);
        m.norm_object_ = nn::bundle_read_normalizer(b, "norm_object", GnnConfig::kObjectFeat);
        m.norm_intra_ = nn::bundle_read_normalizer(b, "norm_intra", GnnConfig::kIntraFeat);
        m.norm_coll_ = nn::bundle_read_normalizer(b, "norm_coll", GnnConfig::kCollFeat);
        m.norm_accel_ = nn::bundle_read_normalizer(b, "norm_accel", GnnConfig::kOut);
        return m;
    }

private:
    nn::MlpConfig mlp_cfg(int in, int out) const {
        return {in, out, cfg_.latent, cfg_.mlp_hidden_layers, nn::Activation::Relu, true};
    }

    static std::vector<std::pair<int, int>> coll_pairs(const scene::SimGraph& g) {
        std::vector<std::pair<int, int>> pairs(g.coll.size());
        for (std::size_t e = 0; e < g.coll.size(); ++e)
            pairs[e] = {g.coll[e].surface, g.coll[e].object};
        return pairs;
    }

    // Directed concat inputs: rows [0, Ne) are surface->object messages
    // ([edge, surface, object]); rows [Ne, 2Ne) the reverse direction.
    MatF edge_inputs(const std::vector<std::pair<int, int>>& edges, const MatF& e, const MatF& s,
                     const MatF& o) const {
        const int L = cfg_.latent;
        const int Ne = int(edges.size());
        MatF in(2 * Ne, 3 * L);
        for (int k = 0; k < Ne; ++k) {
            in.block(k, 0, 1, L) = e.row(k);
            in.block(k, L, 1, L) = s.row(edges[k].first);
            in.block(k, 2 * L, 1, L) = o.row(edges[k].second);
            in.block(Ne + k, 0, 1, L) = e.row(Ne + k);
            in.block(Ne + k, L, 1, L) = o.row(edges[k].second);
            in.block(Ne + k, 2 * L, 1, L) = s.row(edges[k].first);
        }
        return in;
    }

    void accumulate_edge_inputs(const std::vector<std::pair<int, int>>& edges, const MatF& din,
                                MatF& ds, MatF& dobj, int L) const {
        const int Ne = int(edges.size());
        for (int k = 0; k < Ne; ++k) {
            ds.row(edges[k].first) += din.block(k, L, 1, L);
            dobj.row(edges[k].second) += din.block(k, 2 * L, 1, L);
            dobj.row(edges[k].second) += din.block(Ne + k, L, 1, L);
            ds.row(edges[k].first) += din.block(Ne + k, 2 * L, 1, L);
        }
    }

    // Per-edge-type sums of incoming directed messages, accumulated in double
    // so node outputs do not depend on edge ordering.
    void scatter_sums(const scene::SimGraph& g, const MatF& ei, const MatF& ec, MatF& in_s,
                      MatF& in_o, int L) const {
        const int Ni = int(g.intra.size());
        const int Nc = int(g.coll.size());
        MatD sum_s = MatD::Zero(in_s.rows(), 2 * L);
        MatD sum_o = MatD::Zero(in_o.rows(), 2 * L);
        for (int e = 0; e < Ni; ++e) {
            sum_s.block(g.intra[e].first, 0, 1, L) += ei.row(Ni + e).cast<double>();
            sum_o.block(g.intra[e].second, 0, 1, L) += ei.row(e).cast<double>();
        }
        for (int e = 0; e < Nc; ++e) {
            sum_s.block(g.coll[e].surface, L, 1, L) += ec.row(Nc + e).cast<double>();
            sum_o.block(g.coll[e].object, L, 1, L) += ec.row(e).cast<double>();
        }
        in_s.rightCols(2 * L) = sum_s.cast<float>();
        in_o.rightCols(2 * L) = sum_o.cast<float>();
    }

    GnnConfig cfg_;
    nn::Mlp enc_surface_, enc_object_, enc_intra_, enc_coll_;
    std::vector<Block> blocks_;
    nn::Mlp decoder_;
    nn::Normalizer norm_surface_, norm_object_, norm_intra_, norm_coll_, norm_accel_;
};

}  // namespace sdfsim::sim
