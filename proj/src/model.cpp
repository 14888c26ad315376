#include "masi/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "masi/errors.hpp"
#include "masi/io.hpp"
#include "masi/rng.hpp"

namespace masi::model {

using cluster::ClusterSample;
using cluster::SampleVariant;
using num::Tape;
using num::Tensor;

ModelConfig ModelConfig::defaults_for(SampleVariant variant) {
    ModelConfig c;
    c.variant = variant;
    if (variant == SampleVariant::Fts) {
        c.t_history = 5;
        c.batch = 5;
        c.epochs = 80;
    } else {
        c.t_history = 10;
        c.batch = 10;
        c.epochs = 120;
    }
    c.hidden = 256;
    c.lr = 1e-3;
    return c;
}

ModelConfig ModelConfig::for_dataset(const data::DatasetSplits& dataset) {
    ModelConfig c = defaults_for(dataset.meta.variant);
    c.n_star = dataset.meta.n_star;
    c.t_history = dataset.meta.config.t_history;
    c.t_future = dataset.meta.config.t_future;
    if (dataset.meta.variant != SampleVariant::Fts) {
        c.dict_size = static_cast<std::uint32_t>(
            dataset.dictionary(cluster::qtc_variant_of(dataset.meta.variant)).size());
    }
    return c;
}

void ModelConfig::validate() const {
    if (n_star == 0) throw UsageError("model needs n_star > 0");
    if (variant != SampleVariant::Fts && dict_size < 2) {
        throw UsageError("symbolic model needs a dictionary size");
    }
    if (t_history < 1 || t_future < 1) throw UsageError("model horizons must be positive");
    if (hidden < 1 || embed_dim < 1) throw UsageError("model dimensions must be positive");
    if (batch < 1 || epochs < 1) throw UsageError("batch and epochs must be positive");
    if (!(lr > 0)) throw UsageError("learning rate must be positive");
    if (clip_norm < 0) throw UsageError("clip_norm must be non-negative");
}

void ModelConfig::check_dataset(const data::DatasetMeta& meta, std::uint64_t digest_c1,
                                std::uint64_t digest_c2) const {
    if (meta.variant != variant) {
        throw CompatibilityError("checkpoint variant " + cluster::variant_name(variant) +
                                 " does not match dataset variant " +
                                 cluster::variant_name(meta.variant));
    }
    if (meta.n_star != n_star) {
        throw CompatibilityError("checkpoint n*=" + std::to_string(n_star) +
                                 " does not match dataset n*=" + std::to_string(meta.n_star));
    }
    if (meta.config.t_history != t_history || meta.config.t_future != t_future) {
        throw CompatibilityError("checkpoint horizons do not match the dataset");
    }
    if (meta.dict_digest_c1 != digest_c1 || meta.dict_digest_c2 != digest_c2) {
        throw CompatibilityError("checkpoint dictionary digest does not match the dataset");
    }
}

namespace {

/// Parameter ids resolved once per model.
struct ParamIds {
    std::size_t embed = SIZE_MAX;  // [dict_size, E] (symbolic)
    std::size_t proj_W = SIZE_MAX; // [E, 2], proj_b [E] (metric)
    std::size_t proj_b = SIZE_MAX;
    std::size_t slot_embed = 0; // [S, E]
    std::size_t enc_W = 0, enc_b = 0;
    std::size_t iattn_W = 0, iattn_U = 0, iattn_b = 0, iattn_v = 0;
    std::size_t dec_W = 0, dec_b = 0;
    std::size_t tattn_W = 0, tattn_U = 0, tattn_b = 0, tattn_v = 0;
    std::size_t head_W = 0, head_U = 0, head_b = 0;
    std::vector<std::size_t> out_W, out_b; // per slot
};

ParamIds build_params(num::ParamStore& store, const ModelConfig& cfg) {
    Rng rng(cfg.seed);
    auto uniform_init = [&rng](std::vector<std::size_t> shape) {
        Tensor t = Tensor::zeros(std::move(shape));
        const std::size_t fan_in = t.shape.size() >= 2 ? t.shape[1] : t.shape[0];
        const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, fan_in)));
        for (auto& v : t.data) v = rng.uniform(-bound, bound);
        return t;
    };

    const auto S = cfg.slot_count();
    const auto E = static_cast<std::size_t>(cfg.embed_dim);
    const auto H = static_cast<std::size_t>(cfg.hidden);
    const auto A = static_cast<std::size_t>(cfg.attn_dim());
    const auto P = static_cast<std::size_t>(cfg.head_dim());
    const auto O = static_cast<std::size_t>(cfg.out_dim());

    ParamIds ids;
    if (cfg.variant == SampleVariant::Fts) {
        ids.proj_W = store.add("embed.proj.W", uniform_init({E, 2}));
        ids.proj_b = store.add("embed.proj.b", uniform_init({E}));
    } else {
        ids.embed = store.add("embed.table", uniform_init({cfg.dict_size, E}));
    }
    ids.slot_embed = store.add("slot.embed", uniform_init({S, E}));
    ids.enc_W = store.add("enc.W", uniform_init({4 * H, E + H}));
    ids.enc_b = store.add("enc.b", Tensor::zeros({4 * H}));
    ids.iattn_W = store.add("iattn.W", uniform_init({A, 2 * H}));
    ids.iattn_U = store.add("iattn.U", uniform_init({A, E}));
    ids.iattn_b = store.add("iattn.b", Tensor::zeros({A}));
    ids.iattn_v = store.add("iattn.v", uniform_init({A}));
    ids.dec_W = store.add("dec.W", uniform_init({4 * H, (E + H) + H}));
    ids.dec_b = store.add("dec.b", Tensor::zeros({4 * H}));
    ids.tattn_W = store.add("tattn.W", uniform_init({A, H}));
    ids.tattn_U = store.add("tattn.U", uniform_init({A, H}));
    ids.tattn_b = store.add("tattn.b", Tensor::zeros({A}));
    ids.tattn_v = store.add("tattn.v", uniform_init({A}));
    ids.head_W = store.add("head.W", uniform_init({P, 2 * H}));
    ids.head_U = store.add("head.U", uniform_init({P, E}));
    ids.head_b = store.add("head.b", Tensor::zeros({P}));
    for (std::uint32_t k = 0; k < S; ++k) {
        ids.out_W.push_back(store.add("head.out." + std::to_string(k) + ".W", uniform_init({O, P})));
        ids.out_b.push_back(store.add("head.out." + std::to_string(k) + ".b", Tensor::zeros({O})));
    }
    return ids;
}

/// Per-tape graph builder: parameter nodes are created once and shared by
/// every sample in the batch; embedding rows are cached per class index.
class GraphBuilder {
public:
    GraphBuilder(Tape& tape, const ModelConfig& cfg, const ParamIds& ids)
        : tape_(tape), cfg_(cfg) {
        const auto S = cfg.slot_count();
        if (cfg.variant == SampleVariant::Fts) {
            proj_W_ = tape_.param(ids.proj_W);
            proj_b_ = tape_.param(ids.proj_b);
        } else {
            embed_table_ = ids.embed;
        }
        for (std::uint32_t k = 0; k < S; ++k) {
            slot_emb_.push_back(tape_.param_row(ids.slot_embed, k));
        }
        enc_W_ = tape_.param(ids.enc_W);
        enc_b_ = tape_.param(ids.enc_b);
        iattn_W_ = tape_.param(ids.iattn_W);
        iattn_U_ = tape_.param(ids.iattn_U);
        iattn_b_ = tape_.param(ids.iattn_b);
        iattn_v_ = tape_.param(ids.iattn_v);
        dec_W_ = tape_.param(ids.dec_W);
        dec_b_ = tape_.param(ids.dec_b);
        tattn_W_ = tape_.param(ids.tattn_W);
        tattn_U_ = tape_.param(ids.tattn_U);
        tattn_b_ = tape_.param(ids.tattn_b);
        tattn_v_ = tape_.param(ids.tattn_v);
        head_W_ = tape_.param(ids.head_W);
        head_U_ = tape_.param(ids.head_U);
        head_b_ = tape_.param(ids.head_b);
        for (std::uint32_t k = 0; k < S; ++k) {
            out_W_.push_back(tape_.param(ids.out_W[k]));
            out_b_.push_back(tape_.param(ids.out_b[k]));
            head_slot_.push_back(tape_.matvec(head_U_, slot_emb_[k]));
        }
    }

    struct SampleGraph {
        Tape::Id loss = 0;
        bool has_loss = false;
        ForwardResult result;
    };

    /// teacher_forcing drives the decoder with ground-truth previous labels;
    /// otherwise it consumes its own previous predictions.
    SampleGraph run(const ClusterSample& sample, bool teacher_forcing, bool with_loss) {
        const auto S = cfg_.slot_count();
        if (sample.slot_count != S) {
            throw UsageError("sample slot count " + std::to_string(sample.slot_count) +
                             " does not match the model (" + std::to_string(S) + ")");
        }
        const int T_h = cfg_.t_history;
        const int T_f = cfg_.t_future;
        const bool symbolic = cfg_.variant != SampleVariant::Fts;

        SampleGraph out;
        out.result.input_attention.reserve(static_cast<std::size_t>(T_h) * S);
        out.result.temporal_attention.reserve(static_cast<std::size_t>(T_f) * T_h);

        // --- input embeddings ---------------------------------------------
        std::vector<Tape::Id> content(static_cast<std::size_t>(S) * T_h);
        for (std::uint32_t k = 0; k < S; ++k) {
            for (int t = 0; t < T_h; ++t) {
                content[k * T_h + t] =
                    symbolic ? embed_row(sample.hist_idx[k * T_h + t])
                             : project_xy(&sample.hist_xy[(k * T_h + t) * 2]);
            }
        }
        std::vector<Tape::Id> drive(content.size());
        for (std::uint32_t k = 0; k < S; ++k) {
            for (int t = 0; t < T_h; ++t) {
                drive[k * T_h + t] = tape_.add(content[k * T_h + t], slot_emb_[k]);
            }
        }
        // slot history summaries: content only, so identical series tie
        std::vector<Tape::Id> summary(S);
        for (std::uint32_t k = 0; k < S; ++k) {
            summary[k] = tape_.mean_vectors(
                std::span<const Tape::Id>(content.data() + k * T_h, static_cast<std::size_t>(T_h)));
        }
        std::vector<Tape::Id> attn_pre(S);
        for (std::uint32_t k = 0; k < S; ++k) attn_pre[k] = tape_.matvec(iattn_U_, summary[k]);

        // --- encoder with input attention ----------------------------------
        const auto H = static_cast<std::size_t>(cfg_.hidden);
        Tape::Id h = tape_.zeros(H);
        Tape::Id c = tape_.zeros(H);
        std::vector<Tape::Id> enc_states;
        std::vector<Tape::Id> scores(S), step_drive(S);
        for (int t = 0; t < T_h; ++t) {
            const auto state = tape_.concat2(h, c);
            const auto ws = tape_.matvec(iattn_W_, state);
            for (std::uint32_t k = 0; k < S; ++k) {
                scores[k] = tape_.dot(iattn_v_, tape_.tanh_op(tape_.add3(ws, attn_pre[k], iattn_b_)));
                step_drive[k] = drive[k * T_h + t];
            }
            const auto alpha = tape_.softmax(tape_.stack_scalars(scores));
            for (double a : tape_.value(alpha)) out.result.input_attention.push_back(a);
            const auto x = tape_.weighted_sum(alpha, step_drive);
            const auto next = num::lstm_cell(tape_, x, h, c, enc_W_, enc_b_);
            h = next.h;
            c = next.c;
            enc_states.push_back(h);
        }

        // --- decoder with temporal attention --------------------------------
        std::vector<Tape::Id> tattn_pre(enc_states.size());
        for (std::size_t i = 0; i < enc_states.size(); ++i) {
            tattn_pre[i] = tape_.matvec(tattn_U_, enc_states[i]);
        }
        std::vector<Tape::Id> prev(S);
        for (std::uint32_t k = 0; k < S; ++k) {
            prev[k] = symbolic ? embed_row(sample.hist_idx[k * T_h + (T_h - 1)])
                               : project_xy(&sample.hist_xy[(k * T_h + (T_h - 1)) * 2]);
        }

        Tape::Id d = tape_.zeros(H);
        Tape::Id dc = tape_.zeros(H);
        std::vector<Tape::Id> tscores(enc_states.size());
        std::vector<Tape::Id> losses;
        std::size_t metric_valid = 0;
        const auto O = cfg_.out_dim();
        out.result.outputs.assign(static_cast<std::size_t>(S) * T_f * O, 0.0);
        if (symbolic) out.result.argmax.assign(static_cast<std::size_t>(S) * T_f, 0);

        std::vector<Tape::Id> prev_emb(S);
        for (int t = 0; t < T_f; ++t) {
            const auto wd = tape_.matvec(tattn_W_, d);
            for (std::size_t i = 0; i < enc_states.size(); ++i) {
                tscores[i] =
                    tape_.dot(tattn_v_, tape_.tanh_op(tape_.add3(wd, tattn_pre[i], tattn_b_)));
            }
            const auto beta = tape_.softmax(tape_.stack_scalars(tscores));
            for (double b : tape_.value(beta)) out.result.temporal_attention.push_back(b);
            const auto ctx = tape_.weighted_sum(beta, enc_states);

            for (std::uint32_t k = 0; k < S; ++k) prev_emb[k] = tape_.add(prev[k], slot_emb_[k]);
            const auto u = tape_.mean_vectors(prev_emb);
            const auto x = tape_.concat2(u, ctx);
            const auto next = num::lstm_cell(tape_, x, d, dc, dec_W_, dec_b_);
            d = next.h;
            dc = next.c;

            const auto base = tape_.matvec(head_W_, tape_.concat2(d, ctx));
            for (std::uint32_t k = 0; k < S; ++k) {
                const auto feat = tape_.tanh_op(tape_.add3(base, head_slot_[k], head_b_));
                const auto logits = tape_.affine(out_W_[k], feat, out_b_[k]);

                if (symbolic) {
                    const auto prob = num::softmax_values(tape_.value(logits));
                    std::copy(prob.begin(), prob.end(),
                              out.result.outputs.begin() + (k * T_f + t) * O);
                    const auto lv = tape_.value(logits);
                    std::uint32_t best = 0;
                    for (std::uint32_t j = 1; j < O; ++j) {
                        if (lv[j] > lv[best]) best = j;
                    }
                    out.result.argmax[k * T_f + t] = best;
                    const std::uint32_t label = sample.label_idx[k * T_f + t];
                    if (with_loss) losses.push_back(tape_.cross_entropy_logits(logits, label));
                    prev[k] = embed_row(teacher_forcing ? label : best);
                } else {
                    const auto coords = tape_.value(logits);
                    out.result.outputs[(k * T_f + t) * 2] = coords[0];
                    out.result.outputs[(k * T_f + t) * 2 + 1] = coords[1];
                    const double* target = &sample.label_xy[(k * T_f + t) * 2];
                    if (with_loss && sample.label_mask[k * T_f + t]) {
                        losses.push_back(tape_.squared_error(logits, std::span(target, 2)));
                        ++metric_valid;
                    }
                    if (teacher_forcing) {
                        prev[k] = project_xy(target);
                    } else {
                        prev[k] = tape_.affine(proj_W_, logits, proj_b_);
                    }
                }
            }
        }

        if (with_loss) {
            if (symbolic) {
                out.loss = tape_.mean_scalars(losses);
            } else if (metric_valid == 0) {
                out.loss = tape_.constant_scalar(0.0);
            } else {
                Tape::Id total = tape_.mean_scalars(losses); // mean of per-point squared errors
                out.loss = tape_.sqrt_op(tape_.scale(total, 0.5)); // per-coordinate mean
            }
            out.has_loss = true;
        }
        return out;
    }

private:
    Tape::Id embed_row(std::uint32_t index) {
        if (index >= cfg_.dict_size) throw UsageError("class index exceeds the dictionary");
        auto it = embed_cache_.find(index);
        if (it != embed_cache_.end()) return it->second;
        const auto id = tape_.param_row(embed_table_, index);
        embed_cache_.emplace(index, id);
        return id;
    }

    Tape::Id project_xy(const double* xy) {
        const auto c = tape_.constant(std::span<const double>(xy, 2));
        return tape_.affine(proj_W_, c, proj_b_);
    }

    Tape& tape_;
    const ModelConfig& cfg_;
    std::size_t embed_table_ = 0;
    std::unordered_map<std::uint32_t, Tape::Id> embed_cache_;
    Tape::Id proj_W_ = 0, proj_b_ = 0;
    std::vector<Tape::Id> slot_emb_, head_slot_, out_W_, out_b_;
    Tape::Id enc_W_ = 0, enc_b_ = 0, iattn_W_ = 0, iattn_U_ = 0, iattn_b_ = 0, iattn_v_ = 0;
    Tape::Id dec_W_ = 0, dec_b_ = 0, tattn_W_ = 0, tattn_U_ = 0, tattn_b_ = 0, tattn_v_ = 0;
    Tape::Id head_W_ = 0, head_U_ = 0, head_b_ = 0;
};

ParamIds resolve_ids(const num::ParamStore& store, const ModelConfig& cfg) {
    // Blocks were added in a fixed order; rebuild the id map by name.
    ParamIds ids;
    auto find = [&store](const std::string& name) {
        for (std::size_t i = 0; i < store.count(); ++i) {
            if (store.block(i).name == name) return i;
        }
        throw UsageError("missing parameter block: " + name);
    };
    if (cfg.variant == SampleVariant::Fts) {
        ids.proj_W = find("embed.proj.W");
        ids.proj_b = find("embed.proj.b");
    } else {
        ids.embed = find("embed.table");
    }
    ids.slot_embed = find("slot.embed");
    ids.enc_W = find("enc.W");
    ids.enc_b = find("enc.b");
    ids.iattn_W = find("iattn.W");
    ids.iattn_U = find("iattn.U");
    ids.iattn_b = find("iattn.b");
    ids.iattn_v = find("iattn.v");
    ids.dec_W = find("dec.W");
    ids.dec_b = find("dec.b");
    ids.tattn_W = find("tattn.W");
    ids.tattn_U = find("tattn.U");
    ids.tattn_b = find("tattn.b");
    ids.tattn_v = find("tattn.v");
    ids.head_W = find("head.W");
    ids.head_U = find("head.U");
    ids.head_b = find("head.b");
    for (std::uint32_t k = 0; k < cfg.slot_count(); ++k) {
        ids.out_W.push_back(find("head.out." + std::to_string(k) + ".W"));
        ids.out_b.push_back(find("head.out." + std::to_string(k) + ".b"));
    }
    return ids;
}

} // namespace

Model::Model(const ModelConfig& config) : config_(config), tape_(&store_) {
    config_.validate();
    build_params(store_, config_);
}

ForwardResult Model::forward(const ClusterSample& sample, bool teacher_forcing) {
    tape_.reset();
    GraphBuilder builder(tape_, config_, resolve_ids(store_, config_));
    return builder.run(sample, teacher_forcing, /*with_loss=*/false).result;
}

double Model::batch_loss(std::span<const ClusterSample* const> batch, bool with_grad) {
    if (batch.empty()) throw UsageError("empty batch");
    tape_.reset();
    GraphBuilder builder(tape_, config_, resolve_ids(store_, config_));
    std::vector<Tape::Id> losses;
    for (const auto* sample : batch) {
        losses.push_back(builder.run(*sample, /*teacher_forcing=*/true, /*with_loss=*/true).loss);
    }
    const auto loss = tape_.mean_scalars(losses);
    const double value = tape_.scalar(loss);
    if (with_grad) tape_.backward(loss);
    return value;
}

Prediction Model::predict(const ClusterSample& sample) {
    const auto fr = forward(sample, /*teacher_forcing=*/false);
    Prediction p;
    if (config_.variant != SampleVariant::Fts) {
        p.indices = fr.argmax;
    } else {
        p.coords = fr.outputs;
        for (std::size_t i = 0; i < p.coords.size(); i += 2) {
            p.coords[i] += sample.origin_x;
            p.coords[i + 1] += sample.origin_y;
        }
    }
    return p;
}

double loss_value(const ForwardResult& fr, const ClusterSample& sample, const ModelConfig& config) {
    const auto S = config.slot_count();
    const int T_f = config.t_future;
    if (config.variant != SampleVariant::Fts) {
        const auto O = config.out_dim();
        double total = 0;
        for (std::uint32_t k = 0; k < S; ++k) {
            for (int t = 0; t < T_f; ++t) {
                const double p = fr.outputs[(k * T_f + t) * O + sample.label_idx[k * T_f + t]];
                total += -std::log(std::max(p, 1e-300));
            }
        }
        return total / (static_cast<double>(S) * T_f);
    }
    double sq = 0;
    std::size_t valid = 0;
    for (std::uint32_t k = 0; k < S; ++k) {
        for (int t = 0; t < T_f; ++t) {
            if (!sample.label_mask[k * T_f + t]) continue;
            const double dx = fr.outputs[(k * T_f + t) * 2] - sample.label_xy[(k * T_f + t) * 2];
            const double dy =
                fr.outputs[(k * T_f + t) * 2 + 1] - sample.label_xy[(k * T_f + t) * 2 + 1];
            sq += dx * dx + dy * dy;
            ++valid;
        }
    }
    if (valid == 0) return 0.0;
    return std::sqrt(sq / (2.0 * static_cast<double>(valid)));
}

void TrainingHistory::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "epoch,train_loss,val_loss\n";
    out.precision(17);
    for (const auto& e : epochs) {
        out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << "\n";
    }
}

FitResult fit(const data::DatasetSplits& dataset, const ModelConfig& config) {
    config.validate();
    if (dataset.train.empty()) throw UsageError("empty training split");
    if (dataset.meta.variant != config.variant) {
        throw CompatibilityError("config variant does not match the dataset");
    }

    FitResult result{Model(config), {}};
    Model& model = result.model;
    auto adam = num::AdamState::for_store(model.params());
    Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<const ClusterSample*> order;
    for (const auto& s : dataset.train) order.push_back(&s);
    std::vector<const ClusterSample*> val;
    for (const auto& s : dataset.validation) val.push_back(&s);

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_params = model.params().snapshot_values();
    const std::size_t B = static_cast<std::size_t>(config.batch);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double train_sum = 0;
        for (std::size_t off = 0; off < order.size(); off += B) {
            const std::size_t n = std::min(B, order.size() - off);
            const double loss =
                model.batch_loss(std::span<const ClusterSample* const>(order.data() + off, n),
                                 /*with_grad=*/true);
            num::adam_step(model.params(), adam, config.lr, config.clip_norm);
            train_sum += loss * static_cast<double>(n);
        }
        const double train_loss = train_sum / static_cast<double>(order.size());

        double val_loss = 0;
        if (!val.empty()) {
            double sum = 0;
            for (std::size_t off = 0; off < val.size(); off += B) {
                const std::size_t n = std::min(B, val.size() - off);
                sum += model.batch_loss(std::span<const ClusterSample* const>(val.data() + off, n),
                                        /*with_grad=*/false) *
                       static_cast<double>(n);
            }
            val_loss = sum / static_cast<double>(val.size());
        }

        result.history.epochs.push_back({epoch, train_loss, val_loss});
        if (val.empty() || val_loss < best_val) {
            best_val = val_loss;
            best_params = model.params().snapshot_values();
            result.history.best_epoch = epoch;
        }
    }
    model.params().restore_values(best_params);
    return result;
}

void save_checkpoint(const Model& model, const data::DatasetMeta& bound_meta,
                     const std::string& path) {
    const auto& cfg = model.config();
    io::Writer meta;
    meta.u8(static_cast<std::uint8_t>(cfg.variant));
    meta.u32(cfg.n_star);
    meta.u32(cfg.dict_size);
    meta.u32(static_cast<std::uint32_t>(cfg.t_history));
    meta.u32(static_cast<std::uint32_t>(cfg.t_future));
    meta.u32(static_cast<std::uint32_t>(cfg.hidden));
    meta.u32(static_cast<std::uint32_t>(cfg.embed_dim));
    meta.u32(static_cast<std::uint32_t>(cfg.batch));
    meta.f64(cfg.lr);
    meta.u32(static_cast<std::uint32_t>(cfg.epochs));
    meta.u64(cfg.seed);
    meta.f64(cfg.clip_norm);
    meta.u64(bound_meta.dict_digest_c1);
    meta.u64(bound_meta.dict_digest_c2);

    io::Writer params;
    const auto& store = model.params();
    params.u32(static_cast<std::uint32_t>(store.count()));
    for (std::size_t i = 0; i < store.count(); ++i) {
        const auto& b = store.block(i);
        params.str(b.name);
        params.u32(static_cast<std::uint32_t>(b.value.shape.size()));
        for (auto d : b.value.shape) params.u64(d);
        for (double v : b.value.data) params.f64(v);
    }

    io::Sections sections;
    sections.emplace_back("config", meta.take());
    sections.emplace_back("params", params.take());
    io::write_sections(path, io::FileKind::Checkpoint, sections);
}

Model load_checkpoint(const std::string& path, const data::DatasetSplits& dataset) {
    auto sections = io::read_sections(path, io::FileKind::Checkpoint);
    auto it = sections.find("config");
    if (it == sections.end()) throw CorruptionError(path + ": missing config section");
    io::Reader meta(it->second);
    ModelConfig cfg;
    cfg.variant = static_cast<SampleVariant>(meta.u8());
    cfg.n_star = meta.u32();
    cfg.dict_size = meta.u32();
    cfg.t_history = static_cast<int>(meta.u32());
    cfg.t_future = static_cast<int>(meta.u32());
    cfg.hidden = static_cast<int>(meta.u32());
    cfg.embed_dim = static_cast<int>(meta.u32());
    cfg.batch = static_cast<int>(meta.u32());
    cfg.lr = meta.f64();
    cfg.epochs = static_cast<int>(meta.u32());
    cfg.seed = meta.u64();
    cfg.clip_norm = meta.f64();
    const std::uint64_t digest_c1 = meta.u64();
    const std::uint64_t digest_c2 = meta.u64();

    cfg.check_dataset(dataset.meta, digest_c1, digest_c2);

    Model model(cfg);
    auto pit = sections.find("params");
    if (pit == sections.end()) throw CorruptionError(path + ": missing params section");
    io::Reader params(pit->second);
    const std::uint32_t count = params.u32();
    if (count != model.params().count()) {
        throw CompatibilityError(path + ": parameter block count mismatch");
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = params.str();
        auto& block = model.params().by_name(name);
        const std::uint32_t rank = params.u32();
        std::vector<std::size_t> shape;
        for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(params.u64());
        if (shape != block.value.shape) {
            throw CompatibilityError(path + ": shape mismatch for " + name);
        }
        for (auto& v : block.value.data) v = params.f64();
        if (!block.value.finite()) throw CorruptionError(path + ": non-finite parameters");
    }
    return model;
}

} // namespace masi::model
