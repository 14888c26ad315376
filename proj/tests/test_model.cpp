#include <doctest.h>

#include <cmath>

#include "masi/errors.hpp"
#include "masi/model.hpp"
#include "masi/rng.hpp"

using namespace masi;
using namespace masi::model;
using cluster::ClusterSample;
using cluster::SampleVariant;

namespace {

ClusterSample symbolic_sample(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    ClusterSample s;
    s.center_id = "c";
    s.slot_count = cfg.slot_count();
    s.n_real = cfg.n_star;
    const auto H = static_cast<std::size_t>(cfg.t_history);
    const auto F = static_cast<std::size_t>(cfg.t_future);
    s.hist_idx.resize(s.slot_count * H);
    s.label_idx.resize(s.slot_count * F);
    s.hist_mask.assign(s.slot_count * H, 1);
    s.label_mask.assign(s.slot_count * F, 1);
    for (auto& v : s.hist_idx) v = static_cast<std::uint32_t>(rng.next_below(cfg.dict_size));
    for (auto& v : s.label_idx) v = static_cast<std::uint32_t>(rng.next_below(cfg.dict_size));
    return s;
}

ClusterSample metric_sample(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    ClusterSample s;
    s.center_id = "c";
    s.slot_count = cfg.slot_count();
    s.n_real = cfg.n_star;
    const auto H = static_cast<std::size_t>(cfg.t_history);
    const auto F = static_cast<std::size_t>(cfg.t_future);
    s.hist_xy.resize(s.slot_count * H * 2);
    s.label_xy.resize(s.slot_count * F * 2);
    s.hist_mask.assign(s.slot_count * H, 1);
    s.label_mask.assign(s.slot_count * F, 1);
    for (auto& v : s.hist_xy) v = rng.uniform(-1.0, 1.0);
    for (auto& v : s.label_xy) v = rng.uniform(-1.0, 1.0);
    for (auto& v : s.label_mask) v = rng.bernoulli(0.8) ? 1 : 0;
    s.origin_x = 3.0;
    s.origin_y = -2.0;
    return s;
}

ModelConfig tiny_config(SampleVariant variant) {
    ModelConfig cfg = ModelConfig::defaults_for(variant);
    cfg.variant = variant;
    cfg.n_star = 3;
    cfg.dict_size = variant == SampleVariant::Fts ? 0 : 11;
    cfg.t_history = 4;
    cfg.t_future = 3;
    cfg.hidden = 8;
    cfg.embed_dim = 6;
    cfg.batch = 2;
    cfg.epochs = 3;
    cfg.seed = 42;
    return cfg;
}

} // namespace

TEST_CASE("model config defaults follow the training recipe") {
    const auto sym = ModelConfig::defaults_for(SampleVariant::FQtc6);
    CHECK(sym.t_history == 10);
    CHECK(sym.batch == 10);
    CHECK(sym.epochs == 120);
    CHECK(sym.hidden == 256);
    CHECK(sym.lr == 1e-3);
    const auto ts = ModelConfig::defaults_for(SampleVariant::Fts);
    CHECK(ts.t_history == 5);
    CHECK(ts.batch == 5);
    CHECK(ts.epochs == 80);
    CHECK(ts.hidden == 256);
    CHECK(ts.lr == 1e-3);
    CHECK(ts.t_future == 48);
}

TEST_CASE("forward emits simplex attention and the contracted shapes") {
    const auto cfg = tiny_config(SampleVariant::FQtc4);
    Model model(cfg);
    const auto s = symbolic_sample(cfg, 1);
    const auto fr = model.forward(s, true);

    CHECK(fr.outputs.size() == cfg.slot_count() * cfg.t_future * cfg.dict_size);
    CHECK(fr.input_attention.size() == static_cast<std::size_t>(cfg.t_history) * cfg.slot_count());
    CHECK(fr.temporal_attention.size() ==
          static_cast<std::size_t>(cfg.t_future) * cfg.t_history);

    for (int t = 0; t < cfg.t_history; ++t) {
        double sum = 0;
        for (std::uint32_t k = 0; k < cfg.slot_count(); ++k) {
            const double a = fr.input_attention[t * cfg.slot_count() + k];
            CHECK(a >= 0);
            sum += a;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    for (int t = 0; t < cfg.t_future; ++t) {
        double sum = 0;
        for (int i = 0; i < cfg.t_history; ++i) sum += fr.temporal_attention[t * cfg.t_history + i];
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    // per-step class probabilities are a simplex
    for (std::size_t row = 0; row < cfg.slot_count() * static_cast<std::size_t>(cfg.t_future);
         ++row) {
        double sum = 0;
        for (std::uint32_t j = 0; j < cfg.dict_size; ++j) {
            sum += fr.outputs[row * cfg.dict_size + j];
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("identical slot contents draw uniform input attention") {
    auto cfg = tiny_config(SampleVariant::FQtc4);
    Model model(cfg);
    auto s = symbolic_sample(cfg, 2);
    for (std::uint32_t k = 1; k < cfg.slot_count(); ++k) {
        for (int t = 0; t < cfg.t_history; ++t) {
            s.hist_idx[k * cfg.t_history + t] = s.hist_idx[t];
        }
    }
    const auto fr = model.forward(s, true);
    for (int t = 0; t < cfg.t_history; ++t) {
        for (std::uint32_t k = 0; k < cfg.slot_count(); ++k) {
            CHECK(std::abs(fr.input_attention[t * cfg.slot_count() + k] -
                           1.0 / cfg.slot_count()) < 1e-12);
        }
    }
}

TEST_CASE("t_history of one makes the context the single encoder state") {
    auto cfg = tiny_config(SampleVariant::FQtc4);
    cfg.t_history = 1;
    Model model(cfg);
    const auto s = symbolic_sample(cfg, 3);
    const auto fr = model.forward(s, true);
    for (int t = 0; t < cfg.t_future; ++t) {
        CHECK(fr.temporal_attention[t] == doctest::Approx(1.0));
    }
}

TEST_CASE("forward is bit-identical across runs") {
    const auto cfg = tiny_config(SampleVariant::FQtc6);
    Model a(cfg), b(cfg);
    const auto s = symbolic_sample(cfg, 4);
    const auto fa = a.forward(s, false);
    const auto fb = b.forward(s, false);
    CHECK(fa.outputs == fb.outputs);
    CHECK(fa.argmax == fb.argmax);
    CHECK(fa.input_attention == fb.input_attention);
}

TEST_CASE("metric forward has coordinate shape and finite outputs") {
    const auto cfg = tiny_config(SampleVariant::Fts);
    Model model(cfg);
    const auto s = metric_sample(cfg, 5);
    const auto fr = model.forward(s, false);
    CHECK(fr.outputs.size() == cfg.slot_count() * cfg.t_future * 2u);
    for (double v : fr.outputs) CHECK(std::isfinite(v));

    const auto pred = model.predict(s);
    CHECK(pred.coords.size() == fr.outputs.size());
    CHECK(pred.coords[0] == doctest::Approx(fr.outputs[0] + 3.0));
    CHECK(pred.coords[1] == doctest::Approx(fr.outputs[1] - 2.0));
}

TEST_CASE("variant mismatch between sample and model is rejected") {
    const auto cfg = tiny_config(SampleVariant::FQtc4);
    Model model(cfg);
    auto s = symbolic_sample(cfg, 6);
    s.slot_count += 1;
    CHECK_THROWS_AS(model.forward(s, true), UsageError);
}

TEST_CASE("loss matches a hand-computed tiny batch") {
    ModelConfig cfg = tiny_config(SampleVariant::FQtc4);
    cfg.n_star = 2;
    cfg.t_future = 2;
    cfg.dict_size = 3;
    cfg.t_history = 2;

    ClusterSample s;
    s.slot_count = 2;
    s.n_real = 2;
    s.hist_idx = {0, 1, 2, 0};
    s.label_idx = {1, 2, 0, 1};
    s.hist_mask.assign(4, 1);
    s.label_mask.assign(4, 1);

    ForwardResult fr;
    // rows: slot 0 step 0, slot 0 step 1, slot 1 step 0, slot 1 step 1
    fr.outputs = {0.2, 0.5, 0.3, /**/ 0.1, 0.1, 0.8, /**/ 0.7, 0.2, 0.1, /**/ 0.25, 0.5, 0.25};
    const double expect =
        -(std::log(0.5) + std::log(0.8) + std::log(0.7) + std::log(0.5)) / 4.0;
    CHECK(loss_value(fr, s, cfg) == doctest::Approx(expect).epsilon(1e-12));

    // perfect one-hot predictions drive the loss to zero
    ForwardResult perfect;
    perfect.outputs.assign(4 * 3, 0.0);
    const std::uint32_t labels[4] = {1, 2, 0, 1};
    for (int row = 0; row < 4; ++row) perfect.outputs[row * 3 + labels[row]] = 1.0;
    CHECK(loss_value(perfect, s, cfg) < 1e-6);
}

TEST_CASE("metric loss is zero for exact predictions and masks invalid steps") {
    auto cfg = tiny_config(SampleVariant::Fts);
    const auto s = metric_sample(cfg, 7);
    ForwardResult fr;
    fr.outputs = s.label_xy;
    CHECK(loss_value(fr, s, cfg) == 0.0);

    // perturbing only masked-out steps keeps the loss at zero
    ForwardResult fr2 = fr;
    bool touched = false;
    for (std::size_t i = 0; i < s.label_mask.size(); ++i) {
        if (!s.label_mask[i]) {
            fr2.outputs[i * 2] += 100.0;
            touched = true;
        }
    }
    REQUIRE(touched);
    CHECK(loss_value(fr2, s, cfg) == 0.0);
}

TEST_CASE("teacher-forced batch loss is invariant to sample order") {
    const auto cfg = tiny_config(SampleVariant::FQtc4);
    Model model(cfg);
    const auto s1 = symbolic_sample(cfg, 8);
    const auto s2 = symbolic_sample(cfg, 9);
    const auto s3 = symbolic_sample(cfg, 10);
    const ClusterSample* fwd[] = {&s1, &s2, &s3};
    const ClusterSample* rev[] = {&s3, &s1, &s2};
    const double a = model.batch_loss(std::span<const ClusterSample* const>(fwd, 3), false);
    const double b = model.batch_loss(std::span<const ClusterSample* const>(rev, 3), false);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("in-graph teacher-forced loss agrees with the standalone loss") {
    for (SampleVariant variant : {SampleVariant::FQtc4, SampleVariant::Fts}) {
        const auto cfg = tiny_config(variant);
        Model model(cfg);
        const auto s = variant == SampleVariant::Fts ? metric_sample(cfg, 11)
                                                     : symbolic_sample(cfg, 11);
        const ClusterSample* batch[] = {&s};
        const double graph_loss =
            model.batch_loss(std::span<const ClusterSample* const>(batch, 1), false);
        const auto fr = model.forward(s, true);
        CHECK(graph_loss == doctest::Approx(loss_value(fr, s, cfg)).epsilon(1e-9));
    }
}

TEST_CASE("full-model gradients match finite differences on every block") {
    for (SampleVariant variant :
         {SampleVariant::FQtc4, SampleVariant::FQtc6, SampleVariant::Fts}) {
        CAPTURE(cluster::variant_name(variant));
        const auto cfg = tiny_config(variant);
        Model model(cfg);
        const auto s = variant == SampleVariant::Fts ? metric_sample(cfg, 12)
                                                     : symbolic_sample(cfg, 12);
        const ClusterSample* batch[] = {&s};
        auto eval = [&](bool with_grad) {
            return model.batch_loss(std::span<const ClusterSample* const>(batch, 1), with_grad);
        };
        const auto report = num::gradient_check(eval, model.params(), 1e-5);
        for (const auto& block : report.blocks) {
            CAPTURE(block.name);
            CHECK(block.max_rel_err < 1e-4);
        }
    }
}

TEST_CASE("fit memorizes a toy set and is deterministic") {
    auto cfg = tiny_config(SampleVariant::FQtc4);
    cfg.epochs = 60;
    cfg.hidden = 16;
    cfg.lr = 5e-3;

    data::DatasetSplits ds;
    ds.meta.variant = cfg.variant;
    ds.meta.n_star = cfg.n_star;
    ds.meta.config.t_history = cfg.t_history;
    ds.meta.config.t_future = cfg.t_future;
    for (std::uint64_t i = 0; i < 6; ++i) ds.train.push_back(symbolic_sample(cfg, 100 + i));
    ds.validation.push_back(symbolic_sample(cfg, 200));
    ds.test.push_back(symbolic_sample(cfg, 201));

    auto r1 = fit(ds, cfg);
    auto r2 = fit(ds, cfg);
    REQUIRE(r1.history.epochs.size() == static_cast<std::size_t>(cfg.epochs));
    for (std::size_t i = 0; i < r1.history.epochs.size(); ++i) {
        CHECK(r1.history.epochs[i].train_loss == r2.history.epochs[i].train_loss);
        CHECK(r1.history.epochs[i].val_loss == r2.history.epochs[i].val_loss);
    }
    CHECK(r1.history.epochs.back().train_loss < r1.history.epochs.front().train_loss * 0.5);

    // degenerate decode still emits valid dictionary indices
    const auto pred = r1.model.predict(ds.test[0]);
    for (auto idx : pred.indices) CHECK(idx < cfg.dict_size);
}

TEST_CASE("fit rejects an empty training split") {
    const auto cfg = tiny_config(SampleVariant::FQtc4);
    data::DatasetSplits ds;
    ds.meta.variant = cfg.variant;
    CHECK_THROWS_AS(fit(ds, cfg), UsageError);
}

TEST_CASE("checkpoints round-trip and enforce compatibility") {
    const auto cfg = tiny_config(SampleVariant::FQtc6);
    Model model(cfg);
    const auto s = symbolic_sample(cfg, 13);

    data::DatasetSplits ds;
    ds.meta.variant = cfg.variant;
    ds.meta.n_star = cfg.n_star;
    ds.meta.config.t_history = cfg.t_history;
    ds.meta.config.t_future = cfg.t_future;
    ds.meta.dict_digest_c2 = 0xfeed;

    const std::string path = "/tmp/masi_test_ckpt.bin";
    save_checkpoint(model, ds.meta, path);
    auto loaded = load_checkpoint(path, ds);
    const auto a = model.forward(s, false);
    const auto b = loaded.forward(s, false);
    CHECK(a.outputs == b.outputs);

    // wrong variant: a C1-flavored dataset must be refused
    data::DatasetSplits other = ds;
    other.meta.variant = SampleVariant::FQtc4;
    CHECK_THROWS_AS(load_checkpoint(path, other), CompatibilityError);

    // wrong dictionary digest
    data::DatasetSplits drifted = ds;
    drifted.meta.dict_digest_c2 = 0xdead;
    CHECK_THROWS_AS(load_checkpoint(path, drifted), CompatibilityError);
}
