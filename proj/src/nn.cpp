#include "masi/nn.hpp"

#include <algorithm>
#include <cmath>

#include "masi/errors.hpp"

namespace masi::num {

LstmOut lstm_cell(Tape& tape, Tape::Id x, Tape::Id h, Tape::Id c, Tape::Id W, Tape::Id b) {
    const std::size_t H = tape.length(h);
    if (tape.length(c) != H) throw UsageError("lstm_cell: h/c mismatch");
    if (tape.length(b) != 4 * H || tape.length(W) != 4 * H * (tape.length(x) + H)) {
        throw UsageError("lstm_cell: weight shapes inconsistent with the state size");
    }
    const auto z = tape.concat2(x, h);
    const auto gates = tape.affine(W, z, b);
    const auto i = tape.sigmoid(tape.slice(gates, 0, H));
    const auto f = tape.sigmoid(tape.slice(gates, H, H));
    const auto g = tape.tanh_op(tape.slice(gates, 2 * H, H));
    const auto o = tape.sigmoid(tape.slice(gates, 3 * H, H));
    const auto c_next = tape.add(tape.mul(f, c), tape.mul(i, g));
    const auto h_next = tape.mul(o, tape.tanh_op(c_next));
    return {h_next, c_next};
}

std::vector<double> softmax_values(std::span<const double> logits) {
    if (logits.empty()) throw UsageError("softmax of nothing");
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> out(logits.size());
    double z = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        z += out[i];
    }
    for (auto& v : out) v /= z;
    return out;
}

double cross_entropy_value(std::span<const double> logits, std::size_t target) {
    if (target >= logits.size()) throw UsageError("cross_entropy: class index out of range");
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0;
    for (double v : logits) z += std::exp(v - mx);
    return mx + std::log(z) - logits[target];
}

AdamState AdamState::for_store(const ParamStore& store) {
    AdamState s;
    for (std::size_t i = 0; i < store.count(); ++i) {
        s.m.push_back(Tensor::zeros(store.block(i).value.shape));
        s.v.push_back(Tensor::zeros(store.block(i).value.shape));
    }
    return s;
}

void adam_step(ParamStore& store, AdamState& state, double lr, double clip_norm) {
    if (state.m.size() != store.count()) throw UsageError("adam state does not match the store");
    double scale = 1.0;
    if (clip_norm > 0) {
        const double norm = store.grad_norm();
        if (norm > clip_norm) scale = clip_norm / norm;
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t b = 0; b < store.count(); ++b) {
        auto& block = store.block(b);
        auto& m = state.m[b].data;
        auto& v = state.v[b].data;
        if (m.size() != block.value.size()) throw UsageError("adam accumulator shape mismatch");
        for (std::size_t i = 0; i < block.value.size(); ++i) {
            const double g = block.grad.data[i] * scale;
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            block.value.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
            if (!std::isfinite(block.value.data[i])) {
                throw NumericError("non-finite parameter after adam update in " + block.name);
            }
        }
    }
    store.zero_grads();
}

GradCheckReport gradient_check(const std::function<double(bool with_grad)>& eval,
                               ParamStore& store, double fd_step) {
    store.zero_grads();
    eval(true);
    std::vector<Tensor> analytic;
    for (std::size_t b = 0; b < store.count(); ++b) analytic.push_back(store.block(b).grad);
    store.zero_grads();

    GradCheckReport report;
    for (std::size_t b = 0; b < store.count(); ++b) {
        auto& block = store.block(b);
        GradCheckReport::BlockResult res;
        res.name = block.name;
        res.elements = block.value.size();
        for (std::size_t i = 0; i < block.value.size(); ++i) {
            const double saved = block.value.data[i];
            block.value.data[i] = saved + fd_step;
            const double up = eval(false);
            block.value.data[i] = saved - fd_step;
            const double down = eval(false);
            block.value.data[i] = saved;
            const double fd = (up - down) / (2.0 * fd_step);
            const double a = analytic[b].data[i];
            const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
            res.max_rel_err = std::max(res.max_rel_err, std::abs(a - fd) / denom);
        }
        report.worst = std::max(report.worst, res.max_rel_err);
        report.blocks.push_back(std::move(res));
    }
    return report;
}

} // namespace masi::num
