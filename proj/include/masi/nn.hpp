#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "masi/tape.hpp"

namespace masi::num {

/// Standard gated recurrence. The fused weight matrix W is [4H, X+H] over
/// the concatenated (x, h) input and the gate slices are ordered i, f, g, o:
///   c' = sigmoid(f) * c + sigmoid(i) * tanh(g);  h' = sigmoid(o) * tanh(c').
struct LstmOut {
    Tape::Id h;
    Tape::Id c;
};
LstmOut lstm_cell(Tape& tape, Tape::Id x, Tape::Id h, Tape::Id c, Tape::Id W, Tape::Id b);

/// Value-level helpers (shift-stable), shared by reporting paths.
std::vector<double> softmax_values(std::span<const double> logits);
double cross_entropy_value(std::span<const double> logits, std::size_t target);

/// Adam with bias correction; beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Tensor> m, v;

    static AdamState for_store(const ParamStore& store);
};

/// One bias-corrected update from the store's accumulated gradients; applies
/// a global-norm clip first when clip_norm > 0, then zeroes the gradients.
void adam_step(ParamStore& store, AdamState& state, double lr, double clip_norm = 0.0);

struct GradCheckReport {
    struct BlockResult {
        std::string name;
        double max_rel_err = 0.0;
        std::size_t elements = 0;
    };
    std::vector<BlockResult> blocks;
    double worst = 0.0;

    bool all_below(double tolerance) const { return worst < tolerance; }
};

/// Central-difference check of every parameter element. `eval(with_grad)`
/// must rebuild the same deterministic loss; with_grad=true must leave
/// analytic gradients in the store. Relative error uses a 1e-6 floor so
/// unused parameters do not trip on roundoff noise.
GradCheckReport gradient_check(const std::function<double(bool with_grad)>& eval,
                               ParamStore& store, double fd_step = 1e-5);

} // namespace masi::num
