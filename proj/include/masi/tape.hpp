#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "masi/tensor.hpp"

namespace masi::num {

/// Reverse-mode autodiff tape over a flat value/gradient arena. Forward
/// values are computed eagerly as nodes are appended (and checked finite);
/// backward() walks the topological order once in reverse and accumulates
/// parameter gradients into the attached ParamStore. The tape appends no
/// nodes during backward.
class Tape {
public:
    using Id = std::uint32_t;

    explicit Tape(ParamStore* store = nullptr) : store_(store) {}

    /// Clears the graph but keeps arena capacity for reuse.
    void reset();

    Id param(std::size_t param_id);
    /// One row of a [rows, cols] parameter; the gradient lands in that row.
    Id param_row(std::size_t param_id, std::size_t row);
    Id constant(std::span<const double> values);
    Id constant_scalar(double v);
    Id zeros(std::size_t n);

    Id add(Id a, Id b);
    Id add3(Id a, Id b, Id c);
    Id mul(Id a, Id b);
    Id scale(Id a, double s);
    Id sigmoid(Id a);
    Id tanh_op(Id a);
    Id sqrt_op(Id a); // d/dx guarded at 0
    Id slice(Id a, std::size_t offset, std::size_t len);
    Id concat2(Id a, Id b);
    Id concat3(Id a, Id b, Id c);
    Id matvec(Id W, Id x);           // [m,n] · [n] -> [m]
    Id affine(Id W, Id x, Id b);     // W x + b
    Id dot(Id a, Id b);              // -> scalar
    Id mean_scalars(std::span<const Id> xs);
    Id stack_scalars(std::span<const Id> xs); // -> [k]
    Id mean_vectors(std::span<const Id> xs);  // elementwise mean
    Id softmax(Id v);                         // max-subtracted, sums to 1
    Id weighted_sum(Id weights, std::span<const Id> vectors); // sum_i w_i v_i
    /// -log softmax(logits)[target], fused and shift-stable.
    Id cross_entropy_logits(Id logits, std::uint32_t target);
    /// sum_i (pred_i - target_i)^2 against constant targets.
    Id squared_error(Id pred, std::span<const double> target);

    std::span<const double> value(Id id) const;
    double scalar(Id id) const;
    std::size_t length(Id id) const;

    /// Reverse accumulation from a scalar loss. Gradients of parameters
    /// reached by the graph are added into the ParamStore.
    void backward(Id loss);

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t last_backward_visits() const { return backward_visits_; }

private:
    enum class Op : std::uint8_t {
        Param, ParamRow, Const, Add, Add3, Mul, Scale, Sigmoid, Tanh, Sqrt, Slice,
        Concat2, Concat3, Matvec, Affine, Dot, MeanScalars, StackScalars, MeanVectors,
        Softmax, WeightedSum, CrossEntropy, SquaredError
    };

    struct Node {
        Op op;
        Id a = 0, b = 0, c = 0;
        std::uint32_t extra_off = 0, extra_len = 0; // indices into extra_
        std::size_t val_off = 0;
        std::uint32_t len = 0;
        std::uint32_t aux = 0;     // slice offset, CE target, param id, row
        double scalar_arg = 0.0;
        std::uint32_t const_off = 0; // payload for Const/SquaredError targets
    };

    Id push(Op op, std::uint32_t len);
    double* out(Node& n) { return values_.data() + n.val_off; }
    const double* val(Id id) const { return values_.data() + nodes_[id].val_off; }
    double* grad(Id id) { return grads_.data() + nodes_[id].val_off; }
    void check_finite(const Node& n, const char* op_name) const;

    ParamStore* store_;
    std::vector<Node> nodes_;
    std::vector<double> values_;
    std::vector<double> grads_;
    std::vector<Id> extra_;
    std::vector<double> const_pool_;
    std::size_t backward_visits_ = 0;
};

} // namespace masi::num
