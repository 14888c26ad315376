#include "masi/tape.hpp"

#include <algorithm>
#include <cmath>

#include "masi/errors.hpp"

namespace masi::num {

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape = std::move(shape);
    std::size_t n = 1;
    for (auto d : t.shape) n *= d;
    t.data.assign(n, 0.0);
    return t;
}

Tensor Tensor::vector(std::vector<double> values) {
    Tensor t;
    t.shape = {values.size()};
    t.data = std::move(values);
    return t;
}

bool Tensor::finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::size_t ParamStore::add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw UsageError("duplicate parameter block: " + name);
    if (!init.finite()) throw NumericError("non-finite initializer for " + name);
    Block b;
    b.name = name;
    b.grad = Tensor::zeros(init.shape);
    b.value = std::move(init);
    blocks_.push_back(std::move(b));
    index_.emplace(name, blocks_.size() - 1);
    return blocks_.size() - 1;
}

ParamStore::Block& ParamStore::by_name(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter block: " + name);
    return blocks_[it->second];
}

const ParamStore::Block& ParamStore::by_name(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter block: " + name);
    return blocks_[it->second];
}

void ParamStore::zero_grads() {
    for (auto& b : blocks_) std::fill(b.grad.data.begin(), b.grad.data.end(), 0.0);
}

double ParamStore::grad_norm() const {
    double s = 0;
    for (const auto& b : blocks_) {
        for (double g : b.grad.data) s += g * g;
    }
    return std::sqrt(s);
}

std::vector<Tensor> ParamStore::snapshot_values() const {
    std::vector<Tensor> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.push_back(b.value);
    return out;
}

void ParamStore::restore_values(const std::vector<Tensor>& values) {
    if (values.size() != blocks_.size()) throw UsageError("snapshot shape mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].shape != blocks_[i].value.shape) throw UsageError("snapshot shape mismatch");
        blocks_[i].value = values[i];
    }
}

void Tape::reset() {
    nodes_.clear();
    values_.clear();
    grads_.clear();
    extra_.clear();
    const_pool_.clear();
    backward_visits_ = 0;
}

Tape::Id Tape::push(Op op, std::uint32_t len) {
    Node n;
    n.op = op;
    n.len = len;
    n.val_off = values_.size();
    values_.resize(values_.size() + len);
    nodes_.push_back(n);
    return static_cast<Id>(nodes_.size() - 1);
}

void Tape::check_finite(const Node& n, const char* op_name) const {
    const double* v = values_.data() + n.val_off;
    for (std::uint32_t i = 0; i < n.len; ++i) {
        if (!std::isfinite(v[i])) {
            throw NumericError(std::string("non-finite value out of op ") + op_name);
        }
    }
}

#define MASI_CHECK_FINITE(id, name)                                                              \
    do {                                                                                         \
        check_finite(nodes_[id], name);                                                          \
    } while (0)

Tape::Id Tape::param(std::size_t param_id) {
    if (!store_) throw UsageError("tape has no parameter store");
    const auto& block = store_->block(param_id);
    const Id id = push(Op::Param, static_cast<std::uint32_t>(block.value.size()));
    nodes_[id].aux = static_cast<std::uint32_t>(param_id);
    std::copy(block.value.data.begin(), block.value.data.end(), out(nodes_[id]));
    MASI_CHECK_FINITE(id, "param");
    return id;
}

Tape::Id Tape::param_row(std::size_t param_id, std::size_t row) {
    if (!store_) throw UsageError("tape has no parameter store");
    const auto& block = store_->block(param_id);
    const std::size_t cols = block.value.cols();
    if ((row + 1) * cols > block.value.size()) {
        throw UsageError("parameter row out of range in " + block.name);
    }
    const Id id = push(Op::ParamRow, static_cast<std::uint32_t>(cols));
    nodes_[id].aux = static_cast<std::uint32_t>(param_id);
    nodes_[id].b = static_cast<Id>(row);
    std::copy(block.value.data.begin() + row * cols, block.value.data.begin() + (row + 1) * cols,
              out(nodes_[id]));
    MASI_CHECK_FINITE(id, "param_row");
    return id;
}

Tape::Id Tape::constant(std::span<const double> values) {
    const Id id = push(Op::Const, static_cast<std::uint32_t>(values.size()));
    std::copy(values.begin(), values.end(), out(nodes_[id]));
    MASI_CHECK_FINITE(id, "const");
    return id;
}

Tape::Id Tape::constant_scalar(double v) { return constant(std::span<const double>(&v, 1)); }

Tape::Id Tape::zeros(std::size_t n) {
    const Id id = push(Op::Const, static_cast<std::uint32_t>(n));
    std::fill_n(out(nodes_[id]), n, 0.0);
    return id;
}

Tape::Id Tape::add(Id a, Id b) {
    if (length(a) != length(b)) throw UsageError("add: shape mismatch");
    const Id id = push(Op::Add, nodes_[a].len);
    nodes_[id].a = a;
    nodes_[id].b = b;
    const double* pa = val(a);
    const double* pb = val(b);
    double* o = out(nodes_[id]);
    for (std::uint32_t i = 0; i < nodes_[id].len; ++i) o[i] = pa[i] + pb[i];
    MASI_CHECK_FINITE(id, "add");
    return id;
}

Tape::Id Tape::add3(Id a, Id b, Id c) {
    if (length(a) != length(b) || length(a) != length(c)) throw UsageError("add3: shape mismatch");
    const Id id = push(Op::Add3, nodes_[a].len);
    nodes_[id].a = a;
    nodes_[id].b = b;
    nodes_[id].c = c;
    const double* pa = val(a);
    const double* pb = val(b);
    const double* pc = val(c);
    double* o = out(nodes_[id]);
    for (std::uint32_t i = 0; i < nodes_[id].len; ++i) o[i] = pa[i] + pb[i] + pc[i];
    MASI_CHECK_FINITE(id, "add3");
    return id;
}

Tape::Id Tape::mul(Id a, Id b) {
    if (length(a) != length(b)) throw UsageError("mul: shape mismatch");
    const Id id = push(Op::Mul, nodes_[a].len);
    nodes_[id].a = a;
    nodes_[id].b = b;
    const double* pa = val(a);
    const double* pb = val(b);
    double* o = out(nodes_[id]);
    for (std::uint32_t i = 0; i < nodes_[id].len; ++i) o[i] = pa[i] * pb[i];
    MASI_CHECK_FINITE(id, "mul");
    return id;
}

Tape::Id Tape::scale(Id a, double s) {
    const Id id = push(Op::Scale, nodes_[a].len);
    nodes_[id].a = a;
    nodes_[id].scalar_arg = s;
    const double* pa = val(a);
    double* o = out(nodes_[id]);
    for (std::uint32_t i = 0; i < nodes_[id].len; ++i) o[i] = pa[i] * s;
    MASI_CHECK_FINITE(id, "scale");
    return id;
}

Tape::Id Tape::sigmoid(Id a) {
    const Id id = push(Op::Sigmoid, nodes_[a].len);
    nodes_[id].a = a;
    const double* pa = val(a);
    double* o = out(nodes_[id]);
    for (std::uint32_t i = 0; i < nodes_[id].len; ++i) o[i] = 1.0 / (1.0 + std::exp(-pa[i]));
    MASI_CHECK_FINITE(id, "sigmoid");
    return id;
}

Tape::Id Tape::tanh_op(Id a) {
    const Id id = push(Op::Tanh, nodes_[a].len);
    nodes_[id].a = a;
    const double* pa = val(a);
    double* o = out(nodes_[id]);
    for (std::uint32_t i = 0; i < nodes_[id].len; ++i) o[i] = std::tanh(pa[i]);
    MASI_CHECK_FINITE(id, "tanh");
    return id;
}

Tape::Id Tape::sqrt_op(Id a) {
    const Id id = push(Op::Sqrt, nodes_[a].len);
    nodes_[id].a = a;
    const double* pa = val(a);
    double* o = out(nodes_[id]);
    for (std::uint32_t i = 0; i < nodes_[id].len; ++i) {
        if (pa[i] < 0) throw NumericError("sqrt of negative value");
        o[i] = std::sqrt(pa[i]);
    }
    MASI_CHECK_FINITE(id, "sqrt");
    return id;
}

Tape::Id Tape::slice(Id a, std::size_t offset, std::size_t len) {
    if (offset + len > length(a)) throw UsageError("slice out of range");
    const Id id = push(Op::Slice, static_cast<std::uint32_t>(len));
    nodes_[id].a = a;
    nodes_[id].aux = static_cast<std::uint32_t>(offset);
    const double* pa = val(a) + offset;
    std::copy(pa, pa + len, out(nodes_[id]));
    return id;
}

Tape::Id Tape::concat2(Id a, Id b) {
    const Id id = push(Op::Concat2, nodes_[a].len + nodes_[b].len);
    nodes_[id].a = a;
    nodes_[id].b = b;
    double* o = out(nodes_[id]);
    std::copy(val(a), val(a) + nodes_[a].len, o);
    std::copy(val(b), val(b) + nodes_[b].len, o + nodes_[a].len);
    return id;
}

Tape::Id Tape::concat3(Id a, Id b, Id c) {
    const Id id = push(Op::Concat3, nodes_[a].len + nodes_[b].len + nodes_[c].len);
    nodes_[id].a = a;
    nodes_[id].b = b;
    nodes_[id].c = c;
    double* o = out(nodes_[id]);
    std::copy(val(a), val(a) + nodes_[a].len, o);
    std::copy(val(b), val(b) + nodes_[b].len, o + nodes_[a].len);
    std::copy(val(c), val(c) + nodes_[c].len, o + nodes_[a].len + nodes_[b].len);
    return id;
}

Tape::Id Tape::matvec(Id W, Id x) {
    const std::uint32_t n = nodes_[x].len;
    if (n == 0 || nodes_[W].len % n != 0) throw UsageError("matvec: shape mismatch");
    const std::uint32_t m = nodes_[W].len / n;
    const Id id = push(Op::Matvec, m);
    nodes_[id].a = W;
    nodes_[id].b = x;
    const double* pw = val(W);
    const double* px = val(x);
    double* o = out(nodes_[id]);
    for (std::uint32_t i = 0; i < m; ++i) {
        double s = 0;
        const double* row = pw + static_cast<std::size_t>(i) * n;
        for (std::uint32_t j = 0; j < n; ++j) s += row[j] * px[j];
        o[i] = s;
    }
    MASI_CHECK_FINITE(id, "matvec");
    return id;
}

Tape::Id Tape::affine(Id W, Id x, Id b) {
    const std::uint32_t n = nodes_[x].len;
    if (n == 0 || nodes_[W].len % n != 0) throw UsageError("affine: shape mismatch");
    const std::uint32_t m = nodes_[W].len / n;
    if (nodes_[b].len != m) throw UsageError("affine: bias mismatch");
    const Id id = push(Op::Affine, m);
    nodes_[id].a = W;
    nodes_[id].b = x;
    nodes_[id].c = b;
    const double* pw = val(W);
    const double* px = val(x);
    const double* pb = val(b);
    double* o = out(nodes_[id]);
    for (std::uint32_t i = 0; i < m; ++i) {
        double s = pb[i];
        const double* row = pw + static_cast<std::size_t>(i) * n;
        for (std::uint32_t j = 0; j < n; ++j) s += row[j] * px[j];
        o[i] = s;
    }
    MASI_CHECK_FINITE(id, "affine");
    return id;
}

Tape::Id Tape::dot(Id a, Id b) {
    if (length(a) != length(b)) throw UsageError("dot: shape mismatch");
    const Id id = push(Op::Dot, 1);
    nodes_[id].a = a;
    nodes_[id].b = b;
    const double* pa = val(a);
    const double* pb = val(b);
    double s = 0;
    for (std::uint32_t i = 0; i < nodes_[a].len; ++i) s += pa[i] * pb[i];
    *out(nodes_[id]) = s;
    MASI_CHECK_FINITE(id, "dot");
    return id;
}

Tape::Id Tape::mean_scalars(std::span<const Id> xs) {
    if (xs.empty()) throw UsageError("mean of nothing");
    const Id id = push(Op::MeanScalars, 1);
    nodes_[id].extra_off = static_cast<std::uint32_t>(extra_.size());
    nodes_[id].extra_len = static_cast<std::uint32_t>(xs.size());
    double s = 0;
    for (Id x : xs) {
        if (nodes_[x].len != 1) throw UsageError("mean_scalars needs scalars");
        extra_.push_back(x);
        s += *val(x);
    }
    *out(nodes_[id]) = s / static_cast<double>(xs.size());
    MASI_CHECK_FINITE(id, "mean_scalars");
    return id;
}

Tape::Id Tape::stack_scalars(std::span<const Id> xs) {
    if (xs.empty()) throw UsageError("stack of nothing");
    const Id id = push(Op::StackScalars, static_cast<std::uint32_t>(xs.size()));
    nodes_[id].extra_off = static_cast<std::uint32_t>(extra_.size());
    nodes_[id].extra_len = static_cast<std::uint32_t>(xs.size());
    double* o = out(nodes_[id]);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (nodes_[xs[i]].len != 1) throw UsageError("stack_scalars needs scalars");
        extra_.push_back(xs[i]);
        o[i] = *val(xs[i]);
    }
    return id;
}

Tape::Id Tape::mean_vectors(std::span<const Id> xs) {
    if (xs.empty()) throw UsageError("mean of nothing");
    const std::uint32_t n = nodes_[xs[0]].len;
    const Id id = push(Op::MeanVectors, n);
    nodes_[id].extra_off = static_cast<std::uint32_t>(extra_.size());
    nodes_[id].extra_len = static_cast<std::uint32_t>(xs.size());
    double* o = out(nodes_[id]);
    std::fill_n(o, n, 0.0);
    for (Id x : xs) {
        if (nodes_[x].len != n) throw UsageError("mean_vectors: shape mismatch");
        extra_.push_back(x);
        const double* px = val(x);
        for (std::uint32_t i = 0; i < n; ++i) o[i] += px[i];
    }
    const double inv = 1.0 / static_cast<double>(xs.size());
    for (std::uint32_t i = 0; i < n; ++i) o[i] *= inv;
    MASI_CHECK_FINITE(id, "mean_vectors");
    return id;
}

Tape::Id Tape::softmax(Id v) {
    const Id id = push(Op::Softmax, nodes_[v].len);
    nodes_[id].a = v;
    const double* pv = val(v);
    double* o = out(nodes_[id]);
    const std::uint32_t n = nodes_[id].len;
    double mx = pv[0];
    for (std::uint32_t i = 1; i < n; ++i) mx = std::max(mx, pv[i]);
    double z = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        o[i] = std::exp(pv[i] - mx);
        z += o[i];
    }
    for (std::uint32_t i = 0; i < n; ++i) o[i] /= z;
    MASI_CHECK_FINITE(id, "softmax");
    return id;
}

Tape::Id Tape::weighted_sum(Id weights, std::span<const Id> vectors) {
    if (nodes_[weights].len != vectors.size()) throw UsageError("weighted_sum: count mismatch");
    const std::uint32_t n = nodes_[vectors[0]].len;
    const Id id = push(Op::WeightedSum, n);
    nodes_[id].a = weights;
    nodes_[id].extra_off = static_cast<std::uint32_t>(extra_.size());
    nodes_[id].extra_len = static_cast<std::uint32_t>(vectors.size());
    const double* pw = val(weights);
    double* o = out(nodes_[id]);
    std::fill_n(o, n, 0.0);
    for (std::size_t k = 0; k < vectors.size(); ++k) {
        if (nodes_[vectors[k]].len != n) throw UsageError("weighted_sum: shape mismatch");
        extra_.push_back(vectors[k]);
        const double* pv = val(vectors[k]);
        const double w = pw[k];
        for (std::uint32_t i = 0; i < n; ++i) o[i] += w * pv[i];
    }
    MASI_CHECK_FINITE(id, "weighted_sum");
    return id;
}

Tape::Id Tape::cross_entropy_logits(Id logits, std::uint32_t target) {
    if (target >= nodes_[logits].len) throw UsageError("cross_entropy: class index out of range");
    const Id id = push(Op::CrossEntropy, 1);
    nodes_[id].a = logits;
    nodes_[id].aux = target;
    const double* pl = val(logits);
    const std::uint32_t n = nodes_[logits].len;
    double mx = pl[0];
    for (std::uint32_t i = 1; i < n; ++i) mx = std::max(mx, pl[i]);
    double z = 0;
    for (std::uint32_t i = 0; i < n; ++i) z += std::exp(pl[i] - mx);
    *out(nodes_[id]) = mx + std::log(z) - pl[target];
    MASI_CHECK_FINITE(id, "cross_entropy");
    return id;
}

Tape::Id Tape::squared_error(Id pred, std::span<const double> target) {
    if (nodes_[pred].len != target.size()) throw UsageError("squared_error: shape mismatch");
    const Id id = push(Op::SquaredError, 1);
    nodes_[id].a = pred;
    nodes_[id].const_off = static_cast<std::uint32_t>(const_pool_.size());
    const_pool_.insert(const_pool_.end(), target.begin(), target.end());
    const double* pp = val(pred);
    double s = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = pp[i] - target[i];
        s += d * d;
    }
    *out(nodes_[id]) = s;
    MASI_CHECK_FINITE(id, "squared_error");
    return id;
}

std::span<const double> Tape::value(Id id) const {
    return {values_.data() + nodes_[id].val_off, nodes_[id].len};
}

double Tape::scalar(Id id) const {
    if (nodes_[id].len != 1) throw UsageError("scalar() on a non-scalar node");
    return *val(id);
}

std::size_t Tape::length(Id id) const { return nodes_[id].len; }

void Tape::backward(Id loss) {
    if (nodes_[loss].len != 1) throw UsageError("backward needs a scalar loss");
    if (!store_) throw UsageError("tape has no parameter store");
    grads_.assign(values_.size(), 0.0);
    grads_[nodes_[loss].val_off] = 1.0;
    backward_visits_ = 0;

    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        ++backward_visits_;
        const double* g = grads_.data() + n.val_off;
        bool any = false;
        for (std::uint32_t k = 0; k < n.len; ++k) {
            if (g[k] != 0.0) {
                any = true;
                break;
            }
        }
        if (!any) continue;

        switch (n.op) {
        case Op::Param: {
            auto& block = store_->block(n.aux);
            for (std::uint32_t k = 0; k < n.len; ++k) block.grad.data[k] += g[k];
            break;
        }
        case Op::ParamRow: {
            auto& block = store_->block(n.aux);
            const std::size_t off = static_cast<std::size_t>(n.b) * n.len;
            for (std::uint32_t k = 0; k < n.len; ++k) block.grad.data[off + k] += g[k];
            break;
        }
        case Op::Const:
            break;
        case Op::Add: {
            double* ga = grad(n.a);
            double* gb = grad(n.b);
            for (std::uint32_t k = 0; k < n.len; ++k) {
                ga[k] += g[k];
                gb[k] += g[k];
            }
            break;
        }
        case Op::Add3: {
            double* ga = grad(n.a);
            double* gb = grad(n.b);
            double* gc = grad(n.c);
            for (std::uint32_t k = 0; k < n.len; ++k) {
                ga[k] += g[k];
                gb[k] += g[k];
                gc[k] += g[k];
            }
            break;
        }
        case Op::Mul: {
            double* ga = grad(n.a);
            double* gb = grad(n.b);
            const double* va = val(n.a);
            const double* vb = val(n.b);
            for (std::uint32_t k = 0; k < n.len; ++k) {
                ga[k] += g[k] * vb[k];
                gb[k] += g[k] * va[k];
            }
            break;
        }
        case Op::Scale: {
            double* ga = grad(n.a);
            for (std::uint32_t k = 0; k < n.len; ++k) ga[k] += g[k] * n.scalar_arg;
            break;
        }
        case Op::Sigmoid: {
            double* ga = grad(n.a);
            const double* y = val(static_cast<Id>(i));
            for (std::uint32_t k = 0; k < n.len; ++k) ga[k] += g[k] * y[k] * (1.0 - y[k]);
            break;
        }
        case Op::Tanh: {
            double* ga = grad(n.a);
            const double* y = val(static_cast<Id>(i));
            for (std::uint32_t k = 0; k < n.len; ++k) ga[k] += g[k] * (1.0 - y[k] * y[k]);
            break;
        }
        case Op::Sqrt: {
            double* ga = grad(n.a);
            const double* y = val(static_cast<Id>(i));
            for (std::uint32_t k = 0; k < n.len; ++k) {
                ga[k] += g[k] * 0.5 / std::max(y[k], 1e-9);
            }
            break;
        }
        case Op::Slice: {
            double* ga = grad(n.a) + n.aux;
            for (std::uint32_t k = 0; k < n.len; ++k) ga[k] += g[k];
            break;
        }
        case Op::Concat2: {
            double* ga = grad(n.a);
            double* gb = grad(n.b);
            const std::uint32_t la = nodes_[n.a].len;
            for (std::uint32_t k = 0; k < la; ++k) ga[k] += g[k];
            for (std::uint32_t k = 0; k < nodes_[n.b].len; ++k) gb[k] += g[la + k];
            break;
        }
        case Op::Concat3: {
            double* ga = grad(n.a);
            double* gb = grad(n.b);
            double* gc = grad(n.c);
            const std::uint32_t la = nodes_[n.a].len;
            const std::uint32_t lb = nodes_[n.b].len;
            for (std::uint32_t k = 0; k < la; ++k) ga[k] += g[k];
            for (std::uint32_t k = 0; k < lb; ++k) gb[k] += g[la + k];
            for (std::uint32_t k = 0; k < nodes_[n.c].len; ++k) gc[k] += g[la + lb + k];
            break;
        }
        case Op::Matvec: {
            const std::uint32_t cols = nodes_[n.b].len;
            double* gW = grad(n.a);
            double* gx = grad(n.b);
            const double* W = val(n.a);
            const double* x = val(n.b);
            for (std::uint32_t r = 0; r < n.len; ++r) {
                const double gr = g[r];
                if (gr == 0.0) continue;
                double* gWr = gW + static_cast<std::size_t>(r) * cols;
                const double* Wr = W + static_cast<std::size_t>(r) * cols;
                for (std::uint32_t k = 0; k < cols; ++k) {
                    gWr[k] += gr * x[k];
                    gx[k] += gr * Wr[k];
                }
            }
            break;
        }
        case Op::Affine: {
            const std::uint32_t cols = nodes_[n.b].len;
            double* gW = grad(n.a);
            double* gx = grad(n.b);
            double* gb = grad(n.c);
            const double* W = val(n.a);
            const double* x = val(n.b);
            for (std::uint32_t r = 0; r < n.len; ++r) {
                const double gr = g[r];
                if (gr == 0.0) continue;
                gb[r] += gr;
                double* gWr = gW + static_cast<std::size_t>(r) * cols;
                const double* Wr = W + static_cast<std::size_t>(r) * cols;
                for (std::uint32_t k = 0; k < cols; ++k) {
                    gWr[k] += gr * x[k];
                    gx[k] += gr * Wr[k];
                }
            }
            break;
        }
        case Op::Dot: {
            double* ga = grad(n.a);
            double* gb = grad(n.b);
            const double* va = val(n.a);
            const double* vb = val(n.b);
            const double gs = g[0];
            for (std::uint32_t k = 0; k < nodes_[n.a].len; ++k) {
                ga[k] += gs * vb[k];
                gb[k] += gs * va[k];
            }
            break;
        }
        case Op::MeanScalars: {
            const double gs = g[0] / static_cast<double>(n.extra_len);
            for (std::uint32_t k = 0; k < n.extra_len; ++k) {
                grads_[nodes_[extra_[n.extra_off + k]].val_off] += gs;
            }
            break;
        }
        case Op::StackScalars: {
            for (std::uint32_t k = 0; k < n.extra_len; ++k) {
                grads_[nodes_[extra_[n.extra_off + k]].val_off] += g[k];
            }
            break;
        }
        case Op::MeanVectors: {
            const double inv = 1.0 / static_cast<double>(n.extra_len);
            for (std::uint32_t k = 0; k < n.extra_len; ++k) {
                double* gx = grad(extra_[n.extra_off + k]);
                for (std::uint32_t j = 0; j < n.len; ++j) gx[j] += g[j] * inv;
            }
            break;
        }
        case Op::Softmax: {
            double* ga = grad(n.a);
            const double* y = val(static_cast<Id>(i));
            double dotgy = 0;
            for (std::uint32_t k = 0; k < n.len; ++k) dotgy += g[k] * y[k];
            for (std::uint32_t k = 0; k < n.len; ++k) ga[k] += (g[k] - dotgy) * y[k];
            break;
        }
        case Op::WeightedSum: {
            double* gw = grad(n.a);
            const double* w = val(n.a);
            for (std::uint32_t k = 0; k < n.extra_len; ++k) {
                const Id vk = extra_[n.extra_off + k];
                double* gv = grad(vk);
                const double* v = val(vk);
                double acc = 0;
                for (std::uint32_t j = 0; j < n.len; ++j) {
                    acc += g[j] * v[j];
                    gv[j] += g[j] * w[k];
                }
                gw[k] += acc;
            }
            break;
        }
        case Op::CrossEntropy: {
            // d/dlogits = softmax - onehot
            double* ga = grad(n.a);
            const double* pl = val(n.a);
            const std::uint32_t len = nodes_[n.a].len;
            double mx = pl[0];
            for (std::uint32_t k = 1; k < len; ++k) mx = std::max(mx, pl[k]);
            double z = 0;
            for (std::uint32_t k = 0; k < len; ++k) z += std::exp(pl[k] - mx);
            const double gs = g[0];
            for (std::uint32_t k = 0; k < len; ++k) {
                ga[k] += gs * (std::exp(pl[k] - mx) / z - (k == n.aux ? 1.0 : 0.0));
            }
            break;
        }
        case Op::SquaredError: {
            double* ga = grad(n.a);
            const double* pp = val(n.a);
            const double* t = const_pool_.data() + n.const_off;
            const double gs = g[0];
            for (std::uint32_t k = 0; k < nodes_[n.a].len; ++k) {
                ga[k] += gs * 2.0 * (pp[k] - t[k]);
            }
            break;
        }
        }
    }
}

#undef MASI_CHECK_FINITE

} // namespace masi::num
