#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace masi::num {

/// Dense row-major 64-bit float tensor.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor vector(std::vector<double> values);

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool finite() const;

    bool operator==(const Tensor&) const = default;
};

/// Named persistent parameter blocks with matching gradient accumulators.
class ParamStore {
public:
    struct Block {
        std::string name;
        Tensor value;
        Tensor grad;
    };

    std::size_t add(const std::string& name, Tensor init);
    std::size_t count() const { return blocks_.size(); }
    Block& block(std::size_t id) { return blocks_[id]; }
    const Block& block(std::size_t id) const { return blocks_[id]; }
    Block& by_name(const std::string& name);
    const Block& by_name(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    void zero_grads();
    double grad_norm() const;

    /// Deep copy / restore of the value tensors only.
    std::vector<Tensor> snapshot_values() const;
    void restore_values(const std::vector<Tensor>& values);

private:
    std::vector<Block> blocks_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace masi::num
