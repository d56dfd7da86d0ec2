#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <vector>

namespace bevo::nn {

// Dense row-major tensor of doubles, rank <= 4. All learnable state and
// activations in the model use this type; 64-bit everywhere keeps the
// oracle-equality and deterministic-mode guarantees simple.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape)
        : shape_(std::move(shape)), data_(numel_of(shape_), 0.0) {}

    static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int64_t> shape, double value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    int rank() const { return static_cast<int>(shape_.size()); }
    int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    const std::vector<int64_t>& shape() const { return shape_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    double& at(int64_t i0, int64_t i1) {
        assert(rank() == 2);
        return data_[static_cast<size_t>(i0 * shape_[1] + i1)];
    }
    double at(int64_t i0, int64_t i1) const {
        assert(rank() == 2);
        return data_[static_cast<size_t>(i0 * shape_[1] + i1)];
    }
    double& at(int64_t i0, int64_t i1, int64_t i2) {
        assert(rank() == 3);
        return data_[static_cast<size_t>((i0 * shape_[1] + i1) * shape_[2] + i2)];
    }
    double at(int64_t i0, int64_t i1, int64_t i2) const {
        assert(rank() == 3);
        return data_[static_cast<size_t>((i0 * shape_[1] + i1) * shape_[2] + i2)];
    }
    double& at(int64_t i0, int64_t i1, int64_t i2, int64_t i3) {
        assert(rank() == 4);
        return data_[static_cast<size_t>(((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3)];
    }
    double at(int64_t i0, int64_t i1, int64_t i2, int64_t i3) const {
        assert(rank() == 4);
        return data_[static_cast<size_t>(((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3)];
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    // Reinterprets the flat storage under a new shape of equal numel.
    Tensor reshaped(std::vector<int64_t> shape) const {
        assert(numel_of(shape) == numel());
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static int64_t numel_of(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) n *= d;
        return n;
    }

  private:
    std::vector<int64_t> shape_;
    std::vector<double> data_;
};

// Named learnable tensor with an accumulated gradient buffer.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, std::vector<int64_t> shape)
        : name(std::move(n)), value(shape), grad(shape) {}

    void zero_grad() { grad.fill(0.0); }
};

using ParamRefs = std::vector<Parameter*>;

}  // namespace bevo::nn
