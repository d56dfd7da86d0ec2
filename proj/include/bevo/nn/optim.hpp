#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bevo/nn/tensor.hpp"

namespace bevo::nn {

// Adam with optional cosine learning-rate decay over a fixed horizon.
class Adam {
  public:
    Adam(ParamRefs params, double lr, int64_t total_steps, double beta1 = 0.9,
         double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)),
          base_lr_(lr),
          total_steps_(total_steps),
          beta1_(beta1),
          beta2_(beta2),
          eps_(eps) {
        for (auto* p : params_) {
            m_.emplace_back(p->value.shape());
            v_.emplace_back(p->value.shape());
        }
    }

    double current_lr() const {
        if (total_steps_ <= 0) return base_lr_;
        const double frac =
            std::min(1.0, static_cast<double>(step_) / static_cast<double>(total_steps_));
        return base_lr_ * 0.5 * (1.0 + std::cos(M_PI * frac));
    }

    void step() {
        const double lr = current_lr();
        ++step_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
        for (size_t i = 0; i < params_.size(); ++i) {
            Parameter& p = *params_[i];
            Tensor& m = m_[i];
            Tensor& v = v_[i];
            for (int64_t j = 0; j < p.value.numel(); ++j) {
                const double g = p.grad[j];
                m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
                v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
                const double mhat = m[j] / bc1;
                const double vhat = v[j] / bc2;
                p.value[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

    int64_t step_count() const { return step_; }
    void set_step_count(int64_t s) { step_ = s; }

    std::vector<Tensor>& moment1() { return m_; }
    std::vector<Tensor>& moment2() { return v_; }

  private:
    ParamRefs params_;
    double base_lr_;
    int64_t total_steps_;
    double beta1_, beta2_, eps_;
    int64_t step_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace bevo::nn
