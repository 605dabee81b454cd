#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "aufd/tensor.hpp"

namespace aufd {

// Adam with explicit gradient accumulation: accumulate() folds in one
// micro-batch gradient, step() applies the update using the mean of the
// accumulated gradients. Parameter grads are consumed and cleared on
// accumulate, so stale gradients never leak across micro-steps.
template <typename S>
class Adam {
public:
    Adam(std::vector<Tensor<S>*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        slots_.reserve(params.size());
        for (Tensor<S>* p : params) {
            Slot s;
            s.param = p;
            s.m = ArrX<S>::Zero(p->size());
            s.v = ArrX<S>::Zero(p->size());
            s.accum = ArrX<S>::Zero(p->size());
            slots_.push_back(std::move(s));
        }
    }

    void accumulate() {
        for (Slot& s : slots_) {
            if (s.param->has_grad()) s.accum += s.param->grad();
            s.param->clear_grad();
        }
        ++pending_;
    }

    void step() {
        if (pending_ == 0) return;
        ++t_;
        const S bc1 = S(1) - static_cast<S>(std::pow(beta1_, t_));
        const S bc2 = S(1) - static_cast<S>(std::pow(beta2_, t_));
        const S inv_pending = S(1) / static_cast<S>(pending_);
        for (Slot& s : slots_) {
            const ArrX<S> g = s.accum * inv_pending;
            s.m = static_cast<S>(beta1_) * s.m + static_cast<S>(1.0 - beta1_) * g;
            s.v = static_cast<S>(beta2_) * s.v + static_cast<S>(1.0 - beta2_) * g.square();
            s.param->value_mut() -=
                static_cast<S>(lr_) * (s.m / bc1) / ((s.v / bc2).sqrt() + static_cast<S>(eps_));
            s.accum.setZero();
        }
        pending_ = 0;
    }

    int pending_micro_steps() const { return pending_; }
    std::int64_t update_count() const { return t_; }
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

private:
    struct Slot {
        Tensor<S>* param;
        ArrX<S> m, v, accum;
    };
    std::vector<Slot> slots_;
    double lr_, beta1_, beta2_, eps_;
    int pending_ = 0;
    std::int64_t t_ = 0;
};

} // namespace aufd
