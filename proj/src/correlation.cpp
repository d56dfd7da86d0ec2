#include "bevo/correlation.hpp"

#include <cmath>
#include <stdexcept>

namespace bevo {

using nn::Tensor;

void CropSpec::validate(int scope) const {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("CropSpec: empty crop");
    if (rows > scope || cols > scope) throw std::invalid_argument("CropSpec: crop exceeds grid");
    const int64_t r0 = abs_row0(scope);
    const int64_t c0 = abs_col0(scope);
    if (r0 < 0 || r0 + rows > scope || c0 < 0 || c0 + cols > scope) {
        throw std::invalid_argument("CropSpec: crop outside grid");
    }
}

void CorrelationSpec::validate() const {
    if (delta_x < 1 || delta_y < 1) throw std::invalid_argument("CorrelationSpec: delta >= 1");
}

Tensor crop_bev(const BEVFeatureMap& bev, const CropSpec& crop) {
    const int scope = bev.grid.scope;
    crop.validate(scope);
    const int64_t c_ch = bev.values.dim(0);
    const int64_t r0 = crop.abs_row0(scope);
    const int64_t c0 = crop.abs_col0(scope);
    Tensor out({c_ch, crop.rows, crop.cols});
    for (int64_t c = 0; c < c_ch; ++c) {
        for (int64_t r = 0; r < crop.rows; ++r) {
            const double* src = bev.values.data() + (c * scope + (r0 + r)) * scope + c0;
            double* dst = out.data() + (c * crop.rows + r) * crop.cols;
            std::copy(src, src + crop.cols, dst);
        }
    }
    return out;
}

Tensor crop_bev_backward(const Tensor& g_crop, const BEVGridSpec& grid, const CropSpec& crop) {
    const int scope = grid.scope;
    const int64_t c_ch = g_crop.dim(0);
    const int64_t r0 = crop.abs_row0(scope);
    const int64_t c0 = crop.abs_col0(scope);
    Tensor out({c_ch, scope, scope});
    for (int64_t c = 0; c < c_ch; ++c) {
        for (int64_t r = 0; r < crop.rows; ++r) {
            const double* src = g_crop.data() + (c * crop.rows + r) * crop.cols;
            double* dst = out.data() + (c * scope + (r0 + r)) * scope + c0;
            std::copy(src, src + crop.cols, dst);
        }
    }
    return out;
}

CorrelationVolume correlation_volume(const Tensor& f1, const Tensor& f2,
                                     const CorrelationSpec& spec) {
    spec.validate();
    if (!f1.same_shape(f2) || f1.rank() != 3) {
        throw std::invalid_argument("correlation_volume: inputs must share a [C, X, Y] shape");
    }
    const int64_t c_ch = f1.dim(0), xs = f1.dim(1), ys = f1.dim(2);
    const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(c_ch));

    CorrelationVolume vol;
    vol.spec = spec;
    vol.values = Tensor({spec.num_shifts(), xs, ys});
    int s = 0;
    for (int dx = -spec.delta_x; dx <= spec.delta_x; ++dx) {
        for (int dy = -spec.delta_y; dy <= spec.delta_y; ++dy, ++s) {
            double* out = vol.values.data() + static_cast<int64_t>(s) * xs * ys;
            for (int64_t x = 0; x < xs; ++x) {
                const int64_t x2 = x + dx;
                if (x2 < 0 || x2 >= xs) continue;  // row fully zero-padded
                for (int64_t y = 0; y < ys; ++y) {
                    const int64_t y2 = y + dy;
                    if (y2 < 0 || y2 >= ys) continue;
                    double acc = 0.0;
                    for (int64_t c = 0; c < c_ch; ++c) {
                        acc += f1[(c * xs + x) * ys + y] * f2[(c * xs + x2) * ys + y2];
                    }
                    out[x * ys + y] = acc * inv_sqrt_c;
                }
            }
        }
    }
    return vol;
}

void correlation_backward(const Tensor& g_vol, const Tensor& f1, const Tensor& f2,
                          const CorrelationSpec& spec, Tensor& g_f1, Tensor& g_f2) {
    const int64_t c_ch = f1.dim(0), xs = f1.dim(1), ys = f1.dim(2);
    const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(c_ch));
    g_f1 = Tensor(f1.shape());
    g_f2 = Tensor(f2.shape());
    int s = 0;
    for (int dx = -spec.delta_x; dx <= spec.delta_x; ++dx) {
        for (int dy = -spec.delta_y; dy <= spec.delta_y; ++dy, ++s) {
            const double* gv = g_vol.data() + static_cast<int64_t>(s) * xs * ys;
            for (int64_t x = 0; x < xs; ++x) {
                const int64_t x2 = x + dx;
                if (x2 < 0 || x2 >= xs) continue;
                for (int64_t y = 0; y < ys; ++y) {
                    const int64_t y2 = y + dy;
                    if (y2 < 0 || y2 >= ys) continue;
                    const double g = gv[x * ys + y] * inv_sqrt_c;
                    if (g == 0.0) continue;
                    for (int64_t c = 0; c < c_ch; ++c) {
                        g_f1[(c * xs + x) * ys + y] += g * f2[(c * xs + x2) * ys + y2];
                        g_f2[(c * xs + x2) * ys + y2] += g * f1[(c * xs + x) * ys + y];
                    }
                }
            }
        }
    }
}

}  // namespace bevo
