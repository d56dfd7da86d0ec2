#pragma once

#include "bevo/encoder.hpp"
#include "bevo/nn/tensor.hpp"

namespace bevo {

struct CropSpec {
    int rows = 32;
    int cols = 64;
    // First kept row, measured from the ego row toward camera-forward (+x).
    // Columns are centered laterally. row_origin may be negative.
    int row_origin = 0;

    void validate(int scope) const;
    int64_t abs_row0(int scope) const { return scope / 2 + row_origin; }
    int64_t abs_col0(int scope) const { return (scope - cols) / 2; }
};

struct CorrelationSpec {
    int delta_x = 3;
    int delta_y = 3;

    void validate() const;
    int num_shifts() const { return (2 * delta_x + 1) * (2 * delta_y + 1); }
};

// Shift-indexed stack of dot-product score maps. Shift enumeration is
// dx-major ascending: s = (dx + delta_x) * (2*delta_y + 1) + (dy + delta_y).
struct CorrelationVolume {
    nn::Tensor values;  // [S, X_c, Y_c]
    CorrelationSpec spec;

    std::pair<int, int> shift_of(int s) const {
        const int span = 2 * spec.delta_y + 1;
        return {s / span - spec.delta_x, s % span - spec.delta_y};
    }
};

// Contiguous camera-forward sub-grid of a BEV feature map, [C, rows, cols].
nn::Tensor crop_bev(const BEVFeatureMap& bev, const CropSpec& crop);
// Scatters a crop gradient back into a full-grid gradient.
nn::Tensor crop_bev_backward(const nn::Tensor& g_crop, const BEVGridSpec& grid,
                             const CropSpec& crop);

// value[s, x, y] = (1/sqrt(C)) * sum_c f1[c,x,y] * f2[c,x+dx,y+dy], zero-padded f2.
CorrelationVolume correlation_volume(const nn::Tensor& f1, const nn::Tensor& f2,
                                     const CorrelationSpec& spec);
void correlation_backward(const nn::Tensor& g_vol, const nn::Tensor& f1, const nn::Tensor& f2,
                          const CorrelationSpec& spec, nn::Tensor& g_f1, nn::Tensor& g_f2);

}  // namespace bevo
