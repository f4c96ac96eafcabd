#pragma once

#include "tpflow/field.hpp"

namespace tpflow {

enum class Axis { t, x, y, z };

Axis spatial_axis(int i);  // 0 -> x, 1 -> y, 2 -> z

// Time average at every point, replicated over all time samples.
Field project_steady(const Field& f);
// f - project_steady(f).
Field project_oscillatory(const Field& f);

// Partial derivative with periodic wrap-around. Time is always differentiated spectrally;
// space spectrally on the spectral backend and by centered differences on the exterior backend.
// Spectral first derivatives drop the Nyquist coefficient.
Field diff(const Field& f, Axis axis);
// Second spatial derivative d_i d_j (i, j in 0..2). Pure second derivatives use the
// three-point stencil (exterior) or -xi^2 with the Nyquist coefficient kept (spectral).
Field second_diff(const Field& f, int i, int j);

Field divergence(const Field& u);
Field gradient(const Field& p);
Field laplacian(const Field& f);

// (u . grad) v computed pointwise; the spectral backend dealiases factors and product by the 2/3 rule.
Field advect(const Field& u, const Field& v);
// Zero every space-time coefficient with 3|m| >= n on some axis.
Field dealias(const Field& f);
// Remove the temporal Nyquist coefficient.
Field filter_time_nyquist(const Field& f);

// Helmholtz projection onto discretely divergence-free fields (spectral backend only).
Field leray_project(const Field& u);

}  // namespace tpflow
