#pragma once

#include "steinlab/measures.hpp"

#include <functional>

namespace steinlab {

enum class ConvolutionMethod { direct, fft, automatic };

/// Grid quadrature of a convolution: out_i = dx sum_j k(x_i - x_j + offset) f_j
/// for the cell centres x_i of a uniform grid. The FFT path zero-pads to a
/// linear convolution, so no periodic wrap-around enters. `automatic` uses the
/// FFT for n >= 1024.
Vector grid_convolve(const Vector& f, double dx, const std::function<double(double)>& k, double offset = 0.0,
                     ConvolutionMethod method = ConvolutionMethod::automatic);

/// Node derivative by central differences of the given order (2 or 4) inside,
/// one-sided at the ends. The fourth-order stencil falls back to second order
/// next to the boundary.
Vector central_difference(const Vector& f, double dx, int order = 2);

}  // namespace steinlab
