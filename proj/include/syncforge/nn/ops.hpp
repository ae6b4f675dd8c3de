#pragma once

#include <functional>
#include <vector>

#include "syncforge/augment.hpp"
#include "syncforge/geometry.hpp"
#include "syncforge/nn/graph.hpp"

// Differentiable operator set. Every operator computes its forward value
// eagerly and records an exact analytic backward on the graph. Tensors are
// NCHW unless stated otherwise.
namespace syncforge::nn {

/// 2-d convolution (cross-correlation), zero padding.
/// x [N, Ci, H, W], weight [Co, Ci, kh, kw], bias [Co].
Var conv2d(Var x, Var weight, Var bias, int stride, int pad);

/// Nearest-neighbour upsampling by a factor of 2.
Var upsample_nearest2(Var x);

/// Channel concatenation of two [N, *, H, W] tensors.
Var concat_channels(Var a, Var b);

Var add(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scalar_mul(Var x, double s);

/// Repeat a [N, 1, H, W] tensor along the channel axis.
Var broadcast_channels(Var x, int channels);

Var tanh(Var x);
Var relu(Var x);
Var leaky_relu(Var x, double slope);

/// Clamp to [0, 1]; the gradient is zero where the input was outside.
Var clamp01(Var x);

/// [N, C, H, W] -> [N, C]
Var global_avg_pool(Var x);

/// x [N, In], weight [Out, In], bias [Out] -> [N, Out]
Var linear(Var x, Var weight, Var bias);

/// Per-sample bilinear resampling through precomputed grids. Gradients
/// reach the pixel values only; the grids are constants.
Var grid_sample(Var x, const std::vector<SamplingGrid>& grids, double fill = 0.0);

/// BT.601 luma of [N, 3, H, W] -> [N, 1, H, W].
Var luma(Var x);

/// Per-sample valuemetric transform on [N, 3, H, W] (one transform per
/// sample). The forward value equals apply_valuemetric exactly. Brightness,
/// contrast, saturation, hue, grayscale and blur backpropagate their exact
/// Jacobian (zero where the output clamped); JPEG is straight-through.
Var valuemetric(Var x, const std::vector<ValuemetricTransform>& transforms);

/// Forward f(x), backward identity.
Var straight_through(Var x, const std::function<Tensor(const Tensor&)>& f,
                     const char* name = "straight_through");

/// sum_j |pred - target| over the feature axis, averaged over the batch.
/// pred, target [N, F].
Var l1_loss(Var pred, Var target);

/// Mean of all elements -> [1].
Var mean(Var x);

/// mean(relu(1 - x)) -> [1]
Var hinge_real(Var x);
/// mean(relu(1 + x)) -> [1]
Var hinge_fake(Var x);

}  // namespace syncforge::nn
