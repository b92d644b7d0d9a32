//! 3D convolution (cross-correlation) and max pooling, forward and backward.
//!
//! Layout is channel-major `[C, D, H, W]` with `x` contiguous. The stride-1
//! path accumulates whole rows at a time so the inner loop vectorizes.

use super::{validate_slice_finite, Tensor};
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// `[channels, depth, height, width]`
pub type Dims = [usize; 4];

fn out_spatial(input: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    let padded = input + 2 * padding;
    if stride == 0 || padded < kernel {
        return Err(CoreError::config(format!(
            "kernel {kernel} / stride {stride} / padding {padding} invalid for extent {input}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// Cross-correlation of a `[C_in,D,H,W]` input with `[C_out,C_in,k,k,k]`
/// weights plus per-output-channel bias.
pub fn conv3d_forward<T: Scalar>(
    input: &[T],
    in_dims: Dims,
    weight: &[T],
    bias: &[T],
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<(Vec<T>, Dims)> {
    let [c_in, d, h, w] = in_dims;
    if input.len() != c_in * d * h * w {
        return Err(CoreError::config("conv3d: input length does not match dims"));
    }
    let c_out = bias.len();
    if weight.len() != c_out * c_in * kernel * kernel * kernel {
        return Err(CoreError::config("conv3d: weight length does not match channels/kernel"));
    }
    let od = out_spatial(d, kernel, stride, padding)?;
    let oh = out_spatial(h, kernel, stride, padding)?;
    let ow = out_spatial(w, kernel, stride, padding)?;
    let out_dims = [c_out, od, oh, ow];
    let o_sz = od * oh * ow;
    let i_sz = d * h * w;
    let mut out = vec![T::zero(); c_out * o_sz];

    for co in 0..c_out {
        let out_c = &mut out[co * o_sz..(co + 1) * o_sz];
        let b = bias[co];
        out_c.iter_mut().for_each(|v| *v = b);
        for ci in 0..c_in {
            let in_c = &input[ci * i_sz..(ci + 1) * i_sz];
            let w_base = ((co * c_in) + ci) * kernel * kernel * kernel;
            for kz in 0..kernel {
                for ky in 0..kernel {
                    for kx in 0..kernel {
                        let wv = weight[w_base + (kz * kernel + ky) * kernel + kx];
                        if stride == 1 {
                            // Output index o maps to input index o + k - padding.
                            let zlo = padding.saturating_sub(kz);
                            let zhi = (d + padding - kz).min(od);
                            let ylo = padding.saturating_sub(ky);
                            let yhi = (h + padding - ky).min(oh);
                            let xlo = padding.saturating_sub(kx);
                            let xhi = (w + padding - kx).min(ow);
                            if zlo >= zhi || ylo >= yhi || xlo >= xhi {
                                continue;
                            }
                            let span = xhi - xlo;
                            for oz in zlo..zhi {
                                let iz = oz + kz - padding;
                                for oy in ylo..yhi {
                                    let iy = oy + ky - padding;
                                    let orow =
                                        &mut out_c[(oz * oh + oy) * ow + xlo..][..span];
                                    let irow =
                                        &in_c[(iz * h + iy) * w + (xlo + kx - padding)..][..span];
                                    for (o, i) in orow.iter_mut().zip(irow) {
                                        *o = *o + wv * *i;
                                    }
                                }
                            }
                        } else {
                            for oz in 0..od {
                                let iz = oz * stride + kz;
                                if iz < padding || iz - padding >= d {
                                    continue;
                                }
                                let iz = iz - padding;
                                for oy in 0..oh {
                                    let iy = oy * stride + ky;
                                    if iy < padding || iy - padding >= h {
                                        continue;
                                    }
                                    let iy = iy - padding;
                                    for ox in 0..ow {
                                        let ix = ox * stride + kx;
                                        if ix < padding || ix - padding >= w {
                                            continue;
                                        }
                                        let ix = ix - padding;
                                        out_c[(oz * oh + oy) * ow + ox] = out_c
                                            [(oz * oh + oy) * ow + ox]
                                            + wv * in_c[(iz * h + iy) * w + ix];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    validate_slice_finite(&out, "conv3d_forward")?;
    Ok((out, out_dims))
}

/// Backward pass paired with [`conv3d_forward`]. Accumulates into
/// `grad_weight`/`grad_bias` and returns the input gradient.
#[allow(clippy::too_many_arguments)]
pub fn conv3d_backward<T: Scalar>(
    input: &[T],
    in_dims: Dims,
    weight: &[T],
    grad_out: &[T],
    out_dims: Dims,
    kernel: usize,
    stride: usize,
    padding: usize,
    grad_weight: &mut [T],
    grad_bias: &mut [T],
) -> Result<Vec<T>> {
    let [c_in, d, h, w] = in_dims;
    let [c_out, od, oh, ow] = out_dims;
    let i_sz = d * h * w;
    let o_sz = od * oh * ow;
    let mut grad_in = vec![T::zero(); c_in * i_sz];

    for co in 0..c_out {
        let go_c = &grad_out[co * o_sz..(co + 1) * o_sz];
        let mut gb = T::zero();
        for v in go_c {
            gb = gb + *v;
        }
        grad_bias[co] = grad_bias[co] + gb;
        for ci in 0..c_in {
            let in_c = &input[ci * i_sz..(ci + 1) * i_sz];
            let gi_c = &mut grad_in[ci * i_sz..(ci + 1) * i_sz];
            let w_base = ((co * c_in) + ci) * kernel * kernel * kernel;
            for kz in 0..kernel {
                for ky in 0..kernel {
                    for kx in 0..kernel {
                        let widx = w_base + (kz * kernel + ky) * kernel + kx;
                        let wv = weight[widx];
                        let mut gw = T::zero();
                        if stride == 1 {
                            let zlo = padding.saturating_sub(kz);
                            let zhi = (d + padding - kz).min(od);
                            let ylo = padding.saturating_sub(ky);
                            let yhi = (h + padding - ky).min(oh);
                            let xlo = padding.saturating_sub(kx);
                            let xhi = (w + padding - kx).min(ow);
                            if zlo >= zhi || ylo >= yhi || xlo >= xhi {
                                continue;
                            }
                            let span = xhi - xlo;
                            for oz in zlo..zhi {
                                let iz = oz + kz - padding;
                                for oy in ylo..yhi {
                                    let iy = oy + ky - padding;
                                    let gorow = &go_c[(oz * oh + oy) * ow + xlo..][..span];
                                    let ibase = (iz * h + iy) * w + (xlo + kx - padding);
                                    let irow = &in_c[ibase..][..span];
                                    let girow = &mut gi_c[ibase..][..span];
                                    for ((gi, go), iv) in
                                        girow.iter_mut().zip(gorow).zip(irow)
                                    {
                                        *gi = *gi + wv * *go;
                                        gw = gw + *go * *iv;
                                    }
                                }
                            }
                        } else {
                            for oz in 0..od {
                                let iz = oz * stride + kz;
                                if iz < padding || iz - padding >= d {
                                    continue;
                                }
                                let iz = iz - padding;
                                for oy in 0..oh {
                                    let iy = oy * stride + ky;
                                    if iy < padding || iy - padding >= h {
                                        continue;
                                    }
                                    let iy = iy - padding;
                                    for ox in 0..ow {
                                        let ix = ox * stride + kx;
                                        if ix < padding || ix - padding >= w {
                                            continue;
                                        }
                                        let ix = ix - padding;
                                        let go = go_c[(oz * oh + oy) * ow + ox];
                                        gi_c[(iz * h + iy) * w + ix] =
                                            gi_c[(iz * h + iy) * w + ix] + wv * go;
                                        gw = gw + go * in_c[(iz * h + iy) * w + ix];
                                    }
                                }
                            }
                        }
                        grad_weight[widx] = grad_weight[widx] + gw;
                    }
                }
            }
        }
    }
    validate_slice_finite(&grad_in, "conv3d_backward")?;
    Ok(grad_in)
}

/// Max pooling over non-overlapping `kernel`-sized blocks (stride == kernel).
/// Returns the pooled values plus the flat input index of each maximum,
/// which the backward pass routes gradients through. Ties pick the first
/// maximum in scan order.
pub fn maxpool3d_forward<T: Scalar>(
    input: &[T],
    in_dims: Dims,
    kernel: usize,
) -> Result<(Vec<T>, Vec<u32>, Dims)> {
    let [c, d, h, w] = in_dims;
    if d % kernel != 0 || h % kernel != 0 || w % kernel != 0 {
        return Err(CoreError::config(format!(
            "maxpool3d: extents {d}x{h}x{w} not divisible by kernel {kernel}"
        )));
    }
    let (od, oh, ow) = (d / kernel, h / kernel, w / kernel);
    let o_sz = od * oh * ow;
    let i_sz = d * h * w;
    let mut out = vec![T::zero(); c * o_sz];
    let mut argmax = vec![0u32; c * o_sz];

    for ci in 0..c {
        let in_c = &input[ci * i_sz..(ci + 1) * i_sz];
        for oz in 0..od {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = T::neg_infinity();
                    let mut best_idx = 0usize;
                    for dz in 0..kernel {
                        for dy in 0..kernel {
                            for dx in 0..kernel {
                                let idx = ((oz * kernel + dz) * h + (oy * kernel + dy)) * w
                                    + (ox * kernel + dx);
                                let v = in_c[idx];
                                if v > best {
                                    best = v;
                                    best_idx = idx;
                                }
                            }
                        }
                    }
                    let o = (oz * oh + oy) * ow + ox;
                    out[ci * o_sz + o] = best;
                    argmax[ci * o_sz + o] = (ci * i_sz + best_idx) as u32;
                }
            }
        }
    }
    validate_slice_finite(&out, "maxpool3d_forward")?;
    Ok((out, argmax, [c, od, oh, ow]))
}

/// Scatter output gradients back to the recorded argmax positions.
pub fn maxpool3d_backward<T: Scalar>(
    grad_out: &[T],
    argmax: &[u32],
    in_len: usize,
) -> Vec<T> {
    let mut grad_in = vec![T::zero(); in_len];
    for (go, &idx) in grad_out.iter().zip(argmax) {
        let i = idx as usize;
        grad_in[i] = grad_in[i] + *go;
    }
    grad_in
}

/// Convolution layer owning its parameters and gradient buffers.
#[derive(Debug, Clone)]
pub struct Conv3d<T: Scalar> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl<T: Scalar> Conv3d<T> {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        seed_val: u64,
        name: &str,
    ) -> Self {
        let fan_in = in_channels * kernel * kernel * kernel;
        Conv3d {
            weight: Tensor::uniform_init(
                &[out_channels, in_channels, kernel, kernel, kernel],
                fan_in,
                seed_val,
                name,
            ),
            bias: Tensor::zeros(&[out_channels]),
            kernel,
            stride,
            padding,
        }
    }

    pub fn forward(&self, input: &[T], in_dims: Dims) -> Result<(Vec<T>, Dims)> {
        conv3d_forward(
            input,
            in_dims,
            self.weight.data(),
            self.bias.data(),
            self.kernel,
            self.stride,
            self.padding,
        )
    }

    pub fn backward(
        &mut self,
        input: &[T],
        in_dims: Dims,
        grad_out: &[T],
        out_dims: Dims,
    ) -> Result<Vec<T>> {
        let (kernel, stride, padding) = (self.kernel, self.stride, self.padding);
        let weight = self.weight.data().to_vec();
        conv3d_backward(
            input,
            in_dims,
            &weight,
            grad_out,
            out_dims,
            kernel,
            stride,
            padding,
            self.weight.grad_mut(),
            self.bias.grad_mut(),
        )
    }
}
