//! Pyramidal dense optical flow.
//!
//! The energy is `F = F_smooth + β · F_attach` with an L1 brightness-constancy
//! attachment and a total-variation smoothness term. Each pyramid level warps
//! the second image by the current flow, linearizes the attachment around it,
//! and alternates a pointwise thresholding step on the attachment with a
//! regularization step. The regularization operator is pluggable through
//! [`Regularizer`].
//!
//! `β` is expressed against 8-bit intensities: images are handled in `[0, 1]`
//! and the attachment is weighted by `β · 255`, so `β = 0.15` matches the
//! usual TV-L1 setting on `[0, 255]` data.

use serde::{Deserialize, Serialize};

use crate::data::GrayImage;
use crate::error::{Error, Result};

/// Smallest side length allowed at the coarsest pyramid level.
pub const MIN_LEVEL_SIZE: usize = 8;

const GRAD_IS_ZERO: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            width,
            height,
            u: vec![0.0; width * height],
            v: vec![0.0; width * height],
        }
    }

    pub fn new(width: usize, height: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != width * height || v.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} flow values", width * height),
                found: format!("{} / {}", u.len(), v.len()),
            });
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("flow contains non-finite values".into()));
        }
        Ok(FlowField { width, height, u, v })
    }

    pub fn uniform(width: usize, height: usize, u: f64, v: f64) -> Self {
        FlowField {
            width,
            height,
            u: vec![u; width * height],
            v: vec![v; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Horizontal displacement, row-major.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Vertical displacement, row-major.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn max_magnitude(&self) -> f64 {
        self.u.iter().zip(&self.v).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
    }

    /// Renders `u` and `v` as grayscale images: mid-gray is zero motion and
    /// `gain` is intensity per pixel of displacement.
    pub fn to_images(&self, gain: f64) -> (GrayImage, GrayImage) {
        let w = self.width;
        let render = |c: &[f64]| GrayImage::from_fn(w, self.height, |x, y| 0.5 + gain * c[y * w + x]);
        (render(&self.u), render(&self.v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    /// Dual (Chambolle) total-variation step.
    TotalVariation,
    /// 3×3 median filter of the flow.
    Median,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Attachment weight, relative to 8-bit intensities.
    pub beta: f64,
    pub pyramid_levels: usize,
    pub scale_factor: f64,
    pub warps_per_level: usize,
    pub iterations_per_warp: usize,
    /// Coupling between the thresholded and the regularized flow.
    pub theta: f64,
    /// Dual step of the total-variation regularizer.
    pub tau: f64,
    pub regularizer: RegularizerKind,
    /// Median-filter the flow after every warp.
    pub median_after_warp: bool,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            beta: 0.15,
            pyramid_levels: 4,
            scale_factor: 0.5,
            warps_per_level: 3,
            iterations_per_warp: 50,
            theta: 0.3,
            tau: 0.25,
            regularizer: RegularizerKind::TotalVariation,
            median_after_warp: false,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be positive, found {}", self.beta));
        }
        if self.pyramid_levels == 0 || self.warps_per_level == 0 || self.iterations_per_warp == 0 {
            return bad("levels, warps and iterations must all be at least 1".into());
        }
        if !(self.scale_factor > 0.0 && self.scale_factor < 1.0) {
            return bad(format!("scale factor must lie in (0, 1), found {}", self.scale_factor));
        }
        if !(self.theta > 0.0 && self.tau > 0.0 && self.tau <= 0.25) {
            return bad("theta must be positive and tau in (0, 0.25]".into());
        }
        Ok(())
    }

    /// Attachment weight on `[0, 1]` intensities.
    pub fn data_weight(&self) -> f64 {
        self.beta * 255.0
    }

    /// Number of levels that fit an image of the given size, capped at the
    /// requested count and never below one.
    pub fn usable_levels(&self, width: usize, height: usize) -> usize {
        let mut levels = 1;
        let (mut w, mut h) = (width, height);
        while levels < self.pyramid_levels {
            let (nw, nh) = (scaled(w, self.scale_factor), scaled(h, self.scale_factor));
            if nw.min(nh) < MIN_LEVEL_SIZE {
                break;
            }
            (w, h) = (nw, nh);
            levels += 1;
        }
        levels
    }
}

fn scaled(n: usize, s: f64) -> usize {
    ((n as f64 * s) + 0.5).floor() as usize
}

/// Gaussian pyramid; level 0 is the input.
pub fn build_pyramid(img: &GrayImage, params: &FlowParams) -> Result<Vec<GrayImage>> {
    params.validate()?;
    if params.usable_levels(img.width(), img.height()) < params.pyramid_levels
        || img.width().min(img.height()) < MIN_LEVEL_SIZE
    {
        return Err(Error::InvalidParameter(format!(
            "{}x{} image is too small for {} pyramid levels at scale {}",
            img.width(),
            img.height(),
            params.pyramid_levels,
            params.scale_factor
        )));
    }
    Ok(pyramid(img, params.pyramid_levels, params.scale_factor))
}

fn pyramid(img: &GrayImage, levels: usize, scale: f64) -> Vec<GrayImage> {
    let mut out = vec![img.clone()];
    let sigma = 0.6 * (1.0 / (scale * scale) - 1.0).sqrt();
    for _ in 1..levels {
        let prev = out.last().expect("level 0 present");
        out.push(downsample(&gaussian_blur(prev, sigma), scale));
    }
    out
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|x| x / sum).collect()
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let src = img.pixels();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let xx = (x as i64 + j as i64 - r).clamp(0, w as i64 - 1) as usize;
                acc += kv * src[y * w + xx];
            }
            tmp[y * w + x] = acc;
        }
    }
    GrayImage::from_fn(w, h, |x, y| {
        k.iter()
            .enumerate()
            .map(|(j, kv)| {
                let yy = (y as i64 + j as i64 - r).clamp(0, h as i64 - 1) as usize;
                kv * tmp[yy * w + x]
            })
            .sum()
    })
}

fn downsample(img: &GrayImage, scale: f64) -> GrayImage {
    let (nw, nh) = (scaled(img.width(), scale), scaled(img.height(), scale));
    let (sx, sy) = (img.width() as f64 / nw as f64, img.height() as f64 / nh as f64);
    GrayImage::from_fn(nw, nh, |x, y| {
        bilinear(
            img.pixels(),
            img.width(),
            img.height(),
            (x as f64 + 0.5) * sx - 0.5,
            (y as f64 + 0.5) * sy - 0.5,
        )
    })
}

/// Bilinear sample with coordinates clamped to the image.
#[inline]
fn bilinear(data: &[f64], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let top = data[y0 * w + x0] * (1.0 - fx) + data[y0 * w + x1] * fx;
    let bottom = data[y1 * w + x0] * (1.0 - fx) + data[y1 * w + x1] * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Samples `img` at `(x + u, y + v)`; positions outside the image take the
/// nearest edge value.
pub fn warp(img: &GrayImage, flow: &FlowField) -> Result<GrayImage> {
    if (img.width(), img.height()) != (flow.width, flow.height) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", img.width(), img.height()),
            found: format!("{}x{}", flow.width, flow.height),
        });
    }
    let w = img.width();
    let data = warp_raw(img.pixels(), w, img.height(), &flow.u, &flow.v);
    Ok(GrayImage::from_fn(w, img.height(), |x, y| data[y * w + x]))
}

fn warp_raw(src: &[f64], w: usize, h: usize, u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            out.push(bilinear(src, w, h, x as f64 + u[i], y as f64 + v[i]));
        }
    }
    out
}

/// Central-difference gradient with replicated borders.
fn central_gradient(img: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        let (ym, yp) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xm, xp) = (x.saturating_sub(1), (x + 1).min(w - 1));
            gx[y * w + x] = (img[y * w + xp] - img[y * w + xm]) / 2.0;
            gy[y * w + x] = (img[yp * w + x] - img[ym * w + x]) / 2.0;
        }
    }
    (gx, gy)
}

/// Forward differences, zero on the last column/row.
fn forward_gradient(f: &[f64], w: usize, h: usize, gx: &mut [f64], gy: &mut [f64]) {
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            gx[i] = if x + 1 < w { f[i + 1] - f[i] } else { 0.0 };
            gy[i] = if y + 1 < h { f[i + w] - f[i] } else { 0.0 };
        }
    }
}

/// Discrete divergence, the negative adjoint of [`forward_gradient`].
#[cfg(test)]
fn divergence(px: &[f64], py: &[f64], w: usize, h: usize, out: &mut [f64]) {
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let dx = match x {
                0 => px[i],
                _ if x + 1 == w => -px[i - 1],
                _ => px[i] - px[i - 1],
            };
            let dy = match y {
                0 => py[i],
                _ if y + 1 == h => -py[i - w],
                _ => py[i] - py[i - w],
            };
            out[i] = if w == 1 { 0.0 } else { dx } + if h == 1 { 0.0 } else { dy };
        }
    }
}

fn total_variation(f: &[f64], w: usize, h: usize) -> f64 {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    forward_gradient(f, w, h, &mut gx, &mut gy);
    gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt()).sum()
}

/// Discrete energy `TV(u) + TV(v) + β·255 · Σ |I1(x + w) − I0(x)|`.
pub fn flow_energy(i0: &GrayImage, i1: &GrayImage, flow: &FlowField, params: &FlowParams) -> Result<f64> {
    let warped = warp(i1, flow)?;
    let attach: f64 = warped
        .pixels()
        .iter()
        .zip(i0.pixels())
        .map(|(a, b)| (a - b).abs())
        .sum();
    let smooth = total_variation(&flow.u, flow.width, flow.height) + total_variation(&flow.v, flow.width, flow.height);
    Ok(smooth + params.data_weight() * attach)
}

/// Regularization operator applied after each thresholding step.
pub trait Regularizer {
    /// Resets internal state for a level of the given size.
    fn begin_level(&mut self, width: usize, height: usize);

    /// Writes the regularized version of `aux` into `out`. `component` is 0
    /// for the horizontal and 1 for the vertical flow.
    fn smooth(&mut self, component: usize, aux: &[f64], out: &mut [f64], width: usize, height: usize);
}

/// Chambolle's dual projection for the total-variation term.
#[derive(Clone, Debug)]
pub struct TotalVariation {
    theta: f64,
    tau: f64,
    dual: [(Vec<f64>, Vec<f64>); 2],
}

impl TotalVariation {
    pub fn new(theta: f64, tau: f64) -> Self {
        TotalVariation {
            theta,
            tau,
            dual: Default::default(),
        }
    }
}

impl Regularizer for TotalVariation {
    fn begin_level(&mut self, width: usize, height: usize) {
        let n = width * height;
        for (px, py) in &mut self.dual {
            *px = vec![0.0; n];
            *py = vec![0.0; n];
        }
    }

    fn smooth(&mut self, component: usize, aux: &[f64], out: &mut [f64], w: usize, h: usize) {
        let (px, py) = &mut self.dual[component];
        let n = w * h;
        let (px, py, aux, out) = (&mut px[..n], &mut py[..n], &aux[..n], &mut out[..n]);
        // u = v + θ div p, with the divergence of `divergence` written inline;
        // p vanishes on the last column and row because the gradient does
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let mut d = px[i] + py[i];
                if x > 0 {
                    d -= px[i - 1];
                }
                if y > 0 {
                    d -= py[i - w];
                }
                out[i] = aux[i] + self.theta * d;
            }
        }
        let step = self.tau / self.theta;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let gx = if x + 1 < w { out[i + 1] - out[i] } else { 0.0 };
                let gy = if y + 1 < h { out[i + w] - out[i] } else { 0.0 };
                let norm = 1.0 + step * (gx * gx + gy * gy).sqrt();
                px[i] = (px[i] + step * gx) / norm;
                py[i] = (py[i] + step * gy) / norm;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MedianSmoothing;

impl Regularizer for MedianSmoothing {
    fn begin_level(&mut self, _: usize, _: usize) {}

    fn smooth(&mut self, _: usize, aux: &[f64], out: &mut [f64], w: usize, h: usize) {
        out.copy_from_slice(&median3x3(aux, w, h));
    }
}

fn median3x3(f: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    let mut win = [0.0; 9];
    for y in 0..h {
        for x in 0..w {
            let mut n = 0;
            for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    win[n] = f[yy * w + xx];
                    n += 1;
                }
            }
            let win = &mut win[..n];
            win.sort_by(f64::total_cmp);
            out[y * w + x] = if n % 2 == 1 {
                win[n / 2]
            } else {
                (win[n / 2 - 1] + win[n / 2]) / 2.0
            };
        }
    }
    out
}

impl RegularizerKind {
    pub fn build(self, params: &FlowParams) -> Box<dyn Regularizer> {
        match self {
            RegularizerKind::TotalVariation => Box::new(TotalVariation::new(params.theta, params.tau)),
            RegularizerKind::Median => Box::new(MedianSmoothing),
        }
    }
}

/// Energies recorded after each warp of one pyramid level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelTrace {
    pub level: usize,
    pub width: usize,
    pub height: usize,
    pub energies: Vec<f64>,
}

/// Dense flow from `i0` to `i1`: `i1(x + flow(x)) ≈ i0(x)`.
pub fn compute_flow(i0: &GrayImage, i1: &GrayImage, params: &FlowParams) -> Result<FlowField> {
    let mut reg = params.regularizer.build(params);
    solve(i0, i1, params, reg.as_mut(), false).map(|(f, _)| f)
}

/// As [`compute_flow`], also returning the per-warp energies of every level.
/// Tracing does not change the result.
pub fn compute_flow_traced(
    i0: &GrayImage,
    i1: &GrayImage,
    params: &FlowParams,
) -> Result<(FlowField, Vec<LevelTrace>)> {
    let mut reg = params.regularizer.build(params);
    solve(i0, i1, params, reg.as_mut(), true)
}

/// Runs the solver with a caller-supplied regularizer.
pub fn compute_flow_with(
    i0: &GrayImage,
    i1: &GrayImage,
    params: &FlowParams,
    regularizer: &mut dyn Regularizer,
) -> Result<(FlowField, Vec<LevelTrace>)> {
    solve(i0, i1, params, regularizer, true)
}

fn solve(
    i0: &GrayImage,
    i1: &GrayImage,
    params: &FlowParams,
    reg: &mut dyn Regularizer,
    trace: bool,
) -> Result<(FlowField, Vec<LevelTrace>)> {
    params.validate()?;
    if (i0.width(), i0.height()) != (i1.width(), i1.height()) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", i0.width(), i0.height()),
            found: format!("{}x{}", i1.width(), i1.height()),
        });
    }
    let levels = params.usable_levels(i0.width(), i0.height());
    let p0 = pyramid(i0, levels, params.scale_factor);
    let p1 = pyramid(i1, levels, params.scale_factor);

    let mut traces = Vec::new();
    let mut flow: Option<FlowField> = None;
    for level in (0..levels).rev() {
        let (a, b) = (&p0[level], &p1[level]);
        let (w, h) = (a.width(), a.height());
        let mut f = match flow.take() {
            None => FlowField::zeros(w, h),
            Some(coarse) => upsample_flow(&coarse, w, h, 1.0 / params.scale_factor),
        };
        reg.begin_level(w, h);
        let mut energies = Vec::new();
        let mut energy = flow_energy(a, b, &f, params)?;
        for _ in 0..params.warps_per_level {
            let previous = f.clone();
            refine_warp(a, b, &mut f, params, reg);
            if params.median_after_warp {
                f.u = median3x3(&f.u, w, h);
                f.v = median3x3(&f.v, w, h);
            }
            energy = accept_descent(a, b, &previous, &mut f, energy, params)?;
            if trace {
                energies.push(energy);
            }
        }
        if trace {
            traces.push(LevelTrace {
                level,
                width: w,
                height: h,
                energies,
            });
        }
        flow = Some(f);
    }
    Ok((flow.expect("at least one level"), traces))
}

/// The linearized subproblem does not guarantee a lower true energy, so a
/// warp that raises it is pulled back toward the previous flow by halving the
/// step; after a few halvings the previous flow is kept.
fn accept_descent(
    i0: &GrayImage,
    i1: &GrayImage,
    previous: &FlowField,
    f: &mut FlowField,
    previous_energy: f64,
    params: &FlowParams,
) -> Result<f64> {
    let candidate = f.clone();
    let mut step = 1.0;
    for _ in 0..6 {
        if step < 1.0 {
            for i in 0..f.u.len() {
                f.u[i] = previous.u[i] + step * (candidate.u[i] - previous.u[i]);
                f.v[i] = previous.v[i] + step * (candidate.v[i] - previous.v[i]);
            }
        }
        let e = flow_energy(i0, i1, f, params)?;
        if e <= previous_energy {
            return Ok(e);
        }
        step *= 0.5;
    }
    *f = previous.clone();
    Ok(previous_energy)
}

/// One warp: linearize around the current flow and iterate thresholding and
/// regularization.
fn refine_warp(i0: &GrayImage, i1: &GrayImage, f: &mut FlowField, params: &FlowParams, reg: &mut dyn Regularizer) {
    let (w, h) = (i0.width(), i0.height());
    let n = w * h;
    let warped = warp_raw(i1.pixels(), w, h, &f.u, &f.v);
    let (ix, iy) = central_gradient(&warped, w, h);
    let grad2: Vec<f64> = ix.iter().zip(&iy).map(|(a, b)| a * a + b * b).collect();
    // residual at zero increment: I1w - I0 - ∇I1w · w0
    let rho_c: Vec<f64> = (0..n)
        .map(|i| warped[i] - i0.pixels()[i] - ix[i] * f.u[i] - iy[i] * f.v[i])
        .collect();
    let lt = params.data_weight() * params.theta;

    let mut aux_u = vec![0.0; n];
    let mut aux_v = vec![0.0; n];
    for _ in 0..params.iterations_per_warp {
        for i in 0..n {
            let rho = rho_c[i] + ix[i] * f.u[i] + iy[i] * f.v[i];
            let (du, dv) = if rho < -lt * grad2[i] {
                (lt * ix[i], lt * iy[i])
            } else if rho > lt * grad2[i] {
                (-lt * ix[i], -lt * iy[i])
            } else if grad2[i] > GRAD_IS_ZERO {
                let s = -rho / grad2[i];
                (s * ix[i], s * iy[i])
            } else {
                (0.0, 0.0)
            };
            aux_u[i] = f.u[i] + du;
            aux_v[i] = f.v[i] + dv;
        }
        reg.smooth(0, &aux_u, &mut f.u, w, h);
        reg.smooth(1, &aux_v, &mut f.v, w, h);
    }
}

fn upsample_flow(coarse: &FlowField, w: usize, h: usize, factor: f64) -> FlowField {
    let (cw, ch) = (coarse.width, coarse.height);
    let (sx, sy) = (cw as f64 / w as f64, ch as f64 / h as f64);
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (cx, cy) = ((x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5);
            u.push(bilinear(&coarse.u, cw, ch, cx, cy) * factor);
            v.push(bilinear(&coarse.v, cw, ch, cx, cy) * factor);
        }
    }
    FlowField {
        width: w,
        height: h,
        u,
        v,
    }
}
