//! Smoothed-functional gradient terms.
//!
//! The per-sample terms are pure functions of an already-observed cost and a
//! standard perturbation. Averaging them (by Monte Carlo here, or by the fast
//! recursion in [`crate::optimizer`]) estimates the gradient of the smoothed
//! objective.

use crate::error::{Error, Result};
use crate::qgaussian::{sample_standard, Perturbation, QKernel};
use crate::rng::RngStream;

/// One-simulation sample: `h` observed under `theta + beta * eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSampleOne {
    pub eta: Perturbation,
    pub cost: f64,
}

/// Two-simulation sample: `h` under `theta + beta * eta` and `theta - beta * eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSampleTwo {
    pub eta: Perturbation,
    pub cost_plus: f64,
    pub cost_minus: f64,
}

fn scaled_eta(eta: &Perturbation, kernel: &QKernel, numerator: f64, out: &mut [f64]) -> Result<()> {
    let rho = eta.rho();
    if !(rho > 0.0) {
        return Err(Error::NonPositiveRho { rho });
    }
    if eta.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: eta.dim(),
        });
    }
    let factor = numerator / (kernel.beta() * kernel.shape_factor() * rho);
    for (o, e) in out.iter_mut().zip(eta.eta()) {
        *o = e * factor;
    }
    Ok(())
}

/// `2 eta h / (beta (N + 2 - N q) rho(eta))`, written into `out`.
pub fn sf_term_one_into(
    eta: &Perturbation,
    cost: f64,
    kernel: &QKernel,
    out: &mut [f64],
) -> Result<()> {
    scaled_eta(eta, kernel, 2.0 * cost, out)
}

/// `eta (h+ - h-) / (beta (N + 2 - N q) rho(eta))`, written into `out`.
pub fn sf_term_two_into(
    eta: &Perturbation,
    cost_plus: f64,
    cost_minus: f64,
    kernel: &QKernel,
    out: &mut [f64],
) -> Result<()> {
    scaled_eta(eta, kernel, cost_plus - cost_minus, out)
}

pub fn sf_term_one(sample: &GradientSampleOne, kernel: &QKernel) -> Result<Vec<f64>> {
    let mut out = vec![0.0; sample.eta.dim()];
    sf_term_one_into(&sample.eta, sample.cost, kernel, &mut out)?;
    Ok(out)
}

pub fn sf_term_two(sample: &GradientSampleTwo, kernel: &QKernel) -> Result<Vec<f64>> {
    let mut out = vec![0.0; sample.eta.dim()];
    sf_term_two_into(
        &sample.eta,
        sample.cost_plus,
        sample.cost_minus,
        kernel,
        &mut out,
    )?;
    Ok(out)
}

/// Sample mean and standard error per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub samples: usize,
}

/// Welford accumulator over vectors.
#[derive(Debug, Clone)]
pub struct VecMoments {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VecMoments {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    pub fn variance(&self) -> Vec<f64> {
        let denom = (self.count.max(2) - 1) as f64;
        self.m2.iter().map(|s| s / denom).collect()
    }

    pub fn finish(self) -> McEstimate {
        let n = self.count.max(1) as f64;
        let std_err = self.variance().iter().map(|v| (v / n).sqrt()).collect();
        McEstimate {
            mean: self.mean,
            std_err,
            samples: self.count,
        }
    }
}

/// Monte-Carlo estimate of `E[f(theta - beta eta)]`.
pub fn smoothed_value<F>(
    f: F,
    theta: &[f64],
    kernel: &QKernel,
    n_samples: usize,
    stream: &mut RngStream,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    check_theta(theta, kernel)?;
    let mut x = vec![0.0; theta.len()];
    let mut sum = 0.0;
    for _ in 0..n_samples {
        let p = sample_standard(kernel.q(), kernel.dim(), stream)?;
        for ((xi, t), e) in x.iter_mut().zip(theta).zip(p.eta()) {
            *xi = t - kernel.beta() * e;
        }
        sum += f(&x);
    }
    Ok(sum / n_samples.max(1) as f64)
}

fn check_theta(theta: &[f64], kernel: &QKernel) -> Result<()> {
    if theta.len() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: theta.len(),
        });
    }
    Ok(())
}

/// One-sided Monte-Carlo gradient estimate with per-coordinate standard errors.
pub fn smoothed_gradient_mc_with_error<F>(
    f: F,
    theta: &[f64],
    kernel: &QKernel,
    n_samples: usize,
    stream: &mut RngStream,
) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    check_theta(theta, kernel)?;
    let dim = theta.len();
    let mut acc = VecMoments::new(dim);
    let mut x = vec![0.0; dim];
    let mut term = vec![0.0; dim];
    for _ in 0..n_samples {
        let p = sample_standard(kernel.q(), dim, stream)?;
        for ((xi, t), e) in x.iter_mut().zip(theta).zip(p.eta()) {
            *xi = t + kernel.beta() * e;
        }
        sf_term_one_into(&p, f(&x), kernel, &mut term)?;
        acc.push(&term);
    }
    Ok(acc.finish())
}

/// Two-sided Monte-Carlo gradient estimate with per-coordinate standard errors.
pub fn smoothed_gradient_two_mc_with_error<F>(
    f: F,
    theta: &[f64],
    kernel: &QKernel,
    n_samples: usize,
    stream: &mut RngStream,
) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    check_theta(theta, kernel)?;
    let dim = theta.len();
    let mut acc = VecMoments::new(dim);
    let mut xp = vec![0.0; dim];
    let mut xm = vec![0.0; dim];
    let mut term = vec![0.0; dim];
    for _ in 0..n_samples {
        let p = sample_standard(kernel.q(), dim, stream)?;
        for (((a, b), t), e) in xp.iter_mut().zip(xm.iter_mut()).zip(theta).zip(p.eta()) {
            *a = t + kernel.beta() * e;
            *b = t - kernel.beta() * e;
        }
        sf_term_two_into(&p, f(&xp), f(&xm), kernel, &mut term)?;
        acc.push(&term);
    }
    Ok(acc.finish())
}

/// One-sided Monte-Carlo estimate of the smoothed gradient.
pub fn smoothed_gradient_mc<F>(
    f: F,
    theta: &[f64],
    kernel: &QKernel,
    n_samples: usize,
    stream: &mut RngStream,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    smoothed_gradient_mc_with_error(f, theta, kernel, n_samples, stream).map(|e| e.mean)
}
