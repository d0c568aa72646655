//! The multivariate q-Gaussian with zero q-mean and q-covariance `beta^2 I`.
//!
//! `q = 1` is handled as an explicit Gaussian branch everywhere. All Gamma-ratio
//! constants are evaluated as log-gamma differences.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Kernels with `q` closer than this to `1 + 2/N` are rejected.
pub const UPPER_GUARD: f64 = 1e-9;

/// Largest admissible `q` for dimension `dim` (exclusive).
pub fn q_upper_limit(dim: usize) -> f64 {
    1.0 + 2.0 / dim as f64
}

fn check_q(q: f64, dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    let limit = q_upper_limit(dim);
    if !q.is_finite() || q >= limit - UPPER_GUARD {
        return Err(Error::Domain { q, dim, limit });
    }
    Ok(())
}

/// `N + 2 - N q`.
#[inline]
pub fn shape_factor(q: f64, dim: usize) -> f64 {
    let n = dim as f64;
    n + 2.0 - n * q
}

/// Shape `q`, smoothing scale `beta` and dimension `dim` of a smoothing kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QKernel {
    q: f64,
    beta: f64,
    dim: usize,
}

impl QKernel {
    pub fn new(q: f64, beta: f64, dim: usize) -> Result<Self> {
        check_q(q, dim)?;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self { q, beta, dim })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_gaussian(&self) -> bool {
        self.q == 1.0
    }

    /// `N + 2 - N q`.
    pub fn shape_factor(&self) -> f64 {
        shape_factor(self.q, self.dim)
    }

    /// Squared radius of the standard support ball for `q < 1`; infinite otherwise.
    pub fn support_radius_sq(&self) -> f64 {
        if self.q < 1.0 {
            self.shape_factor() / (1.0 - self.q)
        } else {
            f64::INFINITY
        }
    }
}

/// A standard q-Gaussian draw with its cached rho factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    eta: Vec<f64>,
    rho: f64,
}

impl Perturbation {
    /// Wraps a standard draw, computing `rho(eta)`.
    pub fn new(eta: Vec<f64>, q: f64) -> Self {
        let rho = rho(&eta, q, eta.len());
        Self { eta, rho }
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn into_eta(self) -> Vec<f64> {
        self.eta
    }
}

/// `1 - ((1 - q) / (N + 2 - N q)) * |eta|^2`; exactly 1 at `q = 1`.
pub fn rho(eta: &[f64], q: f64, dim: usize) -> f64 {
    if q == 1.0 {
        return 1.0;
    }
    let norm_sq: f64 = eta.iter().map(|x| x * x).sum();
    1.0 - (1.0 - q) / shape_factor(q, dim) * norm_sq
}

/// Natural log of the normalizing constant `K_{q,N}`.
pub fn ln_normalizing_constant(q: f64, dim: usize) -> Result<f64> {
    check_q(q, dim)?;
    let n = dim as f64;
    let half_n = 0.5 * n;
    let ln_pi = std::f64::consts::PI.ln();
    if q == 1.0 {
        return Ok(half_n * std::f64::consts::TAU.ln());
    }
    let sf = shape_factor(q, dim);
    if q < 1.0 {
        let a = (2.0 - q) / (1.0 - q);
        Ok(half_n * (sf / (1.0 - q)).ln() + half_n * ln_pi + ln_gamma(a) - ln_gamma(a + half_n))
    } else {
        let a = 1.0 / (q - 1.0);
        Ok(half_n * (sf / (q - 1.0)).ln() + half_n * ln_pi + ln_gamma(a - half_n) - ln_gamma(a))
    }
}

/// Normalizing constant `K_{q,N}`; `(2 pi)^{N/2}` at `q = 1`.
pub fn normalizing_constant(q: f64, dim: usize) -> Result<f64> {
    ln_normalizing_constant(q, dim).map(f64::exp)
}

/// Density of the kernel (zero q-mean, q-covariance `beta^2 I`) at `x`.
pub fn density(x: &[f64], kernel: &QKernel) -> f64 {
    debug_assert_eq!(x.len(), kernel.dim);
    let n = kernel.dim as f64;
    let beta = kernel.beta;
    let q = kernel.q;
    let ln_k = ln_normalizing_constant(q, kernel.dim).expect("kernel validated on construction");
    let norm_sq = x.iter().map(|v| v * v).sum::<f64>() / (beta * beta);
    let ln_prefactor = -ln_k - n * beta.ln();
    if q == 1.0 {
        return (ln_prefactor - 0.5 * norm_sq).exp();
    }
    let base = 1.0 - (1.0 - q) / kernel.shape_factor() * norm_sq;
    if base <= 0.0 {
        return 0.0;
    }
    (ln_prefactor + base.ln() / (1.0 - q)).exp()
}

/// Strict membership in the scaled support `Omega_q`.
pub fn support_contains(x: &[f64], kernel: &QKernel) -> bool {
    if kernel.q >= 1.0 {
        return true;
    }
    let norm_sq = x.iter().map(|v| v * v).sum::<f64>() / (kernel.beta * kernel.beta);
    norm_sq < kernel.support_radius_sq()
}

/// Draws a standard (zero q-mean, identity q-covariance) perturbation.
///
/// Gaussian-chi-squared mixture: `Y = Z` at `q = 1`; for `q > 1` a multivariate
/// Student-t scaled to unit q-variance; for `q < 1` the dual construction
/// `sqrt(c) Z / sqrt(a + |Z|^2)`, which always lands strictly inside the ball.
pub fn sample_standard(q: f64, dim: usize, stream: &mut RngStream) -> Result<Perturbation> {
    check_q(q, dim)?;
    let mut z: Vec<f64> = (0..dim).map(|_| stream.standard_normal()).collect();
    if q == 1.0 {
        return Ok(Perturbation { eta: z, rho: 1.0 });
    }
    let sf = shape_factor(q, dim);
    let scale = if q < 1.0 {
        let a = stream.chi_squared(2.0 * (2.0 - q) / (1.0 - q))?;
        let zz: f64 = z.iter().map(|v| v * v).sum();
        (sf / (1.0 - q) / (a + zz)).sqrt()
    } else {
        let a = stream.chi_squared(sf / (q - 1.0))?;
        (sf / (q - 1.0) / a).sqrt()
    };
    z.iter_mut().for_each(|v| *v *= scale);
    Ok(Perturbation::new(z, q))
}

/// Draws `mean + beta * Y` with `Y` standard.
pub fn sample(kernel: &QKernel, mean: &[f64], stream: &mut RngStream) -> Result<Vec<f64>> {
    if mean.len() != kernel.dim {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim,
            got: mean.len(),
        });
    }
    let y = sample_standard(kernel.q, kernel.dim, stream)?;
    Ok(mean
        .iter()
        .zip(y.eta())
        .map(|(m, e)| m + kernel.beta * e)
        .collect())
}

// Boundary cases are exact in real arithmetic but land on either side in floating point.
const EXISTENCE_MARGIN: f64 = 1e-9;

/// Exponents of a mixed moment `E[prod X_i^{b_i} / rho(X)^b]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentSpec {
    pub rho_power: u32,
    pub powers: Vec<u32>,
}

impl MomentSpec {
    pub fn new(rho_power: u32, powers: Vec<u32>) -> Self {
        Self { rho_power, powers }
    }

    /// Spec with `b_j = power` at `index` and zero elsewhere.
    pub fn single(rho_power: u32, dim: usize, index: usize, power: u32) -> Self {
        let mut powers = vec![0; dim];
        powers[index] = power;
        Self { rho_power, powers }
    }

    pub fn has_odd_power(&self) -> bool {
        self.powers.iter().any(|b| b % 2 == 1)
    }

    pub fn total_power(&self) -> u32 {
        self.powers.iter().sum()
    }

    /// Evaluates the integrand for one draw.
    pub fn integrand(&self, x: &[f64], rho: f64) -> f64 {
        let num: f64 = x
            .iter()
            .zip(&self.powers)
            .map(|(v, &b)| v.powi(b as i32))
            .product();
        num / rho.powi(self.rho_power as i32)
    }

    /// Checks that the moment is finite for `(q, N)`.
    pub fn check_exists(&self, q: f64, dim: usize) -> Result<()> {
        let b = self.rho_power as f64;
        let half_sum = 0.5 * self.total_power() as f64;
        if q < 1.0 {
            if !(b < 1.0 + 1.0 / (1.0 - q) - EXISTENCE_MARGIN) {
                return Err(Error::MomentDoesNotExist {
                    q,
                    dim,
                    reason: format!("rho power {b} must be below {}", 1.0 + 1.0 / (1.0 - q)),
                });
            }
        } else if q > 1.0 {
            let lhs = 1.0 / (q - 1.0) - 0.5 * dim as f64;
            if !(lhs > half_sum - b + EXISTENCE_MARGIN) {
                return Err(Error::MomentDoesNotExist {
                    q,
                    dim,
                    reason: format!("tail index {lhs} must exceed {}", half_sum - b),
                });
            }
        }
        Ok(())
    }
}

fn ln_factorial(k: u32) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// `ln( b! / (2^b (b/2)!) )` for even `b`.
fn ln_double_factorial_term(b: u32) -> f64 {
    ln_factorial(b) - b as f64 * std::f64::consts::LN_2 - ln_factorial(b / 2)
}

/// Closed-form `E[prod X_i^{b_i} / rho(X)^b]` for a standard q-Gaussian.
///
/// Zero when any power is odd. At `q = 1` the independent-Gaussian product of
/// `(b_i - 1)!!` is returned.
pub fn analytic_moment(spec: &MomentSpec, q: f64, dim: usize) -> Result<f64> {
    check_q(q, dim)?;
    if spec.powers.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: spec.powers.len(),
        });
    }
    spec.check_exists(q, dim)?;
    if spec.has_odd_power() {
        return Ok(0.0);
    }
    let ln_product: f64 = spec
        .powers
        .iter()
        .map(|&b| ln_double_factorial_term(b))
        .sum();
    let half_sum = 0.5 * spec.total_power() as f64;
    if q == 1.0 {
        // prod (b_i - 1)!! = prod b_i! / (2^{b_i/2} (b_i/2)!)
        return Ok((ln_product + half_sum * std::f64::consts::LN_2).exp());
    }
    let n_half = 0.5 * dim as f64;
    let b = spec.rho_power as f64;
    let ln_kbar = if q < 1.0 {
        let r = 1.0 / (1.0 - q);
        ln_gamma(r - b + 1.0) + ln_gamma(r + 1.0 + n_half)
            - ln_gamma(r + 1.0)
            - ln_gamma(r - b + 1.0 + n_half + half_sum)
    } else {
        let r = 1.0 / (q - 1.0);
        ln_gamma(r) + ln_gamma(r + b - n_half - half_sum) - ln_gamma(r + b) - ln_gamma(r - n_half)
    };
    let ln_scale = half_sum * (shape_factor(q, dim) / (1.0 - q).abs()).ln();
    Ok((ln_kbar + ln_scale + ln_product).exp())
}
