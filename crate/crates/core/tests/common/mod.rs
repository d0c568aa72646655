//! Quadrature oracles built directly from the unnormalized q-Gaussian kernel.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use quadrature::double_exponential;

pub const TOL: f64 = 1e-13;

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    double_exponential::integrate(f, a, b, TOL).integral
}

/// `int_0^inf f`, via `x = tan t`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F) -> f64 {
    integrate(
        |t| {
            let c = t.cos();
            if c <= 0.0 {
                return 0.0;
            }
            f(t.tan()) / (c * c)
        },
        0.0,
        FRAC_PI_2,
    )
}

pub fn shape(q: f64, n: usize) -> f64 {
    n as f64 + 2.0 - n as f64 * q
}

/// Support radius for `q < 1`, `None` for unbounded support.
pub fn radius(q: f64, n: usize) -> Option<f64> {
    (q < 1.0).then(|| (shape(q, n) / (1.0 - q)).sqrt())
}

/// `rho` as a function of the radius.
pub fn rho_r(q: f64, n: usize, r: f64) -> f64 {
    1.0 - (1.0 - q) / shape(q, n) * r * r
}

/// Kernel without its normalizing constant, as a function of `rho`.
pub fn kernel_rho(q: f64, rho: f64, r: f64) -> f64 {
    if q == 1.0 {
        return (-0.5 * r * r).exp();
    }
    if rho <= 0.0 {
        return 0.0;
    }
    rho.powf(1.0 / (1.0 - q))
}

pub fn kernel_r(q: f64, n: usize, r: f64) -> f64 {
    kernel_rho(q, rho_r(q, n, r), r)
}

/// `int_0^R f(r, rho(r)) dr` over the radial support.
///
/// Compact supports use `r = R sin(phi)` so that `rho = cos^2(phi)` stays exact
/// near the boundary.
pub fn radial_with_rho<F: Fn(f64, f64) -> f64>(q: f64, n: usize, f: F) -> f64 {
    match radius(q, n) {
        Some(big_r) => integrate(
            |phi| {
                let c = phi.cos();
                f(big_r * phi.sin(), c * c) * big_r * c
            },
            0.0,
            FRAC_PI_2,
        ),
        None => integrate_half_line(|r| f(r, rho_r(q, n, r))),
    }
}

/// `int_0^R f(r) dr` over the radial support.
pub fn radial<F: Fn(f64) -> f64>(q: f64, n: usize, f: F) -> f64 {
    radial_with_rho(q, n, |r, _| f(r))
}

/// `E[u_1^b]` for `u` uniform on the unit sphere in `R^n`.
pub fn sphere_moment(n: usize, b: u32) -> f64 {
    if b % 2 == 1 {
        return 0.0;
    }
    match n {
        1 => 1.0,
        2 => {
            let num = integrate(|t: f64| t.cos().powi(b as i32), 0.0, FRAC_PI_2);
            num / FRAC_PI_2
        }
        _ => {
            let w = |u: f64| (1.0 - u * u).max(0.0).powf(0.5 * (n as f64 - 3.0));
            integrate(|u| u.powi(b as i32) * w(u), 0.0, 1.0) / integrate(w, 0.0, 1.0)
        }
    }
}

/// `E[u_1^2 u_2^2]` on the sphere, from `sum u_i^2 = 1`.
pub fn sphere_cross_22(n: usize) -> f64 {
    assert!(n >= 2);
    let nf = n as f64;
    (1.0 - nf * sphere_moment(n, 4)) / (nf * (nf - 1.0))
}

/// `E[prod X_i^{b_i} / rho^k]` under the standard q-Gaussian, by radial quadrature.
///
/// Supports at most two non-zero even powers, which is all the tests need.
pub fn moment(q: f64, n: usize, rho_power: u32, powers: &[u32]) -> f64 {
    let nz: Vec<u32> = powers.iter().copied().filter(|&b| b > 0).collect();
    if nz.iter().any(|b| b % 2 == 1) {
        return 0.0;
    }
    let total: u32 = nz.iter().sum();
    let angular = match nz.as_slice() {
        [] => 1.0,
        [b] => sphere_moment(n, *b),
        [2, 2] => sphere_cross_22(n),
        _ => panic!("unsupported power pattern {powers:?}"),
    };
    let nm1 = n as i32 - 1;
    let norm = radial(q, n, |r| kernel_r(q, n, r) * r.powi(nm1));
    let num = radial_with_rho(q, n, |r, rho| {
        if rho <= 0.0 {
            return 0.0;
        }
        kernel_rho(q, rho, r) * r.powi(nm1 + total as i32) / rho.powi(rho_power as i32)
    });
    angular * num / norm
}

/// Total mass of the unnormalized kernel on the real line (`n = 1`).
pub fn mass_1d(q: f64) -> f64 {
    2.0 * radial(q, 1, |r| kernel_r(q, 1, r))
}

/// Evaluates the 1-D CDF at ascending points by integrating between them.
pub fn cdf_1d_sorted(q: f64, sorted: &[f64]) -> Vec<f64> {
    let mass = mass_1d(q);
    let f = |x: f64| kernel_r(q, 1, x.abs()) / mass;
    let piece = |a: f64, b: f64| -> f64 {
        let w = b - a;
        if w == 0.0 {
            0.0
        } else if w < 0.02 {
            gauss_legendre_5(&f, a, b)
        } else {
            integrate(f, a, b)
        }
    };
    let mut out = vec![0.0; sorted.len()];
    let split = sorted.partition_point(|&x| x < 0.0);
    let mut acc = 0.5;
    let mut prev = 0.0;
    for i in split..sorted.len() {
        acc += piece(prev, sorted[i]);
        out[i] = acc;
        prev = sorted[i];
    }
    let mut acc = 0.5;
    let mut prev = 0.0;
    for i in (0..split).rev() {
        acc -= piece(sorted[i], prev);
        out[i] = acc;
        prev = sorted[i];
    }
    out
}

pub fn gauss_legendre_5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    X.iter().zip(W).map(|(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

/// Two-sided KS statistic of sorted samples against CDF values at those samples.
pub fn ks_statistic(cdf_at_sorted: &[f64]) -> f64 {
    let n = cdf_at_sorted.len() as f64;
    cdf_at_sorted
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let lo = f - i as f64 / n;
            let hi = (i + 1) as f64 / n - f;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}
