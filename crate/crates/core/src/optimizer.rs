//! Two-timescale projected stochastic approximation (Gq-SF1 and Gq-SF2).
//!
//! The fast recursion averages per-sample smoothed-functional terms into `Z`
//! with step `b(n)`; the slow recursion moves `theta` against `Z` with step
//! `a(n)` and projects back onto the box.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::qgaussian::{sample_standard, QKernel};
use crate::rng::RngStream;
use crate::smoothing::{sf_term_one_into, sf_term_two_into};

/// A simulated system advanced one observation at a time.
///
/// Implementations keep their state across calls; the optimizer never resets
/// them between parameter updates and never shows them a future parameter.
pub trait Simulator {
    /// Advances one observation under `control` and returns its cost `h >= 0`.
    fn step(&mut self, control: &[f64]) -> Result<f64>;
}

impl<S: Simulator + ?Sized> Simulator for &mut S {
    fn step(&mut self, control: &[f64]) -> Result<f64> {
        (**self).step(control)
    }
}

impl<S: Simulator + ?Sized> Simulator for Box<S> {
    fn step(&mut self, control: &[f64]) -> Result<f64> {
        (**self).step(control)
    }
}

/// Deterministic simulator returning `f(control)`.
#[derive(Debug, Clone)]
pub struct FnSimulator<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> Simulator for FnSimulator<F> {
    fn step(&mut self, control: &[f64]) -> Result<f64> {
        Ok((self.0)(control))
    }
}

/// Axis-aligned box `prod [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxConstraint {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxConstraint {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument(
                "box must have at least one dimension".into(),
            ));
        }
        if let Some(i) = lower
            .iter()
            .zip(&upper)
            .position(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "box bounds must satisfy lower < upper, violated at index {i}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lower, upper]^dim`.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn project_into(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    /// Component-wise clamp onto the box.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.project_into(&mut out);
        out
    }
}

/// Step sizes `a(n) = 1/n`, `b(n) = 1/n^gamma` with `gamma` in (0.5, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    gamma: f64,
}

impl StepSchedule {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.5 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "step-size exponent gamma must lie in (0.5, 1), got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(a(n), b(n))` for `n >= 1`.
    pub fn step_sizes(&self, n: usize) -> (f64, f64) {
        debug_assert!(n >= 1, "step sizes are indexed from 1");
        let n = n as f64;
        (1.0 / n, n.powf(-self.gamma))
    }

    /// Step sizes for zero-based outer iteration `n`, i.e. `step_sizes(n + 1)`.
    pub fn for_outer(&self, n: usize) -> (f64, f64) {
        self.step_sizes(n + 1)
    }
}

/// Settings shared by both algorithms.
#[derive(Debug, Clone)]
pub struct SaConfig {
    pub kernel: QKernel,
    pub bounds: BoxConstraint,
    pub schedule: StepSchedule,
    /// Outer iterations `M`.
    pub outer_iterations: usize,
    /// Inner (averaging) iterations `L` per outer iteration.
    pub inner_iterations: usize,
    /// Known optimum, used for the distance metric.
    pub target: Option<Vec<f64>>,
    /// Record `theta` every this many outer iterations.
    pub trajectory_every: Option<usize>,
    /// Abort once any `|Z_i|` exceeds this.
    pub divergence_limit: f64,
}

pub const DEFAULT_DIVERGENCE_LIMIT: f64 = 1e12;

impl SaConfig {
    pub fn new(
        kernel: QKernel,
        bounds: BoxConstraint,
        schedule: StepSchedule,
        outer_iterations: usize,
        inner_iterations: usize,
    ) -> Result<Self> {
        if kernel.dim() != bounds.dim() {
            return Err(Error::DimensionMismatch {
                expected: bounds.dim(),
                got: kernel.dim(),
            });
        }
        if outer_iterations == 0 || inner_iterations == 0 {
            return Err(Error::InvalidArgument(
                "M and L must both be at least 1".into(),
            ));
        }
        Ok(Self {
            kernel,
            bounds,
            schedule,
            outer_iterations,
            inner_iterations,
            target: None,
            trajectory_every: None,
            divergence_limit: DEFAULT_DIVERGENCE_LIMIT,
        })
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_trajectory(mut self, every: usize) -> Self {
        self.trajectory_every = Some(every.max(1));
        self
    }

    fn validate(&self, theta0: &[f64]) -> Result<()> {
        if theta0.len() != self.bounds.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.bounds.dim(),
                got: theta0.len(),
            });
        }
        if !self.bounds.contains(theta0) {
            return Err(Error::InvalidArgument(
                "initial parameter lies outside the box".into(),
            ));
        }
        if let Some(t) = &self.target {
            if t.len() != theta0.len() {
                return Err(Error::DimensionMismatch {
                    expected: theta0.len(),
                    got: t.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub n: usize,
    pub theta: Vec<f64>,
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub theta_final: Vec<f64>,
    /// `|theta(M) - target|` when a target is configured.
    pub distance: Option<f64>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub wall_time: Duration,
    pub seed: u64,
    pub stream_id: u64,
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Which per-sample term feeds the fast recursion.
enum Estimator<'a, S1: Simulator, S2: Simulator> {
    One(&'a mut S1),
    Two(&'a mut S1, &'a mut S2),
}

fn run_two_timescale<S1: Simulator, S2: Simulator>(
    mut est: Estimator<'_, S1, S2>,
    config: &SaConfig,
    theta0: &[f64],
    stream: &mut RngStream,
) -> Result<RunResult> {
    config.validate(theta0)?;
    let start = Instant::now();
    let kernel = &config.kernel;
    let dim = kernel.dim();
    let beta = kernel.beta();
    let (seed, stream_id) = (stream.seed(), stream.stream_id());

    let mut theta = theta0.to_vec();
    let mut z = vec![0.0; dim];
    let mut z_entry = vec![0.0; dim];
    let mut control_plus = vec![0.0; dim];
    let mut control_minus = vec![0.0; dim];
    let mut term = vec![0.0; dim];
    let mut trajectory = Vec::new();

    let distance = |theta: &[f64]| {
        config
            .target
            .as_deref()
            .map(|t| euclidean_distance(theta, t))
    };
    let record = |n: usize, theta: &[f64], trajectory: &mut Vec<TrajectoryPoint>| {
        if let Some(every) = config.trajectory_every {
            if n.is_multiple_of(every) || n == config.outer_iterations {
                trajectory.push(TrajectoryPoint {
                    n,
                    theta: theta.to_vec(),
                    distance: distance(theta),
                });
            }
        }
    };
    let sim_error = |outer: usize, inner: usize, e: Error| Error::Simulator {
        outer,
        inner,
        seed,
        stream: stream_id,
        message: e.to_string(),
    };

    record(0, &theta, &mut trajectory);
    for n in 0..config.outer_iterations {
        let (a_n, b_n) = config.schedule.for_outer(n);
        let eta = sample_standard(kernel.q(), dim, stream)?;
        z_entry.copy_from_slice(&z);

        for i in 0..dim {
            control_plus[i] = theta[i] + beta * eta.eta()[i];
            control_minus[i] = theta[i] - beta * eta.eta()[i];
        }
        config.bounds.project_into(&mut control_plus);
        config.bounds.project_into(&mut control_minus);

        for m in 0..config.inner_iterations {
            match &mut est {
                Estimator::One(sim) => {
                    let h = sim.step(&control_plus).map_err(|e| sim_error(n, m, e))?;
                    sf_term_one_into(&eta, h, kernel, &mut term)?;
                }
                Estimator::Two(plus, minus) => {
                    let hp = plus.step(&control_plus).map_err(|e| sim_error(n, m, e))?;
                    let hm = minus.step(&control_minus).map_err(|e| sim_error(n, m, e))?;
                    sf_term_two_into(&eta, hp, hm, kernel, &mut term)?;
                }
            }
            let mut worst = 0.0f64;
            for (zi, ti) in z.iter_mut().zip(&term) {
                *zi = (1.0 - b_n) * *zi + b_n * ti;
                worst = worst.max(zi.abs());
            }
            if !(worst <= config.divergence_limit) {
                return Err(Error::Diverged {
                    outer: n,
                    inner: m,
                    magnitude: worst,
                });
            }
        }

        // the slow step uses Z(nL), the estimate held on entry to this iteration
        for (t, zi) in theta.iter_mut().zip(&z_entry) {
            *t -= a_n * zi;
        }
        config.bounds.project_into(&mut theta);
        record(n + 1, &theta, &mut trajectory);
    }

    Ok(RunResult {
        distance: distance(&theta),
        theta_final: theta,
        trajectory,
        wall_time: start.elapsed(),
        seed,
        stream_id,
    })
}

/// Gq-SF1: one simulation driven at `P_C(theta + beta eta)`.
pub fn run_gqsf1<S: Simulator>(
    sim: &mut S,
    config: &SaConfig,
    theta0: &[f64],
    stream: &mut RngStream,
) -> Result<RunResult> {
    run_two_timescale::<S, S>(Estimator::One(sim), config, theta0, stream)
}

/// Gq-SF2: two simulations driven at `P_C(theta +/- beta eta)`.
pub fn run_gqsf2<S1: Simulator, S2: Simulator>(
    sim_plus: &mut S1,
    sim_minus: &mut S2,
    config: &SaConfig,
    theta0: &[f64],
    stream: &mut RngStream,
) -> Result<RunResult> {
    run_two_timescale(Estimator::Two(sim_plus, sim_minus), config, theta0, stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_config(q: f64, m: usize) -> SaConfig {
        SaConfig::new(
            QKernel::new(q, 0.005, 4).unwrap(),
            BoxConstraint::cube(4, 0.1, 0.6).unwrap(),
            StepSchedule::new(0.75).unwrap(),
            m,
            10,
        )
        .unwrap()
        .with_target(vec![0.3; 4])
    }

    fn quadratic(x: &[f64]) -> f64 {
        x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum()
    }

    #[test]
    fn projection_clamps() {
        let b = BoxConstraint::new(vec![0.1], vec![0.6]).unwrap();
        assert_eq!(b.project(&[0.7]), vec![0.6]);
        assert_eq!(b.project(&[0.35]), vec![0.35]);
        assert_eq!(b.project(&[-4.0]), vec![0.1]);
        assert!(BoxConstraint::new(vec![0.5], vec![0.5]).is_err());
        assert!(BoxConstraint::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn schedule_values() {
        let s = StepSchedule::new(0.75).unwrap();
        assert_eq!(s.step_sizes(1), (1.0, 1.0));
        let (a, b) = s.step_sizes(16);
        assert_eq!(a, 0.0625);
        assert!((b - 0.125).abs() < 1e-15);
        assert_eq!(s.for_outer(0), (1.0, 1.0));
        for n in 2..10_000 {
            let (a, b) = s.step_sizes(n);
            assert!(a < b);
        }
        let (a1, b1) = s.step_sizes(100);
        let (a2, b2) = s.step_sizes(1_000_000);
        assert!(a2 / b2 < a1 / b1);
        assert!(StepSchedule::new(0.5).is_err());
        assert!(StepSchedule::new(1.0).is_err());
    }

    #[test]
    fn identical_costs_never_move_theta() {
        let cfg = quad_config(0.8, 200).with_trajectory(1);
        let theta0 = vec![0.1, 0.1, 0.6, 0.6];
        let mut s = RngStream::new(1, 1);
        let mut p = FnSimulator(|_: &[f64]| 2.0);
        let mut m = FnSimulator(|_: &[f64]| 2.0);
        let r = run_gqsf2(&mut p, &mut m, &cfg, &theta0, &mut s).unwrap();
        assert_eq!(r.theta_final, theta0);
        assert!(r.trajectory.iter().all(|t| t.theta == theta0));
    }

    #[test]
    fn sf2_converges_on_quadratic() {
        let cfg = quad_config(0.8, 10_000);
        let mut s = RngStream::new(2024, 0);
        let r = run_gqsf2(
            &mut FnSimulator(quadratic),
            &mut FnSimulator(quadratic),
            &cfg,
            &[0.1, 0.1, 0.6, 0.6],
            &mut s,
        )
        .unwrap();
        assert!(r.distance.unwrap() < 0.02, "{:?}", r.distance);
    }

    #[test]
    fn sf1_converges_on_quadratic() {
        let cfg = quad_config(0.8, 10_000);
        let mut s = RngStream::new(2024, 1);
        let r = run_gqsf1(
            &mut FnSimulator(quadratic),
            &cfg,
            &[0.1, 0.1, 0.6, 0.6],
            &mut s,
        )
        .unwrap();
        assert!(r.distance.unwrap() < 0.05, "{:?}", r.distance);
    }

    #[test]
    fn constant_cost_moves_less_than_slope() {
        let cfg = quad_config(0.8, 10_000);
        let theta0 = vec![0.35; 4];
        let flat = run_gqsf1(
            &mut FnSimulator(|_: &[f64]| 1.0),
            &cfg,
            &theta0,
            &mut RngStream::new(5, 5),
        )
        .unwrap();
        let sloped = run_gqsf1(
            &mut FnSimulator(|x: &[f64]| 1.0 + 5.0 * x.iter().sum::<f64>()),
            &cfg,
            &theta0,
            &mut RngStream::new(5, 5),
        )
        .unwrap();
        let moved = |r: &RunResult| euclidean_distance(&r.theta_final, &theta0);
        assert!(
            moved(&flat) < moved(&sloped),
            "{} vs {}",
            moved(&flat),
            moved(&sloped)
        );
    }

    #[test]
    fn deterministic_replay() {
        let cfg = quad_config(1.2, 300).with_trajectory(7);
        let go = || {
            run_gqsf1(
                &mut FnSimulator(quadratic),
                &cfg,
                &[0.2, 0.5, 0.3, 0.4],
                &mut RngStream::new(77, 3),
            )
            .unwrap()
        };
        let (a, b) = (go(), go());
        assert_eq!(a.theta_final, b.theta_final);
        assert_eq!(a.trajectory, b.trajectory);
    }

    #[test]
    fn bad_start_rejected() {
        let cfg = quad_config(0.8, 10);
        let r = run_gqsf1(
            &mut FnSimulator(quadratic),
            &cfg,
            &[0.0, 0.3, 0.3, 0.3],
            &mut RngStream::new(0, 0),
        );
        assert!(r.is_err());
    }

    #[test]
    fn divergence_guard_trips() {
        let mut cfg = quad_config(0.8, 10);
        cfg.divergence_limit = 1.0;
        let r = run_gqsf1(
            &mut FnSimulator(|_: &[f64]| 1e6),
            &cfg,
            &[0.3; 4],
            &mut RngStream::new(0, 0),
        );
        assert!(matches!(r, Err(Error::Diverged { .. })));
    }

    struct Failing;
    impl Simulator for Failing {
        fn step(&mut self, _: &[f64]) -> Result<f64> {
            Err(Error::InvalidArgument("boom".into()))
        }
    }

    #[test]
    fn simulator_failure_carries_context() {
        let cfg = quad_config(0.8, 10);
        let r = run_gqsf1(&mut Failing, &cfg, &[0.3; 4], &mut RngStream::new(9, 4));
        match r {
            Err(Error::Simulator {
                outer,
                inner,
                seed,
                stream,
                ..
            }) => {
                assert_eq!((outer, inner, seed, stream), (0, 0, 9, 4));
            }
            other => panic!("{other:?}"),
        }
    }
}
