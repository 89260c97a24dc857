//! Minimization of `Ψ` over monotone grid maps.
//!
//! Iterates live in increment space: `d_k = u_{k+1} − u_k` with
//! `d_k ≥ ε_inc` and `Σ d_k = L_N`, a shifted simplex. Each step is a projected
//! gradient step with backtracking; a Nesterov extrapolation is applied
//! between steps and dropped whenever it would raise the energy, so accepted
//! iterates never increase `Ψ`. Reverse-mode problems are solved as their
//! reflection `t ↦ L_N − u(t)`, which has the same energy.

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{self, EnergyReport, Mode, Reparametrization, MIN_INTERVALS};

/// Diagnostic attached when increments collapse onto the floor with `L_N < L_M`.
pub const NOT_ATTAINED: &str = "infimum not attained (L(N) < L(M) regime)";
pub const OPEN_BAND: &str = "stationary point in the open band 1/sqrt(3) <= L(N)/L(M) < 1; minimality not asserted";
pub const ITERATION_LIMIT: &str = "iteration limit reached";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid_size: usize,
    pub max_iters: usize,
    /// Tolerance on the sup-norm of the projected gradient.
    pub grad_tol: f64,
    /// Lower bound on increments, relative to `L_N`.
    pub increment_floor_rel: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_size: 1024,
            max_iters: 100_000,
            grad_tol: 1e-8,
            increment_floor_rel: 1e-9,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < MIN_INTERVALS {
            return Err(Error::GridTooCoarse {
                got: self.grid_size,
                min: MIN_INTERVALS,
            });
        }
        let positive = [self.grad_tol, self.increment_floor_rel, self.shrink, self.sufficient_decrease];
        if positive.iter().any(|v| !(*v > 0.0)) || self.shrink >= 1.0 || self.sufficient_decrease >= 1.0 {
            return Err(Error::InvalidArgument(
                "tolerances must be positive; shrink and sufficient decrease must lie in (0, 1)".into(),
            ));
        }
        if self.increment_floor_rel * self.grid_size as f64 >= 1.0 {
            return Err(Error::InvalidArgument("increment floor leaves no feasible map".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Linear,
    RandomMonotone { seed: u64 },
}

/// Starting map: the linear minimizer candidate, or positive increments drawn
/// uniformly from `[0.25, 1.75)` with a fixed seed and rescaled to sum to `L_N`.
pub fn initialize(l_m: f64, l_n: f64, mode: Mode, m: usize, kind: InitKind) -> Result<Reparametrization> {
    let increments = match kind {
        InitKind::Linear => vec![l_n / m as f64; m],
        InitKind::RandomMonotone { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.25..1.75)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|r| r * l_n / total).collect()
        }
    };
    if kind == InitKind::Linear {
        let r = l_n / l_m;
        return Reparametrization::from_fn(l_m, l_n, mode, m, |t| match mode {
            Mode::Preserve => r * t,
            Mode::Reverse => -r * t + l_n,
        });
    }
    Reparametrization::from_increments(l_m, l_n, mode, &increments)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub u: Option<Reparametrization>,
    pub report: EnergyReport,
    pub iterations: usize,
    /// True only when an interior stationary point was reached with the
    /// projected gradient below tolerance and no increment on the floor.
    pub converged: bool,
    pub projected_gradient_sup: f64,
    pub floor_active: usize,
    pub diagnostic: Option<String>,
}

impl SolveResult {
    pub fn map(&self) -> &Reparametrization {
        self.u.as_ref().expect("solve result carries its map")
    }
}

/// Euclidean projection onto `{d : d_k ≥ floor, Σ d_k = total}`.
pub fn project_shifted_simplex(d: &[f64], floor: f64, total: f64) -> Vec<f64> {
    let n = d.len();
    let budget = total - floor * n as f64;
    let mut sorted: Vec<f64> = d.iter().map(|v| v - floor).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - budget) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    d.iter().map(|v| (v - floor - theta).max(0.0) + floor).collect()
}

/// `Ψ` restricted to the shifted simplex. Energy differences and gradients
/// are those of `Ψ(d) − c Σ d_k` with `c = F'(L_N/L_M)`, which agrees with `Ψ`
/// up to a constant on the constraint set but keeps floating-point drift of
/// `Σ d_k` from masquerading as descent.
struct Problem {
    h: f64,
    total: f64,
    floor: f64,
    shift: f64,
}

fn integrand(s: f64) -> f64 {
    let q = s * s - 1.0;
    q * q
}

impl Problem {
    /// `u̇` straight from the increments, matching the stencils of
    /// [`functional::derivative`] without forming cumulative sums.
    fn slopes(&self, d: &[f64]) -> Vec<f64> {
        let m = d.len();
        let mut s = Vec::with_capacity(m + 1);
        s.push(d[0] / self.h);
        for k in 1..m {
            s.push((d[k - 1] + d[k]) / (2.0 * self.h));
        }
        s.push(d[m - 1] / self.h);
        s
    }

    fn weight(&self, k: usize, m: usize) -> f64 {
        if k == 0 || k == m {
            0.5 * self.h
        } else {
            self.h
        }
    }

    fn energy(&self, d: &[f64]) -> f64 {
        let m = d.len();
        self.slopes(d)
            .iter()
            .enumerate()
            .map(|(k, &s)| self.weight(k, m) * integrand(s))
            .sum()
    }

    /// `Ψ(a) − Ψ(b)` summed term by term from the increment differences, so
    /// that tiny decreases are not lost to cancellation between two large
    /// energies.
    fn energy_delta(&self, a: &[f64], b: &[f64]) -> f64 {
        let m = a.len();
        let sa = self.slopes(a);
        let sb = self.slopes(b);
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let ds = self.slopes(&diff);
        (0..=m)
            .map(|k| {
                let (x, y) = (sa[k], sb[k]);
                self.weight(k, m) * ds[k] * ((x + y) * (x * x + y * y - 2.0) - self.shift)
            })
            .sum()
    }

    /// `∂Ψ/∂d_i = (F'(u̇_i) + F'(u̇_{i+1}))/2` with `F(s) = (s² − 1)²`, less
    /// the shift.
    fn gradient(&self, d: &[f64]) -> Vec<f64> {
        let fp: Vec<f64> = self
            .slopes(d)
            .iter()
            .map(|&s| 4.0 * s * (s * s - 1.0))
            .collect();
        fp.windows(2).map(|w| 0.5 * (w[0] + w[1]) - self.shift).collect()
    }

    fn project(&self, d: &[f64]) -> Vec<f64> {
        project_shifted_simplex(d, self.floor, self.total)
    }

    fn projected_gradient_sup(&self, d: &[f64], g: &[f64]) -> f64 {
        let trial: Vec<f64> = d.iter().zip(g).map(|(x, gi)| x - gi).collect();
        let p = self.project(&trial);
        d.iter().zip(&p).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
    }

    fn floor_count(&self, d: &[f64]) -> usize {
        d.iter().filter(|&&x| x <= self.floor * (1.0 + 1e-9)).count()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn step_to(x: &[f64], g: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().zip(g).map(|(xi, gi)| xi - alpha * gi).collect()
}

/// Minimizes `Ψ` over maps with the given boundary mode.
///
/// Without `init`, the start is a random monotone map seeded by `cfg.seed`.
/// Failure to converge is reported through `converged = false` and the
/// diagnostic string, never as an error.
pub fn minimize_psi(
    l_m: f64,
    l_n: f64,
    mode: Mode,
    cfg: &SolverConfig,
    init: Option<&Reparametrization>,
) -> Result<SolveResult> {
    if !(l_m > 0.0 && l_n > 0.0 && l_m.is_finite() && l_n.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lengths must be positive (L_M = {l_m}, L_N = {l_n})"
        )));
    }
    cfg.validate()?;
    let m = cfg.grid_size;
    let start = match init {
        Some(u) => {
            if u.intervals() != m || u.mode() != mode {
                return Err(Error::InvalidArgument(format!(
                    "initial map has {} intervals in {} mode, expected {m} in {mode}",
                    u.intervals(),
                    u.mode()
                )));
            }
            if (u.source_length() - l_m).abs() > 1e-12 * l_m || (u.target_length() - l_n).abs() > 1e-12 * l_n {
                return Err(Error::LengthMismatch {
                    expected: l_n,
                    got: u.target_length(),
                });
            }
            u.clone()
        }
        None => initialize(l_m, l_n, mode, m, InitKind::RandomMonotone { seed: cfg.seed })?,
    };
    // solve in preserve form
    let start = match mode {
        Mode::Preserve => start,
        Mode::Reverse => start.reflected(),
    };
    let prob = Problem {
        h: l_m / m as f64,
        total: l_n,
        floor: cfg.increment_floor_rel * l_n,
        shift: {
            let r = l_n / l_m;
            4.0 * r * (r * r - 1.0)
        },
    };

    let mut x = prob.project(&start.increments());
    let mut gx = prob.gradient(&x);
    let mut y = x.clone();
    let mut gy = gx.clone();
    let mut momentum = 1.0f64;
    let mut alpha = prob.h;
    let mut iterations = 0;
    let mut restarts = 0usize;
    let mut pg = prob.projected_gradient_sup(&x, &gx);

    while iterations < cfg.max_iters && pg > cfg.grad_tol {
        iterations += 1;
        let from_x = momentum == 1.0;
        let mut z;
        loop {
            z = prob.project(&step_to(&y, &gy, alpha));
            let dz = sub(&z, &y);
            let decrease = prob.energy_delta(&z, &y);
            let slope = dot(&gy, &dz);
            let armijo = decrease <= cfg.sufficient_decrease * slope;
            let upper = decrease <= slope + dot(&dz, &dz) / (2.0 * alpha);
            if (armijo && upper) || alpha < f64::MIN_POSITIVE {
                break;
            }
            alpha *= cfg.shrink;
        }
        if prob.energy_delta(&z, &x) > 0.0 {
            // the extrapolated step raised the energy: restart from x
            restarts += 1;
            momentum = 1.0;
            y.clone_from(&x);
            gy.clone_from(&gx);
            if from_x {
                debug!("no descent from the current iterate at iteration {iterations}");
                break;
            }
            continue;
        }
        let prev = std::mem::replace(&mut x, z);
        gx = prob.gradient(&x);
        pg = prob.projected_gradient_sup(&x, &gx);

        let dx = sub(&x, &prev);
        if dot(&gx, &dx) > 0.0 {
            momentum = 1.0;
            y.clone_from(&x);
            gy.clone_from(&gx);
        } else {
            let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next;
            momentum = next;
            let ahead: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + beta * di).collect();
            y = prob.project(&ahead);
            gy = prob.gradient(&y);
        }
        alpha /= cfg.shrink.sqrt();
        if iterations % 10_000 == 0 {
            debug!(
                "iteration {iterations}: psi = {:.12e}, projected gradient = {pg:.3e}, restarts = {restarts}",
                prob.energy(&x)
            );
        }
    }

    let floor_active = prob.floor_count(&x);
    let mut u = Reparametrization::from_increments(l_m, l_n, Mode::Preserve, &x)?;
    if mode == Mode::Reverse {
        u = u.reflected();
    }
    let report = functional::energy_report(&u)?;
    let ratio = l_n / l_m;
    let stationary = pg <= cfg.grad_tol;
    let (converged, diagnostic) = if ratio < 1.0 && (floor_active > 0 || ratio < 1.0 / 3f64.sqrt()) {
        (false, Some(NOT_ATTAINED.to_string()))
    } else if !stationary {
        (false, Some(ITERATION_LIMIT.to_string()))
    } else if ratio < 1.0 {
        (true, Some(OPEN_BAND.to_string()))
    } else {
        (true, None)
    };
    info!(
        "solver finished after {iterations} iterations: psi = {:.12e}, projected gradient = {pg:.3e}, floor-active = {floor_active}",
        report.psi
    );
    Ok(SolveResult {
        u: Some(u),
        report,
        iterations,
        converged,
        projected_gradient_sup: pg,
        floor_active,
        diagnostic,
    })
}

/// Runs `runs` independent solves with seeds `cfg.seed + i` on separate
/// threads. Results are returned in seed order.
pub fn minimize_multistart(l_m: f64, l_n: f64, mode: Mode, cfg: &SolverConfig, runs: usize) -> Result<Vec<SolveResult>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..runs)
            .map(|i| {
                let cfg = SolverConfig {
                    seed: cfg.seed.wrapping_add(i as u64),
                    ..cfg.clone()
                };
                scope.spawn(move || minimize_psi(l_m, l_n, mode, &cfg, None))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    })
}

/// Lowest-energy result, preferring converged runs.
pub fn best_of(results: &[SolveResult]) -> Option<&SolveResult> {
    results.iter().min_by(|a, b| {
        b.converged
            .cmp(&a.converged)
            .then(a.report.psi.total_cmp(&b.report.psi))
    })
}
