//! Closed-form minimizers, the length-ratio regimes, the second variation of
//! `Φ` along a vector field, and the zig-zag constructions behind the
//! nonexistence results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{
    self, min_udot_sq, psi_values, trapezoid, Mode, Reparametrization, NECESSARY_CONDITION_TOL,
    SECOND_VARIATION_THRESHOLD,
};
use crate::geometry::{ArcLengthParam, Point};
use crate::tensor::{lie_derivative_1d, VectorFieldJet1D};

/// Ratio `L_N/L_M` below which no minimizer exists.
pub fn nonexistence_bound() -> f64 {
    1.0 / 3f64.sqrt()
}

/// Tolerance applied to the lower regime boundary.
pub const REGIME_TOL: f64 = 1e-12;

/// Smallest grid accepted by [`second_variation_1d`]; third derivatives are
/// taken by repeated differencing.
pub const MIN_SECOND_VARIATION_GRID: usize = 64;

/// Up/down pairs in the zig-zag profile used by [`zigzag_sequence`].
pub const DEFAULT_PAIRS: usize = 2;

/// `(L_N² − L_M²)² / L_M³`.
pub fn phi_min(l_m: f64, l_n: f64) -> f64 {
    let d = l_n * l_n - l_m * l_m;
    d * d / (l_m * l_m * l_m)
}

fn check_lengths(l_m: f64, l_n: f64) -> Result<()> {
    if !(l_m > 0.0 && l_n > 0.0 && l_m.is_finite() && l_n.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lengths must be positive and finite (L_M = {l_m}, L_N = {l_n})"
        )));
    }
    Ok(())
}

fn require_minimizers(l_m: f64, l_n: f64) -> Result<()> {
    check_lengths(l_m, l_n)?;
    if l_n < l_m {
        return Err(Error::Regime(format!(
            "closed-form minimizers need L_N >= L_M (got L_N/L_M = {}); use diagnose",
            l_n / l_m
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    MinimizersExist,
    NoMinimumProven,
    OpenBand,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::MinimizersExist => "minimizers-exist",
            Regime::NoMinimumProven => "no-minimum-proven",
            Regime::OpenBand => "open-band",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub ratio: f64,
    pub regime: Regime,
    /// Present only when minimizers exist.
    pub phi_min: Option<f64>,
    pub second_variation_threshold: f64,
    pub nonexistence_bound: f64,
}

pub fn classify(ratio: f64) -> Regime {
    if ratio >= 1.0 {
        Regime::MinimizersExist
    } else if ratio < nonexistence_bound() - REGIME_TOL {
        Regime::NoMinimumProven
    } else {
        Regime::OpenBand
    }
}

pub fn diagnose(l_m: f64, l_n: f64) -> Result<Diagnosis> {
    check_lengths(l_m, l_n)?;
    let ratio = l_n / l_m;
    let regime = classify(ratio);
    Ok(Diagnosis {
        ratio,
        regime,
        phi_min: (regime == Regime::MinimizersExist).then(|| phi_min(l_m, l_n)),
        second_variation_threshold: SECOND_VARIATION_THRESHOLD,
        nonexistence_bound: nonexistence_bound(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticMinimizers {
    /// `v(t) = (L_N/L_M) t`
    pub v: Reparametrization,
    /// `w(t) = −(L_N/L_M) t + L_N`
    pub w: Reparametrization,
    pub phi_min: f64,
}

pub fn analytic_minimizers(l_m: f64, l_n: f64, m: usize) -> Result<AnalyticMinimizers> {
    require_minimizers(l_m, l_n)?;
    let r = l_n / l_m;
    Ok(AnalyticMinimizers {
        v: Reparametrization::from_fn(l_m, l_n, Mode::Preserve, m, |t| r * t)?,
        w: Reparametrization::from_fn(l_m, l_n, Mode::Reverse, m, |t| -r * t + l_n)?,
        phi_min: phi_min(l_m, l_n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    /// Orientation preserving, built on `v`.
    H1,
    /// Orientation reversing, built on `w`.
    H2,
}

/// Images `ξ(u(t_k))` of the samples of `M` under the closed-form minimizer.
pub fn compose_minimizer(m_curve: &ArcLengthParam, n_curve: &ArcLengthParam, which: Which) -> Result<Vec<Point>> {
    let (l_m, l_n) = (m_curve.length(), n_curve.length());
    let mins = analytic_minimizers(l_m, l_n, m_curve.grid_size())?;
    let u = match which {
        Which::H1 => mins.v,
        Which::H2 => mins.w,
    };
    Ok(u.values()[..m_curve.grid_size()]
        .iter()
        .map(|&s| n_curve.point_at(s))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NecessaryCondition {
    Pass { min_udot_sq: f64 },
    Fail { min_udot_sq: f64, location: f64 },
}

impl NecessaryCondition {
    pub fn passed(&self) -> bool {
        matches!(self, NecessaryCondition::Pass { .. })
    }
}

/// `u̇² ≥ 1/3 − tol` at every interior grid point.
pub fn necessary_condition_check(u: &Reparametrization, tol: f64) -> NecessaryCondition {
    let (min, location) = min_udot_sq(u);
    if min >= SECOND_VARIATION_THRESHOLD - tol {
        NecessaryCondition::Pass { min_udot_sq: min }
    } else {
        NecessaryCondition::Fail {
            min_udot_sq: min,
            location,
        }
    }
}

/// [`necessary_condition_check`] at the default tolerance.
pub fn necessary_condition(u: &Reparametrization) -> NecessaryCondition {
    necessary_condition_check(u, NECESSARY_CONDITION_TOL)
}

/// Periodic central difference of a grid function on `k = 0..=m` whose lift
/// grows by `jump` per period.
fn periodic_derivative(values: &[f64], h: f64, jump: f64) -> Vec<f64> {
    let m = values.len() - 1;
    let at = |k: isize| -> f64 {
        if k < 0 {
            values[(k + m as isize) as usize] - jump
        } else if k as usize > m {
            values[k as usize - m] + jump
        } else {
            values[k as usize]
        }
    };
    (0..=m as isize).map(|k| (at(k + 1) - at(k - 1)) / (2.0 * h)).collect()
}

/// Derivatives `(u̇, ü, u⃛)` of the periodic lift of `u` (`u(t + L_M) = u(t) ± L_N`).
fn periodic_jet(u: &Reparametrization) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = u.spacing();
    let v = u.values();
    let jump = v[v.len() - 1] - v[0];
    let d1 = periodic_derivative(v, h, jump);
    let d2 = periodic_derivative(&d1, h, 0.0);
    let d3 = periodic_derivative(&d2, h, 0.0);
    (d1, d2, d3)
}

/// `½ d²/ds² Φ(h ∘ φ_s)|_{s=0}` where `φ_s` is the flow of `Y = y ∂/∂t`:
///
/// `∫ [L_Y h*g_N]² dt + ∫ (u̇² − 1) [L_Y L_Y h*g_N] dt`
///
/// with `[L_Y L_Y h*g_N] = 2(ü²y² + u̇u⃛y² + 5u̇üẏy + u̇²ÿy + 2u̇²ẏ²)`.
/// Derivatives of `u` are periodic central differences of its lift.
pub fn second_variation_1d(u: &Reparametrization, y: &VectorFieldJet1D) -> Result<f64> {
    let m = u.intervals();
    if m < MIN_SECOND_VARIATION_GRID {
        return Err(Error::GridTooCoarse {
            got: m,
            min: MIN_SECOND_VARIATION_GRID,
        });
    }
    if y.intervals() != m {
        return Err(Error::GridMismatch {
            expected: m + 1,
            got: y.intervals() + 1,
        });
    }
    if (y.length() - u.source_length()).abs() > 1e-9 * u.source_length() {
        return Err(Error::LengthMismatch {
            expected: u.source_length(),
            got: y.length(),
        });
    }
    let (d1, d2, d3) = periodic_jet(u);
    let first = lie_derivative_1d(&d1, &d2, y)?;
    let (yv, yd, ydd) = (y.y(), y.ydot(), y.yddot());
    let f: Vec<f64> = (0..=m)
        .map(|k| {
            let (a, b, c) = (d1[k], d2[k], d3[k]);
            let second = 2.0
                * (b * b * yv[k] * yv[k]
                    + a * c * yv[k] * yv[k]
                    + 5.0 * a * b * yd[k] * yv[k]
                    + a * a * ydd[k] * yv[k]
                    + 2.0 * a * a * yd[k] * yd[k]);
            first[k] * first[k] + (a * a - 1.0) * second
        })
        .collect();
    Ok(trapezoid(&f, u.spacing()))
}

/// Time-`s` flow of `x' = y(x)` together with `∂x/∂x₀`, by RK4.
fn flow(x0: f64, s: f64, field: &dyn Fn(f64) -> (f64, f64), steps: usize) -> (f64, f64) {
    let dt = s / steps as f64;
    let rhs = |x: f64, j: f64| {
        let (y, yd) = field(x);
        (y, yd * j)
    };
    let (mut x, mut j) = (x0, 1.0);
    for _ in 0..steps {
        let k1 = rhs(x, j);
        let k2 = rhs(x + 0.5 * dt * k1.0, j + 0.5 * dt * k1.1);
        let k3 = rhs(x + 0.5 * dt * k2.0, j + 0.5 * dt * k2.1);
        let k4 = rhs(x + dt * k3.0, j + dt * k3.1);
        x += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        j += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (x, j)
}

const FLOW_STEPS: usize = 16;

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_78,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_361_77,
    0.313_706_645_877_887_05,
    0.222_381_034_453_374_34,
    0.101_228_536_290_376_69,
];

/// Eight-point Gauss-Legendre rule on `[a, b]` (signed).
fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    r * GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(&x, w)| w * (f(c - r * x) + f(c + r * x)))
        .sum::<f64>()
}

/// `[Ψ(u∘φ_Δ) − 2Ψ(u) + Ψ(u∘φ_{−Δ})] / (2Δ²)`, an independent estimate of
/// [`second_variation_1d`] that integrates the flow of `y` numerically.
///
/// `udot` is evaluated at flowed abscissae and must accept any real argument
/// (periodic with period `l_m`); `field` returns `(y, ẏ)`.
pub fn flow_second_difference(
    l_m: f64,
    m: usize,
    udot: &dyn Fn(f64) -> f64,
    field: &dyn Fn(f64) -> (f64, f64),
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("flow step {delta} must be positive")));
    }
    let h = l_m / m as f64;
    let energy = |s: f64| -> f64 {
        (0..m)
            .map(|k| {
                let (x, j) = if s == 0.0 {
                    (k as f64 * h, 1.0)
                } else {
                    flow(k as f64 * h, s, field, FLOW_STEPS)
                };
                let a = udot(x) * j;
                let q = a * a - 1.0;
                q * q
            })
            .sum::<f64>()
            * h
    };
    Ok((energy(delta) - 2.0 * energy(0.0) + energy(-delta)) / (2.0 * delta * delta))
}

/// `u̇` between grid points: the periodic cubic Hermite interpolant of the
/// lift's `(u̇, ü)`, accepting any real argument.
pub fn slope_interpolant(u: &Reparametrization) -> impl Fn(f64) -> f64 {
    let (d1, d2, _) = periodic_jet(u);
    let (l_m, h, m) = (u.source_length(), u.spacing(), u.intervals());
    move |s: f64| {
        let s = s.rem_euclid(l_m);
        let k = ((s / h).floor() as usize).min(m - 1);
        let x = s / h - k as f64;
        let (p0, p1, m0, m1) = (d1[k], d1[k + 1], d2[k] * h, d2[k + 1] * h);
        let (x2, x3) = (x * x, x * x * x);
        (2.0 * x3 - 3.0 * x2 + 1.0) * p0 + (x3 - 2.0 * x2 + x) * m0 + (-2.0 * x3 + 3.0 * x2) * p1 + (x3 - x2) * m1
    }
}

/// [`flow_second_difference`] for a grid map, with `u̇` from
/// [`slope_interpolant`].
pub fn flow_second_difference_grid(
    u: &Reparametrization,
    field: &dyn Fn(f64) -> (f64, f64),
    delta: f64,
) -> Result<f64> {
    let m = u.intervals();
    if m < MIN_SECOND_VARIATION_GRID {
        return Err(Error::GridTooCoarse {
            got: m,
            min: MIN_SECOND_VARIATION_GRID,
        });
    }
    let udot = slope_interpolant(u);
    flow_second_difference(u.source_length(), m, &udot, field, delta)
}

/// Sawtooth `ρ` of period 1: `t` on `[0, 1/2)`, `1 − t` on `[1/2, 1)`.
pub fn sawtooth(s: f64) -> f64 {
    let f = s - s.floor();
    if f < 0.5 {
        f
    } else {
        1.0 - f
    }
}

fn sawtooth_slope(s: f64) -> f64 {
    if s - s.floor() < 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Bump `ζ(t) = exp(1 − 1/(1 − q²))`, `q = (t − center)/radius`, with
/// `ζ(center) = 1` and support `(center − radius, center + radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
}

impl Bump {
    pub fn value(&self, t: f64) -> f64 {
        let q = (t - self.center) / self.radius;
        if q.abs() >= 1.0 {
            return 0.0;
        }
        (1.0 - 1.0 / (1.0 - q * q)).exp()
    }

    pub fn slope(&self, t: f64) -> f64 {
        let q = (t - self.center) / self.radius;
        if q.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - q * q;
        -2.0 * q / (s * s) * self.value(t) / self.radius
    }
}

/// Probe field `y(t) = ε ρ(t/ε) ζ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeField {
    pub eps: f64,
    pub zeta: Bump,
    jet: VectorFieldJet1D,
}

impl ProbeField {
    pub fn y(&self, t: f64) -> f64 {
        self.eps * sawtooth(t / self.eps) * self.zeta.value(t)
    }

    /// `ẏ` away from the kinks of `ρ`.
    pub fn ydot(&self, t: f64) -> f64 {
        let s = t / self.eps;
        sawtooth_slope(s) * self.zeta.value(t) + self.eps * sawtooth(s) * self.zeta.slope(t)
    }

    /// `(y, ẏ)` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        (self.y(t), self.ydot(t))
    }

    /// Grid samples; `ÿ_k` is the mean of `ÿ` over the cell
    /// `[t_k − h/2, t_k + h/2]`, so the jumps of `ẏ` at the kinks appear as
    /// concentrated mass. Kinks on grid nodes are represented exactly.
    pub fn jet(&self) -> &VectorFieldJet1D {
        &self.jet
    }

    /// Mean of `ẏ²` over the `ρ`-period centred at `t`, by the midpoint rule
    /// with `samples` nodes.
    pub fn period_mean_ydot_sq(&self, t: f64, samples: usize) -> f64 {
        let a = t - 0.5 * self.eps;
        let step = self.eps / samples as f64;
        (0..samples)
            .map(|i| {
                let d = self.ydot(a + (i as f64 + 0.5) * step);
                d * d
            })
            .sum::<f64>()
            / samples as f64
    }

    /// Kinks of `ẏ` inside the support of `ζ`: peaks of `ρ` at `(j + ½)ε`
    /// and zeros at `jε`.
    fn kinks(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = (self.zeta.center - self.zeta.radius, self.zeta.center + self.zeta.radius);
        let first = (lo / self.eps).floor() as i64;
        let last = (hi / self.eps).ceil() as i64;
        let mut peaks = Vec::new();
        let mut zeros = Vec::new();
        for j in first..=last {
            let z = j as f64 * self.eps;
            let p = (j as f64 + 0.5) * self.eps;
            if z > lo && z < hi {
                zeros.push(z);
            }
            if p > lo && p < hi {
                peaks.push(p);
            }
        }
        (peaks, zeros)
    }

    /// Position after flowing from `t` for time `s`, and `∂/∂t` of it,
    /// resolving crossings of the peak `kink` exactly.
    fn flow_through(&self, t: f64, s: f64, kink: Option<f64>) -> (f64, f64) {
        let field = |x: f64| self.eval(x);
        match kink {
            None => flow(t, s, &field, FLOW_STEPS),
            Some(k) => {
                // time to reach the kink, then continue from it; in one
                // dimension ∂φ_s/∂t = y(φ_s(t))/y(t)
                let tau = gauss_legendre(t, k, |x| 1.0 / self.y(x));
                let x = flow(k, s - tau, &|x: f64| (self.y(x), 0.0), FLOW_STEPS).0;
                (x, self.y(x) / self.y(t))
            }
        }
    }

    /// [`flow_second_difference`] along this field with quadrature
    /// breakpoints at every kink and at the points that flow onto a peak, so
    /// that sub-grid crossing layers are integrated accurately.
    pub fn flow_second_difference(&self, udot: &dyn Fn(f64) -> f64, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("flow step {delta} must be positive")));
        }
        let l_m = self.jet.length();
        let (peaks, zeros) = self.kinks();
        let (lo, hi) = (self.zeta.center - self.zeta.radius, self.zeta.center + self.zeta.radius);
        let energy = |s: f64| -> f64 {
            let sources: Vec<f64> = peaks
                .iter()
                .map(|&k| if s == 0.0 { k } else { flow(k, -s, &|x: f64| self.eval(x), FLOW_STEPS).0 })
                .collect();
            let mut cuts = vec![0.0, lo, hi, l_m];
            cuts.extend(&peaks);
            cuts.extend(&zeros);
            cuts.extend(&sources);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            cuts.windows(2)
                .map(|w| {
                    let mid = 0.5 * (w[0] + w[1]);
                    let crossing = peaks
                        .iter()
                        .zip(&sources)
                        .find(|(&k, &src)| (src < mid && mid < k) || (k < mid && mid < src))
                        .map(|(&k, _)| k);
                    gauss_legendre(w[0], w[1], |t| {
                        let (x, j) = if s == 0.0 || self.y(t) == 0.0 {
                            (t, 1.0)
                        } else {
                            self.flow_through(t, s, crossing)
                        };
                        let a = udot(x) * j;
                        let q = a * a - 1.0;
                        q * q
                    })
                })
                .sum()
        };
        Ok((energy(delta) - 2.0 * energy(0.0) + energy(-delta)) / (2.0 * delta * delta))
    }

    /// `∫ ζ² dt` on the field's grid, the `ε → 0` limit of `∫ ẏ² dt`.
    pub fn zeta_sq_integral(&self) -> f64 {
        let m = self.jet.intervals();
        let h = self.jet.length() / m as f64;
        let f: Vec<f64> = (0..=m).map(|k| self.zeta.value(k as f64 * h).powi(2)).collect();
        trapezoid(&f, h)
    }
}

/// Builds the probe on the grid `t_k = k·l_m/m`. The grid operator is most
/// accurate when the kinks of `ρ(t/ε)` fall on grid nodes, i.e. when `ε/2` is
/// a multiple of the spacing; otherwise it converges at first order in `h/ε`.
pub fn probe_field(eps: f64, zeta: Bump, l_m: f64, m: usize) -> Result<ProbeField> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("probe scale {eps} must be positive")));
    }
    if !(l_m > 0.0) {
        return Err(Error::InvalidArgument(format!("length {l_m} must be positive")));
    }
    if !(zeta.radius > 0.0 && zeta.center - zeta.radius > 0.0 && zeta.center + zeta.radius < l_m) {
        return Err(Error::InvalidArgument(format!(
            "bump support ({}, {}) is not inside (0, {l_m})",
            zeta.center - zeta.radius,
            zeta.center + zeta.radius
        )));
    }
    let h = l_m / m as f64;
    let cells = 0.5 * eps / h;
    if (cells - cells.round()).abs() > 1e-6 * cells.max(1.0) {
        log::warn!("probe kinks are not on grid nodes (eps/2 = {cells:.3} cells); expect O(h/eps) error");
    }
    let mut probe = ProbeField {
        eps,
        zeta,
        jet: VectorFieldJet1D::zero(l_m, m),
    };
    let t: Vec<f64> = (0..=m).map(|k| k as f64 * h).collect();
    let y: Vec<f64> = t.iter().map(|&s| probe.y(s)).collect();
    let ydot: Vec<f64> = t.iter().map(|&s| probe.ydot(s)).collect();
    let yddot: Vec<f64> = t
        .iter()
        .map(|&s| (probe.ydot(s + 0.5 * h) - probe.ydot(s - 0.5 * h)) / h)
        .collect();
    probe.jet = VectorFieldJet1D::new(l_m, y, ydot, yddot)?;
    Ok(probe)
}

/// `2s²(3s² − 1) ∫ ζ²`, the `ε → 0` limit of the second variation at a
/// linear map of slope `s` along [`ProbeField`].
pub fn probe_limit(slope: f64, probe: &ProbeField) -> f64 {
    let s2 = slope * slope;
    2.0 * s2 * (3.0 * s2 - 1.0) * probe.zeta_sq_integral()
}

/// Piecewise-linear `φ` with `|φ̇| = 1`: `pairs` repetitions of a rising
/// segment of length `(L_M + L_N)/(2·pairs)` followed by a falling one of
/// length `(L_M − L_N)/(2·pairs)`, so `φ(0) = 0` and `φ(L_M) = L_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZigZagProfile {
    pub l_m: f64,
    pub l_n: f64,
    pub pairs: usize,
}

impl ZigZagProfile {
    pub fn new(l_m: f64, l_n: f64, pairs: usize) -> Result<Self> {
        check_lengths(l_m, l_n)?;
        if l_n >= l_m {
            return Err(Error::Regime(format!(
                "zig-zag sequences need L_N < L_M (got L_N/L_M = {}); use analytic_minimizers",
                l_n / l_m
            )));
        }
        if pairs == 0 {
            return Err(Error::InvalidArgument("zig-zag needs at least one pair".into()));
        }
        Ok(Self { l_m, l_n, pairs })
    }

    fn rise(&self) -> f64 {
        (self.l_m + self.l_n) / (2 * self.pairs) as f64
    }

    fn fall(&self) -> f64 {
        (self.l_m - self.l_n) / (2 * self.pairs) as f64
    }

    /// Corners `(t, φ(t))`, endpoints included.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        let (a, b) = (self.rise(), self.fall());
        let mut pts = vec![(0.0, 0.0)];
        for i in 0..self.pairs {
            let t0 = i as f64 * (a + b);
            let y0 = i as f64 * (a - b);
            pts.push((t0 + a, y0 + a));
            pts.push((t0 + a + b, y0 + a - b));
        }
        let last = pts.len() - 1;
        pts[last] = (self.l_m, self.l_n);
        pts
    }

    /// `φ(t)` on `[0, L_M]`, continued by odd reflection through both
    /// endpoints so that the slope stays continuous there.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return -self.eval(-t);
        }
        if t > self.l_m {
            return 2.0 * self.l_n - self.eval(2.0 * self.l_m - t);
        }
        let period = self.rise() + self.fall();
        let i = ((t / period).floor() as usize).min(self.pairs - 1);
        let s = t - i as f64 * period;
        let base = i as f64 * (self.rise() - self.fall());
        if s <= self.rise() {
            base + s
        } else {
            base + self.rise() - (s - self.rise())
        }
    }

    /// `Σ len_i (φ̇_i² − 1)²` over the linear pieces: `Ψ(φ)` in the a.e. sense.
    pub fn ae_energy(&self) -> f64 {
        self.breakpoints()
            .windows(2)
            .map(|w| {
                let len = w[1].0 - w[0].0;
                let s = (w[1].1 - w[0].1) / len;
                len * (s * s - 1.0).powi(2)
            })
            .sum()
    }
}

/// Grid samples of `φ` convolved with the normalized discrete bump
/// `exp(1/(s² − 1))`, `s = jh/width`. Endpoint values are pinned exactly.
pub fn mollify(profile: &ZigZagProfile, width: f64, m: usize) -> Result<Vec<f64>> {
    let h = profile.l_m / m as f64;
    let reach = (width / h).ceil() as isize - 1;
    if reach < 2 {
        return Err(Error::GridTooCoarse {
            got: m,
            min: (3.0 * profile.l_m / width).ceil() as usize,
        });
    }
    if width > profile.l_m {
        return Err(Error::InvalidArgument(format!("mollifier width {width} exceeds L_M")));
    }
    let raw: Vec<f64> = (-reach..=reach)
        .map(|j| {
            let s = j as f64 * h / width;
            if s.abs() < 1.0 {
                (1.0 / (s * s - 1.0)).exp()
            } else {
                0.0
            }
        })
        .collect();
    let norm: f64 = raw.iter().sum();
    let kernel: Vec<f64> = raw.iter().map(|w| w / norm).collect();
    let mut values: Vec<f64> = (0..=m as isize)
        .map(|i| {
            kernel
                .iter()
                .zip(-reach..=reach)
                .map(|(w, j)| w * profile.eval((i - j) as f64 * h))
                .sum()
        })
        .collect();
    values[0] = 0.0;
    values[m] = profile.l_n;
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZigZagSequence {
    pub k: usize,
    /// Mollifier radius `δ_k = L_M/(16k)`.
    pub width: f64,
    pub energy: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// Mollifier radius for the `k`-th term.
pub fn sequence_width(l_m: f64, k: usize) -> f64 {
    l_m / (16 * k) as f64
}

/// `φ_k` for `k = 1..=k_max`: the fixed [`ZigZagProfile`] with
/// [`DEFAULT_PAIRS`] pairs mollified at radius `δ_k = L_M/(16k)`.
pub fn zigzag_sequence(l_m: f64, l_n: f64, k_max: usize, m: usize) -> Result<Vec<ZigZagSequence>> {
    zigzag_sequence_with(&ZigZagProfile::new(l_m, l_n, DEFAULT_PAIRS)?, k_max, m)
}

pub fn zigzag_sequence_with(profile: &ZigZagProfile, k_max: usize, m: usize) -> Result<Vec<ZigZagSequence>> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let h = profile.l_m / m as f64;
    (1..=k_max)
        .map(|k| {
            let width = sequence_width(profile.l_m, k);
            let values = mollify(profile, width, m)?;
            let energy = psi_values(&values, h)?;
            Ok(ZigZagSequence {
                k,
                width,
                energy,
                values,
            })
        })
        .collect()
}

/// Least-squares slope of `log Ψ(φ_k)` against `log k` over `k ≥ 2`.
pub fn loglog_slope(seq: &[ZigZagSequence]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = seq
        .iter()
        .filter(|s| s.k >= 2 && s.energy > 0.0)
        .map(|s| ((s.k as f64).ln(), s.energy.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceRow {
    pub k: usize,
    pub width: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub l_m: f64,
    pub l_n: f64,
    pub grid: usize,
    pub pairs: usize,
    /// `Ψ(φ)` of the unmollified profile in the a.e. sense.
    pub profile_energy: f64,
    pub rows: Vec<SequenceRow>,
    pub loglog_slope: Option<f64>,
}

pub fn sequence_report(l_m: f64, l_n: f64, k_max: usize, m: usize) -> Result<SequenceReport> {
    let profile = ZigZagProfile::new(l_m, l_n, DEFAULT_PAIRS)?;
    let seq = zigzag_sequence_with(&profile, k_max, m)?;
    Ok(SequenceReport {
        l_m,
        l_n,
        grid: m,
        pairs: profile.pairs,
        profile_energy: profile.ae_energy(),
        loglog_slope: loglog_slope(&seq),
        rows: seq
            .iter()
            .map(|s| SequenceRow {
                k: s.k,
                width: s.width,
                psi: s.energy,
            })
            .collect(),
    })
}

/// Energy, stationarity and necessary-condition summary of a given map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDiagnosis {
    pub psi: f64,
    pub min_udot_sq: f64,
    pub min_location: f64,
    pub el_residual_sup: f64,
    pub necessary_condition: NecessaryCondition,
}

pub fn diagnose_map(u: &Reparametrization) -> Result<MapDiagnosis> {
    let report = functional::energy_report(u)?;
    let (min, location) = min_udot_sq(u);
    Ok(MapDiagnosis {
        psi: report.psi,
        min_udot_sq: min,
        min_location: location,
        el_residual_sup: report.el_residual_sup,
        necessary_condition: necessary_condition(u),
    })
}
