//! The reduced energy `Ψ(u) = ∫ (u̇² − 1)² dt`, its exact discrete gradient,
//! the full curve energy `Φ`, and the Euler-Lagrange residual.
//!
//! Discretization: uniform grid `t_k = k·h`, `h = L_M/m`, `k = 0..=m`.
//! `u̇` uses central differences in the interior and one-sided differences at
//! the two endpoints; integrals use the composite trapezoid rule. With
//! one-sided endpoint differences the weighted sum of `u̇` telescopes to
//! `u(L_M) − u(0)`, so linear maps are exact discrete stationary points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ArcLengthParam;

/// Smallest number of grid intervals accepted by the energy evaluators.
pub const MIN_INTERVALS: usize = 16;

/// Lower bound on `u̇²` at a relative minimum.
pub const SECOND_VARIATION_THRESHOLD: f64 = 1.0 / 3.0;

/// Default tolerance for the `u̇² ≥ 1/3` check.
pub const NECESSARY_CONDITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `u(0) = 0`, `u(L_M) = L_N`.
    Preserve,
    /// `u(0) = L_N`, `u(L_M) = 0`.
    Reverse,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Preserve => "preserve",
            Mode::Reverse => "reverse",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Mode::Preserve => Mode::Reverse,
            Mode::Reverse => Mode::Preserve,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "preserve" => Ok(Mode::Preserve),
            "reverse" => Ok(Mode::Reverse),
            other => Err(Error::Parse(format!(
                "unknown mode '{other}', expected preserve or reverse"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grid representation `u_k = u(t_k)` of a diffeomorphism between the
/// arc-length intervals `[0, L_M]` and `[0, L_N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparametrization {
    l_m: f64,
    l_n: f64,
    mode: Mode,
    values: Vec<f64>,
}

impl Reparametrization {
    /// Validates exact boundary values and strict monotonicity.
    pub fn new(l_m: f64, l_n: f64, mode: Mode, values: Vec<f64>) -> Result<Self> {
        if !(l_m > 0.0 && l_m.is_finite() && l_n > 0.0 && l_n.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lengths must be positive and finite (L_M = {l_m}, L_N = {l_n})"
            )));
        }
        if values.len() < 2 {
            return Err(Error::InvalidReparametrization("need at least two grid values".into()));
        }
        let (start, end) = boundary_values(l_n, mode);
        let last = values.len() - 1;
        if values[0] != start || values[last] != end {
            return Err(Error::InvalidReparametrization(format!(
                "{mode} mode needs u(0) = {start} and u(L_M) = {end}, got {} and {}",
                values[0], values[last]
            )));
        }
        for k in 0..last {
            let ok = match mode {
                Mode::Preserve => values[k + 1] > values[k],
                Mode::Reverse => values[k + 1] < values[k],
            };
            if !ok {
                return Err(Error::InvalidReparametrization(format!(
                    "not strictly monotone between grid points {k} and {}",
                    k + 1
                )));
            }
        }
        Ok(Self {
            l_m,
            l_n,
            mode,
            values,
        })
    }

    /// Samples `f` on `m` intervals; boundary values are pinned exactly.
    pub fn from_fn(l_m: f64, l_n: f64, mode: Mode, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = l_m / m as f64;
        let mut values: Vec<f64> = (0..=m).map(|k| f(k as f64 * h)).collect();
        let (start, end) = boundary_values(l_n, mode);
        values[0] = start;
        values[m] = end;
        Self::new(l_m, l_n, mode, values)
    }

    /// Builds a preserve-mode map from positive increments `u_{k+1} − u_k`
    /// (reverse mode uses `u_k − u_{k+1}`). The last value is pinned to the
    /// boundary condition.
    pub fn from_increments(l_m: f64, l_n: f64, mode: Mode, increments: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for d in increments {
            acc += d;
            values.push(acc);
        }
        let m = increments.len();
        values[m] = l_n;
        if mode == Mode::Reverse {
            for v in values.iter_mut() {
                *v = l_n - *v;
            }
            values[0] = l_n;
            values[m] = 0.0;
        }
        Self::new(l_m, l_n, mode, values)
    }

    pub fn source_length(&self) -> f64 {
        self.l_m
    }

    pub fn target_length(&self) -> f64 {
        self.l_n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of grid intervals `m`.
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.l_m / self.intervals() as f64
    }

    pub fn abscissae(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.values.len()).map(|k| k as f64 * h).collect()
    }

    /// Positive increments `|u_{k+1} − u_k|`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
    }

    /// `t ↦ L_N − u(t)` in the opposite mode.
    pub fn reflected(&self) -> Self {
        let mut values: Vec<f64> = self.values.iter().map(|v| self.l_n - v).collect();
        let (start, end) = boundary_values(self.l_n, self.mode.flipped());
        let last = values.len() - 1;
        values[0] = start;
        values[last] = end;
        Self {
            l_m: self.l_m,
            l_n: self.l_n,
            mode: self.mode.flipped(),
            values,
        }
    }
}

/// `(u(0), u(L_M))` for a boundary mode.
pub fn boundary_values(l_n: f64, mode: Mode) -> (f64, f64) {
    match mode {
        Mode::Preserve => (0.0, l_n),
        Mode::Reverse => (l_n, 0.0),
    }
}

fn check_grid(intervals: usize) -> Result<()> {
    if intervals < MIN_INTERVALS {
        return Err(Error::GridTooCoarse {
            got: intervals,
            min: MIN_INTERVALS,
        });
    }
    Ok(())
}

/// Grid derivative: central differences inside, one-sided at the ends.
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let m = values.len() - 1;
    let mut d = Vec::with_capacity(m + 1);
    d.push((values[1] - values[0]) / h);
    for k in 1..m {
        d.push((values[k + 1] - values[k - 1]) / (2.0 * h));
    }
    d.push((values[m] - values[m - 1]) / h);
    d
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(f: &[f64], h: f64) -> f64 {
    let m = f.len() - 1;
    let inner: f64 = f[1..m].iter().sum();
    h * (inner + 0.5 * (f[0] + f[m]))
}

/// Discrete `Ψ` of raw grid values with spacing `h`. No monotonicity is
/// required, so this also evaluates the non-injective maps of minimizing
/// sequences.
pub fn psi_values(values: &[f64], h: f64) -> Result<f64> {
    check_grid(values.len().saturating_sub(1))?;
    let f: Vec<f64> = derivative(values, h)
        .into_iter()
        .map(|d| {
            let s = d * d - 1.0;
            s * s
        })
        .collect();
    Ok(trapezoid(&f, h))
}

/// Exact gradient of [`psi_values`] with respect to every grid value,
/// endpoints included.
pub fn psi_gradient_values(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let m = values.len().saturating_sub(1);
    check_grid(m)?;
    let d = derivative(values, h);
    let mut g = vec![0.0; m + 1];
    for (k, &dk) in d.iter().enumerate() {
        let w = if k == 0 || k == m { 0.5 } else { 1.0 };
        let a = w * h * 4.0 * dk * (dk * dk - 1.0);
        if k == 0 {
            g[1] += a / h;
            g[0] -= a / h;
        } else if k == m {
            g[m] += a / h;
            g[m - 1] -= a / h;
        } else {
            g[k + 1] += a / (2.0 * h);
            g[k - 1] -= a / (2.0 * h);
        }
    }
    Ok(g)
}

/// `Ψ(u) = ∫₀^{L_M} (u̇² − 1)² dt`.
pub fn psi(u: &Reparametrization) -> Result<f64> {
    psi_values(&u.values, u.spacing())
}

/// Gradient of the discrete `Ψ` with respect to the interior values
/// `u_1 … u_{m−1}`; the endpoints are fixed by the boundary conditions.
pub fn psi_gradient(u: &Reparametrization) -> Result<Vec<f64>> {
    let mut g = psi_gradient_values(&u.values, u.spacing())?;
    g.pop();
    g.remove(0);
    Ok(g)
}

/// Pointwise `u̇ ü (3u̇² − 1)` at the interior grid points.
pub fn el_residual_values(values: &[f64], h: f64) -> Vec<f64> {
    let m = values.len() - 1;
    (1..m)
        .map(|k| {
            let d1 = (values[k + 1] - values[k - 1]) / (2.0 * h);
            let d2 = (values[k + 1] - 2.0 * values[k] + values[k - 1]) / (h * h);
            d1 * d2 * (3.0 * d1 * d1 - 1.0)
        })
        .collect()
}

pub fn el_residual(u: &Reparametrization) -> Vec<f64> {
    el_residual_values(&u.values, u.spacing())
}

/// Minimum of `u̇²` over interior grid points (central differences) and the
/// abscissa where it occurs.
pub fn min_udot_sq(u: &Reparametrization) -> (f64, f64) {
    let h = u.spacing();
    let v = &u.values;
    (1..u.intervals())
        .map(|k| {
            let d = (v[k + 1] - v[k - 1]) / (2.0 * h);
            (d * d, k as f64 * h)
        })
        .fold((f64::INFINITY, 0.0), |best, cur| if cur.0 < best.0 { cur } else { best })
}

fn check_length(expected: f64, got: f64) -> Result<()> {
    if (expected - got).abs() > 1e-6 * expected {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

/// `Φ(h)` for `h = ξ ∘ u ∘ γ⁻¹`.
///
/// Each grid abscissa `t_k` is sent to the point `ξ(u_k)` of the target
/// polyline, the composite point map is differentiated with the same stencils
/// as [`psi`], and `(|d/dt (h∘γ)|² − 1)²` is integrated. The source curve only
/// supplies `L_M` and the arc-length grid.
pub fn phi_curves(m_curve: &ArcLengthParam, n_curve: &ArcLengthParam, u: &Reparametrization) -> Result<f64> {
    check_length(u.l_m, m_curve.length())?;
    check_length(u.l_n, n_curve.length())?;
    let m = u.intervals();
    check_grid(m)?;
    let h = u.spacing();
    let pts: Vec<[f64; 2]> = u.values.iter().map(|&s| n_curve.point_at(s)).collect();
    let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
    let dx = derivative(&xs, h);
    let dy = derivative(&ys, h);
    let f: Vec<f64> = dx
        .iter()
        .zip(&dy)
        .map(|(a, b)| {
            let s = a * a + b * b - 1.0;
            s * s
        })
        .collect();
    Ok(trapezoid(&f, h))
}

/// Summary of a reparametrization's energy and first/second-order diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub psi: f64,
    /// `Φ` through the curves, when evaluated.
    pub phi: Option<f64>,
    pub el_residual_sup: f64,
    pub min_udot_sq: f64,
    pub second_variation_ok: bool,
    pub orientation: Mode,
}

pub fn energy_report(u: &Reparametrization) -> Result<EnergyReport> {
    let psi = psi(u)?;
    let el_residual_sup = el_residual(u).iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let (min_udot_sq, _) = min_udot_sq(u);
    Ok(EnergyReport {
        psi,
        phi: None,
        el_residual_sup,
        min_udot_sq,
        second_variation_ok: min_udot_sq >= SECOND_VARIATION_THRESHOLD - NECESSARY_CONDITION_TOL,
        orientation: u.mode,
    })
}
