//! Reciprocal-space free-space dispersion on a 2D rectangular lattice,
//! regularized by a Gaussian position spread `a_ho`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{DispersionGrid, KAxis};
use super::special::faddeeva;
use crate::error::{Error, Result};
use crate::model::{Polarization, Units};

/// Relative tail above which the reciprocal sum is reported as unconverged.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Default Gaussian spread in units of the lattice constant.
pub const DEFAULT_A_HO: f64 = 0.1;

/// `I0`, `I2` and the prefactor `C` at in-plane momentum magnitude `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedIntegrals {
    pub i0: Complex64,
    pub i2: Complex64,
    pub c: f64,
    pub lambda: Complex64,
}

/// `Lambda = sqrt(k_a^2 - p^2)`, continued to `i sqrt(p^2 - k_a^2)` outside
/// the light cone.
pub fn lambda(p: f64, k_a: f64) -> Result<Complex64> {
    let l2 = k_a * k_a - p * p;
    if l2 > 0.0 {
        Ok(Complex64::new(l2.sqrt(), 0.0))
    } else if l2 < 0.0 {
        Ok(Complex64::new(0.0, (-l2).sqrt()))
    } else {
        Err(Error::Singular(format!("|p| = k_A = {k_a} (light cone)")))
    }
}

pub fn regularized_integrals(p: f64, k_a: f64, a_ho: f64) -> Result<RegularizedIntegrals> {
    let lam = lambda(p, k_a)?;
    let c = (-0.5 * a_ho * a_ho * p * p).exp() / (2.0 * PI * k_a * k_a);
    // pi e^{-z^2} (-i + erfi z) / Lambda with z = a_ho Lambda / sqrt 2, i.e. -i pi w(z) / Lambda.
    let z = lam * (a_ho / 2f64.sqrt());
    let i0 = -Complex64::i() * PI * c * faddeeva(z) / lam;
    let i2 = lam * lam * i0 - c * (2.0 * PI).sqrt() / a_ho;
    Ok(RegularizedIntegrals { i0, i2, c, lambda: lam })
}

/// Regularized tensor `g*(p)`.
pub fn g_star(p: [f64; 2], k_a: f64, a_ho: f64) -> Result<[[Complex64; 3]; 3]> {
    let r = regularized_integrals(p[0].hypot(p[1]), k_a, a_ho)?;
    let k2 = k_a * k_a;
    let zero = Complex64::new(0.0, 0.0);
    let xx = -(k2 - p[0] * p[0]) * r.i0;
    let yy = -(k2 - p[1] * p[1]) * r.i0;
    let zz = -(k2 * r.i0 - r.i2);
    let xy = p[0] * p[1] * r.i0;
    Ok([[xx, xy, zero], [xy, yy, zero], [zero, zero, zz]])
}

/// Value of the regularized dispersion at one k point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedValue {
    pub omega: Complex64,
    /// Outermost-shell magnitude relative to the full sum.
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizedDispersion {
    pub k_a: f64,
    pub polarization: Polarization,
    #[serde(default = "default_a_ho")]
    pub a_ho: f64,
    #[serde(default = "unit_spacings")]
    pub spacings: [f64; 2],
    /// Reciprocal shells `max(|m|, |n|) <= shells`; derived from `a_ho` if absent.
    #[serde(default)]
    pub shells: Option<usize>,
    /// Add the Gaussian-smeared `Re G*(0)` offset.
    #[serde(default)]
    pub offset: bool,
}

fn default_a_ho() -> f64 {
    DEFAULT_A_HO
}

fn unit_spacings() -> [f64; 2] {
    [1.0, 1.0]
}

impl RegularizedDispersion {
    pub fn new(k_a: f64, polarization: Polarization) -> Self {
        Self {
            k_a,
            polarization,
            a_ho: DEFAULT_A_HO,
            spacings: [1.0, 1.0],
            shells: None,
            offset: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_a > 0.0 && self.k_a.is_finite()) {
            return Err(Error::Model(format!("k_A must be > 0, got {}", self.k_a)));
        }
        if !(self.a_ho > 0.0 && self.a_ho.is_finite()) {
            return Err(Error::InvalidArgument(format!("a_ho must be > 0, got {}", self.a_ho)));
        }
        if !self.spacings.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::Geometry("lattice spacings must be positive".into()));
        }
        if self.shells == Some(0) {
            return Err(Error::InvalidArgument("reciprocal cutoff must be >= 1 shell".into()));
        }
        Ok(())
    }

    /// Momentum beyond which `exp(-a_ho^2 p^2 / 2) < 1e-12`.
    pub fn p_max(&self) -> f64 {
        (2.0 * 1e12f64.ln()).sqrt() / self.a_ho
    }

    /// Smallest shell count whose outermost shell lies beyond `p_max` for
    /// every k in the first zone.
    pub fn default_shells(&self) -> usize {
        let g = [2.0 * PI / self.spacings[0], 2.0 * PI / self.spacings[1]];
        let kmax = 0.5 * g[0].hypot(g[1]);
        ((self.p_max() + kmax) / g[0].min(g[1])).ceil() as usize + 1
    }

    pub fn shells(&self) -> usize {
        self.shells.unwrap_or_else(|| self.default_shells())
    }

    /// `Re omega / gamma_A` plus the imaginary part of the same expression.
    pub fn evaluate(&self, k: [f64; 2]) -> Result<RegularizedValue> {
        self.validate()?;
        let m = self.shells() as i64;
        let g = [2.0 * PI / self.spacings[0], 2.0 * PI / self.spacings[1]];
        let mut sum = Complex64::new(0.0, 0.0);
        let mut outer = 0.0;
        for iy in -m..=m {
            for ix in -m..=m {
                let p = [ix as f64 * g[0] - k[0], iy as f64 * g[1] - k[1]];
                let term = self.polarization.project(&g_star(p, self.k_a, self.a_ho)?);
                sum += term;
                if ix.abs() == m || iy.abs() == m {
                    outer += term.norm();
                }
            }
        }
        let tail = outer / sum.norm().max(f64::MIN_POSITIVE);
        if !(tail <= TAIL_TOLERANCE) {
            return Err(Error::ReciprocalSum {
                tail,
                cutoff: m as f64,
            });
        }
        let pref = (0.5 * self.k_a * self.k_a * self.a_ho * self.a_ho).exp() / (self.spacings[0] * self.spacings[1]);
        let mut omega = -(3.0 * PI / self.k_a) * pref * sum;
        if self.offset {
            omega.re += (3.0 * PI / self.k_a) * gaussian_offset(self.k_a, self.a_ho);
        }
        Ok(RegularizedValue { omega, tail })
    }

    /// Samples `omega` on a 2D grid. Nodes closer than `mask_steps` grid
    /// steps to the light-cone ring are masked; subradiant nodes are flagged.
    pub fn sample(&self, ax: KAxis, ay: KAxis, mask_steps: f64) -> Result<DispersionGrid> {
        self.validate()?;
        let h = ax.step().min(ay.step());
        let nx = ax.n;
        let results: Vec<Result<Complex64>> = (0..nx * ay.n)
            .into_par_iter()
            .map(|i| {
                let k = [ax.k(i % nx), ay.k(i / nx)];
                if self.ring_distance(k) < mask_steps * h {
                    return Ok(Complex64::new(f64::NAN, f64::NAN));
                }
                self.evaluate(k).map(|v| v.omega)
            })
            .collect();
        let omega = results.into_iter().collect::<Result<Vec<_>>>()?;
        let mut grid = DispersionGrid::from_samples_2d(ax, ay, omega, Units::gamma_a())?;
        grid.mark_subradiant(self.k_a);
        Ok(grid)
    }

    /// `min_G | |k - G| - k_A |` over nearby reciprocal vectors.
    pub fn ring_distance(&self, k: [f64; 2]) -> f64 {
        let g = [2.0 * PI / self.spacings[0], 2.0 * PI / self.spacings[1]];
        let mut best = f64::INFINITY;
        for iy in -2i64..=2 {
            for ix in -2i64..=2 {
                let r = (k[0] - ix as f64 * g[0]).hypot(k[1] - iy as f64 * g[1]);
                best = best.min((r - self.k_a).abs());
            }
        }
        best
    }
}

/// `Re` of the Gaussian-smeared Green's tensor at the origin, projected on
/// any polarization: `(2/3) int r n(r) cos(k r) dr` with
/// `n(r) = (2 pi a^2)^{-3/2} exp(-r^2 / 2a^2)`. The contact term is dropped.
pub fn gaussian_offset(k_a: f64, a_ho: f64) -> f64 {
    let norm = (2.0 * PI * a_ho * a_ho).powf(-1.5);
    let f = |r: f64| r * norm * (-0.5 * r * r / (a_ho * a_ho)).exp() * (k_a * r).cos();
    let n = 4000;
    let upper = 40.0 * a_ho;
    let h = upper / n as f64;
    let mut acc = f(0.0) + f(upper);
    for j in 1..n {
        acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(j as f64 * h);
    }
    (2.0 / 3.0) * acc * h / 3.0
}

/// Convenience wrapper returning `Re omega / gamma_A`.
pub fn regularized_dispersion_2d(
    k: [f64; 2],
    k_a: f64,
    polarization: Polarization,
    a_ho: f64,
    shells: Option<usize>,
) -> Result<f64> {
    let mut d = RegularizedDispersion::new(k_a, polarization);
    d.a_ho = a_ho;
    d.shells = shells;
    Ok(d.evaluate(k)?.omega.re)
}
