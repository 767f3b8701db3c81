//! Uniform Brillouin-zone grids and the sampled dispersion container.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::closed_form::Dispersion1d;
use super::derivatives::{central_differences, hessian_2d, HessianField};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::model::Units;

/// Uniform samples `k_j = start + j * period / n`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KAxis {
    pub n: usize,
    pub start: f64,
    pub period: f64,
}

impl KAxis {
    /// `[-pi, pi)` with `n` nodes.
    pub fn brillouin(n: usize) -> Self {
        Self {
            n,
            start: -PI,
            period: 2.0 * PI,
        }
    }

    /// `[-pi/a, pi/a)` for lattice spacing `a`, optionally offset by half a
    /// step so that no node falls on `k = 0`.
    pub fn reciprocal(n: usize, spacing: f64, cell_centered: bool) -> Self {
        let period = 2.0 * PI / spacing;
        let h = period / n as f64;
        Self {
            n,
            start: -period / 2.0 + if cell_centered { h / 2.0 } else { 0.0 },
            period,
        }
    }

    /// One period starting at `start`, e.g. `[-k_A, 2 pi - k_A)`.
    pub fn shifted(n: usize, start: f64) -> Self {
        Self {
            n,
            start,
            period: 2.0 * PI,
        }
    }

    pub fn step(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn k(&self, j: usize) -> f64 {
        self.start + j as f64 * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.k(j)).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n < 5 {
            return Err(Error::InvalidArgument(format!("k grid needs at least 5 points, got {}", self.n)));
        }
        if !(self.period > 0.0 && self.period.is_finite() && self.start.is_finite()) {
            return Err(Error::InvalidArgument("k grid period must be positive".into()));
        }
        Ok(())
    }
}

/// Distance from `k` to the nearest image of `k0` under shifts by `period`.
pub fn periodic_distance(k: f64, k0: f64, period: f64) -> f64 {
    let d = (k - k0).rem_euclid(period);
    d.min(period - d)
}

/// Sampled complex dispersion on a 1D or 2D grid with derivative fields.
///
/// Arrays are row-major with `kx` fastest. Masked nodes (singular points)
/// carry NaN in `omega` and every derived field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionGrid {
    pub dimension: usize,
    pub axes: [KAxis; 2],
    pub omega: Vec<Complex64>,
    pub masked: Vec<bool>,
    pub subradiant: Vec<bool>,
    pub d1: Option<Vec<f64>>,
    pub d2: Option<Vec<f64>>,
    pub hessian: Option<HessianField>,
    pub units: Units,
}

impl DispersionGrid {
    /// Builds a 1D grid from raw samples; NaN samples become masked.
    pub fn from_samples_1d(axis: KAxis, omega: Vec<Complex64>, units: Units) -> Result<Self> {
        axis.validate()?;
        if omega.len() != axis.n {
            return Err(Error::Dimension {
                expected: axis.n,
                got: omega.len(),
            });
        }
        let masked = omega.iter().map(|z| !(z.re.is_finite() && z.im.is_finite())).collect();
        Ok(Self {
            dimension: 1,
            axes: [axis, KAxis { n: 1, start: 0.0, period: 2.0 * PI }],
            subradiant: vec![false; axis.n],
            omega,
            masked,
            d1: None,
            d2: None,
            hessian: None,
            units,
        })
    }

    pub fn from_samples_2d(ax: KAxis, ay: KAxis, omega: Vec<Complex64>, units: Units) -> Result<Self> {
        ax.validate()?;
        ay.validate()?;
        if omega.len() != ax.n * ay.n {
            return Err(Error::Dimension {
                expected: ax.n * ay.n,
                got: omega.len(),
            });
        }
        let masked = omega.iter().map(|z| !(z.re.is_finite() && z.im.is_finite())).collect();
        Ok(Self {
            dimension: 2,
            axes: [ax, ay],
            subradiant: vec![false; ax.n * ay.n],
            omega,
            masked,
            d1: None,
            d2: None,
            hessian: None,
            units,
        })
    }

    /// Samples a 1D dispersion, masking nodes within one step of its
    /// singular points. With `analytic`, derivatives come from the
    /// dispersion itself; otherwise from central differences.
    pub fn sample_1d(disp: &dyn Dispersion1d, axis: KAxis, analytic: bool) -> Result<Self> {
        axis.validate()?;
        let h = axis.step();
        let sing = disp.singular_points();
        let ks = axis.nodes();
        let masked: Vec<bool> = ks
            .iter()
            .map(|&k| sing.iter().any(|&s| periodic_distance(k, s, 2.0 * PI) < h * (1.0 - 1e-9)))
            .collect();
        let nan = Complex64::new(f64::NAN, f64::NAN);
        let mut omega = Vec::with_capacity(axis.n);
        for (k, m) in ks.iter().zip(&masked) {
            omega.push(if *m { nan } else { disp.omega(*k)? });
        }
        let mut grid = Self::from_samples_1d(axis, omega, disp.units())?;
        grid.masked = masked;
        if let Some(k_a) = disp.k_a() {
            grid.mark_subradiant(k_a);
        }
        if analytic {
            let mut d1 = Vec::with_capacity(axis.n);
            let mut d2 = Vec::with_capacity(axis.n);
            for (k, m) in ks.iter().zip(&grid.masked) {
                if *m {
                    d1.push(f64::NAN);
                    d2.push(f64::NAN);
                } else {
                    d1.push(disp.d1(*k)?);
                    d2.push(disp.d2(*k)?);
                }
            }
            grid.d1 = Some(d1);
            grid.d2 = Some(d2);
        } else {
            grid.compute_derivatives()?;
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn kx(&self) -> Vec<f64> {
        self.axes[0].nodes()
    }

    pub fn ky(&self) -> Vec<f64> {
        if self.dimension == 1 {
            vec![0.0]
        } else {
            self.axes[1].nodes()
        }
    }

    /// `(kx, ky)` of flat index `i`.
    pub fn k_at(&self, i: usize) -> [f64; 2] {
        let nx = self.axes[0].n;
        let kx = self.axes[0].k(i % nx);
        let ky = if self.dimension == 1 { 0.0 } else { self.axes[1].k(i / nx) };
        [kx, ky]
    }

    pub fn re_omega(&self) -> Vec<f64> {
        self.omega
            .iter()
            .zip(&self.masked)
            .map(|(z, m)| if *m { f64::NAN } else { z.re })
            .collect()
    }

    /// Flags nodes whose distance to every reciprocal-lattice image of the
    /// origin exceeds `k_a`.
    pub fn mark_subradiant(&mut self, k_a: f64) {
        let px = self.axes[0].period;
        let py = self.axes[1].period;
        for i in 0..self.len() {
            let [kx, ky] = self.k_at(i);
            let dx = periodic_distance(kx, 0.0, px);
            let dy = if self.dimension == 1 { 0.0 } else { periodic_distance(ky, 0.0, py) };
            self.subradiant[i] = dx.hypot(dy) > k_a;
        }
    }

    /// Central-difference first and second derivatives of `Re omega` (1D).
    pub fn compute_derivatives(&mut self) -> Result<()> {
        if self.dimension != 1 {
            return Err(Error::InvalidArgument("1D derivatives requested on a 2D grid".into()));
        }
        let (d1, d2) = central_differences(&self.re_omega(), self.axes[0].step(), true)?;
        self.d1 = Some(d1);
        self.d2 = Some(d2);
        Ok(())
    }

    /// Finite-difference Hessian of `Re omega` (2D).
    pub fn compute_hessian(&mut self) -> Result<&HessianField> {
        if self.dimension != 2 {
            return Err(Error::InvalidArgument("Hessian requested on a 1D grid".into()));
        }
        let h = hessian_2d(
            &self.re_omega(),
            [self.axes[0].n, self.axes[1].n],
            [self.axes[0].step(), self.axes[1].step()],
        )?;
        self.hessian = Some(h);
        Ok(self.hessian.as_ref().expect("just set"))
    }

    /// CSV with columns `kx, ky, re_omega, im_omega, <d2|det_hessian>, subradiant`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let (label, field): (&str, Option<&Vec<f64>>) = if self.dimension == 1 {
            ("d2", self.d2.as_ref())
        } else {
            ("det_hessian", self.hessian.as_ref().map(|h| &h.det))
        };
        writeln!(out, "kx,ky,re_omega,im_omega,{label},subradiant")?;
        for i in 0..self.len() {
            let [kx, ky] = self.k_at(i);
            let z = if self.masked[i] {
                Complex64::new(f64::NAN, f64::NAN)
            } else {
                self.omega[i]
            };
            let f = field.map(|v| v[i]).unwrap_or(f64::NAN);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(kx),
                fmt_f64(ky),
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(f),
                u8::from(self.subradiant[i])
            )?;
        }
        Ok(())
    }

    /// CSV for 1D grids with `omega, d1, d2` columns.
    pub fn write_derivatives_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if self.dimension != 1 {
            return Err(Error::InvalidArgument("derivative export is 1D only".into()));
        }
        writeln!(out, "k,re_omega,im_omega,d1,d2,subradiant")?;
        let nan = vec![f64::NAN; self.len()];
        let d1 = self.d1.as_ref().unwrap_or(&nan);
        let d2 = self.d2.as_ref().unwrap_or(&nan);
        for i in 0..self.len() {
            let z = self.omega[i];
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(self.axes[0].k(i)),
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(d1[i]),
                fmt_f64(d2[i]),
                u8::from(self.subradiant[i])
            )?;
        }
        Ok(())
    }
}

/// Wraps `k` into the axis period starting at `axis.start`.
pub fn fold_to_axis(k: f64, axis: &KAxis) -> f64 {
    axis.start + (k - axis.start).rem_euclid(axis.period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::closed_form::{ClosedForm1d, FourierDispersion};
    use crate::model::CouplingModel;

    #[test]
    fn axis_covers_one_period() {
        let a = KAxis::brillouin(8);
        assert_eq!(a.k(0), -PI);
        assert!((a.k(8) - PI).abs() < 1e-15);
        let c = KAxis::reciprocal(4, 0.5, true);
        assert!((c.k(0) + 1.5 * PI).abs() < 1e-15);
        assert!((c.period - 4.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn sampling_masks_singular_node() {
        let cf = ClosedForm1d::new(CouplingModel::PowerLaw { alpha: 3.0 }).unwrap();
        let g = DispersionGrid::sample_1d(&cf, KAxis::brillouin(64), true).unwrap();
        assert_eq!(g.masked.iter().filter(|m| **m).count(), 1);
        assert!(g.masked[32]);
        assert!(g.omega[32].re.is_nan());
        assert!(!g.subradiant.iter().any(|s| *s));
    }

    #[test]
    fn subradiant_mask_follows_light_cone() {
        let k_a = 0.3 * PI;
        let cf = ClosedForm1d::new(CouplingModel::Waveguide { k_a }).unwrap();
        let g = DispersionGrid::sample_1d(&cf, KAxis::brillouin(200), true).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.subradiant[i], g.k_at(i)[0].abs() > k_a);
        }
    }

    #[test]
    fn finite_difference_grid_matches_analytic() {
        let f = FourierDispersion::tight_binding(1.0);
        let g = DispersionGrid::sample_1d(&f, KAxis::brillouin(1024), false).unwrap();
        // d2(0) of -2 cos k is 2
        assert!((g.d2.as_ref().unwrap()[512] - 2.0).abs() < 1e-4);
    }

    #[test]
    fn csv_header() {
        let f = FourierDispersion::tight_binding(1.0);
        let g = DispersionGrid::sample_1d(&f, KAxis::brillouin(8), true).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("kx,ky,re_omega,im_omega,d2,subradiant\n"));
        assert_eq!(s.lines().count(), 9);
    }
}
