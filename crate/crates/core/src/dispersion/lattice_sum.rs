//! Truncated real-space lattice sums `omega(k) = sum_r J(r) e^{-i k.r}`.
//!
//! On uniform grids the sum is folded modulo the grid size and finished
//! with one FFT, which is exact for grid wavenumbers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::grid::KAxis;
use crate::error::{Error, Result};
use crate::hamiltonian::free_space_coupling;
use crate::model::CouplingModel;

/// Real-space couplings as a function of displacement (units of a).
pub trait Couplings: Sync {
    /// `J(r)` for `r != 0`.
    fn coupling(&self, r: [f64; 2]) -> Complex64;

    /// On-site term added to every `omega(k)`.
    fn self_energy(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    /// Bound (or estimate) of `sum_{|r| > R} |J(r)|` on a unit chain.
    fn tail_bound_1d(&self, _cutoff: usize) -> f64 {
        f64::INFINITY
    }

    /// Estimate of the tail beyond radius `R` on a unit-cell-area 2D lattice.
    fn tail_bound_2d(&self, _cutoff: f64) -> f64 {
        f64::INFINITY
    }
}

impl Couplings for CouplingModel {
    fn coupling(&self, r: [f64; 2]) -> Complex64 {
        match *self {
            CouplingModel::PowerLaw { alpha } => Complex64::new(r[0].hypot(r[1]).powf(-alpha), 0.0),
            CouplingModel::Waveguide { k_a } => {
                Complex64::new(0.0, -0.5) * Complex64::from_polar(1.0, -k_a * r[0].hypot(r[1]))
            }
            CouplingModel::FreeSpace { k_a, polarization } => free_space_coupling([r[0], r[1], 0.0], k_a, &polarization),
        }
    }

    fn self_energy(&self) -> Complex64 {
        match self {
            CouplingModel::PowerLaw { .. } => Complex64::new(0.0, 0.0),
            _ => Complex64::new(0.0, -0.5),
        }
    }

    fn tail_bound_1d(&self, cutoff: usize) -> f64 {
        let r = cutoff as f64;
        match *self {
            // 2 sum_{r > R} r^-a <= 2 R^(1-a) / (a - 1)
            CouplingModel::PowerLaw { alpha } if alpha > 1.0 => 2.0 * r.powf(1.0 - alpha) / (alpha - 1.0),
            // Oscillatory 1/r tails: summation by parts gives O(1/R).
            CouplingModel::Waveguide { .. } => 1.0 / r,
            CouplingModel::FreeSpace { k_a, .. } => 3.0 / (4.0 * k_a) / r,
            _ => f64::INFINITY,
        }
    }

    fn tail_bound_2d(&self, cutoff: f64) -> f64 {
        match *self {
            // 2 pi R^(2-a) / (a - 2), leading order of the shell integral
            CouplingModel::PowerLaw { alpha } if alpha > 2.0 => 2.0 * PI * cutoff.powf(2.0 - alpha) / (alpha - 2.0),
            _ => f64::INFINITY,
        }
    }
}

/// Nearest-neighbour couplings `J(+-1) = j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestNeighbor(pub f64);

impl Couplings for NearestNeighbor {
    fn coupling(&self, r: [f64; 2]) -> Complex64 {
        if (r[0].hypot(r[1]) - 1.0).abs() < 1e-12 {
            Complex64::new(self.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn tail_bound_1d(&self, _cutoff: usize) -> f64 {
        0.0
    }

    fn tail_bound_2d(&self, _cutoff: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSum {
    pub omega: Complex64,
    pub tail_bound: f64,
}

/// Direct truncated sum over a unit chain, `0 < |r| <= cutoff`.
pub fn lattice_sum_dispersion<C: Couplings + ?Sized>(couplings: &C, k: f64, cutoff: usize) -> Result<LatticeSum> {
    if cutoff < 1 {
        return Err(Error::InvalidArgument("lattice-sum cutoff must be >= 1".into()));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    // Largest r first so small terms accumulate before large ones.
    for r in (1..=cutoff).rev() {
        let rf = r as f64;
        let phase = Complex64::from_polar(1.0, -k * rf);
        sum += couplings.coupling([rf, 0.0]) * phase + couplings.coupling([-rf, 0.0]) * phase.conj();
    }
    Ok(LatticeSum {
        omega: sum + couplings.self_energy(),
        tail_bound: couplings.tail_bound_1d(cutoff),
    })
}

/// Truncated 1D sum on every node of `axis` (chain spacing 1).
pub fn lattice_sum_grid_1d<C: Couplings + ?Sized>(couplings: &C, axis: &KAxis, cutoff: usize) -> Result<Vec<Complex64>> {
    if cutoff < 1 {
        return Err(Error::InvalidArgument("lattice-sum cutoff must be >= 1".into()));
    }
    let m = axis.n;
    check_full_period(axis, 1.0)?;
    let mut folded = vec![Complex64::new(0.0, 0.0); m];
    for r in (1..=cutoff as i64).rev() {
        for s in [r, -r] {
            let rf = s as f64;
            let idx = s.rem_euclid(m as i64) as usize;
            folded[idx] += couplings.coupling([rf, 0.0]) * Complex64::from_polar(1.0, -axis.start * rf);
        }
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut folded);
    let e = couplings.self_energy();
    Ok(folded.into_iter().map(|z| z + e).collect())
}

/// Radial window applied to 2D real-space sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff2d {
    /// All sites with `|r| <= R`.
    Sharp,
    /// Raised-cosine taper from `R/2` to `R`.
    Smooth,
}

impl Cutoff2d {
    fn weight(&self, r: f64, radius: f64) -> f64 {
        match self {
            Cutoff2d::Sharp => {
                if r <= radius {
                    1.0
                } else {
                    0.0
                }
            }
            Cutoff2d::Smooth => {
                let rho = r / radius;
                if rho <= 0.5 {
                    1.0
                } else if rho >= 1.0 {
                    0.0
                } else {
                    0.5 * (1.0 + (PI * (2.0 * rho - 1.0)).cos())
                }
            }
        }
    }
}

/// Truncated 2D sum on a rectangular lattice, evaluated on every node of
/// the `ax x ay` grid (row-major, `ky` slow).
pub fn lattice_sum_grid_2d<C: Couplings + ?Sized>(
    couplings: &C,
    ax: &KAxis,
    ay: &KAxis,
    spacings: [f64; 2],
    radius: f64,
    window: Cutoff2d,
) -> Result<Vec<Complex64>> {
    if !(radius >= 1.0) {
        return Err(Error::InvalidArgument("lattice-sum radius must be >= 1".into()));
    }
    check_full_period(ax, spacings[0])?;
    check_full_period(ay, spacings[1])?;
    let (mx, my) = (ax.n, ay.n);
    let nx = (radius / spacings[0]).floor() as i64;
    let ny = (radius / spacings[1]).floor() as i64;
    let mut folded = vec![Complex64::new(0.0, 0.0); mx * my];
    for iy in -ny..=ny {
        for ix in -nx..=nx {
            if ix == 0 && iy == 0 {
                continue;
            }
            let r = [ix as f64 * spacings[0], iy as f64 * spacings[1]];
            let w = window.weight(r[0].hypot(r[1]), radius);
            if w == 0.0 {
                continue;
            }
            let phase = Complex64::from_polar(1.0, -(ax.start * r[0] + ay.start * r[1]));
            let bx = ix.rem_euclid(mx as i64) as usize;
            let by = iy.rem_euclid(my as i64) as usize;
            folded[by * mx + bx] += couplings.coupling(r) * phase * w;
        }
    }
    fft2(&mut folded, mx, my);
    let e = couplings.self_energy();
    Ok(folded.into_iter().map(|z| z + e).collect())
}

/// Forward 2D DFT of a row-major `my x mx` buffer.
pub(crate) fn fft2(buf: &mut [Complex64], mx: usize, my: usize) {
    let mut planner = FftPlanner::new();
    let fx = planner.plan_fft_forward(mx);
    let fy = planner.plan_fft_forward(my);
    for row in buf.chunks_mut(mx) {
        fx.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); my];
    for ix in 0..mx {
        for iy in 0..my {
            col[iy] = buf[iy * mx + ix];
        }
        fy.process(&mut col);
        for iy in 0..my {
            buf[iy * mx + ix] = col[iy];
        }
    }
}

fn check_full_period(axis: &KAxis, spacing: f64) -> Result<()> {
    let want = 2.0 * PI / spacing;
    if ((axis.period - want) / want).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "k axis period {} does not match reciprocal period {want}",
            axis.period
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::closed_form::{ClosedForm1d, Dispersion1d};
    use approx::assert_relative_eq;

    #[test]
    fn nearest_neighbor_is_cosine() {
        for &k in &[0.0, 0.4, 2.0] {
            let s = lattice_sum_dispersion(&NearestNeighbor(0.7), k, 5).unwrap();
            assert_relative_eq!(s.omega.re, 1.4 * k.cos(), max_relative = 1e-14);
            assert_eq!(s.tail_bound, 0.0);
        }
        assert!(lattice_sum_dispersion(&NearestNeighbor(1.0), 0.0, 0).is_err());
    }

    #[test]
    fn grid_sum_matches_direct_sum() {
        let model = CouplingModel::PowerLaw { alpha: 2.5 };
        let axis = KAxis::brillouin(64);
        let grid = lattice_sum_grid_1d(&model, &axis, 3000).unwrap();
        for j in [0, 5, 31, 63] {
            let d = lattice_sum_dispersion(&model, axis.k(j), 3000).unwrap();
            assert!((grid[j] - d.omega).norm() < 1e-11);
        }
    }

    #[test]
    fn alpha_three_tail_bound_holds() {
        let model = CouplingModel::PowerLaw { alpha: 3.0 };
        let cf = ClosedForm1d::new(model).unwrap();
        for &k in &[0.3, 1.7, PI] {
            let s = lattice_sum_dispersion(&model, k, 2000).unwrap();
            assert!((s.omega.re - cf.omega(k).unwrap().re).abs() <= s.tail_bound);
        }
    }

    #[test]
    fn two_dimensional_nearest_neighbor() {
        let ax = KAxis::brillouin(16);
        let ay = KAxis::brillouin(8);
        let v = lattice_sum_grid_2d(&NearestNeighbor(1.0), &ax, &ay, [1.0, 1.0], 3.0, Cutoff2d::Sharp).unwrap();
        for iy in 0..8 {
            for ix in 0..16 {
                let want = 2.0 * ax.k(ix).cos() + 2.0 * ay.k(iy).cos();
                assert!((v[iy * 16 + ix].re - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn period_mismatch_is_rejected() {
        let ax = KAxis::brillouin(16);
        assert!(lattice_sum_grid_2d(&NearestNeighbor(1.0), &ax, &ax, [0.5, 1.0], 3.0, Cutoff2d::Sharp).is_err());
    }
}
