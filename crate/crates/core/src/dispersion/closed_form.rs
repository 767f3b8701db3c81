//! Closed-form 1D dispersions and simple analytic test dispersions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::special::{clausen2, clausen3, im_li1, im_li3, re_li1, re_li2, wrap_angle};
use crate::error::{Error, Result};
use crate::model::{CouplingModel, Units};

/// A 1D dispersion with derivatives of its real part.
pub trait Dispersion1d: Sync {
    fn omega(&self, k: f64) -> Result<Complex64>;

    /// `d Re omega / dk`.
    fn d1(&self, k: f64) -> Result<f64>;

    /// `d^2 Re omega / dk^2`.
    fn d2(&self, k: f64) -> Result<f64>;

    /// Singular wavenumbers, reduced to `[-pi, pi)`.
    fn singular_points(&self) -> Vec<f64> {
        Vec::new()
    }

    fn units(&self) -> Units {
        Units::gamma_a()
    }

    /// Resonant wavenumber, for models with a light cone.
    fn k_a(&self) -> Option<f64> {
        None
    }
}

/// Closed-form value at one wavenumber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormValue {
    pub k: f64,
    pub omega: Complex64,
    pub d1: f64,
    pub d2: f64,
    /// Delta-function contributions to `Im omega` that are not sampled.
    pub im_delta: Option<String>,
}

/// Exact infinite-chain dispersion for the models that admit one:
/// power law with alpha in {1, 2, 3}, the waveguide, and 1D free space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm1d {
    model: CouplingModel,
}

const SINGULAR_TOL: f64 = 1e-12;

impl ClosedForm1d {
    pub fn new(model: CouplingModel) -> Result<Self> {
        model.validate()?;
        if let CouplingModel::PowerLaw { alpha } = model {
            if ![1.0, 2.0, 3.0].contains(&alpha) {
                return Err(Error::InvalidArgument(format!(
                    "no closed form for alpha = {alpha}; use a lattice sum"
                )));
            }
        }
        Ok(Self { model })
    }

    pub fn model(&self) -> &CouplingModel {
        &self.model
    }

    fn check(&self, k: f64) -> Result<()> {
        if !k.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite wavenumber {k}")));
        }
        for s in self.singular_points() {
            if wrap_angle(k - s).abs() < SINGULAR_TOL {
                return Err(Error::Singular(format!("{} is singular at k = {s}", self.model.descriptor())));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, k: f64) -> Result<ClosedFormValue> {
        Ok(ClosedFormValue {
            k,
            omega: self.omega(k)?,
            d1: self.d1(k)?,
            d2: self.d2(k)?,
            im_delta: match self.model {
                CouplingModel::Waveguide { k_a } => Some(format!("-(1/4) sum_eps delta(k + eps*{k_a})")),
                _ => None,
            },
        })
    }
}

/// Weight `|d_x|^2` of the chain-axis polarization component.
fn parallel_weight(model: &CouplingModel) -> f64 {
    match model {
        CouplingModel::FreeSpace { polarization, .. } => polarization.components()[0].norm_sqr(),
        _ => 0.0,
    }
}

impl Dispersion1d for ClosedForm1d {
    fn omega(&self, k: f64) -> Result<Complex64> {
        self.check(k)?;
        let v = match self.model {
            CouplingModel::PowerLaw { alpha } if alpha == 1.0 => Complex64::new(2.0 * re_li1(k), 0.0),
            CouplingModel::PowerLaw { alpha } if alpha == 2.0 => Complex64::new(2.0 * re_li2(k), 0.0),
            CouplingModel::PowerLaw { .. } => Complex64::new(2.0 * clausen3(k), 0.0),
            CouplingModel::Waveguide { k_a } => {
                let re = 0.25 * (cot((k_a + k) / 2.0) + cot((k_a - k) / 2.0));
                Complex64::new(re, 0.0)
            }
            CouplingModel::FreeSpace { k_a, .. } => {
                let p = parallel_weight(&self.model);
                let (a1, a2, a3) = (k_a * k_a * (1.0 - p), k_a * (1.0 - 3.0 * p), 3.0 * p - 1.0);
                let pre = -3.0 / (4.0 * k_a.powi(3));
                let mut re = 0.0;
                let mut im = 0.0;
                for eps in [1.0, -1.0] {
                    let th = k_a + eps * k;
                    // Li_s terms weighted by (k^2 q, i k (1-3p), 3p-1).
                    re += a1 * re_li1(th) - a2 * clausen2(th) + a3 * clausen3(th);
                    im += a1 * im_li1(th) + a2 * re_li2(th) + a3 * im_li3(th);
                }
                Complex64::new(pre * re, -0.5 + pre * im)
            }
        };
        Ok(v)
    }

    fn d1(&self, k: f64) -> Result<f64> {
        self.check(k)?;
        Ok(match self.model {
            CouplingModel::PowerLaw { alpha } if alpha == 1.0 => -cot(k / 2.0),
            CouplingModel::PowerLaw { alpha } if alpha == 2.0 => k.rem_euclid(2.0 * PI) - PI,
            CouplingModel::PowerLaw { .. } => -2.0 * clausen2(k),
            CouplingModel::Waveguide { k_a } => {
                let (up, um) = ((k_a + k) / 2.0, (k_a - k) / 2.0);
                0.25 * (-0.5 * csc2(up) + 0.5 * csc2(um))
            }
            CouplingModel::FreeSpace { k_a, .. } => {
                let p = parallel_weight(&self.model);
                let (a1, a2, a3) = (k_a * k_a * (1.0 - p), k_a * (1.0 - 3.0 * p), 3.0 * p - 1.0);
                let pre = -3.0 / (4.0 * k_a.powi(3));
                let mut s = 0.0;
                for eps in [1.0, -1.0] {
                    let th = k_a + eps * k;
                    s += eps * (-0.5 * a1 * cot(th / 2.0) + a2 * ln2sin(th) - a3 * clausen2(th));
                }
                pre * s
            }
        })
    }

    fn d2(&self, k: f64) -> Result<f64> {
        self.check(k)?;
        Ok(match self.model {
            CouplingModel::PowerLaw { alpha } if alpha == 1.0 => 0.5 * csc2(k / 2.0),
            CouplingModel::PowerLaw { alpha } if alpha == 2.0 => 1.0,
            CouplingModel::PowerLaw { .. } => (4.0 * (k / 2.0).sin().powi(2)).ln(),
            CouplingModel::Waveguide { k_a } => {
                let (up, um) = ((k_a + k) / 2.0, (k_a - k) / 2.0);
                0.125 * (csc2(up) * cot(up) + csc2(um) * cot(um))
            }
            CouplingModel::FreeSpace { k_a, .. } => {
                let p = parallel_weight(&self.model);
                let (a1, a2, a3) = (k_a * k_a * (1.0 - p), k_a * (1.0 - 3.0 * p), 3.0 * p - 1.0);
                let pre = -3.0 / (4.0 * k_a.powi(3));
                let mut s = 0.0;
                for eps in [1.0, -1.0] {
                    let th = k_a + eps * k;
                    s += 0.25 * a1 * csc2(th / 2.0) + 0.5 * a2 * cot(th / 2.0) + a3 * ln2sin(th);
                }
                pre * s
            }
        })
    }

    fn singular_points(&self) -> Vec<f64> {
        match self.model {
            CouplingModel::PowerLaw { .. } => vec![0.0],
            CouplingModel::Waveguide { k_a } | CouplingModel::FreeSpace { k_a, .. } => {
                let a = wrap_angle(k_a);
                let b = wrap_angle(-k_a);
                if (a - b).abs() < SINGULAR_TOL {
                    vec![a]
                } else {
                    vec![a.min(b), a.max(b)]
                }
            }
        }
    }

    fn units(&self) -> Units {
        self.model.units()
    }

    fn k_a(&self) -> Option<f64> {
        match self.model {
            CouplingModel::Waveguide { k_a } | CouplingModel::FreeSpace { k_a, .. } => Some(k_a),
            CouplingModel::PowerLaw { .. } => None,
        }
    }
}

/// Shorthand for [`ClosedForm1d::evaluate`].
pub fn closed_form_1d(model: &CouplingModel, k: f64) -> Result<ClosedFormValue> {
    ClosedForm1d::new(*model)?.evaluate(k)
}

fn cot(x: f64) -> f64 {
    x.cos() / x.sin()
}

fn csc2(x: f64) -> f64 {
    1.0 / x.sin().powi(2)
}

/// `ln|2 sin(theta/2)|`.
fn ln2sin(theta: f64) -> f64 {
    (2.0 * (theta / 2.0).sin()).abs().ln()
}

/// Finite Fourier series `sum_n a_n cos(n k) + b_n sin(n k)`, `n >= 1`,
/// plus a constant. Smooth and periodic, with exact derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierDispersion {
    pub name: String,
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierDispersion {
    pub fn new(name: impl Into<String>, constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            constant,
            cos,
            sin,
        }
    }

    /// `omega = -2 J cos k`.
    pub fn tight_binding(j: f64) -> Self {
        Self::new("tight_binding", 0.0, vec![-2.0 * j], vec![])
    }

    pub fn is_flat(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }

    fn series(&self, k: f64, order: u32) -> f64 {
        let mut s = if order == 0 { self.constant } else { 0.0 };
        for (i, a) in self.cos.iter().enumerate() {
            let n = (i + 1) as f64;
            let (sn, cn) = (n * k).sin_cos();
            s += a * match order {
                0 => cn,
                1 => -n * sn,
                _ => -n * n * cn,
            };
        }
        for (i, b) in self.sin.iter().enumerate() {
            let n = (i + 1) as f64;
            let (sn, cn) = (n * k).sin_cos();
            s += b * match order {
                0 => sn,
                1 => n * cn,
                _ => -n * n * sn,
            };
        }
        s
    }
}

impl Dispersion1d for FourierDispersion {
    fn omega(&self, k: f64) -> Result<Complex64> {
        Ok(Complex64::new(self.series(k, 0), 0.0))
    }

    fn d1(&self, k: f64) -> Result<f64> {
        Ok(self.series(k, 1))
    }

    fn d2(&self, k: f64) -> Result<f64> {
        Ok(self.series(k, 2))
    }

    fn units(&self) -> Units {
        Units::power_law(0.0)
    }
}

/// Smooth periodic dispersions used by the identity checks.
pub fn smooth_battery_1d() -> Vec<FourierDispersion> {
    vec![
        FourierDispersion::tight_binding(1.0),
        FourierDispersion::new("cos_plus_cos2", 0.0, vec![-2.0, 0.7], vec![]),
        FourierDispersion::new("next_nearest", 0.3, vec![1.0, 0.5], vec![]),
        FourierDispersion::new("third_neighbor", 0.0, vec![-1.0, 0.0, 0.25], vec![]),
        FourierDispersion::new("odd_sine", 0.0, vec![], vec![1.0]),
        FourierDispersion::new("mixed_phase", -0.2, vec![0.8], vec![0.6]),
        FourierDispersion::new("skewed", 0.0, vec![1.0, 0.0, 0.0], vec![0.0, 0.45]),
        FourierDispersion::new("long_range_truncated", 0.0, vec![1.0, 0.25, 1.0 / 9.0, 1.0 / 16.0], vec![]),
        FourierDispersion::new("steep", 0.0, vec![-3.0, 1.2, -0.4], vec![0.2]),
        FourierDispersion::new("flat", 1.5, vec![], vec![]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Polarization;
    use approx::assert_relative_eq;

    #[test]
    fn waveguide_at_zero() {
        let k_a = 0.3 * PI;
        let v = closed_form_1d(&CouplingModel::Waveguide { k_a }, 0.0).unwrap();
        assert_relative_eq!(v.omega.re, 0.5 / (k_a / 2.0).tan(), max_relative = 1e-14);
        assert_eq!(v.omega.im, 0.0);
        assert!(v.im_delta.is_some());
        assert!(closed_form_1d(&CouplingModel::Waveguide { k_a }, k_a).is_err());
    }

    #[test]
    fn power_law_reference_points() {
        let a3 = closed_form_1d(&CouplingModel::PowerLaw { alpha: 3.0 }, PI).unwrap();
        assert_relative_eq!(a3.d2, 4f64.ln(), max_relative = 1e-14);
        let a1 = closed_form_1d(&CouplingModel::PowerLaw { alpha: 1.0 }, PI).unwrap();
        assert!(a1.d1.abs() < 1e-15);
        assert_relative_eq!(a1.d2, 0.5, max_relative = 1e-14);
        // alpha = 2 at k = pi: 2 sum (-1)^r / r^2 = -pi^2/6
        let a2 = closed_form_1d(&CouplingModel::PowerLaw { alpha: 2.0 }, PI).unwrap();
        assert_relative_eq!(a2.omega.re, -PI * PI / 6.0, max_relative = 1e-14);
        assert_eq!(a2.d2, 1.0);
        assert!(closed_form_1d(&CouplingModel::PowerLaw { alpha: 3.0 }, 0.0).is_err());
        assert!(ClosedForm1d::new(CouplingModel::PowerLaw { alpha: 1.5 }).is_err());
    }

    #[test]
    fn alpha_two_is_quadratic_on_the_period() {
        let cf = ClosedForm1d::new(CouplingModel::PowerLaw { alpha: 2.0 }).unwrap();
        for &k in &[0.3, 1.0, 2.0, 3.0] {
            let want = (3.0 * k * k - 6.0 * PI * k + 2.0 * PI * PI) / 6.0;
            assert_relative_eq!(cf.omega(k).unwrap().re, want, max_relative = 1e-13);
            assert_relative_eq!(cf.omega(-k).unwrap().re, want, max_relative = 1e-13);
            assert_relative_eq!(cf.d1(k).unwrap(), k - PI, epsilon = 1e-14);
            assert_relative_eq!(cf.d1(-k).unwrap(), PI - k, epsilon = 1e-14);
        }
    }

    #[test]
    fn free_space_derivatives_match_differences() {
        let model = CouplingModel::FreeSpace {
            k_a: 0.3 * PI,
            polarization: Polarization::spherical(0.7, 0.2),
        };
        let cf = ClosedForm1d::new(model).unwrap();
        let h = 1e-5;
        for &k in &[0.5, 1.3, 2.2, -2.9] {
            let fd1 = (cf.omega(k + h).unwrap().re - cf.omega(k - h).unwrap().re) / (2.0 * h);
            let fd2 = (cf.d1(k + h).unwrap() - cf.d1(k - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(cf.d1(k).unwrap(), fd1, max_relative = 1e-7, epsilon = 1e-9);
            assert_relative_eq!(cf.d2(k).unwrap(), fd2, max_relative = 1e-7, epsilon = 1e-9);
        }
    }

    #[test]
    fn free_space_is_lossless_in_subradiant_zone() {
        for pol in [Polarization::x(), Polarization::y(), Polarization::z()] {
            let cf = ClosedForm1d::new(CouplingModel::FreeSpace { k_a: 0.4 * PI, polarization: pol }).unwrap();
            for &k in &[0.45 * PI, 0.8 * PI, -0.95 * PI] {
                assert!(cf.omega(k).unwrap().im.abs() < 1e-13);
            }
            assert!(cf.omega(0.1).unwrap().im < -0.1);
        }
    }

    #[test]
    fn waveguide_derivatives_match_differences() {
        let cf = ClosedForm1d::new(CouplingModel::Waveguide { k_a: 0.3 * PI }).unwrap();
        let h = 1e-5;
        for &k in &[0.2, 1.5, 2.8] {
            let fd1 = (cf.omega(k + h).unwrap().re - cf.omega(k - h).unwrap().re) / (2.0 * h);
            let fd2 = (cf.d1(k + h).unwrap() - cf.d1(k - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(cf.d1(k).unwrap(), fd1, max_relative = 1e-7);
            assert_relative_eq!(cf.d2(k).unwrap(), fd2, max_relative = 1e-6);
        }
    }

    #[test]
    fn fourier_derivatives() {
        let f = FourierDispersion::new("t", 0.1, vec![1.0, -0.5], vec![0.3]);
        let h = 1e-5;
        let k = 0.77;
        let fd = (f.omega(k + h).unwrap().re - f.omega(k - h).unwrap().re) / (2.0 * h);
        assert_relative_eq!(f.d1(k).unwrap(), fd, max_relative = 1e-8);
        assert!(smooth_battery_1d().iter().filter(|d| d.is_flat()).count() == 1);
    }
}
