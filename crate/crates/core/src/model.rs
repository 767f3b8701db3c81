//! Coupling models and the unit conventions attached to them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-norm transition dipole direction. Complex entries are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Complex64; 3]", into = "[Complex64; 3]")]
pub struct Polarization([Complex64; 3]);

impl Polarization {
    pub const NORM_TOLERANCE: f64 = 1e-12;

    pub fn new(components: [Complex64; 3]) -> Result<Self> {
        if components.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Model("polarization has non-finite components".into()));
        }
        let norm = components.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(Error::Model(format!("polarization norm is {norm}, expected 1")));
        }
        Ok(Self(components))
    }

    pub fn real(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new([x.into(), y.into(), z.into()])
    }

    /// Direction from polar angle `theta` (measured from z, the lattice
    /// normal) and azimuth `phi` (measured from x).
    pub fn spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self([(st * cp).into(), (st * sp).into(), ct.into()])
    }

    pub fn x() -> Self {
        Self([1.0.into(), 0.0.into(), 0.0.into()])
    }

    pub fn y() -> Self {
        Self([0.0.into(), 1.0.into(), 0.0.into()])
    }

    pub fn z() -> Self {
        Self([0.0.into(), 0.0.into(), 1.0.into()])
    }

    pub fn components(&self) -> [Complex64; 3] {
        self.0
    }

    /// `d* . T . d` for a symmetric 3x3 tensor.
    pub fn project(&self, t: &[[Complex64; 3]; 3]) -> Complex64 {
        let d = &self.0;
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..3 {
            for b in 0..3 {
                acc += d[a].conj() * t[a][b] * d[b];
            }
        }
        acc
    }

    /// True when all components are real (within rounding).
    pub fn is_real(&self) -> bool {
        self.0.iter().all(|c| c.im.abs() < 1e-15)
    }
}

impl TryFrom<[Complex64; 3]> for Polarization {
    type Error = Error;

    fn try_from(c: [Complex64; 3]) -> Result<Self> {
        Self::new(c)
    }
}

impl From<Polarization> for [Complex64; 3] {
    fn from(p: Polarization) -> Self {
        p.0
    }
}

/// Which physical coupling generates the hopping matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingModel {
    /// `J(r) = 1 / r^alpha`, Hermitian.
    PowerLaw { alpha: f64 },
    /// Ideal 1D waveguide with resonant wavenumber `k_a` (units 1/a).
    Waveguide { k_a: f64 },
    /// Free-space dipole-dipole coupling through the dyadic Green's tensor.
    FreeSpace { k_a: f64, polarization: Polarization },
}

impl CouplingModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CouplingModel::PowerLaw { alpha } => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(Error::Model(format!("alpha must be > 0, got {alpha}")));
                }
            }
            CouplingModel::Waveguide { k_a } | CouplingModel::FreeSpace { k_a, .. } => {
                if !(k_a.is_finite() && k_a > 0.0) {
                    return Err(Error::Model(format!("k_A must be > 0, got {k_a}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_hermitian(&self) -> bool {
        matches!(self, CouplingModel::PowerLaw { .. })
    }

    pub fn units(&self) -> Units {
        match *self {
            CouplingModel::PowerLaw { alpha } => Units::power_law(alpha),
            _ => Units::gamma_a(),
        }
    }

    /// Short human-readable descriptor, e.g. `power_law(alpha=3)`.
    pub fn descriptor(&self) -> String {
        match self {
            CouplingModel::PowerLaw { alpha } => format!("power_law(alpha={alpha})"),
            CouplingModel::Waveguide { k_a } => format!("waveguide(k_A={k_a})"),
            CouplingModel::FreeSpace { k_a, polarization } => {
                let d = polarization.components();
                format!(
                    "free_space(k_A={k_a}, d=[{}, {}, {}])",
                    fmt_c(d[0]),
                    fmt_c(d[1]),
                    fmt_c(d[2])
                )
            }
        }
    }
}

fn fmt_c(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("{}{:+}i", c.re, c.im)
    }
}

/// Energy unit of a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyUnit {
    /// `1/t0` with `t0 = a^alpha`.
    HoppingT0,
    /// Single-atom decay rate.
    GammaA,
}

/// Unit tags carried by every emitted quantity. Length is always `a = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub energy: EnergyUnit,
    pub alpha: Option<f64>,
}

impl Units {
    pub fn power_law(alpha: f64) -> Self {
        Self {
            energy: EnergyUnit::HoppingT0,
            alpha: Some(alpha),
        }
    }

    pub fn gamma_a() -> Self {
        Self {
            energy: EnergyUnit::GammaA,
            alpha: None,
        }
    }

    pub fn energy_label(&self) -> String {
        match (self.energy, self.alpha) {
            (EnergyUnit::HoppingT0, Some(a)) => format!("1/a^{a}"),
            (EnergyUnit::HoppingT0, None) => "1/t0".into(),
            (EnergyUnit::GammaA, _) => "gamma_A".into(),
        }
    }

    pub fn time_label(&self) -> String {
        match (self.energy, self.alpha) {
            (EnergyUnit::HoppingT0, Some(a)) => format!("t0=a^{a}"),
            (EnergyUnit::HoppingT0, None) => "t0".into(),
            (EnergyUnit::GammaA, _) => "1/gamma_A".into(),
        }
    }

    /// Unit of a second k-derivative of the dispersion: energy * a^2.
    pub fn curvature_label(&self) -> String {
        format!("{}*a^2", self.energy_label())
    }

    /// Unit of the 2D Hessian determinant: energy^2 * a^4.
    pub fn hessian_det_label(&self) -> String {
        format!("({})^2*a^4", self.energy_label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polarization_norm_checked() {
        assert!(Polarization::real(1.0, 1.0, 0.0).is_err());
        let s = 1.0 / 2f64.sqrt();
        assert!(Polarization::real(s, s, 0.0).is_ok());
        let c = Polarization::new([Complex64::new(s, 0.0), Complex64::new(0.0, s), 0.0.into()]).unwrap();
        assert!(!c.is_real());
    }

    #[test]
    fn tilted_dipole_matches_explicit_form() {
        let p = Polarization::spherical(PI / 12.0, PI / 4.0);
        let d = p.components();
        let expect = (PI / 12.0).sin() / 2f64.sqrt();
        assert!((d[0].re - expect).abs() < 1e-15);
        assert!((d[1].re - expect).abs() < 1e-15);
        assert!((d[2].re - (PI / 12.0).cos()).abs() < 1e-15);
        assert!(Polarization::new(d).is_ok());
    }

    #[test]
    fn model_validation() {
        assert!(CouplingModel::PowerLaw { alpha: 0.0 }.validate().is_err());
        assert!(CouplingModel::Waveguide { k_a: -1.0 }.validate().is_err());
        assert!(CouplingModel::PowerLaw { alpha: 3.0 }.validate().is_ok());
    }

    #[test]
    fn model_serde_is_tagged() {
        let m = CouplingModel::FreeSpace {
            k_a: 0.3 * PI,
            polarization: Polarization::y(),
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"kind\":\"free_space\""));
        let back: CouplingModel = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let bad = r#"{"kind":"free_space","k_a":1.0,"polarization":[[1,0],[1,0],[0,0]]}"#;
        assert!(serde_json::from_str::<CouplingModel>(bad).is_err());
    }

    #[test]
    fn unit_labels() {
        assert_eq!(Units::power_law(2.0).energy_label(), "1/a^2");
        assert_eq!(Units::gamma_a().time_label(), "1/gamma_A");
    }
}
