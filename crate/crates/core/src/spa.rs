//! Stationary-phase approximation of the single-excitation waveform.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::derivatives::bisect;
use crate::dispersion::derivatives::CurvatureMinimum;
use crate::dispersion::{find_inflection_points, Dispersion1d, KAxis, StationarySet};
use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// Below this `|d2 Re omega|` a stationary point is a caustic.
pub const CAUSTIC_D2: f64 = 1e-10;
/// Stationary points this close to an inflection point are flagged.
pub const CAUSTIC_K: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaOptions {
    /// Search grid for sign changes of `v_g - v`.
    pub axis: KAxis,
    /// Treat the axis as one period (roots at the seam are counted once).
    #[serde(default = "yes")]
    pub periodic: bool,
    /// Restrict stationary points to `|k| > k_a` (folded into the zone).
    #[serde(default)]
    pub subradiant_only: Option<f64>,
}

fn yes() -> bool {
    true
}

impl Default for SpaOptions {
    fn default() -> Self {
        Self {
            axis: KAxis::brillouin(4096),
            periodic: true,
            subradiant_only: None,
        }
    }
}

/// Roots of `d Re omega / dk = v`, ascending in k.
pub fn stationary_points(disp: &dyn Dispersion1d, v: f64, opts: &SpaOptions) -> Result<Vec<f64>> {
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite velocity {v}")));
    }
    let axis = &opts.axis;
    let sing = disp.singular_points();
    let ks: Vec<f64> = (0..=axis.n).map(|j| axis.k(j)).collect();
    let g: Vec<f64> = ks.iter().map(|&k| disp.d1(k).map(|d| d - v).unwrap_or(f64::NAN)).collect();
    let scale = g.iter().filter(|x| x.is_finite()).fold(v.abs(), |a, b| a.max((b + v).abs())).max(1.0);
    let ztol = 1e-13 * scale;
    let last = if opts.periodic { axis.n } else { axis.n + 1 };
    let mut roots: Vec<f64> = Vec::new();
    for j in 0..last {
        let root = if g[j].abs() <= ztol {
            Some(ks[j])
        } else if j < axis.n {
            let (ka, kb, fa, fb) = (ks[j], ks[j + 1], g[j], g[j + 1]);
            let pole = sing.iter().any(|&s| {
                let d = (s - ka).rem_euclid(2.0 * PI);
                d > 0.0 && d < kb - ka
            });
            if fa.is_finite() && fb.is_finite() && fb.abs() > ztol && fa * fb < 0.0 && !pole {
                let k = bisect(|k| disp.d1(k).map(|d| d - v), ka, kb, fa, ztol)?;
                Some(if opts.periodic && k >= axis.start + axis.period { axis.start } else { k })
            } else {
                None
            }
        } else {
            None
        };
        if let Some(k) = root {
            if let Some(k_a) = opts.subradiant_only {
                let folded = (k + PI).rem_euclid(2.0 * PI) - PI;
                if folded.abs() <= k_a {
                    continue;
                }
            }
            roots.push(k);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(roots)
}

/// One evaluated point of the SPA waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaPoint {
    pub amplitude: Complex64,
    pub stationary: Vec<f64>,
}

/// Full-phase stationary-phase sum at `(x, t)`.
pub fn spa_amplitude(disp: &dyn Dispersion1d, x: f64, t: f64, opts: &SpaOptions) -> Result<SpaPoint> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("SPA needs t > 0, got {t}")));
    }
    let stationary = stationary_points(disp, x / t, opts)?;
    let mut amplitude = Complex64::new(0.0, 0.0);
    for &k in &stationary {
        let d2 = disp.d2(k)?;
        if d2.abs() < CAUSTIC_D2 {
            return Err(Error::Caustic { k, d2 });
        }
        let w = disp.omega(k)?;
        let phase = k * x - w.re * t - 0.25 * PI * d2.signum();
        amplitude += Complex64::from_polar((w.im * t).exp() / (2.0 * PI * t * d2.abs()).sqrt(), phase);
    }
    Ok(SpaPoint { amplitude, stationary })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Rescale so the waveform sums to the given survival probability.
    ToSurvival { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaWaveform {
    pub t: f64,
    pub x: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    pub values: Vec<f64>,
    pub stationary: Vec<Vec<f64>>,
    /// Points near a caustic; their value is 0 and excluded from normalization.
    pub caustic: Vec<bool>,
    pub normalization: f64,
}

impl SpaWaveform {
    /// CSV with the snapshot columns `site, x, y, prob, re, im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "site,x,y,prob,re,im")?;
        let s = self.normalization.sqrt();
        for (i, (x, (p, a))) in self.x.iter().zip(self.values.iter().zip(&self.amplitudes)).enumerate() {
            writeln!(
                out,
                "{i},{},0,{},{},{}",
                fmt_f64(*x),
                fmt_f64(*p),
                fmt_f64(a.re * s),
                fmt_f64(a.im * s)
            )?;
        }
        Ok(())
    }
}

pub fn spa_waveform(
    disp: &dyn Dispersion1d,
    xs: &[f64],
    t: f64,
    normalization: Normalization,
    opts: &SpaOptions,
) -> Result<SpaWaveform> {
    if let Normalization::ToSurvival { p } = normalization {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!("survival probability must lie in (0, 1], got {p}")));
        }
    }
    let inflections: StationarySet = if opts.axis.n >= 64 {
        find_inflection_points(disp, &opts.axis)?
    } else {
        StationarySet::default()
    };
    let near_caustic = |ks: &[f64]| {
        ks.iter()
            .any(|k| inflections.points.iter().any(|p| (p.k - k).abs() < CAUSTIC_K))
    };
    let points: Vec<Result<(SpaPoint, bool)>> = xs
        .par_iter()
        .map(|&x| {
            let ks = stationary_points(disp, x / t, opts)?;
            if near_caustic(&ks) {
                return Ok((
                    SpaPoint {
                        amplitude: Complex64::new(0.0, 0.0),
                        stationary: ks,
                    },
                    true,
                ));
            }
            match spa_amplitude(disp, x, t, opts) {
                Ok(p) => Ok((p, false)),
                Err(Error::Caustic { .. }) => Ok((
                    SpaPoint {
                        amplitude: Complex64::new(0.0, 0.0),
                        stationary: ks,
                    },
                    true,
                )),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut out = SpaWaveform {
        t,
        x: xs.to_vec(),
        amplitudes: Vec::with_capacity(xs.len()),
        values: Vec::with_capacity(xs.len()),
        stationary: Vec::with_capacity(xs.len()),
        caustic: Vec::with_capacity(xs.len()),
        normalization: 1.0,
    };
    for r in points {
        let (p, c) = r?;
        out.values.push(p.amplitude.norm_sqr());
        out.amplitudes.push(p.amplitude);
        out.stationary.push(p.stationary);
        out.caustic.push(c);
    }
    if let Normalization::ToSurvival { p } = normalization {
        let total: f64 = out.values.iter().sum();
        if total > 0.0 {
            out.normalization = p / total;
            for v in &mut out.values {
                *v *= out.normalization;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mover {
    Left,
    Right,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakOrigin {
    Inflection,
    CurvatureMinimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedPeak {
    pub k: f64,
    pub group_velocity: f64,
    pub x: f64,
    pub mover: Mover,
    pub origin: PeakOrigin,
}

fn peak(k: f64, v: f64, t: f64, tol: f64, origin: PeakOrigin) -> PredictedPeak {
    PredictedPeak {
        k,
        group_velocity: v,
        x: v * t,
        mover: if v > tol {
            Mover::Right
        } else if v < -tol {
            Mover::Left
        } else {
            Mover::Stationary
        },
        origin,
    }
}

/// Peak trajectories `x = v_g(k*) t` from the inflection points.
pub fn predicted_peaks(set: &StationarySet, t: f64) -> Vec<PredictedPeak> {
    let tol = 1e-9 * set.max_speed().max(1.0);
    set.points
        .iter()
        .map(|p| peak(p.k, p.group_velocity, t, tol, PeakOrigin::Inflection))
        .collect()
}

/// Inflection trajectories followed by those of the nonzero minima of `|d2|`.
///
/// The stationary-phase density scales as `1/|d2|`, so a band without
/// inflection points still concentrates weight where the curvature is smallest.
pub fn predicted_peaks_with_minima(set: &StationarySet, minima: &[CurvatureMinimum], t: f64) -> Vec<PredictedPeak> {
    let speed = minima.iter().map(|m| m.group_velocity.abs()).fold(set.max_speed(), f64::max);
    let tol = 1e-9 * speed.max(1.0);
    let mut out = predicted_peaks(set, t);
    out.extend(
        minima
            .iter()
            .map(|m| peak(m.k, m.group_velocity, t, tol, PeakOrigin::CurvatureMinimum)),
    );
    out
}
