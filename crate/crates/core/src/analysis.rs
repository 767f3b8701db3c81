//! Peak tracking, split/unsplit classification and numerical checks of the
//! topological identities behind the no-go theorem.
//!
//! The classifier is velocity based. Peaks of the smoothed profile are
//! linked across snapshots into tracks, each track gets a fitted drift
//! rate, and a profile is `Split` when a left-moving and a right-moving
//! track survive to the last snapshot with a deep enough valley between
//! each of them and the origin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::{Dispersion1d, HessianField, KAxis};
use crate::dynamics::{cross_section, Profile, Section, WaveformSnapshot};
use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;

/// A maximum of the smoothed profile, in fractional index units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: f64,
    pub height: f64,
}

/// Centered moving average; the window shrinks at the edges.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let h = window / 2;
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for v in values {
        cum.push(cum.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let a = i.saturating_sub(h);
            let b = (i + h + 1).min(n);
            (cum[b] - cum[a]) / (b - a) as f64
        })
        .collect()
}

fn check_peak_params(window: usize, threshold_frac: f64) -> Result<()> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidArgument(format!("smoothing window must be odd and >= 1, got {window}")));
    }
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold fraction must lie in (0, 1), got {threshold_frac}")));
    }
    Ok(())
}

/// Local maxima of the smoothed profile above `threshold_frac * max`.
pub fn detect_peaks(values: &[f64], window: usize, threshold_frac: f64) -> Result<Vec<Peak>> {
    detect_peaks_with(values, window, threshold_frac, DEFAULT_PROMINENCE)
}

pub const DEFAULT_PROMINENCE: f64 = 0.05;

fn detect_peaks_with(values: &[f64], window: usize, threshold_frac: f64, prominence_frac: f64) -> Result<Vec<Peak>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty profile".into()));
    }
    check_peak_params(window, threshold_frac)?;
    Ok(peaks_of_smoothed(&smooth(values, window), window, threshold_frac, prominence_frac))
}

fn peaks_of_smoothed(s: &[f64], window: usize, threshold_frac: f64, prominence_frac: f64) -> Vec<Peak> {
    let n = s.len();
    let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut found = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && s[j + 1] == s[i] {
            j += 1;
        }
        let left = if i > 0 { s[i - 1] } else { f64::NEG_INFINITY };
        let right = if j + 1 < n { s[j + 1] } else { f64::NEG_INFINITY };
        let h = s[i];
        if h > left && h > right && h >= threshold_frac * m {
            let mut c = 0.5 * (i + j) as f64;
            if i == j && i > 0 && i < n - 1 {
                let den = s[i - 1] - 2.0 * h + s[i + 1];
                if den != 0.0 {
                    c = i as f64 + 0.5 * (s[i - 1] - s[i + 1]) / den;
                }
            }
            // Prominence against the lowest point reached before a higher sample.
            let (mut l, mut lm) = (i, h);
            while l > 0 && s[l - 1] <= h {
                l -= 1;
                lm = lm.min(s[l]);
            }
            let (mut r, mut rm) = (j, h);
            while r < n - 1 && s[r + 1] <= h {
                r += 1;
                rm = rm.min(s[r]);
            }
            let prom = match (l == 0, r == n - 1) {
                (true, true) => h,
                (true, false) => h - rm,
                (false, true) => h - lm,
                (false, false) => h - lm.max(rm),
            };
            if prom >= prominence_frac * m {
                found.push(Peak { index: c, height: h });
            }
        }
        i = j + 1;
    }
    found.sort_by(|a, b| b.height.total_cmp(&a.height).then(a.index.total_cmp(&b.index)));
    let mut kept: Vec<Peak> = Vec::new();
    let mut twinned: Vec<bool> = Vec::new();
    for p in found {
        match kept.iter().position(|k| (p.index - k.index).abs() < window as f64) {
            None => {
                kept.push(p);
                twinned.push(false);
            }
            // Equal-height twins (e.g. a sharp maximum split by smoothing) merge at their midpoint.
            Some(at) if !twinned[at] && (p.height - kept[at].height).abs() <= 1e-9 * kept[at].height => {
                kept[at].index = 0.5 * (kept[at].index + p.index);
                twinned[at] = true;
            }
            Some(_) => {}
        }
    }
    kept.sort_by(|a, b| a.index.total_cmp(&b.index));
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierParams {
    pub window: usize,
    pub threshold_frac: f64,
    #[serde(default = "default_prominence")]
    pub prominence_frac: f64,
    /// Split requires valley / peak height below this on both sides.
    #[serde(default = "default_valley")]
    pub valley_ratio: f64,
    /// Overrides `0.05 * wavefront speed`.
    #[serde(default)]
    pub rate_floor: Option<f64>,
}

fn default_prominence() -> f64 {
    DEFAULT_PROMINENCE
}

fn default_valley() -> f64 {
    0.5
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            window: 7,
            threshold_frac: 0.25,
            prominence_frac: DEFAULT_PROMINENCE,
            valley_ratio: 0.5,
            rate_floor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Split,
    Unsplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub time: f64,
    pub position: f64,
    pub index: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub points: Vec<TrackPoint>,
    /// Least-squares `d position / dt`; absent for single-point tracks.
    pub rate: Option<f64>,
}

impl Track {
    pub fn last(&self) -> &TrackPoint {
        self.points.last().expect("tracks are never empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub window: usize,
    pub threshold_frac: f64,
    pub prominence_frac: f64,
    pub valley_ratio: f64,
    /// Slope of the 99% probability radius against time.
    pub front_speed: f64,
    pub rate_floor: f64,
    /// Deeper-side valley ratio of the candidate pair, if one exists.
    pub dip_ratio: Option<f64>,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub label: Label,
    pub tracks: Vec<Track>,
    pub separation_rates: Vec<f64>,
    /// Track indices of the left and right packets behind a `Split` label.
    pub split_pair: Option<[usize; 2]>,
    pub diagnostics: Diagnostics,
}

const RULE: &str = "split iff a left-moving and a right-moving peak track (|rate| > rate_floor) reach the last \
                    snapshot with smoothed valley/peak < valley_ratio between each packet and the origin";

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn coord_at(coords: &[f64], index: f64) -> f64 {
    let i = index.floor().clamp(0.0, (coords.len() - 1) as f64) as usize;
    if i + 1 >= coords.len() {
        return coords[coords.len() - 1];
    }
    coords[i] + (index - i as f64) * (coords[i + 1] - coords[i])
}

fn origin_index(coords: &[f64]) -> usize {
    coords
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Radius around the origin holding all but 0.5% of the probability on each side.
fn front_radius(p: &Profile) -> f64 {
    let total: f64 = p.values.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let mut acc = 0.0;
    let (mut lo, mut hi) = (None, None);
    for (i, v) in p.values.iter().enumerate() {
        acc += v / total;
        if lo.is_none() && acc >= 0.005 {
            lo = Some(i);
        }
        if hi.is_none() && acc >= 0.995 {
            hi = Some(i);
        }
    }
    let lo = p.coords[lo.unwrap_or(0)];
    let hi = p.coords[hi.unwrap_or(p.coords.len() - 1)];
    (-lo).max(hi)
}

/// Classifies a time series of profiles sampled on identical coordinates.
pub fn classify_spreading(times: &[f64], profiles: &[Profile], params: &ClassifierParams) -> Result<ClassificationResult> {
    check_peak_params(params.window, params.threshold_frac)?;
    if times.len() < 3 || times.len() != profiles.len() {
        return Err(Error::InvalidArgument(format!(
            "classification needs >= 3 snapshots with matching times, got {} times and {} profiles",
            times.len(),
            profiles.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("snapshot times must increase".into()));
    }
    let n = profiles[0].values.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty profile".into()));
    }
    for p in profiles {
        if p.values.len() != n || p.coords != profiles[0].coords {
            return Err(Error::Dimension {
                expected: n,
                got: p.values.len(),
            });
        }
    }
    let coords = &profiles[0].coords;
    let spacing = if n > 1 {
        coords.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (n - 1) as f64
    } else {
        1.0
    };
    let smoothed: Vec<Vec<f64>> = profiles.iter().map(|p| smooth(&p.values, params.window)).collect();
    let peaks: Vec<Vec<Peak>> = smoothed
        .iter()
        .map(|s| peaks_of_smoothed(s, params.window, params.threshold_frac, params.prominence_frac))
        .collect();
    let fronts: Vec<f64> = profiles.iter().map(front_radius).collect();
    let front_speed = slope(times, &fronts).max(0.0);
    let rate_floor = params.rate_floor.unwrap_or(0.05 * front_speed);

    let point = |t: f64, p: &Peak| TrackPoint {
        time: t,
        position: coord_at(coords, p.index),
        index: p.index,
        height: p.height,
    };
    let mut tracks: Vec<Vec<TrackPoint>> = peaks[0].iter().map(|p| vec![point(times[0], p)]).collect();
    for s in 1..times.len() {
        let (t, tp) = (times[s], times[s - 1]);
        let gate = front_speed * (t - tp) + 2.0 * params.window as f64 * spacing;
        let mut order: Vec<usize> = (0..tracks.len()).filter(|&i| tracks[i].last().unwrap().time == tp).collect();
        order.sort_by(|&a, &b| {
            let (ha, hb) = (tracks[a].last().unwrap().height, tracks[b].last().unwrap().height);
            hb.total_cmp(&ha).then(a.cmp(&b))
        });
        let mut used = vec![false; peaks[s].len()];
        for i in order {
            let prev = *tracks[i].last().unwrap();
            let predicted = if tp > 0.0 { prev.position * t / tp } else { prev.position };
            let mut best: Option<(f64, usize)> = None;
            for (j, p) in peaks[s].iter().enumerate() {
                if used[j] {
                    continue;
                }
                let d = (coord_at(coords, p.index) - predicted).abs();
                if d <= gate && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            if let Some((_, j)) = best {
                used[j] = true;
                tracks[i].push(point(t, &peaks[s][j]));
            }
        }
        for (j, p) in peaks[s].iter().enumerate() {
            if !used[j] {
                tracks.push(vec![point(t, p)]);
            }
        }
    }
    let tracks: Vec<Track> = tracks
        .into_iter()
        .map(|points| {
            let rate = (points.len() >= 2).then(|| {
                let ts: Vec<f64> = points.iter().map(|p| p.time).collect();
                let xs: Vec<f64> = points.iter().map(|p| p.position).collect();
                slope(&ts, &xs)
            });
            Track { points, rate }
        })
        .collect();
    let separation_rates: Vec<f64> = tracks.iter().filter_map(|t| t.rate).collect();

    let t_last = *times.last().unwrap();
    let pick = |sign: f64| {
        tracks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.last().time == t_last && t.rate.is_some_and(|r| sign * r > rate_floor))
            .max_by(|a, b| a.1.last().height.total_cmp(&b.1.last().height))
            .map(|(i, _)| i)
    };
    let mut label = Label::Unsplit;
    let mut split_pair = None;
    let mut dip_ratio = None;
    if let (Some(l), Some(r)) = (pick(-1.0), pick(1.0)) {
        let (pl, pr) = (tracks[l].last(), tracks[r].last());
        if pl.position < pr.position {
            let s = smoothed.last().unwrap();
            let ic = origin_index(coords);
            let il = pl.index.round() as usize;
            let ir = pr.index.round() as usize;
            let dl = if il <= ic { s[il..=ic].iter().cloned().fold(f64::INFINITY, f64::min) / pl.height } else { 1.0 };
            let dr = if ir >= ic { s[ic..=ir].iter().cloned().fold(f64::INFINITY, f64::min) / pr.height } else { 1.0 };
            let ratio = dl.max(dr);
            dip_ratio = Some(ratio);
            if ratio < params.valley_ratio {
                label = Label::Split;
                split_pair = Some([l, r]);
            }
        }
    }
    Ok(ClassificationResult {
        label,
        tracks,
        separation_rates,
        split_pair,
        diagnostics: Diagnostics {
            window: params.window,
            threshold_frac: params.threshold_frac,
            prominence_frac: params.prominence_frac,
            valley_ratio: params.valley_ratio,
            front_speed,
            rate_floor,
            dip_ratio,
            rule: RULE.into(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionClassification {
    pub section: Section,
    pub result: ClassificationResult,
}

/// Classification report: `Split` if any section splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub label: Label,
    pub times: Vec<f64>,
    pub sections: Vec<SectionClassification>,
    pub params: ClassifierParams,
    /// SHA-256 of the input snapshot files, when classified from disk.
    pub inputs: Vec<String>,
}

pub fn classify_snapshots(
    snapshots: &[WaveformSnapshot],
    geometry: &LatticeGeometry,
    sections: &[Section],
    params: &ClassifierParams,
) -> Result<ClassificationReport> {
    if sections.is_empty() {
        return Err(Error::InvalidArgument("at least one section is required".into()));
    }
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    let mut out = Vec::with_capacity(sections.len());
    for &section in sections {
        let profiles = snapshots
            .iter()
            .map(|s| cross_section(s, geometry, section))
            .collect::<Result<Vec<_>>>()?;
        out.push(SectionClassification {
            section,
            result: classify_spreading(&times, &profiles, params)?,
        });
    }
    let label = if out.iter().any(|s| s.result.label == Label::Split) {
        Label::Split
    } else {
        Label::Unsplit
    };
    Ok(ClassificationReport {
        label,
        times,
        sections: out,
        params: *params,
        inputs: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Strict local maxima of the raw profile on one side of the origin,
/// counting only those above `threshold_frac` of that side's maximum.
pub fn side_maxima(profile: &Profile, side: Side, threshold_frac: f64) -> usize {
    let on_side = |x: f64| match side {
        Side::Left => x < 0.0,
        Side::Right => x > 0.0,
    };
    let v = &profile.values;
    let top = v
        .iter()
        .zip(&profile.coords)
        .filter(|(_, x)| on_side(**x))
        .map(|(p, _)| *p)
        .fold(0.0, f64::max);
    (1..v.len().saturating_sub(1))
        .filter(|&i| on_side(profile.coords[i]) && v[i] > v[i - 1] && v[i] > v[i + 1] && v[i] >= threshold_frac * top)
        .count()
}

/// Normalized `int d^n omega dk / 2 pi` over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentIntegral {
    pub order: u32,
    pub value: Option<f64>,
    pub applicable: bool,
    pub note: Option<String>,
}

/// Trapezoidal moment integral of `d^order Re omega` on `points` nodes.
pub fn moment_integral(disp: &dyn Dispersion1d, order: u32, points: usize) -> Result<MomentIntegral> {
    if !(order == 1 || order == 2) {
        return Err(Error::InvalidArgument(format!("moment order must be 1 or 2, got {order}")));
    }
    if points < 5 {
        return Err(Error::InvalidArgument(format!("need at least 5 points, got {points}")));
    }
    if !disp.singular_points().is_empty() {
        return Ok(MomentIntegral {
            order,
            value: None,
            applicable: false,
            note: Some("identity not applicable: dispersion is singular inside the zone".into()),
        });
    }
    let axis = KAxis::brillouin(points);
    let mut acc = 0.0;
    for k in axis.nodes() {
        acc += if order == 1 { disp.d1(k)? } else { disp.d2(k)? };
    }
    Ok(MomentIntegral {
        order,
        value: Some(acc / points as f64),
        applicable: true,
        note: None,
    })
}

/// Moment integral of a sampled derivative field over one period; any
/// masked (NaN) node makes the identity inapplicable.
pub fn moment_integral_sampled(field: &[f64], order: u32) -> MomentIntegral {
    if field.iter().any(|v| !v.is_finite()) {
        return MomentIntegral {
            order,
            value: None,
            applicable: false,
            note: Some("identity not applicable: masked singular points in range".into()),
        };
    }
    MomentIntegral {
        order,
        value: Some(field.iter().sum::<f64>() / field.len().max(1) as f64),
        applicable: true,
        note: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnet {
    pub value: Option<f64>,
    pub applicable: bool,
}

/// `(1/2pi) sum det H / (1 + |grad omega|^2)^{3/2} hx hy` by the midpoint rule.
pub fn gauss_bonnet_check(h: &HessianField) -> GaussBonnet {
    if h.det.iter().chain(&h.gx).chain(&h.gy).any(|v| !v.is_finite()) {
        return GaussBonnet {
            value: None,
            applicable: false,
        };
    }
    let sum: f64 = (0..h.det.len())
        .map(|i| h.det[i] / (1.0 + h.gx[i] * h.gx[i] + h.gy[i] * h.gy[i]).powf(1.5))
        .sum();
    GaussBonnet {
        value: Some(sum * h.h[0] * h.h[1] / (2.0 * PI)),
        applicable: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignCoverage {
    pub has_positive: bool,
    pub has_negative: bool,
    /// Fraction of finite samples with `|v| <= 1e-2 * max|v|`.
    pub zero_fraction: f64,
    pub samples: usize,
}

pub fn sign_coverage(field: &[f64]) -> SignCoverage {
    let finite: Vec<f64> = field.iter().cloned().filter(|v| v.is_finite()).collect();
    let top = finite.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let near = finite.iter().filter(|v| v.abs() <= 1e-2 * top).count();
    SignCoverage {
        has_positive: finite.iter().any(|v| *v > 0.0),
        has_negative: finite.iter().any(|v| *v < 0.0),
        zero_fraction: if finite.is_empty() { 0.0 } else { near as f64 / finite.len() as f64 },
        samples: finite.len(),
    }
}

/// Smooth periodic 2D test dispersion `sum a cos(mx kx + my ky + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fourier2d {
    pub name: String,
    /// `[mx, my, amplitude, phase]`.
    pub terms: Vec<[f64; 4]>,
}

impl Fourier2d {
    pub fn value(&self, kx: f64, ky: f64) -> f64 {
        self.terms.iter().map(|[mx, my, a, ph]| a * (mx * kx + my * ky + ph).cos()).sum()
    }

    /// Row-major samples on `n x n` nodes of `[-pi, pi)^2`.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        let ax = KAxis::brillouin(n);
        (0..n * n).map(|i| self.value(ax.k(i % n), ax.k(i / n))).collect()
    }
}

pub fn smooth_battery_2d() -> Vec<Fourier2d> {
    let f = |name: &str, terms: Vec<[f64; 4]>| Fourier2d {
        name: name.into(),
        terms,
    };
    vec![
        f("square", vec![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0]]),
        f("square_diagonal", vec![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0], [1.0, 1.0, 0.3, 0.0]]),
        f("anisotropic", vec![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.5, 0.0], [2.0, 0.0, 0.2, 0.0]]),
        f("triangular_like", vec![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0], [1.0, -1.0, 1.0, 0.0]]),
        f("chiral", vec![[1.0, 0.0, 0.8, 0.4], [0.0, 1.0, 0.6, -1.1], [1.0, 2.0, 0.25, 0.7]]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{hessian_2d, smooth_battery_1d, ClosedForm1d};
    use crate::model::CouplingModel;

    #[test]
    fn equal_twins_merge_at_midpoint() {
        let s = [0.0, 0.0, 1.0, 0.5, 1.0, 0.0, 0.0];
        let p = peaks_of_smoothed(&s, 3, 0.25, 0.05);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].index, 3.0);
        let p = peaks_of_smoothed(&[0.0, 1.0, 0.5, 0.9, 0.0], 3, 0.25, 0.05);
        assert_eq!(p.len(), 1);
        assert!(p[0].index < 2.0, "{}", p[0].index);
    }

    fn gaussian_pair(n: usize, sep: f64, width: f64) -> Vec<f64> {
        let c = (n - 1) as f64 / 2.0;
        (0..n)
            .map(|i| {
                let x = i as f64 - c;
                (-(x - sep).powi(2) / (2.0 * width * width)).exp() + (-(x + sep).powi(2) / (2.0 * width * width)).exp()
            })
            .collect()
    }

    #[test]
    fn delta_and_flat_profiles() {
        let mut v = vec![0.0; 41];
        v[17] = 1.0;
        let p = detect_peaks(&v, 5, 0.2).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].index - 17.0).abs() < 1e-12);
        assert!((p[0].height - 0.2).abs() < 1e-12);
        let p = detect_peaks(&[1.0; 30], 3, 0.2).unwrap();
        assert!(p.len() <= 1);
        assert!(detect_peaks(&[], 3, 0.2).is_err());
        assert!(detect_peaks(&v, 4, 0.2).is_err());
    }

    #[test]
    fn double_gaussian() {
        let v = gaussian_pair(201, 50.0, 6.0);
        let p = detect_peaks(&v, 5, 0.2).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p[0].index - 50.0).abs() < 0.5);
        assert!((p[1].index - 150.0).abs() < 0.5);
    }

    fn profile(v: Vec<f64>) -> Profile {
        let c = (v.len() - 1) as f64 / 2.0;
        Profile {
            coords: (0..v.len()).map(|i| i as f64 - c).collect(),
            values: v,
            sites: vec![],
        }
    }

    #[test]
    fn separating_packets_split() {
        let times = [10.0, 20.0, 30.0];
        let profiles: Vec<Profile> = times.iter().map(|t| profile(gaussian_pair(301, 3.0 * t, 4.0 + 0.1 * t))).collect();
        let r = classify_spreading(&times, &profiles, &ClassifierParams::default()).unwrap();
        assert_eq!(r.label, Label::Split);
        let [l, rr] = r.split_pair.unwrap();
        assert!((r.tracks[l].rate.unwrap() + 3.0).abs() < 0.1);
        assert!((r.tracks[rr].rate.unwrap() - 3.0).abs() < 0.1);
    }

    #[test]
    fn broadening_single_packet_is_unsplit() {
        let times = [10.0, 20.0, 30.0];
        let profiles: Vec<Profile> = times
            .iter()
            .map(|t| {
                let c = 150.0;
                profile((0..301).map(|i| (-(i as f64 - c).powi(2) / (2.0 * t * t)).exp()).collect())
            })
            .collect();
        let r = classify_spreading(&times, &profiles, &ClassifierParams::default()).unwrap();
        assert_eq!(r.label, Label::Unsplit);
        assert!(r.diagnostics.front_speed > 2.0);
        let again = classify_spreading(&times, &profiles, &ClassifierParams::default()).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn classifier_input_checks() {
        let p = profile(vec![0.0; 11]);
        let q = profile(vec![0.0; 13]);
        let params = ClassifierParams::default();
        assert!(classify_spreading(&[1.0, 2.0], &[p.clone(), p.clone()], &params).is_err());
        assert!(classify_spreading(&[1.0, 2.0, 3.0], &[p.clone(), q, p.clone()], &params).is_err());
    }

    #[test]
    fn subsidiary_maxima() {
        let v: Vec<f64> = (0..101)
            .map(|i| {
                let x = i as f64 - 50.0;
                if x > 0.0 { 1.0 + (x * 0.9).cos() } else { 0.0 }
            })
            .collect();
        let p = profile(v);
        assert!(side_maxima(&p, Side::Right, 0.1) >= 3);
        assert_eq!(side_maxima(&p, Side::Left, 0.1), 0);
    }

    #[test]
    fn moments_vanish_for_smooth_bands() {
        for d in smooth_battery_1d() {
            for n in [1, 2] {
                let m = moment_integral(&d, n, 4096).unwrap();
                assert!(m.value.unwrap().abs() < 1e-10);
            }
        }
        let a1 = ClosedForm1d::new(CouplingModel::PowerLaw { alpha: 1.0 }).unwrap();
        assert!(!moment_integral(&a1, 1, 4096).unwrap().applicable);
        assert!(!moment_integral_sampled(&[1.0, f64::NAN], 1).applicable);
    }

    #[test]
    fn gauss_bonnet_vanishes() {
        for d in smooth_battery_2d() {
            let n = 256;
            let h = 2.0 * PI / n as f64;
            let field = hessian_2d(&d.sample(n), [n, n], [h, h]).unwrap();
            let gb = gauss_bonnet_check(&field);
            assert!(gb.value.unwrap().abs() < 1e-3, "{}: {:?}", d.name, gb.value);
            assert!(sign_coverage(&field.det).has_negative && sign_coverage(&field.det).has_positive);
        }
        let flat = Fourier2d {
            name: "flat".into(),
            terms: vec![],
        };
        let field = hessian_2d(&flat.sample(16), [16, 16], [0.1, 0.1]).unwrap();
        assert_eq!(gauss_bonnet_check(&field).value, Some(0.0));
    }

    #[test]
    fn sign_coverage_of_curvature() {
        let tb: Vec<f64> = KAxis::brillouin(64).nodes().iter().map(|k| 2.0 * k.cos()).collect();
        let c = sign_coverage(&tb);
        assert!(c.has_positive && c.has_negative);
        let a1 = ClosedForm1d::new(CouplingModel::PowerLaw { alpha: 1.0 }).unwrap();
        let d2: Vec<f64> = KAxis::brillouin(64).nodes().iter().skip(1).filter(|k| k.abs() > 0.1).map(|&k| a1.d2(k).unwrap()).collect();
        let c = sign_coverage(&d2);
        assert!(c.has_positive && !c.has_negative);
    }
}
