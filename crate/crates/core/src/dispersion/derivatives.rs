//! Finite differences, inflection points and the 2D Hessian.

use serde::{Deserialize, Serialize};

use super::closed_form::Dispersion1d;
use super::grid::{periodic_distance, KAxis};
use crate::error::{Error, Result};

/// Second-order central differences of uniformly spaced samples.
///
/// With `periodic`, the stencil wraps around; otherwise the two end points
/// are NaN. Any stencil touching a NaN yields NaN.
pub fn central_differences(values: &[f64], h: f64, periodic: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = values.len();
    if n < 5 {
        return Err(Error::InvalidArgument(format!("need at least 5 samples, got {n}")));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("grid spacing must be positive".into()));
    }
    let mut d1 = vec![f64::NAN; n];
    let mut d2 = vec![f64::NAN; n];
    for i in 0..n {
        let (lo, hi) = if periodic {
            ((i + n - 1) % n, (i + 1) % n)
        } else if i == 0 || i == n - 1 {
            continue;
        } else {
            (i - 1, i + 1)
        };
        let (a, b, c) = (values[lo], values[i], values[hi]);
        d1[i] = (c - a) / (2.0 * h);
        d2[i] = (c - 2.0 * b + a) / (h * h);
    }
    Ok((d1, d2))
}

/// Central differences of a callable at the given points.
pub fn derivatives_callable(f: impl Fn(f64) -> f64, ks: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if ks.len() < 5 {
        return Err(Error::InvalidArgument(format!("need at least 5 samples, got {}", ks.len())));
    }
    let mut d1 = Vec::with_capacity(ks.len());
    let mut d2 = Vec::with_capacity(ks.len());
    for &k in ks {
        let (a, b, c) = (f(k - h), f(k), f(k + h));
        d1.push((c - a) / (2.0 * h));
        d2.push((c - 2.0 * b + a) / (h * h));
    }
    Ok((d1, d2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InflectionPoint {
    pub k: f64,
    pub group_velocity: f64,
    /// `|d2 Re omega|` at the refined root.
    pub residual: f64,
}

/// Zeros of `d2 Re omega` with their group velocities, ascending in k.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StationarySet {
    pub points: Vec<InflectionPoint>,
}

impl StationarySet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn max_speed(&self) -> f64 {
        self.points.iter().map(|p| p.group_velocity.abs()).fold(0.0, f64::max)
    }
}

/// Locates inflection points of a 1D dispersion.
///
/// `d2` is sampled on `axis` (at least 64 nodes); every sign change whose
/// bracket avoids the singular points is refined by bisection until
/// `|d2| <= 1e-13 * max|d2|` or the bracket collapses.
pub fn find_inflection_points(disp: &dyn Dispersion1d, axis: &KAxis) -> Result<StationarySet> {
    if axis.n < 64 {
        return Err(Error::InvalidArgument(format!("need at least 64 samples, got {}", axis.n)));
    }
    let h = axis.step();
    let sing = disp.singular_points();
    let near_singular = |k: f64| sing.iter().any(|&s| periodic_distance(k, s, axis.period) < 1e-9 * h.max(1.0));
    let ks: Vec<f64> = (0..=axis.n).map(|j| axis.k(j)).collect();
    let d2: Vec<f64> = ks
        .iter()
        .map(|&k| if near_singular(k) { f64::NAN } else { disp.d2(k).unwrap_or(f64::NAN) })
        .collect();
    let scale = d2.iter().filter(|v| v.is_finite()).fold(0.0f64, |a, b| a.max(b.abs()));
    let tol = 1e-13 * scale;
    let mut points = Vec::new();
    for j in 0..axis.n {
        let (ka, kb) = (ks[j], ks[j + 1]);
        let (fa, fb) = (d2[j], d2[j + 1]);
        if !(fa.is_finite() && fb.is_finite()) {
            continue;
        }
        let ztol = 1e-13 * scale;
        let root = if fa.abs() <= ztol {
            Some(ka)
        } else if fb.abs() > ztol && fa * fb < 0.0 {
            // A singular point strictly inside the bracket is a pole, not a root.
            let straddles = sing.iter().any(|&s| {
                let d = (s - ka).rem_euclid(axis.period);
                d > 0.0 && d < kb - ka
            });
            if straddles {
                None
            } else {
                Some(bisect(|k| disp.d2(k), ka, kb, fa, tol)?)
            }
        } else {
            None
        };
        if let Some(k) = root {
            let residual = disp.d2(k)?.abs();
            if residual > 1e-6 * scale.max(f64::MIN_POSITIVE) {
                continue;
            }
            points.push(InflectionPoint {
                k,
                group_velocity: disp.d1(k)?,
                residual,
            });
        }
    }
    points.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(StationarySet { points })
}

/// A local minimum of `|d2 Re omega|` that is not a zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureMinimum {
    pub k: f64,
    pub group_velocity: f64,
    pub d2: f64,
}

/// Local minima of `|d2 Re omega|` away from singular points, refined by
/// golden-section search. Where a dispersion has no inflection points,
/// these carry the dominant stationary-phase weight.
pub fn curvature_minima(disp: &dyn Dispersion1d, axis: &KAxis) -> Result<Vec<CurvatureMinimum>> {
    if axis.n < 64 {
        return Err(Error::InvalidArgument(format!("need at least 64 samples, got {}", axis.n)));
    }
    let n = axis.n;
    let h = axis.step();
    let sing = disp.singular_points();
    let a: Vec<f64> = (0..n)
        .map(|j| {
            let k = axis.k(j);
            if sing.iter().any(|&s| periodic_distance(k, s, axis.period) < h) {
                f64::NAN
            } else {
                disp.d2(k).map(f64::abs).unwrap_or(f64::NAN)
            }
        })
        .collect();
    let mut out = Vec::new();
    for j in 0..n {
        let (l, c, r) = (a[(j + n - 1) % n], a[j], a[(j + 1) % n]);
        if !(l.is_finite() && c.is_finite() && r.is_finite()) || !(c <= l && c < r) {
            continue;
        }
        let k0 = axis.k(j);
        let f = |k: f64| disp.d2(k).map(f64::abs).unwrap_or(f64::INFINITY);
        let (mut lo, mut hi) = (k0 - h, k0 + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if f(m1) < f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let k = (0.5 * (lo + hi) - axis.start).rem_euclid(axis.period) + axis.start;
        let d2 = disp.d2(k)?;
        if disp.d2(k - h)? * disp.d2(k + h)? <= 0.0 {
            continue;
        }
        out.push(CurvatureMinimum {
            k,
            group_velocity: disp.d1(k)?,
            d2,
        });
    }
    out.sort_by(|x, y| x.k.total_cmp(&y.k));
    Ok(out)
}

/// Bisection on `[a, b]` with `f(a) = fa` of opposite sign to `f(b)`.
pub(crate) fn bisect(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> Result<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.abs() <= tol || m <= a || m >= b {
            return Ok(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Inflection points of sampled fields, refined by linear interpolation.
pub fn find_inflection_points_sampled(ks: &[f64], d1: &[f64], d2: &[f64]) -> Result<StationarySet> {
    if ks.len() < 64 || d1.len() != ks.len() || d2.len() != ks.len() {
        return Err(Error::InvalidArgument("need at least 64 matching samples".into()));
    }
    let mut points = Vec::new();
    for j in 0..ks.len() - 1 {
        let (fa, fb) = (d2[j], d2[j + 1]);
        if !(fa.is_finite() && fb.is_finite() && d1[j].is_finite() && d1[j + 1].is_finite()) {
            continue;
        }
        if fa == 0.0 || fa * fb < 0.0 {
            let t = if fa == 0.0 { 0.0 } else { fa / (fa - fb) };
            points.push(InflectionPoint {
                k: ks[j] + t * (ks[j + 1] - ks[j]),
                group_velocity: d1[j] + t * (d1[j + 1] - d1[j]),
                residual: 0.0,
            });
        }
    }
    Ok(StationarySet { points })
}

/// Second-derivative fields of a 2D scalar grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianField {
    pub n: [usize; 2],
    pub h: [f64; 2],
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub hxx: Vec<f64>,
    pub hyy: Vec<f64>,
    pub hxy: Vec<f64>,
    pub det: Vec<f64>,
}

impl HessianField {
    /// Number of nodes whose stencil avoided every masked node.
    pub fn available(&self) -> usize {
        self.det.iter().filter(|v| v.is_finite()).count()
    }
}

/// Periodic central-difference Hessian of a row-major `n[1] x n[0]` grid.
pub fn hessian_2d(values: &[f64], n: [usize; 2], h: [f64; 2]) -> Result<HessianField> {
    hessian_2d_with(values, n, h, true)
}

/// As [`hessian_2d`], optionally without wrap-around (edges become NaN).
pub fn hessian_2d_with(values: &[f64], n: [usize; 2], h: [f64; 2], periodic: bool) -> Result<HessianField> {
    let [nx, ny] = n;
    if nx < 5 || ny < 5 {
        return Err(Error::InvalidArgument(format!("Hessian grid too small: {nx} x {ny}")));
    }
    if values.len() != nx * ny {
        return Err(Error::Dimension {
            expected: nx * ny,
            got: values.len(),
        });
    }
    let len = nx * ny;
    let mut out = HessianField {
        n,
        h,
        gx: vec![f64::NAN; len],
        gy: vec![f64::NAN; len],
        hxx: vec![f64::NAN; len],
        hyy: vec![f64::NAN; len],
        hxy: vec![f64::NAN; len],
        det: vec![f64::NAN; len],
    };
    let at = |ix: usize, iy: usize| values[iy * nx + ix];
    for iy in 0..ny {
        for ix in 0..nx {
            let (xm, xp, ym, yp) = if periodic {
                ((ix + nx - 1) % nx, (ix + 1) % nx, (iy + ny - 1) % ny, (iy + 1) % ny)
            } else if ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 {
                continue;
            } else {
                (ix - 1, ix + 1, iy - 1, iy + 1)
            };
            let f0 = at(ix, iy);
            let (fxm, fxp, fym, fyp) = (at(xm, iy), at(xp, iy), at(ix, ym), at(ix, yp));
            let (fpp, fpm, fmp, fmm) = (at(xp, yp), at(xp, ym), at(xm, yp), at(xm, ym));
            let i = iy * nx + ix;
            out.gx[i] = (fxp - fxm) / (2.0 * h[0]);
            out.gy[i] = (fyp - fym) / (2.0 * h[1]);
            out.hxx[i] = (fxp - 2.0 * f0 + fxm) / (h[0] * h[0]);
            out.hyy[i] = (fyp - 2.0 * f0 + fym) / (h[1] * h[1]);
            out.hxy[i] = (fpp - fpm - fmp + fmm) / (4.0 * h[0] * h[1]);
            out.det[i] = out.hxx[i] * out.hyy[i] - out.hxy[i] * out.hxy[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::closed_form::{ClosedForm1d, FourierDispersion};
    use crate::model::CouplingModel;
    use std::f64::consts::PI;

    #[test]
    fn cosine_second_derivative() {
        let axis = KAxis::brillouin(1024);
        let v: Vec<f64> = axis.nodes().iter().map(|k| k.cos()).collect();
        let (_, d2) = central_differences(&v, axis.step(), true).unwrap();
        assert!((d2[512] + 1.0).abs() < 1e-4);
        assert!(central_differences(&v[..4], 0.1, true).is_err());
    }

    #[test]
    fn quadratic_callable() {
        let ks: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let (d1, d2) = derivatives_callable(|k| k * k, &ks, 1e-3).unwrap();
        for (k, (a, b)) in ks.iter().zip(d1.iter().zip(&d2)) {
            assert!((a - 2.0 * k).abs() < 1e-8);
            assert!((b - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn observed_order_is_two() {
        let f = |k: f64| (k.sin() + 0.3 * (2.0 * k).cos()).exp();
        let d2_exact = |k: f64| {
            let g = k.sin() + 0.3 * (2.0 * k).cos();
            let g1 = k.cos() - 0.6 * (2.0 * k).sin();
            let g2 = -k.sin() - 1.2 * (2.0 * k).cos();
            g.exp() * (g1 * g1 + g2)
        };
        let err = |h: f64| {
            let (_, d2) = derivatives_callable(f, &[0.1, 0.7, 1.3, 2.0, 2.9], h).unwrap();
            [0.1, 0.7, 1.3, 2.0, 2.9].iter().zip(&d2).map(|(k, v)| (v - d2_exact(*k)).abs()).fold(0.0, f64::max)
        };
        let order = (err(1e-2) / err(5e-3)).log2();
        assert!(order > 1.8, "observed order {order}");
    }

    #[test]
    fn tight_binding_inflections() {
        let set = find_inflection_points(&FourierDispersion::tight_binding(1.0), &KAxis::brillouin(128)).unwrap();
        assert_eq!(set.len(), 2);
        assert!((set.points[0].k + PI / 2.0).abs() < 1e-8);
        assert!((set.points[1].k - PI / 2.0).abs() < 1e-8);
        assert!((set.points[0].group_velocity + 2.0).abs() < 1e-8);
        assert!((set.points[1].group_velocity - 2.0).abs() < 1e-8);
    }

    #[test]
    fn power_law_inflections() {
        let axis = KAxis::brillouin(256);
        let a1 = ClosedForm1d::new(CouplingModel::PowerLaw { alpha: 1.0 }).unwrap();
        assert!(find_inflection_points(&a1, &axis).unwrap().is_empty());
        let a2 = ClosedForm1d::new(CouplingModel::PowerLaw { alpha: 2.0 }).unwrap();
        assert!(find_inflection_points(&a2, &axis).unwrap().is_empty());
        let a3 = ClosedForm1d::new(CouplingModel::PowerLaw { alpha: 3.0 }).unwrap();
        let set = find_inflection_points(&a3, &axis).unwrap();
        assert_eq!(set.len(), 2);
        assert!((set.points[1].k - PI / 3.0).abs() < 1e-8, "{:?}", set);
        assert!(find_inflection_points(&a3, &KAxis::brillouin(32)).is_err());
    }

    #[test]
    fn waveguide_poles_are_not_roots() {
        let k_a = 0.3 * PI;
        let wg = ClosedForm1d::new(CouplingModel::Waveguide { k_a }).unwrap();
        let set = find_inflection_points(&wg, &KAxis::brillouin(512)).unwrap();
        assert!(set.is_empty());
        let minima = curvature_minima(&wg, &KAxis::brillouin(512)).unwrap();
        assert_eq!(minima.len(), 2, "{minima:?}");
        for m in &minima {
            assert!(m.k.abs() < 1e-6 || (m.k.abs() - PI).abs() < 1e-6);
            assert!(m.group_velocity.abs() < 1e-6);
        }
    }

    #[test]
    fn cosine_hessian() {
        let ax = KAxis::brillouin(64);
        let v: Vec<f64> = (0..64 * 64)
            .map(|i| ax.k(i % 64).cos() + ax.k(i / 64).cos())
            .collect();
        let hf = hessian_2d(&v, [64, 64], [ax.step(); 2]).unwrap();
        for i in [0, 100, 2000, 4000] {
            let want = ax.k(i % 64).cos() * ax.k(i / 64).cos();
            assert!((hf.det[i] - want).abs() < 2e-3);
        }
    }

    #[test]
    fn paraboloid_hessian() {
        let h = 0.05;
        let v: Vec<f64> = (0..40 * 40)
            .map(|i| {
                let (x, y) = ((i % 40) as f64 * h, (i / 40) as f64 * h);
                x * x + y * y
            })
            .collect();
        let hf = hessian_2d_with(&v, [40, 40], [h, h], false).unwrap();
        assert!(hf.det[0].is_nan());
        assert!((hf.det[41] - 4.0).abs() < 1e-9);
        assert!((hf.det[20 * 40 + 20] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn masked_nodes_poison_their_stencils() {
        let mut v = vec![1.0; 100];
        v[55] = f64::NAN;
        let hf = hessian_2d(&v, [10, 10], [0.1, 0.1]).unwrap();
        assert!(hf.det[55].is_nan() && hf.det[45].is_nan() && hf.det[44].is_nan());
        assert!(hf.det[0].is_finite());
        assert_eq!(hf.available(), 91);
    }
}
