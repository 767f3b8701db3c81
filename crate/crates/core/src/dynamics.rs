//! Time evolution `psi(t) = exp(-i H t) psi(0)`.
//!
//! The default propagator is an adaptive Krylov (Arnoldi) scheme in the
//! style of Expokit's `expv`, driven only by matrix-vector products. Dense
//! diagonalization is available for small systems and serves as a
//! reference.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Operator, DENSE_LIMIT};
use crate::io::fmt_f64;
use crate::lattice::LatticeGeometry;
use crate::linalg::{dot, is_finite, norm, ComplexMatrix, ComplexVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Krylov propagator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KrylovOptions {
    /// Local error tolerance relative to the current norm of psi.
    pub tol: f64,
    /// Krylov subspace dimension.
    pub subspace: usize,
    pub max_steps: usize,
    pub max_rejections: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            subspace: 30,
            max_steps: 200_000,
            max_rejections: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Propagator {
    Krylov(KrylovOptions),
    /// Full eigendecomposition; limited to `DENSE_LIMIT` sites.
    Diagonalize,
}

impl Default for Propagator {
    fn default() -> Self {
        Propagator::Krylov(KrylovOptions::default())
    }
}

/// Wavefunction at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSnapshot {
    pub time: f64,
    pub amplitudes: ComplexVector,
    pub probabilities: Vec<f64>,
    pub survival: f64,
}

impl WaveformSnapshot {
    pub fn new(time: f64, amplitudes: ComplexVector) -> Self {
        let probabilities: Vec<f64> = amplitudes.as_slice().iter().map(|z| z.norm_sqr()).collect();
        let survival = probabilities.iter().sum();
        Self {
            time,
            amplitudes,
            probabilities,
            survival,
        }
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// CSV with columns `site, x, y, prob, re, im`.
    pub fn write_csv<W: Write>(&self, geometry: &LatticeGeometry, mut out: W) -> Result<()> {
        if geometry.n_sites() != self.len() {
            return Err(Error::Dimension {
                expected: geometry.n_sites(),
                got: self.len(),
            });
        }
        writeln!(out, "site,x,y,prob,re,im")?;
        for (i, (p, a)) in self.probabilities.iter().zip(self.amplitudes.as_slice()).enumerate() {
            let r = geometry.position(i)?;
            writeln!(
                out,
                "{i},{},{},{},{},{}",
                fmt_f64(r[0]),
                fmt_f64(r[1]),
                fmt_f64(*p),
                fmt_f64(a.re),
                fmt_f64(a.im)
            )?;
        }
        Ok(())
    }
}

impl WaveformSnapshot {
    /// Parses the CSV written by [`WaveformSnapshot::write_csv`]. The time is
    /// not part of the CSV and must be supplied.
    pub fn read_csv<R: std::io::BufRead>(time: f64, input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "site,x,y,prob,re,im" {
            return Err(Error::InvalidArgument(format!("unexpected snapshot header `{}`", header.trim())));
        }
        let mut amps = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("snapshot row {}: bad number `{s}`", row + 1)))
            };
            if f.len() != 6 || f[0].trim().parse::<usize>().ok() != Some(amps.len()) {
                return Err(Error::InvalidArgument(format!("snapshot row {} is malformed", row + 1)));
            }
            amps.push(Complex64::new(parse(f[4])?, parse(f[5])?));
        }
        Ok(Self::new(time, ComplexVector::new(amps)?))
    }
}

/// JSON sidecar written next to each snapshot CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub time: f64,
    pub survival: f64,
    pub model: String,
    pub config_hash: String,
    pub method: String,
    pub time_unit: String,
}

/// `sum_i |psi_i|^2`.
pub fn survival_probability(snapshot: &WaveformSnapshot) -> f64 {
    snapshot.survival
}

/// Diagnostics from a single Krylov propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KrylovStats {
    pub steps: usize,
    pub rejections: usize,
    pub error_estimate: f64,
}

/// Evolves a site-localized state with the default Krylov propagator.
pub fn evolve<O: Operator + ?Sized>(h: &O, initial_site: usize, times: &[f64]) -> Result<Vec<WaveformSnapshot>> {
    evolve_with(h, initial_site, times, &Propagator::default())
}

pub fn evolve_with<O: Operator + ?Sized>(
    h: &O,
    initial_site: usize,
    times: &[f64],
    propagator: &Propagator,
) -> Result<Vec<WaveformSnapshot>> {
    let psi0 = ComplexVector::delta(h.dim(), initial_site)?;
    evolve_state(h, &psi0, times, propagator)
}

/// Evolves an arbitrary initial state to each of the ascending `times`.
pub fn evolve_state<O: Operator + ?Sized>(
    h: &O,
    psi0: &ComplexVector,
    times: &[f64],
    propagator: &Propagator,
) -> Result<Vec<WaveformSnapshot>> {
    if psi0.len() != h.dim() {
        return Err(Error::Dimension {
            expected: h.dim(),
            got: psi0.len(),
        });
    }
    check_times(times)?;
    if !h.norm_bound().is_finite() {
        return Err(Error::NonFinite { row: 0, col: 0 });
    }
    match propagator {
        Propagator::Krylov(opts) => {
            let mut out = Vec::with_capacity(times.len());
            let mut psi = psi0.as_slice().to_vec();
            let mut t_prev = 0.0;
            for &t in times {
                if t > t_prev {
                    psi = expv(h, t - t_prev, &psi, opts)?.0;
                }
                t_prev = t;
                out.push(WaveformSnapshot::new(t, ComplexVector::new(psi.clone())?));
            }
            Ok(out)
        }
        Propagator::Diagonalize => {
            if h.dim() > DENSE_LIMIT {
                return Err(Error::InvalidArgument(format!(
                    "diagonalization limited to {DENSE_LIMIT} sites, got {}",
                    h.dim()
                )));
            }
            let m = h.dense()?;
            let diag = Diagonalized::new(&m, psi0.as_slice())?;
            times
                .iter()
                .map(|&t| Ok(WaveformSnapshot::new(t, ComplexVector::new(diag.at(t))?)))
                .collect()
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    for (i, &t) in times.iter().enumerate() {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument(format!("time {t} must be finite and >= 0")));
        }
        if i > 0 && t <= times[i - 1] {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
    }
    Ok(())
}

/// `psi(t) = U exp(-i S t) U^{-1} psi0`.
struct Diagonalized {
    vals: Vec<Complex64>,
    vecs: ComplexMatrix,
    coeffs: Vec<Complex64>,
}

impl Diagonalized {
    fn new(m: &ComplexMatrix, psi0: &[Complex64]) -> Result<Self> {
        let (vals, vecs) = m.eigen_decomposition()?;
        let coeffs = vecs.solve_vector(psi0)?;
        Ok(Self { vals, vecs, coeffs })
    }

    fn at(&self, t: f64) -> Vec<Complex64> {
        let w: Vec<Complex64> = self
            .vals
            .iter()
            .zip(&self.coeffs)
            .map(|(l, c)| (MINUS_I * l * t).exp() * c)
            .collect();
        let mut out = vec![ZERO; w.len()];
        self.vecs.matvec_into(&w, &mut out);
        out
    }
}

/// Rounds a step size to two significant digits, as Expokit does.
fn round_step(t: f64) -> f64 {
    let s = 10f64.powf(t.log10().floor() - 1.0);
    (t / s).ceil() * s
}

/// Computes `exp(-i H t) v` by adaptive Krylov stepping.
pub fn expv<O: Operator + ?Sized>(h: &O, t: f64, v: &[Complex64], opts: &KrylovOptions) -> Result<(Vec<Complex64>, KrylovStats)> {
    let n = h.dim();
    if v.len() != n {
        return Err(Error::Dimension { expected: n, got: v.len() });
    }
    if !(opts.tol > 0.0) || opts.subspace < 2 {
        return Err(Error::InvalidArgument("Krylov tolerance must be > 0 and subspace >= 2".into()));
    }
    let mut stats = KrylovStats::default();
    let mut w = v.to_vec();
    let mut beta = norm(&w);
    if t == 0.0 || beta == 0.0 {
        return Ok((w, stats));
    }
    let anorm = h.norm_bound().max(f64::MIN_POSITIVE);
    let m = opts.subspace.min(n);
    let tol = opts.tol;
    let btol = 1e-13 * anorm;
    let (gamma, delta) = (0.9, 1.2);

    let mut t_new = {
        let mp1 = (m + 1) as f64;
        let ln_fact = mp1 * (mp1 / std::f64::consts::E).ln() + 0.5 * (2.0 * std::f64::consts::PI * mp1).ln();
        let ln_t = ((tol / (4.0 * anorm)).ln() + ln_fact) / m as f64;
        round_step(ln_t.exp() / anorm)
    };
    let mut t_now = 0.0;
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut p = vec![ZERO; n];

    while t_now < t {
        stats.steps += 1;
        if stats.steps > opts.max_steps {
            return Err(Error::NonConvergence {
                step: stats.steps,
                time: t_now,
                residual: stats.error_estimate,
            });
        }
        let mut t_step = (t - t_now).min(t_new);

        // Arnoldi on A = -iH with modified Gram-Schmidt.
        basis.clear();
        basis.push(w.iter().map(|z| z / beta).collect());
        let mut hdata = vec![ZERO; (m + 2) * (m + 2)];
        let idx = |i: usize, j: usize| i * (m + 2) + j;
        let mut mb = m;
        let mut breakdown = false;
        for j in 0..m {
            h.apply(&basis[j], &mut p);
            for z in p.iter_mut() {
                *z *= MINUS_I;
            }
            if p.iter().any(|z| !is_finite(*z)) {
                return Err(Error::NonFinite { row: j, col: 0 });
            }
            for (i, vi) in basis.iter().enumerate() {
                let hij = dot(vi, &p);
                hdata[idx(i, j)] = hij;
                for (pz, vz) in p.iter_mut().zip(vi) {
                    *pz -= hij * vz;
                }
            }
            let s = norm(&p);
            if s < btol {
                breakdown = true;
                mb = j + 1;
                t_step = t - t_now;
                break;
            }
            hdata[idx(j + 1, j)] = Complex64::new(s, 0.0);
            basis.push(p.iter().map(|z| z / s).collect());
        }
        let mut avnorm = 0.0;
        if !breakdown {
            hdata[idx(m + 1, m)] = Complex64::new(1.0, 0.0);
            h.apply(&basis[m], &mut p);
            avnorm = norm(&p);
        }
        let k1 = if breakdown { 0 } else { 2 };

        let mut rejections = 0;
        let (f, err_loc, xm) = loop {
            let mx = mb + k1;
            let f = ComplexMatrix::from_fn(mx, mx, |i, j| hdata[idx(i, j)] * t_step)?.expm()?;
            if breakdown {
                break (f, btol, 1.0 / m as f64);
            }
            let phi1 = (beta * f.get(m, 0)).norm();
            let phi2 = (beta * f.get(m + 1, 0) * avnorm).norm();
            let (err, xm) = if phi1 > 10.0 * phi2 {
                (phi2, 1.0 / m as f64)
            } else if phi1 > phi2 {
                (phi1 * phi2 / (phi1 - phi2), 1.0 / m as f64)
            } else {
                (phi1, 1.0 / (m as f64 - 1.0))
            };
            if err <= delta * t_step * tol * beta {
                break (f, err, xm);
            }
            rejections += 1;
            stats.rejections += 1;
            if rejections > opts.max_rejections {
                return Err(Error::NonConvergence {
                    step: stats.steps,
                    time: t_now,
                    residual: err / beta,
                });
            }
            t_step = round_step(gamma * t_step * (t_step * tol * beta / err).powf(xm));
        };

        let mx = mb + if k1 > 0 { k1 - 1 } else { 0 };
        let mut next = vec![ZERO; n];
        for (j, vj) in basis.iter().take(mx).enumerate() {
            let c = beta * f.get(j, 0);
            for (a, b) in next.iter_mut().zip(vj) {
                *a += c * b;
            }
        }
        w = next;
        beta = norm(&w);
        t_now += t_step;
        let err = err_loc.max(f64::EPSILON * anorm * beta);
        stats.error_estimate += err / beta.max(f64::MIN_POSITIVE);
        t_new = round_step(gamma * t_step * (t_step * tol * beta / err).powf(xm));
        if beta == 0.0 {
            break;
        }
    }
    Ok((w, stats))
}

/// A 1D probability profile with signed coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
    /// Site indices sampled, in order (empty for binned profiles).
    pub sites: Vec<usize>,
}

/// Line through the array center used for cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    /// The whole chain (1D only).
    Chain,
    /// Center row (fixed y).
    Row,
    /// Center column (fixed x).
    Column,
    /// `ix == iy` on a square grid.
    Diagonal,
    /// `ix + iy == n - 1` on a square grid.
    AntiDiagonal,
    /// Mean probability in unit-width shells around the center.
    Radial,
}

impl std::str::FromStr for Section {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| Error::InvalidArgument(format!("unknown section `{s}`")))
    }
}

/// Extracts a line cut of `snapshot`.
pub fn cross_section(snapshot: &WaveformSnapshot, geometry: &LatticeGeometry, section: Section) -> Result<Profile> {
    if geometry.n_sites() != snapshot.len() {
        return Err(Error::Dimension {
            expected: geometry.n_sites(),
            got: snapshot.len(),
        });
    }
    let [nx, ny] = geometry.counts();
    let (cx, cy) = geometry.grid_index(geometry.origin_site())?;
    let sites: Vec<usize> = match section {
        Section::Chain => {
            if geometry.dimension() != 1 {
                return Err(Error::InvalidArgument("chain section requires a 1D geometry".into()));
            }
            (0..nx).collect()
        }
        Section::Row => (0..nx).map(|ix| cy * nx + ix).collect(),
        Section::Column => {
            if geometry.dimension() != 2 {
                return Err(Error::InvalidArgument("column section requires a 2D geometry".into()));
            }
            (0..ny).map(|iy| iy * nx + cx).collect()
        }
        Section::Diagonal | Section::AntiDiagonal => {
            if geometry.dimension() != 2 || nx != ny {
                return Err(Error::InvalidArgument("diagonal sections require a square 2D grid".into()));
            }
            if section == Section::Diagonal {
                (0..nx).map(|i| i * nx + i).collect()
            } else {
                (0..nx).map(|i| (nx - 1 - i) * nx + i).collect()
            }
        }
        Section::Radial => return radial_profile(snapshot, geometry),
    };
    let mut coords = Vec::with_capacity(sites.len());
    for &s in &sites {
        let r = geometry.position(s)?;
        let along = match section {
            Section::Column => r[1],
            Section::Diagonal | Section::AntiDiagonal => r[0].signum() * r[0].hypot(r[1]),
            _ => r[0],
        };
        coords.push(along);
    }
    let values = sites.iter().map(|&s| snapshot.probabilities[s]).collect();
    Ok(Profile { coords, values, sites })
}

fn radial_profile(snapshot: &WaveformSnapshot, geometry: &LatticeGeometry) -> Result<Profile> {
    let bin = geometry.spacings()[0].min(geometry.spacings()[1]);
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for (i, p) in snapshot.probabilities.iter().enumerate() {
        let r = geometry.position(i)?;
        let b = (r[0].hypot(r[1]) / bin).round() as usize;
        if b >= sums.len() {
            sums.resize(b + 1, (0.0, 0));
        }
        sums[b].0 += p;
        sums[b].1 += 1;
    }
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (b, (s, c)) in sums.into_iter().enumerate() {
        if c > 0 {
            coords.push(b as f64 * bin);
            values.push(s / c as f64);
        }
    }
    Ok(Profile {
        coords,
        values,
        sites: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_power_law, build_waveguide};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tight_binding(n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { c(1.0, 0.0) } else { ZERO }).unwrap()
    }

    /// J_n(x) for n = 0..=nmax by Miller's downward recurrence.
    fn bessel_j(nmax: usize, x: f64) -> Vec<f64> {
        let start = 2 * ((nmax.max(x as usize) + 60) / 2);
        let mut j = vec![0.0; start + 2];
        j[start] = 1e-300;
        for k in (1..=start).rev() {
            j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        }
        let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
        j.truncate(nmax + 1);
        j.iter().map(|v| v / norm).collect()
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let h = ComplexMatrix::zeros(5, 5);
        let snaps = evolve(&h, 2, &[0.0, 1.0, 10.0]).unwrap();
        for s in &snaps {
            assert_eq!(s.amplitudes, ComplexVector::delta(5, 2).unwrap());
        }
    }

    #[test]
    fn uniform_decay() {
        let h = ComplexMatrix::identity(4).scale(c(0.0, -0.5));
        let snaps = evolve(&h, 0, &[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(snaps[0].survival, 1.0);
        assert!((snaps[1].survival - (-1f64).exp()).abs() < 1e-12);
        assert!((snaps[2].survival - (-3f64).exp()).abs() < 1e-12);
        let d = evolve_with(&h, 0, &[1.0], &Propagator::Diagonalize).unwrap();
        assert!((d[0].survival - 0.36787944117144233).abs() < 1e-12);
    }

    #[test]
    fn tight_binding_matches_bessel() {
        let n = 201;
        let h = tight_binding(n);
        let t = 20.0;
        let snap = &evolve(&h, 100, &[t]).unwrap()[0];
        let j = bessel_j(100, 2.0 * t);
        let mut worst: f64 = 0.0;
        for site in 20..n - 20 {
            let x = site as isize - 100;
            let ax = x.unsigned_abs();
            // J_{-n} = (-1)^n J_n
            let jx = if x < 0 && ax % 2 == 1 { -j[ax] } else { j[ax] };
            let want = MINUS_I.powi(x as i32) * jx;
            worst = worst.max((snap.amplitudes.as_slice()[site] - want).norm());
        }
        assert!(worst < 1e-8, "max error {worst}");
    }

    #[test]
    fn rejects_bad_times() {
        let h = tight_binding(3);
        assert!(evolve(&h, 0, &[1.0, 1.0]).is_err());
        assert!(evolve(&h, 0, &[-1.0]).is_err());
        assert!(evolve(&h, 5, &[1.0]).is_err());
    }

    #[test]
    fn krylov_matches_diagonalization_on_waveguide() {
        let g = LatticeGeometry::chain(120, 1.0).unwrap();
        let h = build_waveguide(&g, 0.3 * std::f64::consts::PI).unwrap();
        let times = [0.5, 5.0, 30.0];
        let a = evolve(&h, 60, &times).unwrap();
        let b = evolve_with(&h, 60, &times, &Propagator::Diagonalize).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let diff: Vec<Complex64> = x.amplitudes.as_slice().iter().zip(y.amplitudes.as_slice()).map(|(p, q)| p - q).collect();
            assert!(norm(&diff) <= 1e-8 * y.amplitudes.norm());
        }
        for w in a.windows(2) {
            assert!(w[1].survival <= w[0].survival + 1e-8);
        }
    }

    #[test]
    fn power_law_conserves_norm_and_parity() {
        let g = LatticeGeometry::chain(101, 1.0).unwrap();
        let h = build_power_law(&g, 1.0).unwrap();
        let snaps = evolve(&h, g.origin_site(), &[1.0, 4.0]).unwrap();
        for s in &snaps {
            assert!((s.survival - 1.0).abs() < 1e-9);
            for i in 0..50 {
                assert!((s.probabilities[i].sqrt() - s.probabilities[100 - i].sqrt()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sections_of_square_grid() {
        let g = LatticeGeometry::square(5).unwrap();
        let h = build_power_law(&g, 3.0).unwrap();
        let s = &evolve(&h, g.origin_site(), &[0.0, 0.7]).unwrap();
        let row0 = cross_section(&s[0], &g, Section::Row).unwrap();
        assert_eq!(row0.values, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(row0.coords, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let row = cross_section(&s[1], &g, Section::Row).unwrap();
        let col = cross_section(&s[1], &g, Section::Column).unwrap();
        for (a, b) in row.values.iter().zip(&col.values) {
            assert!((a - b).abs() < 1e-12);
        }
        let diag = cross_section(&s[1], &g, Section::Diagonal).unwrap();
        assert!((diag.coords[0] + 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let radial = cross_section(&s[1], &g, Section::Radial).unwrap();
        assert_eq!(radial.coords[0], 0.0);
        assert!(cross_section(&s[1], &g, Section::Chain).is_err());
        let chain = LatticeGeometry::chain(7, 1.0).unwrap();
        let snap = WaveformSnapshot::new(0.0, ComplexVector::delta(7, 3).unwrap());
        assert_eq!(cross_section(&snap, &chain, Section::Chain).unwrap().values, snap.probabilities);
        assert!(cross_section(&snap, &chain, Section::Diagonal).is_err());
    }

    #[test]
    fn snapshot_csv_layout() {
        let g = LatticeGeometry::chain(3, 1.0).unwrap();
        let snap = WaveformSnapshot::new(0.0, ComplexVector::delta(3, 1).unwrap());
        let mut buf = Vec::new();
        snap.write_csv(&g, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "site,x,y,prob,re,im");
        assert!(lines[2].starts_with("1,0,0,1.0000000000000000e0,"));
        let back = WaveformSnapshot::read_csv(0.0, s.as_bytes()).unwrap();
        assert_eq!(back, snap);
        assert!(WaveformSnapshot::read_csv(0.0, "a,b\n".as_bytes()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn krylov_agrees_with_oracle(seed in 0u64..1000, n in 10usize..60, t in 0.1f64..10.0) {
            // Random complex-symmetric matrix from a simple LCG.
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut rnd = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            };
            let mut data = vec![ZERO; n * n];
            for i in 0..n {
                for j in i..n {
                    let z = c(rnd(), rnd()) / (n as f64).sqrt();
                    data[i * n + j] = z;
                    data[j * n + i] = z;
                }
            }
            let m = ComplexMatrix::from_row_major(n, n, data).unwrap();
            let a = evolve(&m, 0, &[t]).unwrap();
            let b = evolve_with(&m, 0, &[t], &Propagator::Diagonalize).unwrap();
            let diff: Vec<Complex64> = a[0].amplitudes.as_slice().iter().zip(b[0].amplitudes.as_slice()).map(|(p, q)| p - q).collect();
            prop_assert!(norm(&diff) <= 1e-8 * b[0].amplitudes.norm());
        }
    }
}
