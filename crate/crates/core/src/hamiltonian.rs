//! Single-excitation effective Hamiltonians.
//!
//! Couplings depend only on the displacement between sites, so every
//! builder fills a table indexed by `(dx, dy)` in grid units. Dense
//! matrices are materialized on request; larger arrays are applied
//! matrix-free (direct summation in 1D, zero-padded FFT convolution in 2D).

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::lattice::LatticeGeometry;
use crate::linalg::{is_finite, ComplexMatrix};
use crate::model::{CouplingModel, Polarization};

/// Largest N for which [`Hamiltonian::materialize`] builds a dense matrix.
pub const DENSE_LIMIT: usize = 2000;

const HALF_I: Complex64 = Complex64::new(0.0, -0.5);

/// Anything that can act as `y = H x` on the single-excitation sector.
pub trait Operator: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);

    /// Upper bound on the induced 1-norm.
    fn norm_bound(&self) -> f64;

    /// Dense copy, for the diagonalization path.
    fn dense(&self) -> Result<ComplexMatrix>;
}

impl Operator for ComplexMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.matvec_into(x, y)
    }

    fn norm_bound(&self) -> f64 {
        self.norm_one()
    }

    fn dense(&self) -> Result<ComplexMatrix> {
        Ok(self.clone())
    }
}

/// Couplings indexed by grid displacement `(dx, dy)`,
/// `dx` in `-(n_x-1)..=(n_x-1)`. The zero displacement holds the diagonal.
#[derive(Debug, Clone)]
pub struct CouplingTable {
    counts: [usize; 2],
    spacings: [f64; 2],
    data: Vec<Complex64>,
}

impl CouplingTable {
    fn width(&self) -> usize {
        2 * self.counts[0] - 1
    }

    fn build(geometry: &LatticeGeometry, diagonal: Complex64, f: impl Fn([f64; 2]) -> Complex64 + Sync) -> Result<Self> {
        let counts = geometry.counts();
        let spacings = geometry.spacings();
        let wx = 2 * counts[0] - 1;
        let wy = 2 * counts[1] - 1;
        let data: Vec<Complex64> = (0..wx * wy)
            .into_par_iter()
            .map(|idx| {
                let dx = (idx % wx) as isize - (counts[0] as isize - 1);
                let dy = (idx / wx) as isize - (counts[1] as isize - 1);
                if dx == 0 && dy == 0 {
                    diagonal
                } else {
                    f([dx as f64 * spacings[0], dy as f64 * spacings[1]])
                }
            })
            .collect();
        if let Some(idx) = data.iter().position(|z| !is_finite(*z)) {
            return Err(Error::NonFinite {
                row: idx / wx,
                col: idx % wx,
            });
        }
        Ok(Self { counts, spacings, data })
    }

    /// Coupling at grid displacement `(dx, dy)`.
    #[inline]
    pub fn get(&self, dx: isize, dy: isize) -> Complex64 {
        let ix = (dx + self.counts[0] as isize - 1) as usize;
        let iy = (dy + self.counts[1] as isize - 1) as usize;
        self.data[iy * self.width() + ix]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Iterates `(dx, dy, value)` with physical displacements.
    pub fn entries(&self) -> impl Iterator<Item = ([f64; 2], Complex64)> + '_ {
        let w = self.width();
        let (cx, cy) = (self.counts[0] as isize - 1, self.counts[1] as isize - 1);
        self.data.iter().enumerate().map(move |(idx, &v)| {
            let dx = (idx % w) as isize - cx;
            let dy = (idx / w) as isize - cy;
            ([dx as f64 * self.spacings[0], dy as f64 * self.spacings[1]], v)
        })
    }

    /// CSV with columns `dx, dy, re, im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "dx,dy,re,im")?;
        for (d, v) in self.entries() {
            writeln!(out, "{},{},{},{}", fmt_f64(d[0]), fmt_f64(d[1]), fmt_f64(v.re), fmt_f64(v.im))?;
        }
        Ok(())
    }
}

/// Precomputed kernel spectrum for 2D FFT convolution.
struct FftConvolver {
    lx: usize,
    ly: usize,
    kernel_hat: Vec<Complex64>,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolver").field("lx", &self.lx).field("ly", &self.ly).finish()
    }
}

/// Smallest 2^a 3^b 5^c >= n.
fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl FftConvolver {
    fn new(table: &CouplingTable) -> Self {
        let [nx, ny] = table.counts;
        let lx = smooth_size(2 * nx - 1);
        let ly = smooth_size(2 * ny - 1);
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(lx);
        let inv_x = planner.plan_fft_inverse(lx);
        let fwd_y = planner.plan_fft_forward(ly);
        let inv_y = planner.plan_fft_inverse(ly);
        let mut kernel = vec![Complex64::new(0.0, 0.0); lx * ly];
        for dy in -(ny as isize - 1)..=(ny as isize - 1) {
            for dx in -(nx as isize - 1)..=(nx as isize - 1) {
                let ix = dx.rem_euclid(lx as isize) as usize;
                let iy = dy.rem_euclid(ly as isize) as usize;
                kernel[iy * lx + ix] = table.get(dx, dy);
            }
        }
        let conv = Self {
            lx,
            ly,
            kernel_hat: Vec::new(),
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
        };
        conv.transform(&mut kernel, true);
        Self {
            kernel_hat: kernel,
            ..conv
        }
    }

    /// In-place 2D transform of a row-major `ly x lx` buffer.
    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let (fx, fy) = if forward {
            (&self.fwd_x, &self.fwd_y)
        } else {
            (&self.inv_x, &self.inv_y)
        };
        buf.par_chunks_mut(self.lx).for_each(|row| fx.process(row));
        let mut cols = transpose(buf, self.ly, self.lx);
        cols.par_chunks_mut(self.ly).for_each(|col| fy.process(col));
        let back = transpose(&cols, self.lx, self.ly);
        buf.copy_from_slice(&back);
    }

    fn apply(&self, nx: usize, ny: usize, x: &[Complex64], y: &mut [Complex64]) {
        let (lx, ly) = (self.lx, self.ly);
        let mut buf = vec![Complex64::new(0.0, 0.0); lx * ly];
        for iy in 0..ny {
            buf[iy * lx..iy * lx + nx].copy_from_slice(&x[iy * nx..(iy + 1) * nx]);
        }
        self.transform(&mut buf, true);
        buf.par_iter_mut().zip(self.kernel_hat.par_iter()).for_each(|(b, k)| *b *= k);
        self.transform(&mut buf, false);
        let scale = 1.0 / (lx * ly) as f64;
        for iy in 0..ny {
            for ix in 0..nx {
                y[iy * nx + ix] = buf[iy * lx + ix] * scale;
            }
        }
    }
}

fn transpose(a: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

/// Effective Hamiltonian of a finite array.
#[derive(Debug)]
pub struct Hamiltonian {
    model: CouplingModel,
    geometry: LatticeGeometry,
    table: CouplingTable,
    fft: Option<FftConvolver>,
    norm_bound: f64,
}

impl Hamiltonian {
    pub fn build(geometry: &LatticeGeometry, model: &CouplingModel) -> Result<Self> {
        model.validate()?;
        match *model {
            CouplingModel::PowerLaw { alpha } => build_power_law(geometry, alpha),
            CouplingModel::Waveguide { k_a } => build_waveguide(geometry, k_a),
            CouplingModel::FreeSpace { k_a, polarization } => build_free_space(geometry, k_a, &polarization),
        }
    }

    fn from_table(geometry: &LatticeGeometry, model: CouplingModel, table: CouplingTable) -> Self {
        let [nx, ny] = geometry.counts();
        // Row sums of |T(i-j)| are bounded by the full table sum.
        let norm_bound = table.data.iter().map(|z| z.norm()).sum();
        let fft = (ny > 1 && nx * ny > 64).then(|| FftConvolver::new(&table));
        Self {
            model,
            geometry: *geometry,
            table,
            fft,
            norm_bound,
        }
    }

    pub fn model(&self) -> &CouplingModel {
        &self.model
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn table(&self) -> &CouplingTable {
        &self.table
    }

    pub fn is_hermitian(&self) -> bool {
        self.model.is_hermitian()
    }

    pub fn n_sites(&self) -> usize {
        self.geometry.n_sites()
    }

    /// Matrix element `M_ij`.
    pub fn entry(&self, i: usize, j: usize) -> Result<Complex64> {
        let (ix, iy) = self.geometry.grid_index(i)?;
        let (jx, jy) = self.geometry.grid_index(j)?;
        Ok(self
            .table
            .get(ix as isize - jx as isize, iy as isize - jy as isize))
    }

    /// Dense copy of the matrix; refused above [`DENSE_LIMIT`] sites.
    pub fn materialize(&self) -> Result<ComplexMatrix> {
        let n = self.n_sites();
        if n > DENSE_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "refusing to materialize {n} x {n} matrix (limit {DENSE_LIMIT})"
            )));
        }
        let nx = self.geometry.counts()[0];
        ComplexMatrix::from_fn(n, n, |i, j| {
            let (ix, iy) = ((i % nx) as isize, (i / nx) as isize);
            let (jx, jy) = ((j % nx) as isize, (j / nx) as isize);
            self.table.get(ix - jx, iy - jy)
        })
    }

    fn apply_direct(&self, x: &[Complex64], y: &mut [Complex64]) {
        let [nx, _] = self.geometry.counts();
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (ix, iy) = ((i % nx) as isize, (i / nx) as isize);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                let (jx, jy) = ((j % nx) as isize, (j / nx) as isize);
                acc += self.table.get(ix - jx, iy - jy) * xj;
            }
            *yi = acc;
        });
    }
}

impl Operator for Hamiltonian {
    fn dim(&self) -> usize {
        self.n_sites()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.n_sites());
        assert_eq!(y.len(), self.n_sites());
        match &self.fft {
            Some(conv) => {
                let [nx, ny] = self.geometry.counts();
                conv.apply(nx, ny, x, y)
            }
            None => self.apply_direct(x, y),
        }
    }

    fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    fn dense(&self) -> Result<ComplexMatrix> {
        self.materialize()
    }
}

/// `M_ij = 1 / |r_i - r_j|^alpha`, zero diagonal.
pub fn build_power_law(geometry: &LatticeGeometry, alpha: f64) -> Result<Hamiltonian> {
    let model = CouplingModel::PowerLaw { alpha };
    model.validate()?;
    if geometry.n_sites() < 2 {
        return Err(Error::InvalidArgument("power-law model needs at least two sites".into()));
    }
    let table = CouplingTable::build(geometry, Complex64::new(0.0, 0.0), |d| {
        let r = d[0].hypot(d[1]);
        Complex64::new(r.powf(-alpha), 0.0)
    })?;
    Ok(Hamiltonian::from_table(geometry, model, table))
}

/// `M_ij = -(i/2) exp(-i k_A |x_i - x_j|)`, diagonal `-i/2`.
pub fn build_waveguide(geometry: &LatticeGeometry, k_a: f64) -> Result<Hamiltonian> {
    let model = CouplingModel::Waveguide { k_a };
    model.validate()?;
    if geometry.dimension() != 1 {
        return Err(Error::Model("waveguide coupling is defined for 1D chains only".into()));
    }
    let table = CouplingTable::build(geometry, HALF_I, |d| {
        let r = d[0].abs();
        HALF_I * Complex64::from_polar(1.0, -k_a * r)
    })?;
    Ok(Hamiltonian::from_table(geometry, model, table))
}

/// `M_ij = -(3 pi / k_A) d* . G(r_i - r_j) . d`, diagonal `-i/2`.
pub fn build_free_space(geometry: &LatticeGeometry, k_a: f64, polarization: &Polarization) -> Result<Hamiltonian> {
    let model = CouplingModel::FreeSpace {
        k_a,
        polarization: *polarization,
    };
    model.validate()?;
    let table = CouplingTable::build(geometry, HALF_I, |d| free_space_coupling([d[0], d[1], 0.0], k_a, polarization))?;
    Ok(Hamiltonian::from_table(geometry, model, table))
}

/// Off-diagonal free-space coupling at separation `r` (nonzero).
pub fn free_space_coupling(r: [f64; 3], k_a: f64, polarization: &Polarization) -> Complex64 {
    match green_tensor_free_space(r, k_a) {
        Ok(g) => -(3.0 * PI / k_a) * polarization.project(&g),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    }
}

/// Dyadic Green's tensor of free space,
/// `e^{ikr}/(4 pi k^2 r^3) [(k^2r^2 + ikr - 1) I + (-k^2r^2 - 3ikr + 3) r r^T]`.
pub fn green_tensor_free_space(r: [f64; 3], k_a: f64) -> Result<[[Complex64; 3]; 3]> {
    let rn = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if !(rn > 0.0) {
        return Err(Error::Singular("free-space Green's tensor at r = 0".into()));
    }
    let kr = k_a * rn;
    let pre = Complex64::from_polar(1.0, kr) / (4.0 * PI * k_a * k_a * rn * rn * rn);
    let a = Complex64::new(kr * kr - 1.0, kr);
    let b = Complex64::new(3.0 - kr * kr, -3.0 * kr);
    let u = [r[0] / rn, r[1] / rn, r[2] / rn];
    let mut g = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, gij) in row.iter_mut().enumerate() {
            let delta = if i == j { a } else { Complex64::new(0.0, 0.0) };
            *gij = pre * (delta + b * (u[i] * u[j]));
        }
    }
    Ok(g)
}

/// Weight of the `1/r` far-field term: `d* . (I - r r^T) . d`.
pub fn far_field_weight(polarization: &Polarization, direction: [f64; 3]) -> f64 {
    let n = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
    let u = [direction[0] / n, direction[1] / n, direction[2] / n];
    let d = polarization.components();
    let dot: Complex64 = (0..3).map(|i| d[i].conj() * u[i]).sum();
    1.0 - dot.norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexVector;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn power_law_examples() {
        let g = LatticeGeometry::chain(3, 1.0).unwrap();
        let h = build_power_law(&g, 1.0).unwrap();
        assert_eq!(h.entry(0, 1).unwrap(), c(1.0, 0.0));
        assert_eq!(h.entry(0, 2).unwrap(), c(0.5, 0.0));
        assert_eq!(h.entry(1, 1).unwrap(), c(0.0, 0.0));

        let sq = LatticeGeometry::square(3).unwrap();
        let h = build_power_law(&sq, 2.0).unwrap();
        let a = sq.site_index(0, 0).unwrap();
        let b = sq.site_index(1, 1).unwrap();
        assert!((h.entry(a, b).unwrap() - c(0.5, 0.0)).norm() < 1e-15);

        let h3 = build_power_law(&LatticeGeometry::chain(10, 1.0).unwrap(), 3.0).unwrap();
        assert_eq!(h3.entry(4, 5).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn power_law_needs_two_sites() {
        assert!(build_power_law(&LatticeGeometry::chain(1, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn waveguide_examples() {
        let g = LatticeGeometry::chain(4, 1.0).unwrap();
        let h = build_waveguide(&g, PI).unwrap();
        assert!((h.entry(0, 1).unwrap() - c(0.0, 0.5)).norm() < 1e-15);
        let h = build_waveguide(&g, 2.0 * PI).unwrap();
        for j in 1..4 {
            assert!((h.entry(0, j).unwrap() - c(0.0, -0.5)).norm() < 1e-14);
        }
        assert_eq!(h.entry(2, 2).unwrap(), c(0.0, -0.5));
        assert!(build_waveguide(&LatticeGeometry::square(3).unwrap(), 1.0).is_err());
    }

    #[test]
    fn green_tensor_longitudinal_has_no_far_field() {
        let k = 1.7;
        let r = 3.2;
        let g = green_tensor_free_space([r, 0.0, 0.0], k).unwrap();
        let kr = k * r;
        let want = Complex64::from_polar(1.0, kr) * c(2.0, -2.0 * kr) / (4.0 * PI * k * k * r.powi(3));
        assert!((g[0][0] - want).norm() < 1e-15);
    }

    #[test]
    fn green_tensor_transverse_at_two_pi() {
        // r along z with k r = 2 pi: G_xx = (4 pi^2 + 2 pi i - 1) / (4 pi k^2 r^3)
        let k = 0.9;
        let r = 2.0 * PI / k;
        let g = green_tensor_free_space([0.0, 0.0, r], k).unwrap();
        let want = c(4.0 * PI * PI - 1.0, 2.0 * PI) / (4.0 * PI * k * k * r.powi(3));
        assert!((g[0][0] - want).norm() < 1e-14 * want.norm());
        assert!(g[0][2].norm() < 1e-18);
        assert!(green_tensor_free_space([0.0; 3], k).is_err());
    }

    #[test]
    fn free_space_far_field_weights() {
        let along = [1.0, 0.0, 0.0];
        assert_eq!(far_field_weight(&Polarization::x(), along), 0.0);
        assert_eq!(far_field_weight(&Polarization::y(), along), 1.0);
        // Parallel coupling falls off faster than 1/r; perpendicular does not.
        let k = 0.6 * PI;
        let par = |r: f64| free_space_coupling([r, 0.0, 0.0], k, &Polarization::x()).norm() * r;
        let perp = |r: f64| free_space_coupling([r, 0.0, 0.0], k, &Polarization::y()).norm() * r;
        assert!(par(1000.0) < 1e-2 * par(10.0));
        assert!((perp(1000.0) - 3.0 / (4.0 * k)).abs() < 1e-2);
    }

    #[test]
    fn free_space_diagonal_and_limit() {
        let g = LatticeGeometry::chain(5, 1.0).unwrap();
        let h = build_free_space(&g, 0.3 * PI, &Polarization::y()).unwrap();
        assert_eq!(h.entry(3, 3).unwrap().im, -0.5);
        // The r -> 0 limit of Im M reproduces the -1/2 diagonal.
        let near = free_space_coupling([1e-4, 0.0, 0.0], 0.3 * PI, &Polarization::y());
        assert!((near.im + 0.5).abs() < 1e-6);
    }

    #[test]
    fn coupling_table_csv_has_header() {
        let g = LatticeGeometry::chain(2, 1.0).unwrap();
        let h = build_power_law(&g, 1.0).unwrap();
        let mut buf = Vec::new();
        h.table().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("dx,dy,re,im\n"));
        assert_eq!(s.lines().count(), 4);
    }

    fn check_apply_matches_dense(h: &Hamiltonian) {
        let n = h.n_sites();
        let m = h.materialize().unwrap();
        let x: Vec<Complex64> = (0..n).map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let mut y1 = vec![c(0.0, 0.0); n];
        let mut y2 = vec![c(0.0, 0.0); n];
        h.apply(&x, &mut y1);
        m.matvec_into(&x, &mut y2);
        let err: f64 = y1.iter().zip(&y2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = ComplexVector::new(y2).unwrap().norm();
        assert!(err < 1e-12 * scale, "apply error {err}");
    }

    #[test]
    fn fft_apply_matches_dense() {
        let sq = LatticeGeometry::square(11).unwrap();
        check_apply_matches_dense(&build_power_law(&sq, 2.0).unwrap());
        let rect = LatticeGeometry::rectangular(9, 13, 0.4, 0.8).unwrap();
        check_apply_matches_dense(&build_free_space(&rect, 1.2 * PI, &Polarization::spherical(PI / 12.0, PI / 4.0)).unwrap());
        check_apply_matches_dense(&build_waveguide(&LatticeGeometry::chain(40, 1.0).unwrap(), 0.3 * PI).unwrap());
    }

    #[test]
    fn power_law_spectrum_is_real() {
        let h = build_power_law(&LatticeGeometry::chain(60, 1.0).unwrap(), 1.5).unwrap();
        let m = h.materialize().unwrap();
        let ev = m.eigenvalues().unwrap();
        assert!(ev.iter().all(|z| z.im.abs() < 1e-9));
    }

    fn decay_matrix_is_psd(h: &Hamiltonian) {
        let m = h.materialize().unwrap();
        let md = m.adjoint();
        let n = m.rows();
        let gamma = ComplexMatrix::from_fn(n, n, |i, j| Complex64::i() * (m.get(i, j) - md.get(i, j))).unwrap();
        let ev = gamma.hermitian_eigenvalues().unwrap();
        let scale = ev.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(ev[0] >= -1e-8 * scale, "min eigenvalue {}", ev[0]);
    }

    #[test]
    fn decay_matrices_are_positive_semidefinite() {
        decay_matrix_is_psd(&build_waveguide(&LatticeGeometry::chain(50, 1.0).unwrap(), 0.3 * PI).unwrap());
        decay_matrix_is_psd(&build_free_space(&LatticeGeometry::chain(50, 1.0).unwrap(), 0.6 * PI, &Polarization::x()).unwrap());
        decay_matrix_is_psd(
            &build_free_space(&LatticeGeometry::square(7).unwrap(), 0.3 * PI, &Polarization::spherical(PI / 12.0, PI / 4.0)).unwrap(),
        );
    }

    proptest! {
        #[test]
        fn builders_are_complex_symmetric(
            nx in 2usize..7, ny in 1usize..6, k in 0.1f64..4.0,
            theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI), alpha in 0.5f64..4.0,
        ) {
            let g = LatticeGeometry::rectangular(nx, ny, 1.0, 0.7).unwrap();
            let chain = LatticeGeometry::chain(nx * ny, 1.0).unwrap();
            let pol = Polarization::spherical(theta, phi);
            let hs = [
                build_power_law(&g, alpha).unwrap(),
                build_free_space(&g, k, &pol).unwrap(),
                build_waveguide(&chain, k).unwrap(),
            ];
            for h in &hs {
                let m = h.materialize().unwrap();
                for i in 0..m.rows() {
                    for j in 0..m.rows() {
                        prop_assert!((m.get(i, j) - m.get(j, i)).norm() <= 1e-12 * m.get(i, j).norm().max(1.0));
                    }
                }
            }
            let m = hs[0].materialize().unwrap();
            prop_assert!(m.as_slice().iter().all(|z| z.im == 0.0));
        }

        #[test]
        fn couplings_are_translation_invariant(n in 3usize..8, k in 0.1f64..4.0) {
            let g = LatticeGeometry::square(n).unwrap();
            let h = build_free_space(&g, k, &Polarization::spherical(0.3, 0.8)).unwrap();
            let a = h.entry(g.site_index(0, 0).unwrap(), g.site_index(1, 2).unwrap()).unwrap();
            let b = h.entry(g.site_index(n - 2, n - 3).unwrap(), g.site_index(n - 1, n - 1).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
