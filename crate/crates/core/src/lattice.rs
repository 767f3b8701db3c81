//! Finite Bravais lattices in one and two dimensions.
//!
//! Sites are indexed row-major (`iy * n_x + ix`) and coordinates are
//! measured from the geometric center of the array, in units of the
//! lattice constant `a = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite chain or rectangular array with open boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometrySpec", into = "GeometrySpec")]
pub struct LatticeGeometry {
    dimension: usize,
    counts: [usize; 2],
    spacings: [f64; 2],
    origin_site: usize,
}

/// Serialized form; `origin_site` is derived on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySpec {
    dimension: usize,
    counts: [usize; 2],
    spacings: [f64; 2],
}

impl TryFrom<GeometrySpec> for LatticeGeometry {
    type Error = Error;

    fn try_from(spec: GeometrySpec) -> Result<Self> {
        Self::new(spec.dimension, spec.counts, spec.spacings)
    }
}

impl From<LatticeGeometry> for GeometrySpec {
    fn from(g: LatticeGeometry) -> Self {
        GeometrySpec {
            dimension: g.dimension,
            counts: g.counts,
            spacings: g.spacings,
        }
    }
}

impl LatticeGeometry {
    pub fn new(dimension: usize, counts: [usize; 2], spacings: [f64; 2]) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return Err(Error::Geometry(format!("dimension must be 1 or 2, got {dimension}")));
        }
        if counts[0] == 0 || counts[1] == 0 {
            return Err(Error::Geometry(format!("site counts must be >= 1, got {counts:?}")));
        }
        if dimension == 1 && counts[1] != 1 {
            return Err(Error::Geometry("1D geometry requires n_y = 1".into()));
        }
        for a in spacings {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Geometry(format!("spacings must be positive, got {spacings:?}")));
            }
        }
        let origin_site = (counts[1] / 2) * counts[0] + counts[0] / 2;
        Ok(Self {
            dimension,
            counts,
            spacings,
            origin_site,
        })
    }

    /// A chain of `n` sites along x with spacing `a`.
    pub fn chain(n: usize, a: f64) -> Result<Self> {
        Self::new(1, [n, 1], [a, 1.0])
    }

    /// A square `n x n` array with unit spacing.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(2, [n, n], [1.0, 1.0])
    }

    pub fn rectangular(nx: usize, ny: usize, ax: f64, ay: f64) -> Result<Self> {
        Self::new(2, [nx, ny], [ax, ay])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }

    pub fn spacings(&self) -> [f64; 2] {
        self.spacings
    }

    pub fn n_sites(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn origin_site(&self) -> usize {
        self.origin_site
    }

    /// Grid indices `(ix, iy)` of a site.
    pub fn grid_index(&self, site: usize) -> Result<(usize, usize)> {
        self.check(site)?;
        Ok((site % self.counts[0], site / self.counts[0]))
    }

    pub fn site_index(&self, ix: usize, iy: usize) -> Result<usize> {
        if ix >= self.counts[0] || iy >= self.counts[1] {
            return Err(Error::Geometry(format!(
                "grid index ({ix}, {iy}) outside {}x{} array",
                self.counts[0], self.counts[1]
            )));
        }
        Ok(iy * self.counts[0] + ix)
    }

    /// Cartesian position of `site` relative to the array center.
    pub fn position(&self, site: usize) -> Result<[f64; 2]> {
        let (ix, iy) = self.grid_index(site)?;
        Ok(self.coordinate(ix, iy))
    }

    /// Coordinates of grid node `(ix, iy)`; no bounds check.
    pub(crate) fn coordinate(&self, ix: usize, iy: usize) -> [f64; 2] {
        let cx = (self.counts[0] as f64 - 1.0) / 2.0;
        let cy = (self.counts[1] as f64 - 1.0) / 2.0;
        [
            (ix as f64 - cx) * self.spacings[0],
            (iy as f64 - cy) * self.spacings[1],
        ]
    }

    /// `position(i) - position(j)`.
    pub fn displacement(&self, i: usize, j: usize) -> Result<[f64; 2]> {
        let pi = self.position(i)?;
        let pj = self.position(j)?;
        Ok([pi[0] - pj[0], pi[1] - pj[1]])
    }

    fn check(&self, site: usize) -> Result<()> {
        if site >= self.n_sites() {
            return Err(Error::SiteOutOfRange {
                index: site,
                len: self.n_sites(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chain_of_three_is_centered() {
        let g = LatticeGeometry::chain(3, 1.0).unwrap();
        assert_eq!(g.position(0).unwrap(), [-1.0, 0.0]);
        assert_eq!(g.origin_site(), 1);
        assert_eq!(g.position(1).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn square_corner() {
        let g = LatticeGeometry::square(3).unwrap();
        let s = g.site_index(2, 2).unwrap();
        assert_eq!(s, 8);
        assert_eq!(g.position(s).unwrap(), [1.0, 1.0]);
        assert_eq!(g.origin_site(), 4);
    }

    #[test]
    fn long_chain_origin() {
        let g = LatticeGeometry::chain(751, 1.0).unwrap();
        assert_eq!(g.origin_site(), 375);
        assert_eq!(g.position(375).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn out_of_range_site() {
        let g = LatticeGeometry::chain(5, 1.0).unwrap();
        assert!(matches!(g.position(5), Err(Error::SiteOutOfRange { index: 5, len: 5 })));
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(LatticeGeometry::new(3, [2, 2], [1.0, 1.0]).is_err());
        assert!(LatticeGeometry::new(1, [4, 2], [1.0, 1.0]).is_err());
        assert!(LatticeGeometry::rectangular(3, 3, 0.0, 1.0).is_err());
        assert!(LatticeGeometry::chain(0, 1.0).is_err());
    }

    #[test]
    fn serde_round_trip_rederives_origin() {
        let g = LatticeGeometry::rectangular(5, 7, 0.4, 0.8).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert!(!s.contains("origin"));
        let back: LatticeGeometry = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
        assert!(serde_json::from_str::<LatticeGeometry>(
            r#"{"dimension":1,"counts":[3,1],"spacings":[1,1],"extra":0}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn displacement_is_antisymmetric(
            nx in 1usize..12, ny in 1usize..12,
            ax in 0.1f64..3.0, ay in 0.1f64..3.0,
            a in 0usize..144, b in 0usize..144,
        ) {
            let g = LatticeGeometry::rectangular(nx, ny, ax, ay).unwrap();
            let n = g.n_sites();
            let (i, j) = (a % n, b % n);
            let dij = g.displacement(i, j).unwrap();
            let dji = g.displacement(j, i).unwrap();
            prop_assert_eq!(dij[0], -dji[0]);
            prop_assert_eq!(dij[1], -dji[1]);
        }

        #[test]
        fn odd_arrays_have_origin_at_zero(hx in 0usize..20, hy in 0usize..20) {
            let g = LatticeGeometry::rectangular(2 * hx + 1, 2 * hy + 1, 1.3, 0.7).unwrap();
            prop_assert_eq!(g.position(g.origin_site()).unwrap(), [0.0, 0.0]);
        }
    }
}
