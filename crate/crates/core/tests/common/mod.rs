//! Oracles shared by integration tests.

use num_complex::Complex64;

/// `Li_3(e^{ik})` summed directly up to `n0 - 1`, with the tail Euler-transformed.
/// The forward differences of `1/(n0+m)^3` come from
/// `(1/2) int t^2 e^{-n0 t} (e^{-t} - 1)^j dt`, which avoids cancellation.
pub struct Li3Oracle {
    n0: usize,
    diffs: Vec<f64>,
}

impl Li3Oracle {
    pub fn new(n0: usize, terms: usize) -> Self {
        let nf = n0 as f64;
        let diffs = (0..terms)
            .map(|j| {
                // u = n0 t; composite Simpson on [0, U].
                let upper = 90.0 + 4.0 * j as f64;
                let m = 6000;
                let h = upper / m as f64;
                let f = |u: f64| u * u * (-u).exp() * (-u / nf).exp_m1().powi(j as i32);
                let mut s = f(0.0) + f(upper);
                for i in 1..m {
                    s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
                }
                s * h / 3.0 / (2.0 * nf.powi(3))
            })
            .collect();
        Self { n0, diffs }
    }

    pub fn value(&self, k: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, k);
        let mut head = Complex64::new(0.0, 0.0);
        for n in (1..self.n0).rev() {
            head += Complex64::from_polar(1.0, k * n as f64) / (n as f64).powi(3);
        }
        let one_minus = Complex64::new(1.0, 0.0) - z;
        let w = z / one_minus;
        let mut tail = Complex64::new(0.0, 0.0);
        let mut wp = Complex64::new(1.0, 0.0) / one_minus;
        for d in &self.diffs {
            tail += wp * d;
            wp *= w;
        }
        head + tail * z.powu(self.n0 as u32)
    }
}
