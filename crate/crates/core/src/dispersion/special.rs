//! Special functions: the Faddeeva function, erfi, and polylogarithms on
//! the unit circle.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const ZETA3: f64 = 1.202_056_903_159_594_3;

/// Number of terms in Weideman's rational approximation.
const WEIDEMAN_N: usize = 48;

struct Weideman {
    l: f64,
    /// Polynomial coefficients, highest degree first.
    coeffs: Vec<f64>,
}

fn weideman() -> &'static Weideman {
    static TABLE: OnceLock<Weideman> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = WEIDEMAN_N;
        let m = 2 * n;
        let m2 = 2 * m;
        let l = (n as f64 / 2f64.sqrt()).sqrt();
        // f sampled at t = L tan(theta/2), theta = k pi / M for k = -M+1..M-1,
        // with a leading zero for the theta = -pi node.
        let mut f = Vec::with_capacity(m2);
        f.push(0.0);
        for k in (-(m as isize) + 1)..(m as isize) {
            let t = l * (k as f64 * PI / m as f64 / 2.0).tan();
            f.push((-t * t).exp() * (l * l + t * t));
        }
        // fftshift, then FFT.
        let mut buf: Vec<Complex64> = (0..m2).map(|i| Complex64::new(f[(i + m2 / 2) % m2], 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m2).process(&mut buf);
        let mut coeffs: Vec<f64> = buf[1..=n].iter().map(|z| z.re / m2 as f64).collect();
        coeffs.reverse();
        Weideman { l, coeffs }
    })
}

/// Faddeeva function `w(z) = exp(-z^2) erfc(-iz)`.
pub fn faddeeva(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        // w(z) = 2 exp(-z^2) - w(-z)
        return 2.0 * (-z * z).exp() - faddeeva_upper(-z);
    }
    faddeeva_upper(z)
}

fn faddeeva_upper(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        return faddeeva_taylor(z);
    }
    let w = weideman();
    let iz = Complex64::i() * z;
    let denom = w.l - iz;
    let big_z = (w.l + iz) / denom;
    let p = w.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * big_z + c);
    2.0 * p / (denom * denom) + (1.0 / SQRT_PI) / denom
}

/// `w(z) = sum (iz)^n / Gamma(n/2 + 1)`, used near the origin.
pub(crate) fn faddeeva_taylor(z: Complex64) -> Complex64 {
    let iz = Complex64::i() * z;
    // Gamma(n/2 + 1) for even and odd n via separate recurrences.
    let mut sum = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    let mut gamma_even = 1.0; // Gamma(1)
    let mut gamma_odd = SQRT_PI / 2.0; // Gamma(3/2)
    for n in 0..80 {
        let g = if n % 2 == 0 {
            if n > 0 {
                gamma_even *= n as f64 / 2.0;
            }
            gamma_even
        } else {
            if n > 1 {
                gamma_odd *= n as f64 / 2.0;
            }
            gamma_odd
        };
        let term = pow / g;
        sum += term;
        if term.norm() < 1e-17 * sum.norm() && n > 4 {
            break;
        }
        pow *= iz;
    }
    sum
}

/// Imaginary error function `erfi(z) = -i erf(iz)`.
pub fn erfi(z: Complex64) -> Complex64 {
    if z.norm() < 1.0 {
        // 2/sqrt(pi) sum z^(2n+1) / (n! (2n+1))
        let z2 = z * z;
        let mut term = z;
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 0..60 {
            let t = term / (2 * n + 1) as f64;
            sum += t;
            if t.norm() < 1e-17 * sum.norm() {
                break;
            }
            term = term * z2 / (n + 1) as f64;
        }
        return sum * (2.0 / SQRT_PI);
    }
    // -i + erfi(z) = -i exp(z^2) w(z)
    Complex64::i() * (1.0 - (z * z).exp() * faddeeva(z))
}

/// `-i + erfi(z)` scaled by `exp(-z^2)`, i.e. `-i w(z)`; stable for all z.
pub fn scaled_erfi_minus_i(z: Complex64) -> Complex64 {
    -Complex64::i() * faddeeva(z)
}

/// Even-index zeta values `zeta(2n)` for n = 1..=count.
fn zeta_even(count: usize) -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        (1..=40)
            .map(|n| {
                let s = 2.0 * n as f64;
                if n == 1 {
                    return PI * PI / 6.0;
                }
                // Direct sum plus Euler-Maclaurin tail.
                let k_max = 64usize;
                let mut sum = 0.0;
                for k in (1..=k_max).rev() {
                    sum += (k as f64).powf(-s);
                }
                let kk = k_max as f64;
                sum + kk.powf(1.0 - s) / (s - 1.0) - 0.5 * kk.powf(-s) + s / 12.0 * kk.powf(-s - 1.0)
            })
            .collect()
    });
    &t[..count]
}

/// Coefficients `c_n = |B_2n| / (2n (2n+1)!)` of the Clausen expansion.
fn clausen_coeffs() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // |B_2n| = 2 (2n)! zeta(2n) / (2 pi)^(2n)
        zeta_even(40)
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let n = (i + 1) as f64;
                2.0 * z / ((2.0 * PI).powf(2.0 * n) * 2.0 * n * (2.0 * n + 1.0))
            })
            .collect()
    })
}

/// Reduces an angle to `[-pi, pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Reduces an angle to `[0, 2 pi)`.
fn wrap_positive(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

/// Clausen function `Cl_2(theta) = sum sin(n theta) / n^2`.
pub fn clausen2(theta: f64) -> f64 {
    let t = wrap_angle(theta);
    if t == 0.0 {
        return 0.0;
    }
    let a = t.abs();
    let a2 = a * a;
    let mut pow = a * a2;
    let mut sum = a - a * a.ln();
    for c in clausen_coeffs() {
        let term = c * pow;
        sum += term;
        if term < 1e-18 * sum.abs() {
            break;
        }
        pow *= a2;
    }
    t.signum() * sum
}

/// `Cl_3(theta) = sum cos(n theta) / n^3`.
pub fn clausen3(theta: f64) -> f64 {
    let a = wrap_angle(theta).abs();
    if a == 0.0 {
        return ZETA3;
    }
    let a2 = a * a;
    let mut pow = a2 * a2;
    let mut sum = 0.75 * a2 - 0.5 * a2 * a.ln();
    for (i, c) in clausen_coeffs().iter().enumerate() {
        let term = c * pow / (2.0 * (i + 1) as f64 + 2.0);
        sum += term;
        if term < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
        pow *= a2;
    }
    ZETA3 - sum
}

/// `Re Li_1(e^{i theta}) = -ln|2 sin(theta/2)|`.
pub fn re_li1(theta: f64) -> f64 {
    -(2.0 * (theta / 2.0).sin()).abs().ln()
}

/// `Im Li_1(e^{i theta}) = (pi - theta)/2` on `(0, 2 pi)`.
pub fn im_li1(theta: f64) -> f64 {
    let t = wrap_positive(theta);
    if t == 0.0 {
        0.0
    } else {
        (PI - t) / 2.0
    }
}

/// `Re Li_2(e^{i theta}) = pi^2/6 - pi theta/2 + theta^2/4` on `[0, 2 pi]`.
pub fn re_li2(theta: f64) -> f64 {
    let t = wrap_positive(theta);
    PI * PI / 6.0 - PI * t / 2.0 + t * t / 4.0
}

/// `Im Li_3(e^{i theta}) = pi^2 theta/6 - pi theta^2/4 + theta^3/12` on `[0, 2 pi]`.
pub fn im_li3(theta: f64) -> f64 {
    let t = wrap_positive(theta);
    PI * PI * t / 6.0 - PI * t * t / 4.0 + t * t * t / 12.0
}

/// `Li_s(e^{i theta})` for s = 1, 2, 3.
pub fn polylog_unit(s: u32, theta: f64) -> Complex64 {
    match s {
        1 => Complex64::new(re_li1(theta), im_li1(theta)),
        2 => Complex64::new(re_li2(theta), clausen2(theta)),
        3 => Complex64::new(clausen3(theta), im_li3(theta)),
        _ => panic!("polylog_unit supports s = 1, 2, 3"),
    }
}

pub const fn zeta3() -> f64 {
    ZETA3
}
