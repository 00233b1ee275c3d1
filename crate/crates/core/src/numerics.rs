//! Scalar numerical kernels: root bracketing, quadrature, finite-difference
//! stencils.

use crate::error::{Error, Result};

/// Brent's method on a bracketing interval `[a, b]` with `f(a)·f(b) <= 0`.
pub fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket(format!("no sign change on [{a}, {b}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::Tolerance("Brent iteration limit".into()))
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let f = &f as &dyn Fn(f64) -> f64;
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    let mut err_total = 0.0;
    let len = (b - a).abs();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(f, lo, hi);
        if !v.is_finite() {
            return Err(Error::Singular(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        let share = tol * (hi - lo).abs() / len;
        if e <= share.max(1e-15 * v.abs()) || depth >= 40 {
            total += v;
            err_total += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    if err_total > 10.0 * tol.max(1e-14 * total.abs()) {
        return Err(Error::Tolerance(format!(
            "quadrature error estimate {err_total:.2e} exceeds {tol:.2e}"
        )));
    }
    Ok(total)
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// 8th-order central first-derivative weights for offsets 1..=4.
pub const D1_8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
/// 8th-order central second-derivative weights: center, then offsets 1..=4.
pub const D2_8: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

/// 8th-order central first derivative of a (possibly complex) sampled function.
pub fn fd8_first<T>(f: impl Fn(f64) -> T, x: f64, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let mut acc = (f(x + h) - f(x - h)) * D1_8[0];
    for (k, w) in D1_8.iter().enumerate().skip(1) {
        let o = (k + 1) as f64 * h;
        acc = acc + (f(x + o) - f(x - o)) * *w;
    }
    acc * (1.0 / h)
}

/// 8th-order central second derivative.
pub fn fd8_second<T>(f: impl Fn(f64) -> T, x: f64, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let mut acc = f(x) * D2_8[0];
    for (k, w) in D2_8.iter().enumerate().skip(1) {
        let o = k as f64 * h;
        acc = acc + (f(x + o) + f(x - o)) * *w;
    }
    acc * (1.0 / (h * h))
}

/// Locates the first sign change of `f` on `[a, b]` scanning `n` panels and
/// refines it by Brent. Returns `None` without a sign change.
pub fn first_root(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize, xtol: f64) -> Result<Option<(f64, f64, f64)>> {
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=n {
        let x1 = a + (b - a) * i as f64 / n as f64;
        let f1 = f(x1);
        if f0 == 0.0 && i > 1 {
            return Ok(Some((x0, x0, x0)));
        }
        if f0 != 0.0 && f1.signum() != f0.signum() {
            let r = brent(&f, x0, x1, xtol)?;
            return Ok(Some((r, x0, x1)));
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cosine_root() {
        let r = brent(f64::cos, 0.0, 3.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn kronrod_integrates_gaussian() {
        let v = integrate(|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-13).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        let w = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((w - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn stencils_are_eighth_order() {
        let e1 = |h: f64| (fd8_first(f64::sin, 0.3, h) - 0.3f64.cos()).abs();
        assert!(e1(0.2) / e1(0.1) > 200.0);
        let s: f64 = D2_8[0] + 2.0 * D2_8[1..].iter().sum::<f64>();
        assert!(s.abs() < 1e-14);
    }
}
