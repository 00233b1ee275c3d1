//! Jacobi elliptic functions and the Dawson integral.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::ode::{NodeTable, OdeOptions};

/// Complete elliptic integral of the first kind `K(k)` by the AGM.
pub fn complete_k(k: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::Domain(format!("elliptic modulus k = {k} outside [0, 1]")));
    }
    if k == 1.0 {
        return Ok(f64::INFINITY);
    }
    let (mut a, mut b) = (1.0f64, (1.0 - k * k).sqrt());
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(PI / (2.0 * a))
}

/// `(sn, cn, dn)(u, k)` by descending Landen transformation.
pub fn jacobi_elliptic(u: f64, k: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=1.0).contains(&k) || !u.is_finite() {
        return Err(Error::Domain(format!("jacobi_elliptic(u = {u}, k = {k})")));
    }
    let m = k * k;
    if m == 0.0 {
        return Ok((u.sin(), u.cos(), 1.0));
    }
    if 1.0 - m < 1e-16 {
        let c = 1.0 / u.cosh();
        return Ok((u.tanh(), c, c));
    }
    // Reduce to one period; sn and cn have period 4K.
    let quarter = complete_k(k)?;
    let u = u - 4.0 * quarter * (u / (4.0 * quarter)).round();
    let mut a = vec![1.0f64];
    let mut c = vec![k];
    let mut b = (1.0 - m).sqrt();
    while c.last().unwrap().abs() > 1e-16 && a.len() < 40 {
        let an = 0.5 * (a.last().unwrap() + b);
        let cn = 0.5 * (a.last().unwrap() - b);
        b = (a.last().unwrap() * b).sqrt();
        a.push(an);
        c.push(cn);
    }
    let n = a.len() - 1;
    let mut phi = 2f64.powi(n as i32) * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    let dn = (1.0 - m * sn * sn).sqrt();
    Ok((sn, cn, dn))
}

const DAWSON_SPAN: f64 = 12.0;

fn dawson_table() -> &'static NodeTable {
    static TABLE: OnceLock<NodeTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let opts = OdeOptions {
            rtol: 1e-14,
            atol: 1e-16,
            ..Default::default()
        };
        NodeTable::build(
            |t, y, out| out[0] = 1.0 - 2.0 * t * y[0],
            0.0,
            &[0.0],
            DAWSON_SPAN,
            0.01,
            &opts,
        )
        .expect("Dawson ODE integrates on a bounded interval")
    })
}

/// Dawson's integral `D(t) = e^{-t²} ∫₀ᵗ e^{z²} dz`, from `D' = 1 - 2tD`.
pub fn dawson(t: f64) -> f64 {
    let x = t.abs();
    let v = if x <= DAWSON_SPAN {
        dawson_table().component(x, 0)
    } else {
        // Asymptotic series 1/(2x) Σ (2k-1)!! / (2x²)^k.
        let y = 1.0 / (2.0 * x * x);
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..80 {
            let next = term * (2 * k - 1) as f64 * y;
            if next >= term || next < 1e-18 {
                break;
            }
            term = next;
            sum += term;
        }
        sum / (2.0 * x)
    };
    v.copysign(t)
}
