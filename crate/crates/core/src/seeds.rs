//! Exact solutions of constant-coefficient NLS equations
//!
//! ```text
//! i u_τ - l₀ u_ξξ + l₀ λ |u|^{2s} u = 0
//! ```
//!
//! used as inputs of the lens transforms, and the real profiles
//! `F'' = -ξ₀F + h₀F³` used by the soliton construction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{dopri5_until, NodeTable, OdeOptions};
use crate::special::jacobi_elliptic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    Bright,
    Dark,
    CnWave,
    SnWave,
    Peregrine,
    GroundState1d,
    GroundStateRadial,
    Pseudoconformal,
    CustomProfile,
}

impl SeedKind {
    pub const ALL: [SeedKind; 9] = [
        SeedKind::Bright,
        SeedKind::Dark,
        SeedKind::CnWave,
        SeedKind::SnWave,
        SeedKind::Peregrine,
        SeedKind::GroundState1d,
        SeedKind::GroundStateRadial,
        SeedKind::Pseudoconformal,
        SeedKind::CustomProfile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeedKind::Bright => "bright",
            SeedKind::Dark => "dark",
            SeedKind::CnWave => "cn_wave",
            SeedKind::SnWave => "sn_wave",
            SeedKind::Peregrine => "peregrine",
            SeedKind::GroundState1d => "ground_state_1d",
            SeedKind::GroundStateRadial => "ground_state_radial",
            SeedKind::Pseudoconformal => "pseudoconformal",
            SeedKind::CustomProfile => "custom_profile",
        }
    }
}

impl fmt::Display for SeedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SeedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SeedKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown seed kind '{s}'")))
    }
}

/// `(l₀, λ, s)` of the equation a seed solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEquation {
    pub l0: f64,
    pub lambda: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone)]
enum ProfileImpl {
    Cn { amp: f64, p: f64, k: f64 },
    Sn { amp: f64, p: f64, k: f64 },
    /// Solution of `F'' = -ξ₀F + h₀F³` on `z ≥ 0`, extended by parity.
    Line { table: NodeTable, odd: bool },
    /// Radial ground state with a C¹-matched exponential tail past `rho_m`.
    Radial {
        table: NodeTable,
        n: u8,
        rho_m: f64,
        q_m: f64,
        kappa: f64,
    },
    Sech1d { s: f64 },
}

/// Real profile: either a solution of `F'' = -ξ₀F + h₀F³` or a radial
/// ground state `Q'' + (n-1)Q'/ρ - Q + Q^p = 0`.
#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub xi0: f64,
    pub h0: f64,
    pub c0: f64,
    pub source: ProfileSource,
    imp: ProfileImpl,
}

impl ProfileSolution {
    pub fn eval(&self, z: f64) -> f64 {
        match &self.imp {
            ProfileImpl::Cn { amp, p, k } => amp * jacobi_elliptic(p * z, *k).map(|v| v.1).unwrap_or(f64::NAN),
            ProfileImpl::Sn { amp, p, k } => amp * jacobi_elliptic(p * z, *k).map(|v| v.0).unwrap_or(f64::NAN),
            ProfileImpl::Line { table, odd } => {
                let v = table.component(z.abs(), 0);
                if *odd && z < 0.0 {
                    -v
                } else {
                    v
                }
            }
            ProfileImpl::Radial {
                table,
                n,
                rho_m,
                q_m,
                kappa,
            } => {
                let r = z.abs();
                if r <= *rho_m {
                    table.component(r, 0)
                } else {
                    let geometric = if *n == 2 { (rho_m / r).sqrt() } else { 1.0 };
                    q_m * geometric * (-kappa * (r - rho_m)).exp()
                }
            }
            ProfileImpl::Sech1d { s } => (s + 1.0).powf(0.5 / s) * (s * z).cosh().powf(-1.0 / s),
        }
    }

    /// Value at the origin (the amplitude of a ground state).
    pub fn peak(&self) -> f64 {
        self.eval(0.0)
    }
}

/// Solution of `F'' = -ξ₀F + h₀F³` with first integral
/// `F'² = C₀ - ξ₀F² + h₀F⁴/2`.
///
/// Closed forms: the cn family for `h₀ < 0` and the sn family for
/// `h₀, ξ₀ > 0`, `0 < C₀ ≤ ξ₀²/(2h₀)`. Other regimes are integrated
/// numerically from a turning point.
pub fn elliptic_profile(xi0: f64, h0: f64, c0: f64) -> Result<ProfileSolution> {
    if !(xi0.is_finite() && h0.is_finite() && c0.is_finite()) {
        return Err(Error::InvalidParameter("non-finite profile constants".into()));
    }
    let make = |source, imp| ProfileSolution {
        xi0,
        h0,
        c0,
        source,
        imp,
    };
    let disc = xi0 * xi0 - 2.0 * c0 * h0;
    if h0 < 0.0 && disc >= 0.0 {
        let s = disc.sqrt();
        let amp2 = (-xi0 + s) / (-h0);
        let k2 = if s > 0.0 { (-xi0 + s) / (2.0 * s) } else { f64::NAN };
        if amp2 > 0.0 && (0.0..=1.0).contains(&k2) {
            return Ok(make(
                ProfileSource::ClosedForm,
                ProfileImpl::Cn {
                    amp: amp2.sqrt(),
                    p: s.sqrt(),
                    k: k2.sqrt(),
                },
            ));
        }
    }
    if h0 > 0.0 && xi0 > 0.0 && c0 > 0.0 && disc >= 0.0 {
        let amp2 = (xi0 - disc.sqrt()) / h0;
        let p2 = c0 / amp2;
        let k2 = (h0 * amp2 * amp2 / (2.0 * c0)).min(1.0);
        return Ok(make(
            ProfileSource::ClosedForm,
            ProfileImpl::Sn {
                amp: amp2.sqrt(),
                p: p2.sqrt(),
                k: k2.sqrt(),
            },
        ));
    }
    // Numeric fallback from a turning point.
    let (y0, odd) = if c0 > 0.0 {
        ([0.0, c0.sqrt()], true)
    } else {
        // Smallest positive F₀ with C₀ - ξ₀F₀² + h₀F₀⁴/2 = 0.
        let roots: Vec<f64> = if h0 == 0.0 {
            if xi0 != 0.0 { vec![c0 / xi0] } else { vec![] }
        } else if disc >= 0.0 {
            vec![(xi0 - disc.sqrt()) / h0, (xi0 + disc.sqrt()) / h0]
        } else {
            vec![]
        };
        let f2 = roots
            .into_iter()
            .filter(|r| *r > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !f2.is_finite() {
            return Err(Error::Domain(format!(
                "no bounded profile for xi0 = {xi0}, h0 = {h0}, C0 = {c0}"
            )));
        }
        ([f2.sqrt(), 0.0], false)
    };
    let rhs = move |_z: f64, y: &[f64], out: &mut [f64]| {
        out[0] = y[1];
        out[1] = -xi0 * y[0] + h0 * y[0].powi(3);
    };
    let span = 60.0;
    let opts = OdeOptions {
        rtol: 1e-13,
        atol: 1e-15,
        ..Default::default()
    };
    let table = NodeTable::build(rhs, 0.0, &y0, span, 0.01, &opts)
        .map_err(|e| Error::Domain(format!("profile integration failed: {e}")))?;
    let bound = (0..=600)
        .map(|i| table.component(i as f64 * 0.1, 0).abs())
        .fold(0.0, f64::max);
    if !bound.is_finite() || bound > 1e6 {
        return Err(Error::Domain(format!(
            "profile for xi0 = {xi0}, h0 = {h0}, C0 = {c0} is unbounded"
        )));
    }
    Ok(make(ProfileSource::Numeric, ProfileImpl::Line { table, odd }))
}

/// Positive radial solution of `Q'' + (n-1)Q'/ρ - Q + Q^p = 0`, `Q'(0) = 0`,
/// `Q(∞) = 0`, by shooting on `Q(0)` with bisection.
pub fn ground_state_radial(n: u8, p: f64, tol: f64) -> Result<ProfileSolution> {
    if n != 1 && n != 2 {
        return Err(Error::InvalidParameter(format!("dimension {n} not in {{1, 2}}")));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
    }
    let nf = n as f64;
    let rhs = move |r: f64, y: &[f64], out: &mut [f64]| {
        let q = y[0];
        let nl = q.abs().powf(p - 1.0) * q;
        out[0] = y[1];
        out[1] = if r < 1e-12 {
            (q - nl) / nf
        } else {
            q - nl - (nf - 1.0) * y[1] / r
        };
    };
    let opts = OdeOptions {
        rtol: 1e-13,
        atol: 1e-16,
        ..Default::default()
    };
    let rho_max = 40.0;
    // +1: overshoot (Q < 0), -1: undershoot (Q' > 0); returns where it happened.
    let shoot = |q0: f64| -> (i8, f64) {
        let sol = dopri5_until(rhs, 0.0, &[q0, 0.0], rho_max, &opts, |r, y| r > 1e-3 && (y[0] < 0.0 || y[1] > 0.0));
        let end = sol.y_end();
        let at = sol.t_end();
        if end[0] < 0.0 {
            (1, at)
        } else {
            (-1, at)
        }
    };
    let mut lo = 1.0 + 1e-9;
    let mut hi = 2.0;
    while shoot(hi).0 < 0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Bracket("ground state shooting: no overshoot found".into()));
        }
    }
    if shoot(lo).0 > 0 {
        return Err(Error::Bracket("ground state shooting: no undershoot found".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shoot(mid).0 > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let q0 = 0.5 * (lo + hi);
    if (hi - lo) > tol.max(4.0 * f64::EPSILON) * q0 {
        return Err(Error::Tolerance(format!("ground state bisection stalled at width {}", hi - lo)));
    }
    let fail = shoot(lo).1.min(shoot(hi).1);
    if fail < 15.0 {
        return Err(Error::Tolerance(format!(
            "ground state does not decay monotonically past rho = 15 (diverges at {fail:.2})"
        )));
    }
    let rho_m = (fail - 4.0).min(24.0);
    let table = NodeTable::build(rhs, 0.0, &[q0, 0.0], rho_m + 0.5, 0.01, &opts)?;
    let q_m = table.component(rho_m, 0);
    let dq_m = table.component(rho_m, 1);
    let mut kappa = -dq_m / q_m;
    if n == 2 {
        kappa -= 1.0 / (2.0 * rho_m);
    }
    Ok(ProfileSolution {
        xi0: -1.0,
        h0: -1.0,
        c0: 0.0,
        source: ProfileSource::Numeric,
        imp: ProfileImpl::Radial {
            table,
            n,
            rho_m,
            q_m,
            kappa,
        },
    })
}

#[derive(Debug, Clone)]
enum SeedImpl {
    Sech { amp: f64, k: f64, omega: f64 },
    Tanh { amp: f64, k: f64, omega: f64 },
    Profile { profile: ProfileSolution, amp: f64, k: f64, omega: f64 },
    Peregrine { a: f64, scale: f64, conj: bool },
    Pseudoconformal { q: ProfileSolution, scale: f64, conj: bool },
}

/// Closed-form (or profile-based) solution `u(τ, ξ[, η])` of a
/// constant-coefficient NLS.
#[derive(Debug, Clone)]
pub struct SeedSolution {
    pub kind: SeedKind,
    pub params: BTreeMap<String, f64>,
    pub target: TargetEquation,
    pub dimension: u8,
    imp: SeedImpl,
}

fn need(params: &BTreeMap<String, f64>, key: &str, kind: SeedKind) -> Result<f64> {
    params
        .get(key)
        .copied()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidParameter(format!("seed '{kind}' needs parameter '{key}'")))
}

fn sign_l0(params: &BTreeMap<String, f64>, kind: SeedKind) -> Result<f64> {
    let l0 = params.get("l0").copied().unwrap_or(-1.0);
    if l0 != 1.0 && l0 != -1.0 {
        return Err(Error::InvalidParameter(format!("seed '{kind}': l0 = {l0} must be +1 or -1")));
    }
    Ok(l0)
}

/// Builds a seed. Every kind accepts `l0` (default −1) and most accept
/// `lambda`; parameters not listed use the paper's normalisation.
///
/// * `bright`: `v`, `lambda < 0`. `u = A sech(kξ) e^{-ivτ}`, `k² = l₀v`, `A² = -2k²/λ`.
/// * `dark`: `A`, `lambda > 0`. `u = A tanh(kξ) e^{-iωτ}`, `k = A√(λ/2)`, `ω = -2l₀k²`.
/// * `cn_wave` / `sn_wave`: `xi0`, `h0`, `C0`. `u = F(ξ) e^{i l₀ ξ₀ τ}`, `λ = h₀`.
/// * `peregrine`: `A`, `lambda < 0` (default −2).
/// * `ground_state_1d`: `s`, `lambda < 0` (default −1). `u = A R(ξ) e^{-i l₀ τ}`.
/// * `ground_state_radial`: `p` (default 3), `lambda < 0` (default −1), 2D.
/// * `pseudoconformal`: `lambda < 0` (default −1), 2D cubic.
pub fn build_seed(kind: SeedKind, params: &BTreeMap<String, f64>) -> Result<SeedSolution> {
    let l0 = sign_l0(params, kind)?;
    let lam = |default: Option<f64>| -> Result<f64> {
        match (params.get("lambda").copied(), default) {
            (Some(v), _) => Ok(v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::InvalidParameter(format!("seed '{kind}' needs parameter 'lambda'"))),
        }
    };
    let inconsistent = |msg: String| Error::InvalidParameter(format!("seed '{kind}': {msg}"));
    let (imp, target, dimension) = match kind {
        SeedKind::Bright => {
            let v = need(params, "v", kind)?;
            let lambda = lam(Some(-2.0))?;
            if l0 * v <= 0.0 {
                return Err(inconsistent(format!("l0*v = {} must be positive", l0 * v)));
            }
            if lambda >= 0.0 {
                return Err(inconsistent(format!("lambda = {lambda} must be negative")));
            }
            let k2 = l0 * v;
            (
                SeedImpl::Sech {
                    amp: (-2.0 * k2 / lambda).sqrt(),
                    k: k2.sqrt(),
                    omega: v,
                },
                TargetEquation { l0, lambda, s: 1.0 },
                1,
            )
        }
        SeedKind::Dark => {
            let a = need(params, "A", kind)?;
            let lambda = lam(Some(2.0))?;
            if lambda <= 0.0 {
                return Err(inconsistent(format!("lambda = {lambda} must be positive")));
            }
            let k = a.abs() * (lambda / 2.0).sqrt();
            (
                SeedImpl::Tanh {
                    amp: a,
                    k,
                    omega: -2.0 * l0 * k * k,
                },
                TargetEquation { l0, lambda, s: 1.0 },
                1,
            )
        }
        SeedKind::CnWave | SeedKind::SnWave => {
            let xi0 = need(params, "xi0", kind)?;
            let h0 = need(params, "h0", kind)?;
            let c0 = params.get("C0").copied().unwrap_or(0.0);
            let profile = elliptic_profile(xi0, h0, c0)?;
            let closed_kind_ok = match (&profile.imp, kind) {
                (ProfileImpl::Cn { .. }, SeedKind::CnWave) | (ProfileImpl::Sn { .. }, SeedKind::SnWave) => true,
                (ProfileImpl::Line { .. }, _) => true,
                _ => false,
            };
            if !closed_kind_ok {
                return Err(inconsistent(format!(
                    "constants (xi0 = {xi0}, h0 = {h0}, C0 = {c0}) select the other elliptic family"
                )));
            }
            (
                SeedImpl::Profile {
                    profile,
                    amp: 1.0,
                    k: 1.0,
                    omega: l0 * xi0,
                },
                TargetEquation { l0, lambda: h0, s: 1.0 },
                1,
            )
        }
        SeedKind::Peregrine => {
            let a = need(params, "A", kind)?;
            let lambda = lam(Some(-2.0))?;
            if lambda >= 0.0 {
                return Err(inconsistent(format!("lambda = {lambda} must be negative")));
            }
            (
                SeedImpl::Peregrine {
                    a,
                    scale: (-2.0 / lambda).sqrt(),
                    conj: l0 > 0.0,
                },
                TargetEquation { l0, lambda, s: 1.0 },
                1,
            )
        }
        SeedKind::GroundState1d => {
            let s = need(params, "s", kind)?;
            let lambda = lam(Some(-1.0))?;
            if s <= 0.0 || lambda >= 0.0 {
                return Err(inconsistent(format!("need s > 0 and lambda < 0 (s = {s}, lambda = {lambda})")));
            }
            (
                SeedImpl::Profile {
                    profile: ProfileSolution {
                        xi0: -1.0,
                        h0: -1.0,
                        c0: 0.0,
                        source: ProfileSource::ClosedForm,
                        imp: ProfileImpl::Sech1d { s },
                    },
                    amp: (-1.0 / lambda).powf(0.5 / s),
                    k: 1.0,
                    omega: -l0,
                },
                TargetEquation { l0, lambda, s },
                1,
            )
        }
        SeedKind::GroundStateRadial => {
            let p = params.get("p").copied().unwrap_or(3.0);
            let lambda = lam(Some(-1.0))?;
            if lambda >= 0.0 {
                return Err(inconsistent(format!("lambda = {lambda} must be negative")));
            }
            let s = (p - 1.0) / 2.0;
            (
                SeedImpl::Profile {
                    profile: ground_state_radial(2, p, 1e-12)?,
                    amp: (-1.0 / lambda).powf(0.5 / s),
                    k: 1.0,
                    omega: -l0,
                },
                TargetEquation { l0, lambda, s },
                2,
            )
        }
        SeedKind::Pseudoconformal => {
            let lambda = lam(Some(-1.0))?;
            if lambda >= 0.0 {
                return Err(inconsistent(format!("lambda = {lambda} must be negative")));
            }
            (
                SeedImpl::Pseudoconformal {
                    q: ground_state_radial(2, 3.0, 1e-12)?,
                    scale: (-1.0 / lambda).sqrt(),
                    conj: l0 > 0.0,
                },
                TargetEquation { l0, lambda, s: 1.0 },
                2,
            )
        }
        SeedKind::CustomProfile => {
            return Err(inconsistent("use SeedSolution::from_profile".into()));
        }
    };
    Ok(SeedSolution {
        kind,
        params: params.clone(),
        target,
        dimension,
        imp,
    })
}

impl SeedSolution {
    /// `u = F(ξ) e^{i l₀ ξ₀ τ}` for a profile of `F'' = -ξ₀F + h₀F³`.
    pub fn from_profile(profile: ProfileSolution, l0: f64) -> Result<Self> {
        if l0 != 1.0 && l0 != -1.0 {
            return Err(Error::InvalidParameter(format!("l0 = {l0} must be +1 or -1")));
        }
        let mut params = BTreeMap::new();
        params.insert("xi0".into(), profile.xi0);
        params.insert("h0".into(), profile.h0);
        params.insert("C0".into(), profile.c0);
        params.insert("l0".into(), l0);
        Ok(SeedSolution {
            kind: SeedKind::CustomProfile,
            target: TargetEquation {
                l0,
                lambda: profile.h0,
                s: 1.0,
            },
            dimension: 1,
            imp: SeedImpl::Profile {
                omega: l0 * profile.xi0,
                profile,
                amp: 1.0,
                k: 1.0,
            },
            params,
        })
    }

    pub fn eval(&self, tau: f64, xi: f64) -> Complex64 {
        match &self.imp {
            SeedImpl::Sech { amp, k, omega } => Complex64::from_polar(amp / (k * xi).cosh(), -omega * tau),
            SeedImpl::Tanh { amp, k, omega } => Complex64::from_polar(1.0, -omega * tau) * (amp * (k * xi).tanh()),
            SeedImpl::Profile { profile, amp, k, omega } => {
                Complex64::from_polar(1.0, omega * tau) * (amp * profile.eval(k * xi))
            }
            SeedImpl::Peregrine { a, scale, conj } => {
                let u = peregrine(*a, tau, xi) * *scale;
                if *conj {
                    u.conj()
                } else {
                    u
                }
            }
            SeedImpl::Pseudoconformal { .. } => self.eval2(tau, xi, 0.0),
        }
    }

    /// Two-dimensional evaluation; 1D seeds ignore `eta`.
    pub fn eval2(&self, tau: f64, xi: f64, eta: f64) -> Complex64 {
        let rho = xi.hypot(eta);
        match &self.imp {
            SeedImpl::Profile { profile, amp, k, omega } if self.dimension == 2 => {
                Complex64::from_polar(1.0, omega * tau) * (amp * profile.eval(k * rho))
            }
            SeedImpl::Pseudoconformal { q, scale, conj } => {
                if tau == 0.0 {
                    return Complex64::new(f64::INFINITY, 0.0);
                }
                let phase = rho * rho / (4.0 * tau) - 1.0 / tau;
                let u = Complex64::from_polar(scale * q.eval(rho / tau) / tau, phase);
                if *conj {
                    u.conj()
                } else {
                    u
                }
            }
            _ => self.eval(tau, xi),
        }
    }

    pub fn profile(&self) -> Option<&ProfileSolution> {
        match &self.imp {
            SeedImpl::Profile { profile, .. } => Some(profile),
            SeedImpl::Pseudoconformal { q, .. } => Some(q),
            _ => None,
        }
    }
}

/// Solution of `iu_t + u_xx + 2|u|²u = 0` with `u(0, 0) = 3A`.
fn peregrine(a: f64, t: f64, x: f64) -> Complex64 {
    let a2 = a * a;
    let num = Complex64::new(3.0 - 16.0 * a2 * a2 * t * t - 4.0 * a2 * x * x, 16.0 * a2 * t);
    let den = 1.0 + 16.0 * a2 * a2 * t * t + 4.0 * a2 * x * x;
    Complex64::from_polar(a, 2.0 * a2 * t) * num / den
}
