//! Time-dependent coefficients of the variable-coefficient NLS
//!
//! ```text
//! i ψ_t = -a ψ_xx + (b x² - f x + G) ψ - i c x ψ_x - i d ψ + i g ψ_x + h |ψ|^{2s} ψ
//! ```
//!
//! In two dimensions the Laplacian, the trap `b|x|²`, the drift and the
//! translations act on both axes, the gain enters as `-2 i d ψ` and the linear
//! forcing is `-(f x + f₂ y)ψ`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};

/// A shareable real function of time.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function of time, either parsed from the expression language or
/// supplied as a closure (used for balanced coefficients built from numeric
/// phase functions).
#[derive(Clone)]
pub enum TimeFunction {
    Expr {
        expr: Expr,
        d1: Expr,
        d2: Expr,
    },
    Custom {
        f: TimeFn,
        label: String,
    },
}

impl fmt::Debug for TimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeFunction({})", self.render())
    }
}

/// Parses a coefficient expression and prepares its analytic derivatives.
pub fn parse_time_expression(source: &str) -> Result<TimeFunction> {
    Ok(TimeFunction::from_expr(expr::parse(source)?))
}

impl TimeFunction {
    pub fn from_expr(expr: Expr) -> Self {
        let d1 = expr.derivative();
        let d2 = d1.derivative();
        TimeFunction::Expr { expr, d1, d2 }
    }

    pub fn constant(v: f64) -> Self {
        Self::from_expr(Expr::Num(v))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TimeFunction::Custom {
            f: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeFunction::Expr { expr, .. } => expr.eval(t),
            TimeFunction::Custom { f, .. } => f(t),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self {
            TimeFunction::Expr { d1, .. } => d1.eval(t),
            TimeFunction::Custom { f, .. } => fd_first(&**f, t),
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match self {
            TimeFunction::Expr { d2, .. } => d2.eval(t),
            TimeFunction::Custom { f, .. } => fd_second(&**f, t),
        }
    }

    /// True only for a literal zero expression.
    pub fn is_zero(&self) -> bool {
        matches!(self, TimeFunction::Expr { expr: Expr::Num(v), .. } if *v == 0.0)
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            TimeFunction::Expr { expr, .. } if expr.is_constant() => Some(expr.eval(0.0)),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        match self {
            TimeFunction::Expr { expr, .. } => expr.to_string(),
            TimeFunction::Custom { label, .. } => format!("<{label}>"),
        }
    }

    pub fn as_fn(&self) -> TimeFn {
        let me = self.clone();
        Arc::new(move |t| me.eval(t))
    }
}

fn fd_step(t: f64) -> f64 {
    1e-3 * t.abs().max(1.0)
}

// Sixth-order central differences; custom functions are smooth numeric
// phase combinations, for which this is accurate to roughly 1e-11.
fn fd_first(f: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let h = fd_step(t);
    let d = |k: f64| f(t + k * h) - f(t - k * h);
    (45.0 * d(1.0) - 9.0 * d(2.0) + d(3.0)) / (60.0 * h)
}

fn fd_second(f: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let h = fd_step(t);
    let s = |k: f64| f(t + k * h) + f(t - k * h);
    (2.0 * s(3.0) - 27.0 * s(2.0) + 270.0 * s(1.0) - 490.0 * f(t)) / (180.0 * h * h)
}

/// Coefficients of the normal form above.
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    pub a: TimeFunction,
    pub b: TimeFunction,
    pub c: TimeFunction,
    pub d: TimeFunction,
    pub f: TimeFunction,
    pub g: TimeFunction,
    pub h: TimeFunction,
    pub big_g: TimeFunction,
    /// Second-axis forcing and translation for the 2D equation.
    pub f2: TimeFunction,
    pub g2: TimeFunction,
    pub s: f64,
    pub l0: f64,
    pub dimension: u8,
}

impl CoefficientSet {
    /// Free Schrödinger equation `i ψ_t = -a ψ_xx` with cubic nonlinearity off.
    pub fn free(a: f64) -> Self {
        CoefficientSet {
            a: TimeFunction::constant(a),
            b: TimeFunction::zero(),
            c: TimeFunction::zero(),
            d: TimeFunction::zero(),
            f: TimeFunction::zero(),
            g: TimeFunction::zero(),
            h: TimeFunction::zero(),
            big_g: TimeFunction::zero(),
            f2: TimeFunction::zero(),
            g2: TimeFunction::zero(),
            s: 1.0,
            l0: 1.0,
            dimension: 1,
        }
    }

    /// Builds a set from `(name, expression)` pairs; `a` is required and
    /// missing entries are zero.
    pub fn from_exprs(pairs: &[(&str, &str)], s: f64, l0: f64, dimension: u8) -> Result<Self> {
        let mut set = Self::free(1.0);
        let mut have_a = false;
        for (name, src) in pairs {
            let tf = parse_time_expression(src)?;
            set.set(name, tf)?;
            have_a |= *name == "a";
        }
        if !have_a {
            return Err(Error::MissingCoefficient("a".into()));
        }
        set.s = s;
        set.l0 = l0;
        set.dimension = dimension;
        set.validate()?;
        Ok(set)
    }

    pub fn set(&mut self, name: &str, tf: TimeFunction) -> Result<()> {
        let slot = match name {
            "a" => &mut self.a,
            "b" => &mut self.b,
            "c" => &mut self.c,
            "d" => &mut self.d,
            "f" | "f1" => &mut self.f,
            "g" | "g1" => &mut self.g,
            "h" => &mut self.h,
            "G" => &mut self.big_g,
            "f2" => &mut self.f2,
            "g2" => &mut self.g2,
            other => {
                return Err(Error::MalformedScenario(format!(
                    "unknown coefficient `{other}`"
                )))
            }
        };
        *slot = tf;
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&TimeFunction> {
        Some(match name {
            "a" => &self.a,
            "b" => &self.b,
            "c" => &self.c,
            "d" => &self.d,
            "f" => &self.f,
            "g" => &self.g,
            "h" => &self.h,
            "G" => &self.big_g,
            "f2" => &self.f2,
            "g2" => &self.g2,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidParameter(format!("s = {} must be >= 0", self.s)));
        }
        if self.l0 != 1.0 && self.l0 != -1.0 {
            return Err(Error::InvalidParameter(format!("l0 = {} must be +1 or -1", self.l0)));
        }
        if self.dimension != 1 && self.dimension != 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension {} not supported",
                self.dimension
            )));
        }
        let a0 = self.a.eval(0.0);
        if a0 == 0.0 || !a0.is_finite() {
            return Err(Error::DivisionByZero(format!("a(0) = {a0}")));
        }
        Ok(())
    }

    /// Checks `a(t) != 0` on a uniform sample of `[t0, t1]`.
    pub fn check_dispersion(&self, t0: f64, t1: f64) -> Result<()> {
        let n = 400;
        for i in 0..=n {
            let t = t0 + (t1 - t0) * i as f64 / n as f64;
            let a = self.a.eval(t);
            if a == 0.0 || !a.is_finite() {
                return Err(Error::DivisionByZero(format!("a({t}) = {a}")));
            }
        }
        Ok(())
    }

    /// True when `c`, `g` and `g2` vanish identically, so split-step applies.
    pub fn is_drift_free(&self) -> bool {
        self.c.is_zero() && self.g.is_zero() && self.g2.is_zero()
    }
}
