//! Convolution kernels `K(t)` and their Laplace transforms.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ComplexFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A user-supplied kernel.
#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub eval: RealFn,
    pub laplace: Option<ComplexFn>,
    /// Points in `t` where `K` jumps; quadrature splits there.
    pub jumps: Vec<f64>,
}

#[derive(Clone)]
pub enum Kernel {
    Constant,
    /// `K(t) = 1` on `[0, L]`, zero afterwards.
    Step { l: f64 },
    Cosine { omega: f64 },
    BesselJ0 { omega: f64 },
    Custom(CustomKernel),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel({})", self.label())
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl PartialEq for Kernel {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Kernel::Constant, Kernel::Constant) => true,
            (Kernel::Step { l: a }, Kernel::Step { l: b }) => a.to_bits() == b.to_bits(),
            (Kernel::Cosine { omega: a }, Kernel::Cosine { omega: b })
            | (Kernel::BesselJ0 { omega: a }, Kernel::BesselJ0 { omega: b }) => a.to_bits() == b.to_bits(),
            (Kernel::Custom(a), Kernel::Custom(b)) => Arc::ptr_eq(&a.eval, &b.eval),
            _ => false,
        }
    }
}

impl Kernel {
    pub fn step(l: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameter(format!("step length must be positive, got {l}")));
        }
        Ok(Kernel::Step { l })
    }

    pub fn cosine(omega: f64) -> Result<Self> {
        check_omega(omega)?;
        Ok(Kernel::Cosine { omega })
    }

    pub fn bessel_j0(omega: f64) -> Result<Self> {
        check_omega(omega)?;
        Ok(Kernel::BesselJ0 { omega })
    }

    pub fn custom<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Kernel::Custom(CustomKernel {
            name: name.into(),
            eval: Arc::new(eval),
            laplace: None,
            jumps: Vec::new(),
        })
    }

    pub fn custom_with_laplace<F, G>(name: impl Into<String>, eval: F, laplace: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Kernel::Custom(CustomKernel {
            name: name.into(),
            eval: Arc::new(eval),
            laplace: Some(Arc::new(laplace)),
            jumps: Vec::new(),
        })
    }

    /// The identically zero kernel. Every weight vanishes, so no scheme can march it.
    pub fn zero() -> Self {
        Kernel::custom_with_laplace("zero", |_| 0.0, |_| Complex64::new(0.0, 0.0))
    }

    pub fn label(&self) -> String {
        match self {
            Kernel::Constant => "constant".into(),
            Kernel::Step { l } => format!("step:L={l}"),
            Kernel::Cosine { omega } => format!("cos:omega={omega}"),
            Kernel::BesselJ0 { omega } => format!("j0:omega={omega}"),
            Kernel::Custom(c) => c.name.clone(),
        }
    }

    /// `K(t)` for `t >= 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("kernel argument must be >= 0, got {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match self {
            Kernel::Constant => 1.0,
            Kernel::Step { l } => {
                if t <= *l {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Cosine { omega } => (omega * t).cos(),
            Kernel::BesselJ0 { omega } => bessel_j0(omega * t),
            Kernel::Custom(c) => (c.eval)(t),
        }
    }

    /// Points where `K` is discontinuous.
    pub fn jumps(&self) -> Vec<f64> {
        match self {
            Kernel::Step { l } => vec![*l],
            Kernel::Custom(c) => c.jumps.clone(),
            _ => Vec::new(),
        }
    }

    /// `K` vanishes identically for `t` beyond this value.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            Kernel::Step { l } => Some(*l),
            _ => None,
        }
    }

    /// `K` is a polynomial of degree zero on each piece between jumps.
    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, Kernel::Constant | Kernel::Step { .. })
    }

    /// Angular frequency of oscillation, zero if none.
    pub fn frequency(&self) -> f64 {
        match self {
            Kernel::Cosine { omega } | Kernel::BesselJ0 { omega } => *omega,
            _ => 0.0,
        }
    }

    /// Laplace transform `K(s)` for `Re s > 0`.
    pub fn laplace(&self, s: Complex64) -> Result<Complex64> {
        if !(s.re > 0.0) {
            return Err(Error::InvalidParameter(format!("Laplace transform needs Re s > 0, got {s}")));
        }
        self.laplace_continued(s)
    }

    /// Analytic continuation of the transform, used where CQ symbols leave the right half-plane.
    pub(crate) fn laplace_continued(&self, s: Complex64) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        Ok(match self {
            Kernel::Constant => one / s,
            Kernel::Step { l } => {
                let z = -s * *l;
                // (1 - e^{-Ls})/s without cancellation for small |Ls|
                if z.norm() < 1e-3 {
                    let mut term = Complex64::new(*l, 0.0);
                    let mut acc = term;
                    for k in 2..12 {
                        term *= z / k as f64;
                        acc += term;
                    }
                    acc
                } else {
                    (one - z.exp()) / s
                }
            }
            Kernel::Cosine { omega } => s / (s * s + omega * omega),
            Kernel::BesselJ0 { omega } => {
                let r = Complex64::new(*omega, 0.0) / s;
                one / (s * (one + r * r).sqrt())
            }
            Kernel::Custom(c) => match &c.laplace {
                Some(f) => f(s),
                None => return Err(Error::TransformUnavailable(c.name.clone())),
            },
        })
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be >= 0, got {omega}")));
    }
    Ok(())
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

fn parse_param(spec: &str, body: &str, name: &str) -> Result<f64> {
    let value = body
        .strip_prefix(name)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| Error::InvalidParameter(format!("expected `{name}=<value>` in kernel `{spec}`")))?;
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad number `{value}` in kernel `{spec}`")))
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    /// Accepts `constant`, `step:L=<v>`, `cos:omega=<v>`, `j0:omega=<v>` and `zero`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = match s.split_once(':') {
            Some((h, b)) => (h, Some(b)),
            None => (s, None),
        };
        match (head, body) {
            ("constant", None) => Ok(Kernel::Constant),
            ("zero", None) => Ok(Kernel::zero()),
            ("step", Some(b)) => Kernel::step(parse_param(s, b, "L")?),
            ("cos", Some(b)) => Kernel::cosine(parse_param(s, b, "omega")?),
            ("j0", Some(b)) => Kernel::bessel_j0(parse_param(s, b, "omega")?),
            _ => Err(Error::InvalidParameter(format!("unknown kernel `{s}`"))),
        }
    }
}
