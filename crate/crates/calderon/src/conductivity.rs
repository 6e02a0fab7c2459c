//! Conductivity fields on balls and spherical shells.
//!
//! A conductivity is either a radial profile with analytic derivatives
//! (enough to form the Schrodinger potential q = Delta(sqrt gamma)/sqrt gamma)
//! or a general pointwise evaluator with gradient.

use std::sync::Arc;

/// Geometry the conductivity lives on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Ball { r: f64 },
    Shell { r_inner: f64, r_outer: f64 },
}

impl Domain {
    pub fn outer_radius(&self) -> f64 {
        match self {
            Domain::Ball { r } => *r,
            Domain::Shell { r_outer, .. } => *r_outer,
        }
    }
}

/// Radial conductivity profile: gamma(r), its first two derivatives, and
/// gamma(r) - 1 evaluated without cancellation.
#[derive(Clone)]
pub struct RadialProfile {
    pub name: String,
    eval: Arc<dyn Fn(f64) -> ProfilePoint + Send + Sync>,
}

/// Values of a profile at one radius.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    /// gamma(r) - 1, exact (no subtraction of near-equal numbers).
    pub gm1: f64,
    /// d gamma / dr.
    pub d1: f64,
    /// d^2 gamma / dr^2.
    pub d2: f64,
}

impl std::fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RadialProfile({})", self.name)
    }
}

impl RadialProfile {
    pub fn new<F>(name: &str, eval: F) -> Self
    where
        F: Fn(f64) -> ProfilePoint + Send + Sync + 'static,
    {
        RadialProfile {
            name: name.to_string(),
            eval: Arc::new(eval),
        }
    }

    pub fn at(&self, r: f64) -> ProfilePoint {
        (self.eval)(r)
    }

    pub fn value(&self, r: f64) -> f64 {
        1.0 + self.at(r).gm1
    }

    pub fn deriv(&self, r: f64) -> f64 {
        self.at(r).d1
    }

    /// gamma identically 1.
    pub fn one() -> Self {
        RadialProfile::new("one", |_r| ProfilePoint {
            gm1: 0.0,
            d1: 0.0,
            d2: 0.0,
        })
    }

    /// Constant gamma = c.
    pub fn constant(c: f64) -> Self {
        RadialProfile::new(&format!("constant({c})"), move |_r| ProfilePoint {
            gm1: c - 1.0,
            d1: 0.0,
            d2: 0.0,
        })
    }

    /// gamma(r) = 1 + a exp(-((r - center)/sigma)^2). Not compactly
    /// supported; gamma stays close to 1 only in the tail.
    pub fn gaussian(a: f64, sigma: f64, center: f64) -> Self {
        RadialProfile::new(
            &format!("gaussian(a={a},sigma={sigma},center={center})"),
            move |r| {
                let t = (r - center) / sigma;
                let e = a * (-t * t).exp();
                ProfilePoint {
                    gm1: e,
                    d1: e * (-2.0 * t / sigma),
                    d2: e * (4.0 * t * t - 2.0) / (sigma * sigma),
                }
            },
        )
    }

    /// Smooth compactly supported bump:
    /// gamma = 1 + a exp(1 - 1/(1 - (r/r0)^2)) for r < r0, gamma = 1 beyond.
    /// All derivatives vanish at r = r0, so gamma is C-infinity on the ball.
    pub fn compact_bump(a: f64, r0: f64) -> Self {
        RadialProfile::new(&format!("compact_bump(a={a},r0={r0})"), move |r| {
            let u = (r / r0) * (r / r0);
            if u >= 1.0 - 1e-12 {
                return ProfilePoint {
                    gm1: 0.0,
                    d1: 0.0,
                    d2: 0.0,
                };
            }
            let s = 1.0 - u;
            let b = (1.0 - 1.0 / s).exp();
            let db = -b / (s * s);
            let d2b = b * (1.0 / (s * s * s * s) - 2.0 / (s * s * s));
            let du = 2.0 * r / (r0 * r0);
            let d2u = 2.0 / (r0 * r0);
            ProfilePoint {
                gm1: a * b,
                d1: a * db * du,
                d2: a * (d2b * du * du + db * d2u),
            }
        })
    }

    /// Schrodinger potential q(r) = Delta(sqrt gamma)/sqrt gamma for the
    /// radial profile, with the regular limit at r = 0.
    pub fn potential_q(&self, r: f64) -> f64 {
        let p = self.at(r);
        let g = 1.0 + p.gm1;
        let sq = g.sqrt();
        let v1 = p.d1 / (2.0 * sq);
        let v2 = p.d2 / (2.0 * sq) - p.d1 * p.d1 / (4.0 * g * sq);
        if r < 1e-9 {
            // v'(0) = 0 for smooth radial profiles; Delta v -> 3 v''(0).
            3.0 * v2 / sq
        } else {
            (v2 + 2.0 * v1 / r) / sq
        }
    }
}

/// Conductivity on a ball or shell.
#[derive(Clone)]
pub enum Conductivity {
    Radial {
        profile: RadialProfile,
        domain: Domain,
    },
    General {
        name: String,
        /// gamma(x) - 1, exact.
        gm1: Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>,
        grad: Arc<dyn Fn([f64; 3]) -> [f64; 3] + Send + Sync>,
        domain: Domain,
    },
}

impl std::fmt::Debug for Conductivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Conductivity::Radial { profile, domain } => {
                write!(f, "Conductivity::Radial({:?}, {:?})", profile, domain)
            }
            Conductivity::General { name, domain, .. } => {
                write!(f, "Conductivity::General({name}, {:?})", domain)
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConductivityError {
    #[error("ellipticity violated: gamma({r:.4}) = {value:.6e} below floor {floor:.3e}")]
    Ellipticity { r: f64, value: f64, floor: f64 },
}

impl Conductivity {
    pub fn radial(profile: RadialProfile, domain: Domain) -> Self {
        Conductivity::Radial { profile, domain }
    }

    /// General conductivity given gamma - 1 and its gradient.
    pub fn general<F, G>(name: &str, domain: Domain, gm1: F, grad: G) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Send + Sync + 'static,
        G: Fn([f64; 3]) -> [f64; 3] + Send + Sync + 'static,
    {
        Conductivity::General {
            name: name.to_string(),
            gm1: Arc::new(gm1),
            grad: Arc::new(grad),
            domain,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Conductivity::Radial { domain, .. } => *domain,
            Conductivity::General { domain, .. } => *domain,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, Conductivity::Radial { .. })
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        1.0 + self.value_minus_one(x)
    }

    /// gamma(x) - 1 without cancellation.
    pub fn value_minus_one(&self, x: [f64; 3]) -> f64 {
        match self {
            Conductivity::Radial { profile, .. } => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                profile.at(r).gm1
            }
            Conductivity::General { gm1, .. } => gm1(x),
        }
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        match self {
            Conductivity::Radial { profile, .. } => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if r < 1e-12 {
                    return [0.0; 3];
                }
                let d = profile.deriv(r);
                [d * x[0] / r, d * x[1] / r, d * x[2] / r]
            }
            Conductivity::General { grad, .. } => grad(x),
        }
    }

    /// Sampled ellipticity check over the domain; errors on the first
    /// violation of the floor.
    pub fn check_ellipticity(&self, floor: f64, samples: usize) -> Result<(), ConductivityError> {
        let (r_lo, r_hi) = match self.domain() {
            Domain::Ball { r } => (0.0, r),
            Domain::Shell { r_inner, r_outer } => (r_inner, r_outer),
        };
        for i in 0..samples {
            let t = i as f64 / (samples.max(2) - 1) as f64;
            let r = r_lo + t * (r_hi - r_lo);
            for dir in [
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [-0.577, 0.577, 0.577],
                [0.0, -0.707, 0.707],
            ] {
                let x = [r * dir[0], r * dir[1], r * dir[2]];
                let v = self.value(x);
                if v < floor {
                    return Err(ConductivityError::Ellipticity {
                        r,
                        value: v,
                        floor,
                    });
                }
            }
        }
        Ok(())
    }

    /// Diagnostic: sup of |grad log gamma| over a deterministic sample set.
    pub fn sup_grad_log(&self, samples: usize) -> f64 {
        let (r_lo, r_hi) = match self.domain() {
            Domain::Ball { r } => (0.0, r),
            Domain::Shell { r_inner, r_outer } => (r_inner, r_outer),
        };
        let mut sup: f64 = 0.0;
        for i in 0..samples {
            let t = i as f64 / (samples.max(2) - 1) as f64;
            let r = r_lo + t * (r_hi - r_lo);
            for k in 0..8 {
                let a = k as f64 * 0.785 + 0.3;
                let b = k as f64 * 1.571 + 0.1;
                let dir = [a.cos() * b.sin(), a.sin() * b.sin(), b.cos()];
                let x = [r * dir[0], r * dir[1], r * dir[2]];
                let g = self.gradient(x);
                let v = self.value(x);
                let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt() / v;
                sup = sup.max(n);
            }
        }
        sup
    }
}
