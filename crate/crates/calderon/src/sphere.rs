//! Spherical-harmonic calculus on a sphere of radius R: quadrature grid,
//! forward/inverse transforms, Sobolev norms, tangential derivatives, and
//! pointwise basis evaluation.
//!
//! Basis convention: complex spherical harmonics orthonormal with respect to
//! the surface measure of the radius-R sphere,
//!
//! ```text
//!   Yhat_{l,m}(x) = Y_{l,m}(x/|x|) / R,
//!   integral over |x|=R of Yhat_{l,m} conj(Yhat_{l',m'}) dS = delta.
//! ```
//!
//! where Y_{l,m} are the unit-sphere orthonormal harmonics with
//! Condon-Shortley phase. Coefficients are packed with `idx(l, m) = l^2 + l + m`.

use crate::linalg::C64;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum SphereError {
    #[error("node count mismatch: grid has {expected} nodes, got {actual} values")]
    NodeCountMismatch { expected: usize, actual: usize },
    #[error("degree overflow: field degree {field} exceeds grid degree {grid}")]
    DegreeOverflow { field: usize, grid: usize },
    #[error("coefficient count {actual} is not a perfect square")]
    BadCoefficientCount { actual: usize },
}

/// Packed index of the (l, m) coefficient.
#[inline]
pub fn idx(l: usize, m: i64) -> usize {
    (l * l) as usize + (l as i64 + m) as usize
}

/// Number of coefficients through degree `lmax`.
#[inline]
pub fn coeff_count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Normalized associated Legendre functions pbar_{l,m}(x) for m >= 0 with
/// integral of pbar^2 over [-1,1] equal to 1, including the Condon-Shortley
/// phase: Y_{l,m}(theta, phi) = pbar_{l,m}(cos theta) e^{i m phi} / sqrt(2 pi).
///
/// Output is packed triangularly: out[tri(l, m)].
pub fn legendre_normalized(lmax: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; tri(lmax, lmax) + 1];
    let sx = (1.0 - x * x).max(0.0).sqrt();
    p[tri(0, 0)] = std::f64::consts::FRAC_1_SQRT_2;
    for m in 1..=lmax {
        p[tri(m, m)] = -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sx * p[tri(m - 1, m - 1)];
    }
    for m in 0..lmax {
        p[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * p[tri(m, m)];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
        }
    }
    p
}

/// Theta-derivatives d/dtheta pbar_{l,m}(cos theta) from the ladder relation,
/// given the pbar table at the same point.
pub fn legendre_theta_derivative(lmax: usize, p: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; p.len()];
    for l in 1..=lmax {
        let lf = l as f64;
        d[tri(l, 0)] = (lf * (lf + 1.0)).sqrt() * p[tri(l, 1)];
        for m in 1..=l {
            let mf = m as f64;
            let cp = if m < l {
                ((lf - mf) * (lf + mf + 1.0)).sqrt() * p[tri(l, m + 1)]
            } else {
                0.0
            };
            let cm = ((lf + mf) * (lf - mf + 1.0)).sqrt() * p[tri(l, m - 1)];
            d[tri(l, m)] = 0.5 * (cp - cm);
        }
    }
    d
}

/// Unit-sphere orthonormal harmonics Y_{l,m} at a direction, packed by `idx`.
pub fn unit_harmonics(lmax: usize, dir: [f64; 3]) -> Vec<C64> {
    let r = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let ct = (dir[2] / r).clamp(-1.0, 1.0);
    let phi = dir[1].atan2(dir[0]);
    let p = legendre_normalized(lmax, ct);
    let inv = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut out = vec![C64::new(0.0, 0.0); coeff_count(lmax)];
    for l in 0..=lmax {
        for m in 0..=(l as i64) {
            let e = Complex64::from_polar(1.0, m as f64 * phi);
            let v = p[tri(l, m as usize)] * inv;
            out[idx(l, m)] = v * e;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[idx(l, -m)] = sign * v * e.conj();
            }
        }
    }
    out
}

/// Unit-sphere harmonics and their surface gradients (Cartesian components,
/// tangent to the unit sphere) at a direction.
pub fn unit_harmonics_with_grad(lmax: usize, dir: [f64; 3]) -> (Vec<C64>, Vec<[C64; 3]>) {
    let r = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let ct = (dir[2] / r).clamp(-1.0, 1.0);
    let st = (1.0 - ct * ct).max(1e-24).sqrt();
    let phi = dir[1].atan2(dir[0]);
    let p = legendre_normalized(lmax, ct);
    let dp = legendre_theta_derivative(lmax, &p);
    let inv = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let (cp, sp) = (phi.cos(), phi.sin());
    let that = [ct * cp, ct * sp, -st];
    let phat = [-sp, cp, 0.0];
    let n = coeff_count(lmax);
    let mut vals = vec![C64::new(0.0, 0.0); n];
    let mut grads = vec![[C64::new(0.0, 0.0); 3]; n];
    for l in 0..=lmax {
        for m in 0..=(l as i64) {
            let mu = m as usize;
            let e = Complex64::from_polar(1.0, m as f64 * phi);
            let v = p[tri(l, mu)] * inv;
            let dv = dp[tri(l, mu)] * inv;
            let pv_sin = v / st;
            vals[idx(l, m)] = v * e;
            let gp = C64::new(0.0, m as f64) * pv_sin * e;
            for a in 0..3 {
                grads[idx(l, m)][a] = dv * e * that[a] + gp * phat[a];
            }
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                vals[idx(l, -m)] = sign * v * e.conj();
                let gpn = C64::new(0.0, -(m as f64)) * pv_sin * e.conj();
                for a in 0..3 {
                    grads[idx(l, -m)][a] = sign * (dv * e.conj() * that[a] + gpn * phat[a]);
                }
            }
        }
    }
    (vals, grads)
}

/// Sobolev order for boundary norms; weight per degree is
/// (1 + l(l+1))^{s/2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevIndex(pub f64);

impl SobolevIndex {
    pub fn weight(&self, l: usize) -> f64 {
        let lf = l as f64;
        (1.0 + lf * (lf + 1.0)).powf(0.5 * self.0)
    }
}

/// A function on the sphere represented by spherical-harmonic coefficients
/// of degree <= lmax.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub lmax: usize,
    pub coeffs: Vec<C64>,
}

impl BoundaryField {
    pub fn zero(lmax: usize) -> Self {
        BoundaryField {
            lmax,
            coeffs: vec![C64::new(0.0, 0.0); coeff_count(lmax)],
        }
    }

    pub fn from_coeffs(coeffs: Vec<C64>) -> Result<Self, SphereError> {
        let n = coeffs.len();
        let lp1 = (n as f64).sqrt().round() as usize;
        if lp1 * lp1 != n || n == 0 {
            return Err(SphereError::BadCoefficientCount { actual: n });
        }
        Ok(BoundaryField {
            lmax: lp1 - 1,
            coeffs,
        })
    }

    /// Unit basis field e_{l,m}.
    pub fn unit(lmax: usize, l: usize, m: i64) -> Self {
        let mut f = BoundaryField::zero(lmax);
        f.coeffs[idx(l, m)] = C64::new(1.0, 0.0);
        f
    }

    pub fn get(&self, l: usize, m: i64) -> C64 {
        self.coeffs[idx(l, m)]
    }

    /// H^s norm: ( sum (1 + l(l+1))^s |c_{l,m}|^2 )^{1/2}.
    pub fn hs_norm(&self, s: SobolevIndex) -> f64 {
        let mut acc = 0.0;
        for l in 0..=self.lmax {
            let w = s.weight(l);
            let w2 = w * w;
            for m in -(l as i64)..=(l as i64) {
                acc += w2 * self.coeffs[idx(l, m)].norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real bilinear duality pairing: integral of f * g over the sphere
    /// (no conjugation) = sum (-1)^m f_{l,m} g_{l,-m}.
    pub fn pair_bilinear(&self, other: &BoundaryField) -> C64 {
        assert_eq!(self.lmax, other.lmax);
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..=self.lmax {
            for m in -(l as i64)..=(l as i64) {
                let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                acc += sign * self.coeffs[idx(l, m)] * other.coeffs[idx(l, -m)];
            }
        }
        acc
    }

    /// Hermitian pairing: integral of f * conj(g) = sum f_{l,m} conj(g_{l,m}).
    pub fn pair_hermitian(&self, other: &BoundaryField) -> C64 {
        assert_eq!(self.lmax, other.lmax);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    /// Pointwise complex conjugate as a function: coefficients
    /// c'_{l,m} = (-1)^m conj(c_{l,-m}).
    pub fn conj_field(&self) -> BoundaryField {
        let mut out = BoundaryField::zero(self.lmax);
        for l in 0..=self.lmax {
            for m in -(l as i64)..=(l as i64) {
                let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                out.coeffs[idx(l, m)] = sign * self.coeffs[idx(l, -m)].conj();
            }
        }
        out
    }

    /// Max deviation from Hermitian coefficient symmetry (zero for fields
    /// that are real on nodes).
    pub fn hermitian_defect(&self) -> f64 {
        let c = self.conj_field();
        self.coeffs
            .iter()
            .zip(&c.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: C64) -> BoundaryField {
        BoundaryField {
            lmax: self.lmax,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &BoundaryField) -> BoundaryField {
        assert_eq!(self.lmax, other.lmax);
        BoundaryField {
            lmax: self.lmax,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &BoundaryField) -> BoundaryField {
        assert_eq!(self.lmax, other.lmax);
        BoundaryField {
            lmax: self.lmax,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Truncate or zero-pad to a new maximum degree.
    pub fn resized(&self, new_lmax: usize) -> BoundaryField {
        let mut out = BoundaryField::zero(new_lmax);
        let l_copy = self.lmax.min(new_lmax);
        for l in 0..=l_copy {
            for m in -(l as i64)..=(l as i64) {
                out.coeffs[idx(l, m)] = self.coeffs[idx(l, m)];
            }
        }
        out
    }
}

/// Quadrature grid on the sphere of radius R: Gauss-Legendre in cos(theta)
/// with lmax+1 rings, uniform azimuth with 2 lmax + 2 points per ring.
/// Exact for integrands of harmonic degree <= 2 lmax + 1.
pub struct SphericalGrid {
    r: f64,
    lmax: usize,
    ntheta: usize,
    nphi: usize,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    w_theta: Vec<f64>,
    /// pbar tables per ring, triangular layout.
    plm: Vec<Vec<f64>>,
    /// d/dtheta pbar tables per ring.
    dplm: Vec<Vec<f64>>,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SphericalGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SphericalGrid")
            .field("r", &self.r)
            .field("lmax", &self.lmax)
            .field("ntheta", &self.ntheta)
            .field("nphi", &self.nphi)
            .finish()
    }
}

impl SphericalGrid {
    pub fn new(lmax: usize, r: f64) -> Self {
        assert!(r > 0.0, "sphere radius must be positive");
        let ntheta = lmax + 1;
        let nphi = 2 * lmax + 2;
        let (ct, wt) = crate::quad::gauss_legendre(ntheta);
        let sin_theta: Vec<f64> = ct.iter().map(|&x| (1.0 - x * x).sqrt()).collect();
        let plm: Vec<Vec<f64>> = ct.iter().map(|&x| legendre_normalized(lmax, x)).collect();
        let dplm: Vec<Vec<f64>> = plm
            .iter()
            .map(|p| legendre_theta_derivative(lmax, p))
            .collect();
        let mut nodes = Vec::with_capacity(ntheta * nphi);
        let mut weights = Vec::with_capacity(ntheta * nphi);
        let wphi = 2.0 * std::f64::consts::PI / nphi as f64;
        for i in 0..ntheta {
            for j in 0..nphi {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / nphi as f64;
                nodes.push([
                    r * sin_theta[i] * phi.cos(),
                    r * sin_theta[i] * phi.sin(),
                    r * ct[i],
                ]);
                weights.push(wt[i] * wphi * r * r);
            }
        }
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(nphi);
        let fft_inv = planner.plan_fft_inverse(nphi);
        SphericalGrid {
            r,
            lmax,
            ntheta,
            nphi,
            cos_theta: ct,
            sin_theta,
            w_theta: wt,
            plm,
            dplm,
            nodes,
            weights,
            fft_fwd,
            fft_inv,
        }
    }

    pub fn radius(&self) -> f64 {
        self.r
    }
    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn num_nodes(&self) -> usize {
        self.ntheta * self.nphi
    }
    pub fn num_coeffs(&self) -> usize {
        coeff_count(self.lmax)
    }
    pub fn ntheta(&self) -> usize {
        self.ntheta
    }
    pub fn nphi(&self) -> usize {
        self.nphi
    }
    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }
    pub fn theta_weights(&self) -> &[f64] {
        &self.w_theta
    }
    /// Cartesian node positions, ring-major: index = i_theta * nphi + j_phi.
    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }
    /// Surface-measure quadrature weights per node; they sum to 4 pi R^2.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// Outward unit normal at node k.
    pub fn normal(&self, k: usize) -> [f64; 3] {
        let n = self.nodes[k];
        [n[0] / self.r, n[1] / self.r, n[2] / self.r]
    }

    fn check_nodes(&self, len: usize) -> Result<(), SphereError> {
        if len != self.num_nodes() {
            return Err(SphereError::NodeCountMismatch {
                expected: self.num_nodes(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Forward transform: degree-<=lmax quadrature projection of node values.
    pub fn analyze(&self, values: &[C64]) -> Result<BoundaryField, SphereError> {
        self.check_nodes(values.len())?;
        let mut field = BoundaryField::zero(self.lmax);
        // Ring-wise DFT over azimuth.
        let mut rings: Vec<Vec<C64>> = Vec::with_capacity(self.ntheta);
        for i in 0..self.ntheta {
            let mut ring = values[i * self.nphi..(i + 1) * self.nphi].to_vec();
            self.fft_fwd.process(&mut ring);
            rings.push(ring);
        }
        let scale =
            self.r * (2.0 * std::f64::consts::PI).sqrt() / self.nphi as f64;
        for l in 0..=self.lmax {
            for m in 0..=(l as i64) {
                let mu = m as usize;
                let mut acc_pos = C64::new(0.0, 0.0);
                let mut acc_neg = C64::new(0.0, 0.0);
                for i in 0..self.ntheta {
                    let pw = self.w_theta[i] * self.plm[i][tri(l, mu)];
                    acc_pos += pw * rings[i][mu];
                    if m > 0 {
                        acc_neg += pw * rings[i][self.nphi - mu];
                    }
                }
                field.coeffs[idx(l, m)] = scale * acc_pos;
                if m > 0 {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    field.coeffs[idx(l, -m)] = scale * sign * acc_neg;
                }
            }
        }
        Ok(field)
    }

    /// Inverse transform: pointwise values at the grid nodes.
    pub fn synthesize(&self, field: &BoundaryField) -> Result<Vec<C64>, SphereError> {
        if field.lmax > self.lmax {
            return Err(SphereError::DegreeOverflow {
                field: field.lmax,
                grid: self.lmax,
            });
        }
        let f = if field.lmax < self.lmax {
            field.resized(self.lmax)
        } else {
            field.clone()
        };
        let inv = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * self.r);
        let mut out = vec![C64::new(0.0, 0.0); self.num_nodes()];
        let mut ring = vec![C64::new(0.0, 0.0); self.nphi];
        for i in 0..self.ntheta {
            for z in ring.iter_mut() {
                *z = C64::new(0.0, 0.0);
            }
            for l in 0..=self.lmax {
                for m in 0..=(l as i64) {
                    let mu = m as usize;
                    let p = self.plm[i][tri(l, mu)] * inv;
                    ring[mu] += p * f.coeffs[idx(l, m)];
                    if m > 0 {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        ring[self.nphi - mu] += sign * p * f.coeffs[idx(l, -m)];
                    }
                }
            }
            self.fft_inv.process(&mut ring);
            out[i * self.nphi..(i + 1) * self.nphi].copy_from_slice(&ring);
        }
        Ok(out)
    }

    /// Surface gradient at the nodes as Cartesian complex 3-vectors.
    /// Tangency nu . grad_t f = 0 holds exactly by construction.
    pub fn tangential_gradient(
        &self,
        field: &BoundaryField,
    ) -> Result<Vec<[C64; 3]>, SphereError> {
        if field.lmax > self.lmax {
            return Err(SphereError::DegreeOverflow {
                field: field.lmax,
                grid: self.lmax,
            });
        }
        let f = if field.lmax < self.lmax {
            field.resized(self.lmax)
        } else {
            field.clone()
        };
        let inv = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * self.r);
        let mut out = vec![[C64::new(0.0, 0.0); 3]; self.num_nodes()];
        let mut ring_dt = vec![C64::new(0.0, 0.0); self.nphi];
        let mut ring_dp = vec![C64::new(0.0, 0.0); self.nphi];
        for i in 0..self.ntheta {
            for z in ring_dt.iter_mut() {
                *z = C64::new(0.0, 0.0);
            }
            for z in ring_dp.iter_mut() {
                *z = C64::new(0.0, 0.0);
            }
            let st = self.sin_theta[i];
            for l in 0..=self.lmax {
                for m in 0..=(l as i64) {
                    let mu = m as usize;
                    let dp = self.dplm[i][tri(l, mu)] * inv;
                    let p_over_sin = self.plm[i][tri(l, mu)] * inv / st;
                    let im_m = C64::new(0.0, m as f64);
                    ring_dt[mu] += dp * f.coeffs[idx(l, m)];
                    ring_dp[mu] += im_m * p_over_sin * f.coeffs[idx(l, m)];
                    if m > 0 {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        ring_dt[self.nphi - mu] += sign * dp * f.coeffs[idx(l, -m)];
                        ring_dp[self.nphi - mu] +=
                            sign * (-im_m) * p_over_sin * f.coeffs[idx(l, -m)];
                    }
                }
            }
            self.fft_inv.process(&mut ring_dt);
            self.fft_inv.process(&mut ring_dp);
            let ct = self.cos_theta[i];
            for j in 0..self.nphi {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / self.nphi as f64;
                let (cp, sp) = (phi.cos(), phi.sin());
                // theta-hat and phi-hat in Cartesian coordinates.
                let that = [ct * cp, ct * sp, -st];
                let phat = [-sp, cp, 0.0];
                let gt = ring_dt[j] / self.r;
                let gp = ring_dp[j] / self.r;
                out[i * self.nphi + j] = [
                    gt * that[0] + gp * phat[0],
                    gt * that[1] + gp * phat[1],
                    gt * that[2] + gp * phat[2],
                ];
            }
        }
        Ok(out)
    }

    /// Degree-<=lmax projection of the pointwise product a * b.
    /// Exact when deg(a) + deg(b) + lmax <= 2 lmax + 1.
    pub fn project_multiply(
        &self,
        a: &BoundaryField,
        b: &BoundaryField,
    ) -> Result<BoundaryField, SphereError> {
        let va = self.synthesize(a)?;
        let vb = self.synthesize(b)?;
        let prod: Vec<C64> = va.iter().zip(&vb).map(|(x, y)| x * y).collect();
        self.analyze(&prod)
    }

    /// Values of the grid basis Yhat_{l,m} = Y_{l,m}/R at an arbitrary point
    /// (only the direction of `x` matters).
    pub fn basis_at(&self, x: [f64; 3]) -> Vec<C64> {
        let y = unit_harmonics(self.lmax, x);
        y.into_iter().map(|v| v / self.r).collect()
    }

    /// Evaluate a coefficient field at an arbitrary direction.
    pub fn eval_at(&self, field: &BoundaryField, x: [f64; 3]) -> C64 {
        let basis = self.basis_at(x);
        field
            .coeffs
            .iter()
            .zip(&basis)
            .map(|(c, y)| c * y)
            .sum()
    }

    /// Quadrature of node values against the surface measure.
    pub fn integrate_nodes(&self, values: &[C64]) -> C64 {
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * *w)
            .sum()
    }

    /// Node-by-coefficient matrix of unit-sphere harmonic values
    /// Y_{l,m}(x_k). Intended for small degrees (dense assembly paths).
    pub fn unit_value_matrix(&self) -> crate::linalg::CMat {
        let m = self.num_coeffs();
        let mut out = crate::linalg::CMat::zeros(self.num_nodes(), m);
        for (k, &p) in self.nodes.iter().enumerate() {
            let y = unit_harmonics(self.lmax, p);
            out.row_mut(k).copy_from_slice(&y);
        }
        out
    }

    /// Node-by-coefficient matrices of the three Cartesian components of the
    /// unit-sphere surface gradient of Y_{l,m}.
    pub fn unit_gradient_matrices(&self) -> [crate::linalg::CMat; 3] {
        let m = self.num_coeffs();
        let mut out = [
            crate::linalg::CMat::zeros(self.num_nodes(), m),
            crate::linalg::CMat::zeros(self.num_nodes(), m),
            crate::linalg::CMat::zeros(self.num_nodes(), m),
        ];
        for (k, &p) in self.nodes.iter().enumerate() {
            let (_, g) = unit_harmonics_with_grad(self.lmax, p);
            for a in 0..3 {
                for (j, gj) in g.iter().enumerate() {
                    out[a][(k, j)] = gj[a];
                }
            }
        }
        out
    }
}

/// Volume quadrature over a ball or shell, as a tensor product of a radial
/// Gauss-Legendre rule with a spherical grid.
pub struct VolumeQuadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub radial_nodes: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub nodes_per_shell: usize,
}

impl VolumeQuadrature {
    /// Quadrature over the shell r_inner < |x| < r_outer (use r_inner = 0
    /// for the full ball). Exactness follows the radial rule order and the
    /// grid's angular exactness.
    pub fn new(grid: &SphericalGrid, nr: usize, r_inner: f64, r_outer: f64) -> Self {
        let (rq, wq) = crate::quad::gauss_legendre_on(nr, r_inner, r_outer);
        let r_grid = grid.radius();
        let mut points = Vec::with_capacity(nr * grid.num_nodes());
        let mut weights = Vec::with_capacity(nr * grid.num_nodes());
        for (&r, &wr) in rq.iter().zip(&wq) {
            for (k, &p) in grid.nodes().iter().enumerate() {
                let s = r / r_grid;
                points.push([p[0] * s, p[1] * s, p[2] * s]);
                // dV = r^2 dr dsigma; grid weights carry R^2 dsigma.
                weights.push(wr * r * r * grid.weights()[k] / (r_grid * r_grid));
            }
        }
        VolumeQuadrature {
            points,
            weights,
            radial_nodes: rq,
            radial_weights: wq,
            nodes_per_shell: grid.num_nodes(),
        }
    }

    pub fn integrate<F: FnMut([f64; 3]) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn weights_sum_to_sphere_area() {
        for &(l, r) in &[(4usize, 1.0f64), (16, 2.0), (9, 0.5)] {
            let g = SphericalGrid::new(l, r);
            let total: f64 = g.weights().iter().sum();
            let area = 4.0 * std::f64::consts::PI * r * r;
            assert!(
                (total - area).abs() <= 1e-12 * area,
                "area mismatch at lmax={l}, r={r}"
            );
        }
    }

    #[test]
    fn quadrature_orthonormality() {
        // integral Yhat_{l,m} conj(Yhat_{l',m'}) dS = delta, through l = lmax.
        let g = SphericalGrid::new(8, 1.7);
        for (l, m) in [(0usize, 0i64), (3, 2), (5, -4), (8, 8), (7, 0)] {
            let f = BoundaryField::unit(g.lmax(), l, m);
            let v = g.synthesize(&f).unwrap();
            for (lp, mp) in [(0usize, 0i64), (3, 2), (5, -4), (8, 8), (6, 1)] {
                let fp = BoundaryField::unit(g.lmax(), lp, mp);
                let vp = g.synthesize(&fp).unwrap();
                let prod: Vec<C64> = v.iter().zip(&vp).map(|(a, b)| a * b.conj()).collect();
                let integral = g.integrate_nodes(&prod);
                let expected = if (l, m) == (lp, mp) { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(integral.re, expected, epsilon = 1e-12);
                assert_abs_diff_eq!(integral.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn analyze_picks_out_y10() {
        let g = SphericalGrid::new(6, 1.0);
        // Values of Yhat_{1,0} on the grid.
        let vals: Vec<C64> = g
            .nodes()
            .iter()
            .map(|&p| {
                let y = unit_harmonics(1, p);
                y[idx(1, 0)] / g.radius()
            })
            .collect();
        let f = g.analyze(&vals).unwrap();
        for l in 0..=6usize {
            for m in -(l as i64)..=(l as i64) {
                let expected = if (l, m) == (1, 0) { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(f.get(l, m).re, expected, epsilon = 1e-12);
                assert_abs_diff_eq!(f.get(l, m).im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn analyze_constant_field() {
        // values == 1 -> c_{0,0} = sqrt(4 pi) R, everything else 0.
        let r = 1.5;
        let g = SphericalGrid::new(5, r);
        let vals = vec![c(1.0, 0.0); g.num_nodes()];
        let f = g.analyze(&vals).unwrap();
        let expected = (4.0 * std::f64::consts::PI).sqrt() * r;
        assert_abs_diff_eq!(f.get(0, 0).re, expected, epsilon = 1e-12);
        assert!(f.l2_norm() - f.get(0, 0).norm() < 1e-12);
    }

    #[test]
    fn round_trip_random_band_limited() {
        // Round-trip oracle: synthesize then analyze restores coefficients.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let g = SphericalGrid::new(12, 0.8);
        let coeffs: Vec<C64> = (0..g.num_coeffs())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = BoundaryField::from_coeffs(coeffs).unwrap();
        let v = g.synthesize(&f).unwrap();
        let f2 = g.analyze(&v).unwrap();
        let err: f64 = f
            .coeffs
            .iter()
            .zip(&f2.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "round-trip error {err}");
    }

    #[test]
    fn node_count_mismatch_is_reported() {
        let g = SphericalGrid::new(4, 1.0);
        let vals = vec![c(0.0, 0.0); 7];
        assert!(matches!(
            g.analyze(&vals),
            Err(SphereError::NodeCountMismatch { .. })
        ));
        let f = BoundaryField::zero(9);
        assert!(matches!(
            g.synthesize(&f),
            Err(SphereError::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn hs_norm_values() {
        let f = BoundaryField::unit(4, 0, 0);
        assert_abs_diff_eq!(f.hs_norm(SobolevIndex(0.0)), 1.0, epsilon = 1e-15);
        let f = BoundaryField::unit(4, 3, -2);
        let expected = (1.0 + 12.0f64).powf(0.35);
        assert_abs_diff_eq!(f.hs_norm(SobolevIndex(0.7)), expected, epsilon = 1e-12);
    }

    #[test]
    fn hs_norm_monotone_in_s() {
        let mut f = BoundaryField::zero(5);
        f.coeffs[idx(2, 1)] = c(0.3, -0.1);
        f.coeffs[idx(5, -5)] = c(0.0, 0.9);
        let n0 = f.hs_norm(SobolevIndex(0.0));
        let n1 = f.hs_norm(SobolevIndex(0.5));
        let n2 = f.hs_norm(SobolevIndex(1.5));
        assert!(n0 < n1 && n1 < n2);
    }

    #[test]
    fn hs0_matches_node_quadrature() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let g = SphericalGrid::new(10, 1.3);
        let coeffs: Vec<C64> = (0..g.num_coeffs())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = BoundaryField::from_coeffs(coeffs).unwrap();
        let v = g.synthesize(&f).unwrap();
        let sq: Vec<C64> = v.iter().map(|z| c(z.norm_sqr(), 0.0)).collect();
        let quad = g.integrate_nodes(&sq).re.sqrt();
        assert_abs_diff_eq!(quad, f.hs_norm(SobolevIndex(0.0)), epsilon = 1e-8);
    }

    #[test]
    fn tangential_gradient_constant_is_zero() {
        let g = SphericalGrid::new(6, 1.0);
        let f = BoundaryField::unit(6, 0, 0);
        let grad = g.tangential_gradient(&f).unwrap();
        for gk in grad {
            for comp in gk {
                assert!(comp.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn tangential_gradient_eigenvalue_identity() {
        // integral |grad_t Y|^2 dS = l(l+1)/R^2 integral |Y|^2 dS.
        let r = 1.4;
        let g = SphericalGrid::new(10, r);
        for (l, m) in [(1usize, 0i64), (3, 2), (7, -5), (9, 9)] {
            let f = BoundaryField::unit(g.lmax(), l, m);
            let grad = g.tangential_gradient(&f).unwrap();
            let sq: Vec<C64> = grad
                .iter()
                .map(|v| c(v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr(), 0.0))
                .collect();
            let energy = g.integrate_nodes(&sq).re;
            let lf = l as f64;
            let expected = lf * (lf + 1.0) / (r * r);
            assert!(
                (energy - expected).abs() <= 1e-8 * expected.max(1.0),
                "l={l} m={m}: {energy} vs {expected}"
            );
        }
    }

    #[test]
    fn tangential_gradient_is_tangent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = SphericalGrid::new(8, 2.0);
        let coeffs: Vec<C64> = (0..coeff_count(7))
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = BoundaryField::from_coeffs(coeffs).unwrap();
        let grad = g.tangential_gradient(&f).unwrap();
        for (k, gk) in grad.iter().enumerate() {
            let nu = g.normal(k);
            let dot = gk[0] * nu[0] + gk[1] * nu[1] + gk[2] * nu[2];
            assert!(dot.norm() < 1e-12);
        }
    }

    #[test]
    fn project_multiply_by_one_is_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = SphericalGrid::new(9, 1.0);
        let coeffs: Vec<C64> = (0..g.num_coeffs())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = BoundaryField::from_coeffs(coeffs).unwrap();
        // The constant function with value 1 has c_{0,0} = sqrt(4 pi) R.
        let mut one = BoundaryField::zero(g.lmax());
        one.coeffs[idx(0, 0)] = c((4.0 * std::f64::consts::PI).sqrt() * g.radius(), 0.0);
        let prod = g.project_multiply(&f, &one).unwrap();
        let err: f64 = f
            .coeffs
            .iter()
            .zip(&prod.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn y10_squared_has_degrees_zero_and_two() {
        let g = SphericalGrid::new(8, 1.0);
        let f = BoundaryField::unit(8, 1, 0);
        let prod = g.project_multiply(&f, &f).unwrap();
        for l in 0..=8usize {
            for m in -(l as i64)..=(l as i64) {
                let v = prod.get(l, m).norm();
                if (l == 0 || l == 2) && m == 0 {
                    assert!(v > 1e-3, "expected mass at ({l},{m})");
                } else {
                    assert!(v < 1e-12, "unexpected mass at ({l},{m}): {v}");
                }
            }
        }
    }

    #[test]
    fn bilinear_pairing_matches_quadrature() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = SphericalGrid::new(7, 1.1);
        let fa = BoundaryField::from_coeffs(
            (0..g.num_coeffs())
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap();
        let fb = BoundaryField::from_coeffs(
            (0..g.num_coeffs())
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap();
        let va = g.synthesize(&fa).unwrap();
        let vb = g.synthesize(&fb).unwrap();
        let prod: Vec<C64> = va.iter().zip(&vb).map(|(a, b)| a * b).collect();
        let quad = g.integrate_nodes(&prod);
        let pair = fa.pair_bilinear(&fb);
        assert_abs_diff_eq!(quad.re, pair.re, epsilon = 1e-10);
        assert_abs_diff_eq!(quad.im, pair.im, epsilon = 1e-10);
    }

    #[test]
    fn real_fields_have_hermitian_symmetry() {
        let g = SphericalGrid::new(6, 1.0);
        let vals: Vec<C64> = g
            .nodes()
            .iter()
            .map(|&p| c(p[0] * p[2] + 0.3 * p[1], 0.0))
            .collect();
        let f = g.analyze(&vals).unwrap();
        assert!(f.hermitian_defect() < 1e-13);
        // And back: synthesized values are real.
        let v2 = g.synthesize(&f).unwrap();
        for z in v2 {
            assert!(z.im.abs() < 1e-10);
        }
    }
}
