//! Forward problem: discrete Dirichlet-to-Neumann maps for
//! div(gamma grad u) = 0 on balls and spherical shells, and interior
//! solution evaluators.
//!
//! Diagonal (radial) maps store the deviation delta_l = lambda_l - l/R from
//! the identity-conductivity map rather than the eigenvalues themselves.
//! The deviations are what every downstream consumer (transfer, boundary
//! integral equation, scattering) actually pairs against exponentially
//! large traces, so they must carry full relative accuracy even when they
//! are far below the l/R scale.

use crate::conductivity::{Conductivity, Domain, RadialProfile};
use crate::linalg::{CMat, C64};
use crate::quad::{self, OdeError, OdeSolution};
use crate::sphere::{coeff_count, idx, unit_harmonics_with_grad, BoundaryField, SphericalGrid};

#[derive(Debug, thiserror::Error)]
pub enum ForwardError {
    #[error("radial ODE failed at degree {l}: {source}")]
    Ode { l: usize, source: OdeError },
    #[error("conductivity fails ellipticity: {0}")]
    Ellipticity(#[from] crate::conductivity::ConductivityError),
    #[error("stiffness solve failed (resolution too low or ellipticity violated): {0}")]
    Stiffness(#[from] crate::linalg::LinalgError),
    #[error("degree mismatch: operator lmax {op} vs field lmax {field}")]
    DegreeMismatch { op: usize, field: usize },
    #[error("domain mismatch: expected {expected}, got {got:?}")]
    DomainMismatch { expected: &'static str, got: Domain },
}

/// Discrete Dirichlet-to-Neumann map on the sphere |x| = r.
#[derive(Debug, Clone)]
pub struct DtNMap {
    pub lmax: usize,
    pub r: f64,
    pub repr: DtNRepr,
}

#[derive(Debug, Clone)]
pub enum DtNRepr {
    /// lambda_l = l/r + delta[l], independent of m.
    Diagonal { delta: Vec<f64> },
    /// Dense operator on packed (l, m) coefficients.
    Dense(CMat),
}

impl DtNMap {
    /// The DtN map of gamma identically 1 on the ball of radius r.
    pub fn identity_conductivity(lmax: usize, r: f64) -> Self {
        DtNMap {
            lmax,
            r,
            repr: DtNRepr::Diagonal {
                delta: vec![0.0; lmax + 1],
            },
        }
    }

    pub fn from_deltas(delta: Vec<f64>, r: f64) -> Self {
        DtNMap {
            lmax: delta.len() - 1,
            r,
            repr: DtNRepr::Diagonal { delta },
        }
    }

    pub fn from_dense(m: CMat, r: f64) -> Self {
        let n = m.nrows;
        let lmax = (n as f64).sqrt().round() as usize - 1;
        assert_eq!(coeff_count(lmax), n, "dense DtN size must be (L+1)^2");
        DtNMap {
            lmax,
            r,
            repr: DtNRepr::Dense(m),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, DtNRepr::Diagonal { .. })
    }

    /// Eigenvalue lambda_l for diagonal maps.
    pub fn eigenvalue(&self, l: usize) -> Option<f64> {
        match &self.repr {
            DtNRepr::Diagonal { delta } => Some(l as f64 / self.r + delta[l]),
            DtNRepr::Dense(_) => None,
        }
    }

    /// Deviation lambda_l - l/r for diagonal maps.
    pub fn delta(&self, l: usize) -> Option<f64> {
        match &self.repr {
            DtNRepr::Diagonal { delta } => Some(delta[l]),
            DtNRepr::Dense(_) => None,
        }
    }

    pub fn apply(&self, f: &BoundaryField) -> Result<BoundaryField, ForwardError> {
        if f.lmax != self.lmax {
            return Err(ForwardError::DegreeMismatch {
                op: self.lmax,
                field: f.lmax,
            });
        }
        let mut out = BoundaryField::zero(self.lmax);
        match &self.repr {
            DtNRepr::Diagonal { delta } => {
                for l in 0..=self.lmax {
                    let lam = l as f64 / self.r + delta[l];
                    for m in -(l as i64)..=(l as i64) {
                        out.coeffs[idx(l, m)] = lam * f.coeffs[idx(l, m)];
                    }
                }
            }
            DtNRepr::Dense(mat) => {
                out.coeffs = mat.matvec(&f.coeffs);
            }
        }
        Ok(out)
    }

    /// (Lambda - Lambda_1) f, with Lambda_1 the identity-conductivity map.
    /// For diagonal maps the difference is formed from the stored deltas,
    /// never by subtracting two O(l) numbers.
    pub fn apply_delta(&self, f: &BoundaryField) -> Result<BoundaryField, ForwardError> {
        if f.lmax != self.lmax {
            return Err(ForwardError::DegreeMismatch {
                op: self.lmax,
                field: f.lmax,
            });
        }
        let mut out = BoundaryField::zero(self.lmax);
        match &self.repr {
            DtNRepr::Diagonal { delta } => {
                for l in 0..=self.lmax {
                    for m in -(l as i64)..=(l as i64) {
                        out.coeffs[idx(l, m)] = delta[l] * f.coeffs[idx(l, m)];
                    }
                }
            }
            DtNRepr::Dense(mat) => {
                out.coeffs = mat.matvec(&f.coeffs);
                for l in 0..=self.lmax {
                    let lam = l as f64 / self.r;
                    for m in -(l as i64)..=(l as i64) {
                        out.coeffs[idx(l, m)] -= lam * f.coeffs[idx(l, m)];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn as_dense(&self) -> CMat {
        match &self.repr {
            DtNRepr::Dense(m) => m.clone(),
            DtNRepr::Diagonal { delta } => {
                let n = coeff_count(self.lmax);
                let mut m = CMat::zeros(n, n);
                for l in 0..=self.lmax {
                    let lam = l as f64 / self.r + delta[l];
                    for mm in -(l as i64)..=(l as i64) {
                        let k = idx(l, mm);
                        m[(k, k)] = C64::new(lam, 0.0);
                    }
                }
                m
            }
        }
    }

    pub fn operator_norm(&self) -> f64 {
        match &self.repr {
            DtNRepr::Diagonal { delta } => delta
                .iter()
                .enumerate()
                .map(|(l, d)| (l as f64 / self.r + d).abs())
                .fold(0.0, f64::max),
            DtNRepr::Dense(m) => m.spectral_norm(),
        }
    }

    /// Invariant report: residual on constants, defect of the symmetric
    /// bilinear form, and the most negative eigenvalue of the symmetrized
    /// quadratic form (all scaled by the operator norm).
    pub fn validate(&self) -> DtnValidation {
        let dense = self.as_dense();
        let norm = dense.spectral_norm().max(1e-300);
        let n = dense.nrows;
        // Constants: first basis vector.
        let mut e0 = vec![C64::new(0.0, 0.0); n];
        e0[0] = C64::new(1.0, 0.0);
        let ce = dense.matvec(&e0);
        let constant_residual =
            ce.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / norm;
        // Bilinear symmetry: <L f, g> = <f, L g> with the real pairing is
        // equivalent to P L = (P L)^T where P is the parity flip
        // (l, m) -> (-1)^m (l, -m).
        let lmax = self.lmax;
        let mut pl = CMat::zeros(n, n);
        for l in 0..=lmax {
            for m in -(l as i64)..=(l as i64) {
                let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                for j in 0..n {
                    pl[(idx(l, m), j)] = sign * dense[(idx(l, -m), j)];
                }
            }
        }
        let sym_defect = pl.sub(&pl.transpose()).fro_norm() / norm / (n as f64).sqrt();
        // Quadratic form on real fields equals the Hermitian form of the
        // symmetrized operator; check its smallest eigenvalue.
        let herm = CMat::from_fn(n, n, |i, j| 0.5 * (dense[(i, j)] + dense[(j, i)].conj()));
        let ev = crate::linalg::hermitian_eigenvalues(&herm);
        let min_eig_scaled = ev[0] / norm;
        DtnValidation {
            constant_residual,
            sym_defect,
            min_eig_scaled,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DtnValidation {
    pub constant_residual: f64,
    pub sym_defect: f64,
    pub min_eig_scaled: f64,
}

impl DtnValidation {
    pub fn ok(&self, tol: f64) -> bool {
        self.constant_residual <= tol && self.sym_defect <= tol && self.min_eig_scaled >= -tol
    }
}

// ---------------------------------------------------------------------------
// Radial path: log-derivative (Riccati) integration per degree.
// ---------------------------------------------------------------------------

/// Inner edge of the radial integration; the regular solution behaves like
/// r^l there and the deviation variable starts at zero.
const R_EPS: f64 = 1e-6;

/// Radial forward solver: per-degree solutions of
/// (gamma r^2 u')' = l(l+1) gamma u with u regular at the origin,
/// integrated in the deviation variable z = r u'/u - l.
pub struct RadialForward {
    pub lmax: usize,
    pub r: f64,
    pub profile: RadialProfile,
    /// delta_l = lambda_l - l/r, formed without cancellation.
    pub delta: Vec<f64>,
    zsols: Vec<OdeSolution>,
    /// Cumulative integral of z/t over the solution mesh, per degree.
    cums: Vec<Vec<f64>>,
}

/// Assemble the radial DtN data by integrating, for each degree l,
/// z' = -z (2l + 1 + z)/r - (gamma'/gamma)(l + z), z(R_EPS) = 0,
/// so lambda_l = gamma(R) (l + z(R)) / R.
pub fn dtn_radial(
    profile: &RadialProfile,
    lmax: usize,
    r: f64,
) -> Result<RadialForward, ForwardError> {
    let cond = Conductivity::radial(profile.clone(), Domain::Ball { r });
    cond.check_ellipticity(1e-8, 64)?;
    let mut delta = Vec::with_capacity(lmax + 1);
    let mut zsols = Vec::with_capacity(lmax + 1);
    let mut cums = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        let lf = l as f64;
        let prof = profile.clone();
        let rhs = move |t: f64, z: &[f64]| {
            let p = prof.at(t);
            let g = 1.0 + p.gm1;
            let zl = z[0];
            vec![-zl * (2.0 * lf + 1.0 + zl) / t - (p.d1 / g) * (lf + zl)]
        };
        let sol = quad::dopri5(rhs, R_EPS, r, &[0.0], 1e-11, 1e-14)
            .map_err(|source| ForwardError::Ode { l, source })?;
        let z_end = sol.ys.last().unwrap()[0];
        let pr = profile.at(r);
        // delta = ((gamma(R)-1) l + gamma(R) z(R)) / R, all factors exact.
        delta.push((pr.gm1 * lf + (1.0 + pr.gm1) * z_end) / r);
        let cum = cumulative_z_over_t(&sol);
        zsols.push(sol);
        cums.push(cum);
    }
    Ok(RadialForward {
        lmax,
        r,
        profile: profile.clone(),
        delta,
        zsols,
        cums,
    })
}

/// Cumulative integral of z(t)/t over the accepted mesh of `sol`.
fn cumulative_z_over_t(sol: &OdeSolution) -> Vec<f64> {
    let n = sol.ts.len();
    let mut cum = vec![0.0; n];
    let (gx, gw) = quad::gauss_legendre(8);
    for i in 1..n {
        let (a, b) = (sol.ts[i - 1], sol.ts[i]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let t = mid + half * x;
            acc += w * sol.eval(t)[0] / t;
        }
        cum[i] = cum[i - 1] + half * acc;
    }
    cum
}

impl RadialForward {
    pub fn dtn(&self) -> DtNMap {
        DtNMap::from_deltas(self.delta.clone(), self.r)
    }

    fn cum_at(&self, l: usize, t: f64) -> f64 {
        let sol = &self.zsols[l];
        let cum = &self.cums[l];
        let n = sol.ts.len();
        if t <= sol.ts[0] {
            return 0.0;
        }
        if t >= sol.ts[n - 1] {
            return cum[n - 1];
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if sol.ts[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (gx, gw) = quad::gauss_legendre(8);
        let mid = 0.5 * (sol.ts[lo] + t);
        let half = 0.5 * (t - sol.ts[lo]);
        let mut acc = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let s = mid + half * x;
            acc += w * sol.eval(s)[0] / s;
        }
        cum[lo] + half * acc
    }

    /// u_l(r) / u_l(R) and its radial derivative for the regular solution.
    pub fn u_ratio(&self, l: usize, r: f64) -> (f64, f64) {
        let lf = l as f64;
        if r <= 0.0 {
            return if l == 0 {
                // Constant solution: ratio exp(-J(R)).
                ((-self.cum_at(0, self.r)).exp(), 0.0)
            } else {
                (0.0, 0.0)
            };
        }
        let j_r = self.cum_at(l, r);
        let j_end = self.cum_at(l, self.r);
        let ratio = (r / self.r).powi(l as i32) * (j_r - j_end).exp();
        let z = if r <= R_EPS {
            0.0
        } else {
            self.zsols[l].eval(r)[0]
        };
        let dr = ratio * (lf + z) / r;
        (ratio, dr)
    }

    /// Interior solution evaluator for boundary datum f.
    pub fn interior(&self, f: &BoundaryField) -> InteriorSolution<'_> {
        InteriorSolution::Radial {
            lmax: self.lmax,
            r: self.r,
            boundary: f.clone(),
            solver: self,
        }
    }
}

// ---------------------------------------------------------------------------
// Galerkin path.
// ---------------------------------------------------------------------------

/// Values of all Legendre polynomials P_0..P_{n-1} and derivatives at x.
fn legendre_all(n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n];
    let mut d = vec![0.0; n];
    if n == 0 {
        return (p, d);
    }
    p[0] = 1.0;
    if n > 1 {
        p[1] = x;
        d[1] = 1.0;
    }
    for k in 2..n {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
        d[k] = d[k - 2] + (2.0 * kf - 1.0) * p[k - 1];
    }
    (p, d)
}

/// Interior radial shape functions on the ball:
/// v_{j,l}(r) = (r/R)^l (1 - r/R) P_j(2 r/R - 1), j = 0..nr-1.
/// Returns (values, radial derivatives).
fn ball_radial_basis(l: usize, nr: usize, r: f64, rad: f64) -> (Vec<f64>, Vec<f64>) {
    let rho = r / rad;
    let s = 2.0 * rho - 1.0;
    let (p, dp) = legendre_all(nr, s);
    let pow = rho.powi(l as i32);
    let dpow = if l == 0 {
        0.0
    } else {
        l as f64 * rho.powi(l as i32 - 1)
    };
    let mut v = vec![0.0; nr];
    let mut dv = vec![0.0; nr];
    for j in 0..nr {
        v[j] = pow * (1.0 - rho) * p[j];
        // d/dr = (1/R) d/drho
        dv[j] = (dpow * (1.0 - rho) * p[j] - pow * p[j] + pow * (1.0 - rho) * dp[j] * 2.0) / rad;
    }
    (v, dv)
}

/// Harmonic lift b_l(r) = (r/R)^l and derivative.
fn ball_lift(l: usize, r: f64, rad: f64) -> (f64, f64) {
    let rho = r / rad;
    let pow = rho.powi(l as i32);
    let dpow = if l == 0 {
        0.0
    } else {
        l as f64 * rho.powi(l as i32 - 1) / rad
    };
    (pow, dpow)
}

/// Galerkin forward solver on the ball. Radial conductivities decouple per
/// degree; general ones couple all (l, m) and are assembled densely.
pub struct GeneralForward {
    pub lmax: usize,
    pub nr: usize,
    pub r: f64,
    pub dtn: DtNMap,
    /// Condition indicator of the stiffness factorization.
    pub stiffness_condition: f64,
    cond: Conductivity,
    kind: GalerkinKind,
}

enum GalerkinKind {
    /// Per-degree correction coefficients for the unit lift datum.
    RadialBlocks { corr: Vec<Vec<f64>> },
    /// Full coupling: corrections per boundary-basis column, each of
    /// length nr * (lmax+1)^2 packed as j * ncoef + idx(l, m).
    Dense { corr_cols: Vec<Vec<C64>> },
}

/// Galerkin DtN on the ball of radius r.
pub fn dtn_general(
    cond: &Conductivity,
    lmax: usize,
    nr: usize,
    r: f64,
) -> Result<GeneralForward, ForwardError> {
    cond.check_ellipticity(1e-8, 64)?;
    match cond {
        Conductivity::Radial { profile, .. } => dtn_general_radial(cond, profile, lmax, nr, r),
        Conductivity::General { .. } => dtn_general_full(cond, lmax, nr, r),
    }
}

fn dtn_general_radial(
    cond: &Conductivity,
    profile: &RadialProfile,
    lmax: usize,
    nr: usize,
    r: f64,
) -> Result<GeneralForward, ForwardError> {
    let nq = (2 * nr + 2 * lmax + 16).max(48);
    let (rq, wq) = quad::gauss_legendre_on(nq, 0.0, r);
    let mut delta = Vec::with_capacity(lmax + 1);
    let mut corr_all = Vec::with_capacity(lmax + 1);
    let mut worst_cond = 1.0f64;
    for l in 0..=lmax {
        let lf = l as f64;
        let mut k_full = vec![vec![0.0f64; nr]; nr];
        let mut s_m1 = vec![0.0f64; nr];
        let mut d_bb_m1 = 0.0f64;
        for (&t, &w) in rq.iter().zip(&wq) {
            let p = profile.at(t);
            let gamma = 1.0 + p.gm1;
            let (v, dv) = ball_radial_basis(l, nr, t, r);
            let (b, db) = ball_lift(l, t, r);
            let w_scaled = w / (r * r);
            let ang = lf * (lf + 1.0);
            for j in 0..nr {
                for jp in j..nr {
                    let e = gamma * (dv[j] * dv[jp] * t * t + ang * v[j] * v[jp]) * w_scaled;
                    k_full[j][jp] += e;
                }
                // gamma - 1 weighted coupling to the harmonic lift: the
                // identity part vanishes identically.
                s_m1[j] += p.gm1 * (db * dv[j] * t * t + ang * b * v[j]) * w_scaled;
            }
            d_bb_m1 += p.gm1 * (db * db * t * t + ang * b * b) * w_scaled;
        }
        for j in 0..nr {
            for jp in 0..j {
                k_full[j][jp] = k_full[jp][j];
            }
        }
        // Jacobi scaling for conditioning, then a real solve through CMat.
        let scale: Vec<f64> = (0..nr).map(|j| 1.0 / k_full[j][j].abs().sqrt()).collect();
        let kmat = CMat::from_fn(nr, nr, |i, j| {
            C64::new(k_full[i][j] * scale[i] * scale[j], 0.0)
        });
        let rhs: Vec<C64> = (0..nr).map(|j| C64::new(-s_m1[j] * scale[j], 0.0)).collect();
        let lu = kmat.lu()?;
        worst_cond = worst_cond.max(lu.cond_estimate);
        let c_scaled = lu.solve(&rhs);
        let c: Vec<f64> = (0..nr).map(|j| c_scaled[j].re * scale[j]).collect();
        // delta_l = a_{gamma-1}(b, b) + sum_j c_j a_{gamma-1}(b, v_j)
        //         = a(u, b) - l/R with u the Galerkin solution.
        let d = d_bb_m1 + c.iter().zip(&s_m1).map(|(cj, sj)| cj * sj).sum::<f64>();
        delta.push(d);
        corr_all.push(c);
    }
    Ok(GeneralForward {
        lmax,
        nr,
        r,
        dtn: DtNMap::from_deltas(delta, r),
        stiffness_condition: worst_cond,
        cond: cond.clone(),
        kind: GalerkinKind::RadialBlocks { corr: corr_all },
    })
}

fn dtn_general_full(
    cond: &Conductivity,
    lmax: usize,
    nr: usize,
    r: f64,
) -> Result<GeneralForward, ForwardError> {
    let grid = SphericalGrid::new(lmax, r);
    let ncoef = grid.num_coeffs();
    let nn = grid.num_nodes();
    let n_int = nr * ncoef;
    let nq = (2 * nr + 2 * lmax + 12).max(32);
    let (rq, wq) = quad::gauss_legendre_on(nq, 0.0, r);
    let yv = grid.unit_value_matrix();
    let gm = grid.unit_gradient_matrices();
    // dsigma weights on the unit sphere.
    let wsig: Vec<f64> = grid.weights().iter().map(|w| w / (r * r)).collect();

    let mut a_int = CMat::zeros(n_int, n_int);
    let mut rhs_cols = CMat::zeros(n_int, ncoef);
    let mut d_liftlift = CMat::zeros(ncoef, ncoef);

    // Per-degree angular eigenvalue of the surface Laplacian.
    let ang: Vec<f64> = (0..ncoef)
        .map(|k| {
            let l = (k as f64).sqrt() as usize;
            (l * (l + 1)) as f64
        })
        .collect();
    let deg: Vec<usize> = (0..ncoef).map(|k| (k as f64).sqrt() as usize).collect();

    for (&t, &wr) in rq.iter().zip(&wq) {
        // gamma - 1 on the sphere of radius t.
        let g_node: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&p| {
                let s = t / r;
                cond.value_minus_one([p[0] * s, p[1] * s, p[2] * s])
            })
            .collect();
        // Angular Gram matrices weighted by gamma - 1.
        let mut g0 = CMat::zeros(ncoef, ncoef);
        let mut g1 = CMat::zeros(ncoef, ncoef);
        for k in 0..nn {
            let wgt = g_node[k] * wsig[k];
            if wgt == 0.0 {
                continue;
            }
            let yrow = yv.row(k);
            for i in 0..ncoef {
                let yi = yrow[i].conj() * wgt;
                if yi.norm_sqr() == 0.0 {
                    continue;
                }
                let r0 = g0.row_mut(i);
                for (j, yj) in yrow.iter().enumerate() {
                    r0[j] += yi * yj;
                }
            }
            for axis in 0..3 {
                let drow = gm[axis].row(k);
                for i in 0..ncoef {
                    let di = drow[i].conj() * wgt;
                    if di.norm_sqr() == 0.0 {
                        continue;
                    }
                    let r1 = g1.row_mut(i);
                    for (j, dj) in drow.iter().enumerate() {
                        r1[j] += di * dj;
                    }
                }
            }
        }
        // Radial factors for all degrees at this node.
        let mut v_all = vec![Vec::new(); lmax + 1];
        let mut dv_all = vec![Vec::new(); lmax + 1];
        let mut b_all = vec![0.0; lmax + 1];
        let mut db_all = vec![0.0; lmax + 1];
        for l in 0..=lmax {
            let (v, dv) = ball_radial_basis(l, nr, t, r);
            let (b, db) = ball_lift(l, t, r);
            v_all[l] = v;
            dv_all[l] = dv;
            b_all[l] = b;
            db_all[l] = db;
        }
        let wrr = wr / (r * r);
        // Interior-interior: identity part is angular-diagonal, gamma-1 part
        // couples through the Grams.
        for j2 in 0..nr {
            for k2 in 0..ncoef {
                let row = j2 * ncoef + k2;
                let l2 = deg[k2];
                let (v2, dv2) = (v_all[l2][j2], dv_all[l2][j2]);
                for j1 in 0..nr {
                    for k1 in 0..ncoef {
                        let l1 = deg[k1];
                        let (v1, dv1) = (v_all[l1][j1], dv_all[l1][j1]);
                        let grad_k = dv1 * dv2 * t * t;
                        let mut e = g0[(k2, k1)] * grad_k + g1[(k2, k1)] * (v1 * v2);
                        if k1 == k2 {
                            e += C64::new(grad_k + ang[k1] * v1 * v2, 0.0);
                        }
                        a_int[(row, j1 * ncoef + k1)] += wrr * e;
                    }
                }
            }
        }
        // Lift couplings (gamma - 1 weighted only; identity part vanishes
        // against interior test functions and is diagonal lift-to-lift).
        for j2 in 0..nr {
            for k2 in 0..ncoef {
                let row = j2 * ncoef + k2;
                let l2 = deg[k2];
                let (v2, dv2) = (v_all[l2][j2], dv_all[l2][j2]);
                for k1 in 0..ncoef {
                    let l1 = deg[k1];
                    let e = g0[(k2, k1)] * (db_all[l1] * dv2 * t * t)
                        + g1[(k2, k1)] * (b_all[l1] * v2);
                    rhs_cols[(row, k1)] -= wrr * e;
                }
            }
        }
        for k2 in 0..ncoef {
            let l2 = deg[k2];
            for k1 in 0..ncoef {
                let l1 = deg[k1];
                let e = g0[(k2, k1)] * (db_all[l1] * db_all[l2] * t * t)
                    + g1[(k2, k1)] * (b_all[l1] * b_all[l2]);
                d_liftlift[(k2, k1)] += wrr * e;
            }
        }
    }

    let lu = a_int.lu()?;
    let corr = lu.solve_mat(&rhs_cols);

    // DtN: diag(l/R) + lift-lift(gamma-1) + correction contribution.
    // a_{gamma-1}(v_{j,k}, lift_{k2}) is the conjugate transpose of the rhs
    // assembly with opposite sign.
    let mut dtn_mat = CMat::zeros(ncoef, ncoef);
    for k in 0..ncoef {
        dtn_mat[(k, k)] = C64::new(deg[k] as f64 / r, 0.0);
    }
    dtn_mat = dtn_mat.add(&d_liftlift);
    // Add sum_j corr[(j,k),col] * a_{m1}(v_{j,k}, lift_{row}).
    // a_{m1}(v, lift_row) = conj(a_{m1}(lift_row, v)) = conj(-rhs[(row-index), ...]).
    let corr_contrib = rhs_cols.adjoint().matmul(&corr).scale(C64::new(-1.0, 0.0));
    dtn_mat = dtn_mat.add(&corr_contrib);

    let corr_cols: Vec<Vec<C64>> = (0..ncoef)
        .map(|col| (0..n_int).map(|i| corr[(i, col)]).collect())
        .collect();

    Ok(GeneralForward {
        lmax,
        nr,
        r,
        dtn: DtNMap::from_dense(dtn_mat, r),
        stiffness_condition: lu.cond_estimate,
        cond: cond.clone(),
        kind: GalerkinKind::Dense { corr_cols },
    })
}

impl GeneralForward {
    pub fn dtn(&self) -> DtNMap {
        self.dtn.clone()
    }

    /// Interior evaluator for boundary datum f.
    pub fn interior(&self, f: &BoundaryField) -> InteriorSolution<'_> {
        let ncoef = coeff_count(self.lmax);
        let mut corr = vec![C64::new(0.0, 0.0); self.nr * ncoef];
        match &self.kind {
            GalerkinKind::RadialBlocks { corr: per_l } => {
                for l in 0..=self.lmax {
                    for m in -(l as i64)..=(l as i64) {
                        let fc = f.coeffs[idx(l, m)];
                        for j in 0..self.nr {
                            corr[j * ncoef + idx(l, m)] += fc * per_l[l][j];
                        }
                    }
                }
            }
            GalerkinKind::Dense { corr_cols } => {
                for (col, cc) in corr_cols.iter().enumerate() {
                    let fc = f.coeffs[col];
                    if fc.norm_sqr() == 0.0 {
                        continue;
                    }
                    for (i, v) in cc.iter().enumerate() {
                        corr[i] += fc * v;
                    }
                }
            }
        }
        InteriorSolution::Galerkin {
            lmax: self.lmax,
            nr: self.nr,
            r: self.r,
            boundary: f.clone(),
            corr,
        }
    }
}

// ---------------------------------------------------------------------------
// Interior solution evaluators.
// ---------------------------------------------------------------------------

/// Pointwise evaluator for interior solutions u and grad u.
pub enum InteriorSolution<'a> {
    Radial {
        lmax: usize,
        r: f64,
        boundary: BoundaryField,
        solver: &'a RadialForward,
    },
    Galerkin {
        lmax: usize,
        nr: usize,
        r: f64,
        boundary: BoundaryField,
        /// Interior correction coefficients packed j * ncoef + idx(l, m).
        corr: Vec<C64>,
    },
}

impl<'a> InteriorSolution<'a> {
    pub fn eval(&self, x: [f64; 3]) -> C64 {
        self.eval_with_grad(x).0
    }

    pub fn grad(&self, x: [f64; 3]) -> [C64; 3] {
        self.eval_with_grad(x).1
    }

    pub fn eval_with_grad(&self, x: [f64; 3]) -> (C64, [C64; 3]) {
        let rr = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let dir = if rr < 1e-12 { [0.0, 0.0, 1.0] } else { x };
        let rhat = {
            let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
            [dir[0] / n, dir[1] / n, dir[2] / n]
        };
        match self {
            InteriorSolution::Radial {
                lmax,
                r,
                boundary,
                solver,
            } => {
                let fwd = *solver;
                let (yv, yg) = unit_harmonics_with_grad(*lmax, dir);
                let mut val = C64::new(0.0, 0.0);
                let mut grad = [C64::new(0.0, 0.0); 3];
                for l in 0..=*lmax {
                    let (f, df) = fwd.u_ratio(l, rr);
                    if f == 0.0 && df == 0.0 {
                        continue;
                    }
                    let f_over_r = if rr < 1e-12 { 0.0 } else { f / rr };
                    for m in -(l as i64)..=(l as i64) {
                        let c = boundary.coeffs[idx(l, m)] / *r;
                        if c.norm_sqr() == 0.0 {
                            continue;
                        }
                        let y = yv[idx(l, m)];
                        val += c * f * y;
                        for a in 0..3 {
                            grad[a] += c * (df * y * rhat[a] + f_over_r * yg[idx(l, m)][a]);
                        }
                    }
                }
                (val, grad)
            }
            InteriorSolution::Galerkin {
                lmax,
                nr,
                r,
                boundary,
                corr,
            } => {
                let ncoef = coeff_count(*lmax);
                let (yv, yg) = unit_harmonics_with_grad(*lmax, dir);
                let mut val = C64::new(0.0, 0.0);
                let mut grad = [C64::new(0.0, 0.0); 3];
                for l in 0..=*lmax {
                    let (v, dv) = ball_radial_basis(l, *nr, rr, *r);
                    let (b, db) = ball_lift(l, rr, *r);
                    for m in -(l as i64)..=(l as i64) {
                        let k = idx(l, m);
                        // Radial profile for this (l, m): lift * datum + corrections.
                        let mut fr = boundary.coeffs[k] * b;
                        let mut dfr = boundary.coeffs[k] * db;
                        for j in 0..*nr {
                            let cc = corr[j * ncoef + k];
                            fr += cc * v[j];
                            dfr += cc * dv[j];
                        }
                        if fr.norm_sqr() == 0.0 && dfr.norm_sqr() == 0.0 {
                            continue;
                        }
                        let y = yv[k];
                        let fr_over_r = if rr < 1e-12 {
                            C64::new(0.0, 0.0)
                        } else {
                            fr / rr
                        };
                        val += fr * y / *r;
                        for a in 0..3 {
                            grad[a] +=
                                (dfr * y * rhat[a] + fr_over_r * yg[k][a]) / *r;
                        }
                    }
                }
                (val, grad)
            }
        }
    }
}

/// Dirichlet energy integral gamma |grad u|^2 over the ball by tensor
/// quadrature.
pub fn dirichlet_energy(
    cond: &Conductivity,
    sol: &InteriorSolution,
    vq: &crate::sphere::VolumeQuadrature,
) -> f64 {
    vq.points
        .iter()
        .zip(&vq.weights)
        .map(|(&p, &w)| {
            let g = sol.grad(p);
            let gn = g[0].norm_sqr() + g[1].norm_sqr() + g[2].norm_sqr();
            w * cond.value(p) * gn
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Annulus (shell) DtN blocks.
// ---------------------------------------------------------------------------

/// 2x2 block DtN operator of a spherical shell r1 < |x| < r2, acting on
/// packed coefficients of the inner and outer boundary spheres. The sign
/// convention is the interior-energy one: the quadratic form
/// <block (f1, f2), (f1, f2)> equals the Dirichlet energy of the annulus
/// solution, so the map is positive semidefinite.
#[derive(Debug, Clone)]
pub struct AnnulusDtN {
    pub lmax: usize,
    pub r1: f64,
    pub r2: f64,
    pub repr: AnnulusRepr,
}

#[derive(Debug, Clone)]
pub enum AnnulusRepr {
    /// Per-degree scalars (b11, b12, b21, b22) in coefficient normalization.
    Diagonal {
        b11: Vec<f64>,
        b12: Vec<f64>,
        b21: Vec<f64>,
        b22: Vec<f64>,
        /// Set when the blocks are the closed-form gamma = 1 ones.
        identity_exact: bool,
    },
    Dense {
        b11: CMat,
        b12: CMat,
        b21: CMat,
        b22: CMat,
    },
}

impl AnnulusDtN {
    /// Closed-form blocks for gamma identically 1, per degree:
    /// harmonic two-point solves alpha r^l + beta r^{-l-1}.
    pub fn identity_blocks(lmax: usize, r1: f64, r2: f64) -> Self {
        let mut b11 = Vec::with_capacity(lmax + 1);
        let mut b12 = Vec::with_capacity(lmax + 1);
        let mut b21 = Vec::with_capacity(lmax + 1);
        let mut b22 = Vec::with_capacity(lmax + 1);
        for l in 0..=lmax {
            let lf = l as f64;
            let t = (r1 / r2).powi(2 * l as i32 + 1);
            let one_mt = 1.0 - t;
            // Function-level values, then coefficient normalization for the
            // off-diagonal blocks (inner basis Y/r1, outer basis Y/r2).
            let f11 = (lf + 1.0 + lf * t) / (r1 * one_mt);
            let f22 = (lf + (lf + 1.0) * t) / (r2 * one_mt);
            let f21 = -(2.0 * lf + 1.0) * (r1 / r2).powi(l as i32 + 1) / (r2 * one_mt);
            let f12 = -(2.0 * lf + 1.0) * (r1 / r2).powi(l as i32) / (r1 * one_mt);
            b11.push(f11);
            b22.push(f22);
            b21.push(f21 * r2 / r1);
            b12.push(f12 * r1 / r2);
        }
        AnnulusDtN {
            lmax,
            r1,
            r2,
            repr: AnnulusRepr::Diagonal {
                b11,
                b12,
                b21,
                b22,
                identity_exact: true,
            },
        }
    }

    /// Per-degree 1-D Galerkin blocks for a radial conductivity on the shell.
    pub fn radial_blocks(
        profile: &RadialProfile,
        lmax: usize,
        nr: usize,
        r1: f64,
        r2: f64,
    ) -> Result<Self, ForwardError> {
        let nq = (2 * nr + 2 * lmax + 16).max(48);
        let (rq, wq) = quad::gauss_legendre_on(nq, r1, r2);
        let mut out = [
            Vec::with_capacity(lmax + 1),
            Vec::with_capacity(lmax + 1),
            Vec::with_capacity(lmax + 1),
            Vec::with_capacity(lmax + 1),
        ];
        for l in 0..=lmax {
            let lf = l as f64;
            let ang = lf * (lf + 1.0);
            let mut k = vec![vec![0.0f64; nr]; nr];
            let mut s_in = vec![0.0f64; nr];
            let mut s_out = vec![0.0f64; nr];
            let mut a_ii = 0.0;
            let mut a_io = 0.0;
            let mut a_oo = 0.0;
            for (&t, &w) in rq.iter().zip(&wq) {
                let gamma = profile.value(t);
                let (v, dv) = shell_radial_basis(nr, t, r1, r2);
                let (hi, dhi) = shell_lift_inner(t, r1, r2);
                let (ho, dho) = shell_lift_outer(t, r1, r2);
                let w2 = w * gamma;
                for j in 0..nr {
                    for jp in j..nr {
                        k[j][jp] += w2 * (dv[j] * dv[jp] * t * t + ang * v[j] * v[jp]);
                    }
                    s_in[j] += w2 * (dhi * dv[j] * t * t + ang * hi * v[j]);
                    s_out[j] += w2 * (dho * dv[j] * t * t + ang * ho * v[j]);
                }
                a_ii += w2 * (dhi * dhi * t * t + ang * hi * hi);
                a_io += w2 * (dhi * dho * t * t + ang * hi * ho);
                a_oo += w2 * (dho * dho * t * t + ang * ho * ho);
            }
            for j in 0..nr {
                for jp in 0..j {
                    k[j][jp] = k[jp][j];
                }
            }
            let kmat = CMat::from_fn(nr, nr, |i, j| C64::new(k[i][j], 0.0));
            let lu = kmat.lu()?;
            let ci = lu.solve(&s_in.iter().map(|&s| C64::new(-s, 0.0)).collect::<Vec<_>>());
            let co = lu.solve(&s_out.iter().map(|&s| C64::new(-s, 0.0)).collect::<Vec<_>>());
            // Function-level energies a(u_col, lift_row); the basis lifts
            // carry values 1 on their sphere.
            let e_ii = a_ii + ci.iter().zip(&s_in).map(|(c, s)| c.re * s).sum::<f64>();
            let e_oi = a_io + ci.iter().zip(&s_out).map(|(c, s)| c.re * s).sum::<f64>();
            let e_io = a_io + co.iter().zip(&s_in).map(|(c, s)| c.re * s).sum::<f64>();
            let e_oo = a_oo + co.iter().zip(&s_out).map(|(c, s)| c.re * s).sum::<f64>();
            // Coefficient normalization: inner datum/test 1/r1, outer 1/r2;
            // energies of function-level solutions scale accordingly.
            out[0].push(e_ii / (r1 * r1));
            out[1].push(e_io / (r1 * r2));
            out[2].push(e_oi / (r1 * r2));
            out[3].push(e_oo / (r2 * r2));
        }
        let [b11, b12, b21, b22] = out;
        Ok(AnnulusDtN {
            lmax,
            r1,
            r2,
            repr: AnnulusRepr::Diagonal {
                b11,
                b12,
                b21,
                b22,
                identity_exact: false,
            },
        })
    }

    pub fn block_diag(&self) -> Option<(&[f64], &[f64], &[f64], &[f64])> {
        match &self.repr {
            AnnulusRepr::Diagonal {
                b11, b12, b21, b22, ..
            } => Some((b11, b12, b21, b22)),
            AnnulusRepr::Dense { .. } => None,
        }
    }

    /// Apply the 2x2 block operator to a pair of boundary fields.
    pub fn apply(
        &self,
        f1: &BoundaryField,
        f2: &BoundaryField,
    ) -> (BoundaryField, BoundaryField) {
        let mut g1 = BoundaryField::zero(self.lmax);
        let mut g2 = BoundaryField::zero(self.lmax);
        match &self.repr {
            AnnulusRepr::Diagonal {
                b11, b12, b21, b22, ..
            } => {
                for l in 0..=self.lmax {
                    for m in -(l as i64)..=(l as i64) {
                        let k = idx(l, m);
                        g1.coeffs[k] = b11[l] * f1.coeffs[k] + b12[l] * f2.coeffs[k];
                        g2.coeffs[k] = b21[l] * f1.coeffs[k] + b22[l] * f2.coeffs[k];
                    }
                }
            }
            AnnulusRepr::Dense { b11, b12, b21, b22 } => {
                let a = b11.matvec(&f1.coeffs);
                let b = b12.matvec(&f2.coeffs);
                let c = b21.matvec(&f1.coeffs);
                let d = b22.matvec(&f2.coeffs);
                for i in 0..g1.coeffs.len() {
                    g1.coeffs[i] = a[i] + b[i];
                    g2.coeffs[i] = c[i] + d[i];
                }
            }
        }
        (g1, g2)
    }
}

/// Interior shell shape functions (r2 - r)(r - r1) P_j(mapped), with
/// derivatives.
fn shell_radial_basis(nr: usize, r: f64, r1: f64, r2: f64) -> (Vec<f64>, Vec<f64>) {
    let s = 2.0 * (r - r1) / (r2 - r1) - 1.0;
    let ds = 2.0 / (r2 - r1);
    let (p, dp) = legendre_all(nr, s);
    let bub = (r2 - r) * (r - r1);
    let dbub = r1 + r2 - 2.0 * r;
    let mut v = vec![0.0; nr];
    let mut dv = vec![0.0; nr];
    for j in 0..nr {
        v[j] = bub * p[j];
        dv[j] = dbub * p[j] + bub * dp[j] * ds;
    }
    (v, dv)
}

/// Cubic Hermite lift equal to 1 at r1, 0 at r2, zero slope at both ends.
fn shell_lift_inner(r: f64, r1: f64, r2: f64) -> (f64, f64) {
    let t = (r - r1) / (r2 - r1);
    let h = 2.0 * t * t * t - 3.0 * t * t + 1.0;
    let dh = (6.0 * t * t - 6.0 * t) / (r2 - r1);
    (h, dh)
}

fn shell_lift_outer(r: f64, r1: f64, r2: f64) -> (f64, f64) {
    let (h, dh) = shell_lift_inner(r, r1, r2);
    (1.0 - h, -dh)
}

/// Per-degree two-point shell solves by direct linear ODE shooting;
/// used as an oracle against the Galerkin blocks.
pub fn shell_two_point_oracle(
    profile: &RadialProfile,
    l: usize,
    r1: f64,
    r2: f64,
) -> Result<[f64; 4], ForwardError> {
    let lf = l as f64;
    let rhs = |t: f64, y: &[f64]| {
        let p = profile.at(t);
        let g = 1.0 + p.gm1;
        // u'' = l(l+1) u / r^2 - (2/r + gamma'/gamma) u'
        vec![
            y[1],
            lf * (lf + 1.0) * y[0] / (t * t) - (2.0 / t + p.d1 / g) * y[1],
        ]
    };
    let a = quad::dopri5(rhs, r1, r2, &[1.0, 0.0], 1e-12, 1e-14)
        .map_err(|source| ForwardError::Ode { l, source })?;
    let b = quad::dopri5(rhs, r1, r2, &[0.0, 1.0], 1e-12, 1e-14)
        .map_err(|source| ForwardError::Ode { l, source })?;
    let (a_end, b_end) = (a.ys.last().unwrap(), b.ys.last().unwrap());
    // Inner datum: w(r1) = 1, w(r2) = 0.
    let c = -a_end[0] / b_end[0];
    let w_in_d1 = c; // w'(r1)
    let w_in_d2 = a_end[1] + c * b_end[1];
    // Outer datum: w(r1) = 0, w(r2) = 1.
    let d = 1.0 / b_end[0];
    let w_out_d1 = d;
    let w_out_d2 = d * b_end[1];
    let g1 = profile.value(r1);
    let g2 = profile.value(r2);
    // Coefficient-normalized blocks.
    Ok([
        -g1 * w_in_d1,                 // b11
        -g1 * w_out_d1 * r1 / r2,      // b12
        g2 * w_in_d2 * r2 / r1,        // b21
        g2 * w_out_d2,                 // b22
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dtn_radial_identity_gives_l_over_r() {
        let fwd = dtn_radial(&RadialProfile::one(), 16, 1.0).unwrap();
        for l in 0..=16usize {
            let lam = fwd.dtn().eigenvalue(l).unwrap();
            assert_abs_diff_eq!(lam, l as f64, epsilon = 1e-12 * (l as f64).max(1.0));
            assert_eq!(fwd.delta[l], 0.0, "identity deltas must be exactly zero");
        }
    }

    #[test]
    fn dtn_radial_constant_scaling() {
        let c = 2.7;
        let r = 1.3;
        let fwd = dtn_radial(&RadialProfile::constant(c), 12, r).unwrap();
        for l in 0..=12usize {
            let lam = fwd.dtn().eigenvalue(l).unwrap();
            let expected = c * l as f64 / r;
            assert!(
                (lam - expected).abs() <= 1e-10 * expected.max(1.0),
                "l={l}: {lam} vs {expected}"
            );
        }
    }

    #[test]
    fn dtn_radial_interior_harmonic() {
        // gamma = 1: u = (r/R)^l Y_lm at interior points.
        let fwd = dtn_radial(&RadialProfile::one(), 8, 1.0).unwrap();
        let f = BoundaryField::unit(8, 3, 1);
        let sol = fwd.interior(&f);
        for &x in &[[0.3f64, 0.2, -0.4], [0.0, 0.0, 0.5], [-0.6, 0.1, 0.2]] {
            let rr = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let y = crate::sphere::unit_harmonics(8, x);
            let expected = rr.powi(3) * y[idx(3, 1)];
            let got = sol.eval(x);
            assert!((got - expected).norm() < 1e-8, "{got} vs {expected}");
        }
    }

    #[test]
    fn galerkin_radial_matches_identity_exactly() {
        let cond = Conductivity::radial(RadialProfile::one(), Domain::Ball { r: 1.0 });
        let fwd = dtn_general(&cond, 16, 12, 1.0).unwrap();
        for l in 0..=16usize {
            let lam = fwd.dtn.eigenvalue(l).unwrap();
            assert!(
                (lam - l as f64).abs() <= 1e-12 * (l as f64).max(1.0),
                "l={l}: {lam}"
            );
        }
    }

    #[test]
    fn galerkin_radial_matches_riccati() {
        let prof = RadialProfile::gaussian(0.3, 0.4, 0.0);
        let r = 1.0;
        let fwd_ode = dtn_radial(&prof, 10, r).unwrap();
        let cond = Conductivity::radial(prof, Domain::Ball { r });
        let fwd_gal = dtn_general(&cond, 10, 20, r).unwrap();
        for l in 0..=10usize {
            let a = fwd_ode.dtn().eigenvalue(l).unwrap();
            let b = fwd_gal.dtn.eigenvalue(l).unwrap();
            assert!(
                (a - b).abs() <= 1e-6 * a.abs().max(1.0),
                "l={l}: riccati {a} vs galerkin {b}"
            );
        }
    }

    #[test]
    fn annulus_identity_closed_form_l0() {
        let ann = AnnulusDtN::identity_blocks(4, 1.0, 2.0);
        let (b11, _, _, _) = ann.block_diag().unwrap();
        assert_abs_diff_eq!(b11[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn annulus_identity_matches_two_point_oracle() {
        let prof = RadialProfile::one();
        let ann = AnnulusDtN::identity_blocks(8, 1.0, 2.0);
        let (b11, b12, b21, b22) = ann.block_diag().unwrap();
        for l in 0..=8usize {
            let o = shell_two_point_oracle(&prof, l, 1.0, 2.0).unwrap();
            assert!((b11[l] - o[0]).abs() < 1e-8 * o[0].abs().max(1.0), "b11 l={l}");
            assert!((b12[l] - o[1]).abs() < 1e-8 * o[1].abs().max(1.0), "b12 l={l}");
            assert!((b21[l] - o[2]).abs() < 1e-8 * o[2].abs().max(1.0), "b21 l={l}");
            assert!((b22[l] - o[3]).abs() < 1e-8 * o[3].abs().max(1.0), "b22 l={l}");
        }
    }

    #[test]
    fn annulus_radial_galerkin_matches_oracle() {
        let prof = RadialProfile::gaussian(0.25, 0.5, 1.4);
        let ann = AnnulusDtN::radial_blocks(&prof, 8, 20, 1.0, 2.0).unwrap();
        let (b11, b12, b21, b22) = ann.block_diag().unwrap();
        for l in 0..=8usize {
            let o = shell_two_point_oracle(&prof, l, 1.0, 2.0).unwrap();
            for (got, want, name) in [
                (b11[l], o[0], "b11"),
                (b12[l], o[1], "b12"),
                (b21[l], o[2], "b21"),
                (b22[l], o[3], "b22"),
            ] {
                assert!(
                    (got - want).abs() <= 1e-8 * want.abs().max(1.0),
                    "{name} l={l}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn annulus_blocks_are_reciprocal() {
        let prof = RadialProfile::gaussian(0.25, 0.5, 1.4);
        let ann = AnnulusDtN::radial_blocks(&prof, 6, 16, 1.0, 2.0).unwrap();
        let (_, b12, b21, _) = ann.block_diag().unwrap();
        for l in 0..=6usize {
            assert!(
                (b12[l] - b21[l]).abs() <= 1e-8 * b12[l].abs().max(1e-10),
                "l={l}: {} vs {}",
                b12[l],
                b21[l]
            );
        }
    }
}
