use calderon::conductivity::RadialProfile;
use calderon::linalg::{CMat, C64};
use calderon::quad;

// Jacobi P_n^{(a,b)} values and derivatives at x for n = 0..nr-1.
fn jacobi_all(nr: usize, a: f64, b: f64, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; nr];
    let mut d = vec![0.0; nr];
    if nr == 0 { return (p, d); }
    p[0] = 1.0;
    if nr > 1 {
        p[1] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
        d[1] = 0.5 * (a + b + 2.0);
    }
    for n in 2..nr {
        let nf = n as f64;
        let c1 = 2.0 * nf * (nf + a + b) * (2.0 * nf + a + b - 2.0);
        let c2 = (2.0 * nf + a + b - 1.0) * (a * a - b * b);
        let c3 = (2.0 * nf + a + b - 1.0) * (2.0 * nf + a + b) * (2.0 * nf + a + b - 2.0);
        let c4 = 2.0 * (nf + a - 1.0) * (nf + b - 1.0) * (2.0 * nf + a + b);
        p[n] = ((c2 + c3 * x) * p[n - 1] - c4 * p[n - 2]) / c1;
        d[n] = ((c2 + c3 * x) * d[n - 1] + c3 * p[n - 1] - c4 * d[n - 2]) / c1;
    }
    (p, d)
}

fn galerkin(prof: &RadialProfile, l: usize, nr: usize, rad: f64) -> f64 {
    let lf = l as f64;
    let ang = lf * (lf + 1.0);
    let (pw, beta) = if l == 0 { (0i32, 0.0) } else { (1, 2.0) };
    let nq = 4 * nr + 80;
    let (rq, wq) = quad::gauss_legendre_on(nq, 0.0, rad);
    // normalize basis numerically to unit weighted mass
    let mut mass = vec![0.0f64; nr];
    for (&t, &w) in rq.iter().zip(&wq) {
        let rho = t / rad;
        let (p, _) = jacobi_all(nr, 2.0, beta, 2.0 * rho - 1.0);
        for j in 0..nr {
            let v = rho.powi(pw) * (1.0 - rho) * p[j];
            mass[j] += w * v * v;
        }
    }
    let nrm: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut k = vec![vec![0.0f64; nr]; nr];
    let mut s_m1 = vec![0.0f64; nr];
    let mut d_bb = 0.0;
    for (&t, &w) in rq.iter().zip(&wq) {
        let p = prof.at(t);
        let g = 1.0 + p.gm1;
        let rho = t / rad;
        let (pj, dj) = jacobi_all(nr, 2.0, beta, 2.0 * rho - 1.0);
        let pow = rho.powi(pw);
        let dpow = if pw == 0 { 0.0 } else { 1.0 };
        let v: Vec<f64> = (0..nr).map(|j| nrm[j] * pow * (1.0 - rho) * pj[j]).collect();
        let dv: Vec<f64> = (0..nr)
            .map(|j| nrm[j] * (dpow * (1.0 - rho) * pj[j] - pow * pj[j] + 2.0 * pow * (1.0 - rho) * dj[j]) / rad)
            .collect();
        let b = rho.powi(l as i32);
        let db = if l == 0 { 0.0 } else { lf * rho.powi(l as i32 - 1) / rad };
        let ws = w / (rad * rad);
        for j in 0..nr {
            for jp in 0..nr {
                k[j][jp] += g * (dv[j] * dv[jp] * t * t + ang * v[j] * v[jp]) * ws;
            }
            s_m1[j] += p.gm1 * (db * dv[j] * t * t + ang * b * v[j]) * ws;
        }
        d_bb += p.gm1 * (db * db * t * t + ang * b * b) * ws;
    }
    let kmat = CMat::from_fn(nr, nr, |i, j| C64::new(k[i][j], 0.0));
    let rhs: Vec<C64> = s_m1.iter().map(|&s| C64::new(-s, 0.0)).collect();
    let c = kmat.lu().unwrap().solve(&rhs);
    let delta = d_bb + c.iter().zip(&s_m1).map(|(a, b)| a.re * b).sum::<f64>();
    lf / rad + delta
}

#[test]
fn arbiter() {
    let prof = RadialProfile::gaussian(0.3, 0.4, 0.0);
    for (l, truth) in [(0usize, 0.0f64), (1, 1.024732747241), (5, 5.012145146400), (10, 10.011750320484)] {
        for nr in [10usize, 16, 24, 32] {
            let lam = galerkin(&prof, l, nr, 1.0);
            println!("l={l} nr={nr}: lambda = {lam:.12}  err = {:.2e}", (lam - truth).abs() / truth.max(1.0));
        }
    }
}
