//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use faddeev3d::kinematics::{MassSet, Partition, SphericalMomentum, Term, Vec3};
use nalgebra::DMatrix;
use rand::Rng;

pub const MP: f64 = 938.272;
pub const MN: f64 = 939.565;
pub const M_AVG: f64 = 938.918;
pub const BETA: f64 = 230.0;
pub const DEUTERON: f64 = -2.2246;

pub fn pnp() -> MassSet {
    MassSet::new(MP, MN, MP).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

pub fn random_spherical(rng: &mut impl Rng, max: f64) -> SphericalMomentum {
    SphericalMomentum::new(
        rng.random_range(0.0..max),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.0..2.0 * PI),
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Jacobi momenta from single-particle momenta in the CM frame.

/// `(p_i, q_i)` from `k1 + k2 + k3 = 0`.
pub fn jacobi_from_k(i: usize, k: &[Vec3; 3], m: &MassSet) -> (Vec3, Vec3) {
    let (j, l) = match i {
        1 => (2, 3),
        2 => (3, 1),
        _ => (1, 2),
    };
    let (mj, ml) = (m.m(j), m.m(l));
    let p = (ml * k[j - 1] - mj * k[l - 1]) / (mj + ml);
    (p, k[i - 1])
}

/// Inverse of [`jacobi_from_k`]: `k_i = q`, `k_j`, `k_l` from `p` and `-q`.
pub fn k_from_jacobi(i: usize, p: &Vec3, q: &Vec3, m: &MassSet) -> [Vec3; 3] {
    let (j, l) = match i {
        1 => (2, 3),
        2 => (3, 1),
        _ => (1, 2),
    };
    let (mj, ml) = (m.m(j), m.m(l));
    // k_j + k_l = -q,  (ml k_j - mj k_l) / (mj + ml) = p
    let kj = p - q * mj / (mj + ml);
    let kl = -q - kj;
    let mut k = [Vec3::zeros(); 3];
    k[i - 1] = *q;
    k[j - 1] = kj;
    k[l - 1] = kl;
    k
}

pub fn kinetic_from_k(k: &[Vec3; 3], m: &MassSet) -> f64 {
    (0..3).map(|a| k[a].norm_squared() / (2.0 * m.m(a + 1))).sum()
}

// ---------------------------------------------------------------------------
// Shifted momenta of the coupled system written out row by row.

/// Explicit `(f, g)` vectors for one kernel term.
pub fn shifted_vectors(row: Partition, term: Term, q: &Vec3, q2: &Vec3, m: &MassSet) -> (Vec3, Vec3) {
    let (m1, m2, m3) = (m.m(1), m.m(2), m.m(3));
    match (row, term) {
        (Partition::P1, Term::First) => (-q * m1 / (m1 + m3) - q2, q + q2 * m2 / (m2 + m3)),
        (Partition::P1, Term::Second) => (q * m1 / (m1 + m2) + q2, -q - q2 * m3 / (m2 + m3)),
        (Partition::P2, Term::First) => (q * m2 / (m2 + m3) + q2, -q - q2 * m1 / (m1 + m3)),
        (Partition::P2, Term::Second) => (-q * m2 / (m2 + m1) - q2, q + q2 * m3 / (m1 + m3)),
        (Partition::P3, Term::First) => (-q * m3 / (m3 + m2) - q2, q + q2 * m1 / (m1 + m2)),
        (Partition::P3, Term::Second) => (q * m3 / (m3 + m1) + q2, -q - q2 * m2 / (m1 + m2)),
    }
}

/// Free Green-function denominator masses `(mu_q, mu_q'', m_cross)` per term.
pub fn green_masses(row: Partition, term: Term, m: &MassSet) -> (f64, f64, f64) {
    let mu = |a: usize, b: usize| m.m(a) * m.m(b) / (m.m(a) + m.m(b));
    match (row, term) {
        (Partition::P1, Term::First) => (mu(2, 3), mu(1, 3), m.m(3)),
        (Partition::P1, Term::Second) => (mu(2, 3), mu(1, 2), m.m(2)),
        (Partition::P2, Term::First) => (mu(1, 3), mu(2, 3), m.m(3)),
        (Partition::P2, Term::Second) => (mu(1, 3), mu(1, 2), m.m(1)),
        (Partition::P3, Term::First) => (mu(1, 2), mu(2, 3), m.m(2)),
        (Partition::P3, Term::Second) => (mu(1, 2), mu(1, 3), m.m(1)),
    }
}

pub fn partner(row: Partition, term: Term) -> Partition {
    use Partition::*;
    match (row, term) {
        (P1, Term::First) => P2,
        (P1, Term::Second) => P3,
        (P2, Term::First) => P1,
        (P2, Term::Second) => P3,
        (P3, Term::First) => P1,
        (P3, Term::Second) => P2,
    }
}

/// Cosine of the angle between the planes `(a, z)` and `(b, z)`.
pub fn dihedral(a: &Vec3, b: &Vec3) -> f64 {
    let z = Vec3::z();
    let (na, nb) = (a.cross(&z), b.cross(&z));
    na.dot(&nb) / (na.norm() * nb.norm())
}

pub fn cosine(a: &Vec3, b: &Vec3) -> f64 {
    a.dot(b) / (a.norm() * b.norm())
}

// ---------------------------------------------------------------------------
// Rank-1 Yamaguchi closed forms.

/// `J(E) = int_0^inf p^2 / ((p^2 + beta^2)^2 (E - p^2 / 2 mu)) dp`, `E < 0`,
/// by residues: `-mu pi / (2 beta (beta + kappa)^2)`, `kappa = sqrt(-2 mu E)`.
pub fn yamaguchi_j(beta: f64, mu: f64, e: f64) -> f64 {
    let kappa = (-2.0 * mu * e).sqrt();
    -mu * PI / (2.0 * beta * (beta + kappa).powi(2))
}

/// Strength for which `1 - lambda J(E_B) = 0`.
pub fn yamaguchi_lambda(beta: f64, mu: f64, e_b: f64) -> f64 {
    1.0 / yamaguchi_j(beta, mu, e_b)
}

pub fn yamaguchi_tau(beta: f64, mu: f64, lambda: f64, e: f64) -> f64 {
    lambda / (1.0 - lambda * yamaguchi_j(beta, mu, e))
}

// ---------------------------------------------------------------------------
// s-wave Faddeev equation for three identical bosons, rank-1 Yamaguchi.

/// `K(q, q'') = tau(E - 3q^2/4m) q''^2 w'' int_{-1}^{1} dx g(|q'' + q/2|) g(|q + q''/2|)
///              / (E - (q^2 + q''^2 + q q'' x) / m)`
/// on the supplied spectator nodes, with `tau` in closed form.
pub fn boson_swave_kernel(e: f64, m: f64, beta: f64, lambda: f64, q: &[f64], w: &[f64], x: &[f64], wx: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    let mu = m / 2.0;
    let g = |p2: f64| 1.0 / (p2 + beta * beta);
    DMatrix::from_fn(n, n, |a, b| {
        let (qa, qb) = (q[a], q[b]);
        let tau = yamaguchi_tau(beta, mu, lambda, e - 0.75 * qa * qa / m);
        let mut s = 0.0;
        for (&xi, &wi) in x.iter().zip(wx) {
            let f2 = qb * qb + 0.25 * qa * qa + qa * qb * xi;
            let g2 = qa * qa + 0.25 * qb * qb + qa * qb * xi;
            s += wi * g(f2) * g(g2) / (e - (qa * qa + qb * qb + qa * qb * xi) / m);
        }
        tau * w[b] * qb * qb * s
    })
}

fn largest_real_eigenvalue(k: &DMatrix<f64>) -> f64 {
    k.clone()
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() < 1e-9 * z.re.abs().max(1e-300))
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Three-boson binding energy by bisection on the largest eigenvalue.
pub fn boson_binding_energy(m: f64, beta: f64, lambda: f64, q: &[f64], w: &[f64], x: &[f64], wx: &[f64], lo: f64, hi: f64) -> f64 {
    let eta = |e: f64| largest_real_eigenvalue(&boson_swave_kernel(e, m, beta, lambda, q, w, x, wx));
    let (mut a, mut b) = (lo, hi);
    let fa = eta(a) - 1.0;
    assert!(fa * (eta(b) - 1.0) < 0.0, "oracle window does not bracket");
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if (eta(mid) - 1.0) * fa > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

// ---------------------------------------------------------------------------
// Singular-region limits without the closed forms.

/// Largest `q` for which `y0(q, q'') = +1` has a solution, and largest `q`
/// for which `y0 >= -1` somewhere, by bisection on sampled maxima of `y0`.
pub fn q_limits_by_bisection(mu_q: f64, mu_q2: f64, mc: f64, e: f64) -> (f64, f64) {
    let y0 = |q: f64, x: f64| mc / (q * x) * (e - q * q / (2.0 * mu_q) - x * x / (2.0 * mu_q2));
    // y0 -> +inf as q'' -> 0 exactly when the numerator at q'' = 0 is positive
    let has_plus = |q: f64| e - q * q / (2.0 * mu_q) > 0.0;
    let max_y0 = |q: f64| {
        // golden-section maximisation on (0, x_hi]
        let (mut a, mut b) = (1e-12, 4.0 * (2.0 * mu_q2 * e).sqrt() + q);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if y0(q, c) > y0(q, d) {
                b = d;
            } else {
                a = c;
            }
        }
        y0(q, 0.5 * (a + b))
    };
    let bisect = |pred: &dyn Fn(f64) -> bool, mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if pred(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let q_hi = 10.0 * (2.0 * mu_q * e).sqrt();
    let q_vee = bisect(&has_plus, 1e-9, q_hi);
    let q_wedge = bisect(&|q| q <= q_vee || max_y0(q) >= -1.0, q_vee, q_hi);
    (q_vee, q_wedge)
}
