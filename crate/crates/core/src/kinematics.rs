//! Mass-dependent Jacobi kinematics for three distinguishable particles.
//!
//! Conventions: in the three-body centre-of-mass frame the spectator momentum
//! of partition `i` equals the single-particle momentum `k_i`, and the pair
//! momentum is the cyclic relative momentum
//! `p_i = (m_k k_j - m_j k_k) / (m_j + m_k)` with `(i, j, k)` a cyclic
//! permutation of `(1, 2, 3)`. Scattering quantities use a frame whose `z`
//! axis points along the projectile momentum `q0`.
//!
//! The scalar argument functions ([`kernel_args`], [`elastic_args`],
//! [`breakup_args`]) are the fast path. Each has a vector-level counterpart
//! that builds the shifted 3-vectors explicitly; the two are kept in lockstep
//! by the test suite.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Allowed round-off excursion of a cosine outside `[-1, 1]` before clamping.
pub const COSINE_TOLERANCE: f64 = 1e-12;
/// Below this the dihedral-angle denominator is treated as zero.
pub const DIHEDRAL_DEGENERACY: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Partition {
    P1,
    P2,
    P3,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::P1, Partition::P2, Partition::P3];

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Partition::P1),
            2 => Ok(Partition::P2),
            3 => Ok(Partition::P3),
            _ => Err(Error::InvalidArgument(format!(
                "partition index {i} not in {{1,2,3}}"
            ))),
        }
    }

    /// One-based particle index of the spectator.
    pub fn index(self) -> usize {
        match self {
            Partition::P1 => 1,
            Partition::P2 => 2,
            Partition::P3 => 3,
        }
    }

    /// The interacting pair `(j, k)` in cyclic order.
    pub fn pair(self) -> (usize, usize) {
        match self {
            Partition::P1 => (2, 3),
            Partition::P2 => (3, 1),
            Partition::P3 => (1, 2),
        }
    }

    pub fn pair_label(self) -> &'static str {
        match self {
            Partition::P1 => "23",
            Partition::P2 => "31",
            Partition::P3 => "12",
        }
    }

    /// Position in zero-based arrays.
    pub fn slot(self) -> usize {
        self.index() - 1
    }
}

/// The three masses of the system (MeV) and everything derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSet {
    masses: [f64; 3],
}

impl MassSet {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Result<Self> {
        for (i, m) in [m1, m2, m3].into_iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "mass m{} = {m} must be positive and finite",
                    i + 1
                )));
            }
        }
        Ok(MassSet {
            masses: [m1, m2, m3],
        })
    }

    pub fn equal(m: f64) -> Result<Self> {
        Self::new(m, m, m)
    }

    /// Mass of particle `i` (one-based).
    #[inline]
    pub fn m(&self, i: usize) -> f64 {
        self.masses[i - 1]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.masses
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.masses[0] + self.masses[1] + self.masses[2]
    }

    /// Pair reduced mass `m_i m_j / (m_i + m_j)`.
    #[inline]
    pub fn mu(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.m(i), self.m(j));
        a * b / (a + b)
    }

    /// Spectator reduced mass `m_i (m_j + m_k) / M`.
    #[inline]
    pub fn nu(&self, i: usize) -> f64 {
        let mi = self.m(i);
        mi * (self.total() - mi) / self.total()
    }

    pub fn pair_mu(&self, partition: Partition) -> f64 {
        let (j, k) = partition.pair();
        self.mu(j, k)
    }

    pub fn spectator_nu(&self, partition: Partition) -> f64 {
        self.nu(partition.index())
    }

    /// Relabelled mass set `(m_a, m_b, m_c)` for one-based indices `[a, b, c]`.
    pub fn permuted(&self, order: [usize; 3]) -> MassSet {
        MassSet {
            masses: [self.m(order[0]), self.m(order[1]), self.m(order[2])],
        }
    }
}

/// A momentum in spherical coordinates (MeV, polar cosine, azimuth).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalMomentum {
    pub mag: f64,
    pub cos_theta: f64,
    pub phi: f64,
}

impl SphericalMomentum {
    pub fn new(mag: f64, cos_theta: f64, phi: f64) -> Result<Self> {
        if !(mag >= 0.0 && mag.is_finite()) {
            return Err(Error::InvalidArgument(format!("momentum magnitude {mag} must be >= 0")));
        }
        if !(-1.0..=1.0).contains(&cos_theta) {
            return Err(Error::InvalidArgument(format!("polar cosine {cos_theta} outside [-1, 1]")));
        }
        let tau = std::f64::consts::TAU;
        Ok(SphericalMomentum {
            mag,
            cos_theta,
            phi: phi.rem_euclid(tau),
        })
    }

    pub fn along_z(mag: f64) -> Self {
        SphericalMomentum {
            mag,
            cos_theta: 1.0,
            phi: 0.0,
        }
    }

    #[inline]
    pub fn sin_theta(&self) -> f64 {
        (1.0 - self.cos_theta * self.cos_theta).max(0.0).sqrt()
    }

    pub fn to_cartesian(&self) -> Vec3 {
        let s = self.sin_theta();
        Vec3::new(
            self.mag * s * self.phi.cos(),
            self.mag * s * self.phi.sin(),
            self.mag * self.cos_theta,
        )
    }

    pub fn from_cartesian(v: &Vec3) -> Self {
        let mag = v.norm();
        if mag == 0.0 {
            return SphericalMomentum {
                mag: 0.0,
                cos_theta: 1.0,
                phi: 0.0,
            };
        }
        SphericalMomentum {
            mag,
            cos_theta: (v.z / mag).clamp(-1.0, 1.0),
            phi: v.y.atan2(v.x).rem_euclid(std::f64::consts::TAU),
        }
    }

    /// Cosine of the angle between two directions.
    #[inline]
    pub fn cos_between(&self, other: &SphericalMomentum) -> f64 {
        self.cos_theta * other.cos_theta
            + self.sin_theta() * other.sin_theta() * (self.phi - other.phi).cos()
    }
}

/// Jacobi pair `(p, q)` of one partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionMomenta {
    pub partition: Partition,
    pub p: SphericalMomentum,
    pub q: SphericalMomentum,
}

impl PartitionMomenta {
    pub fn to_partition(&self, to: Partition, masses: &MassSet) -> Result<PartitionMomenta> {
        let (p, q) = jacobi_transform(
            self.partition,
            to,
            &self.p.to_cartesian(),
            &self.q.to_cartesian(),
            masses,
        )?;
        Ok(PartitionMomenta {
            partition: to,
            p: SphericalMomentum::from_cartesian(&p),
            q: SphericalMomentum::from_cartesian(&q),
        })
    }
}

/// Linear map `(p_from, q_from) -> (p_to, q_to)`:
/// `p_to = pp p + pq q`, `q_to = qp p + qq q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobiCoefficients {
    pub pp: f64,
    pub pq: f64,
    pub qp: f64,
    pub qq: f64,
}

impl JacobiCoefficients {
    pub fn apply(&self, p: &Vec3, q: &Vec3) -> (Vec3, Vec3) {
        (self.pp * p + self.pq * q, self.qp * p + self.qq * q)
    }
}

/// Coefficients of the six partition changes.
pub fn jacobi_coefficients(from: Partition, to: Partition, masses: &MassSet) -> Result<JacobiCoefficients> {
    let (m1, m2, m3) = (masses.m(1), masses.m(2), masses.m(3));
    let big_m = masses.total();
    use Partition::*;
    let c = match (to, from) {
        (P1, P2) => JacobiCoefficients {
            pp: -m2 / (m2 + m3),
            pq: m3 * big_m / ((m2 + m3) * (m1 + m3)),
            qp: -1.0,
            qq: -m1 / (m1 + m3),
        },
        (P1, P3) => JacobiCoefficients {
            pp: -m3 / (m2 + m3),
            pq: -m2 * big_m / ((m2 + m3) * (m1 + m2)),
            qp: 1.0,
            qq: -m1 / (m1 + m2),
        },
        (P2, P1) => JacobiCoefficients {
            pp: -m1 / (m3 + m1),
            pq: -m3 * big_m / ((m2 + m3) * (m3 + m1)),
            qp: 1.0,
            qq: -m2 / (m2 + m3),
        },
        (P2, P3) => JacobiCoefficients {
            pp: -m3 / (m3 + m1),
            pq: m1 * big_m / ((m1 + m2) * (m3 + m1)),
            qp: -1.0,
            qq: -m2 / (m1 + m2),
        },
        (P3, P1) => JacobiCoefficients {
            pp: -m1 / (m1 + m2),
            pq: m2 * big_m / ((m2 + m3) * (m1 + m2)),
            qp: -1.0,
            qq: -m3 / (m2 + m3),
        },
        (P3, P2) => JacobiCoefficients {
            pp: -m2 / (m1 + m2),
            pq: -m1 * big_m / ((m1 + m3) * (m1 + m2)),
            qp: 1.0,
            qq: -m3 / (m3 + m1),
        },
        _ => {
            return Err(Error::InvalidArgument(format!(
                "jacobi_transform needs distinct partitions (got {} -> {})",
                from.index(),
                to.index()
            )))
        }
    };
    Ok(c)
}

/// Re-express the Jacobi pair of partition `from` in partition `to`.
pub fn jacobi_transform(
    from: Partition,
    to: Partition,
    p: &Vec3,
    q: &Vec3,
    masses: &MassSet,
) -> Result<(Vec3, Vec3)> {
    Ok(jacobi_coefficients(from, to, masses)?.apply(p, q))
}

pub fn kinetic_energy(pm: &PartitionMomenta, masses: &MassSet) -> f64 {
    let mu = masses.pair_mu(pm.partition);
    let nu = masses.spectator_nu(pm.partition);
    pm.p.mag * pm.p.mag / (2.0 * mu) + pm.q.mag * pm.q.mag / (2.0 * nu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    First,
    Second,
}

impl Term {
    pub fn from_index(t: usize) -> Result<Self> {
        match t {
            1 => Ok(Term::First),
            2 => Ok(Term::Second),
            _ => Err(Error::InvalidArgument(format!("kernel term {t} not in {{1,2}}"))),
        }
    }
}

/// Mass combinations of one free three-body Green function
/// `1 / (E - q^2/(2 mu_q) - q''^2/(2 mu_q2) - q q'' y / m_cross)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenMasses {
    pub mu_q: f64,
    pub mu_q2: f64,
    pub m_cross: f64,
}

impl GreenMasses {
    #[inline]
    pub fn denominator(&self, energy: f64, q: f64, q2: f64, y: f64) -> f64 {
        energy - q * q / (2.0 * self.mu_q) - q2 * q2 / (2.0 * self.mu_q2) - q * q2 * y / self.m_cross
    }
}

/// One integral term of one row of the coupled system: the row partition,
/// which of its two terms, and everything that follows from that choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct KernelTerm {
    pub row: Partition,
    pub term: Term,
}

impl KernelTerm {
    pub fn new(row: Partition, term: Term) -> Self {
        KernelTerm { row, term }
    }

    pub fn all() -> impl Iterator<Item = KernelTerm> {
        Partition::ALL
            .into_iter()
            .flat_map(|r| [Term::First, Term::Second].into_iter().map(move |t| KernelTerm::new(r, t)))
    }

    /// The partition whose amplitude the term couples to.
    pub fn partner(&self) -> Partition {
        use Partition::*;
        match (self.row, self.term) {
            (P1, Term::First) => P2,
            (P1, Term::Second) => P3,
            (P2, Term::First) => P1,
            (P2, Term::Second) => P3,
            (P3, Term::First) => P1,
            (P3, Term::Second) => P2,
        }
    }

    /// Green-function variant number 1..=6 in row-major order.
    pub fn green_variant(&self) -> u8 {
        let base = 2 * (self.row.index() as u8 - 1);
        match self.term {
            Term::First => base + 1,
            Term::Second => base + 2,
        }
    }

    /// Relabelling that maps the row-1 formulas onto this row
    /// (`m1 <-> m2` for row 2, `(m1,m2,m3) -> (m3,m1,m2)` for row 3).
    pub fn mass_order(&self) -> [usize; 3] {
        match self.row {
            Partition::P1 => [1, 2, 3],
            Partition::P2 => [2, 1, 3],
            Partition::P3 => [3, 1, 2],
        }
    }

    /// Sign applied to every angle of the row (row 2 flips them).
    pub fn angle_sign(&self) -> f64 {
        match self.row {
            Partition::P2 => -1.0,
            _ => 1.0,
        }
    }

    /// Coefficients `(alpha, beta, orientation)` of the shifted vectors
    /// `f = orientation * (alpha q + q'')` and `g = orientation * (q + beta q'')`,
    /// with the row sign already folded into `orientation`.
    pub fn shift_coefficients(&self, masses: &MassSet) -> (f64, f64, f64) {
        let pm = masses.permuted(self.mass_order());
        let (ma, mb, mc) = (pm.m(1), pm.m(2), pm.m(3));
        let s = self.angle_sign();
        match self.term {
            // f = -(q ma/(ma+mc) + q''), g = q + q'' mb/(mb+mc)
            Term::First => (ma / (ma + mc), mb / (mb + mc), s),
            // f = q ma/(ma+mb) + q'', g = -(q + q'' mc/(mb+mc))
            Term::Second => (ma / (ma + mb), mc / (mb + mc), s),
        }
    }

    pub fn green_masses(&self, masses: &MassSet) -> GreenMasses {
        green_masses_for_variant(self.green_variant(), masses).expect("variant in range")
    }

    /// Explicit shifted vectors `(f, g)` for spectator `q` and integration
    /// momentum `q''` (both Cartesian).
    pub fn shifted_vectors(&self, q: &Vec3, q2: &Vec3, masses: &MassSet) -> (Vec3, Vec3) {
        let (alpha, beta, s) = self.shift_coefficients(masses);
        match self.term {
            Term::First => (s * (-alpha * q - q2), s * (q + beta * q2)),
            Term::Second => (s * (alpha * q + q2), s * (-q - beta * q2)),
        }
    }

    /// Magnitudes `(|f|, |g|)` from `q`, `q''` and the cosine between them.
    #[inline]
    pub fn shifted_magnitudes(&self, alpha: f64, beta: f64, q: f64, q2: f64, y: f64) -> (f64, f64) {
        let f2 = (q * alpha) * (q * alpha) + q2 * q2 + 2.0 * q * q2 * alpha * y;
        let g2 = q * q + (q2 * beta) * (q2 * beta) + 2.0 * q * q2 * beta * y;
        (f2.max(0.0).sqrt(), g2.max(0.0).sqrt())
    }
}

/// Denominator masses of Green-function variant `v` read off the coupled
/// system directly (no relabelling).
pub fn green_masses_for_variant(variant: u8, masses: &MassSet) -> Result<GreenMasses> {
    let mu = |i, j| masses.mu(i, j);
    let g = |mu_q, mu_q2, m_cross| GreenMasses {
        mu_q,
        mu_q2,
        m_cross,
    };
    Ok(match variant {
        1 => g(mu(2, 3), mu(1, 3), masses.m(3)),
        2 => g(mu(2, 3), mu(1, 2), masses.m(2)),
        3 => g(mu(3, 1), mu(2, 3), masses.m(3)),
        4 => g(mu(3, 1), mu(1, 2), masses.m(1)),
        5 => g(mu(1, 2), mu(2, 3), masses.m(2)),
        6 => g(mu(1, 2), mu(3, 1), masses.m(1)),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "Green-function variant {variant} not in 1..=6"
            )))
        }
    })
}

/// Scalar arguments of one kernel term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelArgs {
    /// Shifted pair momentum entering the two-body t-matrix.
    pub f: f64,
    /// Cosine between `p` and the shifted t-matrix momentum.
    pub theta_f: f64,
    /// Shifted pair momentum of the partner amplitude.
    pub g: f64,
    /// Polar cosine of the partner pair momentum.
    pub x_g: f64,
    /// Dihedral cosine between the planes `(g, q0)` and `(q'', q0)`.
    pub x_dihedral: f64,
    pub y_qq2: f64,
    pub y_pq2: f64,
    pub y_pq: f64,
    pub y_q2q0: f64,
    pub x_q2: f64,
    /// Set when the dihedral angle is undefined and `x_dihedral` holds the limit 0.
    pub degenerate: bool,
}

fn clamp_cosine(name: &'static str, value: f64, context: impl FnOnce() -> String) -> Result<f64> {
    if !value.is_finite() || value.abs() > 1.0 + COSINE_TOLERANCE {
        return Err(Error::CosineOutOfRange {
            name,
            value,
            context: context(),
        });
    }
    Ok(value.clamp(-1.0, 1.0))
}

/// Component of a momentum perpendicular to the reference axis.
#[inline]
fn transverse(v: &SphericalMomentum) -> (f64, f64) {
    let s = v.mag * v.sin_theta();
    (s * v.phi.cos(), s * v.phi.sin())
}

/// Cosine of the dihedral angle between the planes `(a, z)` and `(b, z)` for
/// `a = a0 u + a1 v`, `b = b0 u + b1 v`, taken from the transverse parts of
/// `a` and `b` (equal to `(ab - x_a x_b) / (sqrt(1 - x_a^2) sqrt(1 - x_b^2))`).
/// `scale` is `|a| |b|`. Returns `(cosine, degenerate)`.
pub fn dihedral_cosine(a: (f64, f64), b: (f64, f64), u: &SphericalMomentum, v: &SphericalMomentum, scale: f64) -> (f64, bool) {
    let (ut, vt) = (transverse(u), transverse(v));
    let at = (a.0 * ut.0 + a.1 * vt.0, a.0 * ut.1 + a.1 * vt.1);
    let bt = (b.0 * ut.0 + b.1 * vt.0, b.0 * ut.1 + b.1 * vt.1);
    let den = at.0.hypot(at.1) * bt.0.hypot(bt.1);
    if den == 0.0 || den < DIHEDRAL_DEGENERACY * scale {
        (0.0, true)
    } else {
        ((at.0 * bt.0 + at.1 * bt.1) / den, false)
    }
}

/// Scalarised kernel arguments for `row`, `term` at external `p`, `q` and
/// integration momentum `q''`, all given in the frame with `z || q0`.
pub fn kernel_args(
    row: Partition,
    term: Term,
    p: &SphericalMomentum,
    q: &SphericalMomentum,
    q2: &SphericalMomentum,
    masses: &MassSet,
) -> Result<KernelArgs> {
    let kt = KernelTerm::new(row, term);
    let (alpha, beta, s) = kt.shift_coefficients(masses);
    let ctx = || format!("kernel_args row {} term {:?} p={p:?} q={q:?} q''={q2:?}", row.index(), term);

    let y_qq2 = clamp_cosine("y_qq''", q.cos_between(q2), ctx)?;
    let y_pq2 = clamp_cosine("y_pq''", p.cos_between(q2), ctx)?;
    let y_pq = clamp_cosine("y_pq", p.cos_between(q), ctx)?;
    let x_q = q.cos_theta;
    let x_q2 = q2.cos_theta;
    let (qm, q2m) = (q.mag, q2.mag);

    let (f, g) = kt.shifted_magnitudes(alpha, beta, qm, q2m, y_qq2);
    // Projections of the unsigned shifted vectors; `sign` restores orientation.
    let (f_on_p, g_on_z, sign) = match term {
        Term::First => (-(y_pq * qm * alpha + y_pq2 * q2m), x_q * qm + x_q2 * q2m * beta, s),
        Term::Second => (y_pq * qm * alpha + y_pq2 * q2m, -(x_q * qm + x_q2 * q2m * beta), s),
    };

    let mut degenerate = false;
    let theta_f = if f > 0.0 {
        clamp_cosine("theta_f", sign * f_on_p / f, ctx)?
    } else {
        degenerate = true;
        0.0
    };
    let (x_g, x_dihedral) = if g > 0.0 {
        let a = clamp_cosine("X_g", g_on_z / g, ctx)?;
        let coeffs = match term {
            Term::First => (sign, sign * beta),
            Term::Second => (-sign, -sign * beta),
        };
        let (d, deg) = dihedral_cosine(coeffs, (0.0, 1.0), q, q2, g * q2m);
        degenerate |= deg;
        (sign * a, clamp_cosine("x_dihedral", d, ctx)?)
    } else {
        degenerate = true;
        (0.0, 0.0)
    };

    Ok(KernelArgs {
        f,
        theta_f,
        g,
        x_g,
        x_dihedral,
        y_qq2,
        y_pq2,
        y_pq,
        y_q2q0: x_q2,
        x_q2,
        degenerate,
    })
}

fn unit_or_zero(v: &Vec3) -> Vec3 {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        Vec3::zeros()
    }
}

fn dihedral_from_vectors(a: &Vec3, b: &Vec3) -> (f64, bool) {
    let z = Vec3::z();
    let na = a.cross(&z);
    let nb = b.cross(&z);
    let den = na.norm() * nb.norm();
    if den < DIHEDRAL_DEGENERACY * a.norm().max(1e-300) * b.norm().max(1e-300) || den == 0.0 {
        (0.0, true)
    } else {
        ((na.dot(&nb) / den).clamp(-1.0, 1.0), false)
    }
}

/// Kernel arguments built from explicit 3-vectors; reference for [`kernel_args`].
pub fn kernel_args_vector(
    row: Partition,
    term: Term,
    p: &SphericalMomentum,
    q: &SphericalMomentum,
    q2: &SphericalMomentum,
    masses: &MassSet,
) -> KernelArgs {
    let kt = KernelTerm::new(row, term);
    let (pv, qv, q2v) = (p.to_cartesian(), q.to_cartesian(), q2.to_cartesian());
    let (fv, gv) = kt.shifted_vectors(&qv, &q2v, masses);
    let (pu, qu, q2u, fu, gu) = (
        unit_or_zero(&pv),
        unit_or_zero(&qv),
        unit_or_zero(&q2v),
        unit_or_zero(&fv),
        unit_or_zero(&gv),
    );
    let (x_dihedral, degenerate) = dihedral_from_vectors(&gv, &q2v);
    KernelArgs {
        f: fv.norm(),
        theta_f: pu.dot(&fu).clamp(-1.0, 1.0),
        g: gv.norm(),
        x_g: gu.z.clamp(-1.0, 1.0),
        x_dihedral,
        y_qq2: qu.dot(&q2u),
        y_pq2: pu.dot(&q2u),
        y_pq: pu.dot(&qu),
        y_q2q0: q2u.z,
        x_q2: q2u.z,
        degenerate: degenerate || fv.norm() == 0.0,
    }
}

/// Arguments `T_k(p'_k, x_{p'_k}, x^{q0}, x', q')` of the rearrangement terms
/// of the elastic amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticArgs {
    pub p_mag: f64,
    pub x_p: f64,
    pub x_dihedral: f64,
    /// Equal to `x_p`, as it enters the dihedral formula.
    pub c_qq2: f64,
    pub y_qq2: f64,
    pub degenerate: bool,
}

fn check_k(k: usize) -> Result<(f64, usize)> {
    match k {
        2 => Ok((1.0, 3)),
        3 => Ok((-1.0, 2)),
        _ => Err(Error::InvalidArgument(format!("partition k = {k} must be 2 or 3"))),
    }
}

/// Scalar arguments for the partner amplitude `T_k`, `k in {2, 3}`, of the
/// elastic amplitude: `p'_k = (-1)^k (q + q' m_k / (m2 + m3))`.
pub fn elastic_args(k: usize, q: &SphericalMomentum, q2: &SphericalMomentum, masses: &MassSet) -> Result<ElasticArgs> {
    let (sign, _) = check_k(k)?;
    let ctx = || format!("elastic_args k={k} q={q:?} q'={q2:?}");
    let r = masses.m(k) / (masses.m(2) + masses.m(3));
    let y = clamp_cosine("y_qq'", q.cos_between(q2), ctx)?;
    let p2 = q.mag * q.mag + (q2.mag * r).powi(2) + 2.0 * q.mag * q2.mag * r * y;
    let p_mag = p2.max(0.0).sqrt();
    if p_mag == 0.0 {
        return Ok(ElasticArgs {
            p_mag,
            x_p: 0.0,
            x_dihedral: 0.0,
            c_qq2: 0.0,
            y_qq2: y,
            degenerate: true,
        });
    }
    let c = clamp_cosine(
        "x_p'",
        sign * (q.cos_theta * q.mag + q2.cos_theta * q2.mag * r) / p_mag,
        ctx,
    )?;
    let (d, degenerate) = dihedral_cosine((sign, sign * r), (0.0, 1.0), q, q2, p_mag * q2.mag);
    Ok(ElasticArgs {
        p_mag,
        x_p: c,
        x_dihedral: clamp_cosine("x_dihedral", d, ctx)?,
        c_qq2: c,
        y_qq2: y,
        degenerate,
    })
}

/// Arguments `T_k(p_k, x_{p_k}, x^{q0}_{p_k q_k}, x_{q_k}, q_k)` of the
/// breakup amplitude: the partition-`k` Jacobi pair of the state `(p, q)`
/// given in partition 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakupArgs {
    pub p_mag: f64,
    pub q_mag: f64,
    pub x_p: f64,
    pub x_q: f64,
    pub x_dihedral: f64,
    pub degenerate: bool,
}

pub fn breakup_args(k: usize, p: &SphericalMomentum, q: &SphericalMomentum, masses: &MassSet) -> Result<BreakupArgs> {
    check_k(k)?;
    let to = Partition::from_index(k)?;
    let c = jacobi_coefficients(Partition::P1, to, masses)?;
    let ctx = || format!("breakup_args k={k} p={p:?} q={q:?}");
    let y = clamp_cosine("y_pq", p.cos_between(q), ctx)?;
    let (pm, qm) = (p.mag, q.mag);
    let pk2 = (c.pp * pm).powi(2) + (c.pq * qm).powi(2) + 2.0 * c.pp * c.pq * pm * qm * y;
    let qk2 = (c.qp * pm).powi(2) + (c.qq * qm).powi(2) + 2.0 * c.qp * c.qq * pm * qm * y;
    let (pk, qk) = (pk2.max(0.0).sqrt(), qk2.max(0.0).sqrt());
    let mut degenerate = false;
    let x_p = if pk > 0.0 {
        clamp_cosine("x_pk", (c.pp * pm * p.cos_theta + c.pq * qm * q.cos_theta) / pk, ctx)?
    } else {
        degenerate = true;
        0.0
    };
    let x_q = if qk > 0.0 {
        clamp_cosine("x_qk", (c.qp * pm * p.cos_theta + c.qq * qm * q.cos_theta) / qk, ctx)?
    } else {
        degenerate = true;
        0.0
    };
    let x_dihedral = if pk > 0.0 && qk > 0.0 {
        let (d, deg) = dihedral_cosine((c.pp, c.pq), (c.qp, c.qq), p, q, pk * qk);
        degenerate |= deg;
        clamp_cosine("x_dihedral", d, ctx)?
    } else {
        0.0
    };
    Ok(BreakupArgs {
        p_mag: pk,
        q_mag: qk,
        x_p,
        x_q,
        x_dihedral,
        degenerate,
    })
}
