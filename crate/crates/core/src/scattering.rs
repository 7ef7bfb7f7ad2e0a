//! Inhomogeneous coupled system for the breakup amplitudes `T_i` and the
//! elastic and breakup amplitudes built from them.
//!
//! Amplitudes live on a five-dimensional table `(p, x_p, x_pq, x_q, q)` in a
//! frame with the z axis along `q0`; `x_pq` is the cosine of the angle between
//! the planes `(p, z)` and `(q, z)`. Grid points are realised with `phi_q = 0`
//! and `phi_p = acos(x_pq)`.

use ndarray::{Array5, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faddeev::{spectator_tau, PairPotentials};
use crate::grids::{cubic_stencil, linear_stencil, principal_value, uniform_axis, QuadratureGrid};
use crate::kinematics::{
    breakup_args, elastic_args, KernelTerm, MassSet, Partition, SphericalMomentum, Term, Vec3, DIHEDRAL_DEGENERACY,
};
use crate::twobody::TwoBodyBoundState;

/// Axes of the amplitude table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeGrid {
    pub p: Vec<f64>,
    pub x_p: Vec<f64>,
    pub x_dihedral: Vec<f64>,
    pub x_q: Vec<f64>,
    pub q: QuadratureGrid,
}

impl AmplitudeGrid {
    /// Uniform `p` axis on `[0, 2 max(q)]` and uniform cosine axes on `[-1, 1]`.
    pub fn new(n_p: usize, n_cos: usize, q: QuadratureGrid) -> Result<Self> {
        if n_p < 4 || q.len() < 4 {
            return Err(Error::InvalidArgument(format!(
                "amplitude grid needs at least 4 nodes in p and q (got {n_p}, {})",
                q.len()
            )));
        }
        let cos = uniform_axis(n_cos, -1.0, 1.0)?.nodes;
        Ok(AmplitudeGrid {
            p: uniform_axis(n_p, 0.0, 2.0 * q.hi())?.nodes,
            x_p: cos.clone(),
            x_dihedral: cos.clone(),
            x_q: cos,
            q,
        })
    }

    pub fn shape(&self) -> [usize; 5] {
        [self.p.len(), self.x_p.len(), self.x_dihedral.len(), self.x_q.len(), self.q.len()]
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Momenta `(p, q)` of a table point.
    pub fn point(&self, idx: [usize; 5]) -> (SphericalMomentum, SphericalMomentum) {
        let p = SphericalMomentum {
            mag: self.p[idx[0]],
            cos_theta: self.x_p[idx[1]],
            phi: self.x_dihedral[idx[2]].clamp(-1.0, 1.0).acos(),
        };
        let q = SphericalMomentum {
            mag: self.q.nodes[idx[4]],
            cos_theta: self.x_q[idx[3]],
            phi: 0.0,
        };
        (p, q)
    }
}

/// Table arguments of a pair of momenta.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableArgs {
    pub p: f64,
    pub x_p: f64,
    pub x_dihedral: f64,
    pub x_q: f64,
    pub q: f64,
}

fn planes_cosine(a: &Vec3, b: &Vec3) -> f64 {
    let (ta, tb) = ((a.x, a.y), (b.x, b.y));
    let na = ta.0.hypot(ta.1);
    let nb = tb.0.hypot(tb.1);
    if na * nb <= DIHEDRAL_DEGENERACY * a.norm() * b.norm() || na * nb == 0.0 {
        return 0.0;
    }
    ((ta.0 * tb.0 + ta.1 * tb.1) / (na * nb)).clamp(-1.0, 1.0)
}

fn polar_cosine(a: &Vec3) -> f64 {
    let n = a.norm();
    if n == 0.0 {
        0.0
    } else {
        (a.z / n).clamp(-1.0, 1.0)
    }
}

impl TableArgs {
    pub fn from_vectors(p: &Vec3, q: &Vec3) -> Self {
        TableArgs {
            p: p.norm(),
            x_p: polar_cosine(p),
            x_dihedral: planes_cosine(p, q),
            x_q: polar_cosine(q),
            q: q.norm(),
        }
    }
}

/// One breakup amplitude `T_i(p, x_p, x_pq, x_q, q; q0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BreakupTMatrix {
    pub partition: Partition,
    pub energy: f64,
    pub q0: f64,
    pub values: Array5<f64>,
}

impl BreakupTMatrix {
    pub fn zeros(partition: Partition, energy: f64, q0: f64, grid: &AmplitudeGrid) -> Self {
        BreakupTMatrix {
            partition,
            energy,
            q0,
            values: Array5::zeros(grid.shape()),
        }
    }

    /// Tabulates `f(p, q)` on the grid.
    pub fn from_fn(
        partition: Partition,
        energy: f64,
        q0: f64,
        grid: &AmplitudeGrid,
        f: impl Fn(&SphericalMomentum, &SphericalMomentum) -> f64,
    ) -> Self {
        let values = Array5::from_shape_fn(grid.shape(), |(a, b, c, d, e)| {
            let (p, q) = grid.point([a, b, c, d, e]);
            f(&p, &q)
        });
        BreakupTMatrix {
            partition,
            energy,
            q0,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &BreakupTMatrix, b: f64) -> BreakupTMatrix {
        let mut out = self.clone();
        Zip::from(&mut out.values)
            .and(&other.values)
            .for_each(|x, &y| *x = a * *x + b * y);
        out
    }

    /// Cubic in `p` and `q`, linear in the three cosines.
    pub fn interpolate(&self, grid: &AmplitudeGrid, at: &TableArgs) -> Result<f64> {
        let sp = cubic_stencil(&grid.p, at.p, "p")?;
        let sxp = linear_stencil(&grid.x_p, at.x_p, "x_p")?;
        let sxd = linear_stencil(&grid.x_dihedral, at.x_dihedral, "x_pq")?;
        let sxq = linear_stencil(&grid.x_q, at.x_q, "x_q")?;
        let sq = cubic_stencil(&grid.q.nodes, at.q, "q")?;
        let mut sum = 0.0;
        for (&ia, &wa) in sp.index.iter().zip(&sp.weight) {
            for (&ib, &wb) in sxp.index.iter().zip(&sxp.weight) {
                for (&ic, &wc) in sxd.index.iter().zip(&sxd.weight) {
                    for (&id, &wd) in sxq.index.iter().zip(&sxq.weight) {
                        let w = wa * wb * wc * wd;
                        if w == 0.0 {
                            continue;
                        }
                        for (&ie, &we) in sq.index.iter().zip(&sq.weight) {
                            sum += w * we * self.values[[ia, ib, ic, id, ie]];
                        }
                    }
                }
            }
        }
        Ok(sum)
    }
}

/// Everything that fixes the inhomogeneous system at one energy.
#[derive(Clone, Debug)]
pub struct ScatteringSystem {
    pub grid: AmplitudeGrid,
    /// Polar and azimuthal quadrature for `q''`.
    pub x: QuadratureGrid,
    pub phi: QuadratureGrid,
    pub masses: MassSet,
    pub potentials: PairPotentials,
    /// Bound states indexed by pair slot: `(23)`, `(31)`, `(12)`.
    pub bound_states: [Option<TwoBodyBoundState>; 3],
    pub energy: f64,
    pub q0: f64,
    /// Multiplies every kernel application.
    pub kernel_scale: f64,
}

impl ScatteringSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: AmplitudeGrid,
        x: QuadratureGrid,
        phi: QuadratureGrid,
        masses: MassSet,
        potentials: &PairPotentials,
        bound_states: [Option<TwoBodyBoundState>; 3],
        energy: f64,
        q0: f64,
    ) -> Result<Self> {
        if !(q0 >= 0.0) || !energy.is_finite() {
            return Err(Error::InvalidArgument(format!("need finite E and q0 >= 0 (got {energy}, {q0})")));
        }
        Ok(ScatteringSystem {
            grid,
            x,
            phi,
            masses,
            potentials: potentials.for_masses(&masses)?,
            bound_states,
            energy,
            q0,
            kernel_scale: 1.0,
        })
    }

    pub fn with_kernel_scale(mut self, s: f64) -> Self {
        self.kernel_scale = s;
        self
    }

    pub fn bound_state(&self, pair: Partition) -> Result<&TwoBodyBoundState> {
        self.bound_states[pair.slot()].as_ref().ok_or(Error::MissingBoundState {
            pair: pair.pair_label(),
        })
    }

    /// `tau_i(E - q^2 / 2 nu_i) / 4 pi` on the `q` nodes.
    fn spectator_taus(&self, row: Partition) -> Result<Vec<f64>> {
        spectator_tau(self.potentials.get(row), self.energy, self.masses.spectator_nu(row), &self.grid.q)
    }

    fn form_factor(&self, row: Partition, p: f64) -> f64 {
        self.potentials.get(row).form_factors[0].eval(p)
    }

    /// Fills a table with `g_i(p) * h[x_q, q]`.
    fn separable_table(&self, row: Partition, h: &[f64]) -> BreakupTMatrix {
        let nq = self.grid.q.len();
        let gp: Vec<f64> = self.grid.p.iter().map(|&p| self.form_factor(row, p)).collect();
        let values = Array5::from_shape_fn(self.grid.shape(), |(a, _, _, d, e)| gp[a] * h[d * nq + e]);
        BreakupTMatrix {
            partition: row,
            energy: self.energy,
            q0: self.q0,
            values,
        }
    }

    /// Spectator points `(x_q, q)` in row-major order, with `phi_q = 0`.
    fn spectator_points(&self) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(self.grid.x_q.len() * self.grid.q.len());
        for &x in &self.grid.x_q {
            for &q in &self.grid.q.nodes {
                out.push(SphericalMomentum { mag: q, cos_theta: x, phi: 0.0 }.to_cartesian());
            }
        }
        out
    }
}

/// Inhomogeneous term of row `i`: `t_i` at the shifted momenta times the
/// partner bound-state wave functions, with `q''` replaced by `q0 z`.
pub fn driving_term(system: &ScatteringSystem, row: Partition) -> Result<BreakupTMatrix> {
    let nq = system.grid.q.len();
    let taus = system.spectator_taus(row)?;
    let q0 = Vec3::new(0.0, 0.0, system.q0);
    let terms = [KernelTerm::new(row, Term::First), KernelTerm::new(row, Term::Second)];
    let states = [
        system.bound_state(terms[0].partner())?,
        system.bound_state(terms[1].partner())?,
    ];
    let h: Vec<f64> = system
        .spectator_points()
        .iter()
        .enumerate()
        .map(|(k, qv)| {
            let mut s = 0.0;
            for (kt, bs) in terms.iter().zip(&states) {
                let (f, g) = kt.shifted_vectors(qv, &q0, &system.masses);
                s += system.form_factor(row, f.norm()) * bs.wave3d(g.norm());
            }
            taus[k % nq] * s
        })
        .collect();
    Ok(system.separable_table(row, &h))
}

fn check_singular(system: &ScatteringSystem, kt: KernelTerm) -> Result<()> {
    if system.energy <= 0.0 {
        return Ok(());
    }
    let gm = kt.green_masses(&system.masses);
    for &q in &system.grid.q.nodes {
        for &q2 in &system.grid.q.nodes {
            let y0 = gm.m_cross / (q * q2) * (system.energy - q * q / (2.0 * gm.mu_q) - q2 * q2 / (2.0 * gm.mu_q2));
            if y0.abs() <= 1.0 {
                return Err(Error::SingularRegion { q, q2, y0 });
            }
        }
    }
    Ok(())
}

/// One application of the integral operator of row `i` to the two partner
/// amplitudes, given in the order of the row's terms.
pub fn apply_kernel(system: &ScatteringSystem, row: Partition, partners: [&BreakupTMatrix; 2]) -> Result<BreakupTMatrix> {
    let terms = [KernelTerm::new(row, Term::First), KernelTerm::new(row, Term::Second)];
    for (kt, t) in terms.iter().zip(&partners) {
        if t.partition != kt.partner() {
            return Err(Error::InvalidArgument(format!(
                "row {} expects partner T_{}, got T_{}",
                row.index(),
                kt.partner().index(),
                t.partition.index()
            )));
        }
        if t.values.shape() != system.grid.shape() {
            return Err(Error::InvalidArgument("partner amplitude is not on the system grid".into()));
        }
        check_singular(system, *kt)?;
    }
    let nq = system.grid.q.len();
    let taus = system.spectator_taus(row)?;
    let green = [terms[0].green_masses(&system.masses), terms[1].green_masses(&system.masses)];

    // q'' points with their full weights
    let mut inner = Vec::with_capacity(nq * system.x.len() * system.phi.len());
    for (&q2, &wq) in system.grid.q.nodes.iter().zip(&system.grid.q.weights) {
        for (&x, &wx) in system.x.nodes.iter().zip(&system.x.weights) {
            for (&phi, &wp) in system.phi.nodes.iter().zip(&system.phi.weights) {
                let v = SphericalMomentum { mag: q2, cos_theta: x, phi }.to_cartesian();
                inner.push((v, wq * q2 * q2 * wx * wp));
            }
        }
    }

    let h: Vec<f64> = system
        .spectator_points()
        .par_iter()
        .enumerate()
        .map(|(k, qv)| -> Result<f64> {
            let tau = taus[k % nq];
            if tau == 0.0 {
                return Ok(0.0);
            }
            let q = qv.norm();
            let mut s = 0.0;
            for ((kt, gm), t) in terms.iter().zip(&green).zip(&partners) {
                for (v, w) in &inner {
                    let (f, g) = kt.shifted_vectors(qv, v, &system.masses);
                    let y = if q > 0.0 { qv.dot(v) / (q * v.norm()) } else { 0.0 };
                    let r0 = 1.0 / gm.denominator(system.energy, q, v.norm(), y);
                    let tin = t.interpolate(&system.grid, &TableArgs::from_vectors(&g, v))?;
                    s += w * system.form_factor(row, f.norm()) * r0 * tin;
                }
            }
            Ok(system.kernel_scale * tau * s)
        })
        .collect::<Result<_>>()?;
    Ok(system.separable_table(row, &h))
}

/// All three rows of `K T`.
pub fn apply_full_kernel(system: &ScatteringSystem, t: &[BreakupTMatrix; 3]) -> Result<[BreakupTMatrix; 3]> {
    let apply = |row: Partition| {
        let [a, b] = [Term::First, Term::Second].map(|term| KernelTerm::new(row, term).partner().slot());
        apply_kernel(system, row, [&t[a], &t[b]])
    };
    Ok([apply(Partition::P1)?, apply(Partition::P2)?, apply(Partition::P3)?])
}

/// Incremental epsilon algorithm on one scalar sequence; keeps the newest
/// ascending diagonal of the epsilon table.
#[derive(Clone, Debug, Default)]
pub struct WynnEpsilon {
    diagonal: Vec<f64>,
}

impl WynnEpsilon {
    pub fn push(&mut self, s: f64) -> f64 {
        let old = std::mem::take(&mut self.diagonal);
        let mut new = Vec::with_capacity(old.len() + 1);
        new.push(s);
        for k in 0..old.len() {
            let diff = new[k] - old[k];
            let scale = new[k].abs().max(old[k].abs());
            if diff == 0.0 || diff.abs() <= 1e-15 * scale {
                break;
            }
            let prev = if k == 0 { 0.0 } else { old[k - 1] };
            let e = prev + 1.0 / diff;
            if !e.is_finite() {
                break;
            }
            new.push(e);
        }
        self.diagonal = new;
        self.estimate()
    }

    /// Highest even column of the newest diagonal.
    pub fn estimate(&self) -> f64 {
        let k = (self.diagonal.len() - 1) & !1;
        self.diagonal[k]
    }
}

#[derive(Clone, Debug)]
pub struct ScatteringSolution {
    pub t: [BreakupTMatrix; 3],
    pub driving: [BreakupTMatrix; 3],
    /// Number of kernel applications.
    pub order: usize,
    /// `max |T - D - K T| / max |D|` of the returned amplitudes.
    pub residual: f64,
    /// `max |D|`, the scale of every tolerance and trace.
    pub scale: f64,
    /// Max-norm change of the partial sums per order.
    pub neumann_trace: Vec<f64>,
    /// Max-norm change of the accelerated estimates per order.
    pub accelerated_trace: Vec<f64>,
    /// Probe functional (value of `T_1` at the largest driving-term entry) per order.
    pub probe: Vec<f64>,
    pub accelerated: bool,
    pub spectral_radius: f64,
}

fn flatten(t: &[BreakupTMatrix; 3]) -> Vec<f64> {
    t.iter().flat_map(|m| m.values.iter().copied()).collect()
}

fn unflatten(template: &[BreakupTMatrix; 3], flat: &[f64]) -> [BreakupTMatrix; 3] {
    let n = template[0].values.len();
    let mut out = template.clone();
    for (i, m) in out.iter_mut().enumerate() {
        for (v, &x) in m.values.iter_mut().zip(&flat[i * n..(i + 1) * n]) {
            *v = x;
        }
    }
    out
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Partial sums `T(n+1) = D + K T(n)` from `T(0) = D`, accelerated
/// componentwise by the epsilon algorithm. Stops when either the partial sums
/// or the accelerated estimates change by less than `tol` in max-norm,
/// relative to the max-norm of the driving terms.
pub fn neumann_pade_solve(system: &ScatteringSystem, max_order: usize, tol: f64) -> Result<ScatteringSolution> {
    let driving = [
        driving_term(system, Partition::P1)?,
        driving_term(system, Partition::P2)?,
        driving_term(system, Partition::P3)?,
    ];
    let d = flatten(&driving);
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let probe_at = d
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map_or(0, |(i, _)| i);
    let mut eps: Vec<WynnEpsilon> = vec![WynnEpsilon::default(); d.len()];
    let mut accel: Vec<f64> = d.iter().zip(eps.iter_mut()).map(|(&x, e)| e.push(x)).collect();
    let mut current = driving.clone();
    let mut prev_flat = d.clone();
    let (mut neumann_trace, mut accelerated_trace, mut probe) = (Vec::new(), Vec::new(), vec![d[probe_at]]);
    let mut spectral_radius = 0.0;

    for order in 1..=max_order {
        let kt = apply_full_kernel(system, &current)?;
        let next = [
            driving[0].combine(1.0, &kt[0], 1.0),
            driving[1].combine(1.0, &kt[1], 1.0),
            driving[2].combine(1.0, &kt[2], 1.0),
        ];
        let flat = flatten(&next);
        let step = max_diff(&flat, &prev_flat) / scale;
        if let Some(&last) = neumann_trace.last() {
            if last > 0.0 {
                spectral_radius = step / last;
            }
        }
        neumann_trace.push(step);
        let new_accel: Vec<f64> = flat.iter().zip(eps.iter_mut()).map(|(&x, e)| e.push(x)).collect();
        let accel_step = max_diff(&new_accel, &accel) / scale;
        accelerated_trace.push(accel_step);
        probe.push(new_accel[probe_at]);
        accel = new_accel;
        prev_flat = flat;
        current = next;

        let done = if step < tol {
            Some((current.clone(), false))
        } else if order >= 2 && accel_step < tol {
            Some((unflatten(&driving, &accel), true))
        } else {
            None
        };
        if let Some((t, accelerated)) = done {
            let kt = apply_full_kernel(system, &t)?;
            let mut residual: f64 = 0.0;
            for i in 0..3 {
                Zip::from(&t[i].values)
                    .and(&driving[i].values)
                    .and(&kt[i].values)
                    .for_each(|&a, &b, &c| residual = residual.max((a - b - c).abs()));
            }
            residual /= scale;
            return Ok(ScatteringSolution {
                t,
                driving,
                order,
                residual,
                scale,
                neumann_trace,
                accelerated_trace,
                probe,
                accelerated,
                spectral_radius,
            });
        }
    }
    Err(Error::Divergence {
        order: max_order,
        spectral_radius,
    })
}

// ---------------------------------------------------------------------------
// Amplitudes.

fn check_on_shell(system: &ScatteringSystem, q: &SphericalMomentum) -> Result<()> {
    let q0 = system.q0;
    if (q.mag - q0).abs() > 1e-9 * q0.max(q.mag).max(f64::MIN_POSITIVE) {
        return Err(Error::Kinematics(format!(
            "elastic amplitude needs |q| = |q0| (got {} and {q0})",
            q.mag
        )));
    }
    Ok(())
}

/// The two terms of the elastic amplitude without integrals,
/// `phi_(23)(f) (E - ...) phi_partner(g)` with `q'' -> q0`.
pub fn born_terms(system: &ScatteringSystem, q: &SphericalMomentum) -> Result<[f64; 2]> {
    let initial = system.bound_state(Partition::P1)?;
    let qv = q.to_cartesian();
    let q0 = Vec3::new(0.0, 0.0, system.q0);
    let y = q.cos_theta;
    let mut out = [0.0; 2];
    for (o, term) in out.iter_mut().zip([Term::First, Term::Second]) {
        let kt = KernelTerm::new(Partition::P1, term);
        let partner = system.bound_state(kt.partner())?;
        let (f, g) = kt.shifted_vectors(&qv, &q0, &system.masses);
        let inverse_green = kt.green_masses(&system.masses).denominator(system.energy, q.mag, system.q0, y);
        *o = initial.wave3d(f.norm()) * inverse_green * partner.wave3d(g.norm());
    }
    Ok(out)
}

/// Integrand of the two rearrangement terms at one `q'`, without the
/// quadrature weight.
pub fn elastic_integrand(
    system: &ScatteringSystem,
    t2: &BreakupTMatrix,
    t3: &BreakupTMatrix,
    q: &SphericalMomentum,
    q2: &SphericalMomentum,
) -> Result<f64> {
    let initial = system.bound_state(Partition::P1)?;
    let (qv, q2v) = (q.to_cartesian(), q2.to_cartesian());
    let mut s = 0.0;
    for (k, term, t) in [(2, Term::First, t2), (3, Term::Second, t3)] {
        let kt = KernelTerm::new(Partition::P1, term);
        let (f, _) = kt.shifted_vectors(&qv, &q2v, &system.masses);
        let a = elastic_args(k, q, q2, &system.masses)?;
        let at = TableArgs {
            p: a.p_mag,
            x_p: a.x_p,
            x_dihedral: a.x_dihedral,
            x_q: q2.cos_theta,
            q: q2.mag,
        };
        s += initial.wave3d(f.norm()) * t.interpolate(&system.grid, &at)?;
    }
    Ok(s)
}

/// Elastic amplitude `<Psi_1(23)| U |Psi_1(23)>` for outgoing `q`, `|q| = q0`.
pub fn elastic_amplitude(
    system: &ScatteringSystem,
    t2: &BreakupTMatrix,
    t3: &BreakupTMatrix,
    q: &SphericalMomentum,
) -> Result<Complex64> {
    check_on_shell(system, q)?;
    if t2.partition != Partition::P2 || t3.partition != Partition::P3 {
        return Err(Error::InvalidArgument("elastic amplitude takes T_2 and T_3".into()));
    }
    let born = born_terms(system, q)?;
    let mut integral = 0.0;
    for (&q2, &wq) in system.grid.q.nodes.iter().zip(&system.grid.q.weights) {
        for (&x, &wx) in system.x.nodes.iter().zip(&system.x.weights) {
            for (&phi, &wp) in system.phi.nodes.iter().zip(&system.phi.weights) {
                let v = SphericalMomentum { mag: q2, cos_theta: x, phi };
                integral += wq * q2 * q2 * wx * wp * elastic_integrand(system, t2, t3, q, &v)?;
            }
        }
    }
    Ok(Complex64::new(born[0] + born[1] + integral, 0.0))
}

/// Breakup amplitude `T_1 + T_2 + T_3` at the partition-1 state `(p, q)`.
pub fn breakup_amplitude(
    t: [&BreakupTMatrix; 3],
    grid: &AmplitudeGrid,
    p: &SphericalMomentum,
    q: &SphericalMomentum,
    masses: &MassSet,
) -> Result<f64> {
    for (i, m) in t.iter().enumerate() {
        if m.partition.slot() != i || m.values.shape() != grid.shape() {
            return Err(Error::InvalidArgument(format!("breakup amplitude: T_{} is misplaced or off-grid", i + 1)));
        }
    }
    let mut u = t[0].interpolate(grid, &TableArgs::from_vectors(&p.to_cartesian(), &q.to_cartesian()))?;
    for k in [2, 3] {
        let a = breakup_args(k, p, q, masses)?;
        let at = TableArgs {
            p: a.p_mag,
            x_p: a.x_p,
            x_dihedral: a.x_dihedral,
            x_q: a.x_q,
            q: a.q_mag,
        };
        u += t[k - 1].interpolate(grid, &at)?;
    }
    Ok(u)
}

// ---------------------------------------------------------------------------
// Two-body pole in the spectator momentum.

/// Spectator momentum at which `E - q^2 / 2 nu` reaches the pair binding energy.
pub fn spectator_pole(energy: f64, nu: f64, binding: f64) -> Option<f64> {
    let k2 = 2.0 * nu * (energy - binding);
    (k2 > 0.0).then(|| k2.sqrt())
}

/// `PV int_0^inf h(q) / (E - q^2 / 2 nu - E_B) dq` by subtraction at the pole.
pub fn spectator_pole_pv(
    grid: &QuadratureGrid,
    energy: f64,
    nu: f64,
    binding: f64,
    h: impl Fn(f64) -> f64,
) -> Result<f64> {
    let k = spectator_pole(energy, nu, binding).ok_or_else(|| {
        Error::InvalidArgument(format!("no spectator pole: E = {energy} lies below the threshold {binding}"))
    })?;
    Ok(2.0 * nu * principal_value(grid, k, h)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::grids::{gauss_legendre, momentum_grid, periodic_trapezoid};
    use crate::twobody::{find_two_body_bound_state, yamaguchi_strength_for_binding, SeparablePotential};

    const M: f64 = 938.918;

    fn system(energy: f64, masses: MassSet) -> ScatteringSystem {
        let mu = M / 2.0;
        let lambda = yamaguchi_strength_for_binding(230.0, mu, -2.2246).unwrap();
        let pot = SeparablePotential::yamaguchi(230.0, lambda, mu).unwrap();
        let pots = PairPotentials::identical(pot).for_masses(&masses).unwrap();
        let states = Partition::ALL.map(|p| Some(find_two_body_bound_state(pots.get(p), (-50.0, -0.01)).unwrap()));
        let grid = AmplitudeGrid::new(8, 3, momentum_grid(6, 300.0).unwrap()).unwrap();
        ScatteringSystem::new(
            grid,
            gauss_legendre(6, -1.0, 1.0).unwrap(),
            periodic_trapezoid(6, 2.0 * PI).unwrap(),
            masses,
            &pots,
            states,
            energy,
            40.0,
        )
        .unwrap()
    }

    #[test]
    fn epsilon_sums_geometric_series() {
        let mut e = WynnEpsilon::default();
        let mut s = 0.0;
        let mut est = 0.0;
        for n in 0..4 {
            s += 0.9f64.powi(n);
            est = e.push(s);
        }
        assert!((est - 10.0).abs() < 1e-10, "{est}");
    }

    #[test]
    fn epsilon_on_alternating_log_series() {
        let mut e = WynnEpsilon::default();
        let mut s = 0.0;
        let mut est = 0.0;
        for n in 1..=16 {
            s += (-1f64).powi(n + 1) / n as f64;
            est = e.push(s);
        }
        assert!((est - 2f64.ln()).abs() < 1e-9, "{est}");
    }

    #[test]
    fn driving_term_vanishes_without_amplitude() {
        let mut sys = system(-10.0, MassSet::equal(M).unwrap());
        for s in sys.bound_states.iter_mut() {
            *s = s.as_ref().map(|b| b.scaled(0.0));
        }
        let d = driving_term(&sys, Partition::P1).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn missing_bound_state_is_reported() {
        let mut sys = system(-10.0, MassSet::equal(M).unwrap());
        sys.bound_states[2] = None;
        assert!(matches!(
            driving_term(&sys, Partition::P1),
            Err(Error::MissingBoundState { pair: "12" })
        ));
    }

    #[test]
    fn zero_input_gives_zero() {
        let sys = system(-10.0, MassSet::equal(M).unwrap());
        let z2 = BreakupTMatrix::zeros(Partition::P2, sys.energy, sys.q0, &sys.grid);
        let z3 = BreakupTMatrix::zeros(Partition::P3, sys.energy, sys.q0, &sys.grid);
        let out = apply_kernel(&sys, Partition::P1, [&z2, &z3]).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn wrong_partner_order_rejected() {
        let sys = system(-10.0, MassSet::equal(M).unwrap());
        let z2 = BreakupTMatrix::zeros(Partition::P2, sys.energy, sys.q0, &sys.grid);
        let z3 = BreakupTMatrix::zeros(Partition::P3, sys.energy, sys.q0, &sys.grid);
        assert!(apply_kernel(&sys, Partition::P1, [&z3, &z2]).is_err());
    }

    #[test]
    fn positive_energy_hits_singular_region() {
        let mut sys = system(-10.0, MassSet::equal(M).unwrap());
        sys.energy = 5.0;
        let z2 = BreakupTMatrix::zeros(Partition::P2, sys.energy, sys.q0, &sys.grid);
        let z3 = BreakupTMatrix::zeros(Partition::P3, sys.energy, sys.q0, &sys.grid);
        assert!(matches!(
            apply_kernel(&sys, Partition::P1, [&z2, &z3]),
            Err(Error::SingularRegion { .. })
        ));
    }

    #[test]
    fn interpolation_is_exact_on_nodes() {
        let sys = system(-10.0, MassSet::equal(M).unwrap());
        let t = BreakupTMatrix::from_fn(Partition::P1, -10.0, 40.0, &sys.grid, |p, q| {
            p.mag * p.mag * p.cos_theta + q.mag * q.cos_theta + p.phi.cos()
        });
        let idx = [3, 1, 2, 1, 4];
        let (p, q) = sys.grid.point(idx);
        let at = TableArgs::from_vectors(&p.to_cartesian(), &q.to_cartesian());
        let v = t.interpolate(&sys.grid, &at).unwrap();
        assert!((v - t.values[idx]).abs() < 1e-9 * t.values[idx].abs().max(1.0));
    }

    #[test]
    fn off_shell_elastic_rejected() {
        let sys = system(-10.0, MassSet::equal(M).unwrap());
        let z2 = BreakupTMatrix::zeros(Partition::P2, sys.energy, sys.q0, &sys.grid);
        let z3 = BreakupTMatrix::zeros(Partition::P3, sys.energy, sys.q0, &sys.grid);
        let q = SphericalMomentum::new(41.0, 0.3, 0.0).unwrap();
        assert!(matches!(elastic_amplitude(&sys, &z2, &z3, &q), Err(Error::Kinematics(_))));
    }

    #[test]
    fn pole_subtraction_matches_closed_form() {
        // PV int dq / ((k^2 - q^2)(q^2 + b^2)) = pi / (2 b (k^2 + b^2))
        let grid = momentum_grid(96, 200.0).unwrap();
        let (nu, eb, e) = (625.0, -2.0, 10.0);
        let b = 150.0;
        let k = spectator_pole(e, nu, eb).unwrap();
        let pv = spectator_pole_pv(&grid, e, nu, eb, |q| 1.0 / (q * q + b * b)).unwrap();
        let exact = 2.0 * nu * PI / (2.0 * b * (k * k + b * b));
        assert!((pv - exact).abs() < 1e-6 * exact.abs(), "{pv} {exact}");
    }
}
