//! Homogeneous Faddeev equations for bound states with rank-1 separable pair
//! interactions.
//!
//! With `t_i = |g_i> tau_i <g_i| / (4 pi)` the components factorise as
//! `psi_i(p, q) = G0 g_i(p) F_i(q)`, and the spectator amplitudes obey
//! `F_i(q) = tau_i(E - q^2/(2 nu_i)) / (4 pi) sum_{j != i} int d^3q'' g_i(f) R0 g_j(g) F_j(q'')`.
//! On a spectator grid of `N` nodes this is the `3N x 3N` problem `K F = eta F`;
//! bound states sit where `eta(E) = 1`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{dominant_eigenpair, EigenMethod, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::grids::{
    gauss_legendre, interpolate_cubic, momentum_grid, periodic_trapezoid, QuadratureGrid, DEFAULT_MOMENTUM_SCALE,
    DEFAULT_N_PHI, DEFAULT_N_Q, DEFAULT_N_X,
};
use crate::kinematics::{kernel_args, KernelTerm, MassSet, Partition, SphericalMomentum, Term};
use crate::twobody::{find_two_body_bound_state, SeparablePotential};

pub const DEFAULT_WINDOW: (f64, f64) = (-50.0, -0.1);
pub const DEFAULT_ENERGY_TOLERANCE: f64 = 1e-9;
const ETA_BISECTION_TOL: f64 = 1e-6;
const ETA_POLISH_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelGrids {
    pub q: QuadratureGrid,
    pub x: QuadratureGrid,
    pub phi: QuadratureGrid,
}

impl KernelGrids {
    pub fn new(n_q: usize, scale: f64, n_x: usize, n_phi: usize) -> Result<Self> {
        Ok(KernelGrids {
            q: momentum_grid(n_q, scale)?,
            x: gauss_legendre(n_x, -1.0, 1.0)?,
            phi: periodic_trapezoid(n_phi, 2.0 * PI)?,
        })
    }

    pub fn with_q(q: QuadratureGrid, n_x: usize, n_phi: usize) -> Result<Self> {
        Ok(KernelGrids {
            q,
            x: gauss_legendre(n_x, -1.0, 1.0)?,
            phi: periodic_trapezoid(n_phi, 2.0 * PI)?,
        })
    }
}

impl Default for KernelGrids {
    fn default() -> Self {
        KernelGrids::new(DEFAULT_N_Q, DEFAULT_MOMENTUM_SCALE, DEFAULT_N_X, DEFAULT_N_PHI).expect("valid defaults")
    }
}

/// Pair interactions indexed by partition: pair (23), (31), (12).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairPotentials {
    pub pairs: [SeparablePotential; 3],
}

impl PairPotentials {
    pub fn new(p23: SeparablePotential, p31: SeparablePotential, p12: SeparablePotential) -> Self {
        PairPotentials { pairs: [p23, p31, p12] }
    }

    pub fn identical(pot: SeparablePotential) -> Self {
        PairPotentials {
            pairs: [pot.clone(), pot.clone(), pot],
        }
    }

    pub fn get(&self, partition: Partition) -> &SeparablePotential {
        &self.pairs[partition.slot()]
    }

    /// Potentials with reduced masses taken from `masses` and rank checked.
    pub fn for_masses(&self, masses: &MassSet) -> Result<PairPotentials> {
        let mut out = self.clone();
        for part in Partition::ALL {
            let pot = &self.pairs[part.slot()];
            if !pot.is_rank_one() {
                return Err(Error::InvalidArgument(format!(
                    "pair {} has rank {}; the bound-state kernel supports rank-1 interactions",
                    part.pair_label(),
                    pot.rank()
                )));
            }
            out.pairs[part.slot()] = pot.with_reduced_mass(masses.pair_mu(part));
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PairPotentials {
            pairs: self.pairs.clone().map(|p| p.scaled(factor)),
        }
    }

    /// Deepest two-body bound-state energy among the pairs, if any.
    pub fn deepest_threshold(&self, masses: &MassSet, floor: f64) -> Result<Option<f64>> {
        let pots = self.for_masses(masses)?;
        let mut deepest: Option<f64> = None;
        for pot in &pots.pairs {
            match find_two_body_bound_state(pot, (floor, -1e-9)) {
                Ok(bs) => deepest = Some(deepest.map_or(bs.energy, |d| d.min(bs.energy))),
                Err(Error::NoBoundState { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(deepest)
    }
}

#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub energy: f64,
    pub n: usize,
    /// Full `3N x 3N` matrix; block `(i, j)` holds `a(i, j)`.
    pub matrix: DMatrix<f64>,
    pub q_nodes: Vec<f64>,
    pub masses: MassSet,
}

impl KernelMatrix {
    pub fn block(&self, i: Partition, j: Partition) -> DMatrix<f64> {
        self.matrix
            .view((i.slot() * self.n, j.slot() * self.n), (self.n, self.n))
            .into_owned()
    }
}

/// Spectator-dependent propagator factor `tau_i(E - q_m^2 / 2 nu_i) / (4 pi)` for
/// every node, with a check that no two-body pole lies inside the grid range.
pub(crate) fn spectator_tau(pot: &SeparablePotential, energy: f64, nu: f64, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let mut prev = pot.determinant(energy)?;
    let mut out = Vec::with_capacity(grid.len());
    for (m, &q) in grid.nodes.iter().enumerate() {
        let e2 = energy - q * q / (2.0 * nu);
        let collision = || Error::PoleCollision { node: m, q, energy };
        let det = pot.determinant(e2)?;
        if det * prev <= 0.0 {
            return Err(collision());
        }
        prev = det;
        let tau = pot.tau(e2).map_err(|e| match e {
            Error::PoleProximity { .. } => collision(),
            other => other,
        })?;
        out.push(tau.scalar() / (4.0 * PI));
    }
    Ok(out)
}

/// Angular integral `int dx'' dphi'' g_i(f) R0 g_j(g)` at fixed `q`, `q''`,
/// with `q` along the reference axis.
fn angular_integral(kt: KernelTerm, q: f64, q2: f64, energy: f64, pots: &PairPotentials, masses: &MassSet, grids: &KernelGrids) -> Result<f64> {
    let gm = kt.green_masses(masses);
    let gi = &pots.get(kt.row).form_factors[0];
    let gj = &pots.get(kt.partner()).form_factors[0];
    let p = SphericalMomentum::along_z(0.0);
    let qv = SphericalMomentum::along_z(q);
    let mut sum = 0.0;
    for (&x, &wx) in grids.x.nodes.iter().zip(&grids.x.weights) {
        let mut inner = 0.0;
        for (&phi, &wphi) in grids.phi.nodes.iter().zip(&grids.phi.weights) {
            let q2v = SphericalMomentum { mag: q2, cos_theta: x, phi };
            let a = kernel_args(kt.row, kt.term, &p, &qv, &q2v, masses)?;
            let r0 = 1.0 / gm.denominator(energy, q, q2, a.y_qq2);
            inner += wphi * gi.eval(a.f) * r0 * gj.eval(a.g);
        }
        sum += wx * inner;
    }
    Ok(sum)
}

pub fn assemble_kernel(energy: f64, grids: &KernelGrids, masses: &MassSet, potentials: &PairPotentials) -> Result<KernelMatrix> {
    if !(energy < 0.0) {
        return Err(Error::NotBelowBreakup { energy });
    }
    let pots = potentials.for_masses(masses)?;
    let n = grids.q.len();
    let taus = Partition::ALL
        .iter()
        .map(|&part| spectator_tau(pots.get(part), energy, masses.spectator_nu(part), &grids.q))
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<Vec<f64>> = (0..3 * n)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let row = Partition::ALL[r / n];
            let m = r % n;
            let q = grids.q.nodes[m];
            let tau = taus[row.slot()][m];
            let mut out = vec![0.0; 3 * n];
            if tau == 0.0 {
                return Ok(out);
            }
            for term in [Term::First, Term::Second] {
                let kt = KernelTerm::new(row, term);
                let col = kt.partner().slot() * n;
                for (c, (&q2, &w)) in grids.q.nodes.iter().zip(&grids.q.weights).enumerate() {
                    let ang = angular_integral(kt, q, q2, energy, &pots, masses, grids)?;
                    out[col + c] = tau * w * q2 * q2 * ang;
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut matrix = DMatrix::zeros(3 * n, 3 * n);
    for (r, row) in rows.into_iter().enumerate() {
        for (c, v) in row.into_iter().enumerate() {
            matrix[(r, c)] = v;
        }
    }
    Ok(KernelMatrix {
        energy,
        n,
        matrix,
        q_nodes: grids.q.nodes.clone(),
        masses: *masses,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EtaEstimate {
    pub eta: f64,
    pub iterations: usize,
    pub residual: f64,
    pub method: EigenMethod,
}

pub fn spectral_eta(k: &KernelMatrix) -> Result<EtaEstimate> {
    let e = dominant_eigenpair(&k.matrix, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)?;
    Ok(EtaEstimate {
        eta: e.value,
        iterations: e.iterations,
        residual: e.residual,
        method: e.method,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenSolution {
    pub energy: f64,
    pub eta: f64,
    pub phi: [Vec<f64>; 3],
    /// `||(K - 1) phi||` with `sum_i ||phi_i||^2 = 1`.
    pub residual: f64,
    /// `(E, eta(E))` for every energy evaluated during the search.
    pub trace: Vec<(f64, f64)>,
    pub q_nodes: Vec<f64>,
    pub masses: MassSet,
    /// Window actually searched after clipping below the two-body threshold.
    pub window: (f64, f64),
    pub two_body_threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub window: (f64, f64),
    pub tolerance: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            window: DEFAULT_WINDOW,
            tolerance: DEFAULT_ENERGY_TOLERANCE,
        }
    }
}

/// Find `E` with `eta(E) = 1` inside the window.
///
/// The upper end of the window is moved just below the deepest two-body
/// bound state, where the spectator propagator would hit its pole.
pub fn find_binding_energy(
    settings: &SearchSettings,
    grids: &KernelGrids,
    masses: &MassSet,
    potentials: &PairPotentials,
) -> Result<EigenSolution> {
    let (lo, mut hi) = (settings.window.0.min(settings.window.1), settings.window.0.max(settings.window.1));
    if !(hi < 0.0) {
        return Err(Error::InvalidArgument(format!("binding-energy window [{lo}, {hi}] must lie below zero")));
    }
    let threshold = potentials.deepest_threshold(masses, lo.min(-1.0) * 10.0)?;
    if let Some(t) = threshold {
        let clip = t - 1e-6 * t.abs().max(1.0);
        if clip <= lo {
            return Err(Error::NoBoundState {
                lo,
                hi,
                detail: format!("window lies entirely above the two-body threshold {t} MeV"),
            });
        }
        hi = hi.min(clip);
    }
    let window = (lo, hi);
    let mut trace = Vec::new();
    let mut eta_at = |e: f64| -> Result<f64> {
        let k = assemble_kernel(e, grids, masses, potentials)?;
        let eta = spectral_eta(&k)?.eta;
        trace.push((e, eta));
        Ok(eta)
    };

    let f_lo = eta_at(lo)? - 1.0;
    let f_hi = eta_at(hi)? - 1.0;
    if f_lo * f_hi > 0.0 {
        return Err(Error::NoBoundState {
            lo,
            hi,
            detail: format!("eta - 1 does not change sign ({f_lo:.6e} at {lo}, {f_hi:.6e} at {hi})"),
        });
    }
    let (mut a, mut fa, mut b, mut fb) = (lo, f_lo, hi, f_hi);
    // bisection to a coarse bracket
    while fa.abs().min(fb.abs()) > ETA_BISECTION_TOL && (b - a).abs() > settings.tolerance {
        let m = 0.5 * (a + b);
        let fm = eta_at(m)? - 1.0;
        if fm * fa <= 0.0 {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    // secant polish, kept inside the bracket
    let (mut x0, mut f0, mut x1, mut f1) = if fa.abs() < fb.abs() { (b, fb, a, fa) } else { (a, fa, b, fb) };
    for _ in 0..60 {
        let converged = f1.abs() <= ETA_POLISH_TOL && (x1 - x0).abs() <= settings.tolerance;
        if converged || f1 == 0.0 {
            break;
        }
        let mut x2 = if f1 != f0 { x1 - f1 * (x1 - x0) / (f1 - f0) } else { 0.5 * (a + b) };
        if !(x2 > a.min(b) && x2 < a.max(b)) {
            x2 = 0.5 * (a + b);
        }
        let f2 = eta_at(x2)? - 1.0;
        if f2 * fa <= 0.0 {
            b = x2;
        } else {
            a = x2;
            fa = f2;
        }
        (x0, f0, x1, f1) = (x1, f1, x2, f2);
        if (x1 - x0).abs() <= 1e-15 * x1.abs() {
            break;
        }
    }
    let energy = x1;
    let k = assemble_kernel(energy, grids, masses, potentials)?;
    let e = dominant_eigenpair(&k.matrix, DEFAULT_TOLERANCE * 1e-2, DEFAULT_MAX_ITERATIONS)?;
    let n = k.n;
    let v = &e.vector;
    let residual = (&k.matrix * v - v).norm();
    Ok(EigenSolution {
        energy,
        eta: e.value,
        phi: [
            v.rows(0, n).iter().copied().collect(),
            v.rows(n, n).iter().copied().collect(),
            v.rows(2 * n, n).iter().copied().collect(),
        ],
        residual,
        trace,
        q_nodes: k.q_nodes,
        masses: *masses,
        window,
        two_body_threshold: threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaddeevComponents {
    pub psi: [Vec<f64>; 3],
    pub total: Vec<f64>,
    /// `max |sum phi - sum Psi|`.
    pub identity_residual: f64,
}

/// `Psi_i = phi_j + phi_k - phi_i`, the inverse of
/// `phi_i = (Psi_j + Psi_k) / 2`.
pub fn reconstruct_components(phi: &[Vec<f64>; 3]) -> FaddeevComponents {
    let n = phi[0].len();
    let psi: [Vec<f64>; 3] =
        std::array::from_fn(|i| (0..n).map(|m| phi[(i + 1) % 3][m] + phi[(i + 2) % 3][m] - phi[i][m]).collect());
    let total: Vec<f64> = (0..n).map(|m| psi[0][m] + psi[1][m] + psi[2][m]).collect();
    let identity_residual = (0..n)
        .map(|m| ((phi[0][m] + phi[1][m] + phi[2][m]) - total[m]).abs())
        .fold(0.0, f64::max);
    FaddeevComponents {
        psi,
        total,
        identity_residual,
    }
}

/// `phi_i = (Psi_j + Psi_k) / 2`.
pub fn components_to_phi(psi: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
    let n = psi[0].len();
    std::array::from_fn(|i| (0..n).map(|m| 0.5 * (psi[(i + 1) % 3][m] + psi[(i + 2) % 3][m])).collect())
}

/// `Psi_i(p, q) = g_i(p) F_i(q) / (E - p^2/(2 mu_jk) - q^2/(2 nu_i))` on a
/// rectangular grid, with `F_i` cubic-interpolated between the spectator nodes.
pub fn wavefunction_surface(
    partition: Partition,
    component: &[f64],
    solution: &EigenSolution,
    potentials: &PairPotentials,
    p_grid: &[f64],
    q_grid: &[f64],
) -> Result<Array2<f64>> {
    let masses = &solution.masses;
    let pots = potentials.for_masses(masses)?;
    let pot = pots.get(partition);
    let mu = masses.pair_mu(partition);
    let nu = masses.spectator_nu(partition);
    let e = solution.energy;
    let spectator = q_grid
        .iter()
        .map(|&q| interpolate_cubic(&solution.q_nodes, component, q, "q"))
        .collect::<Result<Vec<_>>>()?;
    if let Some(&p) = p_grid.iter().find(|&&p| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidArgument(format!("surface momentum p = {p} must be >= 0")));
    }
    Ok(Array2::from_shape_fn((p_grid.len(), q_grid.len()), |(a, b)| {
        let (p, q) = (p_grid[a], q_grid[b]);
        pot.form_factors[0].eval(p) * spectator[b] / (e - p * p / (2.0 * mu) - q * q / (2.0 * nu))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twobody::yamaguchi_strength_for_binding;

    const M: f64 = 938.918;
    const BETA: f64 = 230.0;

    fn boson_potential() -> SeparablePotential {
        let lambda = yamaguchi_strength_for_binding(BETA, M / 2.0, -2.2246).unwrap();
        SeparablePotential::yamaguchi(BETA, lambda, M / 2.0).unwrap()
    }

    fn small_grids() -> KernelGrids {
        KernelGrids::new(8, 300.0, 12, 4).unwrap()
    }

    #[test]
    fn free_kernel_vanishes() {
        let masses = MassSet::equal(M).unwrap();
        let pots = PairPotentials::identical(boson_potential().scaled(0.0));
        let k = assemble_kernel(-5.0, &small_grids(), &masses, &pots).unwrap();
        assert!(k.matrix.iter().all(|&v| v == 0.0));
        assert_eq!(spectral_eta(&k).unwrap().eta, 0.0);
    }

    #[test]
    fn equal_mass_block_pattern() {
        let masses = MassSet::equal(M).unwrap();
        let pots = PairPotentials::identical(boson_potential());
        let k = assemble_kernel(-8.0, &small_grids(), &masses, &pots).unwrap();
        use Partition::*;
        for p in Partition::ALL {
            assert!(k.block(p, p).iter().all(|&v| v == 0.0));
        }
        let a12 = k.block(P1, P2);
        let scale = a12.amax();
        for (x, y) in [(P2, P3), (P3, P1)] {
            assert!((k.block(x, y) - &a12).amax() < 1e-12 * scale);
        }
        let a13 = k.block(P1, P3);
        for (x, y) in [(P2, P1), (P3, P2)] {
            assert!((k.block(x, y) - &a13).amax() < 1e-12 * scale);
        }
    }

    #[test]
    fn refuses_scattering_energies_and_higher_rank() {
        let masses = MassSet::equal(M).unwrap();
        let pots = PairPotentials::identical(boson_potential());
        assert!(matches!(
            assemble_kernel(0.5, &small_grids(), &masses, &pots),
            Err(Error::NotBelowBreakup { .. })
        ));
        let rank2 = SeparablePotential::new(
            vec![
                crate::twobody::FormFactor::Yamaguchi { beta: BETA },
                crate::twobody::FormFactor::Yamaguchi { beta: 2.0 * BETA },
            ],
            vec![-1e-3, 0.0, 0.0, -1e-3],
            "rank2",
            M / 2.0,
        )
        .unwrap();
        assert!(assemble_kernel(-5.0, &small_grids(), &masses, &PairPotentials::identical(rank2)).is_err());
    }

    #[test]
    fn pole_inside_grid_is_reported() {
        let masses = MassSet::equal(M).unwrap();
        let pots = PairPotentials::identical(boson_potential());
        // above the two-body threshold the spectator pole crosses the grid
        match assemble_kernel(-1.0, &small_grids(), &masses, &pots) {
            Err(Error::PoleCollision { node, .. }) => assert!(node < 8),
            other => panic!("expected pole collision, got {other:?}"),
        }
    }

    #[test]
    fn reconstruction_identities() {
        let v = vec![0.3, -1.2, 2.0];
        let c = reconstruct_components(&[v.clone(), v.clone(), v.clone()]);
        for p in &c.psi {
            assert_eq!(p, &v);
        }
        let psi = [vec![1.0, 2.0], vec![-0.5, 0.25], vec![3.0, -7.0]];
        let phi = components_to_phi(&psi);
        let back = reconstruct_components(&phi);
        for i in 0..3 {
            for m in 0..2 {
                assert!((back.psi[i][m] - psi[i][m]).abs() < 1e-12);
            }
        }
        assert!(back.identity_residual < 1e-12);
    }
}
