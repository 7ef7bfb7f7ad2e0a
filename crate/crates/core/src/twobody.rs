//! Separable two-body interactions `V = sum_nm |g_n> lambda_nm <g_m|`.
//!
//! Integrals over the relative momentum use the radial measure `p^2 dp`
//! (no `4 pi`), so `tau`, `t` and the bound-state wave function are the
//! radial s-wave objects. [`SeparablePotential::t3d`] and
//! [`TwoBodyBoundState::wave3d`] give the versions normalised in `d^3p`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{momentum_grid, QuadratureGrid};
use crate::solve::brent;

/// Below this `|det(1 - lambda J)|` the propagator is treated as singular.
pub const POLE_DET_THRESHOLD: f64 = 1e-12;
pub const DEFAULT_QUADRATURE_POINTS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FormFactor {
    /// `1 / (p^2 + beta^2)`.
    Yamaguchi { beta: f64 },
    /// Ratio of polynomials in `p^2`, coefficients in ascending order.
    Rational { numerator: Vec<f64>, denominator: Vec<f64> },
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl FormFactor {
    pub fn eval(&self, p: f64) -> f64 {
        let p2 = p * p;
        match self {
            FormFactor::Yamaguchi { beta } => 1.0 / (p2 + beta * beta),
            FormFactor::Rational { numerator, denominator } => poly(numerator, p2) / poly(denominator, p2),
        }
    }

    /// Typical momentum scale, used for the default quadrature mapping.
    pub fn scale(&self) -> f64 {
        match self {
            FormFactor::Yamaguchi { beta } => *beta,
            FormFactor::Rational { denominator, .. } => {
                let deg = (denominator.len() - 1) as f64;
                (denominator[0] / denominator[denominator.len() - 1]).powf(0.5 / deg)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FormFactor::Yamaguchi { beta } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(Error::InvalidArgument(format!("Yamaguchi range beta = {beta} must be positive")));
                }
            }
            FormFactor::Rational { numerator, denominator } => {
                if numerator.is_empty() || denominator.len() <= numerator.len() {
                    return Err(Error::InvalidArgument(
                        "rational form factor must decay: denominator degree above numerator degree".into(),
                    ));
                }
                if !(denominator[0] > 0.0) || denominator.iter().any(|&d| d < 0.0 || !d.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "rational form factor denominator needs non-negative coefficients with a positive constant term"
                            .into(),
                    ));
                }
                if *denominator.last().unwrap() <= 0.0 || numerator.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidArgument("rational form factor has a vanishing leading term".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparablePotential {
    pub form_factors: Vec<FormFactor>,
    /// Row-major `rank x rank` coupling matrix.
    pub strength: Vec<f64>,
    pub channel: String,
    pub reduced_mass: f64,
    pub quadrature_points: usize,
}

impl SeparablePotential {
    pub fn new(form_factors: Vec<FormFactor>, strength: Vec<f64>, channel: impl Into<String>, reduced_mass: f64) -> Result<Self> {
        let rank = form_factors.len();
        if rank == 0 {
            return Err(Error::InvalidArgument("separable potential needs rank >= 1".into()));
        }
        if strength.len() != rank * rank {
            return Err(Error::InvalidArgument(format!(
                "strength has {} entries, rank {rank} needs {}",
                strength.len(),
                rank * rank
            )));
        }
        for i in 0..rank {
            for j in 0..i {
                let (a, b) = (strength[i * rank + j], strength[j * rank + i]);
                if (a - b).abs() > 1e-14 * a.abs().max(b.abs()) {
                    return Err(Error::InvalidArgument(format!("strength matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        if strength.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("strength entries must be finite".into()));
        }
        if !(reduced_mass > 0.0 && reduced_mass.is_finite()) {
            return Err(Error::InvalidArgument(format!("reduced mass {reduced_mass} must be positive")));
        }
        for ff in &form_factors {
            ff.validate()?;
        }
        Ok(SeparablePotential {
            form_factors,
            strength,
            channel: channel.into(),
            reduced_mass,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
        })
    }

    pub fn yamaguchi(beta: f64, lambda: f64, reduced_mass: f64) -> Result<Self> {
        Self::new(vec![FormFactor::Yamaguchi { beta }], vec![lambda], "s-wave", reduced_mass)
    }

    pub fn rank(&self) -> usize {
        self.form_factors.len()
    }

    pub fn is_rank_one(&self) -> bool {
        self.rank() == 1
    }

    pub fn lambda(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rank(), self.rank(), &self.strength)
    }

    pub fn with_reduced_mass(&self, reduced_mass: f64) -> Self {
        SeparablePotential {
            reduced_mass,
            ..self.clone()
        }
    }

    pub fn with_quadrature_points(mut self, n: usize) -> Self {
        self.quadrature_points = n;
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SeparablePotential {
            strength: self.strength.iter().map(|s| s * factor).collect(),
            ..self.clone()
        }
    }

    pub fn form_factor(&self, n: usize, p: f64) -> Result<f64> {
        self.form_factors
            .get(n)
            .map(|ff| ff.eval(p))
            .ok_or(Error::IndexOutOfRange { index: n, rank: self.rank() })
    }

    /// Quadrature used for `J(E)`: mapped Gauss-Legendre with `c = 2 beta`.
    pub fn quadrature(&self) -> QuadratureGrid {
        let scale = self.form_factors.iter().map(FormFactor::scale).fold(f64::INFINITY, f64::min);
        momentum_grid(self.quadrature_points.max(4), 2.0 * scale).expect("validated scale")
    }

    /// `J_nm(E) = int p^2 g_n g_m / (E - p^2 / 2 mu) dp`, `E < 0`.
    pub fn j_matrix(&self, energy: f64) -> Result<DMatrix<f64>> {
        self.j_matrix_on(energy, &self.quadrature())
    }

    pub fn j_matrix_on(&self, energy: f64, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
        if !(energy < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "two-body propagator is evaluated below threshold only (E = {energy} MeV)"
            )));
        }
        let r = self.rank();
        let mut j = DMatrix::zeros(r, r);
        for (&p, &w) in grid.nodes.iter().zip(&grid.weights) {
            let green = w * p * p / (energy - p * p / (2.0 * self.reduced_mass));
            let g: Vec<f64> = self.form_factors.iter().map(|ff| ff.eval(p)).collect();
            for n in 0..r {
                for m in n..r {
                    j[(n, m)] += green * g[n] * g[m];
                }
            }
        }
        for n in 0..r {
            for m in 0..n {
                j[(n, m)] = j[(m, n)];
            }
        }
        Ok(j)
    }

    /// `det(1 - lambda J(E))`; vanishes at a bound-state pole.
    pub fn determinant(&self, energy: f64) -> Result<f64> {
        let r = self.rank();
        let m = DMatrix::identity(r, r) - self.lambda() * self.j_matrix(energy)?;
        Ok(m.determinant())
    }

    pub fn tau(&self, energy: f64) -> Result<TwoBodyTau> {
        let r = self.rank();
        let lambda = self.lambda();
        let a = DMatrix::identity(r, r) - &lambda * self.j_matrix(energy)?;
        let det = a.determinant();
        if det.abs() < POLE_DET_THRESHOLD || !det.is_finite() {
            return Err(Error::PoleProximity { energy, determinant: det });
        }
        let inv = a
            .try_inverse()
            .ok_or(Error::PoleProximity { energy, determinant: det })?;
        let t = inv * lambda;
        let sym = (&t + t.transpose()) * 0.5;
        Ok(TwoBodyTau {
            energy,
            matrix: sym.iter().copied().collect::<Vec<_>>(),
            rank: r,
            determinant: det,
        })
    }

    /// Half-off-shell `t(p, p'; E) = sum_nm g_n(p) tau_nm(E) g_m(p')`.
    pub fn t_half_off_shell(&self, p: f64, p_prime: f64, energy: f64) -> Result<f64> {
        Ok(self.tau(energy)?.t(self, p, p_prime))
    }

    /// `t` normalised with the three-dimensional measure `d^3p`.
    pub fn t3d(&self, p: f64, p_prime: f64, energy: f64) -> Result<f64> {
        Ok(self.t_half_off_shell(p, p_prime, energy)? / (4.0 * PI))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyTau {
    pub energy: f64,
    pub rank: usize,
    /// Column-major `rank x rank` entries.
    pub matrix: Vec<f64>,
    pub determinant: f64,
}

impl TwoBodyTau {
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.matrix[n + m * self.rank]
    }

    /// Scalar value for rank-1 potentials.
    pub fn scalar(&self) -> f64 {
        self.matrix[0]
    }

    pub fn t(&self, pot: &SeparablePotential, p: f64, p_prime: f64) -> f64 {
        let g: Vec<f64> = pot.form_factors.iter().map(|ff| ff.eval(p)).collect();
        let h: Vec<f64> = pot.form_factors.iter().map(|ff| ff.eval(p_prime)).collect();
        let mut s = 0.0;
        for n in 0..self.rank {
            for m in 0..self.rank {
                s += g[n] * self.get(n, m) * h[m];
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyBoundState {
    /// Pole position (negative, MeV).
    pub energy: f64,
    pub determinant: f64,
    /// Vertex `Gamma(p) = sum_n c_n g_n(p)`, normalised so that
    /// `int p^2 phi^2 dp = 1` with `phi = Gamma / (E - p^2 / 2 mu)`.
    pub coefficients: Vec<f64>,
    pub form_factors: Vec<FormFactor>,
    pub reduced_mass: f64,
}

impl TwoBodyBoundState {
    pub fn vertex(&self, p: f64) -> f64 {
        self.form_factors.iter().zip(&self.coefficients).map(|(ff, c)| c * ff.eval(p)).sum()
    }

    /// Radial wave function, positive at the origin.
    pub fn wave(&self, p: f64) -> f64 {
        self.vertex(p) / (self.energy - p * p / (2.0 * self.reduced_mass))
    }

    /// Wave function normalised with the measure `d^3p`.
    pub fn wave3d(&self, p: f64) -> f64 {
        self.wave(p) / (4.0 * PI).sqrt()
    }

    /// The same bound state with its amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        TwoBodyBoundState {
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }
}

/// Strength of a rank-1 Yamaguchi potential binding at `energy < 0`.
pub fn yamaguchi_strength_for_binding(beta: f64, reduced_mass: f64, energy: f64) -> Result<f64> {
    if !(energy < 0.0) || !(beta > 0.0) || !(reduced_mass > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Yamaguchi tuning needs E < 0, beta > 0, mu > 0 (got {energy}, {beta}, {reduced_mass})"
        )));
    }
    let kappa = (-2.0 * reduced_mass * energy).sqrt();
    Ok(-2.0 * beta * (beta + kappa).powi(2) / (reduced_mass * PI))
}

/// Locate the two-body pole inside `[lo, hi]` (both negative).
pub fn find_two_body_bound_state(pot: &SeparablePotential, window: (f64, f64)) -> Result<TwoBodyBoundState> {
    let (lo, hi) = (window.0.min(window.1), window.0.max(window.1));
    if !(hi < 0.0) {
        return Err(Error::InvalidArgument(format!("bound-state window [{lo}, {hi}] must lie below zero")));
    }
    let d_lo = pot.determinant(lo)?;
    let d_hi = pot.determinant(hi)?;
    if d_lo * d_hi > 0.0 {
        return Err(Error::NoBoundState {
            lo,
            hi,
            detail: format!("det(1 - lambda J) has the same sign at both ends ({d_lo:e}, {d_hi:e})"),
        });
    }
    let mut failure = None;
    let energy = brent(
        lo,
        hi,
        |e| match pot.determinant(e) {
            Ok(d) => d,
            Err(err) => {
                failure.get_or_insert(err);
                0.0
            }
        },
        1e-15,
        0.0,
    )?;
    if let Some(err) = failure {
        return Err(err);
    }
    let det = pot.determinant(energy)?;

    let r = pot.rank();
    let a = DMatrix::identity(r, r) - pot.lambda() * pot.j_matrix(energy)?;
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("rank >= 1");
    let c: DVector<f64> = v_t.row(imin).transpose();

    let state = TwoBodyBoundState {
        energy,
        determinant: det,
        coefficients: c.iter().copied().collect(),
        form_factors: pot.form_factors.clone(),
        reduced_mass: pot.reduced_mass,
    };
    let grid = pot.quadrature();
    let norm2 = grid.integrate(|p| (p * state.wave(p)).powi(2));
    let sign = if state.wave(0.0) < 0.0 { -1.0 } else { 1.0 };
    Ok(state.scaled(sign / norm2.sqrt()))
}
