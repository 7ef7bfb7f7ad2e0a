//! Quadrature grids, interpolation weights and principal-value sums.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_N_Q: usize = 32;
pub const DEFAULT_N_X: usize = 32;
pub const DEFAULT_N_PHI: usize = 16;
pub const DEFAULT_MOMENTUM_SCALE: f64 = 300.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mapping {
    Linear { a: f64, b: f64 },
    RationalInfinite { scale: f64 },
    Segments { breakpoints: Vec<f64>, counts: Vec<usize> },
    PeriodicTrapezoid { period: f64 },
    Uniform { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub mapping: Mapping,
}

fn reference_rule(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("n >= 1"));
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Concatenate two grids on adjacent, non-overlapping ranges.
    pub fn concat(&self, other: &QuadratureGrid) -> Result<QuadratureGrid> {
        if !self.is_empty() && !other.is_empty() && other.lo() <= self.hi() {
            return Err(Error::InvalidArgument("concatenated grids overlap".into()));
        }
        let (mut bp, mut counts) = segments_of(self);
        let (bp2, counts2) = segments_of(other);
        if bp.last() == bp2.first() {
            bp.extend_from_slice(&bp2[1..]);
        } else {
            bp.extend_from_slice(&bp2);
        }
        counts.extend(counts2);
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes);
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        Ok(QuadratureGrid {
            nodes,
            weights,
            mapping: Mapping::Segments {
                breakpoints: bp,
                counts,
            },
        })
    }
}

fn segments_of(g: &QuadratureGrid) -> (Vec<f64>, Vec<usize>) {
    match &g.mapping {
        Mapping::Linear { a, b } => (vec![*a, *b], vec![g.len()]),
        Mapping::Segments { breakpoints, counts } => (breakpoints.clone(), counts.clone()),
        _ => (vec![g.lo(), g.hi()], vec![g.len()]),
    }
}

pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadratureGrid> {
    if n == 0 {
        return Err(Error::InvalidArgument("Gauss-Legendre needs n >= 1".into()));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("Gauss-Legendre interval [{a}, {b}] is empty")));
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let (nodes, weights) = reference_rule(n).into_iter().map(|(x, w)| (mid + half * x, half * w)).unzip();
    Ok(QuadratureGrid {
        nodes,
        weights,
        mapping: Mapping::Linear { a, b },
    })
}

/// Gauss-Legendre rule mapped onto `[0, inf)` by `p = c (1 + u) / (1 - u)`.
pub fn momentum_grid(n: usize, scale: f64) -> Result<QuadratureGrid> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("momentum grid needs n >= 4 (got {n})")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("momentum scale {scale} must be positive")));
    }
    let (nodes, weights) = reference_rule(n)
        .into_iter()
        .map(|(u, w)| {
            let d = 1.0 - u;
            (scale * (1.0 + u) / d, w * 2.0 * scale / (d * d))
        })
        .unzip();
    Ok(QuadratureGrid {
        nodes,
        weights,
        mapping: Mapping::RationalInfinite { scale },
    })
}

/// Gauss-Legendre panels between consecutive breakpoints.
pub fn segmented_grid(breakpoints: &[f64], counts: &[usize]) -> Result<QuadratureGrid> {
    if breakpoints.len() < 2 || counts.len() != breakpoints.len() - 1 {
        return Err(Error::InvalidArgument(format!(
            "{} breakpoints need {} panel counts (got {})",
            breakpoints.len(),
            breakpoints.len().saturating_sub(1),
            counts.len()
        )));
    }
    if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(format!(
            "breakpoints must be strictly increasing: {breakpoints:?}"
        )));
    }
    if let Some(&c) = counts.iter().find(|&&c| c < 2) {
        return Err(Error::InvalidArgument(format!("panel count {c} below 2")));
    }
    let mut nodes = Vec::with_capacity(counts.iter().sum());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (w, &n) in breakpoints.windows(2).zip(counts) {
        let panel = gauss_legendre(n, w[0], w[1])?;
        nodes.extend(panel.nodes);
        weights.extend(panel.weights);
    }
    Ok(QuadratureGrid {
        nodes,
        weights,
        mapping: Mapping::Segments {
            breakpoints: breakpoints.to_vec(),
            counts: counts.to_vec(),
        },
    })
}

/// Panels covering `[0, q_vee - delta]` and `[q_wedge + delta, p_max]`,
/// skipping the band between.
pub fn excluding_band(q_vee: f64, q_wedge: f64, delta: f64, p_max: f64, counts: [usize; 2]) -> Result<QuadratureGrid> {
    let lo = gauss_legendre(counts[0], 0.0, q_vee - delta)?;
    let hi = gauss_legendre(counts[1], q_wedge + delta, p_max)?;
    lo.concat(&hi)
}

/// Trapezoid rule for periodic integrands on `[0, period)`.
pub fn periodic_trapezoid(n: usize, period: f64) -> Result<QuadratureGrid> {
    if n == 0 || !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("periodic grid needs n >= 1 and period > 0 (got {n}, {period})")));
    }
    let h = period / n as f64;
    Ok(QuadratureGrid {
        nodes: (0..n).map(|k| k as f64 * h).collect(),
        weights: vec![h; n],
        mapping: Mapping::PeriodicTrapezoid { period },
    })
}

/// Equally spaced points including both ends, with trapezoid weights.
pub fn uniform_axis(n: usize, a: f64, b: f64) -> Result<QuadratureGrid> {
    if n < 2 || !(a < b) {
        return Err(Error::InvalidArgument(format!("uniform axis needs n >= 2 and a < b (got {n}, [{a}, {b}])")));
    }
    let h = (b - a) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|k| if k == n - 1 { b } else { a + k as f64 * h }).collect();
    let mut weights = vec![h; n];
    weights[0] *= 0.5;
    weights[n - 1] *= 0.5;
    Ok(QuadratureGrid {
        nodes,
        weights,
        mapping: Mapping::Uniform { a, b },
    })
}

const HULL_SLACK: f64 = 1e-12;

fn hull_check(nodes: &[f64], x: f64, axis: &'static str) -> Result<()> {
    let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
    let slack = HULL_SLACK * (1.0 + lo.abs().max(hi.abs()));
    if !x.is_finite() || x < lo - slack || x > hi + slack {
        return Err(Error::Extrapolation { axis, value: x, lo, hi });
    }
    Ok(())
}

/// Index `i` with `nodes[i] <= x <= nodes[i + 1]`.
fn bracket(nodes: &[f64], x: f64) -> usize {
    let i = nodes.partition_point(|&n| n <= x);
    i.saturating_sub(1).min(nodes.len() - 2)
}

/// Interpolation stencil: node indices and weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil<const K: usize> {
    pub index: [usize; K],
    pub weight: [f64; K],
}

impl<const K: usize> Stencil<K> {
    pub fn apply(&self, values: impl Fn(usize) -> f64) -> f64 {
        (0..K).map(|k| self.weight[k] * values(self.index[k])).sum()
    }
}

/// Two-point linear stencil.
pub fn linear_stencil(nodes: &[f64], x: f64, axis: &'static str) -> Result<Stencil<2>> {
    if nodes.len() < 2 {
        return Err(Error::InvalidArgument(format!("axis {axis} needs at least two nodes")));
    }
    hull_check(nodes, x, axis)?;
    let i = bracket(nodes, x);
    let t = ((x - nodes[i]) / (nodes[i + 1] - nodes[i])).clamp(0.0, 1.0);
    Ok(Stencil {
        index: [i, i + 1],
        weight: [1.0 - t, t],
    })
}

/// Four-point Lagrange stencil centred on the bracketing interval
/// (shifted inwards at the ends of the axis).
pub fn cubic_stencil(nodes: &[f64], x: f64, axis: &'static str) -> Result<Stencil<4>> {
    if nodes.len() < 4 {
        return Err(Error::InvalidArgument(format!("cubic interpolation along {axis} needs 4 nodes")));
    }
    hull_check(nodes, x, axis)?;
    let x = x.clamp(nodes[0], nodes[nodes.len() - 1]);
    let i = bracket(nodes, x);
    let start = i.saturating_sub(1).min(nodes.len() - 4);
    let idx = [start, start + 1, start + 2, start + 3];
    let mut weight = [1.0; 4];
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                weight[a] *= (x - nodes[idx[b]]) / (nodes[idx[a]] - nodes[idx[b]]);
            }
        }
    }
    Ok(Stencil { index: idx, weight })
}

/// Cubic interpolation of tabulated `values` at `x`.
pub fn interpolate_cubic(nodes: &[f64], values: &[f64], x: f64, axis: &'static str) -> Result<f64> {
    Ok(cubic_stencil(nodes, x, axis)?.apply(|i| values[i]))
}

/// `PV int_0^inf h(q) / (k^2 - q^2) dq` on a grid covering `[0, inf)`, by
/// subtracting `h(k)`; uses `PV int_0^inf dq / (k^2 - q^2) = 0`.
pub fn principal_value(grid: &QuadratureGrid, k: f64, h: impl Fn(f64) -> f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("pole position {k} must be positive")));
    }
    let hk = h(k);
    let mut sum = 0.0;
    for (&q, &w) in grid.nodes.iter().zip(&grid.weights) {
        let den = k * k - q * q;
        if den.abs() < 1e-14 * k * k {
            return Err(Error::InvalidArgument(format!("pole {k} coincides with grid node {q}")));
        }
        sum += w * (h(q) - hk) / den;
    }
    Ok(sum)
}
