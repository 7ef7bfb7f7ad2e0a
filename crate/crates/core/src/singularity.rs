//! Regions of moving logarithmic singularities of the free three-body Green
//! function above the breakup threshold.
//!
//! For variant `v` the Green function reads
//! `1 / (E - q^2/(2 mu_q) - q''^2/(2 mu_q2) - q q'' y / m_c)`; its angular
//! integral is singular where the critical cosine
//! `y0 = m_c (E - q^2/(2 mu_q) - q''^2/(2 mu_q2)) / (q q'')` satisfies
//! `|y0| <= 1`. Boundaries are obtained by bracketed root finding of
//! `|y0| = 1`; the closed forms are kept alongside for cross-checking.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{green_masses_for_variant, GreenMasses, MassSet};
use crate::solve::brent;

pub const DEFAULT_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenFunctionSpec {
    pub variant: u8,
    pub masses: MassSet,
    pub energy: f64,
}

impl GreenFunctionSpec {
    pub fn new(variant: u8, masses: MassSet, energy: f64) -> Result<Self> {
        if !(1..=6).contains(&variant) {
            return Err(Error::InvalidArgument(format!("Green-function variant {variant} not in 1..=6")));
        }
        Ok(GreenFunctionSpec { variant, masses, energy })
    }

    pub fn green_masses(&self) -> GreenMasses {
        green_masses_for_variant(self.variant, &self.masses).expect("variant validated")
    }
}

pub fn y0(spec: &GreenFunctionSpec, q: f64, q2: f64) -> Result<f64> {
    if !(q > 0.0 && q2 > 0.0) {
        return Err(Error::InvalidArgument(format!("y0 needs q, q'' > 0 (got {q}, {q2})")));
    }
    let g = spec.green_masses();
    Ok(g.m_cross / (q * q2) * (spec.energy - q * q / (2.0 * g.mu_q) - q2 * q2 / (2.0 * g.mu_q2)))
}

/// Mass order realising variant `target` through the variant-1 formula:
/// 2 swaps `(m2, m3)`, 3 swaps `(m1, m2)`, 4 follows 3 by swapping the values
/// `m1` and `m3`, 5 and 6 continue the chain.
fn variant_order(target: u8) -> Option<[usize; 3]> {
    Some(match target {
        1 => [1, 2, 3],
        2 => [1, 3, 2],
        3 => [2, 1, 3],
        4 => [2, 3, 1],
        5 => [3, 1, 2],
        6 => [3, 2, 1],
        _ => return None,
    })
}

/// Variant-1 spec with relabelled masses equivalent to variant `target`.
pub fn permuted_spec(base: &GreenFunctionSpec, target: u8) -> Result<GreenFunctionSpec> {
    if base.variant != 1 {
        return Err(Error::InvalidArgument(format!(
            "permuted_spec starts from variant 1 (got {})",
            base.variant
        )));
    }
    let order = variant_order(target)
        .filter(|_| target >= 2)
        .ok_or_else(|| Error::InvalidArgument(format!("target variant {target} not in 2..=6")))?;
    Ok(GreenFunctionSpec {
        variant: 1,
        masses: base.masses.permuted(order),
        energy: base.energy,
    })
}

/// Closed-form limits `(q_vee, q_wedge)`, evaluated at `|y0| = 1`.
pub fn q_limits(spec: &GreenFunctionSpec) -> Result<(f64, f64)> {
    if !(spec.energy > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "singular regions exist only above breakup (E = {} MeV)",
            spec.energy
        )));
    }
    let g = spec.green_masses();
    let mc2 = g.m_cross * g.m_cross;
    let q_vee = (2.0 * g.mu_q * spec.energy).sqrt();
    let q_wedge = (2.0 * spec.energy * mc2 * g.mu_q / (mc2 - g.mu_q * g.mu_q2)).sqrt();
    Ok((q_vee, q_wedge))
}

/// Closed-form boundary values `(f1, f2, f3)` at `q`, `None` outside each
/// curve's domain.
pub fn closed_form_curves(spec: &GreenFunctionSpec, q: f64) -> Result<[Option<f64>; 3]> {
    let (q_vee, q_wedge) = q_limits(spec)?;
    let g = spec.green_masses();
    let shift = g.mu_q2 * q / g.m_cross;
    // D = shift^2 + 2 mu_q2 (E - q^2/(2 mu_q)) = (y0^2 - 1)-corrected discriminant
    let d = shift * shift + 2.0 * g.mu_q2 * (spec.energy - q * q / (2.0 * g.mu_q));
    let slack = 1e-12;
    if q > q_wedge * (1.0 + slack) {
        return Ok([None, None, None]);
    }
    let root = d.max(0.0).sqrt();
    let f1 = (q <= q_vee * (1.0 + slack)).then(|| (root - shift).max(0.0));
    let f2 = (q >= q_vee * (1.0 - slack)).then(|| (shift - root).max(0.0));
    Ok([f1, f2, Some(shift + root)])
}

fn r_plus(g: &GreenMasses, e: f64, q: f64, x: f64) -> f64 {
    g.m_cross * (e - q * q / (2.0 * g.mu_q) - x * x / (2.0 * g.mu_q2)) - q * x
}

fn r_minus(g: &GreenMasses, e: f64, q: f64, x: f64) -> f64 {
    g.m_cross * (e - q * q / (2.0 * g.mu_q) - x * x / (2.0 * g.mu_q2)) + q * x
}

const ROOT_TOL: f64 = 1e-15;

/// Boundaries `(f1, f2, f3)` at `q` from root finding of `y0 = +1` (f1) and
/// `y0 = -1` (f2, f3).
pub fn curves_by_root_finding(spec: &GreenFunctionSpec, q: f64) -> Result<[Option<f64>; 3]> {
    if !(spec.energy > 0.0) || !(q > 0.0) {
        return Ok([None, None, None]);
    }
    let g = spec.green_masses();
    let e = spec.energy;
    let xmax = (2.0 * g.mu_q2 * e).sqrt();
    let vertex = g.mu_q2 * q / g.m_cross;
    let upper = vertex + 1.01 * (2.0 * g.mu_q2 * e + vertex * vertex).sqrt() + 1e-9;

    let f1 = if r_plus(&g, e, q, 0.0) >= 0.0 {
        if r_plus(&g, e, q, 0.0) == 0.0 {
            Some(0.0)
        } else {
            Some(brent(0.0, xmax, |x| r_plus(&g, e, q, x), ROOT_TOL, 0.0)?)
        }
    } else {
        None
    };
    let top = r_minus(&g, e, q, vertex);
    let (f2, f3) = if r_minus(&g, e, q, 0.0) >= 0.0 {
        (None, Some(brent(vertex, upper, |x| r_minus(&g, e, q, x), ROOT_TOL, 0.0)?))
    } else if top > 0.0 {
        (
            Some(brent(0.0, vertex, |x| r_minus(&g, e, q, x), ROOT_TOL, 0.0)?),
            Some(brent(vertex, upper, |x| r_minus(&g, e, q, x), ROOT_TOL, 0.0)?),
        )
    } else if top == 0.0 || top.abs() <= 1e-12 * g.m_cross * e {
        (Some(vertex), Some(vertex))
    } else {
        (None, None)
    };
    // q exactly at q_vee: both lower curves start from zero
    let f2 = match (f1, f2) {
        (Some(a), None) if a == 0.0 => Some(0.0),
        (_, f2) => f2,
    };
    Ok([f1, f2, f3])
}

/// Lower and upper `q''` of the band at `q`, or `None` when `q` lies
/// outside `(0, q_wedge]`.
pub fn band_at(spec: &GreenFunctionSpec, q: f64) -> Result<Option<(f64, f64)>> {
    let [f1, f2, f3] = curves_by_root_finding(spec, q)?;
    Ok(match (f1.or(f2), f3) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        _ => None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityRegion {
    pub spec: GreenFunctionSpec,
    pub q_grid: Vec<f64>,
    pub f1: Vec<Option<f64>>,
    pub f2: Vec<Option<f64>>,
    pub f3: Vec<Option<f64>>,
    pub q_vee: f64,
    pub q_wedge: f64,
    /// `+1`: `f1` is the `y0 = +1` curve; `-1`: `f1` and `f3` labels swapped.
    pub y0_sign: i8,
}

impl SingularityRegion {
    pub fn len(&self) -> usize {
        self.q_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_grid.is_empty()
    }

    /// Curves of the `y0 = +1` / lower-left branch and the upper branch.
    fn lower_upper(&self, k: usize) -> (Option<f64>, Option<f64>) {
        let (a, c) = if self.y0_sign >= 0 {
            (self.f1[k], self.f3[k])
        } else {
            (self.f3[k], self.f1[k])
        };
        (a.or(self.f2[k]), c)
    }

    /// Largest band width `upper - lower` over the samples.
    pub fn band_width(&self) -> f64 {
        (0..self.len())
            .filter_map(|k| match self.lower_upper(k) {
                (Some(lo), Some(hi)) => Some(hi - lo),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    /// Trapezoid area of the band in the `(q, q'')` plane.
    pub fn area(&self) -> f64 {
        let widths: Vec<(f64, f64)> = (0..self.len())
            .map(|k| {
                let w = match self.lower_upper(k) {
                    (Some(lo), Some(hi)) => hi - lo,
                    _ => 0.0,
                };
                (self.q_grid[k], w)
            })
            .collect();
        // extend to q = 0 with the width of the first sample
        let mut prev = (0.0, widths.first().map_or(0.0, |w| w.1));
        let mut area = 0.0;
        for &(q, w) in &widths {
            area += 0.5 * (q - prev.0) * (w + prev.1);
            prev = (q, w);
        }
        area
    }

    /// Upper boundary at the sample index.
    pub fn upper(&self, k: usize) -> Option<f64> {
        self.lower_upper(k).1
    }

    /// The same region with `f1`/`f3` labels exchanged.
    pub fn swapped_labels(&self) -> Self {
        SingularityRegion {
            f1: self.f3.clone(),
            f3: self.f1.clone(),
            y0_sign: -self.y0_sign,
            ..self.clone()
        }
    }
}

/// Sample the boundary curves uniformly in `q^2` on `(0, q_wedge]`.
pub fn boundary_curves(spec: &GreenFunctionSpec, n_samples: usize) -> Result<SingularityRegion> {
    if n_samples < 16 {
        return Err(Error::InvalidArgument(format!("need at least 16 samples (got {n_samples})")));
    }
    let (q_vee, q_wedge) = q_limits(spec)?;
    let q_grid: Vec<f64> = (1..=n_samples)
        .map(|k| if k == n_samples { q_wedge } else { q_wedge * (k as f64 / n_samples as f64).sqrt() })
        .collect();
    let curves = q_grid
        .par_iter()
        .map(|&q| curves_by_root_finding(spec, q))
        .collect::<Result<Vec<_>>>()?;
    let mut region = SingularityRegion {
        spec: *spec,
        q_grid,
        f1: Vec::with_capacity(n_samples),
        f2: Vec::with_capacity(n_samples),
        f3: Vec::with_capacity(n_samples),
        q_vee,
        q_wedge,
        y0_sign: 1,
    };
    for [a, b, c] in curves {
        region.f1.push(a);
        region.f2.push(b);
        region.f3.push(c);
    }
    Ok(region)
}

/// `true` if the outer envelope of `outer` strictly encloses that of `inner`:
/// larger limits, higher upper curve at every sample of `inner`, larger area.
pub fn envelope_contains(outer: &SingularityRegion, inner: &SingularityRegion) -> Result<bool> {
    if outer.q_vee <= inner.q_vee || outer.q_wedge <= inner.q_wedge || outer.area() <= inner.area() {
        return Ok(false);
    }
    for (k, &q) in inner.q_grid.iter().enumerate() {
        let Some(hi_in) = inner.upper(k) else { continue };
        match band_at(&outer.spec, q)? {
            Some((_, hi_out)) if hi_out > hi_in => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn region_to_csv(region: &SingularityRegion) -> String {
    let m = region.spec.masses;
    let mut s = String::new();
    let _ = writeln!(s, "# masses = {:.16e}, {:.16e}, {:.16e}", m.m(1), m.m(2), m.m(3));
    let _ = writeln!(s, "# energy = {:.16e}", region.spec.energy);
    let _ = writeln!(s, "# variant = {}", region.spec.variant);
    let _ = writeln!(s, "# q_vee = {:.16e}", region.q_vee);
    let _ = writeln!(s, "# q_wedge = {:.16e}", region.q_wedge);
    let _ = writeln!(s, "# y0_sign = {}", region.y0_sign);
    s.push_str("q,f1,f2,f3\n");
    for k in 0..region.len() {
        let _ = writeln!(
            s,
            "{:.16e},{},{},{}",
            region.q_grid[k],
            fmt_cell(region.f1[k]),
            fmt_cell(region.f2[k]),
            fmt_cell(region.f3[k])
        );
    }
    s
}

pub fn emit_region(region: &SingularityRegion, path: &Path) -> Result<()> {
    std::fs::write(path, region_to_csv(region))?;
    Ok(())
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(format!("region CSV: {}", msg.into()))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| parse_err(format!("bad number {s:?}")))
}

pub fn parse_region(text: &str) -> Result<SingularityRegion> {
    let mut masses = None;
    let (mut energy, mut variant, mut q_vee, mut q_wedge, mut y0_sign) = (None, None, None, None, 1i8);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for line in text.lines() {
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.split_once('=') else { continue };
            match key.trim() {
                "masses" => {
                    let v = value.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?;
                    if v.len() != 3 {
                        return Err(parse_err("masses need three values"));
                    }
                    masses = Some(MassSet::new(v[0], v[1], v[2])?);
                }
                "energy" => energy = Some(parse_f64(value)?),
                "variant" => variant = Some(value.trim().parse::<u8>().map_err(|_| parse_err("bad variant"))?),
                "q_vee" => q_vee = Some(parse_f64(value)?),
                "q_wedge" => q_wedge = Some(parse_f64(value)?),
                "y0_sign" => y0_sign = value.trim().parse::<i8>().map_err(|_| parse_err("bad y0_sign"))?,
                _ => {}
            }
        } else if !header_seen {
            if line.trim() != "q,f1,f2,f3" {
                return Err(parse_err(format!("unexpected header {line:?}")));
            }
            header_seen = true;
        } else if !line.trim().is_empty() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 {
                return Err(parse_err(format!("row {line:?} needs 4 cells")));
            }
            let opt = |c: &str| -> Result<Option<f64>> {
                if c.trim().is_empty() {
                    Ok(None)
                } else {
                    parse_f64(c).map(Some)
                }
            };
            rows.push((parse_f64(cells[0])?, opt(cells[1])?, opt(cells[2])?, opt(cells[3])?));
        }
    }
    let spec = GreenFunctionSpec::new(
        variant.ok_or_else(|| parse_err("missing variant"))?,
        masses.ok_or_else(|| parse_err("missing masses"))?,
        energy.ok_or_else(|| parse_err("missing energy"))?,
    )?;
    Ok(SingularityRegion {
        spec,
        q_grid: rows.iter().map(|r| r.0).collect(),
        f1: rows.iter().map(|r| r.1).collect(),
        f2: rows.iter().map(|r| r.2).collect(),
        f3: rows.iter().map(|r| r.3).collect(),
        q_vee: q_vee.ok_or_else(|| parse_err("missing q_vee"))?,
        q_wedge: q_wedge.ok_or_else(|| parse_err("missing q_wedge"))?,
        y0_sign,
    })
}
