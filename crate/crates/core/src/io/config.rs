//! Run configuration: flat `key = value` lines with dotted section prefixes.
//!
//! ```text
//! # comments start with '#'
//! mode = bound
//! masses = 938.272 939.565 938.272 MeV
//! potential.family = yamaguchi
//! potential.beta = 1.1655 fm-1
//! potential.binding = -2.2246
//! potential.12.binding = -0.5
//! grids.n_q = 24
//! ```
//!
//! Momenta and masses accept a trailing unit tag, `MeV` (default) or `fm-1`;
//! energies are in MeV. Per-pair keys `potential.23.*`, `potential.31.*` and
//! `potential.12.*` override the shared `potential.*` values.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faddeev::{KernelGrids, PairPotentials, SearchSettings, DEFAULT_ENERGY_TOLERANCE, DEFAULT_WINDOW};
use crate::grids::{
    momentum_grid, segmented_grid, QuadratureGrid, DEFAULT_MOMENTUM_SCALE, DEFAULT_N_PHI, DEFAULT_N_Q, DEFAULT_N_X,
};
use crate::kinematics::{MassSet, Partition};
use crate::singularity::DEFAULT_SAMPLES;
use crate::twobody::{yamaguchi_strength_for_binding, FormFactor, SeparablePotential, DEFAULT_QUADRATURE_POINTS};

/// `hbar c` in MeV fm.
pub const HBAR_C: f64 = 197.3269804;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Bound,
    Twobody,
    SingularityMap,
    ScatterDrive,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Bound => "bound",
            Mode::Twobody => "twobody",
            Mode::SingularityMap => "singularity-map",
            Mode::ScatterDrive => "scatter-drive",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bound" => Ok(Mode::Bound),
            "twobody" => Ok(Mode::Twobody),
            "singularity-map" => Ok(Mode::SingularityMap),
            "scatter-drive" => Ok(Mode::ScatterDrive),
            other => Err(Error::config(
                "mode",
                format!("unknown mode '{other}' (bound | twobody | singularity-map | scatter-drive)"),
            )),
        }
    }
}

/// One pair interaction. `strength` is row-major; when absent, a rank-1
/// potential is tuned to `binding`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialConfig {
    pub family: String,
    pub rank: usize,
    /// Range parameters in MeV, one per form factor.
    pub beta: Vec<f64>,
    pub strength: Option<Vec<f64>>,
    pub binding: Option<f64>,
}

impl PotentialConfig {
    pub fn build(&self, reduced_mass: f64, label: &str) -> Result<SeparablePotential> {
        let path = |k: &str| format!("potential.{label}.{k}");
        let strength = match (&self.strength, self.binding) {
            (Some(s), _) => s.clone(),
            (None, Some(e)) if self.rank == 1 => vec![yamaguchi_strength_for_binding(self.beta[0], reduced_mass, e)
                .map_err(|err| Error::config(path("binding"), err.to_string()))?],
            (None, Some(_)) => {
                return Err(Error::config(path("binding"), "binding tuning needs rank 1; give strength instead"));
            }
            (None, None) => return Err(Error::config(path("strength"), "missing: give strength or binding")),
        };
        let ffs = self.beta.iter().map(|&beta| FormFactor::Yamaguchi { beta }).collect();
        SeparablePotential::new(ffs, strength, label, reduced_mass).map_err(|e| Error::config(path("strength"), e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_q: usize,
    pub n_x: usize,
    pub n_phi: usize,
    /// Momentum scale of the rational map, MeV.
    pub scale: f64,
    /// Optional finite segments replacing the rational map.
    pub breakpoints: Option<Vec<f64>>,
    pub counts: Option<Vec<usize>>,
}

impl GridConfig {
    pub fn q_grid(&self) -> Result<QuadratureGrid> {
        match (&self.breakpoints, &self.counts) {
            (Some(bp), Some(c)) => segmented_grid(bp, c),
            _ => momentum_grid(self.n_q, self.scale),
        }
    }

    pub fn kernel_grids(&self) -> Result<KernelGrids> {
        KernelGrids::with_q(self.q_grid()?, self.n_x, self.n_phi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub window: (f64, f64),
    pub tolerance: f64,
    pub surface_points: usize,
    /// Upper end of the surface axes, MeV.
    pub surface_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwobodyConfig {
    pub window: (f64, f64),
    pub points: usize,
    pub p_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityConfig {
    pub energy: f64,
    pub variant: u8,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterConfig {
    pub energy: f64,
    pub q0: f64,
    pub max_order: usize,
    pub tolerance: f64,
    pub n_q: usize,
    pub n_x: usize,
    pub n_phi: usize,
    pub n_p: usize,
    pub n_cos: usize,
    pub kernel_scale: f64,
    /// Number of outgoing angles in the elastic table.
    pub angles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    /// MeV.
    pub masses: [f64; 3],
    /// Indexed by pair slot `(23)`, `(31)`, `(12)`.
    pub potentials: Option<[PotentialConfig; 3]>,
    pub grids: GridConfig,
    pub bound: BoundConfig,
    pub twobody: TwobodyConfig,
    pub singularity: SingularityConfig,
    pub scatter: ScatterConfig,
    pub output: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn mass_set(&self) -> Result<MassSet> {
        MassSet::new(self.masses[0], self.masses[1], self.masses[2])
    }

    pub fn pair_potentials(&self) -> Result<PairPotentials> {
        let pc = self
            .potentials
            .as_ref()
            .ok_or_else(|| Error::config("potential", "missing: this mode needs pair potentials"))?;
        let masses = self.mass_set()?;
        let build = |p: Partition| pc[p.slot()].build(masses.pair_mu(p), p.pair_label());
        Ok(PairPotentials::new(build(Partition::P1)?, build(Partition::P2)?, build(Partition::P3)?))
    }

    pub fn search_settings(&self) -> SearchSettings {
        SearchSettings {
            window: self.bound.window,
            tolerance: self.bound.tolerance,
        }
    }

    /// Canonical text form with every default written out.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "mode = {}", self.mode);
        let _ = writeln!(s, "masses = {} MeV", list(&self.masses));
        if let Some(pc) = &self.potentials {
            for (slot, p) in pc.iter().enumerate() {
                let label = Partition::ALL[slot].pair_label();
                let _ = writeln!(s, "potential.{label}.family = {}", p.family);
                let _ = writeln!(s, "potential.{label}.rank = {}", p.rank);
                let _ = writeln!(s, "potential.{label}.beta = {} MeV", list(&p.beta));
                if let Some(st) = &p.strength {
                    let _ = writeln!(s, "potential.{label}.strength = {}", list(st));
                }
                if let Some(b) = p.binding {
                    let _ = writeln!(s, "potential.{label}.binding = {b:?}");
                }
            }
        }
        let g = &self.grids;
        let _ = writeln!(s, "grids.n_q = {}", g.n_q);
        let _ = writeln!(s, "grids.n_x = {}", g.n_x);
        let _ = writeln!(s, "grids.n_phi = {}", g.n_phi);
        let _ = writeln!(s, "grids.scale = {:?} MeV", g.scale);
        if let (Some(bp), Some(c)) = (&g.breakpoints, &g.counts) {
            let _ = writeln!(s, "grids.breakpoints = {} MeV", list(bp));
            let _ = writeln!(s, "grids.counts = {}", c.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "));
        }
        let b = &self.bound;
        let _ = writeln!(s, "bound.window = {:?} {:?}", b.window.0, b.window.1);
        let _ = writeln!(s, "bound.tolerance = {:?}", b.tolerance);
        let _ = writeln!(s, "bound.surface_points = {}", b.surface_points);
        let _ = writeln!(s, "bound.surface_max = {:?} MeV", b.surface_max);
        let t = &self.twobody;
        let _ = writeln!(s, "twobody.window = {:?} {:?}", t.window.0, t.window.1);
        let _ = writeln!(s, "twobody.points = {}", t.points);
        let _ = writeln!(s, "twobody.p_max = {:?} MeV", t.p_max);
        let sg = &self.singularity;
        let _ = writeln!(s, "singularity.energy = {:?}", sg.energy);
        let _ = writeln!(s, "singularity.variant = {}", sg.variant);
        let _ = writeln!(s, "singularity.samples = {}", sg.samples);
        let sc = &self.scatter;
        let _ = writeln!(s, "scatter.energy = {:?}", sc.energy);
        let _ = writeln!(s, "scatter.q0 = {:?} MeV", sc.q0);
        let _ = writeln!(s, "scatter.max_order = {}", sc.max_order);
        let _ = writeln!(s, "scatter.tolerance = {:?}", sc.tolerance);
        let _ = writeln!(s, "scatter.n_q = {}", sc.n_q);
        let _ = writeln!(s, "scatter.n_x = {}", sc.n_x);
        let _ = writeln!(s, "scatter.n_phi = {}", sc.n_phi);
        let _ = writeln!(s, "scatter.n_p = {}", sc.n_p);
        let _ = writeln!(s, "scatter.n_cos = {}", sc.n_cos);
        let _ = writeln!(s, "scatter.kernel_scale = {:?}", sc.kernel_scale);
        let _ = writeln!(s, "scatter.angles = {}", sc.angles);
        let _ = writeln!(s, "output.dir = {}", self.output.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

// ---------------------------------------------------------------------------
// Parsing.

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Momentum,
    Energy,
    Plain,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", n + 1), format!("expected 'key = value', got '{line}'")))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::config(format!("line {}", n + 1), "empty key"));
            }
            if let Some((prev, _)) = map.insert(key.clone(), (n + 1, v.trim().to_string())) {
                return Err(Error::config(key, format!("given twice (lines {prev} and {})", n + 1)));
            }
        }
        Ok(Entries { map })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }
}

fn unit_factor(tag: &str, kind: Kind, key: &str) -> Result<f64> {
    match (tag, kind) {
        ("MeV", _) => Ok(1.0),
        ("fm-1" | "fm^-1" | "1/fm", Kind::Momentum) => Ok(HBAR_C),
        (t, Kind::Momentum) => Err(Error::config(key, format!("bad unit tag '{t}' (MeV | fm-1)"))),
        (t, _) => Err(Error::config(key, format!("bad unit tag '{t}' (only MeV allowed here)"))),
    }
}

/// Numbers separated by whitespace or commas, with an optional trailing unit.
fn numbers(key: &str, value: &str, kind: Kind) -> Result<Vec<f64>> {
    let mut tokens: Vec<&str> = value.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
    let mut factor = 1.0;
    if let Some(last) = tokens.last() {
        if last.parse::<f64>().is_err() {
            if kind == Kind::Plain {
                return Err(Error::config(key, format!("unexpected unit tag '{last}'")));
            }
            factor = unit_factor(last, kind, key)?;
            tokens.pop();
        }
    }
    if tokens.is_empty() {
        return Err(Error::config(key, "missing value"));
    }
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map(|x| x * factor)
                .map_err(|_| Error::config(key, format!("'{t}' is not a number")))
        })
        .collect()
}

fn scalar(key: &str, value: &str, kind: Kind) -> Result<f64> {
    let v = numbers(key, value, kind)?;
    if v.len() != 1 {
        return Err(Error::config(key, format!("expected one value, got {}", v.len())));
    }
    if !v[0].is_finite() {
        return Err(Error::config(key, "value must be finite"));
    }
    Ok(v[0])
}

fn integer<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("'{value}' is not a non-negative integer")))
}

fn pair(key: &str, value: &str) -> Result<(f64, f64)> {
    let v = numbers(key, value, Kind::Energy)?;
    match v.as_slice() {
        [a, b] if a < b => Ok((*a, *b)),
        _ => Err(Error::config(key, "expected two increasing energies 'lo hi'")),
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive (got {v})")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be at least {min} (got {v})")))
    }
}

fn parse_masses(e: &mut Entries) -> Result<[f64; 3]> {
    let mut masses = [f64::NAN; 3];
    if let Some(v) = e.take("masses") {
        let m = numbers("masses", &v, Kind::Momentum)?;
        if m.len() != 3 {
            return Err(Error::config("masses", format!("expected three masses, got {}", m.len())));
        }
        masses.copy_from_slice(&m);
    }
    for (i, m) in masses.iter_mut().enumerate() {
        let key = format!("masses[{}]", i + 1);
        if let Some(v) = e.take(&key) {
            *m = scalar(&key, &v, Kind::Momentum)?;
        }
        if m.is_nan() {
            return Err(Error::config(key, "missing"));
        }
        if !(*m > 0.0) || !m.is_finite() {
            return Err(Error::config(key, format!("mass must be positive (got {m})")));
        }
    }
    Ok(masses)
}

fn parse_potentials(e: &mut Entries) -> Result<Option<[PotentialConfig; 3]>> {
    let fields = ["family", "rank", "beta", "strength", "binding"];
    let mut shared: BTreeMap<&str, String> = BTreeMap::new();
    for f in fields {
        if let Some(v) = e.take(&format!("potential.{f}")) {
            shared.insert(f, v);
        }
    }
    let mut per_pair: [BTreeMap<&str, String>; 3] = Default::default();
    for p in Partition::ALL {
        for f in fields {
            if let Some(v) = e.take(&format!("potential.{}.{f}", p.pair_label())) {
                per_pair[p.slot()].insert(f, v);
            }
        }
    }
    if shared.is_empty() && per_pair.iter().all(|m| m.is_empty()) {
        return Ok(None);
    }
    let build = |p: Partition| -> Result<PotentialConfig> {
        let label = p.pair_label();
        let get = |f: &str| per_pair[p.slot()].get(f).or_else(|| shared.get(f)).cloned();
        let path = |f: &str| {
            if per_pair[p.slot()].contains_key(f) {
                format!("potential.{label}.{f}")
            } else {
                format!("potential.{f}")
            }
        };
        let family = get("family").unwrap_or_else(|| "yamaguchi".into());
        if family != "yamaguchi" {
            return Err(Error::config(path("family"), format!("unknown family '{family}' (yamaguchi)")));
        }
        let beta = match get("beta") {
            Some(v) => numbers(&path("beta"), &v, Kind::Momentum)?,
            None => return Err(Error::config(format!("potential.{label}.beta"), "missing")),
        };
        for &b in &beta {
            positive(&path("beta"), b)?;
        }
        let rank = match get("rank") {
            Some(v) => integer::<usize>(&path("rank"), &v)?,
            None => beta.len(),
        };
        if rank != beta.len() || rank == 0 {
            return Err(Error::config(path("rank"), format!("rank {rank} does not match {} range parameters", beta.len())));
        }
        let strength = get("strength").map(|v| numbers(&path("strength"), &v, Kind::Plain)).transpose()?;
        if let Some(s) = &strength {
            if s.len() != rank * rank {
                return Err(Error::config(path("strength"), format!("expected {} values for rank {rank}", rank * rank)));
            }
        }
        let binding = get("binding").map(|v| scalar(&path("binding"), &v, Kind::Energy)).transpose()?;
        if let Some(b) = binding {
            if !(b < 0.0) {
                return Err(Error::config(path("binding"), format!("binding energy must be negative (got {b})")));
            }
        }
        if strength.is_none() && binding.is_none() {
            return Err(Error::config(format!("potential.{label}.strength"), "missing: give strength or binding"));
        }
        Ok(PotentialConfig {
            family,
            rank,
            beta,
            strength,
            binding,
        })
    };
    Ok(Some([build(Partition::P1)?, build(Partition::P2)?, build(Partition::P3)?]))
}

/// Parses configuration text. `mode` may be supplied by the caller when the
/// text does not set it.
pub fn parse_config_str(text: &str, mode: Option<Mode>) -> Result<RunConfig> {
    let mut e = Entries::parse(text)?;
    let mode = match (e.take("mode"), mode) {
        (_, Some(m)) => m,
        (Some(v), None) => v.parse()?,
        (None, None) => return Err(Error::config("mode", "missing")),
    };
    let masses = parse_masses(&mut e)?;
    let potentials = parse_potentials(&mut e)?;

    macro_rules! get {
        ($key:expr, $default:expr, |$k:ident, $v:ident| $conv:expr) => {
            match e.take($key) {
                Some($v) => {
                    let $k = $key;
                    $conv?
                }
                None => $default,
            }
        };
    }

    let n_q = at_least("grids.n_q", get!("grids.n_q", DEFAULT_N_Q, |k, v| integer::<usize>(k, &v)), 4)?;
    let grids = GridConfig {
        n_q,
        n_x: at_least("grids.n_x", get!("grids.n_x", DEFAULT_N_X, |k, v| integer::<usize>(k, &v)), 2)?,
        n_phi: at_least("grids.n_phi", get!("grids.n_phi", DEFAULT_N_PHI, |k, v| integer::<usize>(k, &v)), 1)?,
        scale: positive(
            "grids.scale",
            get!("grids.scale", DEFAULT_MOMENTUM_SCALE, |k, v| scalar(k, &v, Kind::Momentum)),
        )?,
        breakpoints: get!("grids.breakpoints", None, |k, v| numbers(k, &v, Kind::Momentum).map(Some)),
        counts: get!("grids.counts", None, |k, v| v
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| integer::<usize>(k, t))
            .collect::<Result<Vec<_>>>()
            .map(Some)),
    };
    match (&grids.breakpoints, &grids.counts) {
        (Some(bp), Some(c)) if bp.len() == c.len() + 1 => {}
        (None, None) => {}
        _ => {
            return Err(Error::config(
                "grids.counts",
                "breakpoints and counts go together, with one more breakpoint than counts",
            ))
        }
    }

    let bound = BoundConfig {
        window: get!("bound.window", DEFAULT_WINDOW, |k, v| pair(k, &v)),
        tolerance: positive(
            "bound.tolerance",
            get!("bound.tolerance", DEFAULT_ENERGY_TOLERANCE, |k, v| scalar(k, &v, Kind::Energy)),
        )?,
        surface_points: at_least(
            "bound.surface_points",
            get!("bound.surface_points", 48, |k, v| integer::<usize>(k, &v)),
            2,
        )?,
        surface_max: positive(
            "bound.surface_max",
            get!("bound.surface_max", 600.0, |k, v| scalar(k, &v, Kind::Momentum)),
        )?,
    };
    let twobody = TwobodyConfig {
        window: get!("twobody.window", (-100.0, -1e-3), |k, v| pair(k, &v)),
        points: at_least(
            "twobody.points",
            get!("twobody.points", DEFAULT_QUADRATURE_POINTS, |k, v| integer::<usize>(k, &v)),
            2,
        )?,
        p_max: positive("twobody.p_max", get!("twobody.p_max", 1000.0, |k, v| scalar(k, &v, Kind::Momentum)))?,
    };
    let singularity = SingularityConfig {
        energy: get!("singularity.energy", 1.0, |k, v| scalar(k, &v, Kind::Energy)),
        variant: get!("singularity.variant", 1, |k, v| integer::<u8>(k, &v)),
        samples: at_least(
            "singularity.samples",
            get!("singularity.samples", DEFAULT_SAMPLES, |k, v| integer::<usize>(k, &v)),
            16,
        )?,
    };
    if !(1..=6).contains(&singularity.variant) {
        return Err(Error::config("singularity.variant", format!("{} not in 1..=6", singularity.variant)));
    }
    let scatter = ScatterConfig {
        energy: get!("scatter.energy", -10.0, |k, v| scalar(k, &v, Kind::Energy)),
        q0: get!("scatter.q0", 40.0, |k, v| scalar(k, &v, Kind::Momentum)),
        max_order: at_least(
            "scatter.max_order",
            get!("scatter.max_order", 60, |k, v| integer::<usize>(k, &v)),
            1,
        )?,
        tolerance: positive(
            "scatter.tolerance",
            get!("scatter.tolerance", 1e-8, |k, v| scalar(k, &v, Kind::Plain)),
        )?,
        n_q: at_least("scatter.n_q", get!("scatter.n_q", 12, |k, v| integer::<usize>(k, &v)), 4)?,
        n_x: at_least("scatter.n_x", get!("scatter.n_x", 12, |k, v| integer::<usize>(k, &v)), 2)?,
        n_phi: at_least("scatter.n_phi", get!("scatter.n_phi", 8, |k, v| integer::<usize>(k, &v)), 1)?,
        n_p: at_least("scatter.n_p", get!("scatter.n_p", 12, |k, v| integer::<usize>(k, &v)), 4)?,
        n_cos: at_least("scatter.n_cos", get!("scatter.n_cos", 5, |k, v| integer::<usize>(k, &v)), 2)?,
        kernel_scale: get!("scatter.kernel_scale", 1.0, |k, v| scalar(k, &v, Kind::Plain)),
        angles: at_least("scatter.angles", get!("scatter.angles", 9, |k, v| integer::<usize>(k, &v)), 2)?,
    };
    if !(scatter.q0 >= 0.0) {
        return Err(Error::config("scatter.q0", "must be non-negative"));
    }
    let output = PathBuf::from(e.take("output.dir").unwrap_or_else(|| "out".into()));
    let seed = get!("seed", 0, |k, v| integer::<u64>(k, &v));

    if let Some((key, (line, _))) = e.map.iter().next() {
        return Err(Error::config(key.clone(), format!("unknown key (line {line})")));
    }
    if mode != Mode::SingularityMap && potentials.is_none() {
        return Err(Error::config("potential.beta", "missing: this mode needs pair potentials"));
    }
    Ok(RunConfig {
        mode,
        masses,
        potentials,
        grids,
        bound,
        twobody,
        singularity,
        scatter,
        output,
        seed,
    })
}

pub fn parse_config(path: &Path, mode: Option<Mode>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    parse_config_str(&text, mode).map_err(|e| match e {
        Error::Config { path: key, message } => Error::config(format!("{}: {key}", path.display()), message),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "mode = bound\nmasses = 938.272 939.565 938.272\npotential.beta = 230\npotential.binding = -2.2246\n";

    #[test]
    fn minimal_bound_config_gets_defaults() {
        let c = parse_config_str(MINIMAL, None).unwrap();
        assert_eq!((c.grids.n_q, c.grids.n_x, c.grids.n_phi), (32, 32, 16));
        assert_eq!(c.mode, Mode::Bound);
        let p = c.potentials.as_ref().unwrap();
        assert!(p.iter().all(|pc| pc.rank == 1 && pc.beta == vec![230.0]));
        assert!(c.pair_potentials().is_ok());
    }

    #[test]
    fn fm_momentum_scale_converts() {
        let c = parse_config_str(&format!("{MINIMAL}grids.scale = 1.5 fm-1\n"), None).unwrap();
        assert!((c.grids.scale - 295.99047).abs() < 1e-4, "{}", c.grids.scale);
    }

    #[test]
    fn negative_mass_names_field() {
        let err = parse_config_str("mode = bound\nmasses = -1 939 938\npotential.beta = 230\npotential.binding = -2\n", None)
            .unwrap_err();
        assert!(err.to_string().contains("masses[1]"), "{err}");
    }

    #[test]
    fn bad_unit_and_missing_field() {
        let err = parse_config_str(&format!("{MINIMAL}grids.scale = 1.5 fm\n"), None).unwrap_err();
        assert!(err.to_string().contains("bad unit tag"), "{err}");
        let err = parse_config_str("mode = bound\nmasses = 1 1 1\npotential.binding = -2\n", None).unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
        let err = parse_config_str("mode = bound\nmasses = 1 1\n", None).unwrap_err();
        assert!(err.to_string().contains("masses"), "{err}");
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert!(parse_config_str(&format!("{MINIMAL}grid.n_q = 3\n"), None).is_err());
        assert!(parse_config_str(&format!("{MINIMAL}seed = 1\nseed = 2\n"), None).is_err());
    }

    #[test]
    fn per_pair_override() {
        let c = parse_config_str(&format!("{MINIMAL}potential.12.binding = -0.5\n"), None).unwrap();
        let p = c.potentials.unwrap();
        assert_eq!(p[2].binding, Some(-0.5));
        assert_eq!(p[0].binding, Some(-2.2246));
    }

    #[test]
    fn canonical_text_round_trips() {
        let c = parse_config_str(&format!("{MINIMAL}grids.scale = 1.5 fm-1\nseed = 7\n"), None).unwrap();
        let again = parse_config_str(&c.to_text(), None).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn singularity_mode_needs_no_potential() {
        let c = parse_config_str("mode = singularity-map\nmasses = 938.272 939.565 938.272\n", None).unwrap();
        assert_eq!(c.singularity.energy, 1.0);
        assert!(c.potentials.is_none());
    }
}
