//! Mode dispatch and output emission.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::faddeev::{find_binding_energy, reconstruct_components, wavefunction_surface, EigenSolution, FaddeevComponents};
use crate::grids::{gauss_legendre, momentum_grid, periodic_trapezoid, uniform_axis};
use crate::io::config::{Mode, RunConfig};
use crate::io::manifest::{now_rfc3339, write_file, write_manifest, FileRecord, RunManifest, MANIFEST_FILE};
use crate::kinematics::{Partition, SphericalMomentum};
use crate::scattering::{elastic_amplitude, neumann_pade_solve, AmplitudeGrid, ScatteringSystem};
use crate::singularity::{boundary_curves, region_to_csv, GreenFunctionSpec};
use crate::twobody::{find_two_body_bound_state, TwoBodyBoundState};

/// Files a mode writes, besides the manifest.
pub fn output_files(config: &RunConfig) -> Vec<String> {
    match config.mode {
        Mode::Bound => vec!["bound.json".into(), "psi1_surface.csv".into(), "psi2_surface.csv".into()],
        Mode::Twobody => vec!["twobody.json".into(), "twobody_waves.csv".into()],
        Mode::SingularityMap => vec![format!("singularity_v{}.csv", config.singularity.variant)],
        Mode::ScatterDrive => vec!["driving_terms.csv".into(), "iteration.json".into(), "elastic_amplitude.csv".into()],
    }
}

fn prepare_dir(config: &RunConfig) -> Result<()> {
    let dir = &config.output;
    std::fs::create_dir_all(dir)?;
    let allowed = output_files(config);
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name != MANIFEST_FILE && !allowed.contains(&name) {
            return Err(Error::config(
                "output.dir",
                format!("{} holds '{name}', which this run would not produce", dir.display()),
            ));
        }
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn surface_csv(p: &[f64], q: &[f64], values: &Array2<f64>) -> String {
    let mut s = String::from("p,q,psi\n");
    for (a, &pp) in p.iter().enumerate() {
        for (b, &qq) in q.iter().enumerate() {
            let _ = writeln!(s, "{pp:.16e},{qq:.16e},{:.16e}", values[(a, b)]);
        }
    }
    s
}

#[derive(Serialize)]
struct BoundReport<'a> {
    solution: &'a EigenSolution,
    components: &'a FaddeevComponents,
}

fn run_bound(config: &RunConfig, dir: &Path) -> Result<(Vec<FileRecord>, serde_json::Value)> {
    let masses = config.mass_set()?;
    let pots = config.pair_potentials()?;
    let grids = config.grids.kernel_grids()?;
    let solution = find_binding_energy(&config.search_settings(), &grids, &masses, &pots)?;
    let components = reconstruct_components(&solution.phi);
    let mut files = vec![write_file(
        dir,
        "bound.json",
        &json_bytes(&BoundReport {
            solution: &solution,
            components: &components,
        })?,
    )?];
    let p_axis = uniform_axis(config.bound.surface_points, 0.0, config.bound.surface_max)?.nodes;
    let q_axis: Vec<f64> = solution.q_nodes.iter().copied().filter(|&q| q <= config.bound.surface_max).collect();
    for (name, part) in [("psi1_surface.csv", Partition::P1), ("psi2_surface.csv", Partition::P2)] {
        let surface = wavefunction_surface(part, &components.psi[part.slot()], &solution, &pots, &p_axis, &q_axis)?;
        files.push(write_file(dir, name, surface_csv(&p_axis, &q_axis, &surface).as_bytes())?);
    }
    let diagnostics = json!({
        "energy": solution.energy,
        "eta": solution.eta,
        "residual": solution.residual,
        "evaluations": solution.trace.len(),
        "identity_residual": components.identity_residual,
        "two_body_threshold": solution.two_body_threshold,
    });
    Ok((files, diagnostics))
}

fn bound_states(config: &RunConfig) -> Result<[TwoBodyBoundState; 3]> {
    let pots = config.pair_potentials()?;
    let find = |p: Partition| {
        find_two_body_bound_state(pots.get(p), config.twobody.window).map_err(|e| e.context(format!("pair ({})", p.pair_label())))
    };
    Ok([find(Partition::P1)?, find(Partition::P2)?, find(Partition::P3)?])
}

fn run_twobody(config: &RunConfig, dir: &Path) -> Result<(Vec<FileRecord>, serde_json::Value)> {
    let states = bound_states(config)?;
    let pots = config.pair_potentials()?;
    let pairs: Vec<_> = Partition::ALL
        .iter()
        .map(|&p| {
            json!({
                "pair": p.pair_label(),
                "reduced_mass": pots.get(p).reduced_mass,
                "strength": pots.get(p).strength,
                "bound_state": &states[p.slot()],
            })
        })
        .collect();
    let mut files = vec![write_file(dir, "twobody.json", &json_bytes(&pairs)?)?];
    let axis = uniform_axis(config.twobody.points, 0.0, config.twobody.p_max)?.nodes;
    let mut csv = String::from("p,phi_23,phi_31,phi_12\n");
    for &p in &axis {
        let _ = writeln!(
            csv,
            "{p:.16e},{:.16e},{:.16e},{:.16e}",
            states[0].wave(p),
            states[1].wave(p),
            states[2].wave(p)
        );
    }
    files.push(write_file(dir, "twobody_waves.csv", csv.as_bytes())?);
    let diagnostics = json!({ "energies": states.iter().map(|s| s.energy).collect::<Vec<_>>() });
    Ok((files, diagnostics))
}

fn run_singularity(config: &RunConfig, dir: &Path) -> Result<(Vec<FileRecord>, serde_json::Value)> {
    let sc = &config.singularity;
    let spec = GreenFunctionSpec::new(sc.variant, config.mass_set()?, sc.energy)?;
    let region = boundary_curves(&spec, sc.samples)?;
    let name = format!("singularity_v{}.csv", sc.variant);
    let files = vec![write_file(dir, &name, region_to_csv(&region).as_bytes())?];
    let diagnostics = json!({
        "q_vee": region.q_vee,
        "q_wedge": region.q_wedge,
        "band_width": region.band_width(),
        "area": region.area(),
    });
    Ok((files, diagnostics))
}

fn run_scatter(config: &RunConfig, dir: &Path) -> Result<(Vec<FileRecord>, serde_json::Value)> {
    let sc = &config.scatter;
    let masses = config.mass_set()?;
    let pots = config.pair_potentials()?;
    let states = bound_states(config)?.map(Some);
    let grid = AmplitudeGrid::new(sc.n_p, sc.n_cos, momentum_grid(sc.n_q, config.grids.scale)?)?;
    let system = ScatteringSystem::new(
        grid,
        gauss_legendre(sc.n_x, -1.0, 1.0)?,
        periodic_trapezoid(sc.n_phi, 2.0 * PI)?,
        masses,
        &pots,
        states,
        sc.energy,
        sc.q0,
    )?
    .with_kernel_scale(sc.kernel_scale);
    let solution = neumann_pade_solve(&system, sc.max_order, sc.tolerance)?;

    let mut csv = String::from("partition,p,x_p,x_pq,x_q,q,value\n");
    for d in &solution.driving {
        for ((a, b, c, e, f), v) in d.values.indexed_iter() {
            let g = &system.grid;
            let _ = writeln!(
                csv,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{v:.16e}",
                d.partition.index(),
                g.p[a],
                g.x_p[b],
                g.x_dihedral[c],
                g.x_q[e],
                g.q.nodes[f]
            );
        }
    }
    let mut files = vec![write_file(dir, "driving_terms.csv", csv.as_bytes())?];
    let trace = json!({
        "order": solution.order,
        "accelerated": solution.accelerated,
        "residual": solution.residual,
        "scale": solution.scale,
        "spectral_radius": solution.spectral_radius,
        "neumann_trace": solution.neumann_trace,
        "accelerated_trace": solution.accelerated_trace,
        "probe": solution.probe,
    });
    files.push(write_file(dir, "iteration.json", &json_bytes(&trace)?)?);

    let mut amp = String::from("x,re,im\n");
    for &x in &uniform_axis(sc.angles, -1.0, 1.0)?.nodes {
        let q = SphericalMomentum::new(sc.q0, x, 0.0)?;
        let a = elastic_amplitude(&system, &solution.t[1], &solution.t[2], &q)?;
        let _ = writeln!(amp, "{x:.16e},{:.16e},{:.16e}", a.re, a.im);
    }
    files.push(write_file(dir, "elastic_amplitude.csv", amp.as_bytes())?);
    let diagnostics = json!({
        "order": solution.order,
        "accelerated": solution.accelerated,
        "residual": solution.residual,
        "spectral_radius": solution.spectral_radius,
    });
    Ok((files, diagnostics))
}

/// Runs the configured mode, writes every output and the manifest into
/// `config.output`.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    let started = now_rfc3339();
    prepare_dir(config)?;
    let dir = config.output.as_path();
    let (files, diagnostics) = match config.mode {
        Mode::Bound => run_bound(config, dir),
        Mode::Twobody => run_twobody(config, dir),
        Mode::SingularityMap => run_singularity(config, dir),
        Mode::ScatterDrive => run_scatter(config, dir),
    }
    .map_err(|e| e.context(format!("{} run", config.mode)))?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        mode: config.mode.to_string(),
        config: config.clone(),
        config_text: config.to_text(),
        started,
        finished: now_rfc3339(),
        files,
        diagnostics,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}
