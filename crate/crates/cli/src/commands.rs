use std::fs;
use std::io::Write;
use std::path::Path;

use dopinv_core::forward::{
    contact_voltage, doping_from_gamma, equilibrium_gamma, synthesize_from_gamma, DopingField,
    GammaField, Measurement, MeasurementSet, VoltageProfile,
};
use dopinv_core::grid::{indicator, Grid, ScalarField};
use dopinv_core::inverse::{
    default_fd_step, gamma_from_phi, gradient_adjoint, gradient_fd, init_phi, reconstruct,
    LevelSetState, StopReason,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Phantom, RunConfig, TruthGamma};
use crate::error::{CliError, Result};

/// Largest grid accepted by `gradcheck`.
pub const GRADCHECK_MAX_N: usize = 16;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

pub const DOPING_FILE: &str = "doping.txt";
pub const GAMMA_FILE: &str = "gamma.txt";
pub const INDICATOR_FILE: &str = "indicator.txt";
pub const PHI_FILE: &str = "phi.txt";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

struct PhantomFields {
    doping: DopingField,
    indicator: ScalarField,
    phi: Option<ScalarField>,
}

fn grid(cfg: &RunConfig) -> Grid {
    Grid::new(cfg.grid_n).expect("grid size validated by the config parser")
}

fn phantom(cfg: &RunConfig) -> Result<PhantomFields> {
    let g = grid(cfg);
    match &cfg.phantom {
        None => Err(CliError::config("phantom", "missing")),
        Some(Phantom::Uniform(level)) => {
            let doping = DopingField::new(ScalarField::constant(g, *level), cfg.bounds)?;
            let indicator = ScalarField::constant(g, if *level > 0.0 { 1.0 } else { 0.0 });
            Ok(PhantomFields {
                doping,
                indicator,
                phi: None,
            })
        }
        Some(Phantom::Shaped(shape)) => {
            let phi = init_phi(g, shape).map_err(|e| CliError::config("phantom", e.to_string()))?;
            let c = phi.map(|p| if p >= 0.0 { cfg.doping_n } else { cfg.doping_p });
            let doping = DopingField::new(c, cfg.bounds)?;
            Ok(PhantomFields {
                doping,
                indicator: indicator(&phi),
                phi: Some(phi),
            })
        }
    }
}

fn level_set(cfg: &RunConfig, phi: ScalarField) -> Result<LevelSetState> {
    Ok(LevelSetState::new(
        phi,
        cfg.gamma_p,
        cfg.gamma_n,
        cfg.eps_smooth,
    )?)
}

fn truth_gamma(cfg: &RunConfig, p: &PhantomFields) -> Result<GammaField> {
    match (cfg.truth_gamma, &p.phi) {
        (TruthGamma::LevelSet, Some(phi)) => Ok(gamma_from_phi(&level_set(cfg, phi.clone())?)),
        _ => Ok(equilibrium_gamma(&p.doping, cfg.lambda_sq)?),
    }
}

fn profiles(cfg: &RunConfig) -> Result<Vec<VoltageProfile>> {
    let g = grid(cfg);
    cfg.voltages
        .iter()
        .map(|c| {
            contact_voltage(c.center, c.half_width, c.amplitude, g)
                .map_err(|e| CliError::config("voltage", e.to_string()))
        })
        .collect()
}

fn synthesize(cfg: &RunConfig, gamma: &GammaField) -> Result<MeasurementSet> {
    Ok(synthesize_from_gamma(
        gamma,
        cfg.mobilities,
        &profiles(cfg)?,
        cfg.inversion.kind,
        cfg.noise_level,
        cfg.seed,
    )?)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::config("output", format!("{}: {e}", dir.display())))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text)
        .map_err(|e| CliError::config("output", format!("{}: {e}", path.display())))
}

/// Measurement data from the `data` manifest, or synthesized from the phantom.
fn load_data(cfg: &RunConfig) -> Result<(MeasurementSet, Option<PhantomFields>)> {
    let truth = cfg.phantom.as_ref().map(|_| phantom(cfg)).transpose()?;
    let data = match (&cfg.data, &truth) {
        (Some(path), _) => {
            let set = MeasurementSet::read_manifest(path)
                .map_err(|e| CliError::config("data", e.to_string()))?;
            if set.grid().n() != cfg.grid_n {
                return Err(CliError::config(
                    "data",
                    format!(
                        "data grid {} differs from grid_n {}",
                        set.grid().n(),
                        cfg.grid_n
                    ),
                ));
            }
            if set.kind() != cfg.inversion.kind {
                return Err(CliError::config(
                    "data",
                    format!("data kind {} differs from kind", set.kind().as_str()),
                ));
            }
            set
        }
        (None, Some(p)) => synthesize(cfg, &truth_gamma(cfg, p)?)?,
        (None, None) => {
            return Err(CliError::config(
                "data",
                "missing (and no phantom to synthesize from)",
            ))
        }
    };
    Ok((data, truth))
}

/// Writes the phantom doping, its `gamma` and the N-region indicator.
pub fn phantom_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let p = phantom(cfg)?;
    let gamma = truth_gamma(cfg, &p)?;
    create_dir(&cfg.output)?;
    write_file(&cfg.output, DOPING_FILE, &p.doping.field().to_text())?;
    write_file(&cfg.output, GAMMA_FILE, &gamma.field().to_text())?;
    write_file(&cfg.output, INDICATOR_FILE, &p.indicator.to_text())?;
    let ones = p.indicator.values().iter().filter(|&&v| v == 1.0).count();
    let _ = writeln!(out, "n_region_cells = {ones}");
    Ok(())
}

/// Simulates the measurements of the phantom and writes the measurement set.
pub fn forward_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let p = phantom(cfg)?;
    let gamma = truth_gamma(cfg, &p)?;
    let data = synthesize(cfg, &gamma)?;
    create_dir(&cfg.output)?;
    data.write_to_dir(&cfg.output)
        .map_err(|e| CliError::config("output", e.to_string()))?;
    write_file(&cfg.output, GAMMA_FILE, &gamma.field().to_text())?;
    for (j, entry) in data.entries().iter().enumerate() {
        if let Measurement::CurrentFlow(v) = entry.noisy {
            let _ = writeln!(out, "current_flow[{j}] = {v:e}");
        }
    }
    Ok(())
}

/// Runs the level-set reconstruction. Results are written even when the run
/// ends without convergence.
pub fn invert_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let (data, truth) = load_data(cfg)?;
    let g = grid(cfg);
    let init = level_set(
        cfg,
        init_phi(g, &cfg.init).map_err(|e| CliError::config("init", e.to_string()))?,
    )?;
    let ground_truth = truth.as_ref().map(|t| &t.indicator);
    let result = reconstruct(&data, &cfg.inversion, &init, cfg.mobilities, ground_truth)?;

    let state = &result.state;
    let gamma = gamma_from_phi(state);
    let recovered = doping_from_gamma(&gamma, cfg.lambda_sq, cfg.bounds)?;
    create_dir(&cfg.output)?;
    write_file(&cfg.output, CONVERGENCE_FILE, &result.convergence_csv())?;
    write_file(&cfg.output, PHI_FILE, &state.phi().to_text())?;
    write_file(&cfg.output, GAMMA_FILE, &gamma.field().to_text())?;
    write_file(&cfg.output, INDICATOR_FILE, &state.indicator().to_text())?;
    write_file(
        &cfg.output,
        DOPING_FILE,
        &recovered.doping.field().to_text(),
    )?;

    let last = result.final_record();
    let _ = writeln!(out, "stop = {}", result.stop_reason.as_str());
    let _ = writeln!(out, "iterations = {}", result.iterations);
    let _ = writeln!(out, "residual = {:e}", last.residual);
    if let Some(e) = last.symdiff_error {
        let _ = writeln!(out, "symdiff_error = {e:e}");
    }
    if recovered.clamped > 0 {
        let _ = writeln!(out, "clamped_doping_cells = {}", recovered.clamped);
    }
    match &result.stop_reason {
        r if r.converged() => Ok(()),
        StopReason::SolverFailure(msg) => Err(CliError::SolverFailure(msg.clone())),
        r => Err(CliError::NotConverged(r.as_str().to_string())),
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Compares adjoint and finite-difference gradients at the (optionally
/// jittered) initial level set.
pub fn gradcheck_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    if cfg.grid_n > GRADCHECK_MAX_N {
        return Err(CliError::config(
            "grid_n",
            format!("gradcheck is limited to grid_n <= {GRADCHECK_MAX_N}"),
        ));
    }
    let (data, _) = load_data(cfg)?;
    let g = grid(cfg);
    let mut phi = init_phi(g, &cfg.init).map_err(|e| CliError::config("init", e.to_string()))?;
    if cfg.phi_jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for p in phi.values_mut() {
            *p += cfg.phi_jitter * rng.random_range(-1.0..1.0);
        }
    }
    let state = level_set(cfg, phi)?;
    let adjoint = gradient_adjoint(&state, &data, cfg.mobilities)?;
    let fd = gradient_fd(&state, &data, cfg.mobilities, default_fd_step(state.phi()))?;
    let diff: Vec<f64> = adjoint
        .values()
        .iter()
        .zip(fd.values())
        .map(|(a, b)| a - b)
        .collect();
    let (na, nf) = (l2(adjoint.values()), l2(fd.values()));
    let _ = writeln!(out, "adjoint_norm = {na:e}");
    let _ = writeln!(out, "fd_norm = {nf:e}");
    if na < 1e-12 && nf < 1e-12 {
        let _ = writeln!(out, "relative_l2_error = 0e0");
        return Ok(());
    }
    let rel = if nf > 0.0 {
        l2(&diff) / nf
    } else {
        f64::INFINITY
    };
    let _ = writeln!(out, "relative_l2_error = {rel:e}");
    if rel <= GRADCHECK_TOLERANCE {
        Ok(())
    } else {
        Err(CliError::GradientCheck(rel, GRADCHECK_TOLERANCE))
    }
}
