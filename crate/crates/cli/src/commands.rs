use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use floquet_sb::linalg::{self, CMat};
use floquet_sb::model::{
    discretize, discretize_gauss_legendre, DiscreteBath, DriveConfig, IntegralOptions, OhmicSpectralDensity,
};
use floquet_sb::oracle::{
    build_operators, frame_unitary, mode_occupation, purification, thermal_state, FockSpace, Operators,
    RotatingPropagator,
};
use floquet_sb::reduced::{expectation, integrals_on_grid, upper_envelope};
use floquet_sb::strobe::{
    check_cutoff, floquet_hamiltonian, observable_family, polaron_coherence, StroboscopicSimulator,
};
use floquet_sb::{BathRoute, Order, QubitState, ReducedDynamics, SpectralIntegrals, ThermalParams};

use crate::config::{drive_for, linspace, RunConfig, MODEL_KEYS};
use crate::output::{fmt, CsvOut};
use crate::CliError;

pub const CDT_RATIO: f64 = 2.404826;

fn allowed<'a>(base: &[&'a str], extra: &[&'a str], drop: &[&str]) -> Vec<&'a str> {
    base.iter()
        .chain(extra)
        .copied()
        .filter(|k| !drop.contains(k))
        .collect()
}

fn integral_options(cfg: &RunConfig, sd: &OhmicSpectralDensity) -> Result<IntegralOptions, CliError> {
    Ok(IntegralOptions {
        omega_max: Some(cfg.omega_max(sd)?),
        ..Default::default()
    })
}

/// `⟨σ_z⟩` along a time grid with precomputed continuum integrals.
fn sz_series(
    rd: &ReducedDynamics,
    times: &[f64],
    ints: &[SpectralIntegrals],
    rho0: &QubitState,
    lab: bool,
) -> Result<Vec<f64>, CliError> {
    let sz = linalg::sigma_z();
    let out: floquet_sb::Result<Vec<f64>> = times
        .par_iter()
        .zip(ints)
        .map(|(&t, i)| {
            let r = rd.rho_continuum(t, rho0, *i)?;
            let r = if lab { rd.to_lab(&r, t) } else { r };
            Ok(expectation(&r, &sz))
        })
        .collect();
    Ok(out?)
}

pub fn fig1b(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    cfg.check_keys(&allowed(MODEL_KEYS, &["ratio1", "ratio2"], &["amplitude_ratio"]))?;
    let sd = cfg.spectral_density(0.15, 0.9)?;
    let th = cfg.thermal(1.0)?;
    let opts = integral_options(cfg, &sd)?;
    let omega0 = cfg.f64_or("omega0", 1.0)?;
    let wl = cfg.f64_or("omegaL", 10.0)?;
    let ratios = [cfg.f64_or("ratio1", 3.83)?, cfg.f64_or("ratio2", CDT_RATIO)?];
    let times = cfg.time_grid(50.0, 2001)?;
    let rho0 = cfg.initial_state("minus_y")?;
    let ints = integrals_on_grid(&sd, &times, &th, opts)?;
    let mut cols = Vec::new();
    for r in ratios {
        let rd = ReducedDynamics::new(drive_for(omega0, r, wl)?, th, Order::First)?;
        cols.push(sz_series(&rd, &times, &ints, &rho0, true)?);
    }
    let header = ["time", "sz_lab_ratio1", "sz_lab_ratio2"].map(String::from);
    let mut w = CsvOut::create(out, "fig1b", &cfg.hash(), &header)?;
    for (k, t) in times.iter().enumerate() {
        w.row(&[Some(*t), Some(cols[0][k]), Some(cols[1][k])])?;
    }
    w.finish()
}

pub fn fig1c(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    cfg.check_keys(&allowed(
        MODEL_KEYS,
        &["ratio_min", "ratio_max", "n_ratios"],
        &["amplitude_ratio"],
    ))?;
    let sd = cfg.spectral_density(0.15, 0.9)?;
    let th = cfg.thermal(1.0)?;
    let opts = integral_options(cfg, &sd)?;
    let omega0 = cfg.f64_or("omega0", 1.0)?;
    let wl = cfg.f64_or("omegaL", 10.0)?;
    let (r0, r1) = (cfg.f64_or("ratio_min", 0.0)?, cfg.f64_or("ratio_max", 5.0)?);
    let nr = cfg.usize_or("n_ratios", 101)?;
    if nr < 2 || !(r1 > r0) {
        return Err(CliError::Config(
            "ratio_min/ratio_max/n_ratios: need ratio_max > ratio_min and n_ratios >= 2".into(),
        ));
    }
    let ratios = linspace(r0, r1, nr);
    let times = cfg.time_grid(50.0, 2001)?;
    let rho0 = cfg.initial_state("minus_y")?;
    let ints = integrals_on_grid(&sd, &times, &th, opts)?;
    let sz = linalg::sigma_z();
    let rows: Vec<Vec<(f64, f64)>> = ratios
        .par_iter()
        .map(|&r| -> Result<_, CliError> {
            let drive = drive_for(omega0, r, wl)?;
            let rd = ReducedDynamics::new(drive, th, Order::First)?;
            let series = times
                .iter()
                .zip(&ints)
                .map(|(&t, i)| Ok((t, expectation(&rd.to_lab(&rd.rho_continuum(t, &rho0, *i)?, t), &sz))))
                .collect::<floquet_sb::Result<Vec<_>>>()?;
            Ok(upper_envelope(&series, drive.period())?)
        })
        .collect::<Result<_, _>>()?;
    let header = ["ratio", "time", "envelope"].map(String::from);
    let mut w = CsvOut::create(out, "fig1c", &cfg.hash(), &header)?;
    for (r, env) in ratios.iter().zip(&rows) {
        for (t, v) in env {
            w.row(&[Some(*r), Some(*t), Some(*v)])?;
        }
    }
    w.finish()
}

pub fn fig1d(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    cfg.check_keys(&allowed(
        MODEL_KEYS,
        &["omegaL_values", "include_infinite"],
        &["omegaL"],
    ))?;
    let sd = cfg.spectral_density(0.5, 0.9)?;
    let th = cfg.thermal(1.0 / 7.0)?;
    let opts = integral_options(cfg, &sd)?;
    let omega0 = cfg.f64_or("omega0", 1.0)?;
    let ratio = cfg.f64_or("amplitude_ratio", CDT_RATIO)?;
    let omegas = cfg.list_or("omegaL_values", &[10.0, 15.0, 20.0])?;
    let with_inf = cfg.bool_or("include_infinite", true)?;
    let times = cfg.time_grid(30.0, 601)?;
    let rho0 = cfg.initial_state("plus_z")?;
    let ints = integrals_on_grid(&sd, &times, &th, opts)?;
    let mut header = vec!["time".to_string()];
    let mut cols = Vec::new();
    for &wl in &omegas {
        let rd = ReducedDynamics::new(drive_for(omega0, ratio, wl)?, th, Order::First)?;
        cols.push(sz_series(&rd, &times, &ints, &rho0, false)?);
        header.push(format!("sz_rot_{}", wl));
    }
    if with_inf {
        let wl = omegas[0];
        let rd = ReducedDynamics::new(drive_for(omega0, ratio, wl)?, th, Order::Zeroth)?;
        cols.push(sz_series(&rd, &times, &ints, &rho0, false)?);
        header.push("sz_rot_inf".into());
    }
    let mut w = CsvOut::create(out, "fig1d", &cfg.hash(), &header)?;
    for (k, t) in times.iter().enumerate() {
        let mut row = vec![Some(*t)];
        row.extend(cols.iter().map(|c| Some(c[k])));
        w.row(&row)?;
    }
    w.finish()
}

// ---------------------------------------------------------------------------
// discrete-bath commands

struct OracleModel {
    ops: Operators,
    rho0: CMat,
}

fn discrete_bath(cfg: &RunConfig, sd: &OhmicSpectralDensity, omega_max_default: f64) -> Result<DiscreteBath, CliError> {
    let n = cfg.usize_or("n_modes", 1)?;
    let w = cfg.f64_or("omega_max", omega_max_default)?;
    Ok(match cfg.str_or("placement", "midpoint") {
        "midpoint" => discretize(sd, n, w)?,
        "gauss_legendre" => discretize_gauss_legendre(sd, n, w)?,
        other => {
            return Err(CliError::Config(format!(
                "placement: expected midpoint or gauss_legendre, got {other:?}"
            )))
        }
    })
}

fn oracle_model(
    cfg: &RunConfig,
    bath: &DiscreteBath,
    th: &ThermalParams,
    rho0_s: &QubitState,
    cutoff_default: usize,
) -> Result<OracleModel, CliError> {
    let cutoff = cfg.usize_or("fock_cutoff", cutoff_default)?;
    let fock = FockSpace::uniform(bath.len(), cutoff)?;
    let ops = build_operators(&fock, bath)?;
    let rho_b = thermal_state(bath, &fock, th)?.rho;
    let rho0 = linalg::kron(rho0_s.matrix(), &rho_b);
    Ok(OracleModel { ops, rho0 })
}

/// `Σ_cols ψ† (o ⊗ 1) ψ` for a 2×2 qubit operator `o`.
fn qubit_expectation(psi: &CMat, o: &CMat, bath_dim: usize) -> f64 {
    let mut acc = 0.0;
    for col in 0..psi.ncols() {
        for b in 0..bath_dim {
            for i in 0..2 {
                for j in 0..2 {
                    acc += (psi[(i * bath_dim + b, col)].conj() * o[(i, j)] * psi[(j * bath_dim + b, col)]).re;
                }
            }
        }
    }
    acc
}

/// `o` as seen from the lab frame when the state is held in the rotating frame.
fn lab_operator(o: &CMat, drive: &DriveConfig, t: f64) -> CMat {
    let u = frame_unitary(drive, t);
    u.adjoint() * o * u
}

fn steps_for(cfg: &RunConfig, key: &str, default: usize, multiple: usize) -> Result<usize, CliError> {
    let p = cfg.usize_or(key, default)?;
    if p < floquet_sb::oracle::MIN_STEPS_PER_PERIOD || p % multiple != 0 {
        return Err(CliError::Config(format!(
            "{key}: need a multiple of {multiple} and at least {}, got {p}",
            floquet_sb::oracle::MIN_STEPS_PER_PERIOD
        )));
    }
    Ok(p)
}

pub fn fig2(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    cfg.check_keys(&allowed(
        MODEL_KEYS,
        &[
            "n_modes",
            "fock_cutoff",
            "placement",
            "steps_per_period",
            "periods",
            "curve_stride",
            "tau_fractions",
            "n_tau",
        ],
        &["t_min", "t_max", "n_points"],
    ))?;
    let sd = cfg.spectral_density(0.5, 1.3)?;
    let th = cfg.thermal(1.0 / 3.5)?;
    let drive = cfg.drive(2.7, 11.0)?;
    let rho0_s = cfg.initial_state("plus_z")?;
    let bath = discrete_bath(cfg, &sd, 2.0 * sd.omega_c)?;
    let model = oracle_model(cfg, &bath, &th, &rho0_s, 40)?;
    let ops = &model.ops;
    let p = steps_for(cfg, "steps_per_period", 520, 1)?;
    let periods = cfg.usize_or("periods", 10)?;
    let stride = cfg.usize_or("curve_stride", 4)?.max(1);
    let fracs = cfg.list_or("tau_fractions", &[0.0, 0.5, 1.0 / 2.6])?;
    let n_tau = cfg.usize_or("n_tau", 64)?;
    if n_tau == 0 {
        return Err(CliError::Config("n_tau: must be positive".into()));
    }
    let mut tau_steps = Vec::new();
    for &f in &fracs {
        let s = f * p as f64;
        if !(0.0..1.0).contains(&f) || (s - s.round()).abs() > 1e-6 {
            return Err(CliError::Config(format!(
                "tau_fractions: {f} must lie in [0,1) and be a multiple of 1/steps_per_period ({p})"
            )));
        }
        tau_steps.push(s.round() as usize);
    }
    let period = drive.period();
    let h = period / p as f64;

    // driven oracle on the union of the curve grid and the dot times
    let dots: BTreeMap<usize, usize> = tau_steps
        .iter()
        .enumerate()
        .flat_map(|(k, &s)| (0..=periods).map(move |n| (s + n * p, k)))
        .collect();
    let n_steps = periods * p + tau_steps.iter().copied().max().unwrap_or(0);
    let bd = ops.fock.bath_dim();
    let sz = linalg::sigma_z();
    let prop = RotatingPropagator::new(&drive, ops, p)?;
    let mut curve: Vec<(usize, f64, f64)> = Vec::new();
    let last = prop.evolve(purification(&model.rho0), n_steps, 1, |i, t, psi| {
        if i % stride == 0 || dots.contains_key(&i) {
            let rot = qubit_expectation(psi, &sz, bd);
            let lab = qubit_expectation(psi, &lab_operator(&sz, &drive, t), bd);
            curve.push((i, rot, lab));
        }
    });
    check_cutoff(&(&last * last.adjoint()), ops);

    let hf = floquet_hamiltonian(0.0, &drive, ops)?;
    let sim = StroboscopicSimulator::new(&hf, 0.0, &drive);
    let strob: Vec<Vec<f64>> = fracs
        .par_iter()
        .map(|&f| {
            Ok(sim.samples(
                &observable_family(&ops.sz, f * period, 0.0, &drive, ops)?,
                periods,
                &model.rho0,
            ))
        })
        .collect::<Result<_, CliError>>()?;

    let mut header = vec!["time".to_string(), "sz_driven".into(), "sz_driven_lab".into()];
    header.extend(fracs.iter().map(|f| format!("strob_tau={}", fmt(f * period))));
    let hash = cfg.hash();
    let mut w = CsvOut::create(out, "fig2", &hash, &header)?;
    for (i, rot, lab) in &curve {
        let mut row = vec![Some(*i as f64 * h), Some(*rot), Some(*lab)];
        for (k, &s) in tau_steps.iter().enumerate() {
            let hit = *i >= s && (i - s) % p == 0 && (i - s) / p <= periods;
            row.push(hit.then(|| strob[k][(i - s) / p]));
        }
        w.row(&row)?;
    }
    w.finish()?;

    // (b): τ × n grid
    let taus: Vec<f64> = (0..n_tau).map(|k| k as f64 * period / n_tau as f64).collect();
    let grid: Vec<Vec<f64>> = taus
        .par_iter()
        .map(|&tau| {
            Ok(sim.samples(
                &observable_family(&ops.sz, tau, 0.0, &drive, ops)?,
                periods,
                &model.rho0,
            ))
        })
        .collect::<Result<_, CliError>>()?;
    let header_b = ["tau", "time", "value"].map(String::from);
    let mut wb = CsvOut::create(&grid_path(out), "fig2", &hash, &header_b)?;
    for (tau, vals) in taus.iter().zip(&grid) {
        for (n, v) in vals.iter().enumerate() {
            wb.row(&[Some(*tau), Some(tau + n as f64 * period), Some(*v)])?;
        }
    }
    wb.finish()
}

/// `dir/name.csv` → `dir/name_b.csv`.
pub fn grid_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("fig2");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}_b.{ext}"))
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    cfg.check_keys(&allowed(
        MODEL_KEYS,
        &[
            "bath",
            "n_modes",
            "placement",
            "order",
            "frame",
            "oracle",
            "fock_cutoff",
            "steps_per_period",
            "polaron_tau",
            "occupations",
        ],
        &[],
    ))?;
    let sd = cfg.spectral_density(0.15, 0.9)?;
    let th = cfg.thermal(1.0)?;
    let drive = cfg.drive(CDT_RATIO, 10.0)?;
    let rho0_s = cfg.initial_state("minus_y")?;
    let order = match cfg.str_or("order", "first") {
        "first" => Order::First,
        "zeroth" => Order::Zeroth,
        other => {
            return Err(CliError::Config(format!(
                "order: expected first or zeroth, got {other:?}"
            )))
        }
    };
    let lab = match cfg.str_or("frame", "rotating") {
        "rotating" => false,
        "lab" => true,
        other => {
            return Err(CliError::Config(format!(
                "frame: expected rotating or lab, got {other:?}"
            )))
        }
    };
    let discrete = match cfg.str_or("bath", "continuum") {
        "continuum" => None,
        "discrete" => Some(discrete_bath(cfg, &sd, 40.0 * sd.omega_c)?),
        other => {
            return Err(CliError::Config(format!(
                "bath: expected continuum or discrete, got {other:?}"
            )))
        }
    };
    let with_oracle = cfg.bool_or("oracle", false)?;
    let polaron_tau = cfg
        .raw("polaron_tau")
        .map(|_| cfg.f64_or("polaron_tau", 0.0))
        .transpose()?;
    let occupations = cfg.bool_or("occupations", false)?;
    if (polaron_tau.is_some() || occupations) && !with_oracle {
        return Err(CliError::Config("polaron_tau/occupations: need oracle = true".into()));
    }

    // time grid; oracle runs snap it onto whole integrator steps
    let mut oracle_steps = None;
    let times = if with_oracle {
        if discrete.is_none() {
            return Err(CliError::Config("oracle: needs bath = discrete".into()));
        }
        if cfg.f64_or("t_min", 0.0)? != 0.0 {
            return Err(CliError::Config("t_min: oracle runs start at 0".into()));
        }
        let p = steps_for(cfg, "steps_per_period", 200, 1)?;
        let h = drive.period() / p as f64;
        let t_max = cfg.f64_or("t_max", 10.0)?;
        let n_points = cfg.usize_or("n_points", 201)?;
        if !(t_max > 0.0) || n_points < 2 {
            return Err(CliError::Config(
                "t_max/n_points: need t_max > 0 and n_points >= 2".into(),
            ));
        }
        let n_steps = (t_max / h).round() as usize;
        let every = (n_steps / (n_points - 1)).max(1);
        oracle_steps = Some((p, n_steps, every));
        (0..=n_steps / every).map(|k| (k * every) as f64 * h).collect()
    } else {
        cfg.time_grid(10.0, 201)?
    };

    let rd = ReducedDynamics::new(drive, th, order)?;
    let paulis = [linalg::sigma_x(), linalg::sigma_y(), linalg::sigma_z()];
    let analytic: Vec<[f64; 3]> = match &discrete {
        None => {
            let ints = integrals_on_grid(&sd, &times, &th, integral_options(cfg, &sd)?)?;
            times
                .par_iter()
                .zip(&ints)
                .map(|(&t, i)| rd.rho_continuum(t, &rho0_s, *i).map(|r| (t, r)))
                .collect::<floquet_sb::Result<Vec<_>>>()?
        }
        Some(b) => times
            .par_iter()
            .map(|&t| rd.rho(t, &rho0_s, BathRoute::Discrete(b)).map(|r| (t, r)))
            .collect::<floquet_sb::Result<Vec<_>>>()?,
    }
    .into_iter()
    .map(|(t, r)| {
        let r = if lab { rd.to_lab(&r, t) } else { r };
        paulis.clone().map(|o| expectation(&r, &o))
    })
    .collect();

    let mut header: Vec<String> = ["time", "sx", "sy", "sz"].map(String::from).to_vec();
    let mut extra: Vec<Vec<f64>> = Vec::new();
    if let (Some((p, n_steps, every)), Some(bath)) = (oracle_steps, &discrete) {
        let model = oracle_model(cfg, bath, &th, &rho0_s, 8)?;
        let ops = &model.ops;
        let bd = ops.fock.bath_dim();
        header.extend(["oracle_sx", "oracle_sy", "oracle_sz"].map(String::from));
        if polaron_tau.is_some() {
            header.push("polaron_coherence".into());
        }
        if occupations {
            header.extend((0..bath.len()).map(|k| format!("occupation_{k}")));
        }
        let prop = RotatingPropagator::new(&drive, ops, p)?;
        let mut err = None;
        let last = prop.evolve(purification(&model.rho0), n_steps, every, |_, t, psi| {
            let mut row: Vec<f64> = paulis
                .iter()
                .map(|o| {
                    let o = if lab { lab_operator(o, &drive, t) } else { o.clone() };
                    qubit_expectation(psi, &o, bd)
                })
                .collect();
            if polaron_tau.is_some() || occupations {
                let rho = psi * psi.adjoint();
                if let Some(tau) = polaron_tau {
                    match polaron_coherence(tau, 0.0, &drive, ops, &rho) {
                        Ok(v) => row.push(v),
                        Err(e) => err = Some(e),
                    }
                }
                if occupations {
                    for k in 0..bath.len() {
                        match mode_occupation(&rho, k, ops) {
                            Ok(v) => row.push(v),
                            Err(e) => err = Some(e),
                        }
                    }
                }
            }
            extra.push(row);
        });
        if let Some(e) = err {
            return Err(e.into());
        }
        check_cutoff(&(&last * last.adjoint()), ops);
    }

    let mut w = CsvOut::create(out, "simulate", &cfg.hash(), &header)?;
    for (k, t) in times.iter().enumerate() {
        let mut row = vec![Some(*t)];
        row.extend(analytic[k].iter().map(|v| Some(*v)));
        if let Some(e) = extra.get(k) {
            row.extend(e.iter().map(|v| Some(*v)));
        }
        w.row(&row)?;
    }
    w.finish()
}
