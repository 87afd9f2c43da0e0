//! Stroboscopic simulation: the static Floquet Hamiltonian `H^F_{t0}`
//! generating one drive period from `t0`, the stroboscopic kick
//! `K^F_{t0}(t) = M̃_{t0}(t)(ω0 + X)` that vanishes at `t0 + nT`, and the
//! observable family `O_τ = e^{iK^F(τ)} O e^{−iK^F(τ)}`.
//!
//! In the rotating frame `U_R(t, t0) = e^{−iK^F(t)} e^{−iH^F (t − t0)}`, so
//! `⟨O⟩(τ + nT)` equals `⟨O_τ⟩` evolved by the static `H^F` for
//! `τ − t0 + nT`.

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, HermitianEigen, C64};
use crate::model::DriveConfig;
use crate::oracle::{boundary_weight, FockOperator, Operators};
use crate::specfun::{KickSeries, DEFAULT_SERIES_TOL};

/// Boundary-level population above which the Fock cutoff is flagged.
pub const CUTOFF_WARN_WEIGHT: f64 = 1e-6;

/// `f̃ = f_t − f_{t0}`, `h̃ = h_t − h_{t0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedKickCoefficients {
    pub f_tilde: f64,
    pub h_tilde: f64,
    pub t0: f64,
    pub t: f64,
}

impl ShiftedKickCoefficients {
    pub fn new(series: &KickSeries, t: f64, t0: f64) -> Self {
        Self {
            f_tilde: series.f(t) - series.f(t0),
            h_tilde: series.h(t) - series.h(t0),
            t0,
            t,
        }
    }

    /// `M̃ = f̃ σ_z − h̃ σ_y`.
    pub fn m_tilde(&self) -> CMat {
        crate::floquet::spin_boson_m(self.f_tilde, self.h_tilde)
    }
}

/// Which first-order terms enter `H^F_{t0}`; the default is the full
/// Hamiltonian. The switches exist for ablation studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetTerms {
    /// `M(t0) Ẋ`.
    pub kick_rate: bool,
    /// `−i[M(t0), S^(0)](ω0 + X)²`.
    pub square: bool,
    /// Sign applied to every `h_{t0}` term.
    pub h_sign: f64,
}

impl Default for FloquetTerms {
    fn default() -> Self {
        Self {
            kick_rate: true,
            square: true,
            h_sign: 1.0,
        }
    }
}

/// `H^F_{t0} = H^F − i[K(t0), H^F]` to first order, which for the spin-boson
/// model reads `J0σ_z(ω0+X) + (f σ_z − h σ_y)Ẋ − 2hJ0σ_x(ω0+X)² + H_B` with
/// `f, h` taken at `t0`.
pub fn floquet_hamiltonian(t0: f64, drive: &DriveConfig, ops: &Operators) -> Result<FockOperator> {
    floquet_hamiltonian_with(t0, drive, ops, FloquetTerms::default())
}

pub fn floquet_hamiltonian_with(
    t0: f64,
    drive: &DriveConfig,
    ops: &Operators,
    terms: FloquetTerms,
) -> Result<FockOperator> {
    let series = KickSeries::new(drive, DEFAULT_SERIES_TOL)?;
    let (f, h) = (series.f(t0), terms.h_sign * series.h(t0));
    let j0 = series.j0();
    let w = &ops.id * c(drive.omega0) + &ops.x;
    let mut hf = &ops.sz * &w * c(j0) + &ops.hb;
    if terms.kick_rate {
        hf += (&ops.sz * c(f) - &ops.sy * c(h)) * &ops.xdot;
    }
    if terms.square {
        hf -= &ops.sx * (&w * &w) * c(2.0 * h * j0);
    }
    FockOperator::hermitian(hf, &ops.fock)
}

/// Same Hamiltonian built from commutators of the generic ingredients
/// `M(t0)`, `S^(0)` instead of the spin-boson closed form.
pub fn floquet_hamiltonian_generic(t0: f64, drive: &DriveConfig, ops: &Operators) -> Result<FockOperator> {
    let ff = crate::floquet::FirstOrderFloquet::from_system(&crate::floquet::SystemOperators::spin_boson(), drive)?;
    let m0 = ops.fock.lift_system(&ff.m_operator(t0));
    let s0 = ops.fock.lift_system(ff.s0());
    let w = &ops.id * c(drive.omega0) + &ops.x;
    let hf0 = &s0 * &w + &ops.hb;
    let k0 = &m0 * &w;
    let hf = &hf0 - linalg::commutator(&k0, &hf0) * linalg::I;
    FockOperator::hermitian(hf, &ops.fock)
}

/// `K^F_{t0}(t) = (f̃σ_z − h̃σ_y)(ω0 + X)`.
pub fn strob_kick(t: f64, t0: f64, drive: &DriveConfig, ops: &Operators) -> Result<FockOperator> {
    let series = KickSeries::new(drive, DEFAULT_SERIES_TOL)?;
    kick_from(&ShiftedKickCoefficients::new(&series, t, t0), drive, ops)
}

fn kick_from(k: &ShiftedKickCoefficients, drive: &DriveConfig, ops: &Operators) -> Result<FockOperator> {
    let w = &ops.id * c(drive.omega0) + &ops.x;
    let m = &ops.sz * c(k.f_tilde) - &ops.sy * c(k.h_tilde);
    FockOperator::hermitian(m * w, &ops.fock)
}

/// `O_τ = e^{iK^F_{t0}(τ)} O e^{−iK^F_{t0}(τ)}`.
#[derive(Debug, Clone)]
pub struct ObservableFamily {
    pub base: CMat,
    pub tau: f64,
    pub t0: f64,
    pub transformed: CMat,
}

pub fn observable_family(
    o: &CMat,
    tau: f64,
    t0: f64,
    drive: &DriveConfig,
    ops: &Operators,
) -> Result<ObservableFamily> {
    if !linalg::is_hermitian(o, 1e-10) {
        return Err(Error::Domain("observable must be Hermitian".into()));
    }
    let k = strob_kick(tau, t0, drive, ops)?;
    Ok(ObservableFamily {
        base: o.clone(),
        tau,
        t0,
        transformed: linalg::symmetrize(&linalg::conjugate_by_exp(&k.matrix, o)),
    })
}

/// Static evolution under `H^F_{t0}` with one eigendecomposition.
#[derive(Debug, Clone)]
pub struct StroboscopicSimulator {
    eig: HermitianEigen,
    t0: f64,
    period: f64,
}

impl StroboscopicSimulator {
    pub fn new(hf: &FockOperator, t0: f64, drive: &DriveConfig) -> Self {
        Self {
            eig: HermitianEigen::new(&hf.matrix),
            t0,
            period: drive.period(),
        }
    }

    /// `Σ_ij e^{−i(λ_i − λ_j)s} ρ_ij O_ji` in the eigenbasis of `H^F`.
    fn weighted_trace(&self, r: &CMat, ob: &CMat, s: f64) -> f64 {
        let ph: Vec<C64> = self.eig.values.iter().map(|&e| C64::from_polar(1.0, -e * s)).collect();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..ph.len() {
            for j in 0..ph.len() {
                acc += ph[i] * ph[j].conj() * r[(i, j)] * ob[(j, i)];
            }
        }
        acc.re
    }

    /// `Tr[e^{−iH^F s} ρ e^{iH^F s} O]` for `s ≥ 0`.
    pub fn expectation_after(&self, o: &CMat, rho0: &CMat, s: f64) -> f64 {
        let v = &self.eig.vectors;
        self.weighted_trace(&(v.adjoint() * rho0 * v), &(v.adjoint() * o * v), s)
    }

    /// `⟨O(τ + nT)⟩` from the family member `O_τ`.
    pub fn sample(&self, family: &ObservableFamily, n: usize, rho0: &CMat) -> f64 {
        let s = family.tau - self.t0 + n as f64 * self.period;
        self.expectation_after(&family.transformed, rho0, s)
    }

    /// Samples for `n = 0..=n_max` with one basis change of `O_τ` and `ρ0`.
    pub fn samples(&self, family: &ObservableFamily, n_max: usize, rho0: &CMat) -> Vec<f64> {
        let v = &self.eig.vectors;
        let r = v.adjoint() * rho0 * v;
        let ob = v.adjoint() * &family.transformed * v;
        (0..=n_max)
            .map(|n| self.weighted_trace(&r, &ob, family.tau - self.t0 + n as f64 * self.period))
            .collect()
    }

    /// State evolved for `s`: `e^{−iH^F s} ρ e^{iH^F s}`.
    pub fn evolve(&self, rho0: &CMat, s: f64) -> CMat {
        let u = self.eig.propagator(s);
        &u * rho0 * u.adjoint()
    }
}

/// One stroboscopic sample `⟨O_τ⟩` after `τ − t0 + nT` under `H^F_{t0}`.
pub fn strob_sample(family: &ObservableFamily, n: usize, hf: &FockOperator, drive: &DriveConfig, rho0: &CMat) -> f64 {
    StroboscopicSimulator::new(hf, family.t0, drive).sample(family, n, rho0)
}

/// `⟨σ^z_τ⟩` in `state` (a density matrix on the full space).
pub fn polaron_coherence(tau: f64, t0: f64, drive: &DriveConfig, ops: &Operators, state: &CMat) -> Result<f64> {
    let fam = observable_family(&ops.sz, tau, t0, drive, ops)?;
    Ok(linalg::expectation(state, &fam.transformed))
}

/// Polaron eigenstate `e^{iK^F(τ)} |±z⟩|0⟩` of `σ^z_τ` with eigenvalue `sign`.
pub fn polaron_state(sign: f64, tau: f64, t0: f64, drive: &DriveConfig, ops: &Operators) -> Result<CMat> {
    let k = strob_kick(tau, t0, drive, ops)?;
    let mut psi = CMat::zeros(ops.fock.dim(), 1);
    let idx = if sign >= 0.0 { 0 } else { ops.fock.bath_dim() };
    psi[(idx, 0)] = c(1.0);
    Ok(linalg::expm_hermitian(&k.matrix, -1.0) * psi)
}

/// Boundary population of `rho`; logs a warning above [`CUTOFF_WARN_WEIGHT`].
pub fn check_cutoff(rho: &CMat, ops: &Operators) -> f64 {
    let w = boundary_weight(rho, &ops.fock);
    if w > CUTOFF_WARN_WEIGHT {
        log::warn!("Fock cutoff boundary population {w:e} exceeds {CUTOFF_WARN_WEIGHT:e}; raise fock_cutoff");
    }
    w
}

/// Roots of `f̃_{t0}(τ) = f_τ − f_{t0}` in `(t0, t0 + T)`, located by a
/// sign-change scan followed by bisection.
pub fn f_tilde_roots(t0: f64, drive: &DriveConfig) -> Result<Vec<f64>> {
    let series = KickSeries::new(drive, DEFAULT_SERIES_TOL)?;
    let g = |t: f64| series.f(t) - series.f(t0);
    let n = 2000;
    let period = drive.period();
    let mut roots = Vec::new();
    let mut a = t0 + period * 1e-6;
    let mut ga = g(a);
    for k in 1..=n {
        let b = t0 + period * (k as f64 / n as f64 - 1e-6);
        let gb = g(b);
        if ga == 0.0 {
            roots.push(a);
        } else if ga * gb < 0.0 {
            let (mut lo, mut hi, mut glo) = (a, b, ga);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm == 0.0 || (hi - lo) < 1e-15 * period {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if glo * gm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        ga = gb;
    }
    Ok(roots)
}
