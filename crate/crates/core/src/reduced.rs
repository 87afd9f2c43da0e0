//! Closed-form reduced dynamics of the driven spin-boson qubit.
//!
//! `ρ_S(t) = Σ_{n,ñ} e^{iθ_{n,ñ}} e^{−δ_{n,ñ}} 𝒢_n ρ_S(0) 𝒢_ñ†` in the rotating
//! frame, with the phases either from the continuum closed forms (spectral
//! integrals) or from the discrete-bath definitions
//!
//! * `δ = ½ Σ_k |Λ_k^n − Λ_k^ñ|² coth(βω_k/2)`
//! * `θ = Ω_ñ − Ω_n + Im χ_n − Im χ_ñ + Im(Λ_n·Λ_ñ*)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::{displacement_data, spin_boson_m, DisplacementData, KickSpectra, MultiIndex};
use crate::linalg::{self, c, CMat, HermitianEigen, C64, I};
use crate::model::{
    spectral_integrals, DiscreteBath, DriveConfig, IntegralOptions, SpectralDensity, SpectralIntegrals, ThermalParams,
};
use crate::specfun::{KickSeries, DEFAULT_SERIES_TOL};

/// Round-off floor below which a negative `δ` is clipped to zero.
pub const DELTA_CLIP: f64 = -1e-9;

/// Validated 2×2 density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    rho: CMat,
}

impl QubitState {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    pub fn new(rho: CMat) -> Result<Self> {
        if rho.shape() != (2, 2) {
            return Err(Error::Domain(format!("qubit state must be 2x2, got {:?}", rho.shape())));
        }
        let herm = linalg::hermiticity_defect(&rho);
        if !(herm <= Self::HERMITIAN_TOL) {
            return Err(Error::Domain(format!("state is not Hermitian (defect {herm:e})")));
        }
        let tr = rho.trace();
        if !((tr - c(1.0)).norm() <= Self::TRACE_TOL) {
            return Err(Error::Domain(format!("state trace is {tr}, expected 1")));
        }
        let min = HermitianEigen::new(&rho).values[0];
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::Domain(format!("state has negative eigenvalue {min:e}")));
        }
        Ok(Self { rho })
    }

    /// `(I + r·σ)/2` for a Bloch vector with `|r| ≤ 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if norm > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("Bloch vector norm {norm} exceeds 1")));
        }
        let rho = (linalg::identity(2)
            + linalg::sigma_x() * c(r[0])
            + linalg::sigma_y() * c(r[1])
            + linalg::sigma_z() * c(r[2]))
            * c(0.5);
        Self::new(rho)
    }

    pub fn plus_z() -> Self {
        Self::from_bloch([0.0, 0.0, 1.0]).expect("pure state")
    }

    pub fn minus_y() -> Self {
        Self::from_bloch([0.0, -1.0, 0.0]).expect("pure state")
    }

    pub fn maximally_mixed() -> Self {
        Self::from_bloch([0.0; 3]).expect("mixed state")
    }

    pub fn matrix(&self) -> &CMat {
        &self.rho
    }

    pub fn bloch(&self) -> [f64; 3] {
        [
            expectation(self, &linalg::sigma_x()),
            expectation(self, &linalg::sigma_y()),
            expectation(self, &linalg::sigma_z()),
        ]
    }
}

/// `Tr(ρ O)`.
pub fn expectation(rho: &QubitState, o: &CMat) -> f64 {
    linalg::expectation(&rho.rho, o)
}

/// Dynamical phase and decoherence exponent of one `(n, ñ)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    pub theta: f64,
    pub delta: f64,
}

fn clip_delta(delta: f64) -> f64 {
    if delta < 0.0 {
        if delta < DELTA_CLIP {
            log::warn!("decoherence exponent {delta:e} is negative beyond round-off");
        }
        if delta >= DELTA_CLIP {
            return 0.0;
        }
    }
    delta
}

/// Continuum phases of the spin-boson qubit at one time.
///
/// `s`, `eta_t`, `eta_0` are the upper eigenvalues of `S^(0)`, `M(t)` and
/// `M(0)`; label 0 of every index carries the negative eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinBosonPhases {
    pub omega0: f64,
    pub t: f64,
    pub s: f64,
    pub eta_t: f64,
    pub eta_0: f64,
    pub integrals: SpectralIntegrals,
}

impl SpinBosonPhases {
    pub fn from_spectra(omega0: f64, t: f64, spectra: &KickSpectra, integrals: SpectralIntegrals) -> Self {
        Self {
            omega0,
            t,
            s: spectra.s0.eigenvalues[1],
            eta_t: spectra.m_t.eigenvalues[1],
            eta_0: spectra.m_0.eigenvalues[1],
            integrals,
        }
    }

    pub fn delta(&self, n: MultiIndex, m: MultiIndex) -> f64 {
        let (s, et, e0) = (self.s, self.eta_t, self.eta_0);
        let i = &self.integrals;
        let p = |j| n.sign(j) * m.sign(j);
        let d = |j| m.sign(j) - n.sign(j);
        let delta = 2.0 * s * s * (1.0 - p(1)) * i.i1 + ((1.0 - p(0)) * et * et + (1.0 - p(2)) * e0 * e0) * i.i2
            - d(0) * d(2) * et * e0 * i.i3
            + s * d(1) * (d(0) * et - d(2) * e0) * i.i4;
        clip_delta(delta)
    }

    pub fn theta(&self, n: MultiIndex, m: MultiIndex) -> f64 {
        let (s, et, e0) = (self.s, self.eta_t, self.eta_0);
        let i = &self.integrals;
        let d = |j| m.sign(j) - n.sign(j);
        let sum = |j| m.sign(j) + n.sign(j);
        self.omega0 * (et * d(0) + s * d(1) * self.t - e0 * d(2))
            + s * (sum(2) * d(1) * e0 - sum(1) * d(0) * et) * i.i5
            + sum(2) * d(0) * et * e0 * i.i6
    }

    pub fn pair(&self, n: MultiIndex, m: MultiIndex) -> PhasePair {
        PhasePair {
            theta: self.theta(n, m),
            delta: self.delta(n, m),
        }
    }
}

/// Discrete-bath phases from the displacement data of the two chains.
pub fn discrete_phases(
    dn: &DisplacementData,
    dm: &DisplacementData,
    bath: &DiscreteBath,
    th: &ThermalParams,
) -> PhasePair {
    let mut delta = 0.0;
    for ((a, b), mode) in dn.lambda.iter().zip(&dm.lambda).zip(bath.modes()) {
        delta += 0.5 * (a - b).norm_sqr() * th.coth_half(mode.omega);
    }
    let overlap: C64 = crate::floquet::dot_conj(&dn.lambda, &dm.lambda);
    PhasePair {
        theta: dm.omega - dn.omega + dn.chi.im - dm.chi.im + overlap.im,
        delta: clip_delta(delta),
    }
}

/// `⟨D(μ)⟩_β = exp(−Σ_k |μ_k|²/2 · coth(βω_k/2))`.
pub fn displacement_expectation(mu: &[C64], bath: &DiscreteBath, th: &ThermalParams) -> Result<f64> {
    if mu.len() != bath.len() {
        return Err(Error::Domain(format!(
            "displacement has {} components for a bath of {} modes",
            mu.len(),
            bath.len()
        )));
    }
    let s: f64 = mu
        .iter()
        .zip(bath.modes())
        .map(|(m, mode)| 0.5 * m.norm_sqr() * th.coth_half(mode.omega))
        .sum();
    Ok((-s).exp())
}

/// Expansion order of the kick operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// First-order kick `M(t)(ω0 + X)`.
    First,
    /// Kick switched off (`ω_L → ∞`): only `S^(0)` acts.
    Zeroth,
}

/// Continuum (spectral density) or explicit mode list.
#[derive(Clone, Copy)]
pub enum BathRoute<'a> {
    Continuum(&'a dyn SpectralDensity, IntegralOptions),
    Discrete(&'a DiscreteBath),
}

/// Reduced-dynamics evaluator for one drive; everything time-independent is
/// computed once.
#[derive(Debug, Clone)]
pub struct ReducedDynamics {
    drive: DriveConfig,
    series: KickSeries,
    th: ThermalParams,
    order: Order,
    s0: CMat,
    m0: CMat,
}

impl ReducedDynamics {
    pub fn new(drive: DriveConfig, th: ThermalParams, order: Order) -> Result<Self> {
        let series = KickSeries::new(&drive, DEFAULT_SERIES_TOL)?;
        let s0 = linalg::sigma_z() * c(series.j0());
        let m0 = match order {
            Order::First => spin_boson_m(series.f(0.0), series.h(0.0)),
            Order::Zeroth => CMat::zeros(2, 2),
        };
        Ok(Self {
            drive,
            series,
            th,
            order,
            s0,
            m0,
        })
    }

    pub fn drive(&self) -> &DriveConfig {
        &self.drive
    }

    pub fn m_at(&self, t: f64) -> CMat {
        match self.order {
            Order::First => spin_boson_m(self.series.f(t), self.series.h(t)),
            Order::Zeroth => CMat::zeros(2, 2),
        }
    }

    pub fn spectra(&self, t: f64) -> KickSpectra {
        KickSpectra::new(&self.m_at(t), &self.s0, &self.m0, None)
    }

    fn assemble(
        &self,
        spectra: &KickSpectra,
        rho0: &QubitState,
        phase: impl Fn(MultiIndex, MultiIndex) -> PhasePair,
    ) -> Result<QubitState> {
        let chains: Vec<(MultiIndex, CMat)> = MultiIndex::all(2).map(|n| (n, spectra.chain(n))).collect();
        let mut rho = CMat::zeros(2, 2);
        for (n, gn) in &chains {
            let left = gn * rho0.matrix();
            for (m, gm) in &chains {
                let p = phase(*n, *m);
                let w = C64::from_polar((-p.delta).exp(), p.theta);
                rho += &left * gm.adjoint() * w;
            }
        }
        QubitState::new(rho).map_err(|e| Error::Numerical {
            what: format!("reduced density matrix assembly: {e}"),
            requested: QubitState::TRACE_TOL,
            achieved: f64::NAN,
        })
    }

    /// Rotating-frame `ρ_S(t)` from precomputed spectral integrals at `t`.
    pub fn rho_continuum(&self, t: f64, rho0: &QubitState, integrals: SpectralIntegrals) -> Result<QubitState> {
        let spectra = self.spectra(t);
        let phases = SpinBosonPhases::from_spectra(self.drive.omega0, t, &spectra, integrals);
        self.assemble(&spectra, rho0, |n, m| phases.pair(n, m))
    }

    /// Rotating-frame `ρ_S(t)` for an explicit mode list.
    pub fn rho_discrete(&self, t: f64, rho0: &QubitState, bath: &DiscreteBath) -> Result<QubitState> {
        let spectra = self.spectra(t);
        let data: Vec<DisplacementData> = MultiIndex::all(2)
            .map(|n| displacement_data(n, t, self.drive.omega0, bath, &spectra))
            .collect();
        let idx = |n: MultiIndex| n.n[0] * 4 + n.n[1] * 2 + n.n[2];
        self.assemble(&spectra, rho0, |n, m| {
            discrete_phases(&data[idx(n)], &data[idx(m)], bath, &self.th)
        })
    }

    pub fn rho(&self, t: f64, rho0: &QubitState, route: BathRoute) -> Result<QubitState> {
        match route {
            BathRoute::Continuum(sd, opts) => {
                let ints = spectral_integrals(sd, t, &self.th, opts)?.integrals;
                self.rho_continuum(t, rho0, ints)
            }
            BathRoute::Discrete(bath) => self.rho_discrete(t, rho0, bath),
        }
    }

    /// `𝒰(t) ρ 𝒰†(t)`.
    pub fn to_lab(&self, rho: &QubitState, t: f64) -> QubitState {
        lab_frame(rho, &self.drive, t)
    }
}

/// Spectral integrals on a time grid (parallel over `t`).
pub fn integrals_on_grid(
    sd: &dyn SpectralDensity,
    times: &[f64],
    th: &ThermalParams,
    opts: IntegralOptions,
) -> Result<Vec<SpectralIntegrals>> {
    times
        .par_iter()
        .map(|&t| spectral_integrals(sd, t, th, opts).map(|r| r.integrals))
        .collect()
}

/// `δ_{n,ñ}(t)` from the continuum closed form.
pub fn delta_continuum(
    n: MultiIndex,
    m: MultiIndex,
    t: f64,
    drive: &DriveConfig,
    sd: &dyn SpectralDensity,
    th: &ThermalParams,
) -> Result<f64> {
    Ok(continuum_phases(t, drive, sd, th)?.delta(n, m))
}

/// `θ_{n,ñ}(t)` from the continuum closed form.
pub fn theta_continuum(
    n: MultiIndex,
    m: MultiIndex,
    t: f64,
    drive: &DriveConfig,
    sd: &dyn SpectralDensity,
    th: &ThermalParams,
) -> Result<f64> {
    Ok(continuum_phases(t, drive, sd, th)?.theta(n, m))
}

fn continuum_phases(
    t: f64,
    drive: &DriveConfig,
    sd: &dyn SpectralDensity,
    th: &ThermalParams,
) -> Result<SpinBosonPhases> {
    let rd = ReducedDynamics::new(*drive, *th, Order::First)?;
    let ints = spectral_integrals(sd, t, th, IntegralOptions::default())?.integrals;
    Ok(SpinBosonPhases::from_spectra(drive.omega0, t, &rd.spectra(t), ints))
}

/// One-shot `ρ_S(t)` (rotating frame).
pub fn rho_s(
    t: f64,
    rho0: &QubitState,
    drive: &DriveConfig,
    route: BathRoute,
    th: &ThermalParams,
    order: Order,
) -> Result<QubitState> {
    ReducedDynamics::new(*drive, *th, order)?.rho(t, rho0, route)
}

/// `ρ_lab = 𝒰(t) ρ_rot 𝒰†(t)` with `𝒰 = exp(−i (A/ω_L) sin(ω_L t) σ_x)`.
pub fn lab_frame(rho: &QubitState, drive: &DriveConfig, t: f64) -> QubitState {
    let phi = drive.amplitude / drive.omega_l * (drive.omega_l * t).sin();
    let u = linalg::identity(2) * c(phi.cos()) - linalg::sigma_x() * (I * phi.sin());
    QubitState {
        rho: &u * &rho.rho * u.adjoint(),
    }
}

/// Upper envelope of a sampled signal: the maximum of every consecutive
/// window of length `window` (parabola-refined at interior peaks), linearly
/// interpolated back onto the sample times.
pub fn upper_envelope(series: &[(f64, f64)], window: f64) -> Result<Vec<(f64, f64)>> {
    if series.len() < 3 || !(window > 0.0) {
        return Err(Error::Resolution(
            "envelope needs >= 3 samples and a positive window".into(),
        ));
    }
    let span = series[series.len() - 1].0 - series[0].0;
    let dt = span / (series.len() - 1) as f64;
    if dt > window / 20.0 * (1.0 + 1e-9) {
        return Err(Error::Resolution(format!(
            "sampling step {dt} is coarser than 20 points per window {window}"
        )));
    }
    let t0 = series[0].0;
    // A trailing partial window is merged into the last complete one.
    let last_bin = ((span / window).floor() - 1.0).max(0.0);
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    let mut start = 0;
    while start < series.len() {
        let bin = ((series[start].0 - t0) / window).floor().min(last_bin);
        let mut end = start;
        while end < series.len() && ((series[end].0 - t0) / window).floor().min(last_bin) == bin {
            end += 1;
        }
        let k = (start..end)
            .max_by(|&a, &b| series[a].1.total_cmp(&series[b].1))
            .expect("non-empty window");
        let mut peak = series[k];
        if k > 0 && k + 1 < series.len() {
            let (ta, ya) = series[k - 1];
            let (tb, yb) = series[k];
            let (tc, yc) = series[k + 1];
            let denom = ya - 2.0 * yb + yc;
            if denom < 0.0 && (tb - ta - (tc - tb)).abs() < 1e-9 * (tc - ta) {
                let off = 0.5 * (ya - yc) / denom;
                if off.abs() <= 1.0 {
                    let h = tb - ta;
                    peak = (tb + off * h, yb - 0.25 * (ya - yc) * off);
                }
            }
        }
        peaks.push(peak);
        start = end;
    }
    Ok(series.iter().map(|&(t, _)| (t, interpolate(&peaks, t))).collect())
}

fn interpolate(pts: &[(f64, f64)], t: f64) -> f64 {
    if t <= pts[0].0 {
        return pts[0].1;
    }
    let last = pts[pts.len() - 1];
    if t >= last.0 {
        return last.1;
    }
    let k = pts.partition_point(|p| p.0 <= t);
    let (a, b) = (pts[k - 1], pts[k]);
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{discretize, Mode, OhmicSpectralDensity};

    fn fig1b(ratio: f64) -> (DriveConfig, OhmicSpectralDensity, ThermalParams) {
        (
            DriveConfig::from_ratio(1.0, ratio, 10.0).unwrap(),
            OhmicSpectralDensity::new(0.15, 0.9).unwrap(),
            ThermalParams::from_temperature(1.0).unwrap(),
        )
    }

    #[test]
    fn state_validation() {
        assert!(QubitState::new(linalg::identity(2)).is_err());
        assert!(QubitState::from_bloch([1.0, 1.0, 0.0]).is_err());
        let bad = CMat::from_row_slice(2, 2, &[c(1.0), c(0.3), c(0.0), c(0.0)]);
        assert!(QubitState::new(bad).is_err());
    }

    #[test]
    fn expectation_examples() {
        assert!((expectation(&QubitState::plus_z(), &linalg::sigma_z()) - 1.0).abs() < 1e-15);
        assert!(expectation(&QubitState::minus_y(), &linalg::sigma_z()).abs() < 1e-15);
        assert!(expectation(&QubitState::maximally_mixed(), &linalg::sigma_x()).abs() < 1e-15);
    }

    #[test]
    fn rho_at_time_zero_is_initial_state() {
        let (d, sd, th) = fig1b(3.83);
        let rho0 = QubitState::from_bloch([0.3, -0.5, 0.6]).unwrap();
        let r = rho_s(
            0.0,
            &rho0,
            &d,
            BathRoute::Continuum(&sd, IntegralOptions::default()),
            &th,
            Order::First,
        )
        .unwrap();
        assert!(linalg::max_abs_diff(r.matrix(), rho0.matrix()) < 1e-12);
    }

    #[test]
    fn zeroth_order_preserves_sigma_z() {
        let (d, sd, th) = fig1b(2.404826);
        let rd = ReducedDynamics::new(d, th, Order::Zeroth).unwrap();
        for &t in &[0.5, 3.0, 17.0] {
            let r = rd
                .rho(
                    t,
                    &QubitState::plus_z(),
                    BathRoute::Continuum(&sd, IntegralOptions::default()),
                )
                .unwrap();
            assert!((expectation(&r, &linalg::sigma_z()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decoupled_bath_gives_undamped_oscillation() {
        let (d, _, th) = fig1b(2.404826);
        let bath = DiscreteBath::new(vec![Mode { omega: 1.0, g: 0.0 }]).unwrap();
        let rd = ReducedDynamics::new(d, th, Order::First).unwrap();
        let rho0 = QubitState::plus_z();
        // Closed system: U = exp(−iM(t)ω0) exp(−iS0 ω0 t) exp(iM(0)ω0).
        let s0 = linalg::sigma_z() * c(rd.series.j0());
        for k in 0..40 {
            let t = 0.25 * k as f64;
            let u = linalg::expm_hermitian(&rd.m_at(t), 1.0)
                * linalg::expm_hermitian(&s0, t)
                * linalg::expm_hermitian(&rd.m_at(0.0), -1.0);
            let want = &u * rho0.matrix() * u.adjoint();
            let got = rd.rho_discrete(t, &rho0, &bath).unwrap();
            assert!(linalg::max_abs_diff(got.matrix(), &want) < 1e-12, "t = {t}");
        }
        // No decay: the oscillation amplitude at late times matches early times.
        let sz = |t: f64| expectation(&rd.rho_discrete(t, &rho0, &bath).unwrap(), &linalg::sigma_z());
        let early = (0..63).map(|k| sz(0.01 * k as f64)).fold(f64::MIN, f64::max);
        let late = (0..63).map(|k| sz(400.0 + 0.01 * k as f64)).fold(f64::MIN, f64::max);
        assert!((early - late).abs() < 1e-3, "{early} {late}");
    }

    #[test]
    fn continuum_and_dense_discrete_bath_agree() {
        let (d, sd, th) = fig1b(3.83);
        let bath = discretize(&sd, 4000, 36.0).unwrap();
        let rd = ReducedDynamics::new(d, th, Order::First).unwrap();
        let rho0 = QubitState::minus_y();
        let a = rd
            .rho(2.0, &rho0, BathRoute::Continuum(&sd, IntegralOptions::default()))
            .unwrap();
        let b = rd.rho(2.0, &rho0, BathRoute::Discrete(&bath)).unwrap();
        assert!(linalg::max_abs_diff(a.matrix(), b.matrix()) < 1e-5);
    }

    #[test]
    fn displacement_expectation_examples() {
        let bath = DiscreteBath::new(vec![Mode { omega: 1.0, g: 0.1 }]).unwrap();
        let zt = ThermalParams::ZeroTemperature;
        assert_eq!(
            displacement_expectation(&[C64::new(0.0, 0.0)], &bath, &zt).unwrap(),
            1.0
        );
        let mu = [C64::new(1.0, 1.0)];
        assert!((displacement_expectation(&mu, &bath, &zt).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(displacement_expectation(&[], &bath, &zt).is_err());
    }

    #[test]
    fn lab_frame_examples() {
        let (d, _, _) = fig1b(3.83);
        let rho = QubitState::from_bloch([0.2, 0.4, -0.1]).unwrap();
        assert!(linalg::max_abs_diff(lab_frame(&rho, &d, 0.0).matrix(), rho.matrix()) < 1e-15);
        let half = lab_frame(&rho, &d, 0.5 * d.period());
        assert!(linalg::max_abs_diff(half.matrix(), rho.matrix()) < 1e-12);
        let any = lab_frame(&rho, &d, 0.123);
        assert!((any.bloch()[0] - 0.2).abs() < 1e-14);
    }

    #[test]
    fn envelope_examples() {
        let period = 1.0;
        let grid: Vec<f64> = (0..2001).map(|k| k as f64 * 0.01).collect();
        let flat: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 0.7)).collect();
        assert!(upper_envelope(&flat, period)
            .unwrap()
            .iter()
            .all(|p| (p.1 - 0.7).abs() < 1e-15));

        let cosine: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 0.4 * (7.3 * t).cos())).collect();
        let env = upper_envelope(&cosine, period).unwrap();
        assert!(env.iter().all(|p| (p.1 - 0.4).abs() < 1e-3));

        let gamma = 0.05;
        let damped: Vec<(f64, f64)> = grid
            .iter()
            .map(|&t| (t, (-gamma * t).exp() * (9.0 * t).cos()))
            .collect();
        let env = upper_envelope(&damped, period).unwrap();
        for &(t, v) in env.iter().filter(|p| p.0 > 1.0 && p.0 < 19.0) {
            let want = (-gamma * t).exp();
            assert!((v - want).abs() < 0.02 * want, "t={t} {v} {want}");
        }

        let sparse: Vec<(f64, f64)> = (0..50).map(|k| (k as f64 * 0.1, 0.0)).collect();
        assert!(matches!(upper_envelope(&sparse, period), Err(Error::Resolution(_))));
    }
}
