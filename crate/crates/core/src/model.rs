//! Drive, bath and temperature parameters; spectral densities, their
//! discretization into bath modes, and the thermal spectral integrals that
//! enter the continuum decoherence exponent and dynamical phase.
//!
//! Units: every frequency is measured in units of ω0 and ħ = 1.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

/// Periodically driven two-level system `ω0 S + A cos(ω_L t) V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub omega0: f64,
    pub amplitude: f64,
    pub omega_l: f64,
}

impl DriveConfig {
    pub fn new(omega0: f64, amplitude: f64, omega_l: f64) -> Result<Self> {
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(Error::Domain(format!("omega0 must be positive, got {omega0}")));
        }
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::Domain(format!(
                "amplitude must be non-negative, got {amplitude}"
            )));
        }
        if !(omega_l > 0.0) || !omega_l.is_finite() {
            return Err(Error::Domain(format!("omegaL must be positive, got {omega_l}")));
        }
        if omega_l <= 2.0 * omega0 {
            log::warn!(
                "omegaL = {omega_l} <= 2 omega0 = {}: first-order high-frequency expansion is unreliable",
                2.0 * omega0
            );
        }
        Ok(Self {
            omega0,
            amplitude,
            omega_l,
        })
    }

    /// Builds the drive from the ratio `2A/ω_L`.
    pub fn from_ratio(omega0: f64, ratio: f64, omega_l: f64) -> Result<Self> {
        Self::new(omega0, 0.5 * ratio * omega_l, omega_l)
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_l
    }

    /// `2A/ω_L`, the argument of every Bessel factor.
    pub fn ratio(&self) -> f64 {
        2.0 * self.amplitude / self.omega_l
    }
}

/// Continuum bath spectral density `J(ω)`, defined for `ω ≥ 0`.
pub trait SpectralDensity: Sync {
    fn j(&self, omega: f64) -> f64;

    /// Natural upper integration limit.
    fn default_cutoff(&self) -> f64;
}

/// `J(ω) = λ ω exp(−ω/ω_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmicSpectralDensity {
    pub lambda: f64,
    pub omega_c: f64,
}

impl OhmicSpectralDensity {
    pub fn new(lambda: f64, omega_c: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda must be non-negative, got {lambda}")));
        }
        if !(omega_c > 0.0) {
            return Err(Error::Domain(format!("omega_c must be positive, got {omega_c}")));
        }
        Ok(Self { lambda, omega_c })
    }

    /// `J(ω)`, rejecting negative frequencies.
    pub fn eval(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!("spectral density needs omega >= 0, got {omega}")));
        }
        Ok(self.j(omega))
    }
}

impl SpectralDensity for OhmicSpectralDensity {
    fn j(&self, omega: f64) -> f64 {
        self.lambda * omega * (-omega / self.omega_c).exp()
    }

    fn default_cutoff(&self) -> f64 {
        40.0 * self.omega_c
    }
}

/// `J(ω)` for the Ohmic family.
pub fn ohmic_j(omega: f64, sd: &OhmicSpectralDensity) -> Result<f64> {
    sd.eval(omega)
}

/// Piecewise-linear tabulated spectral density; zero outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSpectralDensity {
    omega: Vec<f64>,
    value: Vec<f64>,
}

impl TabulatedSpectralDensity {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Domain("tabulated spectral density needs >= 2 points".into()));
        }
        let (omega, value): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if omega[0] < 0.0 || omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "tabulated frequencies must be non-negative and strictly increasing".into(),
            ));
        }
        if value.iter().any(|v| *v < 0.0) {
            return Err(Error::Domain("spectral density values must be non-negative".into()));
        }
        Ok(Self { omega, value })
    }
}

impl SpectralDensity for TabulatedSpectralDensity {
    fn j(&self, w: f64) -> f64 {
        let n = self.omega.len();
        if w < self.omega[0] || w > self.omega[n - 1] {
            return 0.0;
        }
        let k = self.omega.partition_point(|&x| x <= w).clamp(1, n - 1);
        let (x0, x1) = (self.omega[k - 1], self.omega[k]);
        let (y0, y1) = (self.value[k - 1], self.value[k]);
        y0 + (y1 - y0) * (w - x0) / (x1 - x0)
    }

    fn default_cutoff(&self) -> f64 {
        *self.omega.last().expect("non-empty table")
    }
}

/// One bath oscillator: frequency `ω_k` and coupling `g_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub omega: f64,
    pub g: f64,
}

/// Finite list of bath modes with `H_B = Σ ω_k a†a`, `X = Σ g_k (a† + a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    modes: Vec<Mode>,
}

impl DiscreteBath {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Domain("a discrete bath needs at least one mode".into()));
        }
        if let Some(m) = modes.iter().find(|m| !(m.omega > 0.0) || !m.g.is_finite()) {
            return Err(Error::Domain(format!(
                "bath mode frequencies must be positive and couplings finite, got {m:?}"
            )));
        }
        let mut sorted: Vec<f64> = modes.iter().map(|m| m.omega).collect();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("bath mode frequencies must be distinct".into()));
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `Σ_k g_k² F(ω_k)`, the discrete analogue of `∫ J(ω) F(ω) dω`.
    pub fn weighted_sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.modes.iter().map(|m| m.g * m.g * f(m.omega)).sum()
    }
}

/// Midpoint sampling: `ω_k = (k − ½)Δ`, `g_k = sqrt(J(ω_k) Δ)`, `Δ = ω_max/N`.
pub fn discretize(sd: &dyn SpectralDensity, n: usize, omega_max: f64) -> Result<DiscreteBath> {
    if n == 0 {
        return Err(Error::Domain("need at least one mode".into()));
    }
    if !(omega_max > 0.0) {
        return Err(Error::Domain(format!("omega_max must be positive, got {omega_max}")));
    }
    let delta = omega_max / n as f64;
    let modes = (0..n)
        .map(|k| {
            let omega = (k as f64 + 0.5) * delta;
            Mode {
                omega,
                g: (sd.j(omega) * delta).sqrt(),
            }
        })
        .collect();
    DiscreteBath::new(modes)
}

// 8-point Gauss–Legendre rule on [-1, 1] (positive half).
const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Gauss–Legendre sampling: `N/8` equal panels with 8 nodes each, and
/// `g_k = sqrt(J(ω_k) w_k)` for the quadrature weight `w_k`.
///
/// Mode sums then converge far faster than with [`discretize`], which makes
/// this placement the better reference when a discrete sum is used to check a
/// continuum formula.
pub fn discretize_gauss_legendre(sd: &dyn SpectralDensity, n: usize, omega_max: f64) -> Result<DiscreteBath> {
    if n == 0 || !n.is_multiple_of(8) {
        return Err(Error::Domain(format!(
            "Gauss-Legendre placement needs a positive multiple of 8 modes, got {n}"
        )));
    }
    if !(omega_max > 0.0) {
        return Err(Error::Domain(format!("omega_max must be positive, got {omega_max}")));
    }
    let panels = n / 8;
    let width = omega_max / panels as f64;
    let mut modes = Vec::with_capacity(n);
    for p in 0..panels {
        let center = (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        for (&x, &w) in GL8_X.iter().zip(GL8_W.iter()) {
            for s in [-1.0, 1.0] {
                let omega = center + s * half * x;
                modes.push(Mode {
                    omega,
                    g: (sd.j(omega) * w * half).sqrt(),
                });
            }
        }
    }
    modes.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    DiscreteBath::new(modes)
}

/// Inverse temperature, or exactly zero temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThermalParams {
    Finite { beta: f64 },
    ZeroTemperature,
}

/// Below this value of βω the series `2/(βω) + βω/6` replaces `coth(βω/2)`.
pub const COTH_SERIES_SWITCH: f64 = 1e-4;

impl ThermalParams {
    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be positive and finite, got {beta}")));
        }
        Ok(Self::Finite { beta })
    }

    /// From the temperature `T_β = 1/β`.
    pub fn from_temperature(temperature: f64) -> Result<Self> {
        if temperature == 0.0 {
            return Ok(Self::ZeroTemperature);
        }
        Self::from_beta(1.0 / temperature)
    }

    /// `coth(βω/2)`.
    pub fn coth_half(&self, omega: f64) -> f64 {
        match *self {
            Self::ZeroTemperature => 1.0,
            Self::Finite { beta } => coth_half_beta(beta * omega),
        }
    }

    /// `ω coth(βω/2)`, finite at ω = 0.
    pub fn omega_coth_half(&self, omega: f64) -> f64 {
        match *self {
            Self::ZeroTemperature => omega,
            Self::Finite { beta } => {
                let x = beta * omega;
                if x < COTH_SERIES_SWITCH {
                    2.0 / beta + beta * omega * omega / 6.0
                } else {
                    omega * coth_half_beta(x)
                }
            }
        }
    }
}

/// `coth(x/2)` with its small-argument expansion below [`COTH_SERIES_SWITCH`].
pub fn coth_half_beta(x: f64) -> f64 {
    if x < COTH_SERIES_SWITCH {
        coth_half_series(x)
    } else {
        coth_half_direct(x)
    }
}

pub fn coth_half_series(x: f64) -> f64 {
    2.0 / x + x / 6.0
}

pub fn coth_half_direct(x: f64) -> f64 {
    // coth(x/2) = (1 + e^{-x}) / (1 - e^{-x})
    let e = (-x).exp();
    (1.0 + e) / -(-x).exp_m1()
}

/// The six thermal spectral integrals at one time `t`:
///
/// * `i1 = ∫ J (1 − cos ωt)/ω² coth(βω/2) dω`
/// * `i2 = ∫ J coth dω`
/// * `i3 = ∫ J cos(ωt) coth dω`
/// * `i4 = ∫ J sin(ωt)/ω coth dω`
/// * `i5 = ∫ J (1 − cos ωt)/ω dω`
/// * `i6 = ∫ J sin(ωt) dω`
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectralIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
    pub i6: f64,
}

impl SpectralIntegrals {
    pub fn as_array(&self) -> [f64; 6] {
        [self.i1, self.i2, self.i3, self.i4, self.i5, self.i6]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            i1: a[0],
            i2: a[1],
            i3: a[2],
            i4: a[3],
            i5: a[4],
            i6: a[5],
        }
    }

    /// The same six quantities as sums over a discrete bath.
    pub fn from_bath(bath: &DiscreteBath, t: f64, th: &ThermalParams) -> Self {
        let mut acc = [0.0; 6];
        for m in bath.modes() {
            let v = kernel_values(m.g * m.g, m.omega, t, th);
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
        }
        Self::from_array(acc)
    }
}

/// `J(ω) × kernel_i(ω)` for the six integrands, written so that every entry
/// is finite as ω → 0.
fn kernel_values(j: f64, w: f64, t: f64, th: &ThermalParams) -> [f64; 6] {
    let half = 0.5 * w * t;
    let s_half = half.sin();
    // (1 − cos ωt) = 2 sin²(ωt/2)
    let one_minus_cos = 2.0 * s_half * s_half;
    let (sin_wt, cos_wt) = (w * t).sin_cos();
    // J coth = (J/ω)(ω coth)
    let j_over_w = j / w;
    let w_coth = th.omega_coth_half(w);
    let j_coth = j_over_w * w_coth;
    let sinc_t = if w * t == 0.0 { t } else { sin_wt / w };
    let omc_over_w = if w == 0.0 { 0.0 } else { one_minus_cos / w };
    [
        j_over_w * w_coth * omc_over_w / w,
        j_coth,
        j_coth * cos_wt,
        j_coth * sinc_t,
        j * omc_over_w,
        j * sin_wt,
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct IntegralOptions {
    /// Absolute accuracy requested for each integral.
    pub tol: f64,
    /// Upper integration limit; `None` uses the density's default (40 ω_c for Ohmic).
    pub omega_max: Option<f64>,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            omega_max: None,
        }
    }
}

/// Integrals together with the quadrature error estimate and a bound on the
/// neglected tail beyond `omega_max`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralIntegralsReport {
    pub integrals: SpectralIntegrals,
    pub quadrature_error: f64,
    pub tail_bound: f64,
    pub omega_max: f64,
}

/// Quadrature of the six spectral integrals on `[0, ω_max]`.
pub fn spectral_integrals(
    sd: &dyn SpectralDensity,
    t: f64,
    th: &ThermalParams,
    opts: IntegralOptions,
) -> Result<SpectralIntegralsReport> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("spectral integrals need t >= 0, got {t}")));
    }
    let omega_max = opts.omega_max.unwrap_or_else(|| sd.default_cutoff());
    // Panels no wider than a quarter oscillation of cos(ωt), and a fixed
    // minimum resolution of the spectral density itself.
    let mut step = omega_max / 64.0;
    if t > 0.0 {
        step = step.min(0.5 * PI / t);
    }
    let bp = crate::quad::uniform_breakpoints(0.0, omega_max, step);
    let res = integrate(
        |w| {
            if w <= 0.0 {
                return [0.0; 6];
            }
            kernel_values(sd.j(w), w, t, th)
        },
        &bp,
        QuadOptions {
            tol: opts.tol,
            max_intervals: 2_000_000,
        },
    )?;
    // Tail: every kernel is bounded by max(1, t, t²/2)·coth·J/ω^p; bound with
    // a short quadrature of the dominating envelope on [ω_max, 3ω_max].
    let env = |w: f64| {
        let j = sd.j(w);
        let c = th.coth_half(w);
        j * c * (1.0 + t).max(2.0 / (w * w)).max(1.0 / w)
    };
    let tail = integrate(
        |w| [env(w)],
        &crate::quad::uniform_breakpoints(omega_max, 3.0 * omega_max, omega_max / 8.0),
        QuadOptions {
            tol: 1e-14,
            max_intervals: 10_000,
        },
    )
    .map(|r| r.value[0])
    .unwrap_or(f64::INFINITY);
    Ok(SpectralIntegralsReport {
        integrals: SpectralIntegrals::from_array(res.value),
        quadrature_error: res.max_error(),
        tail_bound: tail,
        omega_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ohmic_values() {
        let sd = OhmicSpectralDensity::new(1.0, 2.0).unwrap();
        assert_eq!(ohmic_j(0.0, &sd).unwrap(), 0.0);
        assert!((ohmic_j(2.0, &sd).unwrap() - 2.0 / std::f64::consts::E).abs() < 1e-15);
        assert!(matches!(ohmic_j(-1.0, &sd), Err(Error::Domain(_))));
        let fig = OhmicSpectralDensity::new(0.15, 0.9).unwrap();
        let want = 0.15 * 0.9 * (-1.0f64).exp();
        assert!((fig.j(0.9) - want).abs() < 1e-16);
    }

    #[test]
    fn midpoint_single_mode_flat_density() {
        let flat = TabulatedSpectralDensity::new(vec![(0.0, 3.0), (10.0, 3.0)]).unwrap();
        let bath = discretize(&flat, 1, 4.0).unwrap();
        assert_eq!(bath.modes()[0].omega, 2.0);
        assert!((bath.modes()[0].g.powi(2) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn bath_validation() {
        assert!(DiscreteBath::new(vec![]).is_err());
        let m = |omega| Mode { omega, g: 0.1 };
        assert!(DiscreteBath::new(vec![m(1.0), m(1.0)]).is_err());
        assert!(DiscreteBath::new(vec![m(-1.0)]).is_err());
        assert!(DiscreteBath::new(vec![m(1.0), m(2.0)]).is_ok());
    }

    #[test]
    fn coth_switchover_continuity() {
        let x = COTH_SERIES_SWITCH;
        let rel = (coth_half_series(x) - coth_half_direct(x)).abs() / coth_half_direct(x);
        // Absolute agreement at the switch is limited by the 2/x magnitude.
        assert!(rel <= 1e-12, "relative mismatch {rel}");
        assert!((x * coth_half_series(x) - x * coth_half_direct(x)).abs() <= 1e-12);
    }

    #[test]
    fn zero_temperature_coth_is_one() {
        assert_eq!(ThermalParams::ZeroTemperature.coth_half(0.3), 1.0);
        assert_eq!(
            ThermalParams::from_temperature(0.0).unwrap(),
            ThermalParams::ZeroTemperature
        );
        assert!(ThermalParams::from_beta(-1.0).is_err());
    }

    #[test]
    fn integrals_vanish_at_time_zero() {
        let sd = OhmicSpectralDensity::new(0.15, 0.9).unwrap();
        let th = ThermalParams::from_beta(1.0).unwrap();
        let r = spectral_integrals(&sd, 0.0, &th, IntegralOptions::default()).unwrap();
        let i = r.integrals;
        assert_eq!([i.i1, i.i4, i.i5, i.i6], [0.0; 4]);
        assert!((i.i3 - i.i2).abs() < 1e-12);
        assert!(r.tail_bound < 1e-12);
    }

    #[test]
    fn negative_time_rejected() {
        let sd = OhmicSpectralDensity::new(0.15, 0.9).unwrap();
        assert!(spectral_integrals(&sd, -1.0, &ThermalParams::ZeroTemperature, IntegralOptions::default()).is_err());
    }

    #[test]
    fn drive_validation_and_derived() {
        let d = DriveConfig::from_ratio(1.0, 2.4, 10.0).unwrap();
        assert!((d.ratio() - 2.4).abs() < 1e-15);
        assert!((d.period() - 2.0 * PI / 10.0).abs() < 1e-15);
        assert!(DriveConfig::new(0.0, 1.0, 10.0).is_err());
        assert!(DriveConfig::new(1.0, -1.0, 10.0).is_err());
        // low drive frequency warns but is accepted
        assert!(DriveConfig::new(1.0, 1.0, 1.5).is_ok());
    }
}
