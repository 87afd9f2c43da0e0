//! First-order van Vleck construction for `H(t) = ω0 S + A cos(ω_L t) V + H_B + S X`.
//!
//! In the frame `𝒰(t) = exp(−i (A/ω_L) sin(ω_L t) V)` the system operator
//! becomes `S(t) = 𝒰†S𝒰 = Σ_l S^(l) e^{ilω_L t}`. When the Fourier components
//! obey `S^(−l) = (−1)^l S^(l)` the effective Hamiltonian is
//! `S^(0)(ω0 + X) + H_B` and the kick operator is `M(t)(ω0 + X)` with
//! `M(t) = Σ_{l≠0} S^(l) e^{ilω_L t}/(i l ω_L)`.
//!
//! The propagator is then a sum over eigenprojector chains of `M(t)`,
//! `S^(0)` and `M(0)`, each carrying one net bath displacement; the
//! bookkeeping for those displacements lives in [`DisplacementData`].

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, HermitianEigen, C64, I};
use crate::model::{DiscreteBath, DriveConfig};

pub const DEFAULT_L_MAX: usize = 32;
pub const DEFAULT_GRID_POINTS: usize = 512;
/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// The time-independent system operators `S` (coupled to `ω0 + X`) and `V` (driven).
#[derive(Debug, Clone)]
pub struct SystemOperators {
    s: CMat,
    v: CMat,
}

impl SystemOperators {
    pub fn new(s: CMat, v: CMat) -> Result<Self> {
        let d = s.nrows();
        if d < 2 || !s.is_square() || v.shape() != s.shape() {
            return Err(Error::Domain(format!(
                "S and V must be square matrices of equal dimension >= 2, got {:?} and {:?}",
                s.shape(),
                v.shape()
            )));
        }
        if !linalg::is_hermitian(&s, 1e-12) || !linalg::is_hermitian(&v, 1e-12) {
            return Err(Error::Domain("S and V must be Hermitian".into()));
        }
        Ok(Self { s, v })
    }

    /// `S = σ_z`, `V = σ_x`.
    pub fn spin_boson() -> Self {
        Self {
            s: linalg::sigma_z(),
            v: linalg::sigma_x(),
        }
    }

    pub fn s(&self) -> &CMat {
        &self.s
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }
}

/// `𝒰(t) = exp(−i (A/ω_L) sin(ω_L t) V)`, with `V` diagonalized once.
#[derive(Debug, Clone)]
pub struct RotatingFrame {
    eig: HermitianEigen,
    drive: DriveConfig,
}

impl RotatingFrame {
    pub fn new(v: &CMat, drive: &DriveConfig) -> Self {
        Self {
            eig: HermitianEigen::new(v),
            drive: *drive,
        }
    }

    pub fn angle(&self, t: f64) -> f64 {
        self.drive.amplitude / self.drive.omega_l * (self.drive.omega_l * t).sin()
    }

    pub fn at(&self, t: f64) -> CMat {
        self.eig.propagator(self.angle(t))
    }
}

pub fn rotating_frame(v: &CMat, drive: &DriveConfig, t: f64) -> CMat {
    RotatingFrame::new(v, drive).at(t)
}

/// `S^(l)` for `l ∈ [−l_max, l_max]`.
#[derive(Debug, Clone)]
pub struct FourierComponents {
    l_max: usize,
    comps: Vec<CMat>,
}

impl FourierComponents {
    /// Components given directly, ordered `l = −l_max, ..., l_max`.
    pub fn from_components(comps: Vec<CMat>) -> Result<Self> {
        if comps.len().is_multiple_of(2) {
            return Err(Error::Domain(
                "need an odd number of components (-l_max..=l_max)".into(),
            ));
        }
        Ok(Self {
            l_max: comps.len() / 2,
            comps,
        })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn get(&self, l: i64) -> &CMat {
        &self.comps[(l + self.l_max as i64) as usize]
    }

    pub fn dim(&self) -> usize {
        self.comps[0].nrows()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FourierOptions {
    pub l_max: usize,
    pub grid_points: usize,
    /// Largest admissible norm of the outermost harmonic.
    pub alias_tol: f64,
}

impl Default for FourierOptions {
    fn default() -> Self {
        Self {
            l_max: DEFAULT_L_MAX,
            grid_points: DEFAULT_GRID_POINTS,
            alias_tol: 1e-12,
        }
    }
}

/// Trapezoidal projection of `S(t) = 𝒰†(t) S 𝒰(t)` onto `e^{ilω_L t}` over one period.
pub fn fourier_components(
    sys: &SystemOperators,
    drive: &DriveConfig,
    opts: FourierOptions,
) -> Result<FourierComponents> {
    let (l_max, g) = (opts.l_max, opts.grid_points);
    if g < 8 * l_max.max(1) {
        return Err(Error::Parameter(format!(
            "grid_points = {g} must be at least 8 * l_max = {}",
            8 * l_max.max(1)
        )));
    }
    let d = sys.dim();
    // In the eigenbasis of V, S(t)_ab = e^{iφ(t)(v_a − v_b)} S̃_ab.
    let eig = HermitianEigen::new(sys.v());
    let w = &eig.vectors;
    let s_tilde = w.adjoint() * sys.s() * w;
    let frame = RotatingFrame::new(sys.v(), drive);
    let n_l = 2 * l_max + 1;
    let mut acc = vec![CMat::zeros(d, d); n_l];
    for j in 0..g {
        let t = drive.period() * j as f64 / g as f64;
        let phi = frame.angle(t);
        let theta = 2.0 * std::f64::consts::PI * j as f64 / g as f64;
        for a in 0..d {
            for b in 0..d {
                let z = s_tilde[(a, b)] * C64::from_polar(1.0, phi * (eig.values[a] - eig.values[b]));
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                for (li, m) in acc.iter_mut().enumerate() {
                    let l = li as f64 - l_max as f64;
                    m[(a, b)] += z * C64::from_polar(1.0, -l * theta);
                }
            }
        }
    }
    let comps: Vec<CMat> = acc.into_iter().map(|m| w * (m / c(g as f64)) * w.adjoint()).collect();
    let fc = FourierComponents { l_max, comps };

    for l in 1..=l_max as i64 {
        let pair = linalg::max_abs_diff(fc.get(-l), &fc.get(l).adjoint());
        if pair > 1e-10 {
            return Err(Error::Numerical {
                what: format!("Hermitian pairing of Fourier component l = {l}"),
                requested: 1e-10,
                achieved: pair,
            });
        }
    }
    if l_max > 0 {
        let edge = linalg::frobenius(fc.get(l_max as i64));
        if edge > opts.alias_tol {
            return Err(Error::Resolution(format!(
                "harmonic l_max = {l_max} still has norm {edge:e}; increase l_max"
            )));
        }
    }
    Ok(fc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityCheck {
    pub holds: bool,
    pub max_violation: f64,
}

/// Checks `S^(−l) = (−1)^l S^(l)` for every available `l`.
pub fn check_parity_condition(fc: &FourierComponents, tol: f64) -> ParityCheck {
    let mut worst = 0.0_f64;
    for l in 1..=fc.l_max() as i64 {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        let diff = fc.get(-l) - fc.get(l) * c(sign);
        worst = worst.max(linalg::frobenius(&diff));
    }
    ParityCheck {
        holds: worst <= tol,
        max_violation: worst,
    }
}

/// Fourier data that passed the parity check; builds `M(t)` and `S^(0)`.
#[derive(Debug, Clone)]
pub struct FirstOrderFloquet {
    fc: FourierComponents,
    omega_l: f64,
}

pub const PARITY_TOL: f64 = 1e-9;

impl FirstOrderFloquet {
    pub fn new(fc: FourierComponents, drive: &DriveConfig) -> Result<Self> {
        let check = check_parity_condition(&fc, PARITY_TOL);
        if !check.holds {
            return Err(Error::Domain(format!(
                "Fourier components violate S(-l) = (-1)^l S(l) (max violation {:e}); \
                 first-order effective Hamiltonian is not of the factorized form",
                check.max_violation
            )));
        }
        Ok(Self {
            fc,
            omega_l: drive.omega_l,
        })
    }

    pub fn from_system(sys: &SystemOperators, drive: &DriveConfig) -> Result<Self> {
        Self::new(fourier_components(sys, drive, FourierOptions::default())?, drive)
    }

    pub fn s0(&self) -> &CMat {
        self.fc.get(0)
    }

    pub fn components(&self) -> &FourierComponents {
        &self.fc
    }

    /// `M(t) = Σ_{l≠0} S^(l) e^{ilω_L t}/(i l ω_L)`.
    pub fn m_operator(&self, t: f64) -> CMat {
        let d = self.fc.dim();
        let mut m = CMat::zeros(d, d);
        for l in 1..=self.fc.l_max() as i64 {
            let lf = l as f64;
            let e = C64::from_polar(1.0, lf * self.omega_l * t);
            let denom = I * (lf * self.omega_l);
            m += self.fc.get(l) * (e / denom);
            m += self.fc.get(-l) * (e.conj() / -denom);
        }
        linalg::symmetrize(&m)
    }
}

pub fn m_operator(fc: &FourierComponents, drive: &DriveConfig, t: f64) -> Result<CMat> {
    Ok(FirstOrderFloquet::new(fc.clone(), drive)?.m_operator(t))
}

/// `S^(0)`; the effective Hamiltonian is `S^(0)(ω0 + X) + H_B`.
pub fn effective_hamiltonian_parts(fc: &FourierComponents, drive: &DriveConfig) -> Result<CMat> {
    Ok(FirstOrderFloquet::new(fc.clone(), drive)?.s0().clone())
}

/// `f σ_z − h σ_y`, the spin-boson kick matrix.
pub fn spin_boson_m(f: f64, h: f64) -> CMat {
    linalg::sigma_z() * c(f) - linalg::sigma_y() * c(h)
}

/// Rank-one eigenprojectors of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct ProjectorSpectrum {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<CMat>,
}

impl ProjectorSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn default_degeneracy_basis(d: usize) -> CMat {
    if d == 2 {
        linalg::sigma_z()
    } else {
        CMat::from_fn(d, d, |i, j| if i == j { c((d - 1 - i) as f64) } else { c(0.0) })
    }
}

/// Spectral decomposition of `h`. Inside a degenerate cluster the
/// eigenvectors are chosen to diagonalize `degeneracy_basis` (σ_z for d = 2
/// when not given), so the output is a deterministic function of the input.
pub fn eigen_projectors(h: &CMat, degeneracy_basis: Option<&CMat>) -> ProjectorSpectrum {
    let d = h.nrows();
    let eig = HermitianEigen::new(h);
    let basis = degeneracy_basis.cloned().unwrap_or_else(|| default_degeneracy_basis(d));
    let mut values = eig.values.clone();
    let mut vectors = eig.vectors.clone();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && (eig.values[end] - eig.values[end - 1]).abs() <= DEGENERACY_TOL {
            end += 1;
        }
        if end - start > 1 {
            let q = eig.vectors.columns(start, end - start).into_owned();
            let sub = HermitianEigen::new(&(q.adjoint() * &basis * &q));
            let rotated = &q * &sub.vectors;
            let mean = eig.values[start..end].iter().sum::<f64>() / (end - start) as f64;
            for k in 0..end - start {
                vectors.set_column(start + k, &rotated.column(k));
                values[start + k] = mean;
            }
        }
        start = end;
    }
    let projectors = (0..d)
        .map(|k| {
            let v = vectors.column(k);
            v * v.adjoint()
        })
        .collect();
    ProjectorSpectrum {
        eigenvalues: values,
        projectors,
    }
}

/// Labels `(n1, n2, n3)` of the eigenprojectors of `M(t)`, `S^(0)` and `M(0)`.
/// For a qubit, label 0 is the lower eigenvalue (sign −1) and label 1 the
/// upper one (sign +1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub n: [usize; 3],
}

impl MultiIndex {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Self {
        Self { n: [n1, n2, n3] }
    }

    /// From qubit signs `±1`.
    pub fn from_signs(s: [i8; 3]) -> Self {
        let lab = |x: i8| if x < 0 { 0 } else { 1 };
        Self::new(lab(s[0]), lab(s[1]), lab(s[2]))
    }

    /// Qubit sign `±1` of component `j`.
    pub fn sign(&self, j: usize) -> f64 {
        if self.n[j] == 0 {
            -1.0
        } else {
            1.0
        }
    }

    /// All `d³` indices in lexicographic order.
    pub fn all(d: usize) -> impl Iterator<Item = MultiIndex> {
        (0..d * d * d).map(move |k| MultiIndex::new(k / (d * d), (k / d) % d, k % d))
    }
}

/// Spectra of `M(t)`, `S^(0)` and `M(0)` at one time.
#[derive(Debug, Clone)]
pub struct KickSpectra {
    pub m_t: ProjectorSpectrum,
    pub s0: ProjectorSpectrum,
    pub m_0: ProjectorSpectrum,
}

impl KickSpectra {
    pub fn new(m_t: &CMat, s0: &CMat, m_0: &CMat, degeneracy_basis: Option<&CMat>) -> Self {
        Self {
            m_t: eigen_projectors(m_t, degeneracy_basis),
            s0: eigen_projectors(s0, degeneracy_basis),
            m_0: eigen_projectors(m_0, degeneracy_basis),
        }
    }

    pub fn dim(&self) -> usize {
        self.s0.len()
    }

    /// `𝒢_n = P^{n1}_{M(t)} P^{n2}_{S^(0)} P^{n3}_{M(0)}`.
    pub fn chain(&self, n: MultiIndex) -> CMat {
        &self.m_t.projectors[n.n[0]] * &self.s0.projectors[n.n[1]] * &self.m_0.projectors[n.n[2]]
    }
}

/// Bath displacement bookkeeping of one projector chain.
#[derive(Debug, Clone)]
pub struct DisplacementData {
    /// `α_k^{n1}(t) = −i M_{n1}(t) g_k e^{iω_k t}`.
    pub alpha_t: Vec<C64>,
    /// `α_k^{n3}(0) = −i M_{n3}(0) g_k`.
    pub alpha_0: Vec<C64>,
    /// `ϑ_k^{n2}(t) = S^(0)_{n2} g_k (1 − e^{iω_k t})/ω_k`.
    pub vartheta: Vec<C64>,
    /// `Λ = α_{n1}(t) + ϑ_{n2}(t) − α_{n3}(0)`.
    pub lambda: Vec<C64>,
    /// `χ = α_{n1}(t)·ϑ*_{n2}(t) − [α_{n1}(t) + ϑ_{n2}(t)]·α*_{n3}(0)`.
    pub chi: C64,
    /// `Ω = ω0 [M_{n1}(t) + S^(0)_{n2} t − M_{n3}(0)] − η_{n2}(t)`.
    pub omega: f64,
    /// `η_{n2}(t) = (S^(0)_{n2})² Σ_k (g_k/ω_k)² (ω_k t − sin ω_k t)`.
    pub eta_n2: f64,
}

/// `Σ_k a_k b_k*`.
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn displacement_data(
    n: MultiIndex,
    t: f64,
    omega0: f64,
    bath: &DiscreteBath,
    spectra: &KickSpectra,
) -> DisplacementData {
    let m1 = spectra.m_t.eigenvalues[n.n[0]];
    let s2 = spectra.s0.eigenvalues[n.n[1]];
    let m3 = spectra.m_0.eigenvalues[n.n[2]];
    let modes = bath.modes();
    let mut alpha_t = Vec::with_capacity(modes.len());
    let mut alpha_0 = Vec::with_capacity(modes.len());
    let mut vartheta = Vec::with_capacity(modes.len());
    let mut eta_sum = 0.0;
    for m in modes {
        let phase = C64::from_polar(1.0, m.omega * t);
        alpha_t.push(-I * (m1 * m.g) * phase);
        alpha_0.push(-I * (m3 * m.g));
        vartheta.push((C64::new(1.0, 0.0) - phase) * (s2 * m.g / m.omega));
        let x = m.omega * t;
        eta_sum += (m.g / m.omega).powi(2) * (x - x.sin());
    }
    let lambda: Vec<C64> = alpha_t
        .iter()
        .zip(&vartheta)
        .zip(&alpha_0)
        .map(|((a, v), a0)| a + v - a0)
        .collect();
    let sum_av: Vec<C64> = alpha_t.iter().zip(&vartheta).map(|(a, v)| a + v).collect();
    let chi = dot_conj(&alpha_t, &vartheta) - dot_conj(&sum_av, &alpha_0);
    let eta_n2 = s2 * s2 * eta_sum;
    DisplacementData {
        alpha_t,
        alpha_0,
        vartheta,
        lambda,
        chi,
        omega: omega0 * (m1 + s2 * t - m3) - eta_n2,
        eta_n2,
    }
}
