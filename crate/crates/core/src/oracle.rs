//! Brute-force reference: the qubit plus a few bath modes on a truncated Fock
//! space, propagated exactly in time.
//!
//! Basis order: system index slowest (σ_z = +1 first), then mode 1, ..., mode N
//! occupations, lexicographic. Every operator is a dense matrix.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::floquet::{displacement_data, spin_boson_m, KickSpectra, MultiIndex};
use crate::linalg::{self, c, CMat, HermitianEigen, C64, I};
use crate::model::{DiscreteBath, DriveConfig, ThermalParams};
use crate::reduced::QubitState;
use crate::specfun::{KickSeries, DEFAULT_SERIES_TOL};

/// Largest discarded Boltzmann weight accepted by [`thermal_state`].
pub const THERMAL_TAIL_LIMIT: f64 = 1e-4;
/// Minimum number of midpoint steps per drive period.
pub const MIN_STEPS_PER_PERIOD: usize = 100;

/// System qubit ⊗ truncated bosonic modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    bath_dim: usize,
}

impl FockSpace {
    /// `cutoffs[k]` is the largest occupation kept for mode `k`.
    pub fn new(cutoffs: Vec<usize>) -> Result<Self> {
        if cutoffs.is_empty() || cutoffs.iter().any(|&c| c < 1) {
            return Err(Error::Domain("every mode needs a cutoff >= 1".into()));
        }
        let bath_dim = cutoffs
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c + 1))
            .filter(|&d| d <= 1 << 16)
            .ok_or_else(|| Error::Domain("truncated Fock space is too large for dense storage".into()))?;
        Ok(Self { cutoffs, bath_dim })
    }

    pub fn uniform(n_modes: usize, cutoff: usize) -> Result<Self> {
        Self::new(vec![cutoff; n_modes])
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn bath_dim(&self) -> usize {
        self.bath_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.bath_dim
    }

    /// Occupation numbers of bath basis state `b`.
    pub fn occupations(&self, mut b: usize) -> Vec<usize> {
        let mut occ = vec![0; self.n_modes()];
        for k in (0..self.n_modes()).rev() {
            let base = self.cutoffs[k] + 1;
            occ[k] = b % base;
            b /= base;
        }
        occ
    }

    /// Bath basis states in which at least one mode sits at its cutoff.
    pub fn boundary_states(&self) -> Vec<usize> {
        (0..self.bath_dim)
            .filter(|&b| self.occupations(b).iter().zip(&self.cutoffs).any(|(n, c)| n == c))
            .collect()
    }

    /// Lifts a bath operator to the full space (`I_2 ⊗ B`).
    pub fn lift_bath(&self, b: &CMat) -> CMat {
        linalg::kron(&linalg::identity(2), b)
    }

    /// Lifts a system operator to the full space (`S ⊗ I_B`).
    pub fn lift_system(&self, s: &CMat) -> CMat {
        linalg::kron(s, &linalg::identity(self.bath_dim))
    }
}

/// Dense operator on a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub matrix: CMat,
    hermitian: bool,
}

impl FockOperator {
    pub fn new(matrix: CMat, fock: &FockSpace) -> Result<Self> {
        if matrix.shape() != (fock.dim(), fock.dim()) {
            return Err(Error::Domain(format!(
                "operator shape {:?} does not match Fock dimension {}",
                matrix.shape(),
                fock.dim()
            )));
        }
        Ok(Self {
            matrix,
            hermitian: false,
        })
    }

    /// Verifies hermiticity to 1e-10 and removes the residual asymmetry.
    pub fn hermitian(matrix: CMat, fock: &FockSpace) -> Result<Self> {
        let op = Self::new(matrix, fock)?;
        let defect = linalg::hermiticity_defect(&op.matrix);
        if defect > 1e-10 {
            return Err(Error::Numerical {
                what: "operator hermiticity".into(),
                requested: 1e-10,
                achieved: defect,
            });
        }
        Ok(Self {
            matrix: linalg::symmetrize(&op.matrix),
            hermitian: true,
        })
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }
}

/// Ladder operator of one mode with occupations `0..=cutoff`.
pub fn annihilation(cutoff: usize) -> CMat {
    let n = cutoff + 1;
    CMat::from_fn(n, n, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) })
}

/// Operators of the model on the truncated space. Bath-space versions
/// (dimension `bath_dim`) are kept alongside the full-space ones.
#[derive(Debug, Clone)]
pub struct Operators {
    pub fock: FockSpace,
    pub bath: DiscreteBath,
    /// `a_k` on the bath space.
    pub bath_a: Vec<CMat>,
    /// `X = Σ g_k (a_k† + a_k)` on the bath space.
    pub bath_x: CMat,
    /// `Ẋ = i Σ g_k ω_k (a_k† − a_k)` on the bath space.
    pub bath_xdot: CMat,
    /// `H_B = Σ ω_k a_k† a_k` on the bath space.
    pub bath_hb: CMat,
    pub a: Vec<CMat>,
    pub x: CMat,
    pub xdot: CMat,
    pub hb: CMat,
    pub sx: CMat,
    pub sy: CMat,
    pub sz: CMat,
    pub id: CMat,
}

impl Operators {
    pub fn a_dag(&self, k: usize) -> CMat {
        self.a[k].adjoint()
    }
}

pub fn build_operators(fock: &FockSpace, bath: &DiscreteBath) -> Result<Operators> {
    if fock.n_modes() != bath.len() {
        return Err(Error::Domain(format!(
            "Fock space has {} modes but the bath has {}",
            fock.n_modes(),
            bath.len()
        )));
    }
    let bd = fock.bath_dim();
    let bath_a: Vec<CMat> = (0..fock.n_modes())
        .map(|k| {
            fock.cutoffs()
                .iter()
                .enumerate()
                .fold(CMat::identity(1, 1), |acc, (j, &cut)| {
                    let f = if j == k {
                        annihilation(cut)
                    } else {
                        linalg::identity(cut + 1)
                    };
                    linalg::kron(&acc, &f)
                })
        })
        .collect();
    let mut bath_x = CMat::zeros(bd, bd);
    let mut bath_xdot = CMat::zeros(bd, bd);
    let mut bath_hb = CMat::zeros(bd, bd);
    for (a, m) in bath_a.iter().zip(bath.modes()) {
        let ad = a.adjoint();
        bath_x += (&ad + a) * c(m.g);
        bath_xdot += (&ad - a) * (I * (m.g * m.omega));
        bath_hb += &ad * a * c(m.omega);
    }
    let lift = |b: &CMat| fock.lift_bath(b);
    Ok(Operators {
        a: bath_a.iter().map(lift).collect(),
        x: lift(&bath_x),
        xdot: lift(&bath_xdot),
        hb: lift(&bath_hb),
        sx: fock.lift_system(&linalg::sigma_x()),
        sy: fock.lift_system(&linalg::sigma_y()),
        sz: fock.lift_system(&linalg::sigma_z()),
        id: linalg::identity(fock.dim()),
        fock: fock.clone(),
        bath: bath.clone(),
        bath_a,
        bath_x,
        bath_xdot,
        bath_hb,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Rotating,
}

/// `𝒰(t) = cos φ − i sin φ σ_x` with `φ = (A/ω_L) sin(ω_L t)`, on the qubit.
pub fn frame_unitary(drive: &DriveConfig, t: f64) -> CMat {
    let phi = drive.amplitude / drive.omega_l * (drive.omega_l * t).sin();
    linalg::identity(2) * c(phi.cos()) - linalg::sigma_x() * (I * phi.sin())
}

/// Lab: `ω0σ_z + A cos(ω_L t)σ_x + H_B + σ_z X`.
/// Rotating: `S(t)(ω0 + X) + H_B` with `S(t) = 𝒰†σ_z𝒰 = cos(r sin ω_L t)σ_z + sin(r sin ω_L t)σ_y`.
pub fn hamiltonian(t: f64, frame: Frame, drive: &DriveConfig, ops: &Operators) -> Result<FockOperator> {
    let w = &ops.id * c(drive.omega0) + &ops.x;
    let h = match frame {
        Frame::Lab => &ops.sz * &w + &ops.sx * c(drive.amplitude * (drive.omega_l * t).cos()) + &ops.hb,
        Frame::Rotating => {
            let arg = drive.ratio() * (drive.omega_l * t).sin();
            let s = &ops.sz * c(arg.cos()) + &ops.sy * c(arg.sin());
            s * &w + &ops.hb
        }
    };
    FockOperator::hermitian(h, &ops.fock)
}

/// Normalized thermal bath state with the Boltzmann weight lost to truncation.
#[derive(Debug, Clone)]
pub struct ThermalBathState {
    /// Diagonal density matrix on the bath space.
    pub rho: CMat,
    pub tail_weight: f64,
}

/// `e^{−βH_B}/Z` on the truncated bath space.
pub fn thermal_state(bath: &DiscreteBath, fock: &FockSpace, th: &ThermalParams) -> Result<ThermalBathState> {
    if fock.n_modes() != bath.len() {
        return Err(Error::Domain(
            "Fock space and bath disagree on the number of modes".into(),
        ));
    }
    let bd = fock.bath_dim();
    let mut rho = CMat::zeros(bd, bd);
    let tail = match *th {
        ThermalParams::ZeroTemperature => {
            rho[(0, 0)] = c(1.0);
            0.0
        }
        ThermalParams::Finite { beta } => {
            let mut kept = 1.0;
            for (m, &cut) in bath.modes().iter().zip(fock.cutoffs()) {
                kept *= -(-(beta * m.omega * (cut + 1) as f64)).exp_m1();
            }
            let weights: Vec<f64> = (0..bd)
                .map(|b| {
                    let e: f64 = fock
                        .occupations(b)
                        .iter()
                        .zip(bath.modes())
                        .map(|(&n, m)| n as f64 * m.omega)
                        .sum();
                    (-beta * e).exp()
                })
                .collect();
            let z: f64 = weights.iter().sum();
            for (b, w) in weights.iter().enumerate() {
                rho[(b, b)] = c(w / z);
            }
            1.0 - kept
        }
    };
    if tail > THERMAL_TAIL_LIMIT {
        return Err(Error::Truncation {
            weight: tail,
            threshold: THERMAL_TAIL_LIMIT,
        });
    }
    Ok(ThermalBathState { rho, tail_weight: tail })
}

/// `ρ_S ⊗ ρ_B`.
pub fn product_state(rho_s: &QubitState, rho_b: &CMat) -> CMat {
    linalg::kron(rho_s.matrix(), rho_b)
}

/// `Tr_B ρ`.
pub fn partial_trace_bath(rho: &CMat, fock: &FockSpace) -> Result<QubitState> {
    let bd = fock.bath_dim();
    if rho.shape() != (fock.dim(), fock.dim()) {
        return Err(Error::Domain("state does not match the Fock space".into()));
    }
    let mut r = CMat::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            r[(i, j)] = (0..bd).map(|b| rho[(i * bd + b, j * bd + b)]).sum();
        }
    }
    QubitState::new(r)
}

/// `Tr(ρ a_k† a_k)`.
pub fn mode_occupation(rho: &CMat, k: usize, ops: &Operators) -> Result<f64> {
    if k >= ops.a.len() {
        return Err(Error::Domain(format!("mode index {k} out of range")));
    }
    let n = ops.a_dag(k) * &ops.a[k];
    Ok(linalg::expectation(rho, &n))
}

/// Population of basis states with some mode at its cutoff.
pub fn boundary_weight(rho: &CMat, fock: &FockSpace) -> f64 {
    let bd = fock.bath_dim();
    fock.boundary_states()
        .iter()
        .map(|&b| rho[(b, b)].re + rho[(bd + b, bd + b)].re)
        .sum()
}

/// `ρ = Ψ Ψ†` factor of a density matrix (columns with weight below
/// `1e-14` of the trace dropped), convenient for propagating mixed states.
pub fn purification(rho: &CMat) -> CMat {
    let eig = HermitianEigen::new(rho);
    let tr: f64 = eig.values.iter().sum();
    let keep: Vec<usize> = (0..eig.dim()).filter(|&k| eig.values[k] > 1e-14 * tr).collect();
    let mut psi = CMat::zeros(rho.nrows(), keep.len());
    for (j, &k) in keep.iter().enumerate() {
        psi.set_column(j, &(eig.vectors.column(k) * c(eig.values[k].sqrt())));
    }
    psi
}

/// Rotating-frame midpoint integrator.
///
/// A step is `exp(−i H_R(t_m) h) = 𝒰†(t_m) exp(−i H_0 h) 𝒰(t_m)` with the
/// undriven `H_0 = σ_z(ω0 + X) + H_B`; `exp(−iH_0 h)` is block diagonal in
/// the qubit index and computed once.
#[derive(Debug, Clone)]
pub struct RotatingPropagator {
    drive: DriveConfig,
    bath_dim: usize,
    e_plus: CMat,
    e_minus: CMat,
    step: f64,
}

impl RotatingPropagator {
    pub fn new(drive: &DriveConfig, ops: &Operators, steps_per_period: usize) -> Result<Self> {
        if steps_per_period < MIN_STEPS_PER_PERIOD {
            return Err(Error::Parameter(format!(
                "{steps_per_period} steps per drive period is below the minimum {MIN_STEPS_PER_PERIOD}"
            )));
        }
        let step = drive.period() / steps_per_period as f64;
        let bd = ops.fock.bath_dim();
        let w = linalg::identity(bd) * c(drive.omega0) + &ops.bath_x;
        let e_plus = linalg::expm_hermitian(&(&ops.bath_hb + &w), step);
        let e_minus = linalg::expm_hermitian(&(&ops.bath_hb - &w), step);
        Ok(Self {
            drive: *drive,
            bath_dim: bd,
            e_plus,
            e_minus,
            step,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    /// Applies `cos φ ± i sin φ σ_x` (sign +1 for `𝒰†`) in place.
    fn rotate(&self, psi: &mut CMat, t: f64, sign: f64) {
        let phi = self.drive.amplitude / self.drive.omega_l * (self.drive.omega_l * t).sin();
        let (s, co) = phi.sin_cos();
        let k = I * (sign * s);
        let bd = self.bath_dim;
        for col in 0..psi.ncols() {
            for b in 0..bd {
                let top = psi[(b, col)];
                let bot = psi[(bd + b, col)];
                psi[(b, col)] = top * co + bot * k;
                psi[(bd + b, col)] = bot * co + top * k;
            }
        }
    }

    fn apply_step(&self, psi: &mut CMat, t_mid: f64) {
        self.rotate(psi, t_mid, -1.0);
        let bd = self.bath_dim;
        let top = &self.e_plus * psi.rows(0, bd);
        let bot = &self.e_minus * psi.rows(bd, bd);
        psi.rows_mut(0, bd).copy_from(&top);
        psi.rows_mut(bd, bd).copy_from(&bot);
        self.rotate(psi, t_mid, 1.0);
    }

    /// Evolves the columns of `psi` from `t = 0` for `n_steps`, calling
    /// `sample(step_index, time, psi)` after every `every` steps (and at 0).
    pub fn evolve(
        &self,
        mut psi: CMat,
        n_steps: usize,
        every: usize,
        mut sample: impl FnMut(usize, f64, &CMat),
    ) -> CMat {
        let every = every.max(1);
        sample(0, 0.0, &psi);
        for i in 0..n_steps {
            self.apply_step(&mut psi, (i as f64 + 0.5) * self.step);
            if (i + 1) % every == 0 {
                sample(i + 1, (i + 1) as f64 * self.step, &psi);
            }
        }
        psi
    }

    /// Rotating-frame `U(n_steps·h, 0)`.
    pub fn unitary(&self, n_steps: usize) -> CMat {
        self.evolve(linalg::identity(2 * self.bath_dim), n_steps, usize::MAX, |_, _, _| {})
    }
}

/// `(4 x_{h/2} − x_h)/3`.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Richardson combination of two matrices.
pub fn richardson_matrix(coarse: &CMat, fine: &CMat) -> CMat {
    (fine * c(4.0) - coarse) * c(1.0 / 3.0)
}

/// Density matrix of the full system propagated to `t_final`.
///
/// The rotating-frame midpoint integrator is used; the lab-frame result is the
/// exact transform `𝒰(t) ρ_R 𝒰†(t)`.
pub fn propagate(
    rho0: &CMat,
    t_final: f64,
    steps_per_period: usize,
    frame: Frame,
    drive: &DriveConfig,
    ops: &Operators,
) -> Result<FockOperator> {
    let prop = RotatingPropagator::new(drive, ops, steps_per_period)?;
    let n = (t_final / prop.step_size()).round() as usize;
    if ((n as f64) * prop.step_size() - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::Parameter(format!(
            "t_final = {t_final} is not a multiple of the step {}",
            prop.step_size()
        )));
    }
    let psi = prop.evolve(purification(rho0), n, usize::MAX, |_, _, _| {});
    let mut rho = &psi * psi.adjoint();
    if frame == Frame::Lab {
        let u = ops.fock.lift_system(&frame_unitary(drive, t_final));
        rho = &u * rho * u.adjoint();
    }
    FockOperator::hermitian(rho, &ops.fock)
}

/// Plain midpoint-exponential integrator for an arbitrary `H(t)`: slower
/// than [`RotatingPropagator`], used as an independent path.
pub fn midpoint_unitary(h: impl Fn(f64) -> CMat, t0: f64, t1: f64, steps: usize) -> CMat {
    let dt = (t1 - t0) / steps as f64;
    let d = h(t0).nrows();
    let mut u = linalg::identity(d);
    for i in 0..steps {
        u = linalg::expm_hermitian(&h(t0 + (i as f64 + 0.5) * dt), dt) * u;
    }
    u
}

/// `D[μ] = exp(Σ_k μ_k a_k† − μ_k* a_k)` on the bath space.
pub fn displacement(mu: &[C64], ops: &Operators) -> CMat {
    let bd = ops.fock.bath_dim();
    // D = exp(−i G) with G = i(μa† − μ*a) Hermitian.
    let mut g = CMat::zeros(bd, bd);
    for (m, a) in mu.iter().zip(&ops.bath_a) {
        g += (a.adjoint() * *m - a * m.conj()) * I;
    }
    linalg::expm_hermitian(&g, 1.0)
}

/// `U_R(t, 0) = Σ_n e^{−iΩ_n} e^{i Im χ_n} e^{−iH_B t} 𝒢_n D[Λ_n]`.
pub fn analytic_propagator(t: f64, drive: &DriveConfig, ops: &Operators) -> Result<FockOperator> {
    let series = KickSeries::new(drive, DEFAULT_SERIES_TOL)?;
    let s0 = linalg::sigma_z() * c(series.j0());
    let spectra = KickSpectra::new(
        &spin_boson_m(series.f(t), series.h(t)),
        &s0,
        &spin_boson_m(series.f(0.0), series.h(0.0)),
        None,
    );
    let free = linalg::expm_hermitian(&ops.bath_hb, t);
    let dim = ops.fock.dim();
    let mut u = CMat::zeros(dim, dim);
    for n in MultiIndex::all(2) {
        let data = displacement_data(n, t, drive.omega0, &ops.bath, &spectra);
        let phase = C64::from_polar(1.0, data.chi.im - data.omega);
        let bath_part = &free * displacement(&data.lambda, ops);
        u += linalg::kron(&spectra.chain(n), &bath_part) * phase;
    }
    let unitarity = linalg::op_norm(&(u.adjoint() * &u - &ops.id));
    log::debug!("analytic propagator unitarity defect {unitarity:e}");
    FockOperator::new(u, &ops.fock)
}

const FSBO_MAGIC: &[u8; 4] = b"FSBO";
const FSBO_VERSION: u32 = 1;

/// Writes `FSBO` header (magic, version, dim, n_modes, 8 reserved bytes)
/// followed by the matrix as row-major little-endian complex128.
pub fn write_fsbo(w: &mut impl Write, m: &CMat, n_modes: usize) -> io::Result<()> {
    if !m.is_square() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "matrix must be square"));
    }
    w.write_all(FSBO_MAGIC)?;
    w.write_all(&FSBO_VERSION.to_le_bytes())?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(n_modes as u64).to_le_bytes())?;
    w.write_all(&[0u8; 8])?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].re.to_le_bytes())?;
            w.write_all(&m[(i, j)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a matrix written by [`write_fsbo`]; returns `(matrix, n_modes)`.
pub fn read_fsbo(r: &mut impl Read) -> io::Result<(CMat, usize)> {
    let mut head = [0u8; 32];
    r.read_exact(&mut head)?;
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    if &head[0..4] != FSBO_MAGIC {
        return Err(bad("not an FSBO file"));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
    if version != FSBO_VERSION {
        return Err(bad("unsupported FSBO version"));
    }
    let dim = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes")) as usize;
    let n_modes = u64::from_le_bytes(head[16..24].try_into().expect("8 bytes")) as usize;
    if dim > 1 << 16 {
        return Err(bad("dimension too large"));
    }
    let mut m = CMat::zeros(dim, dim);
    let mut buf = [0u8; 16];
    for i in 0..dim {
        for j in 0..dim {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[0..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..16].try_into().expect("8 bytes"));
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok((m, n_modes))
}
