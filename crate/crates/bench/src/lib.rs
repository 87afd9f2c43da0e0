//! Fixtures for the benchmarks.

use floquet_sb::linalg::{self, CMat};
use floquet_sb::model::{DiscreteBath, DriveConfig, Mode, OhmicSpectralDensity, SpectralDensity, ThermalParams};
use floquet_sb::oracle::{build_operators, thermal_state, FockSpace, Operators};

pub const CDT_RATIO: f64 = 2.404826;

pub fn drive(ratio: f64, omega_l: f64) -> DriveConfig {
    DriveConfig::from_ratio(1.0, ratio, omega_l).expect("valid drive")
}

pub fn ohmic() -> OhmicSpectralDensity {
    OhmicSpectralDensity::new(0.15, 0.9).expect("valid density")
}

pub fn thermal(temperature: f64) -> ThermalParams {
    ThermalParams::from_temperature(temperature).expect("valid temperature")
}

/// Two-mode bath sampled from the Ohmic density with spacing 0.5.
pub fn two_mode_bath() -> DiscreteBath {
    let sd = ohmic();
    let modes = [0.6, 1.1]
        .iter()
        .map(|&w| Mode {
            omega: w,
            g: (sd.j(w) * 0.5).sqrt(),
        })
        .collect();
    DiscreteBath::new(modes).expect("valid bath")
}

/// Operators and `|−y⟩⟨−y| ⊗ ρ_th` on a uniform Fock space.
pub fn oracle_fixture(cutoff: usize) -> (Operators, CMat) {
    let bath = two_mode_bath();
    let fock = FockSpace::uniform(bath.len(), cutoff).expect("valid cutoff");
    let ops = build_operators(&fock, &bath).expect("operators");
    let rho_b = thermal_state(&bath, &fock, &thermal(0.2)).expect("thermal state").rho;
    let rho0 = linalg::kron(floquet_sb::QubitState::minus_y().matrix(), &rho_b);
    (ops, rho0)
}
