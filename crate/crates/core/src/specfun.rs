//! Bessel functions of the first kind and the periodic kick coefficients
//! `f_t`, `h_t`, `η_t` of the driven spin-boson model.
//!
//! The coefficients have two independent evaluation routes: the Bessel
//! series ([`KickSeries`]) and direct quadrature of their integral form
//! ([`kick_fh_integral`]).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::DriveConfig;
use crate::quad::{integrate, QuadOptions};

/// Default truncation tolerance for the kick series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-13;
/// Largest supported |x| for [`bessel_j`].
pub const MAX_ARGUMENT: f64 = 100.0;
/// Largest supported order for [`bessel_j`].
pub const MAX_ORDER: usize = 1000;

/// `J_m(x)` for integer `m ≥ 0`.
pub fn bessel_j(m: u32, x: f64) -> Result<f64> {
    let seq = bessel_j_sequence(m as usize, x)?;
    Ok(seq[m as usize])
}

/// `[J_0(x), J_1(x), ..., J_max(x)]` by Miller's downward recurrence,
/// normalized with `J_0 + 2 Σ_k J_{2k} = 1`.
pub fn bessel_j_sequence(max_order: usize, x: f64) -> Result<Vec<f64>> {
    if !x.is_finite() || x.abs() > MAX_ARGUMENT {
        return Err(Error::Domain(format!(
            "Bessel argument {x} outside supported range |x| <= {MAX_ARGUMENT}"
        )));
    }
    if max_order > MAX_ORDER {
        return Err(Error::Domain(format!(
            "Bessel order {max_order} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    let mut vals = vec![0.0; max_order + 1];
    let ax = x.abs();
    if ax == 0.0 {
        vals[0] = 1.0;
        return Ok(vals);
    }
    let top = max_order.max(ax.ceil() as usize);
    let mut start = top + 60 + (10.0 * top as f64).sqrt() as usize;
    start += start % 2;

    const BIG: f64 = 1e200;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        if k <= max_order {
            vals[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > BIG {
            cur /= BIG;
            next /= BIG;
            norm /= BIG;
            for v in vals.iter_mut().skip(k.min(max_order + 1)) {
                *v /= BIG;
            }
        }
    }
    vals[0] = cur;
    norm += cur;
    for (m, v) in vals.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && m % 2 == 1 {
            *v = -*v;
        }
    }
    Ok(vals)
}

/// Kick-operator scalars of the spin-boson model at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickCoefficients {
    pub f: f64,
    pub h: f64,
    pub eta: f64,
    pub t: f64,
}

/// `η = sqrt(f² + h²)`.
pub fn eta_from(f: f64, h: f64) -> f64 {
    f.hypot(h)
}

/// Precomputed Bessel coefficients of the `f_t` / `h_t` series for one drive.
#[derive(Debug, Clone)]
pub struct KickSeries {
    omega_l: f64,
    ratio: f64,
    j0: f64,
    /// `(m, 2 J_m / (m ω_L))` for the even orders kept in `f_t`.
    even: Vec<(f64, f64)>,
    /// Same for the odd orders kept in `h_t`.
    odd: Vec<(f64, f64)>,
}

impl KickSeries {
    pub fn new(drive: &DriveConfig, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("series tolerance must be positive, got {tol}")));
        }
        let ratio = drive.ratio();
        let omega_l = drive.omega_l;
        let turning = ratio.abs().ceil() as usize;
        let mut len = turning + 80;
        loop {
            let j = bessel_j_sequence(len, ratio)?;
            let coeff = |m: usize| 2.0 * j[m] / (m as f64 * omega_l);
            let collect = |first: usize| -> Option<Vec<(f64, f64)>> {
                let mut terms = Vec::new();
                let mut m = first;
                while m <= len {
                    let c = coeff(m);
                    if c.abs() < tol && m > turning {
                        return Some(terms);
                    }
                    terms.push((m as f64, c));
                    m += 2;
                }
                None
            };
            match (collect(2), collect(1)) {
                (Some(even), Some(odd)) => {
                    return Ok(Self {
                        omega_l,
                        ratio,
                        j0: j[0],
                        even,
                        odd,
                    })
                }
                _ if len < MAX_ORDER / 2 => len *= 2,
                _ => {
                    return Err(Error::Numerical {
                        what: "kick series truncation".into(),
                        requested: tol,
                        achieved: coeff(len).abs(),
                    })
                }
            }
        }
    }

    pub fn j0(&self) -> f64 {
        self.j0
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Number of (even, odd) terms kept.
    pub fn terms(&self) -> (usize, usize) {
        (self.even.len(), self.odd.len())
    }

    pub fn f(&self, t: f64) -> f64 {
        self.even.iter().map(|&(m, c)| c * (m * self.omega_l * t).sin()).sum()
    }

    pub fn h(&self, t: f64) -> f64 {
        self.odd.iter().map(|&(m, c)| c * (m * self.omega_l * t).cos()).sum()
    }

    pub fn at(&self, t: f64) -> KickCoefficients {
        let f = self.f(t);
        let h = self.h(t);
        KickCoefficients {
            f,
            h,
            eta: eta_from(f, h),
            t,
        }
    }
}

/// `f_t = Σ_{even m≥2} J_m(2A/ω_L) 2 sin(mω_L t)/(mω_L)`.
pub fn kick_f_series(t: f64, drive: &DriveConfig, tol: f64) -> Result<f64> {
    Ok(KickSeries::new(drive, tol)?.f(t))
}

/// `h_t = Σ_{odd m≥1} J_m(2A/ω_L) 2 cos(mω_L t)/(mω_L)`.
pub fn kick_h_series(t: f64, drive: &DriveConfig, tol: f64) -> Result<f64> {
    Ok(KickSeries::new(drive, tol)?.h(t))
}

/// `η_t` from the series route with the default tolerance.
pub fn eta(t: f64, drive: &DriveConfig) -> Result<f64> {
    let k = KickSeries::new(drive, DEFAULT_SERIES_TOL)?.at(t);
    Ok(k.eta)
}

fn quarter_period_breakpoints(a: f64, b: f64, quarter: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let first = (a / quarter).floor() as i64 + 1;
    let mut k = first;
    loop {
        let x = k as f64 * quarter;
        if x >= b {
            break;
        }
        if x > a {
            pts.push(x);
        }
        k += 1;
    }
    pts.push(b);
    pts
}

/// Integral route for `(f_t, h_t)`:
/// `f_t = ∫_0^t [cos(r sin ω_L u) − J_0(r)] du`,
/// `h_t = −∫_{π/(2ω_L)}^t sin(r sin ω_L u) du`, with `r = 2A/ω_L`.
pub fn kick_fh_integral(t: f64, drive: &DriveConfig) -> Result<(f64, f64)> {
    let r = drive.ratio();
    let w = drive.omega_l;
    let j0 = bessel_j(0, r)?;
    let quarter = 0.5 * PI / w;
    let opts = QuadOptions {
        tol: 1e-13,
        max_intervals: 100_000,
    };
    let signed = |a: f64, b: f64, g: &dyn Fn(f64) -> f64| -> Result<f64> {
        let (lo, hi, sign) = if b >= a { (a, b, 1.0) } else { (b, a, -1.0) };
        let bp = quarter_period_breakpoints(lo, hi, quarter);
        let res = integrate(|u| [g(u)], &bp, opts)?;
        if res.error[0] > 1e-11 {
            return Err(Error::Numerical {
                what: "kick coefficient quadrature".into(),
                requested: 1e-11,
                achieved: res.error[0],
            });
        }
        Ok(sign * res.value[0])
    };
    let f = signed(0.0, t, &|u| (r * (w * u).sin()).cos() - j0)?;
    let h = -signed(quarter, t, &|u| (r * (w * u).sin()).sin())?;
    Ok((f, h))
}
