//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! integrands.
//!
//! Several integrals that share one oscillatory kernel are evaluated in a
//! single pass: the integrand returns `[f64; N]` and subdivision is driven by
//! the worst component.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute tolerance on the summed error estimate of every component.
    pub tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_intervals: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub intervals: usize,
}

impl<const N: usize> QuadResult<N> {
    pub fn max_error(&self) -> f64 {
        self.error.iter().cloned().fold(0.0, f64::max)
    }
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    worst: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.worst == other.worst
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.worst.total_cmp(&other.worst)
    }
}

fn gk15<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> Panel<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    for i in 0..N {
        kron[i] = WGK[7] * fc[i];
        gauss[i] = WG[3] * fc[i];
    }
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            kron[i] += wk * s;
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    let mut worst = 0.0_f64;
    for i in 0..N {
        value[i] = kron[i] * half;
        error[i] = ((kron[i] - gauss[i]) * half).abs();
        worst = worst.max(error[i]);
    }
    Panel {
        a,
        b,
        value,
        error,
        worst,
    }
}

/// Integrates `f` over consecutive intervals defined by `breakpoints`
/// (at least two, increasing).
pub fn integrate<const N: usize, F>(f: F, breakpoints: &[f64], opts: QuadOptions) -> Result<QuadResult<N>>
where
    F: Fn(f64) -> [f64; N],
{
    if breakpoints.len() < 2 {
        return Err(Error::Domain("quadrature needs at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1]));
        }
    }
    let totals = |heap: &BinaryHeap<Panel<N>>| {
        let mut v = [0.0; N];
        let mut e = [0.0; N];
        for p in heap.iter() {
            for i in 0..N {
                v[i] += p.value[i];
                e[i] += p.error[i];
            }
        }
        (v, e)
    };
    let mut err_sum = [0.0; N];
    for p in heap.iter() {
        for i in 0..N {
            err_sum[i] += p.error[i];
        }
    }
    loop {
        let worst_total = err_sum.iter().cloned().fold(0.0, f64::max);
        if worst_total <= opts.tol || heap.is_empty() {
            let (value, error) = totals(&heap);
            return Ok(QuadResult {
                value,
                error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Numerical {
                what: "adaptive quadrature".into(),
                requested: opts.tol,
                achieved: worst_total,
            });
        }
        let p = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval cannot be split further in floating point.
            return Err(Error::Numerical {
                what: "adaptive quadrature (interval underflow)".into(),
                requested: opts.tol,
                achieved: worst_total,
            });
        }
        let left = gk15(&f, p.a, mid);
        let right = gk15(&f, mid, p.b);
        for i in 0..N {
            err_sum[i] += left.error[i] + right.error[i] - p.error[i];
        }
        heap.push(left);
        heap.push(right);
    }
}

/// Scalar convenience wrapper around [`integrate`]; returns `(value, error)`.
pub fn integrate_scalar<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], opts: QuadOptions) -> Result<(f64, f64)> {
    let r = integrate(|x| [f(x)], breakpoints, opts)?;
    Ok((r.value[0], r.error[0]))
}

/// Uniform breakpoints `a, a+step, ...` ending exactly at `b`.
pub fn uniform_breakpoints(a: f64, b: f64, step: f64) -> Vec<f64> {
    let mut pts = vec![a];
    if step > 0.0 && b > a {
        let n = ((b - a) / step).ceil() as usize;
        for k in 1..n {
            pts.push(a + k as f64 * step);
        }
    }
    pts.push(b);
    pts
}
