//! Continuous-time transfer-function algebra, state-space realization,
//! fixed-step discretization and simulation, and frequency-response analysis.
//!
//! Transfer functions are ratios of polynomials in `s` with coefficients
//! stored highest power first. Compositions keep full degree: no pole-zero
//! cancellation is ever performed, so a composed loop matches its algebraic
//! expansion coefficient for coefficient.

use crate::error::{Result, SimError};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Ratio of polynomials in `s`, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TransferFunction {
    /// Builds a proper transfer function. Leading zeros of the numerator are
    /// trimmed; the denominator must keep a nonzero leading coefficient.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if den.is_empty() || den[0] == 0.0 || !den[0].is_finite() {
            return Err(SimError::InvalidDenominator);
        }
        let mut num = num;
        while num.len() > 1 && num[0] == 0.0 {
            num.remove(0);
        }
        if num.is_empty() {
            num.push(0.0);
        }
        if num.len() > den.len() {
            return Err(SimError::Improper {
                num: num.len() - 1,
                den: den.len() - 1,
            });
        }
        Ok(Self { num, den })
    }

    /// Unity gain, `1/1`.
    pub fn unity() -> Self {
        Self {
            num: vec![1.0],
            den: vec![1.0],
        }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    /// Evaluates the transfer function at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        polyval(&self.num, s) / polyval(&self.den, s)
    }

    /// Gain at `s = 0`. Infinite for type-1 and higher systems.
    pub fn dc_gain(&self) -> f64 {
        let n = *self.num.last().unwrap();
        let d = *self.den.last().unwrap();
        n / d
    }
}

fn polyval(p: &[f64], s: Complex64) -> Complex64 {
    let mut v = Complex64::new(0.0, 0.0);
    for &c in p {
        v = v * s + c;
    }
    v
}

fn polymul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn polyadd(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().enumerate() {
        out[n - a.len() + i] += x;
    }
    for (i, &x) in b.iter().enumerate() {
        out[n - b.len() + i] += x;
    }
    out
}

/// Series (cascade) composition `a·b` by polynomial products.
pub fn series(a: &TransferFunction, b: &TransferFunction) -> Result<TransferFunction> {
    TransferFunction::new(polymul(&a.num, &b.num), polymul(&a.den, &b.den))
}

/// Unity negative feedback: `forward / (1 + forward)`.
pub fn feedback_unity(forward: &TransferFunction) -> Result<TransferFunction> {
    let den = polyadd(&forward.den, &forward.num);
    if den.iter().all(|&c| c == 0.0) {
        return Err(SimError::DegenerateFeedback);
    }
    TransferFunction::new(forward.num.clone(), den)
}

/// Single-input single-output state-space realization `ẋ = Ax + Bu, y = Cx + Du`.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Frequency response `C(sI−A)⁻¹B + D` at `s = jω`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        let n = self.order();
        if n == 0 {
            return Complex64::new(self.d, 0.0);
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex64::new(-self.a[(i, j)], if i == j { omega } else { 0.0 });
            }
        }
        let b = DVector::from_iterator(n, self.b.iter().map(|&v| Complex64::new(v, 0.0)));
        let x = m.lu().solve(&b).expect("jw*I - A is singular");
        let mut y = Complex64::new(self.d, 0.0);
        for i in 0..n {
            y += Complex64::new(self.c[i], 0.0) * x[i];
        }
        y
    }
}

/// Controllable canonical realization of a proper transfer function.
pub fn to_state_space(tf: &TransferFunction) -> Result<StateSpace> {
    let a0 = tf.den[0];
    let den: Vec<f64> = tf.den.iter().map(|&c| c / a0).collect();
    let num: Vec<f64> = tf.num.iter().map(|&c| c / a0).collect();
    let n = den.len() - 1;

    // pad numerator to n+1 coefficients
    let mut numpad = vec![0.0; n + 1];
    numpad[(n + 1 - num.len())..].copy_from_slice(&num);
    let d = numpad[0];

    if n == 0 {
        return Ok(StateSpace {
            a: DMatrix::zeros(0, 0),
            b: DVector::zeros(0),
            c: DVector::zeros(0),
            d,
        });
    }

    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        a[(0, j)] = -den[j + 1];
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[0] = 1.0;
    let c = DVector::from_iterator(n, (0..n).map(|i| numpad[i + 1] - d * den[i + 1]));
    Ok(StateSpace { a, b, c, d })
}

/// Matrix exponential by scaling-and-squaring of the plain series,
/// truncated when the term falls below 1e-12 in max-abs.
fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let s = if norm > 0.0 {
        (norm.log2().ceil() as i32 + 1).max(0) as u32
    } else {
        0
    };
    let ms = m / 2f64.powi(s as i32);
    let mut e = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=200 {
        term = (&term * &ms) / k as f64;
        e += &term;
        if term.amax() < 1e-12 {
            break;
        }
    }
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

/// Discrete state-space system at a fixed sample period.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub ad: DMatrix<f64>,
    pub bd: DVector<f64>,
    pub cd: DVector<f64>,
    pub dd: f64,
    pub ts: f64,
}

impl DiscreteSystem {
    pub fn order(&self) -> usize {
        self.ad.nrows()
    }

    pub fn zero_state(&self) -> DVector<f64> {
        DVector::zeros(self.order())
    }

    /// Output at the current state, `y = C·x + D·u`.
    pub fn output(&self, x: &DVector<f64>, u: f64) -> f64 {
        self.cd.dot(x) + self.dd * u
    }

    /// Advances the state one sample and returns the output at the
    /// pre-update state.
    pub fn step(&self, x: &mut DVector<f64>, u: f64) -> f64 {
        let y = self.output(x, u);
        self.advance(x, u);
        y
    }

    /// Advances the state one sample without producing an output; used when
    /// the output was already read before the input became available.
    pub fn advance(&self, x: &mut DVector<f64>, u: f64) {
        *x = &self.ad * &*x + &self.bd * u;
    }

    /// Frequency response at `z = e^{jωTs}`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        let n = self.order();
        let z = Complex64::new(0.0, omega * self.ts).exp();
        if n == 0 {
            return Complex64::new(self.dd, 0.0);
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex64::new(-self.ad[(i, j)], 0.0);
                if i == j {
                    m[(i, j)] += z;
                }
            }
        }
        let b = DVector::from_iterator(n, self.bd.iter().map(|&v| Complex64::new(v, 0.0)));
        let x = m.lu().solve(&b).expect("zI - Ad is singular");
        let mut y = Complex64::new(self.dd, 0.0);
        for i in 0..n {
            y += Complex64::new(self.cd[i], 0.0) * x[i];
        }
        y
    }
}

/// Zero-order-hold discretization. `Ad` and `Bd` come from one exponential
/// of the augmented block `[[A, B], [0, 0]]·Ts`, which is exact for held
/// inputs (no quadrature).
pub fn discretize_zoh(ss: &StateSpace, ts: f64) -> Result<DiscreteSystem> {
    if ts <= 0.0 {
        return Err(SimError::InvalidSamplePeriod(ts));
    }
    let n = ss.order();
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = ss.a[(i, j)] * ts;
        }
        aug[(i, n)] = ss.b[i] * ts;
    }
    let e = expm(&aug);
    let ad = DMatrix::from_fn(n, n, |i, j| e[(i, j)]);
    let bd = DVector::from_fn(n, |i, _| e[(i, n)]);
    Ok(DiscreteSystem {
        ad,
        bd,
        cd: ss.c.clone(),
        dd: ss.d,
        ts,
    })
}

/// Tustin (bilinear) discretization, used for blocks designed in the
/// continuous domain (the phase-lead compensator and the learning filter).
pub fn discretize_tustin(ss: &StateSpace, ts: f64) -> Result<DiscreteSystem> {
    if ts <= 0.0 {
        return Err(SimError::InvalidSamplePeriod(ts));
    }
    let n = ss.order();
    if n == 0 {
        return Ok(DiscreteSystem {
            ad: DMatrix::zeros(0, 0),
            bd: DVector::zeros(0),
            cd: DVector::zeros(0),
            dd: ss.d,
            ts,
        });
    }
    let i = DMatrix::<f64>::identity(n, n);
    let m = &i - &ss.a * (ts / 2.0);
    let lu = m.lu();
    let inv = lu
        .try_inverse()
        .ok_or(SimError::InvalidConfig("Tustin pivot is singular".into()))?;
    let ad = &inv * (&i + &ss.a * (ts / 2.0));
    let bd = &inv * &ss.b * ts;
    let cd_row = ss.c.transpose() * &inv;
    let dd = ss.d + (ss.c.transpose() * &inv * &ss.b)[(0, 0)] * (ts / 2.0);
    Ok(DiscreteSystem {
        ad,
        bd,
        cd: cd_row.transpose(),
        dd,
        ts,
    })
}

/// Batch simulation: `y[k] = C·x[k] + D·u[k]`, `x[k+1] = A·x[k] + B·u[k]`.
pub fn simulate(dsys: &DiscreteSystem, input: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
    if x0.len() != dsys.order() {
        return Err(SimError::DimensionMismatch {
            expected: dsys.order(),
            got: x0.len(),
        });
    }
    let mut x = DVector::from_column_slice(x0);
    let mut out = Vec::with_capacity(input.len());
    for &u in input {
        out.push(dsys.step(&mut x, u));
    }
    Ok(out)
}

/// Magnitude and phase of a frequency response sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPoint {
    /// rad/s
    pub omega: f64,
    /// absolute gain
    pub magnitude: f64,
    /// rad
    pub phase: f64,
}

pub fn frequency_response(tf: &TransferFunction, omegas: &[f64]) -> Vec<FrequencyPoint> {
    omegas
        .iter()
        .map(|&w| {
            let h = tf.eval(Complex64::new(0.0, w));
            FrequencyPoint {
                omega: w,
                magnitude: h.norm(),
                phase: h.arg(),
            }
        })
        .collect()
}

const BW_SCAN_LO: f64 = 1e-3;
const BW_SCAN_HI: f64 = 1e4;
const BW_POINTS_PER_DECADE: usize = 400;

/// Smallest ω where the gain falls to `|tf(j0)|/√2`, located by a
/// 400-point-per-decade log scan over [1e-3, 1e4] rad/s followed by
/// bisection to 1e-6 rad/s.
pub fn bandwidth_3db(tf: &TransferFunction) -> Result<f64> {
    let dc = tf.eval(Complex64::new(0.0, 0.0)).norm();
    if !dc.is_finite() || dc == 0.0 {
        return Err(SimError::InvalidDcGain);
    }
    let target = dc / 2f64.sqrt();
    let mag = |w: f64| tf.eval(Complex64::new(0.0, w)).norm();

    let decades = (BW_SCAN_HI / BW_SCAN_LO).log10();
    let n = (decades * BW_POINTS_PER_DECADE as f64).ceil() as usize;
    let mut prev = BW_SCAN_LO;
    if mag(prev) < target {
        return bisect_crossing(mag, BW_SCAN_LO * 0.1, prev, target);
    }
    for k in 1..=n {
        let w = BW_SCAN_LO * 10f64.powf(k as f64 / BW_POINTS_PER_DECADE as f64);
        if mag(w) < target {
            return bisect_crossing(mag, prev, w, target);
        }
        prev = w;
    }
    Err(SimError::BandwidthNotFound)
}

fn bisect_crossing<F: Fn(f64) -> f64>(mag: F, lo: f64, hi: f64, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if mag(mid) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
