//! Analytic test states: Fock expansions, ideal and lossy quadrature
//! densities, Wigner functions and s-ordered quasidistributions.
//!
//! Conventions: `x_theta = x cos(theta) + p sin(theta)` has vacuum variance
//! 1/2, the Wigner function integrates to one over `dq dp`, and a coherent
//! state `|alpha>` is centred at `(sqrt(2) Re alpha, sqrt(2) Im alpha)`.

use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{fock_wavefunctions_into, DEFAULT_FOCK_CAP};
use crate::numerics::simpson_step;

/// Default upper bound on the truncation tail of shipped expansions.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    /// Relative sign of the `|-alpha>` component.
    fn sign(self) -> f64 {
        match self {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        }
    }
}

/// A pure test state with a known Fock expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    Vacuum,
    Fock(usize),
    Coherent { re: f64, im: f64 },
    /// `(|alpha> + sign |-alpha>)` normalized, sign = -1 for the odd cat.
    Cat { re: f64, im: f64, parity: Parity },
}

impl StateSpec {
    pub fn odd_cat(re: f64, im: f64) -> Self {
        StateSpec::Cat { re, im, parity: Parity::Odd }
    }

    pub fn amplitude(&self) -> Complex64 {
        match *self {
            StateSpec::Vacuum | StateSpec::Fock(_) => Complex64::new(0.0, 0.0),
            StateSpec::Coherent { re, im } | StateSpec::Cat { re, im, .. } => Complex64::new(re, im),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StateSpec::Vacuum => Ok(()),
            StateSpec::Fock(n) if n > DEFAULT_FOCK_CAP => Err(Error::Config(format!(
                "Fock index {n} exceeds the cap of {DEFAULT_FOCK_CAP}"
            ))),
            StateSpec::Fock(_) => Ok(()),
            StateSpec::Coherent { re, im } | StateSpec::Cat { re, im, .. } => {
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::Domain("amplitude must be finite".into()));
                }
                if matches!(self, StateSpec::Cat { .. }) && re == 0.0 && im == 0.0 {
                    return Err(Error::Domain("cat state requires |alpha| > 0".into()));
                }
                if self.natural_cutoff() > DEFAULT_FOCK_CAP {
                    return Err(Error::Config(format!(
                        "amplitude {} needs more than {DEFAULT_FOCK_CAP} Fock states",
                        self.amplitude().norm()
                    )));
                }
                Ok(())
            }
        }
    }

    /// Truncation that leaves a negligible (below 1e-20) tail.
    pub fn natural_cutoff(&self) -> usize {
        match *self {
            StateSpec::Vacuum => 1,
            StateSpec::Fock(n) => n + 1,
            StateSpec::Coherent { .. } | StateSpec::Cat { .. } => {
                let a = self.amplitude().norm();
                (a * a + 10.0 * a + 16.0).ceil() as usize
            }
        }
    }

    /// Half-width of the interval that carries the quadrature density for
    /// every phase: the classical extent plus six units.
    pub fn quadrature_extent(&self) -> f64 {
        match *self {
            StateSpec::Vacuum => 1.0 + 6.0,
            StateSpec::Fock(n) => (2.0 * n as f64 + 1.0).sqrt() + 6.0,
            StateSpec::Coherent { .. } | StateSpec::Cat { .. } => {
                SQRT_2 * self.amplitude().norm() + 6.0
            }
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StateSpec::Vacuum => write!(f, "vacuum"),
            StateSpec::Fock(n) => write!(f, "fock:{n}"),
            StateSpec::Coherent { re, im } => write!(f, "coherent:{re},{im}"),
            StateSpec::Cat { re, im, parity } => {
                let p = match parity {
                    Parity::Odd => "odd",
                    Parity::Even => "even",
                };
                write!(f, "cat:{re},{im},{p}")
            }
        }
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unrecognized state description '{s}'"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (kind, args) = match s.trim().split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s.trim(), None),
        };
        let spec = match (kind, args) {
            ("vacuum", None) => StateSpec::Vacuum,
            ("fock", Some(a)) => StateSpec::Fock(a.trim().parse().map_err(|_| bad())?),
            ("coherent", Some(a)) => {
                let parts: Vec<&str> = a.split(',').collect();
                let [re, im] = parts[..] else { return Err(bad()) };
                StateSpec::Coherent { re: num(re)?, im: num(im)? }
            }
            ("cat", Some(a)) => {
                let parts: Vec<&str> = a.split(',').collect();
                let [re, im, parity] = parts[..] else { return Err(bad()) };
                let parity = match parity.trim() {
                    "odd" => Parity::Odd,
                    "even" => Parity::Even,
                    _ => return Err(bad()),
                };
                StateSpec::Cat { re: num(re)?, im: num(im)?, parity }
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Truncated Fock-basis amplitudes of a pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct FockExpansion {
    pub coeffs: Vec<Complex64>,
    /// `1 - sum |c_n|^2`, clamped at zero.
    pub truncation_tail: f64,
}

impl FockExpansion {
    pub fn n_max(&self) -> usize {
        self.coeffs.len()
    }

    /// `sum (-1)^n |c_n|^2`.
    pub fn parity(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| if n % 2 == 0 { c.norm_sqr() } else { -c.norm_sqr() })
            .sum()
    }
}

/// Fock amplitudes `c_0 .. c_{n_max-1}`.
pub fn fock_coefficients(spec: &StateSpec, n_max: usize) -> Result<FockExpansion> {
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    spec.validate()?;
    let zero = Complex64::new(0.0, 0.0);
    let coeffs = match *spec {
        StateSpec::Vacuum | StateSpec::Fock(_) => {
            let n = if let StateSpec::Fock(n) = *spec { n } else { 0 };
            if n >= n_max {
                return Err(Error::Truncation(format!(
                    "Fock state {n} does not fit in {n_max} basis states"
                )));
            }
            let mut c = vec![zero; n_max];
            c[n] = Complex64::new(1.0, 0.0);
            c
        }
        StateSpec::Coherent { .. } => coherent_amplitudes(spec.amplitude(), n_max),
        StateSpec::Cat { parity, .. } => {
            let alpha = spec.amplitude();
            let sign = parity.sign();
            let norm = (2.0 + 2.0 * sign * (-2.0 * alpha.norm_sqr()).exp()).sqrt();
            coherent_amplitudes(alpha, n_max)
                .into_iter()
                .enumerate()
                .map(|(n, c)| {
                    // c_n(-alpha) = (-1)^n c_n(alpha)
                    let survives = (n % 2 == 1) == (parity == Parity::Odd);
                    if survives { c * (2.0 / norm) } else { zero }
                })
                .collect()
        }
    };
    let kept: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    Ok(FockExpansion { coeffs, truncation_tail: (1.0 - kept).max(0.0) })
}

fn coherent_amplitudes(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_max);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..n_max {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        out.push(c);
    }
    out
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!(
            "detector efficiency must lie in (0, 1], got {eta}"
        )));
    }
    Ok(())
}

/// Quadrature density of a fixed state at a fixed local-oscillator phase.
#[derive(Debug, Clone)]
pub struct QuadratureProfile {
    phased: Vec<Complex64>,
    extent: f64,
}

impl QuadratureProfile {
    pub fn new(spec: &StateSpec, theta: f64) -> Result<Self> {
        let exp = fock_coefficients(spec, spec.natural_cutoff())?;
        let phased = exp
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * Complex64::from_polar(1.0, -(n as f64) * theta))
            .collect();
        Ok(QuadratureProfile { phased, extent: spec.quadrature_extent() })
    }

    /// Half-width of the support used for tabulation.
    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Perfect-detection density `|sum_n c_n e^{-i n theta} psi_n(x)|^2`.
    pub fn ideal_pdf(&self, x: f64) -> f64 {
        let mut psi = vec![0.0; self.phased.len()];
        self.ideal_pdf_with(x, &mut psi)
    }

    fn ideal_pdf_with(&self, x: f64, psi: &mut [f64]) -> f64 {
        fock_wavefunctions_into(x, psi);
        let amp: Complex64 = self.phased.iter().zip(psi.iter()).map(|(c, p)| c * p).sum();
        amp.norm_sqr()
    }

    /// Density after loss: the ideal density pushed through the Gaussian
    /// kernel of mean `sqrt(eta) x'` and variance `(1 - eta)/2`.
    pub fn pdf(&self, x: f64, eta: f64) -> Result<f64> {
        check_eta(eta)?;
        if eta == 1.0 {
            return Ok(self.ideal_pdf(x));
        }
        let sqrt_eta = eta.sqrt();
        let sigma = ((1.0 - eta) / (2.0 * eta)).sqrt();
        let mean = x / sqrt_eta;
        let (lo, hi) = (mean - 12.0 * sigma, mean + 12.0 * sigma);
        let step = (sigma / 10.0).min(0.02);
        let norm = 1.0 / ((2.0 * PI).sqrt() * sigma);
        let mut psi = vec![0.0; self.phased.len()];
        let smeared = simpson_step(
            |xp| {
                let z = (xp - mean) / sigma;
                self.ideal_pdf_with(xp, &mut psi) * norm * (-0.5 * z * z).exp()
            },
            lo,
            hi,
            step,
        );
        Ok(smeared / sqrt_eta)
    }
}

/// Density of the homodyne outcome `x` at phase `theta` for efficiency `eta`.
pub fn quadrature_pdf(spec: &StateSpec, theta: f64, x: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    QuadratureProfile::new(spec, theta)?.pdf(x, eta)
}

/// Exact Wigner function from state-specific closed forms.
pub fn wigner_true(spec: &StateSpec, q: f64, p: f64) -> f64 {
    match *spec {
        StateSpec::Fock(n) => {
            let r2 = q * q + p * p;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sign * FRAC_1_PI * (-r2).exp() * laguerre(n, 0.0, 2.0 * r2)
        }
        _ => gaussian_family(spec, q, p, 0.0),
    }
}

/// s-ordered quasidistribution: the Wigner function convolved with an
/// isotropic Gaussian of per-axis variance `-s/2`.
pub fn squasi_true(spec: &StateSpec, q: f64, p: f64, s: f64) -> Result<f64> {
    if !(s <= 0.0) {
        return Err(Error::Domain(format!("ordering parameter must be <= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(wigner_true(spec, q, p));
    }
    Ok(match *spec {
        StateSpec::Fock(n) => {
            let exp = fock_coefficients(spec, n + 1)?;
            squasi_fock_series(&exp, q, p, s)
        }
        _ => gaussian_family(spec, q, p, s),
    })
}

/// Infinite-data limit of linear back-projection applied to statistics
/// recorded with efficiency `eta`.
pub fn fbp_expected_limit(spec: &StateSpec, q: f64, p: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let scale = eta.sqrt().recip();
    let s = -(1.0 - eta) / eta;
    Ok(squasi_true(spec, q * scale, p * scale, s)? / eta)
}

/// Closed form for vacuum, coherent and cat states, which are sums of
/// (complex) Gaussians in phase space.
fn gaussian_family(spec: &StateSpec, q: f64, p: f64, s: f64) -> f64 {
    let width = 1.0 - s;
    let pref = FRAC_1_PI / width;
    let blob = |q0: f64, p0: f64| {
        let d2 = (q - q0) * (q - q0) + (p - p0) * (p - p0);
        pref * (-d2 / width).exp()
    };
    match *spec {
        StateSpec::Vacuum => blob(0.0, 0.0),
        StateSpec::Coherent { re, im } => blob(SQRT_2 * re, SQRT_2 * im),
        StateSpec::Cat { re, im, parity } => {
            let sign = parity.sign();
            let a2 = re * re + im * im;
            let norm2 = 0.5 / (1.0 + sign * (-2.0 * a2).exp());
            let (q0, p0) = (SQRT_2 * re, SQRT_2 * im);
            // interference term: fringes with wave vector k = 2 sqrt(2) (im, -re)
            let (kq, kp) = (2.0 * SQRT_2 * im, -2.0 * SQRT_2 * re);
            let k2 = kq * kq + kp * kp;
            let cross = pref
                * (-(q * q + p * p) / width).exp()
                * (s * k2 / (4.0 * width)).exp()
                * ((kq * q + kp * p) / width).cos();
            norm2 * (blob(q0, p0) + blob(-q0, -p0) + 2.0 * sign * cross)
        }
        StateSpec::Fock(_) => unreachable!("Fock states use the Laguerre form"),
    }
}

/// Generalized Laguerre polynomial `L_n^{(a)}(x)` by forward recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - x) * cur - (jf + a) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `<k| D(gamma) |m>` via the associated-Laguerre closed form, with the
/// prefactor evaluated in log space.
pub fn displacement_element(k: usize, m: usize, gamma: Complex64, ln_fact: &[f64]) -> Complex64 {
    let x = gamma.norm_sqr();
    let (lo, hi) = (k.min(m), k.max(m));
    let order = hi - lo;
    if x == 0.0 {
        return if k == m { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    let lag = laguerre(lo, order as f64, x);
    let ln_mag = -0.5 * x + order as f64 * x.sqrt().ln() + 0.5 * (ln_fact[lo] - ln_fact[hi]);
    // gamma^{k-m} for k >= m, (-gamma*)^{m-k} otherwise
    let base = if k >= m { gamma } else { -gamma.conj() };
    let phase = Complex64::from_polar(1.0, order as f64 * base.arg());
    phase * (ln_mag.exp() * lag)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for j in 1..=n {
        out[j] = out[j - 1] + (j as f64).ln();
    }
    out
}

/// Wigner function of a Fock expansion through
/// `W = (1/pi) sum_{m,n} c_m c_n^* (-1)^m <n| D(2 beta) |m>`,
/// `beta = (q + i p)/sqrt(2)`.
pub fn wigner_fock_series(exp: &FockExpansion, q: f64, p: f64) -> f64 {
    let m_max = exp.n_max();
    let ln_fact = ln_factorials(m_max);
    let gamma = Complex64::new(q, p) * SQRT_2;
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, cm) in exp.coeffs.iter().enumerate() {
        if *cm == Complex64::new(0.0, 0.0) {
            continue;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for (n, cn) in exp.coeffs.iter().enumerate() {
            acc += cm * cn.conj() * sign * displacement_element(n, m, gamma, &ln_fact);
        }
    }
    FRAC_1_PI * acc.re
}

/// s-ordered quasidistribution of a Fock expansion through the displaced
/// photon-number distribution:
/// `W_s = (1/(pi (1-s))) sum_k t^k |<k| D(-beta) |psi>|^2`, `t = (s+1)/(s-1)`.
pub fn squasi_fock_series(exp: &FockExpansion, q: f64, p: f64, s: f64) -> f64 {
    let m_max = exp.n_max();
    let beta = Complex64::new(q, p) / SQRT_2;
    let reach = (m_max as f64).sqrt() + beta.norm();
    let k_max = (reach * reach + 12.0 * reach + 30.0).ceil() as usize;
    let ln_fact = ln_factorials(k_max.max(m_max));
    let t = (s + 1.0) / (s - 1.0);
    let mut weight = 1.0;
    let mut acc = 0.0;
    for k in 0..k_max {
        let amp: Complex64 = exp
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * displacement_element(k, m, -beta, &ln_fact))
            .sum();
        acc += weight * amp.norm_sqr();
        weight *= t;
    }
    acc * FRAC_1_PI / (1.0 - s)
}
