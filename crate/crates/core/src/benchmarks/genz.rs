//! The six Genz test-function families on the unit cube, with closed-form
//! integrals.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::config::ConfigExt;
use crate::model::{Model, ModelResult};
use crate::quadrature;
use crate::wire::{Capabilities, Config, ErrorPayload, ParameterList};

/// Smallest coefficient reached by the exponential decays.
pub const C_MIN: f64 = 5e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenzFamily {
    Oscillatory,
    ProductPeak,
    CornerPeak,
    GaussianPeak,
    C0Continuous,
    Discontinuous,
}

impl GenzFamily {
    pub const ALL: [Self; 6] = [
        Self::Oscillatory,
        Self::ProductPeak,
        Self::CornerPeak,
        Self::GaussianPeak,
        Self::C0Continuous,
        Self::Discontinuous,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "oscillatory" => Self::Oscillatory,
            "product-peak" | "productpeak" => Self::ProductPeak,
            "corner-peak" | "cornerpeak" => Self::CornerPeak,
            "gaussian-peak" | "gaussianpeak" | "gaussian" => Self::GaussianPeak,
            "c0-continuous" | "c0continuous" | "continuous" => Self::C0Continuous,
            "discontinuous" => Self::Discontinuous,
            _ => return None,
        })
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Oscillatory => "oscillatory",
            Self::ProductPeak => "product-peak",
            Self::CornerPeak => "corner-peak",
            Self::GaussianPeak => "gaussian-peak",
            Self::C0Continuous => "c0-continuous",
            Self::Discontinuous => "discontinuous",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientDecay {
    None,
    Quadratic,
    Quartic,
    Exponential,
    SquaredExponential,
}

impl CoefficientDecay {
    pub const ALL: [Self; 5] = [
        Self::None,
        Self::Quadratic,
        Self::Quartic,
        Self::Exponential,
        Self::SquaredExponential,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "none" | "no-decay" => Self::None,
            "quadratic" | "quad" => Self::Quadratic,
            "quartic" | "quart" => Self::Quartic,
            "exponential" | "exp" => Self::Exponential,
            "squared-exponential" | "sqexp" => Self::SquaredExponential,
            _ => return None,
        })
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Quadratic => "quadratic",
            Self::Quartic => "quartic",
            Self::Exponential => "exponential",
            Self::SquaredExponential => "squared-exponential",
        }
    }

    /// Unnormalized coefficient of the zero-based index `i` in dimension `n`.
    fn raw(self, i: usize, n: usize) -> f64 {
        let (i, n) = (i as f64, n as f64);
        match self {
            Self::None => (i + 0.5) / n,
            Self::Quadratic => 1.0 / ((i + 1.0) * (i + 1.0)),
            Self::Quartic => 1.0 / libm::pow(i + 1.0, 4.0),
            Self::Exponential => libm::exp(libm::log(C_MIN) * (i + 1.0) / n),
            Self::SquaredExponential => libm::pow(10.0, libm::log10(C_MIN) * (i + 1.0) * (i + 1.0) / (n * n)),
        }
    }
}

/// One member of a Genz family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenzSpec {
    pub n: usize,
    /// Sum of the coefficients.
    pub c: f64,
    /// Shift shared by every coordinate.
    pub w: f64,
    pub decay: CoefficientDecay,
    pub family: GenzFamily,
}

impl Default for GenzSpec {
    fn default() -> Self {
        Self {
            n: 1,
            c: 1.0,
            w: 0.5,
            decay: CoefficientDecay::SquaredExponential,
            family: GenzFamily::Oscillatory,
        }
    }
}

impl GenzSpec {
    /// Reads `n`, `C`, `W`, `decay` (alias `T`) and `family` (alias `N`).
    pub fn from_config(config: &Config) -> ModelResult<Self> {
        let d = Self::default();
        let decay_name = match config.get("decay") {
            Some(_) => config.str_or("decay", "")?,
            None => config.str_or("T", d.decay.as_str())?,
        };
        let family_name = match config.get("family") {
            Some(_) => config.str_or("family", "")?,
            None => config.str_or("N", d.family.as_str())?,
        };
        let spec = Self {
            n: config.usize_or("n", d.n)?,
            c: config.f64_or("C", d.c)?,
            w: config.f64_or("W", d.w)?,
            decay: CoefficientDecay::parse(decay_name)
                .ok_or_else(|| ErrorPayload::invalid_input(format!("unknown decay '{decay_name}'")))?,
            family: GenzFamily::parse(family_name)
                .ok_or_else(|| ErrorPayload::invalid_input(format!("unknown family '{family_name}'")))?,
        };
        if spec.n == 0 {
            return Err(ErrorPayload::invalid_input("Genz dimension n must be at least 1"));
        }
        if !(spec.c > 0.0) || !spec.w.is_finite() {
            return Err(ErrorPayload::invalid_input("Genz C must be positive and W finite"));
        }
        Ok(spec)
    }

    /// `cᵢ = C·ĉᵢ / Σĉⱼ`.
    pub fn coefficients(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.n).map(|i| self.decay.raw(i, self.n)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|r| self.c * r / total).collect()
    }

    /// Value at `theta`, which must lie in the unit cube.
    pub fn evaluate(&self, theta: &[f64]) -> ModelResult<f64> {
        if theta.len() != self.n {
            return Err(ErrorPayload::invalid_input(format!("expected {} coordinates", self.n)));
        }
        if theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(ErrorPayload::invalid_input("Genz input must lie in the unit cube"));
        }
        Ok(self.evaluate_unchecked(theta, &self.coefficients()))
    }

    /// The integrand with coefficients computed once; no domain check.
    pub fn integrand(&self) -> impl Fn(&[f64]) -> f64 + '_ {
        let c = self.coefficients();
        move |theta| self.evaluate_unchecked(theta, &c)
    }

    fn evaluate_unchecked(&self, theta: &[f64], c: &[f64]) -> f64 {
        let w = self.w;
        let dot = || c.iter().zip(theta).map(|(c, t)| c * t).sum::<f64>();
        match self.family {
            GenzFamily::Oscillatory => libm::cos(2.0 * PI * w + dot()),
            GenzFamily::ProductPeak => c
                .iter()
                .zip(theta)
                .map(|(c, t)| 1.0 / (1.0 / (c * c) + (t - w) * (t - w)))
                .product(),
            GenzFamily::CornerPeak => libm::pow(1.0 + dot(), -(self.n as f64 + 1.0)),
            GenzFamily::GaussianPeak => {
                libm::exp(-c.iter().zip(theta).map(|(c, t)| c * c * (t - w) * (t - w)).sum::<f64>())
            }
            GenzFamily::C0Continuous => libm::exp(-c.iter().zip(theta).map(|(c, t)| c * libm::fabs(t - w)).sum::<f64>()),
            GenzFamily::Discontinuous => {
                if theta[0] > w || (self.n > 1 && theta[1] > w) {
                    0.0
                } else {
                    libm::exp(dot())
                }
            }
        }
    }

    /// `∫_{[0,1]ⁿ} f(θ) dθ`.
    ///
    /// All families except corner-peak factor into one-dimensional integrals
    /// with elementary antiderivatives. Corner-peak uses
    /// `(1+s)^{-(n+1)} = (1/n!)∫₀^∞ tⁿ e^{-t(1+s)} dt`, which turns the cube
    /// integral into the one-dimensional
    /// `(1/n!)∫₀^∞ tⁿ e^{-t} Πᵢ (1 − e^{-cᵢt})/(cᵢt) dt`; this stays accurate
    /// for the tiny coefficients of the exponential decays where the
    /// inclusion–exclusion closed form cancels catastrophically.
    pub fn reference_integral(&self) -> f64 {
        let c = self.coefficients();
        let w = self.w;
        match self.family {
            GenzFamily::Oscillatory => {
                let phase = 2.0 * PI * w + c.iter().sum::<f64>() / 2.0;
                libm::cos(phase) * c.iter().map(|&c| sinc(c / 2.0)).product::<f64>()
            }
            GenzFamily::ProductPeak => c
                .iter()
                .map(|&c| c * (libm::atan(c * (1.0 - w)) + libm::atan(c * w)))
                .product(),
            GenzFamily::CornerPeak => corner_peak_integral(&c),
            GenzFamily::GaussianPeak => c
                .iter()
                .map(|&c| {
                    let span = libm::erf(c * (1.0 - w)) + libm::erf(c * w);
                    if c == 0.0 {
                        1.0
                    } else {
                        libm::sqrt(PI) / (2.0 * c) * span
                    }
                })
                .product(),
            GenzFamily::C0Continuous => c.iter().map(|&c| abs_exp_integral(c, w)).product(),
            GenzFamily::Discontinuous => {
                let cut = w.clamp(0.0, 1.0);
                c.iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        let upper = if i < 2 { cut } else { 1.0 };
                        exp_integral(c, upper)
                    })
                    .product()
            }
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        libm::sin(x) / x
    }
}

/// `∫₀^u e^{cθ} dθ`.
fn exp_integral(c: f64, u: f64) -> f64 {
    if c == 0.0 {
        u
    } else {
        libm::expm1(c * u) / c
    }
}

/// `(1 − e^{-z})/z`, with its limit 1 at zero.
fn one_minus_exp_over(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        -libm::expm1(-z) / z
    }
}

/// `∫₀¹ e^{-c|θ−w|} dθ`.
fn abs_exp_integral(c: f64, w: f64) -> f64 {
    if w >= 1.0 {
        libm::exp(-c * (w - 1.0)) * one_minus_exp_over(c)
    } else if w <= 0.0 {
        libm::exp(c * w) * one_minus_exp_over(c)
    } else {
        w * one_minus_exp_over(c * w) + (1.0 - w) * one_minus_exp_over(c * (1.0 - w))
    }
}

fn corner_peak_integral(c: &[f64]) -> f64 {
    let n = c.len();
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let integrand = |t: f64| {
        let base = libm::pow(t, n as f64) * libm::exp(-t);
        base * c.iter().map(|&c| one_minus_exp_over(c * t)).product::<f64>()
    };
    // tⁿe^{-t} is below 1e-25 of its peak beyond t = 100 for n ≤ 10.
    let upper = 100.0 + 10.0 * n as f64;
    quadrature::composite(integrand, 0.0, upper, 200, 20) / factorial
}

/// Serves the Genz families; the member is chosen by the request config.
#[derive(Clone, Copy, Debug, Default)]
pub struct GenzModel;

impl Model for GenzModel {
    fn name(&self) -> &str {
        "genz"
    }

    fn input_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![GenzSpec::from_config(config)?.n])
    }

    fn output_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        GenzSpec::from_config(config)?;
        Ok(vec![1])
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::EVALUATE
    }

    fn evaluate(&self, input: &ParameterList, config: &Config) -> ModelResult<ParameterList> {
        let spec = GenzSpec::from_config(config)?;
        Ok(ParameterList::scalar(spec.evaluate(&input[0])?))
    }
}
