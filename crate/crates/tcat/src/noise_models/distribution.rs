//! Rotation-angle distributions and their Fourier moments.

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{bessel, quadrature};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative mismatch of a table's integral that is silently renormalized.
pub const RENORMALIZE_WITHIN: f64 = 1e-3;

/// Probability density of the rotation angle on `[-π, π)`.
#[derive(Clone, Debug, PartialEq)]
pub enum AngleDistribution<T> {
    /// Point mass at `eps` (a fixed, global rotation).
    Delta { eps: T },
    /// Flat density `1/(2π)`.
    Uniform,
    /// `e^{κ cos(φ − mean)} / (2π I₀(κ))`.
    VonMises { kappa: T, mean: T },
    /// `q·h(κ, 0) + (1 − q)·h(κ, Δφ)` with `h` the von Mises density.
    DoubleVonMises { q: T, kappa: T, delta_phi: T },
    /// Piecewise-linear periodic interpolation of sampled values.
    Tabulated(Tabulated<T>),
}

impl<T: Real> AngleDistribution<T> {
    pub fn von_mises(kappa: T, mean: T) -> Result<Self> {
        if !(kappa >= T::zero()) || !mean.is_finite() {
            return Err(Error::domain("von Mises parameters", format!("kappa={kappa}, mean={mean}")));
        }
        Ok(Self::VonMises { kappa, mean })
    }

    pub fn double_von_mises(q: T, kappa: T, delta_phi: T) -> Result<Self> {
        if !(q >= T::zero() && q <= T::one()) || !(kappa >= T::zero()) || !delta_phi.is_finite() {
            return Err(Error::domain(
                "double von Mises parameters",
                format!("q={q}, kappa={kappa}, delta_phi={delta_phi}"),
            ));
        }
        Ok(Self::DoubleVonMises { q, kappa, delta_phi })
    }

    /// Density at `phi`; `None` for the point mass.
    pub fn density(&self, phi: T) -> Option<T> {
        let two_pi = T::lit(2.0) * T::PI();
        match self {
            Self::Delta { .. } => None,
            Self::Uniform => Some(T::one() / two_pi),
            Self::VonMises { kappa, mean } => Some(von_mises_density(*kappa, phi - *mean)),
            Self::DoubleVonMises { q, kappa, delta_phi } => Some(
                *q * von_mises_density(*kappa, phi)
                    + (T::one() - *q) * von_mises_density(*kappa, phi - *delta_phi),
            ),
            Self::Tabulated(t) => Some(t.density(phi)),
        }
    }

    /// `a_m = ∫ g(φ) e^{imφ} dφ`, closed form except for tables, which are
    /// integrated exactly segment by segment.
    pub fn fourier_moment(&self, m: u32) -> Complex<T> {
        let mf = T::usize(m as usize);
        match self {
            Self::Delta { eps } => Complex::from_polar(T::one(), mf * *eps),
            Self::Uniform => {
                if m == 0 {
                    Complex::new(T::one(), T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            }
            Self::VonMises { kappa, mean } => {
                Complex::from_polar(bessel::ratio(m, *kappa), mf * *mean)
            }
            Self::DoubleVonMises { q, kappa, delta_phi } => {
                let a = bessel::ratio(m, *kappa);
                Complex::new(*q * a, T::zero())
                    + Complex::from_polar((T::one() - *q) * a, mf * *delta_phi)
            }
            Self::Tabulated(t) => t.fourier_moment(m),
        }
    }

    /// `a₂ = ∫ g(φ) e^{2iφ} dφ`.
    pub fn second_fourier_moment(&self) -> Complex<T> {
        self.fourier_moment(2)
    }

    /// `R = 1 − |a₂|²`, clamped to `[0, 1]` against rounding.
    pub fn r_parameter(&self) -> T {
        let r = T::one() - self.second_fourier_moment().norm_sqr();
        r.max(T::zero()).min(T::one())
    }

    /// Integrates `K` functions of the angle against the density.
    ///
    /// Point masses are evaluated directly; everything else goes through the
    /// adaptive periodic trapezoid. Tables have kinks, so prefer
    /// [`Self::fourier_moment`] when the integrand is a trigonometric polynomial.
    pub fn expect<const K: usize>(
        &self,
        f: impl Fn(T) -> [Complex<T>; K],
        tol: T,
    ) -> Result<[Complex<T>; K]> {
        if let Self::Delta { eps } = self {
            return Ok(f(*eps));
        }
        quadrature::periodic(
            |phi| {
                let g = self.density(phi).unwrap_or_else(T::zero);
                let mut v = f(phi);
                for x in v.iter_mut() {
                    *x = *x * g;
                }
                v
            },
            tol,
        )
    }

    /// Total mass by quadrature (1 for every valid distribution).
    pub fn mass(&self) -> Result<T> {
        match self {
            Self::Delta { .. } => Ok(T::one()),
            Self::Tabulated(t) => Ok(t.fourier_moment(0).re),
            _ => Ok(self
                .expect(|_| [Complex::new(T::one(), T::zero())], T::lit(1e-13))?[0]
                .re),
        }
    }
}

fn von_mises_density<T: Real>(kappa: T, x: T) -> T {
    // e^{κ(cos x − 1)} / (2π e^{−κ} I₀(κ)) stays finite for large κ.
    (kappa * (x.cos() - T::one())).exp() / (T::lit(2.0) * T::PI() * bessel::i0_scaled(kappa))
}

/// Sampled density, normalized at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated<T> {
    angles: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> Tabulated<T> {
    /// Builds a table from strictly increasing angles spanning less than 2π.
    ///
    /// Integrals within [`RENORMALIZE_WITHIN`] of 1 are rescaled to 1; anything
    /// further off, or any negative value, is rejected.
    pub fn new(angles: Vec<T>, values: Vec<T>) -> Result<Self> {
        if angles.len() != values.len() || angles.len() < 2 {
            return Err(Error::Validation(format!(
                "tabulated density needs ≥ 2 (angle, value) pairs, got {} angles and {} values",
                angles.len(),
                values.len()
            )));
        }
        if angles.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Validation("tabulated density has non-finite entries".into()));
        }
        if let Some(i) = values.iter().position(|v| *v < T::zero()) {
            return Err(Error::Validation(format!(
                "tabulated density is negative at angle {} ({})",
                angles[i], values[i]
            )));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("tabulated angles must be strictly increasing".into()));
        }
        let two_pi = T::lit(2.0) * T::PI();
        if angles[angles.len() - 1] - angles[0] >= two_pi {
            return Err(Error::Validation("tabulated angles must span less than 2π".into()));
        }
        let mut t = Self { angles, values };
        let mass = t.fourier_moment(0).re;
        if (mass - T::one()).abs() >= T::lit(RENORMALIZE_WITHIN) {
            return Err(Error::Validation(format!(
                "tabulated density integrates to {mass}, not 1"
            )));
        }
        for v in t.values.iter_mut() {
            *v /= mass;
        }
        Ok(t)
    }

    /// Reads a two-column `angle_radians,density` CSV; a header row is optional.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        let mut angles = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
            if rec.len() != 2 {
                return Err(Error::Validation(format!(
                    "{}: line {} has {} columns, expected 2",
                    path.display(),
                    i + 1,
                    rec.len()
                )));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(a), Ok(v)) => {
                    angles.push(T::lit(a));
                    values.push(T::lit(v));
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::Validation(format!(
                        "{}: line {} is not numeric",
                        path.display(),
                        i + 1
                    )))
                }
            }
        }
        Self::new(angles, values)
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Linear interpolation, periodic across the seam.
    pub fn density(&self, phi: T) -> T {
        let two_pi = T::lit(2.0) * T::PI();
        let a0 = self.angles[0];
        // shift into [a0, a0 + 2π)
        let mut x = phi - a0;
        x = x - two_pi * (x / two_pi).floor();
        let x = x + a0;
        let n = self.angles.len();
        let i = self.angles.partition_point(|a| *a <= x);
        let (xa, ya, xb, yb) = if i == n {
            (self.angles[n - 1], self.values[n - 1], a0 + two_pi, self.values[0])
        } else {
            // i ≥ 1 because x ≥ a0
            (self.angles[i - 1], self.values[i - 1], self.angles[i], self.values[i])
        };
        ya + (yb - ya) * (x - xa) / (xb - xa)
    }

    /// Exact `∫ g e^{imφ}` of the interpolant.
    pub fn fourier_moment(&self, m: u32) -> Complex<T> {
        let two_pi = T::lit(2.0) * T::PI();
        let n = self.angles.len();
        let mut sum = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            let (a, ga) = (self.angles[i], self.values[i]);
            let (b, gb) = if i + 1 < n {
                (self.angles[i + 1], self.values[i + 1])
            } else {
                (self.angles[0] + two_pi, self.values[0])
            };
            sum += segment_moment(m, a, b, ga, gb);
        }
        sum
    }

    /// Same density shifted by `c` (for mean-invariance checks).
    pub fn shifted(&self, c: T) -> Self {
        let two_pi = T::lit(2.0) * T::PI();
        let mut pairs: Vec<(T, T)> = self
            .angles
            .iter()
            .zip(&self.values)
            .map(|(a, v)| {
                let mut x = *a + c + T::PI();
                x = x - two_pi * (x / two_pi).floor();
                (x - T::PI(), *v)
            })
            .collect();
        pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite angles"));
        Self {
            angles: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        }
    }
}

/// `∫_a^b ℓ(φ) e^{imφ} dφ` for the line ℓ through `(a, ga)` and `(b, gb)`.
fn segment_moment<T: Real>(m: u32, a: T, b: T, ga: T, gb: T) -> Complex<T> {
    let h = b - a;
    if m == 0 {
        return Complex::new(h * (ga + gb) / T::lit(2.0), T::zero());
    }
    let mf = T::usize(m as usize);
    let ea = Complex::from_polar(T::one(), mf * a);
    let eb = Complex::from_polar(T::one(), mf * b);
    let im = Complex::new(T::zero(), mf);
    let slope = (gb - ga) / h;
    // ∫(φ−a)e^{imφ} = h e^{imb}/(im) + (e^{imb} − e^{ima})/m²
    (eb - ea) / im * ga + (eb * h / im + (eb - ea) / (mf * mf)) * slope
}

/// Serializable distribution description used by configs and the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    Delta {
        #[serde(default)]
        eps: f64,
    },
    Uniform,
    VonMises {
        kappa: f64,
        #[serde(default)]
        mean: f64,
    },
    DoubleVonMises {
        q: f64,
        kappa: f64,
        delta_phi: f64,
    },
    Tabulated {
        path: std::path::PathBuf,
    },
}

impl DistributionConfig {
    /// Builds the distribution; relative table paths resolve against `base`.
    pub fn build<T: Real>(&self, base: Option<&Path>) -> Result<AngleDistribution<T>> {
        match self {
            Self::Delta { eps } => Ok(AngleDistribution::Delta { eps: T::lit(*eps) }),
            Self::Uniform => Ok(AngleDistribution::Uniform),
            Self::VonMises { kappa, mean } => {
                AngleDistribution::von_mises(T::lit(*kappa), T::lit(*mean))
            }
            Self::DoubleVonMises { q, kappa, delta_phi } => {
                AngleDistribution::double_von_mises(T::lit(*q), T::lit(*kappa), T::lit(*delta_phi))
            }
            Self::Tabulated { path } => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                Ok(AngleDistribution::Tabulated(Tabulated::from_csv(&full)?))
            }
        }
    }
}
