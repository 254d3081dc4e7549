//! Single-qubit noise channels acting on every toric-code edge.
//!
//! Channels are represented in the doubled (Choi) basis `|a, ā⟩⟩`, index
//! `2a + ā`, where a Kraus map `ρ ↦ Σ K ρ K†` becomes `𝔼 = Σ K ⊗ K*`.

pub mod bessel;
pub mod distribution;
pub mod quadrature;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

pub use distribution::{AngleDistribution, DistributionConfig, Tabulated};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::small::{self, c, Mat2, Mat4};

/// Absolute tolerance of the periodic quadrature behind channel integrals.
pub const QUADRATURE_TOL: f64 = 1e-13;

/// Rotation axis in spherical coordinates with `y` as the polar axis:
/// `n = (sinθ sinφ, cosθ, sinθ cosφ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationAxis<T> {
    pub theta: T,
    pub phi: T,
}

impl<T: Real> RotationAxis<T> {
    /// Checks `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
    pub fn new(theta: T, phi: T) -> Result<Self> {
        let two_pi = T::lit(2.0) * T::PI();
        if !(theta >= T::zero() && theta <= T::PI()) {
            return Err(Error::domain("theta", format!("{theta} not in [0, π]")));
        }
        if !(phi >= T::zero() && phi < two_pi) {
            return Err(Error::domain("phi", format!("{phi} not in [0, 2π)")));
        }
        Ok(Self { theta, phi })
    }

    pub fn x() -> Self {
        Self { theta: T::FRAC_PI_2(), phi: T::FRAC_PI_2() }
    }

    pub fn y() -> Self {
        Self { theta: T::zero(), phi: T::zero() }
    }

    pub fn z() -> Self {
        Self { theta: T::FRAC_PI_2(), phi: T::zero() }
    }

    /// Unit vector `(n_x, n_y, n_z)`.
    pub fn unit(&self) -> [T; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * sp, ct, st * cp]
    }
}

/// Noise applied independently to every edge.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseChannelSpec<T> {
    /// `ρ ↦ ∫ g(φ) U ρ U† dφ` with `U = exp(−iφ n·σ)`.
    RandomRotation { axis: RotationAxis<T>, dist: AngleDistribution<T> },
    /// Decay `|1⟩ → |0⟩` with probability `gamma`.
    AmplitudeDamping { gamma: T },
}

impl<T: Real> NoiseChannelSpec<T> {
    pub fn amplitude_damping(gamma: T) -> Result<Self> {
        if !(gamma >= T::zero() && gamma <= T::one()) {
            return Err(Error::domain("gamma", format!("{gamma} not in [0, 1]")));
        }
        Ok(Self::AmplitudeDamping { gamma })
    }
}

/// `U(φ) = cos φ − i sin φ (n·σ)`.
pub fn rotation_unitary<T: Real>(n: [T; 3], phi: T) -> Mat2<T> {
    let (s, co) = phi.sin_cos();
    let a = small::n_dot_sigma(n);
    let mut u = small::identity2::<T>();
    for i in 0..2 {
        for j in 0..2 {
            u[i][j] = u[i][j] * co + a[i][j] * Complex::new(T::zero(), -s);
        }
    }
    u
}

/// `U ⊗ U*` for a fixed angle.
pub fn rotation_superoperator_at<T: Real>(n: [T; 3], phi: T) -> Mat4<T> {
    let u = rotation_unitary(n, phi);
    small::kron(&u, &small::conj2(&u))
}

/// Kraus operators `K₀ = diag(1, √(1−γ))`, `K₁ = √γ |0⟩⟨1|`.
pub fn amplitude_damping_kraus<T: Real>(gamma: T) -> [Mat2<T>; 2] {
    let z = c::<T>(0.0, 0.0);
    let one = c::<T>(1.0, 0.0);
    let k0 = [[one, z], [z, Complex::new((T::one() - gamma).sqrt(), T::zero())]];
    let k1 = [[z, Complex::new(gamma.sqrt(), T::zero())], [z, z]];
    [k0, k1]
}

/// Doubled-space superoperator `𝔼` of a channel.
///
/// Rotations are integrated against the density (periodic trapezoid for smooth
/// densities; tables via their exact trigonometric moments, since the
/// integrand is a degree-2 trigonometric polynomial); point masses are exact.
pub fn channel_superoperator<T: Real>(spec: &NoiseChannelSpec<T>) -> Result<Mat4<T>> {
    match spec {
        NoiseChannelSpec::AmplitudeDamping { gamma } => {
            let mut e = small::zeros4();
            for k in amplitude_damping_kraus(*gamma).iter() {
                e = small::add4(&e, &small::kron(k, &small::conj2(k)));
            }
            Ok(e)
        }
        NoiseChannelSpec::RandomRotation { axis, dist } => {
            let n = axis.unit();
            match dist {
                AngleDistribution::Delta { eps } => Ok(rotation_superoperator_at(n, *eps)),
                AngleDistribution::Tabulated(_) => Ok(superoperator_from_moment(
                    n,
                    dist.second_fourier_moment(),
                )),
                _ => {
                    let v = dist.expect(
                        |phi| small::flatten4(&rotation_superoperator_at(n, phi)),
                        T::lit(QUADRATURE_TOL),
                    )?;
                    Ok(small::unflatten4(&v))
                }
            }
        }
    }
}

/// `⟨cos²⟩·1 + ⟨sin²⟩·A⊗A* + i⟨sin cos⟩(1⊗A* − A⊗1)` with `A = n·σ`,
/// where the three averages are fixed by `a₂`.
pub fn superoperator_from_moment<T: Real>(n: [T; 3], a2: Complex<T>) -> Mat4<T> {
    let half = T::lit(0.5);
    let cos2 = (T::one() + a2.re) * half;
    let sin2 = (T::one() - a2.re) * half;
    let sincos = a2.im * half;
    let a = small::n_dot_sigma(n);
    let ac = small::conj2(&a);
    let id = small::identity2::<T>();
    let mut e = small::scale4(&small::identity4(), Complex::new(cos2, T::zero()));
    e = small::add4(&e, &small::scale4(&small::kron(&a, &ac), Complex::new(sin2, T::zero())));
    let cross = small::add4(
        &small::kron(&id, &ac),
        &small::scale4(&small::kron(&a, &id), c(-1.0, 0.0)),
    );
    small::add4(&e, &small::scale4(&cross, Complex::new(T::zero(), sincos)))
}

/// Result of comparing a rotation channel with stochastic `n·σ` noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StochasticCheck<T> {
    /// `p = ∫ g sin²φ dφ`.
    pub p: T,
    /// Entrywise max deviation of the two superoperators.
    pub max_deviation: T,
}

/// Compares the rotation channel with `ρ ↦ (1−p)ρ + p (n·σ)ρ(n·σ)`.
pub fn stochastic_reduction_check<T: Real>(
    dist: &AngleDistribution<T>,
    axis: &RotationAxis<T>,
) -> Result<StochasticCheck<T>> {
    let n = axis.unit();
    let p = match dist {
        AngleDistribution::Tabulated(_) => (T::one() - dist.second_fourier_moment().re) / T::lit(2.0),
        _ => {
            dist.expect(
                |phi| [Complex::new(phi.sin().powi(2), T::zero())],
                T::lit(QUADRATURE_TOL),
            )?[0]
                .re
        }
    };
    let a = small::n_dot_sigma(n);
    let stochastic = small::add4(
        &small::scale4(&small::identity4(), Complex::new(T::one() - p, T::zero())),
        &small::scale4(&small::kron(&a, &small::conj2(&a)), Complex::new(p, T::zero())),
    );
    let e = channel_superoperator(&NoiseChannelSpec::RandomRotation {
        axis: *axis,
        dist: dist.clone(),
    })?;
    Ok(StochasticCheck { p, max_deviation: small::max_abs_diff4(&e, &stochastic) })
}
