//! Polarized steering vectors for a linear array of co-located tripoles.
//!
//! Tripole locations lie on the y-axis at `positions[m]` wavelengths. A plane
//! wave arrives from `(theta, phi)` with polarization `(gamma, eta)`; the
//! array output is `s · w^H` where `s` interleaves the x/y/z dipole
//! contributions of every location.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on angular range checks so that degree conversions landing a
/// few ulps outside a closed bound are accepted.
const ANGLE_SLACK: f64 = 1e-12;

fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<f64> {
    if !value.is_finite() || value < min - ANGLE_SLACK || value > max + ANGLE_SLACK {
        return Err(Error::OutOfRange {
            name,
            value,
            min,
            max,
        });
    }
    Ok(value.clamp(min, max))
}

/// Direction of arrival, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// `theta` in `[0, π/2]`, `phi` in `[−π/2, π/2]`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        Ok(Self {
            theta: check_range("theta", theta, 0.0, FRAC_PI_2)?,
            phi: check_range("phi", phi, -FRAC_PI_2, FRAC_PI_2)?,
        })
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        check_range("theta_deg", theta_deg, 0.0, 90.0)?;
        check_range("phi_deg", phi_deg, -90.0, 90.0)?;
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    /// Direction in the `phi = ±90°` plane given a signed elevation in
    /// degrees: non-negative values map to `phi = +90°`, negative values to
    /// `phi = −90°` with `theta = |signed|`.
    pub fn from_signed_degrees(signed_theta_deg: f64) -> Result<Self> {
        let phi = if signed_theta_deg < 0.0 { -90.0 } else { 90.0 };
        Self::from_degrees(signed_theta_deg.abs(), phi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Polarization state: auxiliary angle `gamma` and phase difference `eta`,
/// in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polarization {
    gamma: f64,
    eta: f64,
}

impl Polarization {
    /// `gamma` in `[0, π/2]`, `eta` in `[−π, π)`.
    pub fn new(gamma: f64, eta: f64) -> Result<Self> {
        let gamma = check_range("gamma", gamma, 0.0, FRAC_PI_2)?;
        if !eta.is_finite() || eta < -PI - ANGLE_SLACK || eta >= PI {
            return Err(Error::OutOfRange {
                name: "eta",
                value: eta,
                min: -PI,
                max: PI,
            });
        }
        Ok(Self {
            gamma,
            eta: eta.max(-PI),
        })
    }

    pub fn from_degrees(gamma_deg: f64, eta_deg: f64) -> Result<Self> {
        check_range("gamma_deg", gamma_deg, 0.0, 90.0)?;
        if !(-180.0..180.0).contains(&eta_deg) {
            return Err(Error::OutOfRange {
                name: "eta_deg",
                value: eta_deg,
                min: -180.0,
                max: 180.0,
            });
        }
        Self::new(gamma_deg.to_radians(), eta_deg.to_radians())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Uniform grid of `M` potential tripole locations starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGrid {
    spacing: f64,
    positions: Vec<f64>,
}

impl CandidateGrid {
    pub fn new(num_locations: usize, spacing: f64) -> Result<Self> {
        if num_locations == 0 {
            return Err(Error::InvalidParameter {
                name: "num_locations",
                reason: "must be positive".into(),
            });
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter {
                name: "spacing",
                reason: format!("must be a positive length, got {spacing}"),
            });
        }
        let positions = (0..num_locations).map(|m| m as f64 * spacing).collect();
        Ok(Self { spacing, positions })
    }

    /// `num_locations` points spread evenly over `[0, aperture]`.
    pub fn from_aperture(aperture: f64, num_locations: usize) -> Result<Self> {
        if num_locations < 2 {
            return Err(Error::InvalidParameter {
                name: "num_locations",
                reason: "an aperture needs at least two locations".into(),
            });
        }
        if !(aperture.is_finite() && aperture > 0.0) {
            return Err(Error::InvalidParameter {
                name: "aperture",
                reason: format!("must be a positive length, got {aperture}"),
            });
        }
        let mut grid = Self::new(num_locations, aperture / (num_locations - 1) as f64)?;
        // pin the last point to the aperture exactly
        grid.positions[num_locations - 1] = aperture;
        Ok(grid)
    }

    pub fn num_locations(&self) -> usize {
        self.positions.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn aperture(&self) -> f64 {
        self.positions[self.positions.len() - 1]
    }
}

/// One complex weight per dipole: `triples[m] = (w_x, w_y, w_z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    triples: Vec<[Complex64; 3]>,
}

impl WeightVector {
    pub fn new(triples: Vec<[Complex64; 3]>) -> Self {
        Self { triples }
    }

    pub fn zeros(num_locations: usize) -> Self {
        Self {
            triples: vec![[Complex64::new(0.0, 0.0); 3]; num_locations],
        }
    }

    /// Inverse of [`WeightVector::flatten`].
    pub fn from_flat(flat: &[Complex64]) -> Result<Self> {
        if !flat.len().is_multiple_of(3) {
            return Err(Error::DimensionMismatch {
                expected: 3 * (flat.len() / 3 + 1),
                actual: flat.len(),
            });
        }
        Ok(Self {
            triples: flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[[Complex64; 3]] {
        &self.triples
    }

    pub fn triples_mut(&mut self) -> &mut [[Complex64; 3]] {
        &mut self.triples
    }

    /// Interleaved layout `[w_x1, w_y1, w_z1, …, w_xM, w_yM, w_zM]`.
    pub fn flatten(&self) -> Vec<Complex64> {
        self.triples.iter().flatten().copied().collect()
    }

    /// Euclidean norm of each location's weight triple.
    pub fn group_norms(&self) -> Vec<f64> {
        self.triples
            .iter()
            .map(|t| t.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// Sum of the group norms (the mixed ℓ2,1 norm).
    pub fn l21_norm(&self) -> f64 {
        self.group_norms().iter().sum()
    }
}

/// Spatial steering vector `exp(−j·2π·x_m·sinθ·sinφ)` for arbitrary
/// positions `x_m` in wavelengths.
pub fn spatial_steering_at(dir: &Direction, positions: &[f64]) -> Vec<Complex64> {
    let k = 2.0 * PI * dir.theta.sin() * dir.phi.sin();
    positions
        .iter()
        .map(|&x| Complex64::from_polar(1.0, -k * x))
        .collect()
}

/// Spatial steering vector over a candidate grid.
pub fn spatial_steering(dir: &Direction, grid: &CandidateGrid) -> Vec<Complex64> {
    spatial_steering_at(dir, grid.positions())
}

/// Per-axis dipole responses `(s_px, s_py, s_pz)`.
///
/// The y component carries `− cosγ·cosφ`, as in the formulation this crate
/// implements; some references use the opposite sign for that term.
pub fn polarization_vector(dir: &Direction, pol: &Polarization) -> [Complex64; 3] {
    let (st, ct) = dir.theta.sin_cos();
    let (sp, cp) = dir.phi.sin_cos();
    let (sg, cg) = pol.gamma.sin_cos();
    let e = Complex64::from_polar(1.0, pol.eta);
    [
        e * (sg * ct * cp) - cg * sp,
        e * (sg * ct * sp) - cg * cp,
        e * (-sg * st),
    ]
}

/// Full steering vector at arbitrary positions, interleaved by location.
pub fn full_steering_at(dir: &Direction, pol: &Polarization, positions: &[f64]) -> Vec<Complex64> {
    let sp = polarization_vector(dir, pol);
    spatial_steering_at(dir, positions)
        .into_iter()
        .flat_map(|ss| sp.map(|p| p * ss))
        .collect()
}

/// Full steering vector over a candidate grid (length `3M`).
pub fn full_steering(dir: &Direction, pol: &Polarization, grid: &CandidateGrid) -> Vec<Complex64> {
    full_steering_at(dir, pol, grid.positions())
}

/// Array response `Σ_i s[i]·conj(w[i])`.
pub fn array_response(w: &WeightVector, s: &[Complex64]) -> Result<Complex64> {
    if s.len() != 3 * w.len() {
        return Err(Error::DimensionMismatch {
            expected: 3 * w.len(),
            actual: s.len(),
        });
    }
    Ok(w
        .triples
        .iter()
        .flatten()
        .zip(s)
        .map(|(w, s)| s * w.conj())
        .sum())
}
