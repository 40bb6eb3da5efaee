//! Dynamic-inversion feedback linearization of the attitude and altitude channels.
//!
//! With matched parameters and no drag, the moments returned by [`linearize`]
//! turn the plant into four decoupled double integrators
//! `z'' = v1, roll'' = v2, pitch'' = v3, yaw'' = v4`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::plant::{ControlMoments, QuadParams, QuadState, COS_PRODUCT_GUARD};

/// Commanded accelerations of the linearized channels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VirtualInput {
    /// Altitude acceleration [m/s^2].
    pub v1: f64,
    /// Roll acceleration [rad/s^2].
    pub v2: f64,
    /// Pitch acceleration [rad/s^2].
    pub v3: f64,
    /// Yaw acceleration [rad/s^2].
    pub v4: f64,
}

impl VirtualInput {
    pub fn new(v1: f64, v2: f64, v3: f64, v4: f64) -> Self {
        Self { v1, v2, v3, v4 }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.v1, self.v2, self.v3, self.v4]
    }
}

/// Inertia ratios used by the inversion, derived from the nominal parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlCoefficients {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl FlCoefficients {
    pub fn new(p: &QuadParams) -> Self {
        Self {
            k1: (p.iz - p.iy) / p.ix,
            k2: p.jr / p.ix,
            k3: (p.ix - p.iz) / p.iy,
            k4: p.jr / p.iy,
            k5: (p.iy - p.ix) / p.iz,
            h1: 1.0 / p.ix,
            h2: 1.0 / p.iy,
            h3: 1.0 / p.iz,
        }
    }
}

/// Feedback linearizer bound to a nominal parameter set.
///
/// Coefficients are computed once at construction; build a new linearizer
/// when the nominal parameters change.
#[derive(Debug, Clone, Copy)]
pub struct Linearizer {
    nominal: QuadParams,
    coeffs: FlCoefficients,
}

impl Linearizer {
    pub fn new(nominal: QuadParams) -> Self {
        Self {
            nominal,
            coeffs: FlCoefficients::new(&nominal),
        }
    }

    pub fn nominal(&self) -> &QuadParams {
        &self.nominal
    }

    pub fn coefficients(&self) -> &FlCoefficients {
        &self.coeffs
    }

    pub fn linearize(&self, v: &VirtualInput, state: &QuadState) -> Result<ControlMoments> {
        let cos_product = state.cos_product();
        if !(cos_product.abs() >= COS_PRODUCT_GUARD) {
            return Err(Error::Singularity { cos_product });
        }
        let c = &self.coeffs;
        let (da, dt, dp) = (state.roll_rate, state.pitch_rate, state.yaw_rate);
        let wr = state.omega_r;
        Ok(ControlMoments {
            u1: self.nominal.m / cos_product * (self.nominal.g + v.v1),
            u2: (c.k1 * dt * dp + c.k2 * wr * dt + v.v2) / c.h1,
            u3: (c.k3 * da * dp - c.k4 * wr * da + v.v3) / c.h2,
            u4: (c.k5 * da * dt + v.v4) / c.h3,
        })
    }
}

/// One-shot form of [`Linearizer::linearize`].
pub fn linearize(v: &VirtualInput, state: &QuadState, nominal: &QuadParams) -> Result<ControlMoments> {
    Linearizer::new(*nominal).linearize(v, state)
}

/// DC gain surrogate of the 4x4 double-integrator plant evaluated at `s = eps`.
pub fn linearized_plant_dc_gain(eps: f64) -> Result<DMatrix<f64>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("eps must be > 0, got {eps}")));
    }
    Ok(DMatrix::from_diagonal_element(4, 4, 1.0 / eps))
}
