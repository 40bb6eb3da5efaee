//! Nonlinear rigid-body quadrotor model, rotor mixing and fixed-step integration.
//!
//! State layout used by [`QuadState::to_array`] and [`derivatives`]:
//! `[x, y, z, roll, pitch, yaw, vx, vy, vz, roll_rate, pitch_rate, yaw_rate]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attitude guard shared by the integrator and the linearizing law.
pub const COS_PRODUCT_GUARD: f64 = 1e-3;

/// Physical constants of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadParams {
    /// Mass [kg].
    pub m: f64,
    pub ix: f64,
    pub iy: f64,
    pub iz: f64,
    /// Propeller inertia [kg m^2].
    pub jr: f64,
    /// Rotor torque coefficient [N m s^2].
    pub km: f64,
    /// Rotor thrust coefficient [N s^2].
    pub kf: f64,
    /// Arm length [m].
    pub l: f64,
    pub g: f64,
    pub cdx: f64,
    pub cdy: f64,
    pub cdz: f64,
    pub cax: f64,
    pub cay: f64,
    pub caz: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self::table()
    }
}

impl QuadParams {
    /// The reference airframe: 0.65 kg, 0.23 m arm, drag-free.
    pub fn table() -> Self {
        Self {
            m: 0.65,
            ix: 7.5e-3,
            iy: 7.5e-3,
            iz: 1.3e-2,
            jr: 6e-5,
            km: 7.5e-7,
            kf: 3.13e-5,
            l: 0.23,
            g: 9.81,
            cdx: 0.0,
            cdy: 0.0,
            cdz: 0.0,
            cax: 0.0,
            cay: 0.0,
            caz: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m", self.m),
            ("ix", self.ix),
            ("iy", self.iy),
            ("iz", self.iz),
            ("jr", self.jr),
            ("km", self.km),
            ("kf", self.kf),
            ("l", self.l),
            ("g", self.g),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let drag = [
            ("cdx", self.cdx),
            ("cdy", self.cdy),
            ("cdz", self.cdz),
            ("cax", self.cax),
            ("cay", self.cay),
            ("caz", self.caz),
        ];
        for (name, v) in drag {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Thrust that balances gravity at level attitude.
    pub fn hover_thrust(&self) -> f64 {
        self.m * self.g
    }
}

/// Rigid-body state plus the signed rotor-speed aggregate that drives gyroscopic terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub roll_rate: f64,
    pub pitch_rate: f64,
    pub yaw_rate: f64,
    /// `w1 - w2 + w3 - w4` [rad/s].
    pub omega_r: f64,
}

impl QuadState {
    pub fn to_array(&self) -> [f64; 12] {
        [
            self.x,
            self.y,
            self.z,
            self.roll,
            self.pitch,
            self.yaw,
            self.vx,
            self.vy,
            self.vz,
            self.roll_rate,
            self.pitch_rate,
            self.yaw_rate,
        ]
    }

    pub fn from_array(a: [f64; 12], omega_r: f64) -> Self {
        Self {
            x: a[0],
            y: a[1],
            z: a[2],
            roll: a[3],
            pitch: a[4],
            yaw: a[5],
            vx: a[6],
            vy: a[7],
            vz: a[8],
            roll_rate: a[9],
            pitch_rate: a[10],
            yaw_rate: a[11],
            omega_r,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.omega_r.is_finite()
    }

    pub fn cos_product(&self) -> f64 {
        self.roll.cos() * self.pitch.cos()
    }
}

/// Total thrust `u1` and the roll/pitch/yaw moments `u2..u4`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlMoments {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
}

impl ControlMoments {
    pub fn new(u1: f64, u2: f64, u3: f64, u4: f64) -> Self {
        Self { u1, u2, u3, u4 }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.u1, self.u2, self.u3, self.u4]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Clamp thrust to `[0, limits.thrust]` and moments symmetrically.
    pub fn saturate(&self, limits: &ActuatorLimits) -> Self {
        Self {
            u1: self.u1.clamp(0.0, limits.thrust),
            u2: self.u2.clamp(-limits.roll_moment, limits.roll_moment),
            u3: self.u3.clamp(-limits.pitch_moment, limits.pitch_moment),
            u4: self.u4.clamp(-limits.yaw_moment, limits.yaw_moment),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorLimits {
    pub thrust: f64,
    pub roll_moment: f64,
    pub pitch_moment: f64,
    pub yaw_moment: f64,
}

/// External force (inertial frame) and torque (body axes) acting on the airframe.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Disturbance {
    pub force: [f64; 3],
    pub torque: [f64; 3],
}

impl Disturbance {
    pub const NONE: Disturbance = Disturbance {
        force: [0.0; 3],
        torque: [0.0; 3],
    };
}

/// Squared rotor speeds recovered from the control moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorSpeeds {
    /// `w_i^2` for rotors 1..4, clamped at zero [rad^2/s^2].
    pub squared: [f64; 4],
    pub omega_r: f64,
}

/// Time derivative of the 12-dimensional state.
pub fn derivatives(
    state: &QuadState,
    u: &ControlMoments,
    params: &QuadParams,
    ext_force: [f64; 3],
    ext_torque: [f64; 3],
) -> Result<[f64; 12]> {
    if !state.is_finite()
        || !u.is_finite()
        || !ext_force.iter().chain(ext_torque.iter()).all(|v| v.is_finite())
    {
        return Err(Error::Domain("non-finite state, input or disturbance".into()));
    }
    let p = params;
    let (sa, ca) = state.roll.sin_cos();
    let (st, ct) = state.pitch.sin_cos();
    let (sp, cp) = state.yaw.sin_cos();
    let (da, dt, dp) = (state.roll_rate, state.pitch_rate, state.yaw_rate);
    let wr = state.omega_r;

    let ax = ((cp * st * ca + sp * sa) * u.u1 - p.cdx * state.vx * state.vx) / p.m;
    // The lateral row keeps the printed `s_psi s_alpha c_alpha` product.
    let ay = ((sp * sa * ca - cp * sa) * u.u1 - p.cdy * state.vy * state.vy) / p.m;
    let az = ((ca * ct) * u.u1 - p.cdz * state.vz * state.vz) / p.m - p.g;
    let aa = (u.u2 - p.cax * da - p.jr * wr * dt - (p.iz - p.iy) * dt * dp) / p.ix;
    let at = (u.u3 - p.cay * dt + p.jr * wr * da - (p.ix - p.iz) * da * dp) / p.iy;
    let ap = (u.u4 - p.caz * dp - (p.iy - p.ix) * da * dt) / p.iz;

    Ok([
        state.vx,
        state.vy,
        state.vz,
        da,
        dt,
        dp,
        ax + ext_force[0] / p.m,
        ay + ext_force[1] / p.m,
        az + ext_force[2] / p.m,
        aa + ext_torque[0] / p.ix,
        at + ext_torque[1] / p.iy,
        ap + ext_torque[2] / p.iz,
    ])
}

/// Invert the linear rotor map for the squared rotor speeds.
pub fn mixer_inverse(u: &ControlMoments, params: &QuadParams) -> Result<RotorSpeeds> {
    if !u.is_finite() {
        return Err(Error::Domain("non-finite control moments".into()));
    }
    let lkf = params.l * params.kf;
    if !(lkf.abs() > 0.0 && params.km.abs() > 0.0) {
        return Err(Error::Config("singular mixer: L, Kf and Km must be nonzero".into()));
    }
    let sum = u.u1 / lkf;
    let diff_24 = u.u2 / lkf;
    let diff_31 = u.u3 / lkf;
    let alternating = u.u4 / params.km;

    let odd = 0.5 * (sum + alternating);
    let even = 0.5 * (sum - alternating);
    let squared = [
        0.5 * (odd - diff_31),
        0.5 * (even + diff_24),
        0.5 * (odd + diff_31),
        0.5 * (even - diff_24),
    ]
    .map(|w2: f64| w2.max(0.0));
    let w = squared.map(f64::sqrt);
    Ok(RotorSpeeds {
        squared,
        omega_r: w[0] - w[1] + w[2] - w[3],
    })
}

/// Forward rotor map: squared speeds to control moments.
pub fn mixer_forward(squared: &[f64; 4], params: &QuadParams) -> ControlMoments {
    let lkf = params.l * params.kf;
    let [w1, w2, w3, w4] = *squared;
    ControlMoments {
        u1: lkf * (w1 + w2 + w3 + w4),
        u2: lkf * (w2 - w4),
        u3: lkf * (w3 - w1),
        u4: params.km * (w1 - w2 + w3 - w4),
    }
}

/// Advance one classical RK4 step with inputs held over the interval.
///
/// The rotor-speed aggregate is refreshed from `u` before integrating.
pub fn step(
    state: &QuadState,
    u: &ControlMoments,
    params: &QuadParams,
    disturbance: &Disturbance,
    dt: f64,
) -> Result<QuadState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    let omega_r = mixer_inverse(u, params)?.omega_r;
    let x0 = state.to_array();
    let f = |x: &[f64; 12]| {
        // An overflowing intermediate stage means the trajectory has blown up.
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged {
                time: f64::NAN,
                reason: "non-finite intermediate state".into(),
            });
        }
        derivatives(
            &QuadState::from_array(*x, omega_r),
            u,
            params,
            disturbance.force,
            disturbance.torque,
        )
    };
    let axpy = |x: &[f64; 12], k: &[f64; 12], h: f64| {
        let mut out = *x;
        out.iter_mut().zip(k).for_each(|(o, k)| *o += h * k);
        out
    };

    let k1 = f(&x0)?;
    let k2 = f(&axpy(&x0, &k1, 0.5 * dt))?;
    let k3 = f(&axpy(&x0, &k2, 0.5 * dt))?;
    let k4 = f(&axpy(&x0, &k3, dt))?;
    let mut x1 = x0;
    for i in 0..12 {
        x1[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    let next = QuadState::from_array(x1, omega_r);
    if !next.is_finite() {
        return Err(Error::Diverged {
            time: f64::NAN,
            reason: "non-finite state".into(),
        });
    }
    let cp = next.cos_product();
    if cp.abs() < COS_PRODUCT_GUARD {
        return Err(Error::Diverged {
            time: f64::NAN,
            reason: format!("attitude guard tripped, |cos(roll)cos(pitch)| = {:e}", cp.abs()),
        });
    }
    Ok(next)
}
