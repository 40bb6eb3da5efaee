//! Exogenous disturbances: Dryden-type colored gusts, discrete 1-cos pulses,
//! the wind-to-force coupling, and multiplicative parameter bias.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{QuadParams, QuadState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrydenConfig {
    /// Turbulence length scales `[L_u, L_v, L_w]` [m].
    pub length_scales: [f64; 3],
    /// Target standard deviations per axis before clipping [m/s].
    pub intensities: [f64; 3],
    /// Mean airspeed used to convert length scales to time constants [m/s].
    pub airspeed: f64,
    /// Per-axis hard clip [m/s].
    pub cap: f64,
    pub seed: u64,
}

impl Default for DrydenConfig {
    fn default() -> Self {
        Self {
            length_scales: [30.0, 30.0, 10.0],
            intensities: [1.5, 1.5, 1.0],
            airspeed: 5.0,
            cap: 5.0,
            seed: 7,
        }
    }
}

impl DrydenConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !self.length_scales.iter().all(|l| pos(*l)) {
            return Err(Error::Config("dryden length scales must be > 0".into()));
        }
        if !self.intensities.iter().all(|s| s.is_finite() && *s >= 0.0) {
            return Err(Error::Config("dryden intensities must be >= 0".into()));
        }
        if !pos(self.airspeed) || !pos(self.cap) {
            return Err(Error::Config("dryden airspeed and cap must be > 0".into()));
        }
        Ok(())
    }
}

/// Exactly discretized linear filter driven by unit white noise, scaled so
/// that its stationary output standard deviation equals `intensity`.
#[derive(Debug, Clone)]
struct ShapingFilter {
    phi: DMatrix<f64>,
    noise_chol: DMatrix<f64>,
    c: DVector<f64>,
    x: DVector<f64>,
}

impl ShapingFilter {
    fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, intensity: f64, dt: f64) -> Result<Self> {
        let n = a.nrows();
        // Van Loan: exp([[-A, B B'], [0, A']] dt) = [[., Phi^-1 Qd], [0, Phi']]
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&(-&a * dt));
        m.view_mut((0, n), (n, n)).copy_from(&(&b * b.transpose() * dt));
        m.view_mut((n, n), (n, n)).copy_from(&(a.transpose() * dt));
        let e = m.exp();
        let phi = e.view((n, n), (n, n)).transpose();
        let qd = &phi * e.view((0, n), (n, n));
        let qd = 0.5 * (&qd + qd.transpose());

        // stationary covariance: P = Phi P Phi' + Qd
        let mut p = qd.clone();
        for _ in 0..200_000 {
            let next = &phi * &p * phi.transpose() + &qd;
            let done = (&next - &p).amax() <= 1e-15 * next.amax();
            p = next;
            if done {
                break;
            }
        }
        let var = (c.transpose() * &p * &c)[(0, 0)];
        if !(var > 0.0) {
            return Err(Error::Config("shaping filter has zero output variance".into()));
        }
        let noise_chol = qd
            .cholesky()
            .ok_or_else(|| Error::Config("shaping filter noise covariance not positive definite".into()))?
            .l();
        Ok(Self {
            phi,
            noise_chol,
            c: c * (intensity / var.sqrt()),
            x: DVector::zeros(n),
        })
    }

    fn first_order(t: f64, intensity: f64, dt: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, -1.0 / t),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            intensity,
            dt,
        )
    }

    /// `(1 + sqrt(3) T s) / (1 + T s)^2`.
    fn second_order(t: f64, intensity: f64, dt: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0 / (t * t), -2.0 / t]),
            DVector::from_column_slice(&[0.0, 1.0]),
            DVector::from_column_slice(&[1.0 / (t * t), 3f64.sqrt() / t]),
            intensity,
            dt,
        )
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let n = self.x.len();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        self.x = &self.phi * &self.x + &self.noise_chol * z;
        self.c.dot(&self.x)
    }
}

/// Three-axis Dryden-type gust generator: first-order longitudinal, second-order
/// lateral and vertical shaping.
#[derive(Debug, Clone)]
pub struct DrydenGust {
    filters: Option<[ShapingFilter; 3]>,
    cap: f64,
    rng: ChaCha8Rng,
    last_raw: [f64; 3],
}

impl DrydenGust {
    pub fn new(cfg: &DrydenConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
        }
        let t = cfg.length_scales.map(|l| l / cfg.airspeed);
        let filters = if cfg.intensities.iter().all(|s| *s == 0.0) {
            None
        } else {
            let s = cfg.intensities.map(|s| s.max(f64::MIN_POSITIVE));
            Some([
                ShapingFilter::first_order(t[0], s[0], dt)?,
                ShapingFilter::second_order(t[1], s[1], dt)?,
                ShapingFilter::second_order(t[2], s[2], dt)?,
            ])
        };
        Ok(Self {
            filters,
            cap: cfg.cap,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            last_raw: [0.0; 3],
        })
    }

    /// Next wind sample, clipped to `+-cap` per axis [m/s].
    pub fn step(&mut self) -> [f64; 3] {
        match &mut self.filters {
            None => [0.0; 3],
            Some(f) => {
                let raw = [f[0].step(&mut self.rng), f[1].step(&mut self.rng), f[2].step(&mut self.rng)];
                self.last_raw = raw;
                raw.map(|v| v.clamp(-self.cap, self.cap))
            }
        }
    }

    /// The most recent sample before clipping.
    pub fn last_unclipped(&self) -> [f64; 3] {
        self.last_raw
    }
}

/// One-shot form matching the other free-function operations.
pub fn dryden_step(gust: &mut DrydenGust) -> [f64; 3] {
    gust.step()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneMinusCosConfig {
    /// Peak gust speed [m/s].
    pub amplitude: f64,
    /// Time to peak [s]; the pulse lasts twice this.
    pub duration: f64,
    pub start: f64,
    pub axis: Axis,
}

impl OneMinusCosConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::Config("1-cos amplitude must be >= 0".into()));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::Config("1-cos duration must be > 0".into()));
        }
        if !self.start.is_finite() {
            return Err(Error::Config("1-cos start must be finite".into()));
        }
        Ok(())
    }
}

/// Gust speed of a 1-cos pulse at time `t`; peaks at `start + duration`.
pub fn one_minus_cos(t: f64, cfg: &OneMinusCosConfig) -> f64 {
    let s = t - cfg.start;
    if s < 0.0 || s > 2.0 * cfg.duration {
        return 0.0;
    }
    0.5 * cfg.amplitude * (1.0 - (std::f64::consts::PI * s / cfg.duration).cos())
}

/// Unit body z-axis expressed in the inertial frame.
pub fn body_z_axis(state: &QuadState) -> [f64; 3] {
    let (sa, ca) = state.roll.sin_cos();
    let (st, ct) = state.pitch.sin_cos();
    let (sp, cp) = state.yaw.sin_cos();
    [cp * st * ca + sp * sa, sp * st * ca - cp * sa, ca * ct]
}

/// Force from quadratic drag `cd * w|w|` on the wind velocity, and a torque
/// `kappa * (wind x body_z)`.
pub fn wind_to_disturbance(wind: [f64; 3], cd: [f64; 3], body_z: [f64; 3], kappa: f64) -> ([f64; 3], [f64; 3]) {
    let force = [0, 1, 2].map(|i| cd[i] * wind[i] * wind[i].abs());
    let torque = [
        kappa * (wind[1] * body_z[2] - wind[2] * body_z[1]),
        kappa * (wind[2] * body_z[0] - wind[0] * body_z[2]),
        kappa * (wind[0] * body_z[1] - wind[1] * body_z[0]),
    ];
    (force, torque)
}

/// Multiplicative plant-side uncertainty on mass and inertias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamBias {
    pub m: f64,
    pub ix: f64,
    pub iy: f64,
    pub iz: f64,
}

impl Default for ParamBias {
    fn default() -> Self {
        Self {
            m: 1.15,
            ix: 1.15,
            iy: 1.15,
            iz: 1.15,
        }
    }
}

impl ParamBias {
    pub const NONE: ParamBias = ParamBias {
        m: 1.0,
        ix: 1.0,
        iy: 1.0,
        iz: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        if [self.m, self.ix, self.iy, self.iz].iter().all(|f| f.is_finite() && *f > 0.0) {
            Ok(())
        } else {
            Err(Error::Config(format!("bias factors must be > 0, got {self:?}")))
        }
    }
}

/// Plant-side copy of `params` with the bias factors applied.
pub fn apply_bias(params: &QuadParams, bias: &ParamBias) -> QuadParams {
    QuadParams {
        m: params.m * bias.m,
        ix: params.ix * bias.ix,
        iy: params.iy * bias.iy,
        iz: params.iz * bias.iz,
        ..*params
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_silent() {
        let cfg = DrydenConfig {
            intensities: [0.0; 3],
            ..Default::default()
        };
        let mut g = DrydenGust::new(&cfg, 0.01).unwrap();
        for _ in 0..1000 {
            assert_eq!(g.step(), [0.0; 3]);
        }
    }

    #[test]
    fn seeded_determinism() {
        let cfg = DrydenConfig::default();
        let mut a = DrydenGust::new(&cfg, 0.01).unwrap();
        let mut b = DrydenGust::new(&cfg, 0.01).unwrap();
        for _ in 0..500 {
            assert_eq!(a.step(), b.step());
        }
        let mut c = DrydenGust::new(&DrydenConfig { seed: 8, ..cfg }, 0.01).unwrap();
        assert_ne!(a.step(), c.step());
    }

    #[test]
    fn invalid_dryden_config() {
        let bad = DrydenConfig {
            airspeed: 0.0,
            ..Default::default()
        };
        assert!(DrydenGust::new(&bad, 0.01).is_err());
        assert!(DrydenGust::new(&DrydenConfig::default(), 0.0).is_err());
    }

    fn pulse() -> OneMinusCosConfig {
        OneMinusCosConfig {
            amplitude: 4.0,
            duration: 0.8,
            start: 2.0,
            axis: Axis::Y,
        }
    }

    #[test]
    fn one_minus_cos_shape() {
        let c = pulse();
        assert_eq!(one_minus_cos(1.9, &c), 0.0);
        assert_eq!(one_minus_cos(2.0 + 1.6 + 1e-9, &c), 0.0);
        assert_eq!(one_minus_cos(2.8, &c), 4.0);
        assert!((one_minus_cos(2.4, &c) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wind_coupling() {
        let p = [0.02, 0.03, 0.05];
        let up = [0.0, 0.0, 1.0];
        assert_eq!(wind_to_disturbance([0.0; 3], p, up, 1e-3), ([0.0; 3], [0.0; 3]));

        let (f1, _) = wind_to_disturbance([1.0, -2.0, 0.5], p, up, 0.0);
        let (f2, _) = wind_to_disturbance([2.0, -4.0, 1.0], p, up, 0.0);
        for i in 0..3 {
            assert!((f2[i] - 4.0 * f1[i]).abs() < 1e-15);
        }
        // hand formula
        assert!((f1[1] - 0.03 * -2.0 * 2.0).abs() < 1e-15);
        let (_, t) = wind_to_disturbance([1.0, -2.0, 0.5], p, up, 0.1);
        // w x z_hat = (w_y, -w_x, 0)
        assert!((t[0] + 0.2).abs() < 1e-15 && (t[1] + 0.1).abs() < 1e-15 && t[2] == 0.0);
    }

    #[test]
    fn body_axis_level_is_up() {
        assert_eq!(body_z_axis(&QuadState::default()), [0.0, 0.0, 1.0]);
        let s = QuadState {
            roll: 0.4,
            pitch: -0.3,
            yaw: 2.0,
            ..Default::default()
        };
        let b = body_z_axis(&s);
        assert!((b.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bias_application() {
        let p = QuadParams::table();
        assert_eq!(apply_bias(&p, &ParamBias::NONE), p);
        let b = apply_bias(&p, &ParamBias::default());
        assert!((b.m - 0.7475).abs() < 1e-12);
        assert!((b.ix - 8.625e-3).abs() < 1e-15);
        assert_eq!(b.jr, p.jr);
        assert_eq!(p.m, 0.65);
        assert!(ParamBias { m: 0.0, ..ParamBias::NONE }.validate().is_err());
    }
}
