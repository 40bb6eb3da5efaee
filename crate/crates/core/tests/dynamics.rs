//! Integrator accuracy, energy bookkeeping and long-run turbulence statistics.

use fqlsni::disturbances::{DrydenConfig, DrydenGust};
use fqlsni::plant::{step, ControlMoments, Disturbance, QuadParams, QuadState};

fn integrate(s0: QuadState, u: &ControlMoments, p: &QuadParams, dt: f64, t_end: f64) -> QuadState {
    let n = (t_end / dt).round() as usize;
    let mut s = s0;
    for _ in 0..n {
        s = step(&s, u, p, &Disturbance::NONE, dt).unwrap();
    }
    s
}

fn spinning_state() -> QuadState {
    QuadState {
        roll: 0.3,
        pitch: -0.2,
        yaw: 0.5,
        vx: 0.4,
        vy: -0.3,
        vz: 0.2,
        roll_rate: 1.2,
        pitch_rate: -0.8,
        yaw_rate: 2.0,
        ..Default::default()
    }
}

fn distance(a: &QuadState, b: &QuadState) -> f64 {
    let (a, b) = (a.to_array(), b.to_array());
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn rk4_is_fourth_order() {
    let p = QuadParams {
        cax: 0.01,
        cay: 0.01,
        caz: 0.01,
        ..QuadParams::table()
    };
    let u = ControlMoments::new(7.0, 0.01, -0.005, 0.002);
    let s0 = spinning_state();
    let dt = 0.04;
    let a = integrate(s0, &u, &p, dt, 1.0);
    let b = integrate(s0, &u, &p, dt / 2.0, 1.0);
    let c = integrate(s0, &u, &p, dt / 4.0, 1.0);
    let ratio = distance(&a, &b) / distance(&b, &c);
    assert!((13.0..19.0).contains(&ratio), "Richardson ratio {ratio}");
}

fn mechanical_energy(s: &QuadState, p: &QuadParams) -> f64 {
    0.5 * p.m * (s.vx * s.vx + s.vy * s.vy + s.vz * s.vz)
        + p.m * p.g * s.z
        + 0.5 * (p.ix * s.roll_rate.powi(2) + p.iy * s.pitch_rate.powi(2) + p.iz * s.yaw_rate.powi(2))
}

#[test]
fn energy_is_conserved_without_input() {
    let p = QuadParams::table();
    let u = ControlMoments::default();
    // slow enough that the attitude stays clear of the guard for 10 s
    let s0 = QuadState {
        roll_rate: 0.05,
        pitch_rate: -0.04,
        yaw_rate: 0.3,
        ..spinning_state()
    };
    let e0 = mechanical_energy(&s0, &p);
    let drift = |dt: f64| (mechanical_energy(&integrate(s0, &u, &p, dt, 10.0), &p) - e0).abs();
    let coarse = drift(0.01);
    let fine = drift(0.005);
    assert!(coarse / e0.abs().max(1.0) < 1e-7, "drift {coarse}");
    // either at roundoff level already or shrinking at fourth order
    assert!(coarse < 1e-10 || coarse / fine > 8.0, "{coarse} vs {fine}");
}

#[test]
fn dryden_long_run_statistics() {
    let cfg = DrydenConfig::default();
    let mut g = DrydenGust::new(&cfg, 0.01).unwrap();
    let n = 1_000_000;
    let mut sum = [0.0; 3];
    let mut sq = [0.0; 3];
    let mut peak = 0.0f64;
    for _ in 0..n {
        let w = g.step();
        let raw = g.last_unclipped();
        for i in 0..3 {
            sum[i] += raw[i];
            sq[i] += raw[i] * raw[i];
            peak = peak.max(w[i].abs());
        }
    }
    for i in 0..3 {
        let mean = sum[i] / n as f64;
        let std = (sq[i] / n as f64 - mean * mean).sqrt();
        let target = cfg.intensities[i];
        assert!((std - target).abs() < 0.1 * target, "axis {i}: std {std} vs {target}");
    }
    assert!(peak <= cfg.cap);
}

#[test]
fn dryden_is_seeded() {
    let cfg = DrydenConfig::default();
    let run = |cfg: &DrydenConfig| {
        let mut g = DrydenGust::new(cfg, 0.01).unwrap();
        (0..1000).map(|_| g.step()).collect::<Vec<_>>()
    };
    assert_eq!(run(&cfg), run(&cfg));
    assert_ne!(run(&cfg), run(&DrydenConfig { seed: 8, ..cfg }));
}
