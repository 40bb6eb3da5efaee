//! Randomized invariants checked against independent hand transcriptions.

use fqlsni::disturbances::{one_minus_cos, Axis, OneMinusCosConfig};
use fqlsni::fb_lin::{linearize, VirtualInput};
use fqlsni::fql::{reward, update, FqlHyperParams, RuleQTable};
use fqlsni::fuzzy::{defuzzify, RuleBase};
use fqlsni::harness::{rmse, steady_offset};
use fqlsni::plant::{derivatives, mixer_forward, mixer_inverse, ControlMoments, QuadParams, QuadState};
use proptest::prelude::*;

/// The six acceleration rows written out directly from the model equations.
fn accelerations_oracle(s: &QuadState, u: &ControlMoments, p: &QuadParams) -> [f64; 6] {
    let (ca, sa) = (s.roll.cos(), s.roll.sin());
    let (ct, st) = (s.pitch.cos(), s.pitch.sin());
    let (cps, sps) = (s.yaw.cos(), s.yaw.sin());
    let (ad, td, pd, wr) = (s.roll_rate, s.pitch_rate, s.yaw_rate, s.omega_r);
    [
        ((cps * st * ca + sps * sa) * u.u1 - p.cdx * s.vx.powi(2)) / p.m,
        ((sps * sa * ca - cps * sa) * u.u1 - p.cdy * s.vy.powi(2)) / p.m,
        ((ca * ct) * u.u1 - p.cdz * s.vz.powi(2)) / p.m - p.g,
        (u.u2 - p.cax * ad - p.jr * wr * td - (p.iz - p.iy) * td * pd) / p.ix,
        (u.u3 - p.cay * td + p.jr * wr * ad - (p.ix - p.iz) * ad * pd) / p.iy,
        (u.u4 - p.caz * pd - (p.iy - p.ix) * ad * td) / p.iz,
    ]
}

fn state_strategy() -> impl Strategy<Value = QuadState> {
    (
        prop::array::uniform3(-10.0..10.0f64),
        (-1.4..1.4f64, -1.4..1.4f64, -3.1..3.1f64),
        prop::array::uniform3(-5.0..5.0f64),
        prop::array::uniform3(-5.0..5.0f64),
        -800.0..800.0f64,
    )
        .prop_map(|(pos, (roll, pitch, yaw), vel, rates, omega_r)| QuadState {
            x: pos[0],
            y: pos[1],
            z: pos[2],
            roll,
            pitch,
            yaw,
            vx: vel[0],
            vy: vel[1],
            vz: vel[2],
            roll_rate: rates[0],
            pitch_rate: rates[1],
            yaw_rate: rates[2],
            omega_r,
        })
}

fn drag_params() -> impl Strategy<Value = QuadParams> {
    prop::array::uniform6(0.0..0.1f64).prop_map(|c| QuadParams {
        cdx: c[0],
        cdy: c[1],
        cdz: c[2],
        cax: c[3],
        cay: c[4],
        caz: c[5],
        ..QuadParams::table()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn plant_matches_equation_transcription(
        s in state_strategy(),
        u in prop::array::uniform4(-10.0..10.0f64),
        p in drag_params(),
    ) {
        let u = ControlMoments::new(u[0], u[1], u[2], u[3]);
        let d = derivatives(&s, &u, &p, [0.0; 3], [0.0; 3]).unwrap();
        let o = accelerations_oracle(&s, &u, &p);
        for i in 0..6 {
            prop_assert!((d[6 + i] - o[i]).abs() <= 1e-12 * (1.0 + o[i].abs()), "row {i}: {} vs {}", d[6 + i], o[i]);
        }
        prop_assert_eq!(&d[..6], &[s.vx, s.vy, s.vz, s.roll_rate, s.pitch_rate, s.yaw_rate]);
    }

    #[test]
    fn linearization_cancels_against_transcription(
        s in state_strategy(),
        v in prop::array::uniform4(-20.0..20.0f64),
    ) {
        let p = QuadParams::table();
        let u = linearize(&VirtualInput::new(v[0], v[1], v[2], v[3]), &s, &p).unwrap();
        let a = accelerations_oracle(&s, &u, &p);
        let got = [a[2], a[3], a[4], a[5]];
        for i in 0..4 {
            prop_assert!((got[i] - v[i]).abs() < 1e-9, "channel {i}: {} vs {}", got[i], v[i]);
        }
    }

    #[test]
    fn mixer_round_trip(w2 in prop::array::uniform4(0.0..1e6f64)) {
        let p = QuadParams::table();
        let u = mixer_forward(&w2, &p);
        let back = mixer_inverse(&u, &p).unwrap();
        for i in 0..4 {
            prop_assert!((back.squared[i] - w2[i]).abs() <= 1e-9 * (1.0 + w2[i]));
        }
        let w = w2.map(f64::sqrt);
        prop_assert!((back.omega_r - (w[0] - w[1] + w[2] - w[3])).abs() < 1e-6);
    }

    #[test]
    fn defuzzify_is_weighted_mean_in_hull(
        pairs in prop::collection::vec((0.0..1.0f64, -50.0..50.0f64), 1..12),
    ) {
        let w: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let phi: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(w.iter().sum::<f64>() > 1e-9);
        let d = defuzzify(&w, &phi).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..w.len() {
            num += w[k] * phi[k];
            den += w[k];
        }
        prop_assert!((d - num / den).abs() < 1e-12 * (1.0 + d.abs()));
        let lo = phi.iter().zip(&w).filter(|p| *p.1 > 0.0).map(|p| *p.0).fold(f64::INFINITY, f64::min);
        let hi = phi.iter().zip(&w).filter(|p| *p.1 > 0.0).map(|p| *p.0).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(d >= lo - 1e-12 && d <= hi + 1e-12);
    }

    #[test]
    fn firing_strengths_are_valid(zeta in -100.0..100.0f64) {
        let rb = RuleBase::default();
        let w = rb.fire(zeta);
        prop_assert_eq!(w.len(), 5);
        prop_assert!(w.iter().all(|x| *x >= 0.0 && *x <= 1.0));
        prop_assert!(w.iter().sum::<f64>() > 0.0);
        prop_assert_eq!(w, rb.fire(zeta.clamp(-2.0, 2.0)));
    }

    #[test]
    fn reward_sign_and_range(a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let r = reward(b, a);
        prop_assert!(r > -1.0 && r < 1.0);
        let (ca, cb) = (a.clamp(-2.0, 2.0).abs(), b.clamp(-2.0, 2.0).abs());
        prop_assert_eq!(r > 0.0, ca > cb);
        prop_assert_eq!(r < 0.0, ca < cb);
    }

    #[test]
    fn rmse_and_offset_match_brute_force(e in prop::collection::vec(-3.0..3.0f64, 501..1200)) {
        let mut sq = 0.0;
        for x in &e {
            sq += x * x;
        }
        prop_assert!((rmse(&e) - (sq / e.len() as f64).sqrt()).abs() < 1e-12);
        let mut m = 0.0f64;
        for j in (e.len() - 500)..e.len() {
            if e[j].abs() > m {
                m = e[j].abs();
            }
        }
        prop_assert_eq!(steady_offset(&e).unwrap(), m);
    }

    #[test]
    fn q_update_matches_transcription(
        rows in prop::collection::vec(prop::array::uniform3(-2.0..2.0f64), 5),
        w in prop::array::uniform5(0.0..1.0f64),
        wn in prop::array::uniform5(0.0..1.0f64),
        chosen in prop::array::uniform5(0usize..3),
        r in -1.0..1.0f64,
        eta in 0.0..1.0f64,
        sigma in 0.0..0.99f64,
    ) {
        prop_assume!(w.iter().sum::<f64>() > 1e-6 && wn.iter().sum::<f64>() > 1e-6);
        let hp = FqlHyperParams { eta, sigma, ..FqlHyperParams::default() };
        let mut q = RuleQTable::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap();
        let before: Vec<[f64; 3]> = rows.clone();
        update(&mut q, &w, &wn, &chosen, r, &hp).unwrap();

        let sw: f64 = w.iter().sum();
        let swn: f64 = wn.iter().sum();
        let q_sa = (0..5).map(|i| w[i] * before[i][chosen[i]]).sum::<f64>() / sw;
        let v_next = (0..5).map(|i| wn[i] * before[i].iter().cloned().fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / swn;
        let dq = r + sigma * v_next - q_sa;
        for i in 0..5 {
            for j in 0..3 {
                let expect = if j == chosen[i] && w[i] > 0.0 {
                    before[i][j] + eta * dq * w[i] / sw
                } else {
                    before[i][j]
                };
                if j == chosen[i] {
                    prop_assert!((q.get(i, j) - expect).abs() < 1e-12);
                } else {
                    prop_assert_eq!(q.get(i, j), before[i][j]);
                }
            }
        }
    }

    #[test]
    fn one_minus_cos_integrals(amp in 0.1..10.0f64, dur in 0.2..3.0f64, start in 0.0..5.0f64) {
        let cfg = OneMinusCosConfig { amplitude: amp, duration: dur, start, axis: Axis::Z };
        // midpoint rule over the support [start, start + 2 dur]
        let n = 20_000;
        let h = 2.0 * dur / n as f64;
        let (mut i1, mut i2) = (0.0, 0.0);
        for k in 0..n {
            let v = one_minus_cos(start + (k as f64 + 0.5) * h, &cfg);
            i1 += v * h;
            i2 += v * v * h;
        }
        prop_assert!((i1 - amp * dur).abs() < 1e-6 * amp * dur);
        prop_assert!((i2 - 0.75 * amp * amp * dur).abs() < 1e-6 * amp * amp * dur);
        prop_assert!((one_minus_cos(start + dur, &cfg) - amp).abs() < 1e-12 * amp);
        prop_assert_eq!(one_minus_cos(start - 1e-9, &cfg), 0.0);
    }
}
