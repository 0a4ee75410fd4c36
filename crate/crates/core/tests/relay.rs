mod common;

use common::*;
use dirtycap::channels::RelayStateChannel;
use dirtycap::optimizer::SearchBudget;
use dirtycap::prob::{Coord, JointPmf, Pmf};
use dirtycap::relay::{self, GaussianRelayParams, Term2Variant};
use dirtycap::singleuser;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = GaussianRelayParams> {
    (0.0f64..10.0, 0.0f64..10.0, 0.1f64..5.0, 0.1f64..5.0, 0.0f64..10.0, 0.0f64..10.0, -1.0f64..1.0).prop_map(
        |(p, p_r, n_r, n_d, p_sr, p_sd, rho)| GaussianRelayParams {
            p,
            p_r,
            n_r,
            n_d,
            p_sr,
            p_sd,
            rho,
        },
    )
}

fn cap(p: &GaussianRelayParams) -> f64 {
    relay::gaussian_rc_capacity(p).unwrap().0
}

const MONO_TOL: f64 = 1e-7;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn capacity_monotone(p in params(), bump in 0.01f64..3.0) {
        let base = cap(&p);
        let more_p = cap(&GaussianRelayParams { p: p.p + bump, ..p });
        let more_pr = cap(&GaussianRelayParams { p_r: p.p_r + bump, ..p });
        let more_nr = cap(&GaussianRelayParams { n_r: p.n_r + bump, ..p });
        let more_nd = cap(&GaussianRelayParams { n_d: p.n_d + bump, ..p });
        prop_assert!(more_p >= base - MONO_TOL);
        prop_assert!(more_pr >= base - MONO_TOL);
        prop_assert!(more_nr <= base + MONO_TOL);
        prop_assert!(more_nd <= base + MONO_TOL);
    }

    #[test]
    fn interference_does_not_matter(p in params(), q in params(), alpha in 0.0f64..=1.0) {
        let moved = GaussianRelayParams { p_sr: q.p_sr, p_sd: q.p_sd, rho: q.rho, ..p };
        prop_assert_eq!(cap(&p).to_bits(), cap(&moved).to_bits());
        if p.p_r > 0.0 {
            let a = relay::theorem8_rate(&p, alpha).unwrap().bits;
            let b = relay::theorem8_rate(&moved, alpha).unwrap().bits;
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
    }
}

#[test]
fn silent_relay_is_point_to_point() {
    let p = GaussianRelayParams {
        p: 3.0,
        p_r: 0.0,
        n_r: 0.5,
        n_d: 1.5,
        p_sr: 1.0,
        p_sd: 1.0,
        rho: 0.2,
    };
    let (bits, alpha) = relay::gaussian_rc_capacity(&p).unwrap();
    assert!((bits - relay::gaussian_c(3.0 / 2.0)).abs() < 1e-9);
    assert!((alpha - 1.0).abs() < 1e-6);
}

#[test]
fn generic_params_match_closed_form() {
    let p = GaussianRelayParams {
        p: 2.0,
        p_r: 1.0,
        n_r: 0.5,
        n_d: 1.0,
        p_sr: 3.0,
        p_sd: 4.0,
        rho: 0.6,
    };
    for k in 0..=100 {
        let a = k as f64 / 100.0;
        let r = relay::theorem8_rate(&p, a).unwrap();
        assert!((r.bits - relay::rc_integrand(&p, a)).abs() < 1e-9, "alpha {a}");
    }
}

fn stateless(row: impl Fn(usize, usize) -> Vec<f64>) -> RelayStateChannel {
    RelayStateChannel::from_fn(
        JointPmf::new(vec![Coord::new("S1", 1), Coord::new("S2", 1)], vec![1.0]).unwrap(),
        2,
        2,
        2,
        2,
        |x, xr, _, _| row(x, xr),
    )
    .unwrap()
}

/// `max over P(x,xr)` of `min{I(X,Xr;Y), I(X;Yr|Xr)}` on a simplex grid.
fn classical_df_oracle(ch: &RelayStateChannel, k: usize) -> f64 {
    let mut best = 0.0f64;
    for a in 0..=k {
        for b in 0..=k - a {
            for c in 0..=k - a - b {
                let d = k - a - b - c;
                let pin = [a, b, c, d].map(|v| v as f64 / k as f64);
                let mut table = Vec::with_capacity(16);
                for (i, &w) in pin.iter().enumerate() {
                    let row = ch.transition().row(i);
                    table.extend(row.iter().map(|t| w * t));
                }
                let j = JointPmf::new(
                    vec![Coord::new("X", 2), Coord::new("Xr", 2), Coord::new("Y", 2), Coord::new("Yr", 2)],
                    table,
                )
                .unwrap();
                let r = oracle_mi(&j, &["X", "Xr"], &["Y"], &[]).min(oracle_mi(&j, &["X"], &["Yr"], &["Xr"]));
                best = best.max(r);
            }
        }
    }
    best
}

fn budget() -> SearchBudget {
    SearchBudget {
        restarts: 8,
        refine_passes: 4,
        ..SearchBudget::default()
    }
}

#[test]
fn stateless_df_is_classical() {
    let mut r = rng(41);
    for _ in 0..3 {
        let rows: Vec<Vec<f64>> = (0..4).map(|_| random_pmf(&mut r, 4)).collect();
        let ch = stateless(|x, xr| rows[x * 2 + xr].clone());
        let got = relay::df_relay_rate(&ch, &budget(), None).unwrap().bits;
        let want = classical_df_oracle(&ch, 40);
        assert!((got - want).abs() < 5e-3, "df {got} oracle {want}");
        assert!(got >= want - 1e-3);
    }
}

#[test]
fn dead_direct_link_is_limited_by_relay_hop() {
    // Y = Xr, Yr = BSC(0.1)(X)
    let ch = stateless(|x, xr| {
        let mut row = vec![0.0; 4];
        row[xr * 2 + x] = 0.9;
        row[xr * 2 + (1 - x)] = 0.1;
        row
    });
    let got = relay::df_relay_rate(&ch, &budget(), None).unwrap().bits;
    assert!((got - (1.0 - h2(0.1))).abs() < 1e-4, "{got}");
    assert!((classical_df_oracle(&ch, 20) - got).abs() < 1e-4);
}

#[test]
fn useless_relay_link_is_bounded_by_direct_channel() {
    let mut r = rng(77);
    let st = Pmf::new(random_pmf(&mut r, 2)).unwrap();
    let direct = random_kernel(&mut r, 4, 2);
    let ch = RelayStateChannel::single_state(
        &st,
        2,
        2,
        2,
        2,
        dirtycap::prob::CondPmf::from_rows(
            (0..8)
                .map(|row| {
                    let (x, s) = (row / 4, row % 2);
                    let y = direct.row(x * 2 + s);
                    vec![y[0], 0.0, y[1], 0.0]
                })
                .collect(),
        )
        .unwrap(),
    )
    .unwrap();
    let pdf = relay::pdf_relay_rate(&ch, &budget(), None, Term2Variant::Verbatim, &[]).unwrap();
    let single = dirtycap::channels::StateChannel::new(st, 2, direct).unwrap();
    let gp = singleuser::gp_capacity(&single, &SearchBudget::default(), None).unwrap().bits;
    assert!(pdf.bits <= gp + 1e-6, "pdf {} gp {gp}", pdf.bits);
}

#[test]
fn degenerate_second_state_drops_its_penalty() {
    let mut r = rng(5);
    let rows: Vec<Vec<f64>> = (0..8).map(|_| random_pmf(&mut r, 4)).collect();
    let st = Pmf::new(random_pmf(&mut r, 2)).unwrap();
    let ch = RelayStateChannel::single_state(
        &st,
        2,
        2,
        2,
        2,
        dirtycap::prob::CondPmf::from_rows(rows).unwrap(),
    )
    .unwrap();
    let a = relay::df_relay_rate(&ch, &budget(), None).unwrap();
    let b = relay::df_relay_rate(&ch, &budget(), None).unwrap();
    assert_eq!(a.bits.to_bits(), b.bits.to_bits());
    let j = relay::relay_joint(&ch, a.argmax.as_ref().unwrap()).unwrap();
    assert!(j.mutual_info(&["U"], &["S2"], &["Ur", "S1"]).unwrap().abs() < 1e-12);
    assert!(a.bits >= 0.0 && a.bits <= 1.0 + 1e-9);
}
