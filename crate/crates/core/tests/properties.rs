mod common;

use common::{c_ma, c_pa, c_sum, Cx};
use miso_capacity::capacity::{capacity_ma, capacity_per_antenna, capacity_sum, rate};
use miso_capacity::channel::PowerConstraint;
use miso_capacity::channel::{ChannelVector, SeededRng, SystemParams};
use miso_capacity::covariance::{check_constraint, optimal_cov_per_antenna};
use miso_capacity::experiments::config::parse_complex;
use miso_capacity::experiments::fmt_num;
use miso_capacity::hermitian::{eig_hermitian, is_psd, numerical_rank, HermitianMatrix};
use miso_capacity::oracle::{grid_search_n2, maximize_general_rank, maximize_per_antenna_phases};
use miso_capacity::Complex64;
use proptest::prelude::*;

fn coeff() -> impl Strategy<Value = Cx> {
    prop_oneof![
        1 => Just((0.0, 0.0)),
        8 => (-3.0..3.0f64, -3.0..3.0f64),
    ]
}

fn power() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 8 => 0.0..10.0f64]
}

fn instance(max_n: usize) -> impl Strategy<Value = (Vec<Cx>, Vec<f64>)> {
    (1..=max_n).prop_flat_map(|n| (prop::collection::vec(coeff(), n), prop::collection::vec(power(), n)))
}

fn channel(h: &[Cx]) -> ChannelVector {
    ChannelVector::new(h.iter().map(|&(re, im)| Complex64::new(re, im)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn capacities_are_ordered((h, p) in instance(8), noise in 0.1..4.0f64) {
        let sys = SystemParams::new(noise, Default::default()).unwrap();
        let hv = channel(&h);
        let total: f64 = p.iter().sum();
        let s = capacity_sum(&hv, total, &sys).unwrap().value;
        let pa = capacity_per_antenna(&hv, &p, &sys).unwrap().value;
        let ma = capacity_ma(&hv, &p, &sys).unwrap().value;
        prop_assert!(ma <= pa + 1e-12 && pa <= s + 1e-12, "{ma} {pa} {s}");
        let scale = s.max(1.0);
        prop_assert!((s - c_sum(&h, total, noise)).abs() <= 1e-12 * scale);
        prop_assert!((pa - c_pa(&h, &p, noise)).abs() <= 1e-12 * scale);
        prop_assert!((ma - c_ma(&h, &p, noise)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn optimal_covariance_structure((h, p) in instance(8)) {
        let hv = channel(&h);
        let q = optimal_cov_per_antenna(&hv, &p).unwrap();
        prop_assert_eq!(q.diag(), p.clone());
        let total: f64 = p.iter().sum();
        let report = check_constraint(&q, &PowerConstraint::PerAntenna(p.clone()), 1e-9).unwrap();
        prop_assert!(report.satisfied, "{:?}", report);
        prop_assert!(is_psd(&q, 1e-9).unwrap());
        let rank = numerical_rank(&q, 1e-9).unwrap();
        prop_assert_eq!(rank, usize::from(total > 0.0));
        let eig = eig_hermitian(&q).unwrap();
        prop_assert!((eig.values[0] - total).abs() <= 1e-10 * total.max(1.0));
        // The achieving covariance attains the closed form.
        let sys = SystemParams::default();
        let r = rate(&hv, &q, &sys).unwrap();
        prop_assert!((r - c_pa(&h, &p, 1.0)).abs() <= 1e-12 * r.max(1.0));
    }

    #[test]
    fn proportional_budgets_close_the_gap(h in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..8), scale in 0.01..5.0f64) {
        let hv = channel(&h);
        let p: Vec<f64> = h.iter().map(|&(re, im)| scale * (re * re + im * im)).collect();
        let total: f64 = p.iter().sum();
        let sys = SystemParams::default();
        let s = capacity_sum(&hv, total, &sys).unwrap().value;
        let pa = capacity_per_antenna(&hv, &p, &sys).unwrap().value;
        prop_assert!((s - pa).abs() <= 1e-9);
    }

    #[test]
    fn eigen_reconstruction(entries in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 16)) {
        // Symmetrize a random 4x4 complex matrix.
        let raw: Vec<Complex64> = entries.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let mut m = HermitianMatrix::zeros(4);
        for i in 0..4 {
            for j in i..4 {
                let z = if i == j {
                    Complex64::new(raw[i * 4 + j].re, 0.0)
                } else {
                    (raw[i * 4 + j] + raw[j * 4 + i].conj()) * 0.5
                };
                m.set(i, j, z);
            }
        }
        let eig = eig_hermitian(&m).unwrap();
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        let back = eig.reconstruct();
        let err = back.add(&HermitianMatrix::diagonal(&[0.0; 4])).unwrap();
        let diff: f64 = err.entries().iter().zip(m.entries()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-12 * m.frobenius_norm().max(1.0));
    }

    #[test]
    fn formatted_numbers_parse_back(x in prop::num::f64::NORMAL) {
        let back: f64 = fmt_num(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }

    #[test]
    fn complex_literals_round_trip(re in -1e3..1e3f64, im in -1e3..1e3f64) {
        let text = format!("{re}{}{}i", if im < 0.0 { "-" } else { "+" }, im.abs());
        let z = parse_complex(&text).unwrap();
        prop_assert_eq!(z, Complex64::new(re, im));
        let j = text.replace('i', "j");
        prop_assert!(parse_complex(&j).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracles_never_beat_closed_form(
        h in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 2..6),
        seed in any::<u64>(),
        p_seed in prop::collection::vec(0.01..10.0f64, 6),
    ) {
        let hv = channel(&h);
        let p = &p_seed[..h.len()];
        let sys = SystemParams::default();
        let closed = c_pa(&h, p, 1.0);
        let rng = SeededRng::new(seed);
        let phase = maximize_per_antenna_phases(&hv, p, &sys, 4, &rng).unwrap();
        let factor = maximize_general_rank(&hv, p, &sys, h.len(), 4, &rng).unwrap();
        for r in [phase.best_rate, factor.best_rate] {
            prop_assert!(r <= closed + 1e-9);
            prop_assert!((r - closed).abs() <= 1e-6 * closed.max(1e-12));
        }
        prop_assert!(phase.monotone && factor.monotone);
    }

    #[test]
    fn grid_search_approaches_closed_form(h in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 2), p in prop::collection::vec(0.1..10.0f64, 2)) {
        let hv = channel(&h);
        let res = grid_search_n2(&hv, &p, &SystemParams::default(), 720).unwrap();
        let closed = c_pa(&h, &p, 1.0);
        prop_assert!(res.oracle.best_rate <= closed + 1e-12);
        // A half-degree phase grid loses at most a relative ~4e-5 of the SNR.
        prop_assert!(closed - res.oracle.best_rate <= 1e-4);
    }
}
