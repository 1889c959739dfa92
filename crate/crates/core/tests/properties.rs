use num_complex::Complex64;
use proptest::prelude::*;

use cvqkd_core::bound::{analyze, gaussian_analysis, z_star_gaussian_channel};
use cvqkd_core::channel::{km_from_transmittance, transmittance_from_km, Channel};
use cvqkd_core::constellation::{psk, qam_binomial};
use cvqkd_core::estimation::worst_case;
use cvqkd_core::keyrate::{key_rate, key_rate_from_stats, KeyRateConfig};
use cvqkd_core::scan::maximize;
use cvqkd_core::{ChannelStats, Constellation, CovarianceBound};

fn constellation() -> impl Strategy<Value = Constellation> {
    prop::collection::vec(
        (0.0f64..2.0, 0.0f64..std::f64::consts::TAU, 0.05f64..1.0),
        1..7,
    )
    .prop_map(|pts| {
        let total: f64 = pts.iter().map(|p| p.2).sum();
        Constellation::new(
            pts.iter()
                .map(|&(r, th, _)| Complex64::from_polar(r, th))
                .collect(),
            pts.iter().map(|p| p.2 / total).collect(),
            "random",
        )
        .unwrap()
    })
}

fn channel() -> impl Strategy<Value = Channel> {
    (0.01f64..=1.0, 0.0f64..0.2).prop_map(|(t, xi)| Channel::new(t, xi).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w_nonnegative_and_t1_bounded(c in constellation()) {
        let an = analyze(&c, None).unwrap();
        prop_assert!(an.w >= 0.0);
        // Cauchy-Schwarz: |(α_τ|α)| ≤ ⟨n⟩ and t1 ≤ √(⟨n⟩² + ⟨n⟩).
        let n = an.mean_photon;
        prop_assert!(an.t1 <= (n * n + n).sqrt() + 1e-9);
    }

    #[test]
    fn expected_stats_leave_nonnegative_slack(c in constellation(), ch in channel()) {
        let an = analyze(&c, None).unwrap();
        let s = an.expected_stats(ch);
        if an.mean_photon > 0.0 {
            prop_assert!(s.n_b - s.c2 * s.c2 / an.mean_photon >= -1e-12);
        }
    }

    #[test]
    fn interval_geometry(c in constellation(), t in 0.01f64..=1.0, xi1 in 0.0f64..0.1, dxi in 0.0f64..0.1) {
        let an = analyze(&c, None).unwrap();
        let lo = an.z_interval(&an.expected_stats(Channel::new(t, xi1).unwrap())).unwrap();
        let hi = an.z_interval(&an.expected_stats(Channel::new(t, xi1 + dxi).unwrap())).unwrap();
        prop_assert!(lo.low <= lo.high);
        // The midpoint only depends on c1; the width grows with the noise.
        prop_assert!((lo.midpoint() - 2.0 * t.sqrt() * an.t1).abs() < 1e-9);
        prop_assert!((lo.midpoint() - hi.midpoint()).abs() < 1e-9);
        prop_assert!(hi.width() >= lo.width() - 1e-12);
        prop_assert!((lo.low - z_star_gaussian_channel(&an, Channel::new(t, xi1).unwrap())).abs() < 1e-9);
    }

    #[test]
    fn z_star_monotone(c in constellation(), t in 0.01f64..0.9, dt in 0.0f64..0.1, xi in 0.0f64..0.1, dxi in 0.0f64..0.1) {
        let an = analyze(&c, None).unwrap();
        let z = |t: f64, xi: f64| z_star_gaussian_channel(&an, Channel::new(t, xi).unwrap());
        prop_assert!(z(t, xi + dxi) <= z(t, xi) + 1e-12);
        if z(t, xi) >= 0.0 {
            prop_assert!(z(t + dt, xi) >= z(t, xi) - 1e-12);
        }
    }

    #[test]
    fn conjugation(c in constellation()) {
        let back = c.conjugated().conjugated();
        prop_assert_eq!(back.points(), c.points());
        prop_assert_eq!(back.probs(), c.probs());
        let (a, b) = (analyze(&c, None).unwrap(), analyze(&c.conjugated(), None).unwrap());
        prop_assert!((a.w - b.w).abs() <= 1e-9 * (1.0 + a.w));
        prop_assert!((a.t1 - b.t1).abs() <= 1e-9 * (1.0 + a.t1));
    }

    #[test]
    fn physical_key_rate_terms(c in constellation(), ch in channel(), beta in 0.5f64..=1.0) {
        let an = analyze(&c, None).unwrap();
        let cfg = KeyRateConfig::heterodyne(beta);
        if let Ok(r) = key_rate(&an, ch, &cfg) {
            prop_assert!(r.nu1 >= 1.0 - 1e-9 && r.nu2 >= 1.0 - 1e-9);
            prop_assert!(r.nu3 >= 1.0 - 1e-9);
            prop_assert!(r.chi >= 0.0);
            prop_assert!((r.k - (beta * r.mutual_info - r.chi)).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_round_trip(d in 0.0f64..300.0) {
        prop_assert!((km_from_transmittance(transmittance_from_km(d)) - d).abs() < 1e-12 * (1.0 + d));
    }

    #[test]
    fn maximize_contract(x0 in -5.0f64..25.0, curv in 0.01f64..10.0) {
        let f = |x: f64| Ok(-curv * (x - x0) * (x - x0));
        let (lo, hi) = (0.05, 20.0);
        let m = maximize(f, lo, hi, 1e-3).unwrap();
        prop_assert!(m.value >= f(lo).unwrap() && m.value >= f(hi).unwrap());
        prop_assert!((m.x - x0.clamp(lo, hi)).abs() <= 1e-3);
    }

    #[test]
    fn worst_case_only_hurts(kappa in 0.01f64..5.0, n in 10_000usize..10_000_000) {
        let an = psk(4, 0.35).unwrap();
        let an = analyze(&an, None).unwrap();
        let obs = an.expected_stats(Channel::new(0.5, 0.01).unwrap());
        let cfg = KeyRateConfig::default();
        let k_obs = key_rate_from_stats(&an, &obs, &cfg).unwrap().k;
        let wc = worst_case(&obs, n, 1e-10, kappa).unwrap();
        prop_assert!(wc.c1_min <= obs.c1 && wc.c2_min <= obs.c2 && wc.n_b_max >= obs.n_b);
        if let Ok(r) = key_rate_from_stats(&an, &wc.stats(), &cfg) {
            prop_assert!(r.k <= k_obs + 1e-12);
        }
    }
}

#[test]
fn key_rate_decreasing_in_excess_noise() {
    let cfg = KeyRateConfig::default();
    let models = [
        gaussian_analysis(2.5).unwrap(),
        analyze(&qam_binomial(8, 5.0).unwrap(), None).unwrap(),
        analyze(&psk(4, 0.35).unwrap(), None).unwrap(),
    ];
    for an in &models {
        for t in [0.9, 0.3, 0.1] {
            let ks: Vec<f64> = (0..40)
                .map(|i| {
                    key_rate(an, Channel::new(t, 0.005 * i as f64).unwrap(), &cfg)
                        .unwrap()
                        .k
                })
                .collect();
            assert!(ks.windows(2).all(|w| w[1] < w[0]), "T = {t}: {ks:?}");
        }
    }
}

#[test]
fn dimension_stability() {
    for c in [
        psk(4, 0.6).unwrap(),
        psk(7, 1.0).unwrap(),
        qam_binomial(4, 5.0).unwrap(),
    ] {
        let a = analyze(&c, None).unwrap();
        let b = analyze(&c, Some(a.dim + 10)).unwrap();
        assert!(
            (a.w - b.w).abs() <= 1e-9 * a.w.max(1e-300),
            "{}: {} vs {}",
            c.label(),
            a.w,
            b.w
        );
        assert!((a.t1 - b.t1).abs() <= 1e-9 * a.t1);
    }
}

#[test]
fn stats_from_expected_reproduce_model_rate() {
    let an = analyze(&qam_binomial(8, 5.0).unwrap(), None).unwrap();
    let cfg = KeyRateConfig::default();
    let ch = Channel::from_distance_km(30.0, 0.02).unwrap();
    let s: ChannelStats = an.expected_stats(ch);
    let a = key_rate(&an, ch, &cfg).unwrap();
    let b = key_rate_from_stats(&an, &s, &cfg).unwrap();
    assert_eq!(a.k, b.k);
    assert!(
        (a.mutual_info
            - cvqkd_core::keyrate::mutual_info_gaussian(an.va(), ch.transmittance, 0.02))
        .abs()
            < 1e-12
    );
    assert_eq!(an.signal_photon(), an.total_photon());
}
