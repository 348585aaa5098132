use std::sync::OnceLock;

use mdl_core::contfrac::{
    build_exp_alpha, build_poly_alpha, certify_determinant, check_convergent_bounds, dist_to_int,
    legendre_locate, AngleCF, PartialQuotients, Tau,
};
use mdl_core::experiments::correlation_sum;
use mdl_core::flow::{
    metric_d, orbit_direct, orbit_direct_checkpoints, orbit_fast, pairing, Conjugacy, FlowConfig,
    FrequencyVector, TorusPoint,
};
use mdl_core::harmonic::{analytic_h_sample, smooth_h_sample};
use mdl_core::moebius::{sieve_full, sieve_segment, MuTable};
use mdl_core::spectrum::{classify, classify_tau, FreqClass, TauClassifier};
use proptest::prelude::*;

fn exp_angle() -> &'static AngleCF {
    static A: OnceLock<AngleCF> = OnceLock::new();
    A.get_or_init(|| build_exp_alpha(4).unwrap())
}

fn poly_angle() -> &'static AngleCF {
    static A: OnceLock<AngleCF> = OnceLock::new();
    A.get_or_init(|| build_poly_alpha(Tau::integer(4), 5).unwrap())
}

fn mu_table() -> &'static MuTable {
    static T: OnceLock<MuTable> = OnceLock::new();
    T.get_or_init(|| sieve_full(200_000).unwrap())
}

fn flow(dim: usize) -> FlowConfig {
    FlowConfig::new(exp_angle().clone(), analytic_h_sample(1.0, 12, 3).unwrap(), dim).unwrap()
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..1.0f64
}

fn point(dim: usize) -> impl Strategy<Value = TorusPoint> {
    prop::collection::vec(unit(), dim).prop_map(|c| TorusPoint::new(c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn determinant_identity(a0 in -5i64..5, qs in prop::collection::vec(1u64..1000, 1..40)) {
        let a = AngleCF::explicit(PartialQuotients::from_u64(a0, &qs).unwrap()).unwrap();
        prop_assert!(certify_determinant(&a).pass);
    }

    #[test]
    fn convergent_bounds_and_legendre(qs in prop::collection::vec(1u64..50, 4..30)) {
        let a = AngleCF::explicit(PartialQuotients::from_u64(0, &qs).unwrap()).unwrap();
        // at k = K* − 1 the angle is its own next convergent
        for k in 1..a.k_star() - 1 {
            let b = check_convergent_bounds(&a, k).unwrap();
            prop_assert!(b.lower_ok && b.upper_ok);
        }
        // of two consecutive convergents at least one passes the criterion
        let located: Vec<bool> = (1..a.k_star() - 1)
            .map(|k| {
                let c = &a.convergents()[k];
                legendre_locate(&c.l, &c.q, &a).is_some_and(|i| a.convergents()[i].q == c.q)
            })
            .collect();
        prop_assert!(located.windows(2).all(|w| w[0] || w[1]), "{:?}", located);
    }

    #[test]
    fn tau_round_trips(num in 4u32..200, den in 1u32..20) {
        let t = Tau::new(num, den).unwrap();
        let back: Tau = t.to_string().parse().unwrap();
        prop_assert_eq!(back.value(), t.value());
    }

    #[test]
    fn segment_matches_full(n in 2u64..200_000, frac in 0.0..1.0f64) {
        let m = ((n as f64 * frac) as u64).clamp(1, n);
        let seg = sieve_segment(n, m).unwrap();
        let full = mu_table().slice(n - m + 1, n).unwrap();
        prop_assert_eq!(seg.values(), full.values());
    }

    #[test]
    fn mu_is_multiplicative(a in 1u64..400, b in 1u64..400) {
        let t = mu_table();
        let (ma, mb, mab) = (t.get(a).unwrap(), t.get(b).unwrap(), t.get(a * b).unwrap());
        if num_integer::gcd(a, b) == 1 {
            prop_assert_eq!(mab, ma * mb);
        } else if ma != 0 && mb != 0 {
            // a shared prime divides ab twice
            prop_assert_eq!(mab, 0);
        }
    }

    #[test]
    fn mu_table_round_trip(n in 1u64..5_000, m in 1u64..5_000) {
        let m = m.min(n);
        let t = sieve_segment(n, m).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        prop_assert_eq!(MuTable::read_from(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn classes_partition(m in -1_000_000_000i64..1_000_000_000) {
        let a = poly_angle();
        let tau = Tau::integer(4);
        let c = classify_tau(m, a, tau).unwrap();
        let class = c.tau_class.unwrap();
        prop_assert_eq!(class, TauClassifier::new(a, tau).class(m).unwrap());
        prop_assert_eq!(class, classify_tau(-m, a, tau).unwrap().tau_class.unwrap());
        prop_assert_eq!(class == FreqClass::Zero, m == 0);
        if m != 0 {
            let divides = (m.unsigned_abs() as u128).is_multiple_of(a.q_table()[c.k]);
            prop_assert_eq!(matches!(class, FreqClass::M1 | FreqClass::M2), divides);
            if classify(m, a).unwrap().resonant {
                prop_assert!(divides);
            }
        }
    }

    #[test]
    fn metric_is_a_metric(x in point(5), y in point(5), z in point(5)) {
        let dxy = metric_d(&x, &y).unwrap();
        prop_assert_eq!(dxy, metric_d(&y, &x).unwrap());
        prop_assert!(dxy <= metric_d(&x, &z).unwrap() + metric_d(&z, &y).unwrap() + 1e-15);
        prop_assert!((0.0..=0.5).contains(&dxy));
    }

    #[test]
    fn pairing_is_bilinear(
        b in prop::collection::vec(-20i64..20, 4),
        c in prop::collection::vec(-20i64..20, 4),
        x in point(4),
    ) {
        let sum: Vec<i64> = b.iter().zip(&c).map(|(u, v)| u + v).collect();
        let (fb, fc, fs) = (FrequencyVector::new(b), FrequencyVector::new(c), FrequencyVector::new(sum));
        prop_assert!(fb.consistent() && fc.consistent());
        let lhs = pairing(&fs, &x).unwrap();
        let rhs = pairing(&fb, &x).unwrap() + pairing(&fc, &x).unwrap();
        prop_assert!(dist_to_int(lhs - rhs) < 1e-12);
    }

    #[test]
    fn semigroup(x in point(4), n1 in 0u64..1000, n2 in 0u64..1000) {
        let cfg = flow(4);
        let whole = orbit_direct(&cfg, &x, n1 + n2).unwrap();
        let split = orbit_direct(&cfg, &orbit_direct(&cfg, &x, n1).unwrap(), n2).unwrap();
        for (a, b) in whole.coords().iter().zip(split.coords()) {
            prop_assert!(dist_to_int(a - b) < 1e-10);
        }
    }

    #[test]
    fn truncation_is_exact(x in point(7), n in 0u64..500) {
        let small = orbit_direct(&flow(4), &TorusPoint::new(x.coords()[..4].to_vec()).unwrap(), n).unwrap();
        let big = orbit_direct(&flow(7), &x, n).unwrap();
        prop_assert_eq!(small.coords(), &big.coords()[..4]);
        let small = orbit_fast(&flow(4), &TorusPoint::new(x.coords()[..4].to_vec()).unwrap(), n).unwrap();
        let big = orbit_fast(&flow(7), &x, n).unwrap();
        prop_assert_eq!(small.coords(), &big.coords()[..4]);
    }

    #[test]
    fn fast_agrees_with_direct(x in point(3), n in 0u64..3000) {
        let cfg = flow(3);
        let d = orbit_direct_checkpoints(&cfg, &x, &[n]).unwrap().pop().unwrap();
        let f = orbit_fast(&cfg, &x, n).unwrap();
        for (a, b) in d.coords().iter().zip(f.coords()) {
            prop_assert!(dist_to_int(a - b) < 1e-10);
        }
    }

    #[test]
    fn psi_inverts(x in point(4)) {
        let cfg = FlowConfig::new(poly_angle().clone(), smooth_h_sample(4.0, 50, 2).unwrap(), 4).unwrap();
        let c = Conjugacy::new(&cfg, Tau::integer(4)).unwrap();
        let y = c.psi_inv(&c.psi(&x).unwrap()).unwrap();
        for (a, b) in x.coords().iter().zip(y.coords()) {
            prop_assert!(dist_to_int(a - b) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn correlation_is_deterministic(x in point(3), n in 1_000u64..50_000, b2 in -3i64..3) {
        let cfg = flow(3);
        let b = FrequencyVector::new(vec![1, b2, 1]);
        let m = n / 3 + 1;
        let r1 = correlation_sum(&cfg, &b, &x, n, m).unwrap();
        let r2 = correlation_sum(&cfg, &b, &x, n, m).unwrap();
        prop_assert_eq!(r1.s.re.to_bits(), r2.s.re.to_bits());
        prop_assert_eq!(r1.s.im.to_bits(), r2.s.im.to_bits());
        prop_assert!(r1.s.norm() <= m as f64 + 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r1.normalized));
    }
}
