//! Randomized properties of the public building blocks.

use alloc::vec::Vec;
use proptest::prelude::*;

use crate::analysis::{bf_security, log2_bf_security};
use crate::bch::{BchCode, BinaryCodeSpec};
use crate::field::{interpolate, FieldElement, Polynomial, VaultPoint};
use crate::minutiae::{angular_distance, wrap_degrees, Minutia, RigidTransform};
use crate::stats::{clopper_pearson, TrialRecord};

fn fe() -> impl Strategy<Value = FieldElement> {
    any::<u16>().prop_map(FieldElement::from)
}

proptest! {
    #[test]
    fn multiplication_distributes(a in fe(), b in fe(), c in fe()) {
        prop_assert_eq!(a * (b + c), a * b + a * c);
        prop_assert_eq!((a * b) * c, a * (b * c));
    }

    #[test]
    fn nonzero_elements_invert(a in 1u16..) {
        let a = FieldElement::from(a);
        prop_assert_eq!(a * a.inv().unwrap(), FieldElement::from(1));
    }

    #[test]
    fn interpolation_recovers_the_polynomial(
        coeffs in prop::collection::vec(any::<u16>(), 1..12),
        xs in prop::collection::hash_set(any::<u16>(), 12),
    ) {
        let k = coeffs.len();
        let f = Polynomial::new(coeffs.into_iter().map(FieldElement::from).collect()).unwrap();
        let pts: Vec<VaultPoint> = xs
            .into_iter()
            .take(k)
            .map(|x| {
                let x = FieldElement::from(x);
                VaultPoint { x, y: f.eval(x) }
            })
            .collect();
        prop_assert_eq!(interpolate(&pts, k).unwrap(), f);
    }

    #[test]
    fn polynomial_bytes_round_trip(coeffs in prop::collection::vec(any::<u16>(), 1..20)) {
        let f = Polynomial::new(coeffs.into_iter().map(FieldElement::from).collect()).unwrap();
        prop_assert_eq!(Polynomial::from_bytes(&f.to_bytes()).unwrap(), f);
    }

    #[test]
    fn bch_corrects_up_to_nu_errors(msg in 0u32..(1 << 5), flips in prop::collection::hash_set(0usize..15, 0..=3)) {
        let code = BchCode::new(BinaryCodeSpec::BCH_15_5).unwrap();
        let mut w = code.encode(msg).unwrap();
        for &i in &flips {
            w.flip(i);
        }
        prop_assert_eq!(code.decode(&w).unwrap(), Some(msg));
    }

    #[test]
    fn transforms_invert(
        dx in -50.0..50.0f64, dy in -50.0..50.0f64, rot in -180.0..180.0f64,
        a in 0.0..296.0f64, b in 0.0..560.0f64, theta in 0.0..360.0f64,
    ) {
        let t = RigidTransform::new(dx, dy, rot, (148.0, 280.0));
        let m = Minutia::new(a, b, theta, 1.0);
        let back = t.inverse().apply(&t.apply(&m));
        prop_assert!((back.a - a).abs() < 1e-9 && (back.b - b).abs() < 1e-9);
        prop_assert!(angular_distance(back.theta, theta) < 1e-9);
    }

    #[test]
    fn angles_wrap_into_range(x in -1e4..1e4f64) {
        let w = wrap_degrees(x);
        prop_assert!((0.0..360.0).contains(&w));
        prop_assert!(angular_distance(w, x) < 1e-6);
    }

    #[test]
    fn security_grows_with_degree(n in 30u64..500, t in 10u64..30, k in 1u64..9) {
        prop_assume!(t <= n && k < t);
        prop_assert!(log2_bf_security(n, t, k + 1).unwrap() >= log2_bf_security(n, t, k).unwrap());
        prop_assert!(bf_security(n, t, k).unwrap() >= 1.0);
    }

    #[test]
    fn intervals_bracket_the_estimate(n in 1u64..5000, s in 0u64..5000) {
        prop_assume!(s <= n);
        let ci = clopper_pearson(&TrialRecord::new(s, n).unwrap(), 0.95).unwrap();
        let p = s as f64 / n as f64;
        prop_assert!(ci.lower <= p + 1e-12 && p <= ci.upper + 1e-12);
        prop_assert!(0.0 <= ci.lower && ci.upper <= 1.0);
    }
}
