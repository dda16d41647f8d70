use ergolab::asymptotics::{admissible_apply, phi_mix, psi_partial, psi_rigid, triple_correlation, AdmissibleFunction, Direction};
use ergolab::cellsys::compose;
use ergolab::extlab::cocycle;
use ergolab::seqentropy::{h_j, partition_entropy};
use ergolab::spectral::{atomic_spectrum, correlation_sequence};
use ergolab::zoo::{make_cyclic_rotation, make_random_automorphism};
use ergolab::{build_skew, halmos_distance, CellAutomorphism, CellFunction, CellSet, CellSpace, DenseFamily, Partition, Rational, SkewSystem};
use proptest::prelude::*;

fn arb_perm(max_n: usize) -> impl Strategy<Value = CellAutomorphism> {
    (1..=max_n, any::<u64>()).prop_map(|(n, seed)| make_random_automorphism(n, seed))
}

fn arb_set(space: CellSpace, bits: &[bool]) -> CellSet {
    CellSet::from_predicate(space, |c| bits[c % bits.len()])
}

fn conjugate(t: &CellAutomorphism, phi: &CellAutomorphism) -> CellAutomorphism {
    compose(&phi.inverse(), &compose(t, phi).unwrap()).unwrap()
}

fn family(space: CellSpace, seed: u64, count: usize) -> DenseFamily {
    let sets = (0..count)
        .map(|i| {
            let mix = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(i as u32 * 7);
            CellSet::from_predicate(space, |c| (mix >> (c % 61)) & 1 == 1)
        })
        .collect();
    DenseFamily::new(sets).unwrap()
}

fn pulled_back(fam: &DenseFamily, phi: &CellAutomorphism) -> DenseFamily {
    let inv = phi.inverse();
    DenseFamily::new(fam.sets().iter().map(|a| inv.apply_set(a).unwrap()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_associative(n in 1usize..40, s1: u64, s2: u64, s3: u64) {
        let (a, b, c) = (make_random_automorphism(n, s1), make_random_automorphism(n, s2), make_random_automorphism(n, s3));
        let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
        let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn powers_add(t in arb_perm(30), a in -64i64..=64, b in -64i64..=64) {
        prop_assert_eq!(t.power(a + b), compose(&t.power(a), &t.power(b)).unwrap());
    }

    #[test]
    fn sets_keep_their_measure(t in arb_perm(200), bits in prop::collection::vec(any::<bool>(), 1..50)) {
        let a = arb_set(t.space(), &bits);
        prop_assert_eq!(t.apply_set(&a).unwrap().count(), a.count());
    }

    #[test]
    fn halmos_is_a_pseudometric(n in 2usize..30, s1: u64, s2: u64, s3: u64, fs: u64) {
        let (a, b, c) = (make_random_automorphism(n, s1), make_random_automorphism(n, s2), make_random_automorphism(n, s3));
        let fam = family(a.space(), fs, 6);
        let ab = halmos_distance(&a, &b, &fam).unwrap().exact;
        let ba = halmos_distance(&b, &a, &fam).unwrap().exact;
        let bc = halmos_distance(&b, &c, &fam).unwrap().exact;
        let ac = halmos_distance(&a, &c, &fam).unwrap().exact;
        prop_assert_eq!(ab, ba);
        prop_assert!(ac <= ab + bc);
        prop_assert_eq!(halmos_distance(&a, &a, &fam).unwrap().exact, Rational::from_integer(0));
    }

    #[test]
    fn skew_matches_cocycle(nb in 1usize..8, nf in 1usize..8, seed: u64, steps in 0u64..20) {
        let base = make_random_automorphism(nb, seed);
        let fibers: Vec<_> = (0..nb).map(|x| make_random_automorphism(nf, seed ^ (x as u64 + 1))).collect();
        let skew = build_skew(&base, fibers).unwrap();
        let rn = skew.product().power(steps as i64);
        let sn = base.power(steps as i64);
        for x in 0..nb {
            let c = cocycle(&skew, x, steps).unwrap();
            for y in 0..nf {
                prop_assert_eq!(skew.unpair(rn.apply(skew.pair(x, y))), (sn.apply(x), c.apply(y)));
            }
        }
    }

    #[test]
    fn set_functionals_are_conjugation_invariant(n in 2usize..40, ts: u64, ps: u64, fs: u64, j in 0u64..12) {
        let t = make_random_automorphism(n, ts);
        let phi = make_random_automorphism(n, ps);
        let fam = family(t.space(), fs, 5);
        let (t2, fam2) = (conjugate(&t, &phi), pulled_back(&fam, &phi));
        prop_assert_eq!(phi_mix(&t, &fam, 5, j).unwrap(), phi_mix(&t2, &fam2, 5, j).unwrap());
        prop_assert_eq!(psi_rigid(&t, &fam, 5, j).unwrap(), psi_rigid(&t2, &fam2, 5, j).unwrap());
        let a = Rational::new(1, 3);
        prop_assert_eq!(psi_partial(&t, &fam, a, 5, j).unwrap(), psi_partial(&t2, &fam2, a, 5, j).unwrap());
    }

    #[test]
    fn psi_partial_is_monotone_and_lipschitz(n in 2usize..40, ts: u64, fs: u64, j in 0u64..12, a_num in 1i128..=8, b_num in 1i128..=8) {
        let t = make_random_automorphism(n, ts);
        let fam = family(t.space(), fs, 4);
        let (lo, hi) = (a_num.min(b_num), a_num.max(b_num));
        let (a_lo, a_hi) = (Rational::new(lo, 8), Rational::new(hi, 8));
        let v_lo = psi_partial(&t, &fam, a_lo, 4, j).unwrap();
        let v_hi = psi_partial(&t, &fam, a_hi, 4, j).unwrap();
        prop_assert!(v_hi <= v_lo + (a_hi - a_lo));
        prop_assert!(v_lo <= v_hi);
        prop_assert!(psi_rigid(&t, &fam, 4, j).unwrap() >= Rational::from_integer(0));
    }

    #[test]
    fn admissible_apply_preserves_mean(t in arb_perm(30), theta in 0.0f64..1.0, w1 in 0.0f64..1.0, vals in prop::collection::vec(-5.0f64..5.0, 30)) {
        let rest = 1.0 - theta;
        let p = AdmissibleFunction::new(theta, vec![rest * w1, rest * (1.0 - w1) / 2.0, rest * (1.0 - w1) / 2.0]).unwrap();
        let f = CellFunction::new(t.space(), vals[..t.len()].to_vec()).unwrap();
        let g = admissible_apply(&p, &t, &f).unwrap();
        prop_assert!((g.mean() - f.mean()).abs() < 1e-9);
        let constant = CellFunction::constant(t.space(), 2.5);
        prop_assert!(admissible_apply(&p, &t, &constant).unwrap().values().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn triple_correlation_is_bounded(t in arb_perm(60), bits in prop::collection::vec(any::<bool>(), 1..40), m in 1u64..10) {
        let a = arb_set(t.space(), &bits);
        for dir in [Direction::Forward, Direction::Backward] {
            let v = triple_correlation(&t, &a, m, dir).unwrap();
            prop_assert!(v >= Rational::from_integer(0) && v <= a.measure());
        }
    }

    #[test]
    fn join_is_subadditive(n in 1usize..80, k1 in 1u64..6, k2 in 1u64..6, seed: u64) {
        let space = CellSpace::new(n).unwrap();
        let xi = Partition::from_fn(space, |c| (seed.rotate_left(c as u32) ^ c as u64) % k1);
        let eta = Partition::from_fn(space, |c| (seed.wrapping_mul(c as u64 + 3) >> 7) % k2);
        let joint = partition_entropy(&xi.join(&eta).unwrap());
        prop_assert!(joint <= partition_entropy(&xi) + partition_entropy(&eta) + 1e-12);
        let total: Rational = xi.class_masses().into_iter().sum();
        prop_assert_eq!(total, Rational::from_integer(1));
    }

    #[test]
    fn h_j_is_conjugation_invariant(n in 1usize..60, ts: u64, ps: u64, k in 1u64..5, lags in prop::collection::btree_set(1i64..20, 1..5)) {
        let t = make_random_automorphism(n, ts);
        let phi = make_random_automorphism(n, ps);
        let xi = Partition::from_fn(t.space(), |c| (c as u64 * 7 + ts) % k);
        let pulled = Partition::from_fn(t.space(), |c| xi.label(phi.apply(c)) as u64);
        let lags: Vec<i64> = lags.into_iter().collect();
        let a = h_j(&t, &xi, &lags).unwrap();
        let b = h_j(&conjugate(&t, &phi), &pulled, &lags).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn atomic_spectrum_reconstructs_correlations(t in arb_perm(128), vals in prop::collection::vec(-1.0f64..1.0, 128)) {
        let f = CellFunction::new(t.space(), vals[..t.len()].to_vec()).unwrap();
        prop_assume!(f.norm() > 1e-3);
        let f = f.normalized().unwrap();
        let spec = atomic_spectrum(&t, &f).unwrap();
        let corr = correlation_sequence(&t, &f, 32).unwrap();
        for s in -32..=32 {
            prop_assert!((spec.reconstruct(s) - corr.get(s).unwrap()).norm() < 1e-9);
        }
    }

    #[test]
    fn automorphisms_round_trip_through_json(t in arb_perm(50), nf in 1usize..5) {
        let text = serde_json::to_string(&t).unwrap();
        prop_assert_eq!(&serde_json::from_str::<CellAutomorphism>(&text).unwrap(), &t);
        let skew = SkewSystem::constant(&t, &make_cyclic_rotation(nf)).unwrap();
        let text = serde_json::to_string(&skew).unwrap();
        let back: SkewSystem = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.product(), skew.product());
    }
}
