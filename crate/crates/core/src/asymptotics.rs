//! Mixing, rigidity and weak-limit functionals, lag scans and
//! triple-correlation probes.
//!
//! Set functionals are computed in exact rationals:
//!
//! * `φ(N, j, T) = max_{i,k ≤ N} |μ(A_i ∩ TʲA_k) − μ(A_i)μ(A_k)|`
//! * `ψ(N, j, T) = max_{i ≤ N} (μ(A_i) − μ(A_i ∩ TʲA_i))`
//! * `ψ_a(N, j, T) = max_{i ≤ N} (a·μ(A_i) − μ(A_i ∩ TʲA_i))`

use std::fmt;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::cellsys::{CellAutomorphism, CellFunction, CellSet, DenseFamily};
use crate::{to_f64, Error, Rational, Result};

fn lag_power(t: &CellAutomorphism, j: u64) -> Result<CellAutomorphism> {
    let j = i64::try_from(j).map_err(|_| Error::invalid("lag does not fit in i64"))?;
    Ok(t.power(j))
}

fn family_prefix(t: &CellAutomorphism, fam: &DenseFamily, n: usize) -> Result<Vec<CellSet>> {
    if fam.space() != t.space() {
        return Err(Error::SpaceMismatch { left: t.len(), right: fam.space().len() });
    }
    Ok(fam.prefix(n)?.to_vec())
}

fn mixing_at(tj: &CellAutomorphism, sets: &[CellSet]) -> Result<Rational> {
    let n = tj.len() as i128;
    let images = sets.iter().map(|a| tj.apply_set(a)).collect::<Result<Vec<_>>>()?;
    let mut worst: i128 = 0;
    for a in sets {
        let ca = a.count() as i128;
        for (b, image) in sets.iter().zip(&images) {
            let joint = a.intersection_count(image)? as i128;
            worst = worst.max((n * joint - ca * b.count() as i128).abs());
        }
    }
    Ok(Rational::new(worst, n * n))
}

fn partial_rigidity_at(tj: &CellAutomorphism, sets: &[CellSet], a: Rational) -> Result<Rational> {
    let mut worst: Option<Rational> = None;
    for set in sets {
        let back = set.intersection_count(&tj.apply_set(set)?)?;
        let v = a * set.measure() - set.space().measure_of(back);
        worst = Some(worst.map_or(v, |w| w.max(v)));
    }
    Ok(worst.expect("prefix is nonempty"))
}

/// `φ(N, j, T)`, exact.
pub fn phi_mix(t: &CellAutomorphism, fam: &DenseFamily, n: usize, j: u64) -> Result<Rational> {
    let sets = family_prefix(t, fam, n)?;
    mixing_at(&lag_power(t, j)?, &sets)
}

/// `ψ(N, j, T)`, exact.
pub fn psi_rigid(t: &CellAutomorphism, fam: &DenseFamily, n: usize, j: u64) -> Result<Rational> {
    psi_partial(t, fam, Rational::from_integer(1), n, j)
}

/// `ψ_a(N, j, T)` for `0 < a ≤ 1`, exact.
pub fn psi_partial(t: &CellAutomorphism, fam: &DenseFamily, a: Rational, n: usize, j: u64) -> Result<Rational> {
    check_a(a)?;
    let sets = family_prefix(t, fam, n)?;
    partial_rigidity_at(&lag_power(t, j)?, &sets, a)
}

fn check_a(a: Rational) -> Result<()> {
    if a <= Rational::from_integer(0) || a > Rational::from_integer(1) {
        return Err(Error::invalid(format!("a = {a} must lie in (0, 1]")));
    }
    Ok(())
}

/// Parses `a` given as a fraction (`"1/2"`) or a finite decimal (`"0.25"`) into
/// an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("`{text}` is not a fraction or finite decimal"));
    if let Some((p, q)) = text.split_once('/') {
        let p: i128 = p.trim().parse().map_err(|_| bad())?;
        let q: i128 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 30 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let negative = int.starts_with('-');
    let int: i128 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
    let scale = 10i128.pow(frac.len() as u32);
    let frac: i128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let magnitude = int.abs() * scale + frac;
    Ok(Rational::new(if negative { -magnitude } else { magnitude }, scale))
}

/// Which set functional a scan evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Mixing,
    Rigidity,
    PartialRigidity(Rational),
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Mixing => write!(f, "phi"),
            Functional::Rigidity => write!(f, "psi"),
            Functional::PartialRigidity(a) => write!(f, "psi_a(a={a})"),
        }
    }
}

/// Per-lag values of a functional over a bounded range of lags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub functional: String,
    pub n_sets: usize,
    #[serde(serialize_with = "serialize_values")]
    pub values: Vec<(u64, Rational)>,
    /// Lags with value `< 1/N` (exact comparison).
    pub witnesses: Vec<u64>,
    pub horizon: u64,
    /// Order of the system when it does not exceed the horizon.
    pub period: Option<u128>,
    pub period_note: String,
}

fn serialize_values<S: serde::Serializer>(values: &[(u64, Rational)], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for (j, v) in values {
        seq.serialize_element(&(j, v.to_string(), to_f64(v)))?;
    }
    seq.end()
}

impl ScanReport {
    /// CSV body `j,value,exact`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,value,exact\n");
        for (j, v) in &self.values {
            out.push_str(&format!("{j},{:.17e},{v}\n", to_f64(v)));
        }
        out
    }
}

/// Evaluates a functional for every lag in `j_range`; lags run in parallel.
pub fn scan(t: &CellAutomorphism, fam: &DenseFamily, n: usize, j_range: RangeInclusive<u64>, functional: Functional) -> Result<ScanReport> {
    let sets = family_prefix(t, fam, n)?;
    if let Functional::PartialRigidity(a) = functional {
        check_a(a)?;
    }
    let (lo, hi) = (*j_range.start(), *j_range.end());
    if lo > hi {
        return Err(Error::invalid("empty lag range"));
    }
    let values = (lo..=hi)
        .into_par_iter()
        .map(|j| {
            let tj = lag_power(t, j)?;
            let v = match functional {
                Functional::Mixing => mixing_at(&tj, &sets)?,
                Functional::Rigidity => partial_rigidity_at(&tj, &sets, Rational::from_integer(1))?,
                Functional::PartialRigidity(a) => partial_rigidity_at(&tj, &sets, a)?,
            };
            Ok((j, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let threshold = Rational::new(1, n as i128);
    let witnesses = values.iter().filter(|(_, v)| *v < threshold).map(|(j, _)| *j).collect();
    let period = t.order().filter(|&p| p <= hi as u128);
    let period_note = match period {
        Some(p) => format!("system period {p} ≤ horizon {hi}: values repeat with period {p}"),
        None => String::new(),
    };
    Ok(ScanReport { functional: functional.to_string(), n_sets: n, values, witnesses, horizon: hi, period, period_note })
}

/// Operator polynomial `P(T) = cΘ + Σ cᵢTⁱ` with `c, cᵢ ≥ 0`, `c + Σcᵢ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibleFunction {
    theta: f64,
    coeffs: Vec<f64>,
}

impl AdmissibleFunction {
    pub fn new(theta: f64, coeffs: Vec<f64>) -> Result<Self> {
        if theta < 0.0 || coeffs.iter().any(|&c| c < 0.0 || !c.is_finite()) || !theta.is_finite() {
            return Err(Error::invalid("admissible weights must be finite and nonnegative"));
        }
        let total = theta + coeffs.iter().sum::<f64>();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("admissible weights sum to {total}, not 1")));
        }
        Ok(AdmissibleFunction { theta, coeffs })
    }

    /// Exact-rational constructor; the weights must sum to exactly 1.
    pub fn from_ratios(theta: Rational, coeffs: &[Rational]) -> Result<Self> {
        let total = coeffs.iter().fold(theta, |acc, c| acc + c);
        if total != Rational::from_integer(1) {
            return Err(Error::invalid(format!("admissible weights sum to {total}, not 1")));
        }
        Self::new(to_f64(&theta), coeffs.iter().map(to_f64).collect())
    }

    /// `P(T) = Θ`.
    pub fn pure_theta() -> Self {
        AdmissibleFunction { theta: 1.0, coeffs: vec![] }
    }

    /// `P(T) = I`.
    pub fn identity() -> Self {
        AdmissibleFunction { theta: 0.0, coeffs: vec![1.0] }
    }

    /// `P(T) = xΘ + (1 − x)I`.
    pub fn theta_mix(x: f64) -> Result<Self> {
        Self::new(x, vec![1.0 - x])
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// `P(T)f = c·mean(f) + Σ cᵢ·(Tⁱf)` with `(Tⁱf)(x) = f(T⁻ⁱx)`.
pub fn admissible_apply(p: &AdmissibleFunction, t: &CellAutomorphism, f: &CellFunction) -> Result<CellFunction> {
    if f.space() != t.space() {
        return Err(Error::SpaceMismatch { left: t.len(), right: f.space().len() });
    }
    let mean = f.mean();
    let mut out = vec![p.theta * mean; t.len()];
    let mut power = CellAutomorphism::identity(t.space());
    for (i, &c) in p.coeffs.iter().enumerate() {
        if i > 0 {
            power = CellAutomorphism::compose(t, &power)?;
        }
        if c == 0.0 {
            continue;
        }
        let shifted = power.koopman(f)?;
        for (o, v) in out.iter_mut().zip(shifted.values()) {
            *o += c * v;
        }
    }
    CellFunction::new(t.space(), out)
}

/// `max_{m,n ≤ N} |⟨(Tʲ − P(T)) f_m, f_n⟩|`.
pub fn weak_limit_distance(t: &CellAutomorphism, j: u64, p: &AdmissibleFunction, tests: &[CellFunction], n: usize) -> Result<f64> {
    if n == 0 || n > tests.len() {
        return Err(Error::OutOfRange { index: n, available: tests.len() });
    }
    let tests = &tests[..n];
    if let Some(f) = tests.iter().find(|f| f.norm() > 1.0 + 1e-12) {
        return Err(Error::invalid(format!("test function norm {} exceeds 1", f.norm())));
    }
    let tj = lag_power(t, j)?;
    let mut worst: f64 = 0.0;
    for f in tests {
        let lhs = tj.koopman(f)?;
        let rhs = admissible_apply(p, t, f)?;
        let diff = CellFunction::new(t.space(), lhs.values().iter().zip(rhs.values()).map(|(a, b)| a - b).collect())?;
        for g in tests {
            worst = worst.max(diff.inner(g)?.abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `μ(A ∩ TᵐA ∩ T³ᵐA)`
    Forward,
    /// `μ(A ∩ T⁻ᵐA ∩ T⁻³ᵐA)`
    Backward,
}

pub fn triple_correlation(t: &CellAutomorphism, a: &CellSet, m: u64, direction: Direction) -> Result<Rational> {
    if m == 0 {
        return Err(Error::invalid("lag m must be ≥ 1"));
    }
    let m = i64::try_from(m).map_err(|_| Error::invalid("lag does not fit in i64"))?;
    let sign = match direction {
        Direction::Forward => 1,
        Direction::Backward => -1,
    };
    let once = t.power(sign * m).apply_set(a)?;
    let thrice = t.power(sign * 3 * m).apply_set(a)?;
    Ok(a.intersection(&once)?.intersection(&thrice)?.measure())
}

/// Forward minus backward triple correlation at lag `m`.
pub fn asymmetry_gap(t: &CellAutomorphism, a: &CellSet, m: u64) -> Result<Rational> {
    Ok(triple_correlation(t, a, m, Direction::Forward)? - triple_correlation(t, a, m, Direction::Backward)?)
}

/// Limits targeted by the asymmetry detector for a set of measure `μ`:
/// forward `(μ + μ² + 2μ³)/4`, backward `μ²`.
pub fn triple_limit_targets(mu: Rational) -> (Rational, Rational) {
    let forward = (mu + mu * mu + Rational::from_integer(2) * mu * mu * mu) / Rational::from_integer(4);
    (forward, mu * mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellsys::CellSpace;
    use crate::zoo::{canonical_family, make_bernoulli_cyclic, make_cyclic_rotation, make_identity, make_random_automorphism};
    use num_traits::Signed;
    use proptest::prelude::*;

    fn r(p: i128, q: i128) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn phi_examples() {
        let id = make_identity(16);
        let fam = canonical_family(id.space(), 8).unwrap();
        let base = phi_mix(&id, &fam, 8, 0).unwrap();
        for j in 1..5 {
            assert_eq!(phi_mix(&id, &fam, 8, j).unwrap(), base);
        }

        let b = make_bernoulli_cyclic(2, 8).unwrap();
        let fam = b.single_coordinate_family(&[0]).unwrap();
        assert_eq!(phi_mix(b.automorphism(), &fam, 2, 3).unwrap(), r(0, 1));

        let rot = make_cyclic_rotation(8);
        let fam = canonical_family(rot.space(), 8).unwrap();
        assert_eq!(phi_mix(&rot, &fam, 8, 8).unwrap(), phi_mix(&rot, &fam, 8, 0).unwrap());
        assert!(phi_mix(&rot, &fam, 9, 1).is_err());
        assert!(phi_mix(&rot, &fam, 0, 1).is_err());
    }

    #[test]
    fn phi_matches_direct_enumeration() {
        let t = make_random_automorphism(30, 4);
        let fam = canonical_family(t.space(), 10).unwrap();
        for j in 0..6u64 {
            // Oracle: pointwise membership counting.
            let mut best = r(0, 1);
            for a in fam.sets() {
                for b in fam.sets() {
                    let joint = (0..30).filter(|&c| a.contains(c) && b.contains(t.power(-(j as i64)).apply(c))).count();
                    let v = (r(joint as i128, 30) - a.measure() * b.measure()).abs();
                    best = best.max(v);
                }
            }
            assert_eq!(phi_mix(&t, &fam, 10, j).unwrap(), best);
            assert!(best <= r(1, 4));
        }
    }

    #[test]
    fn psi_examples() {
        let id = make_identity(8);
        let fam = canonical_family(id.space(), 8).unwrap();
        for j in 0..4 {
            assert_eq!(psi_rigid(&id, &fam, 8, j).unwrap(), r(0, 1));
        }
        let rot = make_cyclic_rotation(12);
        let fam = canonical_family(rot.space(), 16).unwrap();
        assert_eq!(psi_rigid(&rot, &fam, 16, 12).unwrap(), r(0, 1));

        let b = make_bernoulli_cyclic(2, 8).unwrap();
        let fam = b.single_coordinate_family(&[0]).unwrap();
        assert_eq!(psi_rigid(b.automorphism(), &fam, 1, 3).unwrap(), r(1, 4));
        assert_eq!(psi_partial(b.automorphism(), &fam, r(1, 2), 1, 3).unwrap(), r(0, 1));
        assert_eq!(psi_partial(b.automorphism(), &fam, r(1, 1), 2, 5).unwrap(), psi_rigid(b.automorphism(), &fam, 2, 5).unwrap());
        assert!(psi_partial(b.automorphism(), &fam, r(0, 1), 1, 3).is_err());
        assert!(psi_partial(b.automorphism(), &fam, r(3, 2), 1, 3).is_err());
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("1/2").unwrap(), r(1, 2));
        assert_eq!(parse_rational("0.25").unwrap(), r(1, 4));
        assert_eq!(parse_rational("1").unwrap(), r(1, 1));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn scan_examples() {
        let rot = make_cyclic_rotation(144);
        let fam = canonical_family(rot.space(), 16).unwrap();
        let report = scan(&rot, &fam, 16, 1..=200, Functional::Rigidity).unwrap();
        assert!(report.witnesses.contains(&144));
        assert_eq!(report.period, Some(144));
        assert!(!report.period_note.is_empty());

        let short = scan(&rot, &fam, 16, 1..=100, Functional::Rigidity).unwrap();
        assert_eq!(short.period, None);
        assert!(short.period_note.is_empty());

        let b = make_bernoulli_cyclic(2, 10).unwrap();
        let fam = b.single_coordinate_family(&[0]).unwrap();
        let report = scan(b.automorphism(), &fam, 2, 1..=9, Functional::Mixing).unwrap();
        assert!(report.values.iter().all(|(_, v)| *v == r(0, 1)));
        assert_eq!(report.witnesses, (1..=9).collect::<Vec<_>>());
        assert!(report.to_csv().starts_with("j,value,exact\n1,0.00000000000000000e0,0\n"));
    }

    #[test]
    fn koopman_convention() {
        // ⟨Tʲ1_B, 1_A⟩ = μ(A ∩ TʲB)
        let t = make_random_automorphism(20, 11);
        let s = t.space();
        let a = CellSet::from_cells(s, [0, 3, 4, 9, 15]).unwrap();
        let b = CellSet::from_cells(s, [1, 2, 3, 10, 11, 19]).unwrap();
        for j in 0..5i64 {
            let tj = t.power(j);
            let lhs = tj.koopman(&b.indicator()).unwrap().inner(&a.indicator()).unwrap();
            let rhs = a.intersection(&tj.apply_set(&b).unwrap()).unwrap().measure();
            assert_eq!(lhs, to_f64(&rhs));
        }
    }

    #[test]
    fn admissible_examples() {
        let rot = make_cyclic_rotation(4);
        let s = rot.space();
        let f = CellSet::from_cells(s, [0]).unwrap().indicator();
        let theta = admissible_apply(&AdmissibleFunction::pure_theta(), &rot, &f).unwrap();
        assert_eq!(theta.values(), &[0.25; 4]);
        let same = admissible_apply(&AdmissibleFunction::identity(), &rot, &f).unwrap();
        assert_eq!(same, f);
        let half = AdmissibleFunction::from_ratios(r(1, 2), &[r(0, 1), r(1, 2)]).unwrap();
        let out = admissible_apply(&half, &rot, &f).unwrap();
        assert_eq!(out.values(), &[0.125, 0.625, 0.125, 0.125]);
        assert!(AdmissibleFunction::new(0.5, vec![0.4]).is_err());
        assert!(AdmissibleFunction::new(-0.5, vec![1.5]).is_err());
        assert!(AdmissibleFunction::from_ratios(r(1, 3), &[r(1, 3), r(1, 4)]).is_err());
    }

    #[test]
    fn weak_limit_examples() {
        let rot = make_cyclic_rotation(5);
        let tests: Vec<CellFunction> = (0..5).map(|c| CellSet::from_cells(rot.space(), [c]).unwrap().indicator()).collect();
        assert_eq!(weak_limit_distance(&rot, 5, &AdmissibleFunction::identity(), &tests, 5).unwrap(), 0.0);

        // identity system, P = Θ, f = g = indicator of half the space:
        // |⟨f − mean f, f⟩| = 1/2 − 1/4.
        let id = make_identity(8);
        let half = CellSet::interval(id.space(), 0, 4).indicator();
        let d = weak_limit_distance(&id, 3, &AdmissibleFunction::pure_theta(), &[half], 1).unwrap();
        assert_eq!(d, 0.25);

        let b = make_bernoulli_cyclic(2, 8).unwrap();
        let tests: Vec<CellFunction> = (0..2).map(|a| b.coordinate_set(0, a).unwrap().indicator()).collect();
        assert_eq!(weak_limit_distance(b.automorphism(), 3, &AdmissibleFunction::pure_theta(), &tests, 2).unwrap(), 0.0);

        let big = CellFunction::constant(id.space(), 2.0);
        assert!(weak_limit_distance(&id, 1, &AdmissibleFunction::identity(), &[big], 1).is_err());
    }

    #[test]
    fn triple_correlation_examples() {
        let id = make_identity(16);
        let a = CellSet::interval(id.space(), 0, 5);
        for dir in [Direction::Forward, Direction::Backward] {
            assert_eq!(triple_correlation(&id, &a, 3, dir).unwrap(), a.measure());
        }
        assert_eq!(asymmetry_gap(&id, &a, 3).unwrap(), r(0, 1));

        let b = make_bernoulli_cyclic(2, 12).unwrap();
        let a = b.coordinate_set(0, 0).unwrap();
        assert_eq!(triple_correlation(b.automorphism(), &a, 2, Direction::Forward).unwrap(), r(1, 8));
        assert_eq!(triple_correlation(b.automorphism(), &a, 2, Direction::Backward).unwrap(), r(1, 8));
        assert!(triple_correlation(&id, &CellSet::full(id.space()), 0, Direction::Forward).is_err());
    }

    #[test]
    fn asymmetry_gap_by_enumeration() {
        let t = make_random_automorphism(64, 7);
        let a = canonical_family(t.space(), 2).unwrap().set(2).clone();
        // Oracle: pointwise membership.
        let member = |c: usize, k: i64| a.contains(t.power(-k).apply(c));
        let fwd = (0..64).filter(|&c| a.contains(c) && member(c, 3) && member(c, 9)).count();
        let bwd = (0..64).filter(|&c| a.contains(c) && member(c, -3) && member(c, -9)).count();
        let gap = asymmetry_gap(&t, &a, 3).unwrap();
        assert_eq!(gap, r(fwd as i128 - bwd as i128, 64));
        assert_eq!(triple_correlation(&t.inverse(), &a, 3, Direction::Forward).unwrap(), r(bwd as i128, 64));
    }

    #[test]
    fn triple_targets_arithmetic() {
        let (fwd, bwd) = triple_limit_targets(r(1, 4));
        assert_eq!(fwd, r(11, 128));
        assert_eq!(bwd, r(1, 16));
        assert!(fwd > r(1, 12));
        assert_eq!(triple_limit_targets(r(1, 1)), (r(1, 1), r(1, 1)));
    }

    fn perm(n: usize) -> impl Strategy<Value = CellAutomorphism> {
        any::<u64>().prop_map(move |seed| make_random_automorphism(n, seed))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn functionals_are_conjugation_invariant(t in perm(24), phi in perm(24), j in 0u64..30) {
            let fam = canonical_family(t.space(), 12).unwrap();
            let conj = t.conjugate_by(&phi).unwrap();
            let phi_inv = phi.inverse();
            let pulled = DenseFamily::new(fam.sets().iter().map(|a| phi_inv.apply_set(a).unwrap()).collect()).unwrap();
            prop_assert_eq!(phi_mix(&conj, &pulled, 12, j).unwrap(), phi_mix(&t, &fam, 12, j).unwrap());
            prop_assert_eq!(psi_rigid(&conj, &pulled, 12, j).unwrap(), psi_rigid(&t, &fam, 12, j).unwrap());
            prop_assert_eq!(psi_partial(&conj, &pulled, r(1, 3), 12, j).unwrap(), psi_partial(&t, &fam, r(1, 3), 12, j).unwrap());
        }

        #[test]
        fn psi_partial_is_lipschitz_in_a(t in perm(32), j in 0u64..20, a_num in 1i128..=16, b_num in 1i128..=16) {
            let fam = canonical_family(t.space(), 10).unwrap();
            let (hi, lo) = (r(a_num.max(b_num), 16), r(a_num.min(b_num), 16));
            let v_hi = psi_partial(&t, &fam, hi, 10, j).unwrap();
            let v_lo = psi_partial(&t, &fam, lo, 10, j).unwrap();
            prop_assert!(v_lo <= v_hi);
            prop_assert!(v_hi <= v_lo + (hi - lo));
        }

        #[test]
        fn admissible_preserves_mean(t in perm(16), values in proptest::collection::vec(-1.0f64..1.0, 16), w in 0.0f64..1.0) {
            let f = CellFunction::new(CellSpace::new(16).unwrap(), values).unwrap();
            let p = AdmissibleFunction::new(w * 0.5, vec![w * 0.5, 0.0, 1.0 - w]).unwrap();
            let out = admissible_apply(&p, &t, &f).unwrap();
            prop_assert!((out.mean() - f.mean()).abs() < 1e-12);
        }

        #[test]
        fn periodic_weak_limits_vanish(n in 1usize..20, k in 1u64..4) {
            let rot = make_cyclic_rotation(n);
            let tests: Vec<CellFunction> = (0..n.min(4)).map(|c| CellSet::from_cells(rot.space(), [c]).unwrap().indicator()).collect();
            let d = weak_limit_distance(&rot, k * n as u64, &AdmissibleFunction::identity(), &tests, tests.len()).unwrap();
            prop_assert_eq!(d, 0.0);
        }

        #[test]
        fn triple_correlation_in_range(t in perm(40), lo in 0usize..40, len in 0usize..40, m in 1u64..10) {
            let a = CellSet::interval(t.space(), lo, lo + len);
            for dir in [Direction::Forward, Direction::Backward] {
                let v = triple_correlation(&t, &a, m, dir).unwrap();
                prop_assert!(v >= r(0, 1) && v <= a.measure());
            }
        }
    }
}
