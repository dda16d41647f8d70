//! Partition entropy and sequence (P-)entropy along finite lag sets.
//!
//! `h_j(T, ξ) = H(⋁_{p ∈ P_j} Tᵖξ) / |P_j|`, in nats. `h_P` is a limsup and is
//! only ever reported as a maximum over an explicit, finite `j` range.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cellsys::{CellAutomorphism, CellSpace, SkewSystem};
use crate::zoo::BernoulliShift;
use crate::{Error, Rational, Result};

/// A labeled decomposition of cells. Labels are canonical: classes are
/// numbered in order of first occurrence, so equal partitions have equal
/// label vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    space: CellSpace,
    labels: Vec<u32>,
    class_count: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels (any `u64` per cell).
    pub fn from_labels(space: CellSpace, labels: &[u64]) -> Result<Self> {
        if labels.len() != space.len() {
            return Err(Error::SpaceMismatch { left: space.len(), right: labels.len() });
        }
        Ok(Self::canonical(space, labels.iter().copied()))
    }

    pub fn from_fn(space: CellSpace, label: impl Fn(usize) -> u64) -> Self {
        Self::canonical(space, (0..space.len()).map(label))
    }

    /// The one-class partition.
    pub fn trivial(space: CellSpace) -> Self {
        Partition { space, labels: vec![0; space.len()], class_count: 1 }
    }

    fn canonical(space: CellSpace, labels: impl Iterator<Item = u64>) -> Self {
        let mut map: HashMap<u64, u32> = HashMap::new();
        let labels: Vec<u32> = labels
            .map(|l| {
                let next = map.len() as u32;
                *map.entry(l).or_insert(next)
            })
            .collect();
        Partition { space, labels, class_count: map.len() }
    }

    pub fn space(&self) -> CellSpace {
        self.space
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, cell: usize) -> u32 {
        self.labels[cell]
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Number of cells in each class, indexed by canonical label.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.class_count];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    pub fn class_masses(&self) -> Vec<Rational> {
        self.class_sizes().into_iter().map(|c| self.space.measure_of(c)).collect()
    }

    pub fn entropy(&self) -> f64 {
        partition_entropy(self)
    }

    /// Common refinement `ξ ∨ η`.
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch { left: self.space.len(), right: other.space.len() });
        }
        Ok(self.join_with(other.class_count, |c| other.labels[c]))
    }

    // Joins with a second labeling given as a closure over cells.
    fn join_with(&self, other_classes: usize, other: impl Fn(usize) -> u32) -> Partition {
        let n = self.space.len();
        let width = other_classes as u64;
        let combined = self.class_count as u64 * width;
        let mut labels = Vec::with_capacity(n);
        let mut next = 0u32;
        if combined <= 4 * n as u64 + 64 {
            let mut table = vec![u32::MAX; combined as usize];
            for c in 0..n {
                let key = (self.labels[c] as u64 * width + other(c) as u64) as usize;
                if table[key] == u32::MAX {
                    table[key] = next;
                    next += 1;
                }
                labels.push(table[key]);
            }
        } else {
            let mut table: HashMap<u64, u32> = HashMap::new();
            for c in 0..n {
                let key = self.labels[c] as u64 * width + other(c) as u64;
                let l = *table.entry(key).or_insert_with(|| {
                    next += 1;
                    next - 1
                });
                labels.push(l);
            }
        }
        Partition { space: self.space, labels, class_count: next as usize }
    }

    /// Image partition `Tξ = {TC : C ∈ ξ}`: a cell's label is that of its preimage.
    pub fn push_forward(&self, t: &CellAutomorphism) -> Result<Partition> {
        if self.space != t.space() {
            return Err(Error::SpaceMismatch { left: self.space.len(), right: t.len() });
        }
        let inv = t.inverse_raw();
        Ok(Self::canonical(self.space, inv.iter().map(|&pre| self.labels[pre as usize] as u64)))
    }

    /// Lifts a fiber partition to `X × ξ` on a skew system's product space.
    pub fn fiber_lift(&self, skew: &SkewSystem) -> Result<Partition> {
        if self.space != skew.fiber_space() {
            return Err(Error::SpaceMismatch { left: self.space.len(), right: skew.n_fiber() });
        }
        let nf = skew.n_fiber();
        Ok(Self::canonical(skew.product_space(), (0..skew.product_space().len()).map(|c| self.labels[c % nf] as u64)))
    }
}

/// `H(ξ) = −Σ μ(C) ln μ(C)` in nats, with `0·ln 0 = 0`.
pub fn partition_entropy(xi: &Partition) -> f64 {
    entropy_from_sizes(&xi.class_sizes(), xi.space.len())
}

fn entropy_from_sizes(sizes: &[usize], n: usize) -> f64 {
    let n = n as f64;
    sizes
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let m = c as f64 / n;
            -m * m.ln()
        })
        .sum()
}

/// `⋁_{p ∈ lags} Tᵖξ`; a cell's label is the tuple `(ξ(T⁻ᵖc))_p`.
pub fn refine(t: &CellAutomorphism, xi: &Partition, lags: &[i64]) -> Result<Partition> {
    if xi.space != t.space() {
        return Err(Error::SpaceMismatch { left: xi.space.len(), right: t.len() });
    }
    LagPowers::new(t, lags)?.refine(xi)
}

/// The maps `T⁻ᵖ` for one lag set, kept so that many partitions can be
/// refined along the same lags without recomputing powers.
#[derive(Debug, Clone)]
pub struct LagPowers {
    lags: Vec<i64>,
    back: Vec<CellAutomorphism>,
}

impl LagPowers {
    pub fn new(t: &CellAutomorphism, lags: &[i64]) -> Result<Self> {
        Ok(LagPowers { lags: lags.to_vec(), back: lags.iter().map(|&p| t.power(-p)).collect() })
    }

    pub fn lags(&self) -> &[i64] {
        &self.lags
    }

    /// Same result as [`refine`] with the stored system and lags.
    pub fn refine(&self, xi: &Partition) -> Result<Partition> {
        let mut acc = Partition::trivial(xi.space);
        for back in &self.back {
            if xi.space != back.space() {
                return Err(Error::SpaceMismatch { left: xi.space.len(), right: back.len() });
            }
            let raw = back.forward_raw();
            acc = acc.join_with(xi.class_count, |c| xi.labels[raw[c] as usize]);
        }
        Ok(acc)
    }

    /// Same result as [`h_j`] with the stored system and lags.
    pub fn h(&self, xi: &Partition) -> Result<f64> {
        if self.lags.is_empty() {
            return Err(Error::invalid("lag set must be nonempty"));
        }
        Ok(self.refine(xi)?.entropy() / self.lags.len() as f64)
    }
}

/// `h_j(T, ξ) = H(⋁_{p ∈ P_j} Tᵖξ) / |P_j|`.
pub fn h_j(t: &CellAutomorphism, xi: &Partition, lags: &[i64]) -> Result<f64> {
    if xi.space != t.space() {
        return Err(Error::SpaceMismatch { left: xi.space.len(), right: t.len() });
    }
    LagPowers::new(t, lags)?.h(xi)
}

/// How `|P_j|` grows for progression families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthRule {
    /// `L(j) = L`.
    Constant(u64),
    /// `L(j) = c·j`.
    Scaled(u64),
}

impl LengthRule {
    pub fn at(&self, j: u64) -> u64 {
        match *self {
            LengthRule::Constant(l) => l,
            LengthRule::Scaled(c) => c * j,
        }
    }
}

/// A schedule `j ↦ P_j` of finite sets of positive lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceFamily {
    /// `P_j = {j, 2j, …, L(j)·j}`.
    Progression { length: LengthRule },
    /// `P_j = {2^i : bounds[j-1] ≤ i < bounds[j]}`.
    Geometric { bounds: Vec<u32> },
    /// `P_j = sets[j-1]`.
    Explicit { sets: Vec<Vec<i64>> },
}

impl SequenceFamily {
    pub fn progression(length: u64) -> Self {
        SequenceFamily::Progression { length: LengthRule::Constant(length) }
    }

    pub fn lags(&self, j: u64) -> Result<Vec<i64>> {
        if j == 0 {
            return Err(Error::invalid("families are indexed from j = 1"));
        }
        let lags: Vec<i64> = match self {
            SequenceFamily::Progression { length } => {
                let l = length.at(j);
                (1..=l).map(|n| (n * j) as i64).collect()
            }
            SequenceFamily::Geometric { bounds } => {
                let idx = j as usize;
                if idx >= bounds.len() {
                    return Err(Error::OutOfRange { index: idx, available: bounds.len().saturating_sub(1) });
                }
                if bounds[idx] > 62 {
                    return Err(Error::invalid("geometric exponents above 62 overflow the lag type"));
                }
                (bounds[idx - 1]..bounds[idx]).map(|i| 1i64 << i).collect()
            }
            SequenceFamily::Explicit { sets } => {
                let set = sets.get(j as usize - 1).ok_or(Error::OutOfRange { index: j as usize, available: sets.len() })?;
                set.clone()
            }
        };
        if lags.is_empty() || lags.iter().any(|&p| p <= 0) {
            return Err(Error::invalid(format!("P_{j} must be a nonempty set of positive lags")));
        }
        Ok(lags)
    }

    pub fn describe(&self) -> String {
        match self {
            SequenceFamily::Progression { length: LengthRule::Constant(l) } => format!("progression {{j, 2j, …, {l}j}}"),
            SequenceFamily::Progression { length: LengthRule::Scaled(c) } => format!("progression {{j, 2j, …, {c}j·j}}"),
            SequenceFamily::Geometric { bounds } => format!("geometric blocks 2^i, bounds {bounds:?}"),
            SequenceFamily::Explicit { sets } => format!("explicit, {} sets", sets.len()),
        }
    }
}

/// One row of an entropy scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HjRow {
    pub j: u64,
    pub lag_count: usize,
    pub refinement_entropy: f64,
    pub h_j: f64,
}

/// Finite-horizon lower estimate of `h_P(T, ξ) = limsup_j h_j(T, ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HpEstimate {
    /// `max_j h_j` over the scanned range.
    pub value: f64,
    pub argmax_j: u64,
    pub rows: Vec<HjRow>,
    pub horizon: u64,
    pub family: String,
    pub note: String,
}

impl HpEstimate {
    /// CSV body `j,lag_count,refinement_entropy,h_j`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,lag_count,refinement_entropy,h_j\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.17e},{:.17e}\n", r.j, r.lag_count, r.refinement_entropy, r.h_j));
        }
        out
    }
}

pub fn hp_estimate(t: &CellAutomorphism, xi: &Partition, fam: &SequenceFamily, j_range: RangeInclusive<u64>) -> Result<HpEstimate> {
    let (lo, hi) = (*j_range.start(), *j_range.end());
    if lo == 0 || lo > hi {
        return Err(Error::invalid("j range must be a nonempty range starting at 1 or later"));
    }
    let rows = (lo..=hi)
        .into_par_iter()
        .map(|j| {
            let lags = fam.lags(j)?;
            let h = refine(t, xi, &lags)?.entropy();
            Ok(HjRow { j, lag_count: lags.len(), refinement_entropy: h, h_j: h / lags.len() as f64 })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows.iter().fold(&rows[0], |b, r| if r.h_j > b.h_j { r } else { b });
    Ok(HpEstimate {
        value: best.h_j,
        argmax_j: best.j,
        horizon: hi,
        family: fam.describe(),
        note: format!("maximum of h_j over j in {lo}..={hi}; a finite-horizon lower estimate of the limsup, not extrapolated"),
        rows,
    })
}

/// `Σ_p H(Tᵖη) − H(⋁_p Tᵖη)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndependenceDefect {
    /// Zero exactly when `jointly_independent`.
    pub value: f64,
    /// Exact product rule for every atom, checked with integer arithmetic.
    pub jointly_independent: bool,
}

pub fn independence_defect(t: &CellAutomorphism, eta: &Partition, lags: &[i64]) -> Result<IndependenceDefect> {
    if eta.space != t.space() {
        return Err(Error::SpaceMismatch { left: eta.space.len(), right: t.len() });
    }
    if lags.is_empty() {
        return Err(Error::invalid("lag set must be nonempty"));
    }
    let n = eta.space.len() as u128;
    let mut joint = Partition::trivial(eta.space);
    let mut independent = true;
    let mut marginal_sum = 0.0;
    for &p in lags {
        let shifted = eta.push_forward(&t.power(p))?;
        marginal_sum += shifted.entropy();
        if independent {
            independent = pairwise_independent(&joint, &shifted, n);
        }
        joint = joint.join(&shifted)?;
    }
    let value = if independent { 0.0 } else { (marginal_sum - joint.entropy()).max(0.0) };
    Ok(IndependenceDefect { value, jointly_independent: independent })
}

// `μ(a ∩ b) = μ(a) μ(b)` for every pair of atoms, i.e. `n·|a ∩ b| = |a|·|b|`.
fn pairwise_independent(a: &Partition, b: &Partition, n: u128) -> bool {
    let joint = a.join(b).expect("same space");
    if joint.class_count != a.class_count * b.class_count {
        return false;
    }
    let (sa, sb, sj) = (a.class_sizes(), b.class_sizes(), joint.class_sizes());
    let mut seen = vec![false; joint.class_count];
    for c in 0..a.labels.len() {
        let l = joint.labels[c] as usize;
        if seen[l] {
            continue;
        }
        seen[l] = true;
        if n * sj[l] as u128 != sa[a.labels[c] as usize] as u128 * sb[b.labels[c] as usize] as u128 {
            return false;
        }
    }
    true
}

/// Inputs for the conjugated-product entropy experiment.
#[derive(Debug, Clone)]
pub struct Eq2Setup {
    /// Zero-entropy base `S`.
    pub base: CellAutomorphism,
    pub fiber: BernoulliShift,
    /// `J_q`, a skew product over the identity on the same product space.
    pub conjugator: SkewSystem,
    /// Coordinate generating the fiber partition `ξ = X × {w_coord = a}`.
    pub coord: usize,
    /// `P_j = {j, 2j, …, length·j}`.
    pub length: u64,
    pub j_values: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eq2Row {
    pub j: u64,
    /// `h_j(J⁻¹RJ, ξ)`.
    pub h_conjugated: f64,
    /// `h_j(R, Jξ)`.
    pub h_image: f64,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eq2Report {
    pub partition_entropy: f64,
    pub threshold: f64,
    pub max_identity_gap: f64,
    pub rows: Vec<Eq2Row>,
}

/// For `R = S × T` (T Bernoulli) and `R_q = J_q⁻¹RJ_q`, reports
/// `h_j(R_q, ξ)` and `h_j(R, J_qξ)` per `j` and whether `h_j > H(ξ)/2`.
pub fn eq2_experiment(setup: &Eq2Setup) -> Result<Eq2Report> {
    let r = SkewSystem::constant(&setup.base, setup.fiber.automorphism())?;
    let j = &setup.conjugator;
    if !j.is_over_identity() {
        return Err(Error::NotOverIdentity);
    }
    if j.product_space() != r.product_space() || j.n_base() != r.n_base() {
        return Err(Error::SpaceMismatch { left: r.product_space().len(), right: j.product_space().len() });
    }
    let rq = r.conjugate(j)?;
    let xi = setup.fiber.coordinate_partition(setup.coord)?.fiber_lift(&r)?;
    let j_xi = xi.push_forward(j.product())?;
    let h = xi.entropy();
    let fam = SequenceFamily::progression(setup.length);
    let rows = setup
        .j_values
        .par_iter()
        .map(|&jv| {
            let lags = fam.lags(jv)?;
            let h_conjugated = h_j(rq.product(), &xi, &lags)?;
            let h_image = h_j(r.product(), &j_xi, &lags)?;
            Ok(Eq2Row { j: jv, h_conjugated, h_image, bound_holds: h_conjugated > h / 2.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_identity_gap = rows.iter().map(|r| (r.h_conjugated - r.h_image).abs()).fold(0.0, f64::max);
    Ok(Eq2Report { partition_entropy: h, threshold: h / 2.0, max_identity_gap, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellsys::build_skew;
    use crate::zoo::{make_bernoulli_cyclic, make_cyclic_rotation, make_identity, make_random_automorphism};
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn space(n: usize) -> CellSpace {
        CellSpace::new(n).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let s = space(12);
        let three = Partition::from_fn(s, |c| (c % 3) as u64);
        assert!((three.entropy() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(Partition::trivial(s).entropy(), 0.0);
        let quarter = Partition::from_fn(space(4), |c| (c == 0) as u64);
        let expected = 0.25 * 4f64.ln() + 0.75 * (4.0f64 / 3.0).ln();
        assert!((quarter.entropy() - expected).abs() < 1e-15);
    }

    #[test]
    fn labels_are_canonical() {
        let s = space(6);
        let a = Partition::from_labels(s, &[7, 7, 3, 9, 3, 7]).unwrap();
        assert_eq!(a.labels(), &[0, 0, 1, 2, 1, 0]);
        let b = Partition::from_labels(s, &[1, 1, 0, 5, 0, 1]).unwrap();
        assert_eq!(a, b);
        assert!(Partition::from_labels(s, &[0, 1]).is_err());
    }

    #[test]
    fn refine_examples() {
        let s = space(8);
        let xi = Partition::from_fn(s, |c| (c / 3) as u64);
        let id = make_identity(8);
        assert_eq!(refine(&id, &xi, &[0]).unwrap(), xi);
        assert_eq!(refine(&id, &xi, &[1, 4, 9]).unwrap(), xi);
        assert!((h_j(&id, &xi, &[1, 2, 3]).unwrap() - xi.entropy() / 3.0).abs() < 1e-15);

        let b = make_bernoulli_cyclic(2, 16).unwrap();
        let coord0 = b.coordinate_partition(0).unwrap();
        let r = refine(b.automorphism(), &coord0, &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(r.class_count(), 32);
        assert!(r.class_sizes().iter().all(|&c| c == 1 << 11));
        assert!((h_j(b.automorphism(), &coord0, &[1, 2, 3, 4, 5]).unwrap() - LN2).abs() < 1e-12);
    }

    #[test]
    fn refinement_respects_max_entropy_bound() {
        let t = make_cyclic_rotation(30);
        let xi = Partition::from_fn(space(30), |c| (c % 2) as u64);
        for lags in [vec![1], vec![1, 2], vec![3, 5, 7, 11]] {
            let k = lags.len() as u32;
            let bound = (30f64.min(2f64.powi(k as i32))).ln() / lags.len() as f64;
            assert!(h_j(&t, &xi, &lags).unwrap() <= bound + 1e-12);
        }
    }

    #[test]
    fn hp_estimate_examples() {
        let b = make_bernoulli_cyclic(2, 16).unwrap();
        let coord0 = b.coordinate_partition(0).unwrap();
        let est = hp_estimate(b.automorphism(), &coord0, &SequenceFamily::progression(5), 1..=3).unwrap();
        assert!((est.value - LN2).abs() < 1e-12);
        assert_eq!(est.horizon, 3);
        assert!(est.note.contains("not extrapolated"));

        let id = make_identity(64);
        let xi = Partition::from_fn(space(64), |c| (c / 16) as u64);
        let fam = SequenceFamily::Progression { length: LengthRule::Scaled(1) };
        let est = hp_estimate(&id, &xi, &fam, 4..=8).unwrap();
        assert!((est.value - xi.entropy() / 4.0).abs() < 1e-15);
        assert_eq!(est.argmax_j, 4);
    }

    #[test]
    fn rotation_hp_decays() {
        let t = make_cyclic_rotation(1024);
        let xi = Partition::from_fn(space(1024), |c| (c / 256) as u64);
        let mut last = f64::INFINITY;
        for l in [8u64, 16, 32, 64] {
            let est = hp_estimate(&t, &xi, &SequenceFamily::progression(l), 1..=4).unwrap();
            assert!(est.value <= 1024f64.ln() / l as f64 + 1e-12);
            assert!(est.value < last);
            last = est.value;
        }
    }

    #[test]
    fn sequence_families() {
        assert_eq!(SequenceFamily::progression(4).lags(3).unwrap(), vec![3, 6, 9, 12]);
        let g = SequenceFamily::Geometric { bounds: vec![0, 2, 5] };
        assert_eq!(g.lags(1).unwrap(), vec![1, 2]);
        assert_eq!(g.lags(2).unwrap(), vec![4, 8, 16]);
        assert!(g.lags(3).is_err());
        let e = SequenceFamily::Explicit { sets: vec![vec![2, 3], vec![]] };
        assert_eq!(e.lags(1).unwrap(), vec![2, 3]);
        assert!(e.lags(2).is_err());
        assert!(SequenceFamily::progression(2).lags(0).is_err());
    }

    #[test]
    fn independence_defect_examples() {
        let id = make_identity(8);
        let xi = Partition::from_fn(space(8), |c| (c % 3) as u64);
        assert_eq!(independence_defect(&id, &xi, &[1]).unwrap().value, 0.0);

        let b = make_bernoulli_cyclic(2, 16).unwrap();
        let coord0 = b.coordinate_partition(0).unwrap();
        let d = independence_defect(b.automorphism(), &coord0, &[1, 5, 9]).unwrap();
        assert!(d.jointly_independent);
        assert_eq!(d.value, 0.0);

        let eta = b.window_partition(-1, 1).unwrap();
        let lags = |j: i64| (1..=4).map(|n| n * j).collect::<Vec<_>>();
        let d = independence_defect(b.automorphism(), &eta, &lags(3)).unwrap();
        assert!(d.jointly_independent && d.value == 0.0);
        let d = independence_defect(b.automorphism(), &eta, &lags(1)).unwrap();
        assert!(!d.jointly_independent && d.value > 0.1);
    }

    #[test]
    fn eq2_with_trivial_conjugator() {
        let base = make_cyclic_rotation(16);
        let fiber = make_bernoulli_cyclic(2, 12).unwrap();
        let conjugator = SkewSystem::trivial(&make_identity(16), fiber.automorphism().space()).unwrap();
        let report = eq2_experiment(&Eq2Setup { base, fiber, conjugator, coord: 0, length: 3, j_values: vec![1, 2, 3] }).unwrap();
        for row in &report.rows {
            assert!((row.h_conjugated - LN2).abs() < 1e-12);
            assert!(row.bound_holds);
        }
        assert!(report.max_identity_gap < 1e-12);
    }

    #[test]
    fn eq2_with_piecewise_conjugator() {
        let base = make_cyclic_rotation(16);
        let fiber = make_bernoulli_cyclic(2, 12).unwrap();
        let shift = fiber.automorphism().clone();
        let fibers = (0..16).map(|x| if x < 8 { make_identity(4096) } else { shift.clone() }).collect();
        let conjugator = build_skew(&make_identity(16), fibers).unwrap();
        // M = 1: every j > 2 whose windows stay inside the 12-coordinate horizon
        let report = eq2_experiment(&Eq2Setup { base, fiber, conjugator, coord: 0, length: 3, j_values: vec![3, 4] }).unwrap();
        assert!(report.rows.iter().all(|r| r.bound_holds));
        assert!(report.max_identity_gap < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn subadditivity(a in proptest::collection::vec(0u64..4, 48), b in proptest::collection::vec(0u64..3, 48)) {
            let s = space(48);
            let xi = Partition::from_labels(s, &a).unwrap();
            let eta = Partition::from_labels(s, &b).unwrap();
            prop_assert!(xi.join(&eta).unwrap().entropy() <= xi.entropy() + eta.entropy() + 1e-12);
        }

        #[test]
        fn conjugation_invariance(seed in any::<u64>(), phi_seed in any::<u64>(), labels in proptest::collection::vec(0u64..3, 60)) {
            let t = make_random_automorphism(60, seed);
            let phi = make_random_automorphism(60, phi_seed);
            let xi = Partition::from_labels(space(60), &labels).unwrap();
            let lags = [1, 2, 4];
            let conj = t.conjugate_by(&phi).unwrap();
            let pulled = xi.push_forward(&phi.inverse()).unwrap();
            let lhs = refine(&conj, &pulled, &lags).unwrap();
            let rhs = refine(&t, &xi, &lags).unwrap();
            prop_assert_eq!(lhs.class_count(), rhs.class_count());
            let (mut a, mut b) = (lhs.class_sizes(), rhs.class_sizes());
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn product_bound(s_seed in any::<u64>(), t_seed in any::<u64>()) {
            let s = make_random_automorphism(12, s_seed);
            let t = make_random_automorphism(10, t_seed);
            let xi = Partition::from_fn(space(12), |c| (c % 2) as u64);
            let eta = Partition::from_fn(space(10), |c| (c % 3) as u64);
            let prod = crate::cellsys::direct_product(&s, &t).unwrap();
            let tensor = Partition::from_fn(prod.space(), |c| xi.label(c / 10) as u64 * 8 + eta.label(c % 10) as u64);
            let lags = [1, 3, 4];
            let lhs = h_j(&prod, &tensor, &lags).unwrap();
            prop_assert!(lhs <= h_j(&s, &xi, &lags).unwrap() + h_j(&t, &eta, &lags).unwrap() + 1e-12);
        }
    }
}
