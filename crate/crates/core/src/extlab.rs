//! Extension diagnostics: cocycles, the relative weak mixing functional,
//! cocycle recurrence, slice probes for independent factors, seeded random
//! extension ensembles and per-block weak-limit profiles.
//!
//! The cocycle of a skew product `R(x, y) = (Sx, R_x y)` is
//! `C(x, n) = R_{S^{n−1}x} ∘ … ∘ R_{Sx} ∘ R_x`, so `Rⁿ(x, y) = (Sⁿx, C(x, n)y)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{phi_mix, psi_partial, weak_limit_distance, AdmissibleFunction};
use crate::cellsys::{build_skew_with_cap, check_cap, halmos_distance_to_identity, CellAutomorphism, CellFunction, CellSet, DenseFamily, SkewSystem, DEFAULT_CELL_CAP};
use crate::rng;
use crate::seqentropy::{LagPowers, Partition, SequenceFamily};
use crate::zoo::{canonical_family, make_bernoulli_cyclic_capped, SystemDescriptor};
use crate::{to_f64, Error, Rational, Result};

fn check_base_cell(skew: &SkewSystem, x: usize) -> Result<()> {
    if x >= skew.n_base() {
        return Err(Error::CellOutOfRange { cell: x, n: skew.n_base() });
    }
    Ok(())
}

/// `C(x, n)` by direct composition.
pub fn cocycle(skew: &SkewSystem, x: usize, n: u64) -> Result<CellAutomorphism> {
    check_base_cell(skew, x)?;
    let mut acc = CellAutomorphism::identity(skew.fiber_space());
    let mut point = x;
    for _ in 0..n {
        acc = CellAutomorphism::compose(skew.fiber(point), &acc)?;
        point = skew.base().apply(point);
    }
    Ok(acc)
}

/// Cocycle evaluator that memoizes `C(x, 0..=n)` along base orbits.
///
/// Stored fiber maps are counted against a budget of fiber cells; once the
/// budget is spent, further orbits are computed without being stored. Results
/// do not depend on the budget.
pub struct Cocycle<'a> {
    skew: &'a SkewSystem,
    budget: usize,
    state: Mutex<CacheState>,
}

#[derive(Default)]
struct CacheState {
    orbits: HashMap<usize, Arc<Vec<CellAutomorphism>>>,
    stored: usize,
}

impl<'a> Cocycle<'a> {
    /// Default budget: `2²⁴` stored fiber cells.
    pub fn new(skew: &'a SkewSystem) -> Self {
        Self::with_budget(skew, 1 << 24)
    }

    pub fn with_budget(skew: &'a SkewSystem, budget: usize) -> Self {
        Cocycle { skew, budget, state: Mutex::new(CacheState::default()) }
    }

    pub fn skew(&self) -> &SkewSystem {
        self.skew
    }

    /// `[C(x, 0), C(x, 1), …, C(x, n_max)]`.
    pub fn orbit(&self, x: usize, n_max: u64) -> Result<Arc<Vec<CellAutomorphism>>> {
        check_base_cell(self.skew, x)?;
        let needed = usize::try_from(n_max).map_err(|_| Error::invalid("cocycle length too large"))? + 1;
        let cached = self.state.lock().expect("cache lock").orbits.get(&x).cloned();
        if let Some(orbit) = &cached {
            if orbit.len() >= needed {
                return Ok(Arc::clone(orbit));
            }
        }
        let mut maps: Vec<CellAutomorphism> = match &cached {
            Some(orbit) => orbit.as_ref().clone(),
            None => vec![CellAutomorphism::identity(self.skew.fiber_space())],
        };
        let mut point = self.skew.base().power(maps.len() as i64 - 1).apply(x);
        while maps.len() < needed {
            let next = CellAutomorphism::compose(self.skew.fiber(point), maps.last().expect("nonempty"))?;
            maps.push(next);
            point = self.skew.base().apply(point);
        }
        let orbit = Arc::new(maps);
        let mut state = self.state.lock().expect("cache lock");
        let previous = cached.map_or(0, |o| o.len());
        let extra = (orbit.len() - previous) * self.skew.n_fiber();
        if state.stored + extra <= self.budget {
            state.stored += extra;
            state.orbits.insert(x, Arc::clone(&orbit));
        }
        Ok(orbit)
    }

    pub fn at(&self, x: usize, n: u64) -> Result<CellAutomorphism> {
        Ok(self.orbit(x, n)?[n as usize].clone())
    }

    /// Fiber cells currently held by the cache.
    pub fn cached_cells(&self) -> usize {
        self.state.lock().expect("cache lock").stored
    }
}

/// `max_{i,k ≤ N} (1/n_base)·Σ_x (1/j)·Σ_{n=1..j} (μ(C(x,n)A_i ∩ A_k) − μ(A_i)μ(A_k))²`.
pub fn rwm_functional(skew: &SkewSystem, fam: &DenseFamily, n: usize, j: u64) -> Result<Rational> {
    if j == 0 {
        return Err(Error::invalid("j must be at least 1"));
    }
    if fam.space() != skew.fiber_space() {
        return Err(Error::SpaceMismatch { left: skew.n_fiber(), right: fam.space().len() });
    }
    let sets = fam.prefix(n)?;
    let m = skew.n_fiber() as i128;
    let sizes: Vec<i128> = sets.iter().map(|a| a.count() as i128).collect();
    // Σ over x and n of (m·|C A_i ∩ A_k| − |A_i||A_k|)², one entry per (i, k).
    let per_x = (0..skew.n_base())
        .into_par_iter()
        .map(|x| {
            let mut sums = vec![0i128; n * n];
            let mut acc = CellAutomorphism::identity(skew.fiber_space());
            let mut point = x;
            for _ in 0..j {
                acc = CellAutomorphism::compose(skew.fiber(point), &acc)?;
                point = skew.base().apply(point);
                for (i, a) in sets.iter().enumerate() {
                    let image = acc.apply_set(a)?;
                    for (k, b) in sets.iter().enumerate() {
                        let diff = m * image.intersection_count(b)? as i128 - sizes[i] * sizes[k];
                        sums[i * n + k] += diff * diff;
                    }
                }
            }
            Ok(sums)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut totals = vec![0i128; n * n];
    for sums in per_x {
        for (t, s) in totals.iter_mut().zip(sums) {
            *t += s;
        }
    }
    let worst = totals.into_iter().max().expect("N ≥ 1");
    Ok(Rational::new(worst, m.pow(4) * skew.n_base() as i128 * j as i128))
}

/// `max_{i,k ≤ N} (μ(A_i ∩ A_k) − μ(A_i)μ(A_k))²`, the value of
/// [`rwm_functional`] on `S × Id` for every `j`.
pub fn rwm_trivial_value(fam: &DenseFamily, n: usize) -> Result<Rational> {
    let sets = fam.prefix(n)?;
    let mut worst = Rational::from_integer(0);
    for a in sets {
        for b in sets {
            let d = a.intersection(b)?.measure() - a.measure() * b.measure();
            worst = worst.max(d * d);
        }
    }
    Ok(worst)
}

/// `Π_{p ∈ lags} μ({x ∈ A : Sᵖx ∈ A, ρ(C(x,p), Id) < 1/N})`, with `ρ` the
/// truncated Halmos distance over `fiber_fam`, compared exactly.
///
/// The cocycle `C(x, p)` runs from `x` to `Sᵖx`, so both endpoints are
/// required to lie in `A`. For `S × Id` each factor is `μ(A ∩ S⁻ᵖA)`, which
/// equals `μ(A ∩ SᵖA)`.
pub fn recurrence_functional(skew: &SkewSystem, a: &CellSet, lags: &[u64], n: u64, fiber_fam: &DenseFamily) -> Result<Rational> {
    if a.space() != skew.base().space() {
        return Err(Error::SpaceMismatch { left: skew.n_base(), right: a.space().len() });
    }
    if a.is_empty() {
        return Err(Error::invalid("A must have positive measure"));
    }
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let radius = Rational::new(1, n as i128);
    let cocycles = Cocycle::new(skew);
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let members: Vec<usize> = a.iter().collect();
    // For each x ∈ A, the lags at which x is counted.
    let hits = members
        .par_iter()
        .map(|&x| {
            let orbit = cocycles.orbit(x, max_lag)?;
            let mut row = Vec::with_capacity(lags.len());
            for &p in lags {
                let counted = a.contains(skew.base().power(p as i64).apply(x)) && halmos_distance_to_identity(&orbit[p as usize], fiber_fam)?.exact < radius;
                row.push(counted);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let space = a.space();
    let mut product = Rational::from_integer(1);
    for (idx, _) in lags.iter().enumerate() {
        let count = hits.iter().filter(|row| row[idx]).count();
        product *= space.measure_of(count);
    }
    Ok(product)
}

/// Fiber-mass slices of a product-space set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceProfile {
    /// `μ⊗μ` of the set.
    #[serde(serialize_with = "ser_rational")]
    pub total: Rational,
    /// `h(x) = μ(y : (x, y) ∈ set)`.
    #[serde(serialize_with = "ser_rationals")]
    pub slices: Vec<Rational>,
    /// `max_x |h(x) − total|`.
    #[serde(serialize_with = "ser_rational")]
    pub defect: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagSlices {
    pub lag: u64,
    /// Slices of `E ∩ RᵖE`.
    pub profile: SliceProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorProbe {
    pub set: SliceProfile,
    pub lags: Vec<LagSlices>,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_rationals<S: serde::Serializer>(rs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(rs.iter().map(|r| r.to_string()))
}

fn slice_profile(skew: &SkewSystem, set: &CellSet) -> SliceProfile {
    let nf = skew.n_fiber();
    let mut counts = vec![0usize; skew.n_base()];
    for cell in set.iter() {
        counts[cell / nf] += 1;
    }
    let fiber_space = skew.fiber_space();
    let slices: Vec<Rational> = counts.iter().map(|&c| fiber_space.measure_of(c)).collect();
    let total = set.measure();
    let defect = slices.iter().map(|&h| if h > total { h - total } else { total - h }).max().expect("nonempty base");
    SliceProfile { total, slices, defect }
}

/// Slices `h(x)` of `E` and `h_p(x)` of `E ∩ RᵖE` with their constancy defects.
pub fn independent_factor_probe(skew: &SkewSystem, e: &CellSet, lags: &[u64]) -> Result<FactorProbe> {
    if e.space() != skew.product_space() {
        return Err(Error::SpaceMismatch { left: skew.product_space().len(), right: e.space().len() });
    }
    let lag_rows = lags
        .iter()
        .map(|&p| {
            let moved = skew.product().power(p as i64).apply_set(e)?;
            Ok(LagSlices { lag: p, profile: slice_profile(skew, &e.intersection(&moved)?) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FactorProbe { set: slice_profile(skew, e), lags: lag_rows })
}

/// How fiber maps are drawn for each base cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Sampler {
    /// Uniform random permutation of the fiber.
    UniformPermutations,
    /// `transpositions` random transpositions of distinct points applied to the identity.
    NearIdentity { transpositions: usize },
}

/// A seeded ensemble of random extensions of one base system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub base: SystemDescriptor,
    pub fiber_size: usize,
    pub sampler: Sampler,
    pub trials: usize,
    pub master_seed: u64,
}

impl EnsembleSpec {
    /// Seed of trial `trial`, derived from the master seed.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        rng::derive_seed(self.master_seed, trial as u64)
    }

    /// Rejects specs whose product space would exceed `cap` cells.
    pub fn check_cap(&self, cap: usize) -> Result<()> {
        check_cap(self.base.cell_count().saturating_mul(self.fiber_size as u128), cap)
    }

    fn validate(&self) -> Result<()> {
        if self.fiber_size == 0 {
            return Err(Error::invalid("fiber size must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trial count must be at least 1"));
        }
        Ok(())
    }
}

fn sample_fibers(spec: &EnsembleSpec, n_base: usize, trial: usize) -> Result<Vec<CellAutomorphism>> {
    let space = crate::CellSpace::new(spec.fiber_size)?;
    let mut g = rng::generator(spec.trial_seed(trial));
    let m = spec.fiber_size;
    let fibers = (0..n_base)
        .map(|_| {
            let mut forward: Vec<usize> = (0..m).collect();
            match spec.sampler {
                Sampler::UniformPermutations => rng::shuffle(&mut g, &mut forward),
                Sampler::NearIdentity { transpositions } if m >= 2 => {
                    for _ in 0..transpositions {
                        let a = rng::below(&mut g, m as u64) as usize;
                        let mut b = rng::below(&mut g, m as u64 - 1) as usize;
                        if b >= a {
                            b += 1;
                        }
                        forward.swap(a, b);
                    }
                }
                Sampler::NearIdentity { .. } => {}
            }
            CellAutomorphism::from_forward(forward)
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert!(fibers.iter().all(|f| f.space() == space));
    Ok(fibers)
}

/// The extension of trial `trial`: base from the descriptor, fibers drawn
/// from the trial's derived seed.
pub fn sample_extension(spec: &EnsembleSpec, trial: usize) -> Result<SkewSystem> {
    sample_extension_with_cap(spec, trial, DEFAULT_CELL_CAP)
}

pub fn sample_extension_with_cap(spec: &EnsembleSpec, trial: usize, cap: usize) -> Result<SkewSystem> {
    spec.validate()?;
    if trial >= spec.trials {
        return Err(Error::OutOfRange { index: trial, available: spec.trials });
    }
    spec.check_cap(cap)?;
    let base = spec.base.build_with_cap(cap)?.automorphism;
    let fibers = sample_fibers(spec, base.len(), trial)?;
    build_skew_with_cap(&base, fibers, cap)
}

/// Which functional a lift experiment evaluates per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "selector")]
pub enum Selector {
    /// `min_lag ψ_a(N, lag, R)` on the product space's canonical family;
    /// witness when below `1/N`.
    ARigidity {
        #[serde(with = "rational_text")]
        a: Rational,
        n_sets: usize,
        lags: Vec<u64>,
        i_max: usize,
    },
    /// `min_lag φ(N, lag, R)` on the product space's canonical family;
    /// witness when below `1/N`.
    WeakMixingPhi { n_sets: usize, lags: Vec<u64>, i_max: usize },
    /// RWM functional on the fiber's canonical family; witness when strictly
    /// below the `S × Id` value.
    Rwm { n_sets: usize, j: u64, i_max: usize },
    /// Sampled fibers define `J` over the identity; `R_q = J⁻¹(S × T)J` with
    /// `T` the Bernoulli shift on `k^L` fiber cells. Value `min_j h_j(R_q, ξ)`
    /// for `ξ` the fiber coordinate partition; witness when above `H(ξ)/2`.
    HpBlowup { alphabet: usize, window: usize, coord: usize, length: u64, j_values: Vec<u64> },
}

mod rational_text {
    use crate::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        crate::asymptotics::parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

impl Selector {
    pub fn name(&self) -> &'static str {
        match self {
            Selector::ARigidity { .. } => "a_rigidity",
            Selector::WeakMixingPhi { .. } => "weak_mixing_phi",
            Selector::Rwm { .. } => "rwm",
            Selector::HpBlowup { .. } => "hp_blowup",
        }
    }

    fn threshold_text(&self, control: Option<Rational>) -> String {
        match self {
            Selector::ARigidity { n_sets, .. } | Selector::WeakMixingPhi { n_sets, .. } => format!("value < 1/{n_sets}"),
            Selector::Rwm { .. } => format!("value < S×Id control {}", control.map_or_else(String::new, |c| c.to_string())),
            Selector::HpBlowup { .. } => "value > H(xi)/2".to_string(),
        }
    }

    fn horizon_text(&self) -> String {
        match self {
            Selector::ARigidity { lags, .. } | Selector::WeakMixingPhi { lags, .. } => format!("lags {lags:?}"),
            Selector::Rwm { j, .. } => format!("j = {j}"),
            Selector::HpBlowup { j_values, length, .. } => format!("j in {j_values:?}, |P_j| = {length}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub value: f64,
    /// Exact value when the functional is rational.
    pub exact: Option<String>,
    pub witness: bool,
}

/// Per-trial values plus the observed witness fraction at the stated horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub selector: String,
    pub spec: EnsembleSpec,
    pub threshold: String,
    pub horizon: String,
    pub family_note: String,
    pub rows: Vec<TrialRow>,
    pub witness_count: usize,
    pub observed_fraction: f64,
}

impl EnsembleReport {
    /// CSV body `trial,value,witness`, sorted by trial.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,value,witness\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.trial, r.value, u8::from(r.witness)));
        }
        out
    }
}

struct Prepared {
    control: Option<Rational>,
    bernoulli: Option<BernoulliSetup>,
    family_note: String,
}

/// `R = S × T`, the lifted coordinate partition `ξ`, `H(ξ)` and the powers
/// of `R` for every scheduled lag set; shared by all trials.
struct BernoulliSetup {
    r: SkewSystem,
    xi: Partition,
    entropy: f64,
    powers: Vec<LagPowers>,
}

fn prepare(spec: &EnsembleSpec, selector: &Selector, cap: usize) -> Result<Prepared> {
    let base = spec.base.build_with_cap(cap)?.automorphism;
    let fiber_space = crate::CellSpace::with_cap(spec.fiber_size, cap)?;
    match selector {
        Selector::Rwm { n_sets, i_max, .. } => {
            let fam = canonical_family(fiber_space, *i_max)?;
            Ok(Prepared {
                control: Some(rwm_trivial_value(&fam, *n_sets)?),
                bernoulli: None,
                family_note: format!("fiber canonical dyadic family, I_max = {i_max}, N = {n_sets}"),
            })
        }
        Selector::HpBlowup { alphabet, window, coord, length, j_values } => {
            let shift = make_bernoulli_cyclic_capped(*alphabet, *window, cap)?;
            if shift.space().len() != spec.fiber_size {
                return Err(Error::invalid(format!("hp_blowup needs fiber_size = k^L = {}, got {}", shift.space().len(), spec.fiber_size)));
            }
            let r = build_skew_with_cap(&base, vec![shift.automorphism().clone(); base.len()], cap)?;
            let xi = shift.coordinate_partition(*coord)?.fiber_lift(&r)?;
            let entropy = xi.entropy();
            let fam = SequenceFamily::progression(*length);
            let powers = j_values.iter().map(|&jv| LagPowers::new(r.product(), &fam.lags(jv)?)).collect::<Result<Vec<_>>>()?;
            let setup = BernoulliSetup { r, xi, entropy, powers };
            Ok(Prepared { control: None, bernoulli: Some(setup), family_note: format!("fiber coordinate-{coord} partition of bernoulli_cyclic({alphabet},{window})") })
        }
        Selector::ARigidity { i_max, .. } | Selector::WeakMixingPhi { i_max, .. } => {
            Ok(Prepared { control: None, bernoulli: None, family_note: format!("product-space canonical dyadic family, I_max = {i_max}") })
        }
    }
}

fn run_trial(spec: &EnsembleSpec, selector: &Selector, prepared: &Prepared, trial: usize, cap: usize) -> Result<TrialRow> {
    let seed = spec.trial_seed(trial);
    let sampled = || sample_extension_with_cap(spec, trial, cap);
    let exact_row = |value: Rational, witness: bool| TrialRow { trial, seed, value: to_f64(&value), exact: Some(value.to_string()), witness };
    match selector {
        Selector::ARigidity { a, n_sets, lags, i_max } => {
            let skew = sampled()?;
            let fam = canonical_family(skew.product_space(), *i_max)?;
            let value = min_over(lags, |lag| psi_partial(skew.product(), &fam, *a, *n_sets, lag))?;
            Ok(exact_row(value, value < Rational::new(1, *n_sets as i128)))
        }
        Selector::WeakMixingPhi { n_sets, lags, i_max } => {
            let skew = sampled()?;
            let fam = canonical_family(skew.product_space(), *i_max)?;
            let value = min_over(lags, |lag| phi_mix(skew.product(), &fam, *n_sets, lag))?;
            Ok(exact_row(value, value < Rational::new(1, *n_sets as i128)))
        }
        Selector::Rwm { n_sets, j, i_max } => {
            let skew = sampled()?;
            let fam = canonical_family(skew.fiber_space(), *i_max)?;
            let value = rwm_functional(&skew, &fam, *n_sets, *j)?;
            Ok(exact_row(value, value < prepared.control.expect("rwm control")))
        }
        Selector::HpBlowup { .. } => {
            // h_j(J⁻¹RJ, ξ) = h_j(R, Jξ), and Jξ labels (x, y) by ξ(x, J_x⁻¹y),
            // so only the transported partition depends on the trial.
            let setup = prepared.bernoulli.as_ref().expect("bernoulli setup");
            let fibers = sample_fibers(spec, setup.r.n_base(), trial)?;
            let r = &setup.r;
            let j_xi = Partition::from_fn(r.product_space(), |c| {
                let (x, y) = r.unpair(c);
                setup.xi.label(r.pair(x, fibers[x].apply_inverse(y))) as u64
            });
            let mut value = f64::INFINITY;
            for powers in &setup.powers {
                value = value.min(powers.h(&j_xi)?);
            }
            Ok(TrialRow { trial, seed, value, exact: None, witness: value > setup.entropy / 2.0 })
        }
    }
}

fn min_over(lags: &[u64], mut f: impl FnMut(u64) -> Result<Rational>) -> Result<Rational> {
    let mut best: Option<Rational> = None;
    for &lag in lags {
        let v = f(lag)?;
        best = Some(best.map_or(v, |b| b.min(v)));
    }
    best.ok_or_else(|| Error::invalid("lag list must be nonempty"))
}

/// Runs the selector on every trial of the ensemble; trials run in parallel
/// and rows are reported in trial order.
pub fn lift_experiment(spec: &EnsembleSpec, selector: &Selector) -> Result<EnsembleReport> {
    lift_experiment_with_cap(spec, selector, DEFAULT_CELL_CAP)
}

pub fn lift_experiment_with_cap(spec: &EnsembleSpec, selector: &Selector, cap: usize) -> Result<EnsembleReport> {
    spec.validate()?;
    spec.check_cap(cap)?;
    let prepared = prepare(spec, selector, cap)?;
    let rows = (0..spec.trials).into_par_iter().map(|t| run_trial(spec, selector, &prepared, t, cap)).collect::<Result<Vec<_>>>()?;
    let witness_count = rows.iter().filter(|r| r.witness).count();
    Ok(EnsembleReport {
        selector: selector.name().to_string(),
        spec: spec.clone(),
        threshold: selector.threshold_text(prepared.control),
        horizon: selector.horizon_text(),
        family_note: prepared.family_note,
        witness_count,
        observed_fraction: witness_count as f64 / rows.len() as f64,
        rows,
    })
}

/// Fit of one base block against the candidate polynomials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockFit {
    pub block: u32,
    pub cells: usize,
    /// Per candidate: max over lags of the block-averaged weak-limit distance.
    pub distances: Vec<f64>,
    pub best: usize,
    /// Second-smallest minus smallest distance; absent with one candidate.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyProfile {
    pub lags: Vec<u64>,
    pub blocks: Vec<BlockFit>,
}

/// For a skew product over the identity, fits each base block's fibers
/// `T_x` against admissible candidates along the given lags.
pub fn family_profile(skew: &SkewSystem, blocks: &Partition, candidates: &[AdmissibleFunction], lags: &[u64], tests: &[CellFunction], n: usize) -> Result<FamilyProfile> {
    if !skew.is_over_identity() {
        return Err(Error::NotOverIdentity);
    }
    if blocks.space() != skew.base().space() {
        return Err(Error::SpaceMismatch { left: skew.n_base(), right: blocks.space().len() });
    }
    if candidates.is_empty() || lags.is_empty() {
        return Err(Error::invalid("candidates and lags must be nonempty"));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); blocks.class_count()];
    for x in 0..skew.n_base() {
        members[blocks.label(x) as usize].push(x);
    }
    let fits = members
        .par_iter()
        .enumerate()
        .map(|(label, cells)| {
            let distances = candidates
                .iter()
                .map(|p| {
                    let mut worst: f64 = 0.0;
                    for &lag in lags {
                        let mut total = 0.0;
                        for &x in cells {
                            total += weak_limit_distance(skew.fiber(x), lag, p, tests, n)?;
                        }
                        worst = worst.max(total / cells.len() as f64);
                    }
                    Ok(worst)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut order: Vec<usize> = (0..distances.len()).collect();
            order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
            let margin = order.get(1).map(|&second| distances[second] - distances[order[0]]);
            Ok(BlockFit { block: label as u32, cells: cells.len(), best: order[0], margin, distances })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyProfile { lags: lags.to_vec(), blocks: fits })
}
