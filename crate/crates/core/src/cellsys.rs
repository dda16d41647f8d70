//! Finite probability spaces of equal-mass cells and their automorphisms.
//!
//! A [`CellSpace`] of `n` cells gives every cell mass `1/n`. Measurable sets
//! are [`CellSet`]s, automorphisms are permutations ([`CellAutomorphism`]),
//! and skew products `R(x, y) = (Sx, R_x y)` are [`SkewSystem`]s realized on
//! the paired index `x·n_fib + y`.
//!
//! Serialized forms (JSON):
//!
//! ```text
//! automorphism: {"n": 4, "forward": [1, 2, 3, 0]}
//! skew system:  {"base": {"n": 2, "forward": [1, 0]}, "fibers": [[1, 2, 0], [2, 0, 1]]}
//! ```
//!
//! Arrays are 0-indexed forward maps: `forward[c]` is the image of cell `c`.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::{Error, Rational, Result};

/// Default limit on the number of cells any constructed space may have.
pub const DEFAULT_CELL_CAP: usize = 1 << 24;

/// Hard ceiling: cell indices are stored as `u32`.
const MAX_REPRESENTABLE: u128 = 1 << 32;

/// A probability space of `n ≥ 1` cells, each of mass `1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellSpace {
    n: usize,
}

impl CellSpace {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_cap(n, DEFAULT_CELL_CAP)
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("a cell space needs at least one cell"));
        }
        check_cap(n as u128, cap)?;
        Ok(CellSpace { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_mass(&self) -> Rational {
        Rational::new(1, self.n as i128)
    }

    /// Exact measure of `count` cells.
    pub fn measure_of(&self, count: usize) -> Rational {
        Rational::new(count as i128, self.n as i128)
    }

    fn ensure_same(&self, other: &CellSpace) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SpaceMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }
}

pub fn check_cap(requested: u128, cap: usize) -> Result<()> {
    if requested > cap as u128 || requested > MAX_REPRESENTABLE {
        return Err(Error::CapExceeded { requested, cap });
    }
    Ok(())
}

/// A subset of cells.
#[derive(Clone, PartialEq, Eq)]
pub struct CellSet {
    space: CellSpace,
    members: FixedBitSet,
}

impl fmt::Debug for CellSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CellSet")
            .field("n", &self.space.n)
            .field("members", &self.members.ones().collect::<Vec<_>>())
            .finish()
    }
}

impl CellSet {
    pub fn empty(space: CellSpace) -> Self {
        CellSet { space, members: FixedBitSet::with_capacity(space.n) }
    }

    pub fn full(space: CellSpace) -> Self {
        let mut members = FixedBitSet::with_capacity(space.n);
        members.insert_range(..);
        CellSet { space, members }
    }

    pub fn from_cells<I: IntoIterator<Item = usize>>(space: CellSpace, cells: I) -> Result<Self> {
        let mut set = Self::empty(space);
        for c in cells {
            if c >= space.n {
                return Err(Error::CellOutOfRange { cell: c, n: space.n });
            }
            set.members.insert(c);
        }
        Ok(set)
    }

    /// Cells with index in `start..end` (clamped to the space).
    pub fn interval(space: CellSpace, start: usize, end: usize) -> Self {
        let mut set = Self::empty(space);
        let end = end.min(space.n);
        if start < end {
            set.members.insert_range(start..end);
        }
        set
    }

    pub fn from_predicate(space: CellSpace, mut pred: impl FnMut(usize) -> bool) -> Self {
        let mut set = Self::empty(space);
        for c in 0..space.n {
            if pred(c) {
                set.members.insert(c);
            }
        }
        set
    }

    pub fn space(&self) -> CellSpace {
        self.space
    }

    pub fn count(&self) -> usize {
        self.members.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_clear()
    }

    pub fn measure(&self) -> Rational {
        self.space.measure_of(self.count())
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.members.contains(cell)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.ones()
    }

    pub fn intersection_count(&self, other: &CellSet) -> Result<usize> {
        self.space.ensure_same(&other.space)?;
        Ok(self.members.intersection_count(&other.members))
    }

    pub fn symmetric_difference_count(&self, other: &CellSet) -> Result<usize> {
        self.space.ensure_same(&other.space)?;
        Ok(self.members.symmetric_difference_count(&other.members))
    }

    pub fn intersection(&self, other: &CellSet) -> Result<CellSet> {
        self.space.ensure_same(&other.space)?;
        let mut members = self.members.clone();
        members.intersect_with(&other.members);
        Ok(CellSet { space: self.space, members })
    }

    pub fn complement(&self) -> CellSet {
        let mut members = self.members.clone();
        members.toggle_range(..);
        CellSet { space: self.space, members }
    }

    pub fn indicator(&self) -> CellFunction {
        let values = (0..self.space.n).map(|c| if self.contains(c) { 1.0 } else { 0.0 }).collect();
        CellFunction { space: self.space, values }
    }
}

/// A real function on cells, an element of L²(μ) with `⟨f, g⟩ = (1/n) Σ f g`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFunction {
    space: CellSpace,
    values: Vec<f64>,
}

impl CellFunction {
    pub fn new(space: CellSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.n {
            return Err(Error::SpaceMismatch { left: space.n, right: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("function values must be finite"));
        }
        Ok(CellFunction { space, values })
    }

    pub fn constant(space: CellSpace, value: f64) -> Self {
        CellFunction { space, values: vec![value; space.n] }
    }

    pub fn space(&self) -> CellSpace {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.space.n as f64
    }

    pub fn inner(&self, other: &CellFunction) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s / self.space.n as f64)
    }

    pub fn norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        (s / self.space.n as f64).sqrt()
    }

    /// Scales to unit norm; fails for the zero function.
    pub fn normalized(&self) -> Result<CellFunction> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::invalid("cannot normalize the zero function"));
        }
        Ok(CellFunction { space: self.space, values: self.values.iter().map(|v| v / norm).collect() })
    }

    /// Tensor product `(f ⊗ g)(x, y) = f(x) g(y)` on the paired index.
    pub fn tensor(&self, other: &CellFunction) -> Result<CellFunction> {
        let n = self.space.n as u128 * other.space.n as u128;
        check_cap(n, usize::MAX)?;
        let space = CellSpace { n: n as usize };
        let mut values = Vec::with_capacity(space.n);
        for a in &self.values {
            for b in &other.values {
                values.push(a * b);
            }
        }
        Ok(CellFunction { space, values })
    }
}

/// An invertible map of cells (a measure-preserving automorphism).
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AutomorphismDoc", into = "AutomorphismDoc")]
pub struct CellAutomorphism {
    space: CellSpace,
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl fmt::Debug for CellAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CellAutomorphism").field("n", &self.space.n).field("forward", &self.forward).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct AutomorphismDoc {
    n: usize,
    forward: Vec<usize>,
}

impl TryFrom<AutomorphismDoc> for CellAutomorphism {
    type Error = Error;

    fn try_from(doc: AutomorphismDoc) -> Result<Self> {
        if doc.forward.len() != doc.n {
            return Err(Error::NotAPermutation(format!(
                "declared n = {} but forward has {} entries",
                doc.n,
                doc.forward.len()
            )));
        }
        CellAutomorphism::from_forward(doc.forward)
    }
}

impl From<CellAutomorphism> for AutomorphismDoc {
    fn from(t: CellAutomorphism) -> Self {
        AutomorphismDoc { n: t.space.n, forward: t.forward.iter().map(|&c| c as usize).collect() }
    }
}

impl CellAutomorphism {
    pub fn identity(space: CellSpace) -> Self {
        let forward: Vec<u32> = (0..space.n as u32).collect();
        CellAutomorphism { space, inverse: forward.clone(), forward }
    }

    /// Builds an automorphism from its forward map, checking bijectivity.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        Self::from_forward_capped(forward, DEFAULT_CELL_CAP)
    }

    pub fn from_forward_capped(forward: Vec<usize>, cap: usize) -> Result<Self> {
        let space = CellSpace::with_cap(forward.len(), cap)
            .map_err(|e| match e {
                Error::InvalidParameter(_) => Error::NotAPermutation("empty forward map".into()),
                other => other,
            })?;
        let n = space.n;
        let mut inverse = vec![u32::MAX; n];
        for (c, &img) in forward.iter().enumerate() {
            if img >= n {
                return Err(Error::NotAPermutation(format!("image {img} of cell {c} is out of range")));
            }
            if inverse[img] != u32::MAX {
                return Err(Error::NotAPermutation(format!("cell {img} is hit twice")));
            }
            inverse[img] = c as u32;
        }
        let forward = forward.into_iter().map(|c| c as u32).collect();
        Ok(CellAutomorphism { space, forward, inverse })
    }

    pub(crate) fn from_forward_u32(space: CellSpace, forward: Vec<u32>) -> Self {
        debug_assert_eq!(forward.len(), space.n);
        let mut inverse = vec![0u32; space.n];
        for (c, &img) in forward.iter().enumerate() {
            inverse[img as usize] = c as u32;
        }
        CellAutomorphism { space, forward, inverse }
    }

    pub fn space(&self) -> CellSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.space.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Image of a single cell.
    #[inline]
    pub fn apply(&self, cell: usize) -> usize {
        self.forward[cell] as usize
    }

    /// Preimage of a single cell.
    #[inline]
    pub fn apply_inverse(&self, cell: usize) -> usize {
        self.inverse[cell] as usize
    }

    pub fn forward_map(&self) -> Vec<usize> {
        self.forward.iter().map(|&c| c as usize).collect()
    }

    pub(crate) fn forward_raw(&self) -> &[u32] {
        &self.forward
    }

    pub(crate) fn inverse_raw(&self) -> &[u32] {
        &self.inverse
    }

    pub fn inverse(&self) -> CellAutomorphism {
        CellAutomorphism { space: self.space, forward: self.inverse.clone(), inverse: self.forward.clone() }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(c, &img)| c as u32 == img)
    }

    /// `a ∘ b`: first `b`, then `a`.
    pub fn compose(a: &CellAutomorphism, b: &CellAutomorphism) -> Result<CellAutomorphism> {
        a.space.ensure_same(&b.space)?;
        let forward: Vec<u32> = b.forward.iter().map(|&c| a.forward[c as usize]).collect();
        let inverse: Vec<u32> = a.inverse.iter().map(|&c| b.inverse[c as usize]).collect();
        Ok(CellAutomorphism { space: a.space, forward, inverse })
    }

    /// `Tˢ` for any signed `s`; computed cycle by cycle in O(n).
    pub fn power(&self, s: i64) -> CellAutomorphism {
        if s == 0 {
            return Self::identity(self.space);
        }
        if s == 1 {
            return self.clone();
        }
        if s == -1 {
            return self.inverse();
        }
        let n = self.space.n;
        let mut forward = vec![0u32; n];
        let mut seen = vec![false; n];
        let mut cycle = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            cycle.clear();
            let mut c = start;
            loop {
                seen[c] = true;
                cycle.push(c as u32);
                c = self.forward[c] as usize;
                if c == start {
                    break;
                }
            }
            let len = cycle.len();
            let shift = s.rem_euclid(len as i64) as usize;
            for (i, &c) in cycle.iter().enumerate() {
                forward[c as usize] = cycle[(i + shift) % len];
            }
        }
        Self::from_forward_u32(self.space, forward)
    }

    /// Cycle decomposition; each cycle lists `c, Tc, T²c, …`.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.space.n;
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut c = start;
            loop {
                seen[c] = true;
                cycle.push(c);
                c = self.forward[c] as usize;
                if c == start {
                    break;
                }
            }
            out.push(cycle);
        }
        out
    }

    /// Order of the permutation (lcm of cycle lengths); `None` on u128 overflow.
    pub fn order(&self) -> Option<u128> {
        let mut lens: Vec<u128> = self.cycles().iter().map(|c| c.len() as u128).collect();
        lens.sort_unstable();
        lens.dedup();
        let mut acc: u128 = 1;
        for l in lens {
            let g = gcd(acc, l);
            acc = (acc / g).checked_mul(l)?;
        }
        Some(acc)
    }

    /// `TA = {T c : c ∈ A}`.
    pub fn apply_set(&self, set: &CellSet) -> Result<CellSet> {
        self.space.ensure_same(&set.space)?;
        let mut image = CellSet::empty(self.space);
        for c in set.members.ones() {
            image.members.insert(self.forward[c] as usize);
        }
        Ok(image)
    }

    /// Koopman action `(Tf)(x) = f(T⁻¹x)`.
    pub fn koopman(&self, f: &CellFunction) -> Result<CellFunction> {
        self.space.ensure_same(&f.space)?;
        let values = self.inverse.iter().map(|&pre| f.values[pre as usize]).collect();
        Ok(CellFunction { space: self.space, values })
    }

    /// `Φ⁻¹ T Φ`.
    pub fn conjugate_by(&self, phi: &CellAutomorphism) -> Result<CellAutomorphism> {
        let t_phi = CellAutomorphism::compose(self, phi)?;
        CellAutomorphism::compose(&phi.inverse(), &t_phi)
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `a ∘ b`; free-function form of [`CellAutomorphism::compose`].
pub fn compose(a: &CellAutomorphism, b: &CellAutomorphism) -> Result<CellAutomorphism> {
    CellAutomorphism::compose(a, b)
}

/// `S × T` on `n_s·n_t` cells with pairing `(x, y) ↦ x·n_t + y`.
pub fn direct_product(s: &CellAutomorphism, t: &CellAutomorphism) -> Result<CellAutomorphism> {
    direct_product_with_cap(s, t, DEFAULT_CELL_CAP)
}

pub fn direct_product_with_cap(s: &CellAutomorphism, t: &CellAutomorphism, cap: usize) -> Result<CellAutomorphism> {
    let (ns, nt) = (s.len(), t.len());
    let space = CellSpace::with_cap(ns.checked_mul(nt).ok_or(Error::CapExceeded { requested: ns as u128 * nt as u128, cap })?, cap)?;
    let mut forward = Vec::with_capacity(space.n);
    for x in 0..ns {
        let sx = s.forward[x] * nt as u32;
        for y in 0..nt {
            forward.push(sx + t.forward[y]);
        }
    }
    Ok(CellAutomorphism::from_forward_u32(space, forward))
}

/// A skew product `R(x, y) = (Sx, R_x y)` over a base automorphism.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SkewDoc", into = "SkewDoc")]
pub struct SkewSystem {
    base: CellAutomorphism,
    fiber_space: CellSpace,
    fibers: Vec<CellAutomorphism>,
    product: CellAutomorphism,
}

#[derive(Serialize, Deserialize)]
struct SkewDoc {
    base: CellAutomorphism,
    fibers: Vec<Vec<usize>>,
}

impl TryFrom<SkewDoc> for SkewSystem {
    type Error = Error;

    fn try_from(doc: SkewDoc) -> Result<Self> {
        let fibers = doc.fibers.into_iter().map(CellAutomorphism::from_forward).collect::<Result<Vec<_>>>()?;
        build_skew(&doc.base, fibers)
    }
}

impl From<SkewSystem> for SkewDoc {
    fn from(r: SkewSystem) -> Self {
        SkewDoc { fibers: r.fibers.iter().map(|f| f.forward_map()).collect(), base: r.base }
    }
}

/// Builds `R(x, y) = (Sx, R_x y)`; `fibers[x]` is `R_x`.
pub fn build_skew(base: &CellAutomorphism, fibers: Vec<CellAutomorphism>) -> Result<SkewSystem> {
    build_skew_with_cap(base, fibers, DEFAULT_CELL_CAP)
}

pub fn build_skew_with_cap(base: &CellAutomorphism, fibers: Vec<CellAutomorphism>, cap: usize) -> Result<SkewSystem> {
    let n_base = base.len();
    if fibers.len() != n_base {
        return Err(Error::FiberCountMismatch { expected: n_base, got: fibers.len() });
    }
    let fiber_space = fibers[0].space;
    if fibers.iter().any(|f| f.space != fiber_space) {
        return Err(Error::FiberSpaceMismatch);
    }
    let nf = fiber_space.n;
    let total = n_base as u128 * nf as u128;
    check_cap(total, cap)?;
    let space = CellSpace::with_cap(total as usize, cap)?;
    let mut forward = Vec::with_capacity(space.n);
    for (x, fiber) in fibers.iter().enumerate() {
        let sx = base.forward[x] * nf as u32;
        for y in 0..nf {
            forward.push(sx + fiber.forward[y]);
        }
    }
    let product = CellAutomorphism::from_forward_u32(space, forward);
    Ok(SkewSystem { base: base.clone(), fiber_space, fibers, product })
}

impl SkewSystem {
    /// `S × Id` on the given fiber space.
    pub fn trivial(base: &CellAutomorphism, fiber_space: CellSpace) -> Result<SkewSystem> {
        let id = CellAutomorphism::identity(fiber_space);
        build_skew(base, vec![id; base.len()])
    }

    /// `S × T` as a skew product with constant fiber map.
    pub fn constant(base: &CellAutomorphism, fiber: &CellAutomorphism) -> Result<SkewSystem> {
        build_skew(base, vec![fiber.clone(); base.len()])
    }

    pub fn base(&self) -> &CellAutomorphism {
        &self.base
    }

    pub fn fiber_space(&self) -> CellSpace {
        self.fiber_space
    }

    pub fn fibers(&self) -> &[CellAutomorphism] {
        &self.fibers
    }

    pub fn fiber(&self, x: usize) -> &CellAutomorphism {
        &self.fibers[x]
    }

    pub fn product(&self) -> &CellAutomorphism {
        &self.product
    }

    pub fn product_space(&self) -> CellSpace {
        self.product.space
    }

    pub fn n_base(&self) -> usize {
        self.base.len()
    }

    pub fn n_fiber(&self) -> usize {
        self.fiber_space.n
    }

    #[inline]
    pub fn pair(&self, x: usize, y: usize) -> usize {
        x * self.fiber_space.n + y
    }

    #[inline]
    pub fn unpair(&self, cell: usize) -> (usize, usize) {
        (cell / self.fiber_space.n, cell % self.fiber_space.n)
    }

    /// Member of class **J**: a skew product over the identity.
    pub fn is_over_identity(&self) -> bool {
        self.base.is_identity()
    }

    /// `J⁻¹ ∘ R ∘ J` for `J` over the identity; fiber at `x` is `J_{Sx}⁻¹ R_x J_x`.
    pub fn conjugate(&self, j: &SkewSystem) -> Result<SkewSystem> {
        if !j.is_over_identity() {
            return Err(Error::NotOverIdentity);
        }
        self.base.space.ensure_same(&j.base.space)?;
        self.fiber_space.ensure_same(&j.fiber_space)?;
        let fibers = (0..self.n_base())
            .map(|x| {
                let sx = self.base.apply(x);
                let inner = CellAutomorphism::compose(&self.fibers[x], &j.fibers[x])?;
                CellAutomorphism::compose(&j.fibers[sx].inverse(), &inner)
            })
            .collect::<Result<Vec<_>>>()?;
        build_skew(&self.base, fibers)
    }

    /// `A × Y` on the product space.
    pub fn base_cylinder(&self, a: &CellSet) -> Result<CellSet> {
        self.base.space.ensure_same(&a.space)?;
        let nf = self.fiber_space.n;
        let mut set = CellSet::empty(self.product.space);
        for x in a.iter() {
            set.members.insert_range(x * nf..(x + 1) * nf);
        }
        Ok(set)
    }

    /// `X × B` on the product space.
    pub fn fiber_cylinder(&self, b: &CellSet) -> Result<CellSet> {
        self.fiber_space.ensure_same(&b.space)?;
        let nf = self.fiber_space.n;
        let mut set = CellSet::empty(self.product.space);
        for x in 0..self.n_base() {
            for y in b.iter() {
                set.members.insert(x * nf + y);
            }
        }
        Ok(set)
    }
}

/// Ordered sets `A_1, …, A_{I_max}` with weights `2^{-i}` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFamily {
    space: CellSpace,
    sets: Vec<CellSet>,
}

impl DenseFamily {
    pub fn new(sets: Vec<CellSet>) -> Result<Self> {
        let first = sets.first().ok_or(Error::EmptyFamily)?;
        let space = first.space;
        for s in &sets {
            space.ensure_same(&s.space)?;
        }
        Ok(DenseFamily { space, sets })
    }

    pub fn space(&self) -> CellSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// `A_i`, 1-based.
    pub fn set(&self, i: usize) -> &CellSet {
        &self.sets[i - 1]
    }

    pub fn sets(&self) -> &[CellSet] {
        &self.sets
    }

    /// First `n` sets; fails when `n` is 0 or exceeds the family length.
    pub fn prefix(&self, n: usize) -> Result<&[CellSet]> {
        if n == 0 || n > self.sets.len() {
            return Err(Error::OutOfRange { index: n, available: self.sets.len() });
        }
        Ok(&self.sets[..n])
    }

    /// Weight of the 1-based position `i`.
    pub fn weight(i: usize) -> Rational {
        Rational::new(1, 1i128 << i.min(126))
    }

    pub(crate) fn ensure_space(&self, space: CellSpace) -> Result<()> {
        self.space.ensure_same(&space)
    }
}

/// Truncated Halmos distance with its tail bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalmosDistance {
    #[serde(skip)]
    pub exact: Rational,
    pub value: f64,
    /// Bound on the omitted terms `i > I_max`.
    pub tail_bound: f64,
}

/// `Σ_{i ≤ I_max} 2^{-i} (μ(SA_i Δ TA_i) + μ(S⁻¹A_i Δ T⁻¹A_i))`.
pub fn halmos_distance(s: &CellAutomorphism, t: &CellAutomorphism, fam: &DenseFamily) -> Result<HalmosDistance> {
    if fam.is_empty() {
        return Err(Error::EmptyFamily);
    }
    s.space.ensure_same(&t.space)?;
    fam.ensure_space(s.space)?;
    let (s_inv, t_inv) = (s.inverse(), t.inverse());
    let mut total = Rational::from_integer(0);
    for (idx, a) in fam.sets.iter().enumerate() {
        let fwd = s.apply_set(a)?.symmetric_difference_count(&t.apply_set(a)?)?;
        let bwd = s_inv.apply_set(a)?.symmetric_difference_count(&t_inv.apply_set(a)?)?;
        total += DenseFamily::weight(idx + 1) * s.space.measure_of(fwd + bwd);
    }
    let i_max = fam.len() as i32;
    Ok(HalmosDistance { value: crate::to_f64(&total), exact: total, tail_bound: 2f64.powi(1 - i_max) * 2.0 })
}

/// Halmos distance from `t` to the identity, computed directly from moved cells.
pub fn halmos_distance_to_identity(t: &CellAutomorphism, fam: &DenseFamily) -> Result<HalmosDistance> {
    halmos_distance(t, &CellAutomorphism::identity(t.space), fam)
}
