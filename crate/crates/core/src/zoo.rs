//! Named witness systems: identity, cyclic rotations, odometers, cyclic
//! Bernoulli shifts and seeded random automorphisms, plus canonical dense
//! families and coordinate partitions.
//!
//! Descriptor grammar, used by configs and the CLI:
//!
//! ```text
//! identity:n=<cells>
//! cyclic_rotation:n=<cells>
//! odometer:b=<base>,l=<levels>
//! bernoulli_cyclic:k=<alphabet>,L=<window>
//! random_permutation:n=<cells>,seed=<u64>
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cellsys::{check_cap, CellAutomorphism, CellSet, CellSpace, DenseFamily, DEFAULT_CELL_CAP};
use crate::rng;
use crate::seqentropy::Partition;
use crate::{Error, Result};

pub fn make_identity(n: usize) -> CellAutomorphism {
    CellAutomorphism::identity(CellSpace::new(n).expect("n ≥ 1 within the default cap"))
}

/// `c ↦ c + 1 mod n`.
pub fn make_cyclic_rotation(n: usize) -> CellAutomorphism {
    let space = CellSpace::new(n).expect("n ≥ 1 within the default cap");
    CellAutomorphism::from_forward_u32(space, (0..n as u32).map(|c| (c + 1) % n as u32).collect())
}

/// Denominators for cyclic approximants of the golden rotation: 1, 2, 3, 5, 8, …
pub fn fibonacci_schedule(count: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    let (mut a, mut b) = (1usize, 2usize);
    for _ in 0..count {
        out.push(a);
        (a, b) = (b, a + b);
    }
    out
}

fn checked_pow(base: usize, exp: usize, cap: usize) -> Result<usize> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
        if acc > cap as u128 {
            break;
        }
    }
    check_cap(acc, cap)?;
    Ok(acc as usize)
}

/// The +1 adding machine on digit strings `d_0 d_1 … d_{l−1}` over `{0..b−1}`.
///
/// The carry enters at `d_0`. Cells are indexed by `Σ d_i b^{l−1−i}`, so
/// `d_0` is the least significant digit of the *reversed* string and the
/// canonical dyadic blocks (for `b = 2`) are the odometer's cylinder sets.
pub fn make_odometer(b: usize, l: usize) -> Result<CellAutomorphism> {
    make_odometer_capped(b, l, DEFAULT_CELL_CAP)
}

pub fn make_odometer_capped(b: usize, l: usize, cap: usize) -> Result<CellAutomorphism> {
    if b < 2 || l < 1 {
        return Err(Error::invalid("odometer needs base ≥ 2 and levels ≥ 1"));
    }
    let n = checked_pow(b, l, cap)?;
    let space = CellSpace::with_cap(n, cap)?;
    let mut digits = vec![0usize; l];
    let index = |d: &[usize]| d.iter().fold(0usize, |acc, &x| acc * b + x);
    let mut forward = vec![0u32; n];
    for _ in 0..n {
        let from = index(&digits);
        // add one at d_0 with carry toward d_{l-1}
        for d in digits.iter_mut() {
            *d += 1;
            if *d < b {
                break;
            }
            *d = 0;
        }
        forward[from] = index(&digits) as u32;
    }
    Ok(CellAutomorphism::from_forward_u32(space, forward))
}

/// Uniform random permutation of `n` cells from the documented generator
/// (see [`crate::rng`]).
pub fn make_random_automorphism(n: usize, seed: u64) -> CellAutomorphism {
    let space = CellSpace::new(n).expect("n ≥ 1 within the default cap");
    let mut rng = rng::generator(seed);
    let mut forward: Vec<u32> = (0..n as u32).collect();
    rng::shuffle(&mut rng, &mut forward);
    CellAutomorphism::from_forward_u32(space, forward)
}

/// Cyclic coordinate shift on words `w ∈ {0..k−1}^L`, indexed `Σ w_i k^i`.
///
/// `(Tw)_i = w_{i−1 mod L}`, so `Tʲ{w_c = a} = {w_{c+j} = a}`. Events read
/// from coordinate windows whose shifted copies are disjoint mod `L` are
/// exactly independent; beyond that horizon the finite model is periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliShift {
    alphabet: usize,
    window: usize,
    automorphism: CellAutomorphism,
}

pub fn make_bernoulli_cyclic(k: usize, window: usize) -> Result<BernoulliShift> {
    make_bernoulli_cyclic_capped(k, window, DEFAULT_CELL_CAP)
}

pub fn make_bernoulli_cyclic_capped(k: usize, window: usize, cap: usize) -> Result<BernoulliShift> {
    if k < 2 || window < 2 {
        return Err(Error::invalid("bernoulli_cyclic needs alphabet ≥ 2 and window ≥ 2"));
    }
    let n = checked_pow(k, window, cap)?;
    let space = CellSpace::with_cap(n, cap)?;
    let top = n / k;
    let forward = (0..n).map(|c| ((c % top) * k + c / top) as u32).collect();
    Ok(BernoulliShift { alphabet: k, window, automorphism: CellAutomorphism::from_forward_u32(space, forward) })
}

impl BernoulliShift {
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn automorphism(&self) -> &CellAutomorphism {
        &self.automorphism
    }

    pub fn space(&self) -> CellSpace {
        self.automorphism.space()
    }

    fn wrap(&self, coord: i64) -> usize {
        coord.rem_euclid(self.window as i64) as usize
    }

    /// Symbol `w_coord` of the word at `cell` (coordinates taken mod `L`).
    pub fn symbol(&self, cell: usize, coord: i64) -> usize {
        let c = self.wrap(coord);
        (cell / self.alphabet.pow(c as u32)) % self.alphabet
    }

    /// `{w : w_coord = symbol}`.
    pub fn coordinate_set(&self, coord: i64, symbol: usize) -> Result<CellSet> {
        if symbol >= self.alphabet {
            return Err(Error::invalid(format!("symbol {symbol} outside alphabet {}", self.alphabet)));
        }
        Ok(CellSet::from_predicate(self.space(), |c| self.symbol(c, coord) == symbol))
    }

    /// Cells labeled by `w_coord`; `k` classes of mass `1/k`.
    pub fn coordinate_partition(&self, coord: usize) -> Result<Partition> {
        if coord >= self.window {
            return Err(Error::OutOfRange { index: coord, available: self.window });
        }
        Ok(Partition::from_fn(self.space(), |c| self.symbol(c, coord as i64) as u64))
    }

    /// Join of the coordinate partitions for `lo..=hi` (mod `L`), e.g.
    /// `η_M = ⋁_{i=−M}^{M} Tⁱ{C_1, …, C_k}` for `lo = −M`, `hi = M`.
    pub fn window_partition(&self, lo: i64, hi: i64) -> Result<Partition> {
        if hi < lo || (hi - lo) as usize >= self.window {
            return Err(Error::invalid("window must be nonempty and shorter than L"));
        }
        Ok(Partition::from_fn(self.space(), |c| {
            (lo..=hi).fold(0u64, |acc, i| acc * self.alphabet as u64 + self.symbol(c, i) as u64)
        }))
    }

    /// Sets `{w_c = a}` for each listed coordinate and every symbol, ordered
    /// by coordinate then symbol.
    pub fn single_coordinate_family(&self, coords: &[usize]) -> Result<DenseFamily> {
        let mut sets = Vec::new();
        for &c in coords {
            if c >= self.window {
                return Err(Error::OutOfRange { index: c, available: self.window });
            }
            for a in 0..self.alphabet {
                sets.push(self.coordinate_set(c as i64, a)?);
            }
        }
        DenseFamily::new(sets)
    }

    /// Whether the coordinate windows (inclusive, possibly negative) are
    /// pairwise disjoint mod `L`: the exact-independence horizon.
    pub fn windows_disjoint(&self, windows: &[(i64, i64)]) -> bool {
        let mut hit = vec![false; self.window];
        for &(lo, hi) in windows {
            if hi < lo || (hi - lo) as usize >= self.window {
                return false;
            }
            for i in lo..=hi {
                let c = self.wrap(i);
                if hit[c] {
                    return false;
                }
                hit[c] = true;
            }
        }
        true
    }

    /// Lags `j` for which `{w_c}`-events of the given coordinates and their
    /// `Tʲ` images read disjoint coordinates, i.e. `j ∉ {c − c'} mod L`.
    pub fn window_disjoint_lag(&self, coords: &[usize], j: i64) -> bool {
        coords.iter().all(|&a| coords.iter().all(|&b| self.wrap(b as i64 + j) != a))
    }
}

/// The dyadic-block family: for `i = 2^m + r` (`0 ≤ r < 2^m`),
/// `A_i = {c : ⌊r·n/2^m⌋ ≤ c < ⌊(r+1)·n/2^m⌋}`.
pub fn canonical_family(space: CellSpace, i_max: usize) -> Result<DenseFamily> {
    if i_max == 0 {
        return Err(Error::EmptyFamily);
    }
    let n = space.len() as u128;
    let sets = (1..=i_max)
        .map(|i| {
            let m = usize::BITS - 1 - i.leading_zeros();
            let r = (i - (1usize << m)) as u128;
            let lo = (r * n) >> m;
            let hi = ((r + 1) * n) >> m;
            CellSet::interval(space, lo as usize, hi as usize)
        })
        .collect();
    DenseFamily::new(sets)
}

/// Default truncation length of dense families.
pub const DEFAULT_I_MAX: usize = 16;

/// A parsed system descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SystemDescriptor {
    Identity { n: usize },
    CyclicRotation { n: usize },
    Odometer { base: usize, levels: usize },
    BernoulliCyclic { alphabet: usize, window: usize },
    RandomPermutation { n: usize, seed: u64 },
}

/// A constructed zoo system.
#[derive(Debug, Clone)]
pub struct ZooSystem {
    pub descriptor: SystemDescriptor,
    pub automorphism: CellAutomorphism,
    pub bernoulli: Option<BernoulliShift>,
}

impl ZooSystem {
    pub fn coordinate_partition(&self, coord: usize) -> Result<Partition> {
        match &self.bernoulli {
            Some(b) => b.coordinate_partition(coord),
            None => Err(Error::WrongKind { expected: "bernoulli_cyclic".into(), got: self.descriptor.kind().into() }),
        }
    }
}

/// Free-function form of [`ZooSystem::coordinate_partition`].
pub fn coordinate_partition(system: &ZooSystem, coord: usize) -> Result<Partition> {
    system.coordinate_partition(coord)
}

impl SystemDescriptor {
    pub const KINDS: [&'static str; 5] = ["identity", "cyclic_rotation", "odometer", "bernoulli_cyclic", "random_permutation"];

    pub fn kind(&self) -> &'static str {
        match self {
            SystemDescriptor::Identity { .. } => "identity",
            SystemDescriptor::CyclicRotation { .. } => "cyclic_rotation",
            SystemDescriptor::Odometer { .. } => "odometer",
            SystemDescriptor::BernoulliCyclic { .. } => "bernoulli_cyclic",
            SystemDescriptor::RandomPermutation { .. } => "random_permutation",
        }
    }

    /// Number of cells the descriptor asks for (saturating).
    pub fn cell_count(&self) -> u128 {
        let pow = |b: usize, e: usize| (0..e).fold(1u128, |acc, _| acc.saturating_mul(b as u128));
        match *self {
            SystemDescriptor::Identity { n } | SystemDescriptor::CyclicRotation { n } | SystemDescriptor::RandomPermutation { n, .. } => n as u128,
            SystemDescriptor::Odometer { base, levels } => pow(base, levels),
            SystemDescriptor::BernoulliCyclic { alphabet, window } => pow(alphabet, window),
        }
    }

    pub fn build(&self) -> Result<ZooSystem> {
        self.build_with_cap(DEFAULT_CELL_CAP)
    }

    pub fn build_with_cap(&self, cap: usize) -> Result<ZooSystem> {
        let count = self.cell_count();
        if count == 0 {
            return Err(Error::invalid("systems need at least one cell"));
        }
        check_cap(count, cap)?;
        let (automorphism, bernoulli) = match *self {
            SystemDescriptor::Identity { n } => (make_identity(n), None),
            SystemDescriptor::CyclicRotation { n } => (make_cyclic_rotation(n), None),
            SystemDescriptor::Odometer { base, levels } => (make_odometer_capped(base, levels, cap)?, None),
            SystemDescriptor::BernoulliCyclic { alphabet, window } => {
                let b = make_bernoulli_cyclic_capped(alphabet, window, cap)?;
                (b.automorphism.clone(), Some(b))
            }
            SystemDescriptor::RandomPermutation { n, seed } => (make_random_automorphism(n, seed), None),
        };
        Ok(ZooSystem { descriptor: self.clone(), automorphism, bernoulli })
    }

    /// Grammar lines for catalog output.
    pub fn grammar() -> Vec<(&'static str, &'static str)> {
        vec![
            ("identity", "identity:n=<cells>"),
            ("cyclic_rotation", "cyclic_rotation:n=<cells>"),
            ("odometer", "odometer:b=<base ≥ 2>,l=<levels ≥ 1>   (b^l cells)"),
            ("bernoulli_cyclic", "bernoulli_cyclic:k=<alphabet ≥ 2>,L=<window ≥ 2>   (k^L cells)"),
            ("random_permutation", "random_permutation:n=<cells>,seed=<u64>"),
        ]
    }
}

impl fmt::Display for SystemDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemDescriptor::Identity { n } => write!(f, "identity:n={n}"),
            SystemDescriptor::CyclicRotation { n } => write!(f, "cyclic_rotation:n={n}"),
            SystemDescriptor::Odometer { base, levels } => write!(f, "odometer:b={base},l={levels}"),
            SystemDescriptor::BernoulliCyclic { alphabet, window } => write!(f, "bernoulli_cyclic:k={alphabet},L={window}"),
            SystemDescriptor::RandomPermutation { n, seed } => write!(f, "random_permutation:n={n},seed={seed}"),
        }
    }
}

impl FromStr for SystemDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut params: Vec<(String, String)> = Vec::new();
        for item in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("parameter `{item}` in `{s}` is not key=value")))?;
            params.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |key: &str| -> Result<u64> {
            let v = params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v)
                .ok_or_else(|| Error::Parse(format!("`{kind}` needs parameter `{key}`")))?;
            v.parse::<u64>().map_err(|_| Error::Parse(format!("parameter `{key}` = `{v}` is not a nonnegative integer")))
        };
        let allowed: &[&str] = match kind {
            "identity" | "cyclic_rotation" => &["n"],
            "odometer" => &["b", "l"],
            "bernoulli_cyclic" => &["k", "L"],
            "random_permutation" => &["n", "seed"],
            other => return Err(Error::Parse(format!("unknown system kind `{other}`; expected one of {:?}", Self::KINDS))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::Parse(format!("`{kind}` does not take parameter `{k}`")));
        }
        let size = |key: &str| -> Result<usize> { usize::try_from(get(key)?).map_err(|_| Error::Parse(format!("`{key}` too large"))) };
        Ok(match kind {
            "identity" => SystemDescriptor::Identity { n: size("n")? },
            "cyclic_rotation" => SystemDescriptor::CyclicRotation { n: size("n")? },
            "odometer" => SystemDescriptor::Odometer { base: size("b")?, levels: size("l")? },
            "bernoulli_cyclic" => SystemDescriptor::BernoulliCyclic { alphabet: size("k")?, window: size("L")? },
            _ => SystemDescriptor::RandomPermutation { n: size("n")?, seed: get("seed")? },
        })
    }
}

impl TryFrom<String> for SystemDescriptor {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SystemDescriptor> for String {
    fn from(d: SystemDescriptor) -> Self {
        d.to_string()
    }
}
