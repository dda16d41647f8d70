//! Spectral measures of cyclic vectors and the arc-counting singularity test.
//!
//! A [`CorrelationSequence`] holds `σ̂(s) = ⟨Tˢf, f⟩` for `|s| ≤ s_max`. For a
//! permutation system the measure is atomic and [`atomic_spectrum`] computes
//! it exactly from per-cycle DFTs; an atom at angle `θ` (in turns) contributes
//! `mass·e^{2πisθ}` to `σ̂(s)`.
//!
//! Arcs are `I_{k,P} = [k/P, (k+1)/P)`. The trapezoid `Δ_{k,P}` ramps up on
//! `I_{k−1,P}`, equals 1 on `I_{k,P}` and ramps down on `I_{k+1,P}`. Its
//! integral against `σ` is approximated by the Fejér sum
//! `Σ_{|s|≤d} (1 − |s|/(d+1))·Δ̂(s)·σ̂(s)`.
//!
//! The error of the Fejér sum is bounded uniformly in `k`: `Δ` is
//! `P`-Lipschitz with values in `[0, 1]` and the Fejér kernel `K_d` is a
//! probability density, so
//!
//! ```text
//! |σ_d(Δ)(θ) − Δ(θ)| ≤ ∫ K_d(t)·min(P|t|, 1) dt = 1 − Σ_{|s|≤d} w_s·(1/P)·sinc²(s/P)
//! ```
//!
//! because `1 − min(P|t|, 1)` is the tent of half-width `1/P`, whose
//! coefficients `(1/P)·sinc²(s/P)` sum to 1. Integrating against `σ` scales
//! the bound by `σ̂(0)`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cellsys::{CellAutomorphism, CellFunction};
use crate::{Error, Rational, Result};

/// Largest `s_max` a correlation sequence may hold.
pub const MAX_S_MAX: usize = 1 << 23;

const UNIT_TOLERANCE: f64 = 1e-12;
const PSD_TOLERANCE: f64 = 1e-9;
const MINOR_ORDER: usize = 8;

/// `σ̂(s)` for `−s_max ≤ s ≤ s_max`, stored for `s ≥ 0`; negative lags are
/// conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSequence {
    values: Vec<Complex64>,
    source: String,
}

impl CorrelationSequence {
    /// Builds from `σ̂(0), …, σ̂(s_max)` and validates normalization and
    /// positive semidefiniteness on sampled Toeplitz minors.
    pub fn from_nonnegative(values: Vec<Complex64>, source: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("correlation sequence needs σ̂(0)"));
        }
        if values.len() - 1 > MAX_S_MAX {
            return Err(Error::invalid(format!("s_max {} exceeds the limit {MAX_S_MAX}", values.len() - 1)));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("correlation values must be finite"));
        }
        let zero = values[0];
        if (zero.re - 1.0).abs() > UNIT_TOLERANCE || zero.im.abs() > UNIT_TOLERANCE {
            return Err(Error::invalid(format!("σ̂(0) = {zero} is not 1 within {UNIT_TOLERANCE:e}")));
        }
        let mut values = values;
        values[0] = Complex64::new(zero.re, 0.0);
        let seq = CorrelationSequence { values, source: source.into() };
        seq.check_toeplitz_minors()?;
        Ok(seq)
    }

    /// Builds from `σ̂(−s_max), …, σ̂(s_max)`; rejects input that is not
    /// Hermitian within `1e−12`.
    pub fn from_symmetric(values: &[Complex64], source: impl Into<String>) -> Result<Self> {
        if values.len().is_multiple_of(2) {
            return Err(Error::invalid("symmetric correlation input must have odd length"));
        }
        let s_max = values.len() / 2;
        for s in 1..=s_max {
            let (neg, pos) = (values[s_max - s], values[s_max + s]);
            if (neg - pos.conj()).norm() > UNIT_TOLERANCE {
                return Err(Error::invalid(format!("σ̂(−{s}) ≠ conj σ̂({s})")));
            }
        }
        Self::from_nonnegative(values[s_max..].to_vec(), source)
    }

    /// `σ̂(s) = δ_{s,0}`: arc-length measure.
    pub fn lebesgue(s_max: usize) -> Result<Self> {
        let mut values = vec![Complex64::new(0.0, 0.0); s_max + 1];
        values[0] = Complex64::new(1.0, 0.0);
        Self::from_nonnegative(values, "lebesgue")
    }

    /// Unit point mass at angle `num/den` of a turn; phases are reduced
    /// exactly before evaluating the exponential.
    pub fn dirac(num: u64, den: u64, s_max: usize) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("angle denominator must be positive"));
        }
        let num = num % den;
        let values = (0..=s_max as u64)
            .map(|s| {
                let r = ((s as u128 * num as u128) % den as u128) as f64 / den as f64;
                Complex64::from_polar(1.0, 2.0 * PI * r)
            })
            .collect();
        Self::from_nonnegative(values, format!("dirac({num}/{den})"))
    }

    /// Convex combination of sequences sharing one `s_max`.
    pub fn mixture(parts: &[(f64, &CorrelationSequence)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::invalid("mixture needs at least one part"))?;
        let s_max = first.1.s_max();
        if parts.iter().any(|(w, c)| *w < 0.0 || c.s_max() != s_max) {
            return Err(Error::invalid("mixture weights must be nonnegative and s_max must agree"));
        }
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::invalid(format!("mixture weights sum to {total}")));
        }
        let values = (0..=s_max).map(|s| parts.iter().map(|(w, c)| c.values[s] * *w).sum()).collect();
        let source = parts.iter().map(|(w, c)| format!("{w}*{}", c.source)).collect::<Vec<_>>().join(" + ");
        Self::from_nonnegative(values, source)
    }

    pub fn s_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// `σ̂(s)` for `|s| ≤ s_max`.
    pub fn get(&self, s: i64) -> Option<Complex64> {
        let v = *self.values.get(s.unsigned_abs() as usize)?;
        Some(if s < 0 { v.conj() } else { v })
    }

    /// `σ̂(0), …, σ̂(s_max)`.
    pub fn nonnegative(&self) -> &[Complex64] {
        &self.values
    }

    pub fn truncated(&self, s_max: usize) -> Result<Self> {
        if s_max > self.s_max() {
            return Err(Error::OutOfRange { index: s_max, available: self.s_max() });
        }
        Ok(CorrelationSequence { values: self.values[..=s_max].to_vec(), source: self.source.clone() })
    }

    /// Pointwise product, the correlation sequence of `f ⊗ g` on `S × T`.
    pub fn product(&self, other: &CorrelationSequence) -> Result<Self> {
        let s_max = self.s_max().min(other.s_max());
        let values = (0..=s_max).map(|s| self.values[s] * other.values[s]).collect();
        Self::from_nonnegative(values, format!("({}) x ({})", self.source, other.source))
    }

    fn check_toeplitz_minors(&self) -> Result<()> {
        let s_max = self.s_max();
        let order = MINOR_ORDER.min(s_max + 1);
        if order < 2 {
            return Ok(());
        }
        let mut stride = 1;
        while (order - 1) * stride <= s_max {
            let min_eig = self.minor_min_eigenvalue(order, stride);
            if min_eig < -PSD_TOLERANCE {
                return Err(Error::invalid(format!(
                    "Toeplitz minor of order {order} at stride {stride} has eigenvalue {min_eig:e}; not positive semidefinite"
                )));
            }
            stride *= 2;
        }
        Ok(())
    }

    /// Smallest eigenvalue of `[σ̂((a − b)·stride)]_{a,b<order}` via its real
    /// symmetric embedding `[[Re, −Im], [Im, Re]]`.
    fn minor_min_eigenvalue(&self, order: usize, stride: usize) -> f64 {
        let m = DMatrix::from_fn(2 * order, 2 * order, |r, c| {
            let (a, b) = (r % order, c % order);
            let v = self.get((a as i64 - b as i64) * stride as i64).expect("lag within s_max");
            match (r < order, c < order) {
                (true, true) | (false, false) => v.re,
                (true, false) => -v.im,
                (false, true) => v.im,
            }
        });
        m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `s,re,im` and rows for `s = −s_max..s_max`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["s", "re", "im"]).map_err(err)?;
        let s_max = self.s_max() as i64;
        for s in -s_max..=s_max {
            let v = self.get(s).expect("in range");
            w.write_record([s.to_string(), v.re.to_string(), v.im.to_string()]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv); rows may come
    /// in any order but every `s` in `−s_max..s_max` must appear once.
    pub fn read_csv<R: Read>(input: R, source: impl Into<String>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            s: i64,
            re: f64,
            im: f64,
        }
        let mut rows = HashMap::new();
        for (line, row) in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input).deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::Parse(format!("correlation CSV record {}: {e}", line + 1)))?;
            if rows.insert(row.s, Complex64::new(row.re, row.im)).is_some() {
                return Err(Error::Parse(format!("lag {} appears twice", row.s)));
            }
        }
        let s_max = rows.keys().map(|s| s.unsigned_abs()).max().ok_or_else(|| Error::Parse("correlation CSV has no rows".into()))? as i64;
        if rows.len() as i64 != 2 * s_max + 1 {
            return Err(Error::Parse(format!("expected every lag in −{s_max}..{s_max}, got {} rows", rows.len())));
        }
        let ordered: Vec<Complex64> = (-s_max..=s_max).map(|s| rows[&s]).collect();
        Self::from_symmetric(&ordered, source)
    }
}

/// `σ̂(s) = ⟨Tˢf, f⟩` for `0 ≤ s ≤ s_max`, computed from periodic
/// autocorrelations along the cycles of `T`.
pub fn correlation_sequence(t: &CellAutomorphism, f: &CellFunction, s_max: usize) -> Result<CorrelationSequence> {
    if f.space() != t.space() {
        return Err(Error::SpaceMismatch { left: t.len(), right: f.space().len() });
    }
    if (f.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::invalid(format!("‖f‖ = {} is not 1 within {UNIT_TOLERANCE:e}", f.norm())));
    }
    if s_max > MAX_S_MAX {
        return Err(Error::invalid(format!("s_max {s_max} exceeds the limit {MAX_S_MAX}")));
    }
    // Summed autocorrelation table per cycle length.
    let mut tables: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let values = f.values();
    for cycle in t.cycles() {
        let g: Vec<f64> = cycle.iter().map(|&c| values[c]).collect();
        let auto = periodic_autocorrelation(&g, s_max);
        let table = tables.entry(g.len()).or_insert_with(|| vec![0.0; auto.len()]);
        for (acc, v) in table.iter_mut().zip(auto) {
            *acc += v;
        }
    }
    let n = t.len() as f64;
    let out = (0..=s_max)
        .map(|s| {
            let total: f64 = tables.iter().map(|(&len, table)| table[s % len]).sum();
            Complex64::new(total / n, 0.0)
        })
        .collect();
    let mut seq = CorrelationSequence::from_nonnegative(out, "permutation system")?;
    seq.source = format!("permutation system on {} cells", t.len());
    Ok(seq)
}

/// `A[τ] = Σ_i g_{i−τ}·g_i` for `τ < min(ℓ, s_max + 1)`.
fn periodic_autocorrelation(g: &[f64], s_max: usize) -> Vec<f64> {
    let len = g.len();
    let lags = len.min(s_max + 1);
    if len * lags <= 1 << 22 {
        return (0..lags).map(|tau| (0..len).map(|i| g[(i + len - tau) % len] * g[i]).sum()).collect();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(len).process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf[..lags].iter().map(|v| v.re / len as f64).collect()
}

/// A point mass at an exact angle `r/ℓ` of a turn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    #[serde(serialize_with = "serialize_angle")]
    pub angle: Ratio<u64>,
    pub mass: f64,
}

fn serialize_angle<S: serde::Serializer>(angle: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&angle.to_string())
}

/// Exact atomic decomposition of `σ_f` for a permutation system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicSpectrum {
    atoms: Vec<Atom>,
}

impl AtomicSpectrum {
    /// Atoms sorted by angle.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `Σ mass·e^{2πisθ}`, with the phase `sθ mod 1` reduced exactly.
    pub fn reconstruct(&self, s: i64) -> Complex64 {
        self.atoms
            .iter()
            .map(|a| {
                let (num, den) = (*a.angle.numer() as i128, *a.angle.denom() as i128);
                let phase = (s as i128 * num).rem_euclid(den) as f64 / den as f64;
                Complex64::from_polar(a.mass, 2.0 * PI * phase)
            })
            .sum()
    }

    /// `∫ Δ_{k,P} dσ`, evaluating the trapezoid exactly at each atom.
    pub fn integrate(&self, delta: &Trapezoid) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let angle = Rational::new(*a.angle.numer() as i128, *a.angle.denom() as i128);
                a.mass * crate::to_f64(&delta.value_exact(angle))
            })
            .sum()
    }
}

/// Per cycle of length `ℓ` with forward DFT `G_r = Σ_i f(c_i)e^{−2πiri/ℓ}`, an
/// atom of mass `|G_r|²/(n·ℓ)` at angle `(ℓ − r)/ℓ`; equal angles merge.
/// Masses below `1e−15·‖f‖²` (DFT round-off) are dropped.
pub fn atomic_spectrum(t: &CellAutomorphism, f: &CellFunction) -> Result<AtomicSpectrum> {
    if f.space() != t.space() {
        return Err(Error::SpaceMismatch { left: t.len(), right: f.space().len() });
    }
    let n = t.len() as f64;
    let values = f.values();
    let mut planner = FftPlanner::<f64>::new();
    let mut merged: BTreeMap<Ratio<u64>, f64> = BTreeMap::new();
    for cycle in t.cycles() {
        let len = cycle.len();
        let mut buf: Vec<Complex64> = cycle.iter().map(|&c| Complex64::new(values[c], 0.0)).collect();
        planner.plan_fft_forward(len).process(&mut buf);
        for (r, coeff) in buf.iter().enumerate() {
            let angle = Ratio::new(((len - r) % len) as u64, len as u64);
            *merged.entry(angle).or_insert(0.0) += coeff.norm_sqr() / (n * len as f64);
        }
    }
    let floor = 1e-15 * f.norm().powi(2);
    let atoms = merged.into_iter().filter(|&(_, m)| m > floor).map(|(angle, mass)| Atom { angle, mass }).collect();
    Ok(AtomicSpectrum { atoms })
}

/// The trapezoid `Δ_{k,P}` on the circle of circumference 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trapezoid {
    k: usize,
    p: usize,
}

/// `Δ_{k,P}`; requires `P ≥ 3` and `k < P`.
pub fn delta_profile(k: usize, p: usize) -> Result<Trapezoid> {
    if p < 3 {
        return Err(Error::invalid(format!("P = {p} must be at least 3")));
    }
    if k >= p {
        return Err(Error::OutOfRange { index: k, available: p });
    }
    Ok(Trapezoid { k, p })
}

impl Trapezoid {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn shape(&self, u: f64) -> f64 {
        let p = self.p as f64;
        if u <= 1.0 {
            1.0
        } else if u <= 2.0 {
            2.0 - u
        } else if u >= p - 1.0 {
            u - (p - 1.0)
        } else {
            0.0
        }
    }

    /// Value at angle `θ` (turns, any real).
    pub fn value(&self, theta: f64) -> f64 {
        let u = (theta - self.k as f64 / self.p as f64).rem_euclid(1.0) * self.p as f64;
        self.shape(u)
    }

    /// Exact value at a rational angle.
    pub fn value_exact(&self, theta: Rational) -> Rational {
        let p = self.p as i128;
        let shifted = theta - Rational::new(self.k as i128, p);
        let frac = shifted - shifted.floor();
        let u = frac * Rational::from_integer(p);
        let one = Rational::from_integer(1);
        let two = Rational::from_integer(2);
        if u <= one {
            one
        } else if u <= two {
            two - u
        } else if u >= Rational::from_integer(p - 1) {
            u - Rational::from_integer(p - 1)
        } else {
            Rational::from_integer(0)
        }
    }

    /// `Δ̂(s) = ∫ Δ(θ)e^{−2πisθ}dθ
    ///       = e^{−2πis(k+½)/P}·P·sin(2πs/P)·sin(πs/P)/(π²s²)`, `Δ̂(0) = 2/P`.
    pub fn fourier(&self, s: i64) -> Complex64 {
        let p = self.p as f64;
        if s == 0 {
            return Complex64::new(2.0 / p, 0.0);
        }
        let sf = s as f64;
        let amplitude = p * (2.0 * PI * sf / p).sin() * (PI * sf / p).sin() / (PI * PI * sf * sf);
        // Reduce the phase exactly: s(2k+1)/(2P) mod 1.
        let two_p = 2 * self.p as i128;
        let phase = (s as i128 * (2 * self.k as i128 + 1)).rem_euclid(two_p) as f64 / two_p as f64;
        Complex64::from_polar(amplitude, -2.0 * PI * phase)
    }

    /// `∫ Δ = 2/P`.
    pub fn mean(&self) -> f64 {
        2.0 / self.p as f64
    }
}

/// `∫ Δ_{k,P} dσ` estimate and its rigorous error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcIntegral {
    pub value: f64,
    pub bound: f64,
}

/// Uniform bound on `|σ_d(Δ_{k,P}) − Δ_{k,P}|` for a unit measure, including
/// a floating-point allowance for the summations.
pub fn fejer_bound(p: usize, d: usize) -> f64 {
    let pf = p as f64;
    let scale = (d + 1) as f64;
    // Table of sin²(πs/P), periodic in s with period P.
    let sin2: Vec<f64> = (0..p).map(|m| (PI * m as f64 / pf).sin().powi(2)).collect();
    // Neumaier summation of Σ_{|s|≤d} w_s·tent^(s), tent^(s) = P·sin²(πs/P)/(π²s²).
    let (mut sum, mut comp) = (1.0 / pf, 0.0);
    for s in 1..=d {
        let sf = s as f64;
        let term = 2.0 * (1.0 - sf / scale) * pf * sin2[s % p] / (PI * PI * sf * sf);
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    let bound = 1.0 - (sum + comp);
    bound.max(0.0) + roundoff_allowance(d)
}

fn roundoff_allowance(d: usize) -> f64 {
    1e-12 + 16.0 * (d as f64 + 1.0) * f64::EPSILON
}

/// `∫ Δ_{k,P} dσ` for every `k` at once from the degree-`d` Fejér sum.
fn arc_values(corr: &CorrelationSequence, p: usize, d: usize) -> Vec<f64> {
    let pf = p as f64;
    let scale = (d + 1) as f64;
    // g(s) = sin(2πs/P)·sin(πs/P)·e^{−πis/P}, periodic with period 2P.
    let g: Vec<Complex64> = (0..2 * p)
        .map(|m| {
            let x = PI * m as f64 / pf;
            Complex64::from_polar((2.0 * x).sin() * x.sin(), -x)
        })
        .collect();
    // b_m = Σ_{s ≡ m (mod P)} w_s·c(s)·e^{−πis/P}·σ̂(s); value_k = Re DFT(b)[k].
    let mut b = vec![Complex64::new(0.0, 0.0); p];
    b[0] += corr.values[0] * (2.0 / pf);
    for s in 1..=d {
        let sigma = corr.values[s];
        if sigma.re == 0.0 && sigma.im == 0.0 {
            continue;
        }
        let sf = s as f64;
        let weight = (1.0 - sf / scale) * pf / (PI * PI * sf * sf);
        b[s % p] += g[s % (2 * p)] * sigma * weight;
        let neg = (2 * p - s % (2 * p)) % (2 * p);
        b[(p - s % p) % p] += g[neg] * sigma.conj() * weight;
    }
    FftPlanner::<f64>::new().plan_fft_forward(p).process(&mut b);
    b.iter().map(|v| v.re).collect()
}

/// Fejér estimate of `∫ Δ_{k,P} dσ` at degree `d` with its certified error.
pub fn delta_integral(corr: &CorrelationSequence, k: usize, p: usize, d: usize) -> Result<ArcIntegral> {
    delta_profile(k, p)?;
    check_degree(corr, d)?;
    let values = arc_values(corr, p, d);
    Ok(ArcIntegral { value: values[k], bound: fejer_bound(p, d) * corr.values[0].re })
}

fn check_degree(corr: &CorrelationSequence, d: usize) -> Result<()> {
    if d > corr.s_max() {
        return Err(Error::invalid(format!("degree {d} exceeds the available lags (s_max = {})", corr.s_max())));
    }
    Ok(())
}

/// Certified membership count of `D(σ, N, P)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DCount {
    /// Arcs certified to satisfy `∫Δ dσ < 1/(NP)`.
    pub count: usize,
    /// Arcs whose error interval straddles `1/(NP)`.
    pub uncertified: usize,
    pub certified: bool,
    pub degree: usize,
    pub bound: f64,
}

/// `|{k : value_k + bound < 1/(NP)}|`; an arc is decided out when
/// `value_k − bound ≥ 1/(NP)`.
pub fn d_count(corr: &CorrelationSequence, n: u64, p: usize, d: usize) -> Result<DCount> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    delta_profile(0, p)?;
    check_degree(corr, d)?;
    let bound = fejer_bound(p, d) * corr.values[0].re;
    let threshold = 1.0 / (n as f64 * p as f64);
    let (mut count, mut uncertified) = (0, 0);
    for v in arc_values(corr, p, d) {
        if v + bound < threshold {
            count += 1;
        } else if v - bound < threshold {
            uncertified += 1;
        }
    }
    Ok(DCount { count, uncertified, certified: uncertified == 0, degree: d, bound })
}

/// How the Fejér degree is chosen for each `(N, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DegreePolicy {
    /// Exactly `d`; must not exceed `s_max`.
    Fixed { degree: usize },
    /// `factor·P·N`, capped at `s_max`.
    Scaled { factor: usize },
    /// Start at `factor·P·N` (capped at `s_max`) and double until the
    /// `(N, P)` outcome is settled or `s_max` is reached.
    Adaptive { factor: usize },
}

impl Default for DegreePolicy {
    fn default() -> Self {
        DegreePolicy::Adaptive { factor: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SingularWitnessed,
    NotSingularAtHorizon,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Certified `N·|D| > (N−1)·P`.
    Witnessed,
    /// Even counting every undecided arc, `N·|D| ≤ (N−1)·P`.
    Failed,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub n: u64,
    pub p: usize,
    pub degree: usize,
    pub count: usize,
    pub uncertified: usize,
    pub bound: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub n: u64,
    pub p: usize,
}

/// Result of the arc-counting test over finite schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityVerdict {
    pub verdict: Verdict,
    /// Witnessing pair for the largest scheduled `N`; present iff singular.
    pub witness: Option<Witness>,
    /// First witnessing `P` for each `N` (singular verdicts only).
    pub witnesses: Vec<Witness>,
    /// `|D| − (1 − 1/N)·P` at the tightest decisive row (negative for
    /// failures, positive for witnesses).
    pub margin: f64,
    /// Largest Fejér error bound used.
    pub error_budget: f64,
    pub rows: Vec<ScheduleRow>,
    pub source: String,
}

fn outcome(n: u64, p: usize, c: &DCount) -> Outcome {
    let (n, p) = (n as u128, p as u128);
    if n * c.count as u128 > (n - 1) * p {
        Outcome::Witnessed
    } else if n * (c.count + c.uncertified) as u128 <= (n - 1) * p {
        Outcome::Failed
    } else {
        Outcome::Undecided
    }
}

fn evaluate(corr: &CorrelationSequence, n: u64, p: usize, policy: DegreePolicy) -> Result<ScheduleRow> {
    let s_max = corr.s_max();
    let start = |factor: usize| factor.saturating_mul(p).saturating_mul(n as usize).min(s_max);
    let mut d = match policy {
        DegreePolicy::Fixed { degree } => degree,
        DegreePolicy::Scaled { factor } | DegreePolicy::Adaptive { factor } => start(factor),
    };
    loop {
        let c = d_count(corr, n, p, d)?;
        let o = outcome(n, p, &c);
        let adaptive = matches!(policy, DegreePolicy::Adaptive { .. });
        if !adaptive || o != Outcome::Undecided || d >= s_max {
            return Ok(ScheduleRow { n, p, degree: d, count: c.count, uncertified: c.uncertified, bound: c.bound, outcome: o });
        }
        d = d.saturating_mul(2).max(1).min(s_max);
    }
}

fn threshold_gap(row: &ScheduleRow, counted: usize) -> f64 {
    counted as f64 - (1.0 - 1.0 / row.n as f64) * row.p as f64
}

/// Arc-counting singularity test.
///
/// Singular is witnessed when every `N` has a `P` with certified
/// `|D(σ,N,P)| > (1 − 1/N)·P`. The verdict is "not singular at horizon" when
/// some `N` is certified to fail for every scheduled `P`. Evaluation stops as
/// soon as the verdict is settled.
pub fn classify_singular(corr: &CorrelationSequence, n_schedule: &[u64], p_schedule: &[usize], policy: DegreePolicy) -> Result<SingularityVerdict> {
    if n_schedule.is_empty() || p_schedule.is_empty() {
        return Err(Error::invalid("N and P schedules must be nonempty"));
    }
    if n_schedule.contains(&0) {
        return Err(Error::invalid("N must be at least 1"));
    }
    for &p in p_schedule {
        delta_profile(0, p)?;
    }
    if let DegreePolicy::Fixed { degree } = policy {
        check_degree(corr, degree)?;
    }
    let mut n_sorted = n_schedule.to_vec();
    n_sorted.sort_unstable();
    n_sorted.dedup();
    let mut p_sorted = p_schedule.to_vec();
    p_sorted.sort_unstable();
    p_sorted.dedup();

    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    let mut failed_n: Option<(u64, f64)> = None;
    for &n in &n_sorted {
        let mut all_failed = true;
        let mut fail_margin = f64::NEG_INFINITY;
        let mut found = None;
        for &p in &p_sorted {
            let row = evaluate(corr, n, p, policy)?;
            let o = row.outcome;
            if o == Outcome::Failed {
                fail_margin = fail_margin.max(threshold_gap(&row, row.count + row.uncertified));
            } else {
                all_failed = false;
            }
            rows.push(row);
            if o == Outcome::Witnessed {
                found = Some(Witness { n, p });
                break;
            }
        }
        if let Some(w) = found {
            witnesses.push(w);
        } else if all_failed {
            failed_n = Some((n, fail_margin));
            break;
        }
    }
    let error_budget = rows.iter().map(|r| r.bound).fold(0.0, f64::max);
    let gap_of = |w: &Witness| {
        let row = rows.iter().find(|r| r.n == w.n && r.p == w.p).expect("witness row");
        threshold_gap(row, row.count)
    };
    let (verdict, witness, margin) = if let Some((_, margin)) = failed_n {
        witnesses.clear();
        (Verdict::NotSingularAtHorizon, None, margin)
    } else if witnesses.len() == n_sorted.len() {
        let margin = witnesses.iter().map(gap_of).fold(f64::INFINITY, f64::min);
        (Verdict::SingularWitnessed, witnesses.last().copied(), margin)
    } else {
        witnesses.clear();
        let margin = rows.iter().map(|r| threshold_gap(r, r.count)).fold(f64::NEG_INFINITY, f64::max);
        (Verdict::Inconclusive, None, margin)
    };
    Ok(SingularityVerdict { verdict, witness, witnesses, margin, error_budget, rows, source: corr.source.clone() })
}

/// Powers of two from 4 to 1024.
pub fn default_p_schedule() -> Vec<usize> {
    (2..=10).map(|e| 1usize << e).collect()
}

pub fn default_n_schedule() -> Vec<u64> {
    vec![2, 4, 8]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellsys::{direct_product, CellSet, CellSpace};
    use crate::zoo::{make_cyclic_rotation, make_identity, make_random_automorphism};
    use proptest::prelude::*;

    fn unit(values: Vec<f64>) -> CellFunction {
        let space = CellSpace::new(values.len()).unwrap();
        CellFunction::new(space, values).unwrap().normalized().unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn identity_correlation_is_constant() {
        let t = make_identity(7);
        let f = unit(vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.0, 1.0]);
        let c = correlation_sequence(&t, &f, 20).unwrap();
        for s in -20..=20 {
            assert!(close(c.get(s).unwrap(), Complex64::new(1.0, 0.0), 1e-12));
        }
        let spec = atomic_spectrum(&t, &f).unwrap();
        assert_eq!(spec.atoms().len(), 1);
        assert_eq!(spec.atoms()[0].angle, Ratio::new(0, 1));
        assert!((spec.atoms()[0].mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_four_character() {
        // Real part of the 4th-root character: σ̂(s) = cos(2πs/4).
        let t = make_cyclic_rotation(4);
        let f = unit((0..4).map(|c| (2.0 * PI * c as f64 / 4.0).cos()).collect());
        let c = correlation_sequence(&t, &f, 12).unwrap();
        for s in -12i64..=12 {
            let expected = (2.0 * PI * s as f64 / 4.0).cos();
            assert!(close(c.get(s).unwrap(), Complex64::new(expected, 0.0), 1e-12), "s = {s}");
        }
        let spec = atomic_spectrum(&t, &f).unwrap();
        let angles: Vec<_> = spec.atoms().iter().map(|a| a.angle).collect();
        assert_eq!(angles, vec![Ratio::new(1, 4), Ratio::new(3, 4)]);
        for a in spec.atoms() {
            assert!((a.mass - 0.5).abs() < 1e-12);
        }
        for s in -12..=12 {
            assert!(close(spec.reconstruct(s), c.get(s).unwrap(), 1e-12));
        }
    }

    #[test]
    fn rotation_two_indicator() {
        let t = make_cyclic_rotation(2);
        let f = CellSet::from_cells(t.space(), [0]).unwrap().indicator().normalized().unwrap();
        let spec = atomic_spectrum(&t, &f).unwrap();
        assert_eq!(spec.atoms().len(), 2);
        assert_eq!(spec.atoms()[0].angle, Ratio::new(0, 1));
        assert_eq!(spec.atoms()[1].angle, Ratio::new(1, 2));
        for a in spec.atoms() {
            assert!((a.mass - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn random_permutation_reconstruction() {
        let t = make_random_automorphism(12, 3);
        let f = unit((0..12).map(|c| ((c * 7 + 3) % 5) as f64 - 1.5).collect());
        let c = correlation_sequence(&t, &f, 24).unwrap();
        let spec = atomic_spectrum(&t, &f).unwrap();
        assert!((spec.total_mass() - 1.0).abs() < 1e-10);
        for s in -24..=24 {
            assert!(close(spec.reconstruct(s), c.get(s).unwrap(), 1e-9));
        }
    }

    #[test]
    fn correlation_requires_unit_vector() {
        let t = make_identity(3);
        let f = CellFunction::new(t.space(), vec![1.0, 1.0, 2.0]).unwrap();
        assert!(correlation_sequence(&t, &f, 3).is_err());
    }

    #[test]
    fn product_factorizes() {
        let s = make_random_automorphism(6, 1);
        let t = make_cyclic_rotation(5);
        let f = unit(vec![1.0, 2.0, 0.0, -1.0, 0.5, 1.0]);
        let g = unit(vec![3.0, 0.0, 1.0, 1.0, -2.0]);
        let st = direct_product(&s, &t).unwrap();
        let fg = f.tensor(&g).unwrap();
        let joint = correlation_sequence(&st, &fg, 40).unwrap();
        let factored = correlation_sequence(&s, &f, 40).unwrap().product(&correlation_sequence(&t, &g, 40).unwrap()).unwrap();
        for s in -40..=40 {
            assert!(close(joint.get(s).unwrap(), factored.get(s).unwrap(), 1e-10));
        }
    }

    #[test]
    fn long_cycles_use_the_same_autocorrelation() {
        let g: Vec<f64> = (0..5000).map(|i| ((i * 31 % 17) as f64 - 8.0) / 10.0).collect();
        let fast = periodic_autocorrelation(&g, 4999);
        for tau in [0usize, 1, 17, 2500, 4999] {
            let direct: f64 = (0..g.len()).map(|i| g[(i + g.len() - tau) % g.len()] * g[i]).sum();
            assert!((fast[tau] - direct).abs() < 1e-8);
        }
    }

    #[test]
    fn sequence_validation() {
        assert!(CorrelationSequence::from_nonnegative(vec![Complex64::new(2.0, 0.0)], "x").is_err());
        // σ̂ = (1, 2): the 2×2 Toeplitz minor has eigenvalue −1.
        assert!(CorrelationSequence::from_nonnegative(vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)], "x").is_err());
        let asym = [Complex64::new(0.5, 0.1), Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.1)];
        assert!(CorrelationSequence::from_symmetric(&asym, "x").is_err());
        let herm = [Complex64::new(0.5, -0.1), Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.1)];
        let c = CorrelationSequence::from_symmetric(&herm, "x").unwrap();
        assert_eq!(c.get(-1), Some(Complex64::new(0.5, -0.1)));
        assert_eq!(c.get(2), None);
        assert!(CorrelationSequence::dirac(1, 0, 3).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = CorrelationSequence::dirac(1, 3, 5).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("s,re,im\n-5,"));
        let back = CorrelationSequence::read_csv(buf.as_slice(), "file").unwrap();
        assert_eq!(back.nonnegative(), c.nonnegative());
        assert!(CorrelationSequence::read_csv("s,re,im\n0,1,0\n1,0,0\n".as_bytes(), "f").is_err());
        assert!(CorrelationSequence::read_csv("s,re,im\n0,1,0\n0,1,0\n".as_bytes(), "f").is_err());
        assert!(CorrelationSequence::read_csv("s,re\n0,1\n".as_bytes(), "f").is_err());
    }

    #[test]
    fn trapezoid_examples() {
        assert!(delta_profile(0, 2).is_err());
        assert!(delta_profile(5, 5).is_err());
        for p in [3usize, 4, 7, 16] {
            for k in 0..p {
                let d = delta_profile(k, p).unwrap();
                let mid = |j: usize| ((j % p) as f64 + 0.5) / p as f64;
                assert_eq!(d.value(mid(k)), 1.0);
                if p >= 4 {
                    assert_eq!(d.value(mid(k + 2)), 0.0);
                }
                assert!((d.value(mid(k + 1)) - 0.5).abs() < 1e-12);
                assert!((d.value(mid(k + p - 1)) - 0.5).abs() < 1e-12);
                // Midpoint quadrature on a fine grid; exact for piecewise linear
                // functions with breakpoints on the grid.
                let m = 64 * p;
                let mean: f64 = (0..m).map(|i| d.value((i as f64 + 0.5) / m as f64)).sum::<f64>() / m as f64;
                assert!((mean - 2.0 / p as f64).abs() < 1e-12);
                assert_eq!(d.mean(), 2.0 / p as f64);
            }
        }
        let d = delta_profile(2, 8).unwrap();
        assert_eq!(d.value_exact(Rational::new(5, 16)), Rational::new(1, 1));
        assert_eq!(d.value_exact(Rational::new(7, 16)), Rational::new(1, 2));
        assert_eq!(d.value_exact(Rational::new(15, 16)), Rational::new(0, 1));
        assert_eq!(d.value_exact(Rational::new(-11, 16)), Rational::new(1, 1));
    }

    #[test]
    fn trapezoid_fourier_matches_quadrature() {
        let d = delta_profile(3, 7).unwrap();
        let m = 7 * 2000;
        for s in [-9i64, -1, 0, 1, 2, 5, 13] {
            let q: Complex64 = (0..m)
                .map(|i| {
                    let x = (i as f64 + 0.5) / m as f64;
                    Complex64::from_polar(d.value(x), -2.0 * PI * s as f64 * x)
                })
                .sum::<Complex64>()
                / m as f64;
            assert!(close(q, d.fourier(s), 1e-6), "s = {s}: {q} vs {}", d.fourier(s));
        }
    }

    #[test]
    fn fejer_bound_dominates_sup_on_grid() {
        // Evaluate S_d(Δ) − Δ on a dense grid and check the analytic bound.
        for (p, d) in [(3usize, 10usize), (5, 40), (8, 64), (16, 200)] {
            let tri = delta_profile(1, p).unwrap();
            let coeffs: Vec<(i64, Complex64)> = (-(d as i64)..=d as i64)
                .map(|s| (s, tri.fourier(s) * (1.0 - s.unsigned_abs() as f64 / (d + 1) as f64)))
                .collect();
            let grid = 16 * p * d;
            let mut sup: f64 = 0.0;
            for i in 0..grid {
                let x = i as f64 / grid as f64;
                let approx: Complex64 = coeffs.iter().map(|&(s, c)| c * Complex64::from_polar(1.0, 2.0 * PI * s as f64 * x)).sum();
                sup = sup.max((approx.re - tri.value(x)).abs());
            }
            let bound = fejer_bound(p, d);
            assert!(sup <= bound, "P={p} d={d}: sup {sup} > bound {bound}");
            assert!(bound < 3.0 * sup + 1e-6, "bound should be reasonably tight");
        }
    }

    #[test]
    fn fejer_bound_decreases_with_degree() {
        let mut last = f64::INFINITY;
        for d in [16usize, 64, 256, 1024, 4096] {
            let b = fejer_bound(8, d);
            assert!(b < last);
            last = b;
        }
        // At degree 0 the Fejér sum is the constant 2/P.
        assert!(fejer_bound(8, 0) >= 1.0 - 2.0 / 8.0);
    }

    #[test]
    fn lebesgue_integral_is_two_over_p() {
        let c = CorrelationSequence::lebesgue(400).unwrap();
        for (k, p) in [(0usize, 3usize), (4, 9), (15, 16)] {
            for d in [0usize, 7, 400] {
                let r = delta_integral(&c, k, p, d).unwrap();
                assert!((r.value - 2.0 / p as f64).abs() < 1e-15);
            }
        }
        assert!(delta_integral(&c, 0, 3, 401).is_err());
    }

    #[test]
    fn dirac_integral_converges_to_point_values() {
        let c = CorrelationSequence::dirac(0, 1, 20000).unwrap();
        let p = 8;
        for k in 0..p {
            let r = delta_integral(&c, k, p, 20000).unwrap();
            let exact = delta_profile(k, p).unwrap().value(0.0);
            assert!((r.value - exact).abs() <= r.bound, "k={k}: {} vs {exact} ± {}", r.value, r.bound);
            assert_eq!(exact, if k == 0 || k == p - 1 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn rotation_eight_atomic_cross_check() {
        let t = make_cyclic_rotation(8);
        let f = unit(vec![1.0, 3.0, -1.0, 2.0, 0.0, 1.0, 1.0, -2.0]);
        let spec = atomic_spectrum(&t, &f).unwrap();
        let c = correlation_sequence(&t, &f, 3000).unwrap();
        for p in [3usize, 5, 8, 12] {
            for k in 0..p {
                let r = delta_integral(&c, k, p, 3000).unwrap();
                let exact = spec.integrate(&delta_profile(k, p).unwrap());
                assert!((r.value - exact).abs() <= r.bound);
            }
        }
    }

    #[test]
    fn d_count_examples() {
        let leb = CorrelationSequence::lebesgue(5000).unwrap();
        for (n, p) in [(1u64, 3usize), (2, 8), (8, 16)] {
            let c = d_count(&leb, n, p, 5000).unwrap();
            assert_eq!((c.count, c.certified), (0, true), "N={n} P={p}");
        }
        let dirac = CorrelationSequence::dirac(0, 1, 1 << 14).unwrap();
        let c = d_count(&dirac, 2, 16, 1 << 14).unwrap();
        assert_eq!((c.count, c.certified), (14, true));

        let t = make_cyclic_rotation(4);
        let f = unit(vec![1.0, 2.0, 3.0, 5.0]);
        assert_eq!(atomic_spectrum(&t, &f).unwrap().atoms().len(), 4);
        let corr = correlation_sequence(&t, &f, 1 << 17).unwrap();
        let c = d_count(&corr, 8, 64, 1 << 17).unwrap();
        assert!(c.certified);
        assert!(c.count >= 56);
        assert!(d_count(&corr, 0, 64, 10).is_err());
    }

    #[test]
    fn classify_dirac_lebesgue_mixture() {
        let dirac = CorrelationSequence::dirac(0, 1, 1 << 17).unwrap();
        let v = classify_singular(&dirac, &[2, 4, 8], &default_p_schedule(), DegreePolicy::default()).unwrap();
        assert_eq!(v.verdict, Verdict::SingularWitnessed);
        assert!(v.witnesses.iter().all(|w| w.p <= 64));
        assert_eq!(v.witness, Some(Witness { n: 8, p: 32 }));
        assert!(v.margin > 0.0);

        let leb = CorrelationSequence::lebesgue(1 << 12).unwrap();
        let v = classify_singular(&leb, &[2], &[3, 4, 5, 8, 16], DegreePolicy::default()).unwrap();
        assert_eq!(v.verdict, Verdict::NotSingularAtHorizon);
        assert!(v.witness.is_none());
        assert!(v.rows.iter().all(|r| r.count == 0));

        let mix = CorrelationSequence::mixture(&[(0.5, &dirac), (0.5, &CorrelationSequence::lebesgue(1 << 17).unwrap())]).unwrap();
        let v = classify_singular(&mix, &[2, 4, 8], &[4, 8, 16, 32, 64], DegreePolicy::default()).unwrap();
        assert_eq!(v.verdict, Verdict::NotSingularAtHorizon);
        assert!(v.margin <= 0.0);
    }

    #[test]
    fn classify_reports_inconclusive_when_degree_is_short() {
        let dirac = CorrelationSequence::dirac(0, 1, 64).unwrap();
        let v = classify_singular(&dirac, &[8], &[32], DegreePolicy::Fixed { degree: 64 }).unwrap();
        assert_eq!(v.verdict, Verdict::Inconclusive);
        assert!(v.witness.is_none());
        assert!(classify_singular(&dirac, &[], &[32], DegreePolicy::default()).is_err());
        assert!(classify_singular(&dirac, &[2], &[2], DegreePolicy::default()).is_err());
        assert!(classify_singular(&dirac, &[2], &[8], DegreePolicy::Fixed { degree: 65 }).is_err());
    }

    #[test]
    fn finite_systems_are_witnessed_singular() {
        let t = make_cyclic_rotation(4);
        let f = unit(vec![1.0, 2.0, 3.0, 5.0]);
        let corr = correlation_sequence(&t, &f, 1 << 16).unwrap();
        let v = classify_singular(&corr, &[2, 4], &default_p_schedule(), DegreePolicy::default()).unwrap();
        assert_eq!(v.verdict, Verdict::SingularWitnessed);
    }

    #[test]
    fn verdict_serializes() {
        let dirac = CorrelationSequence::dirac(0, 1, 1 << 12).unwrap();
        let v = classify_singular(&dirac, &[2], &[8], DegreePolicy::default()).unwrap();
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.contains("\"verdict\":\"singular_witnessed\""));
        let back: SingularityVerdict = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn atomic_reconstruction_matches(n in 1usize..64, seed in any::<u64>(), raw in proptest::collection::vec(-3.0f64..3.0, 64)) {
            let t = make_random_automorphism(n, seed);
            let mut values = raw[..n].to_vec();
            values[0] += 4.0;
            let f = unit(values);
            let spec = atomic_spectrum(&t, &f).unwrap();
            let c = correlation_sequence(&t, &f, 2 * n).unwrap();
            prop_assert!((spec.total_mass() - 1.0).abs() < 1e-10);
            for s in -(2 * n as i64)..=(2 * n as i64) {
                prop_assert!(close(spec.reconstruct(s), c.get(s).unwrap(), 1e-9));
            }
        }

        #[test]
        fn witnesses_persist_under_larger_degree(extra in 1usize..4) {
            let dirac = CorrelationSequence::dirac(0, 1, 1 << 16).unwrap();
            let base = classify_singular(&dirac, &[2], &[8], DegreePolicy::Fixed { degree: 4096 }).unwrap();
            prop_assert_eq!(base.verdict, Verdict::SingularWitnessed);
            let more = classify_singular(&dirac, &[2], &[8, 16], DegreePolicy::Fixed { degree: 4096 << extra }).unwrap();
            prop_assert_eq!(more.verdict, Verdict::SingularWitnessed);
        }
    }
}
