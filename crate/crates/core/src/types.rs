//! Type classes, empirical lossy rates and transitional types.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rd::{rate_distortion, DistortionSpec, Pmf, DEFAULT_TOL};

/// Largest number of type classes `enumerate_types` will materialize.
pub const MAX_TYPE_COUNT: u64 = 50_000_000;

/// A composition of `n` into `|X|` non-negative parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TypeClass {
    counts: Vec<u32>,
    n: u32,
}

impl TypeClass {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidType("alphabet must have at least two letters".into()));
        }
        let n: u64 = counts.iter().map(|&c| c as u64).sum();
        if n == 0 || n > u32::MAX as u64 {
            return Err(Error::InvalidType(format!("blocklength {n} out of range")));
        }
        Ok(TypeClass { counts, n: n as u32 })
    }

    /// Type of a sequence over a `k`-letter alphabet.
    pub fn of_sequence(x: &[u8], k: usize) -> Result<Self> {
        let mut counts = vec![0u32; k];
        for &s in x {
            if s as usize >= k {
                return Err(Error::SymbolOutOfRange {
                    symbol: s as u32,
                    alphabet: k,
                });
            }
            counts[s as usize] += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// Empirical distribution `Q_T`.
    pub fn pmf(&self) -> Pmf {
        Pmf::from_counts(&self.counts).expect("n >= 1")
    }

    /// The type obtained by appending letter `a`.
    pub fn extend(&self, a: usize) -> TypeClass {
        let mut counts = self.counts.clone();
        counts[a] += 1;
        TypeClass {
            counts,
            n: self.n + 1,
        }
    }

    /// `|T|`, or `None` if it does not fit in a `u64`.
    pub fn size(&self) -> Option<u64> {
        multinomial(&self.counts)
    }

    /// `log2 |T|`.
    pub fn size_log2(&self) -> f64 {
        let lf = |m: u32| ln_factorial(m as u64);
        (lf(self.n) - self.counts.iter().map(|&c| lf(c)).sum::<f64>()) / std::f64::consts::LN_2
    }

    /// Smallest member in lexicographic order.
    pub fn first_member(&self) -> Vec<u8> {
        let mut x = Vec::with_capacity(self.n());
        for (s, &c) in self.counts.iter().enumerate() {
            x.extend(std::iter::repeat_n(s as u8, c as usize));
        }
        x
    }
}

fn ln_factorial(m: u64) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// Multinomial coefficient `n! / prod c_i!`, `None` on overflow.
pub fn multinomial(counts: &[u32]) -> Option<u64> {
    let mut acc: u128 = 1;
    let mut n: u64 = 0;
    for &c in counts {
        for i in 1..=c as u64 {
            n += 1;
            // acc * n / i stays integral: acc is C(n-1, i-1) times earlier factors
            acc = acc.checked_mul(n as u128)? / i as u128;
            if acc > u64::MAX as u128 {
                return None;
            }
        }
    }
    Some(acc as u64)
}

/// Number of type classes `C(n + k - 1, k - 1)`.
pub fn type_count(n: usize, k: usize) -> Result<u64> {
    let overflow = || Error::TypeCountOverflow {
        n: n as u32,
        alphabet: k,
    };
    let n = u32::try_from(n).map_err(|_| overflow())?;
    multinomial(&[n, (k as u32).saturating_sub(1)]).ok_or_else(overflow)
}

/// Every type at blocklength `n`, in descending lexicographic order of counts,
/// so `(n, 0, ..)` comes first.
pub fn enumerate_types(n: usize, alphabet_size: usize) -> Result<Vec<TypeClass>> {
    if n == 0 || alphabet_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "need n >= 1 and alphabet size >= 2, got n = {n}, size = {alphabet_size}"
        )));
    }
    let total = type_count(n, alphabet_size)?;
    if total > MAX_TYPE_COUNT {
        return Err(Error::TypeCountOverflow {
            n: n as u32,
            alphabet: alphabet_size,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut counts = vec![0u32; alphabet_size];
    fn rec(pos: usize, left: u32, counts: &mut Vec<u32>, out: &mut Vec<TypeClass>, n: u32) {
        let last = counts.len() - 1;
        if pos == last {
            counts[pos] = left;
            out.push(TypeClass {
                counts: counts.clone(),
                n,
            });
            return;
        }
        for c in (0..=left).rev() {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, out, n);
        }
    }
    rec(0, n as u32, &mut counts, &mut out, n as u32);
    Ok(out)
}

/// `n * R(Q_T, D)` in bits, uncached.
pub fn empirical_lossy_rate(t: &TypeClass, spec: &DistortionSpec) -> Result<f64> {
    Ok(t.n() as f64 * rate_distortion(&t.pmf(), spec, DEFAULT_TOL)?.rate)
}

/// Memoized per-symbol rates keyed by exact counts, for one distortion spec.
/// Safe for concurrent use.
#[derive(Debug)]
pub struct RateCache {
    spec: DistortionSpec,
    rates: RwLock<HashMap<Vec<u32>, f64>>,
}

impl RateCache {
    pub fn new(spec: DistortionSpec) -> Self {
        RateCache {
            spec,
            rates: RwLock::new(HashMap::new()),
        }
    }

    pub fn spec(&self) -> &DistortionSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.rates.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.rates.write().unwrap().clear();
    }

    /// Per-symbol rate `R(Q, D)` of the empirical distribution `counts / n`.
    pub fn rate(&self, counts: &[u32]) -> Result<f64> {
        if let Some(&r) = self.rates.read().unwrap().get(counts) {
            return Ok(r);
        }
        let r = rate_distortion(&Pmf::from_counts(counts)?, &self.spec, DEFAULT_TOL)?;
        if !r.converged {
            return Err(Error::Numerical(format!(
                "rate-distortion solver did not converge for counts {counts:?}"
            )));
        }
        self.rates.write().unwrap().insert(counts.to_vec(), r.rate);
        Ok(r.rate)
    }

    /// Total empirical lossy rate `n * R(Q_T, D)`.
    pub fn empirical_lossy_rate(&self, t: &TypeClass) -> Result<f64> {
        Ok(t.n() as f64 * self.rate(t.counts())?)
    }

    /// Total rate of `T` extended by letter `a`.
    pub fn extended_rate(&self, t: &TypeClass, a: usize) -> Result<f64> {
        let mut c = t.counts.clone();
        c[a] += 1;
        Ok((t.n() + 1) as f64 * self.rate(&c)?)
    }

    pub fn is_transitional(&self, t: &TypeClass, gamma: f64) -> Result<bool> {
        if self.empirical_lossy_rate(t)? > gamma {
            return Ok(false);
        }
        for a in 0..t.alphabet_size() {
            if self.extended_rate(t, a)? > gamma {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

pub fn is_transitional(t: &TypeClass, gamma: f64, spec: &DistortionSpec) -> Result<bool> {
    RateCache::new(spec.clone()).is_transitional(t, gamma)
}

/// Transitional types at one blocklength.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionalSet {
    pub n: usize,
    pub gamma: f64,
    pub members: Vec<TypeClass>,
    /// `n^(|X| - 2)`, the size bound the construction is expected to respect.
    pub count_bound: f64,
}

impl TransitionalSet {
    pub fn exceeds_bound(&self) -> bool {
        self.members.len() as f64 > self.count_bound
    }
}

pub fn transitional_set(n: usize, gamma: f64, spec: &DistortionSpec) -> Result<TransitionalSet> {
    transitional_set_cached(n, gamma, &RateCache::new(spec.clone()))
}

pub fn transitional_set_cached(n: usize, gamma: f64, cache: &RateCache) -> Result<TransitionalSet> {
    let k = cache.spec().source_size();
    let mut members = Vec::new();
    for t in enumerate_types(n, k)? {
        if cache.is_transitional(&t, gamma)? {
            members.push(t);
        }
    }
    let set = TransitionalSet {
        n,
        gamma,
        members,
        count_bound: (n as f64).powi(k as i32 - 2),
    };
    if set.exceeds_bound() {
        log::debug!(
            "n = {n}: {} transitional types exceed n^(|X|-2) = {}",
            set.members.len(),
            set.count_bound
        );
    }
    Ok(set)
}

/// Lexicographic rank of `x` among the members of its type class.
pub fn rank(x: &[u8], counts: &[u32]) -> u64 {
    let mut rem = counts.to_vec();
    let mut m = multinomial(&rem).expect("type size fits in u64");
    let mut r = 0u64;
    let mut left = x.len() as u64;
    for &s in x {
        let s = s as usize;
        for &c in &rem[..s] {
            r += mul_div(m, c as u64, left);
        }
        m = mul_div(m, rem[s] as u64, left);
        rem[s] -= 1;
        left -= 1;
    }
    r
}

/// Inverse of [`rank`].
pub fn unrank(mut r: u64, counts: &[u32]) -> Vec<u8> {
    let mut rem = counts.to_vec();
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    let mut m = multinomial(&rem).expect("type size fits in u64");
    let mut left = n;
    let mut x = Vec::with_capacity(n as usize);
    for _ in 0..n {
        for s in 0..rem.len() {
            if rem[s] == 0 {
                continue;
            }
            let sub = mul_div(m, rem[s] as u64, left);
            if r < sub {
                x.push(s as u8);
                m = sub;
                rem[s] -= 1;
                break;
            }
            r -= sub;
        }
        left -= 1;
    }
    x
}

/// `a * b / c` for results known to be integral.
#[inline]
pub(crate) fn mul_div(a: u64, b: u64, c: u64) -> u64 {
    match a.checked_mul(b) {
        Some(p) => p / c,
        None => (a as u128 * b as u128 / c as u128) as u64,
    }
}

/// Advance `x` to the next permutation in lexicographic order; returns
/// `false` (leaving `x` sorted ascending) after the last one.
pub fn next_permutation(x: &mut [u8]) -> bool {
    if x.len() < 2 {
        return false;
    }
    let mut i = x.len() - 1;
    while i > 0 && x[i - 1] >= x[i] {
        i -= 1;
    }
    if i == 0 {
        x.reverse();
        return false;
    }
    let mut j = x.len() - 1;
    while x[j] <= x[i - 1] {
        j -= 1;
    }
    x.swap(i - 1, j);
    x[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd::h2;

    #[test]
    fn enumeration_order_and_count() {
        let t: Vec<Vec<u32>> = enumerate_types(2, 2)
            .unwrap()
            .into_iter()
            .map(|t| t.counts)
            .collect();
        assert_eq!(t, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(enumerate_types(4, 3).unwrap().len(), 15);
        assert!(enumerate_types(0, 2).is_err());
        assert!(matches!(
            enumerate_types(1_000_000, 64),
            Err(Error::TypeCountOverflow { .. })
        ));
    }

    #[test]
    fn lossy_rate_examples() {
        let s0 = DistortionSpec::hamming(2, 0.0).unwrap();
        let t = TypeClass::new(vec![3, 0]).unwrap();
        assert_eq!(empirical_lossy_rate(&t, &s0).unwrap(), 0.0);
        let t = TypeClass::new(vec![1, 1]).unwrap();
        assert!((empirical_lossy_rate(&t, &s0).unwrap() - 2.0).abs() < 1e-9);
        let s = DistortionSpec::hamming(2, 0.25).unwrap();
        let t = TypeClass::new(vec![2, 2]).unwrap();
        let want = 4.0 * (1.0 - h2(0.25));
        assert!((empirical_lossy_rate(&t, &s).unwrap() - want).abs() < 1e-8);
    }

    #[test]
    fn transitional_examples() {
        let s0 = DistortionSpec::hamming(2, 0.0).unwrap();
        assert!(is_transitional(&TypeClass::new(vec![3, 0]).unwrap(), 1.5, &s0).unwrap());
        assert!(!is_transitional(&TypeClass::new(vec![1, 1]).unwrap(), 1.5, &s0).unwrap());
        let set = transitional_set(3, 1.5, &s0).unwrap();
        let got: Vec<&[u32]> = set.members.iter().map(|t| t.counts()).collect();
        assert_eq!(got, vec![&[3, 0][..], &[0, 3][..]]);
        // nothing crosses a threshold above (n+1) log|X|
        assert!(transitional_set(3, 4.5, &s0).unwrap().members.is_empty());
    }

    #[test]
    fn rank_roundtrip() {
        let counts = [3u32, 2, 2];
        let size = multinomial(&counts).unwrap();
        assert_eq!(size, 210);
        let mut x = TypeClass::new(counts.to_vec()).unwrap().first_member();
        for r in 0..size {
            assert_eq!(rank(&x, &counts), r);
            assert_eq!(unrank(r, &counts), x);
            next_permutation(&mut x);
        }
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&[6, 6]), Some(924));
        assert_eq!(multinomial(&[0, 0]), Some(1));
        assert_eq!(multinomial(&[200, 200]), None);
        assert_eq!(type_count(4, 3).unwrap(), 15);
        let t = TypeClass::new(vec![6, 6]).unwrap();
        assert!((t.size_log2() - 924f64.log2()).abs() < 1e-9);
    }
}
