//! Exact arithmetic in `Z_n`: factored moduli, residues, weight sets built
//! from the unit group, natural maps between moduli, unit lifting along a
//! divisor, and the coset test for pairs over a prime field.

use crate::{Error, Result};

/// A modulus `n ≥ 2` together with its prime factorization.
///
/// `omega` counts prime factors with multiplicity, so `omega(12) = 3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZnContext {
    n: u64,
    factorization: Vec<(u64, u32)>,
    omega: u32,
}

impl ZnContext {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadModulus(n));
        }
        let factorization = factorize(n);
        let omega = factorization.iter().map(|&(_, e)| e).sum();
        Ok(ZnContext { n, factorization, omega })
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    /// `(prime, exponent)` pairs with primes strictly increasing.
    pub fn factorization(&self) -> &[(u64, u32)] {
        &self.factorization
    }

    /// Number of prime factors counted with multiplicity.
    pub fn omega(&self) -> u32 {
        self.omega
    }

    pub fn is_prime(&self) -> bool {
        self.omega == 1
    }

    pub fn is_prime_power(&self) -> bool {
        self.factorization.len() == 1
    }

    pub fn is_squarefree(&self) -> bool {
        self.factorization.iter().all(|&(_, e)| e == 1)
    }

    pub fn prime_divisors(&self) -> impl Iterator<Item = u64> + '_ {
        self.factorization.iter().map(|&(p, _)| p)
    }

    /// Euler's totient, from the factorization.
    pub fn phi(&self) -> u64 {
        self.factorization
            .iter()
            .map(|&(p, e)| (p - 1) * p.pow(e - 1))
            .product()
    }

    /// All divisors of `n`, sorted ascending (includes 1 and `n`).
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factorization {
            let prev = divs.clone();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                divs.extend(prev.iter().map(|&d| d * pk));
            }
        }
        divs.sort_unstable();
        divs
    }

    pub fn residue(&self, value: u64) -> Residue {
        Residue::reduced(value, self.n)
    }

    /// The units of `Z_n` as raw values, sorted ascending.
    pub fn unit_values(&self) -> Vec<u64> {
        (1..self.n).filter(|&x| gcd(x, self.n) == 1).collect()
    }
}

/// An element of `Z_n`, always stored reduced to `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    /// Reduces `value` mod `modulus`. Panics if `modulus < 2`.
    pub fn reduced(value: u64, modulus: u64) -> Self {
        assert!(modulus >= 2, "modulus must be at least 2");
        Residue { value: value % modulus, modulus }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn is_unit(&self) -> bool {
        gcd(self.value, self.modulus) == 1
    }

    pub fn add(&self, other: Residue) -> Residue {
        assert_eq!(self.modulus, other.modulus, "modulus mismatch");
        Residue::reduced(self.value + other.value, self.modulus)
    }

    pub fn neg(&self) -> Residue {
        Residue::reduced(self.modulus - self.value, self.modulus)
    }

    pub fn mul(&self, other: Residue) -> Residue {
        assert_eq!(self.modulus, other.modulus, "modulus mismatch");
        Residue { value: mul_mod(self.value, other.value, self.modulus), modulus: self.modulus }
    }

    /// Multiplicative inverse, or `None` when not a unit.
    pub fn inv(&self) -> Option<Residue> {
        inv_mod(self.value, self.modulus).map(|v| Residue { value: v, modulus: self.modulus })
    }

    pub fn pow(&self, e: u64) -> Residue {
        Residue { value: pow_mod(self.value, e, self.modulus), modulus: self.modulus }
    }
}

impl std::fmt::Display for Residue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// How a weight set was specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// `A = {1}`.
    One,
    /// `A = {1, ..., n-1}`.
    AllNonzero,
    /// `A = U(n)^j = { x^j : x ∈ U(n) }`.
    UnitsPow(u32),
    /// An explicit set of nonzero residues.
    Explicit,
}

/// A nonempty set of nonzero residues mod `n`, materialized at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightSet {
    modulus: u64,
    kind: WeightKind,
    values: Vec<u64>,
    mask: Vec<u64>,
    unit_subgroup: bool,
}

impl WeightSet {
    fn from_values(modulus: u64, kind: WeightKind, mut values: Vec<u64>) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::BadModulus(modulus));
        }
        values.sort_unstable();
        values.dedup();
        if values.is_empty() {
            return Err(Error::EmptyWeights);
        }
        if let Some(&bad) = values.iter().find(|&&v| v == 0 || v >= modulus) {
            return Err(Error::BadWeight { value: bad, modulus });
        }
        let mut mask = vec![0u64; words_for(modulus)];
        for &v in &values {
            mask[(v / 64) as usize] |= 1u64 << (v % 64);
        }
        let unit_subgroup = match kind {
            WeightKind::One | WeightKind::UnitsPow(_) => true,
            WeightKind::AllNonzero | WeightKind::Explicit => {
                is_unit_subgroup(modulus, &values, &mask)
            }
        };
        Ok(WeightSet { modulus, kind, values, mask, unit_subgroup })
    }

    /// `A = {1}`.
    pub fn one(modulus: u64) -> Result<Self> {
        Self::from_values(modulus, WeightKind::One, vec![1])
    }

    /// `A = Z_n \ {0}`.
    pub fn all_nonzero(modulus: u64) -> Result<Self> {
        Self::from_values(modulus, WeightKind::AllNonzero, (1..modulus).collect())
    }

    /// `A = U(n)^j`, the image of the `j`-th power map on the units.
    ///
    /// Small moduli are memoized per thread; the decomposer asks for the
    /// same few power classes millions of times during bulk validation.
    pub fn units_pow(ctx: &ZnContext, j: u32) -> Result<Self> {
        use std::cell::RefCell;
        use std::collections::HashMap;
        thread_local! {
            static MEMO: RefCell<HashMap<(u64, u32), WeightSet>> = RefCell::new(HashMap::new());
        }
        if j == 0 {
            return Err(Error::BadWeightExponent);
        }
        let n = ctx.modulus();
        let memoizable = n <= 4096;
        if memoizable {
            if let Some(hit) = MEMO.with(|m| m.borrow().get(&(n, j)).cloned()) {
                return Ok(hit);
            }
        }
        let values: Vec<u64> = (1..n)
            .filter(|&x| gcd(x, n) == 1)
            .map(|x| pow_mod(x, j as u64, n))
            .collect();
        let set = Self::from_values(n, WeightKind::UnitsPow(j), values)?;
        if memoizable {
            MEMO.with(|m| m.borrow_mut().insert((n, j), set.clone()));
        }
        Ok(set)
    }

    /// An explicit set of nonzero residues.
    pub fn explicit(modulus: u64, values: &[u64]) -> Result<Self> {
        Self::from_values(modulus, WeightKind::Explicit, values.to_vec())
    }

    /// Parses the command-line weight syntax: `one`, `units`, `units^2`,
    /// `units^3`, `nonzero`, or `set:1,4,...`.
    pub fn parse(modulus: u64, text: &str) -> Result<Self> {
        let ctx = ZnContext::new(modulus)?;
        match text {
            "one" => Self::one(modulus),
            "nonzero" => Self::all_nonzero(modulus),
            "units" => Self::units_pow(&ctx, 1),
            _ => {
                if let Some(exp) = text.strip_prefix("units^") {
                    let j: u32 =
                        exp.parse().map_err(|_| Error::WeightParse(text.to_string()))?;
                    if j == 0 {
                        return Err(Error::WeightParse(text.to_string()));
                    }
                    Self::units_pow(&ctx, j)
                } else if let Some(list) = text.strip_prefix("set:") {
                    let values: Vec<u64> = list
                        .split(',')
                        .map(|s| s.trim().parse::<u64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::WeightParse(text.to_string()))?;
                    Self::explicit(modulus, &values)
                } else {
                    Err(Error::WeightParse(text.to_string()))
                }
            }
        }
    }

    /// Canonical textual descriptor, also used as the cache key.
    pub fn describe(&self) -> String {
        match self.kind {
            WeightKind::One => "one".to_string(),
            WeightKind::AllNonzero => "nonzero".to_string(),
            WeightKind::UnitsPow(1) => "units".to_string(),
            WeightKind::UnitsPow(j) => format!("units^{j}"),
            WeightKind::Explicit => {
                let list: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
                format!("set:{}", list.join(","))
            }
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// The materialized residues, sorted ascending.
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: u64) -> bool {
        v < self.modulus && self.mask[(v / 64) as usize] >> (v % 64) & 1 == 1
    }

    /// Whether the materialized set is a subgroup of `U(n)`.
    ///
    /// The search engine uses a faster state representation and first-term
    /// symmetry facts that hold for subgroups; everything falls back to a
    /// direct path otherwise.
    pub fn is_unit_subgroup(&self) -> bool {
        self.unit_subgroup
    }
}

fn is_unit_subgroup(modulus: u64, values: &[u64], mask: &[u64]) -> bool {
    // Finite and closed under multiplication implies subgroup. Skip the
    // quadratic closure check for very large explicit sets.
    if values.len() > 4096 {
        return false;
    }
    if values.iter().any(|&v| gcd(v, modulus) != 1) {
        return false;
    }
    for &a in values {
        for &b in values {
            let ab = mul_mod(a, b, modulus);
            if mask[(ab / 64) as usize] >> (ab % 64) & 1 == 0 {
                return false;
            }
        }
    }
    true
}

/// The split `n = n1 * n2` of a squarefree modulus, where `n1` collects the
/// prime divisors `p ≡ 1 (mod 3)` (where cubes have index 3 in `U(p)`) and
/// `n2` the rest (where `U(p)^3 = U(p)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeSplit {
    pub n1: u64,
    pub n2: u64,
    omega1: u32,
    omega2: u32,
}

impl CubeSplit {
    /// Number of prime divisors of `n1`.
    pub fn omega1(&self) -> u32 {
        self.omega1
    }

    /// Number of prime divisors of `n2`.
    pub fn omega2(&self) -> u32 {
        self.omega2
    }
}

/// Splits a squarefree `n` as `n1 * n2` by the residue of each prime mod 3.
/// Degenerate parts (`n1 = 1` or `n2 = 1`) are valid.
pub fn cube_split(ctx: &ZnContext) -> Result<CubeSplit> {
    if !ctx.is_squarefree() {
        return Err(Error::NotSquarefree(ctx.modulus()));
    }
    let mut n1 = 1u64;
    let mut n2 = 1u64;
    let mut omega1 = 0;
    let mut omega2 = 0;
    for p in ctx.prime_divisors() {
        if p % 3 == 1 {
            n1 *= p;
            omega1 += 1;
        } else {
            n2 *= p;
            omega2 += 1;
        }
    }
    Ok(CubeSplit { n1, n2, omega1, omega2 })
}

/// The units of `Z_n`: residues coprime to `n`, sorted ascending.
pub fn units(ctx: &ZnContext) -> Vec<Residue> {
    let n = ctx.modulus();
    ctx.unit_values().into_iter().map(|v| Residue { value: v, modulus: n }).collect()
}

/// The reduction homomorphism `Z_n -> Z_m` for a divisor `m` of `n`
/// (`m = n` is the identity).
pub fn natural_map(x: Residue, m: u64) -> Result<Residue> {
    if m < 2 {
        return Err(Error::BadModulus(m));
    }
    if x.modulus() % m != 0 {
        return Err(Error::NotADivisor { m, n: x.modulus() });
    }
    Ok(Residue::reduced(x.value(), m))
}

/// Lifts a unit `b` mod `m` to a unit `a` mod `n` with `a ≡ b (mod m)`,
/// where `m` divides `n`. With `square` set, `b` must be in `U(m)^2` and the
/// lift lands in `U(n)^2`.
///
/// Scans the progression `b, b+m, b+2m, ...`; the first `n/m` entries always
/// contain a unit lift. For the square variant the scan can miss, in which
/// case the unit squares mod `n` are enumerated directly (the smallest
/// matching one is returned, so the result is deterministic either way).
pub fn lift_unit(b: Residue, ctx: &ZnContext, square: bool) -> Result<Residue> {
    let m = b.modulus();
    let n = ctx.modulus();
    if n % m != 0 {
        return Err(Error::NotADivisor { m, n });
    }
    if !b.is_unit() {
        return Err(Error::NotAUnit { value: b.value(), modulus: m });
    }
    let square_set = if square {
        let squares = unit_square_values(m);
        if !squares.contains(&b.value()) {
            return Err(Error::NotAUnitSquare { value: b.value(), modulus: m });
        }
        Some(unit_square_values(n))
    } else {
        None
    };
    for i in 0..(n / m) {
        let a = b.value() + i * m;
        if gcd(a, n) != 1 {
            continue;
        }
        match &square_set {
            None => return Ok(Residue { value: a, modulus: n }),
            Some(squares) if squares.binary_search(&a).is_ok() => {
                return Ok(Residue { value: a, modulus: n })
            }
            _ => {}
        }
    }
    if let Some(squares) = square_set {
        if let Some(&a) = squares.iter().find(|&&a| a % m == b.value()) {
            return Ok(Residue { value: a, modulus: n });
        }
    }
    Err(Error::Internal(format!(
        "no unit lift of {} mod {} to modulus {} (square={})",
        b.value(),
        m,
        n,
        square
    )))
}

fn unit_square_values(n: u64) -> Vec<u64> {
    let mut v: Vec<u64> =
        (1..n).filter(|&x| gcd(x, n) == 1).map(|x| mul_mod(x, x, n)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Decides whether the pair `(x, y)` over a prime `p` has no A-weighted
/// zero-sum subsequence, for `A` a subgroup of `U(p)`: true iff `x ≠ 0`,
/// `y ≠ 0` and `x·(-y)^{-1} ∉ A` (i.e. `x` and `-y` lie in different cosets
/// of `A` in `U(p)`).
pub fn coset_test_pair(x: Residue, y: Residue, weights: &WeightSet) -> Result<bool> {
    let p = weights.modulus();
    if x.modulus() != p || y.modulus() != p {
        return Err(Error::ModulusMismatch {
            left: x.modulus().min(y.modulus()),
            right: p,
        });
    }
    let ctx = ZnContext::new(p)?;
    if !ctx.is_prime() {
        return Err(Error::NonPrimeModulus(p));
    }
    if !weights.is_unit_subgroup() {
        return Err(Error::NotAUnitSubgroup(p));
    }
    if x.is_zero() || y.is_zero() {
        return Ok(false);
    }
    let ratio = x.mul(y.neg().inv().expect("nonzero residue mod a prime is a unit"));
    Ok(!weights.contains(ratio.value()))
}

pub(crate) fn words_for(n: u64) -> usize {
    (n as usize + 63) / 64
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, n: u64) -> u64 {
    let mut acc = 1 % n;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    acc
}

pub(crate) fn inv_mod(a: u64, n: u64) -> Option<u64> {
    let (mut r0, mut r1) = (n as i128, (a % n) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(n as i128) as u64)
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}
