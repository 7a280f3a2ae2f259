//! The inverse direction of the characterization theorems: given an extremal
//! sequence, extract the structural certificate (the prime `p`, the middle
//! positions, the recursive children and the connector conditions) and
//! re-validate it; plus A-equivalence canonicalization and the closed-form
//! shape matcher for small numbers of prime factors.
//!
//! Certificates serialize to a canonical JSON form: field order is fixed by
//! declaration order, and the only unordered array (`alternate_primes`) is
//! sorted ascending.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::builder::{BuildRecipe, RecipeNode};
use crate::engine::{
    for_each_extremal, has_zero_window, is_zero_sum, zero_window_free, FirstTerm, SearchBudget,
    Seq,
};
use crate::known::{pattern_length, Family};
use crate::ring::{coset_test_pair, gcd, mul_mod, Residue, WeightSet, ZnContext};
use crate::{Error, Result};

/// A machine-checkable proof that a sequence has the recursive structure the
/// characterization prescribes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub family: Family,
    pub n: u64,
    pub node: CertNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertNode {
    /// Base case over a prime modulus.
    Leaf { n: u64, base: LeafBase, terms: Vec<u64> },
    /// A recursive split: `p` divides every term except those at the middle
    /// positions; deleting the middles and dividing by `p` yields the
    /// children over `Z_{n/p}`.
    Split {
        n: u64,
        p: u64,
        /// Other primes that also fit the divisibility pattern (possible for
        /// the cubes family; always empty for squares).
        alternate_primes: Vec<u64>,
        /// 0-based positions of the connector terms: one for two-part
        /// splits, two for three-part splits.
        middle_positions: Vec<usize>,
        connector: ConnectorCheck,
        children: Vec<CertChild>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeafBase {
    UnitSingleton,
    CosetPair,
}

/// The verified condition on the connector terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConnectorCheck {
    /// Two-part split: the single middle term is not divisible by `p`.
    NotDivisible { term: u64 },
    /// Three-part split: the image of the middle pair mod `p` passes the
    /// coset test for the family's weights over `Z_p`.
    CosetPair { terms: [u64; 2], image: [u64; 2] },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertChild {
    pub terms: Vec<u64>,
    pub node: CertNode,
}

impl Certificate {
    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates always serialize")
    }

    /// Re-checks every claim the certificate makes about `s`, from the
    /// zero-window-freeness of the root down to the leaf base cases.
    pub fn validate(&self, s: &Seq) -> Result<()> {
        let ctx = ZnContext::new(self.n)?;
        if s.modulus() != self.n {
            return Err(Error::ModulusMismatch { left: s.modulus(), right: self.n });
        }
        let weights = self.family.weight_set(&ctx)?;
        let len = pattern_length(self.family, &ctx)?;
        if s.len() as u64 != len {
            return Err(Error::CertificateInvalid(format!(
                "sequence length {} does not match the family length {len}",
                s.len()
            )));
        }
        if !zero_window_free(s, &weights)? {
            return Err(Error::CertificateInvalid("sequence has a zero window".to_string()));
        }
        validate_node(&self.node, s.terms(), self.family)
    }

    /// The build recipe with the same split skeleton (primes, connectors and
    /// base cases) as this certificate.
    pub fn to_recipe(&self) -> BuildRecipe {
        BuildRecipe { family: self.family, node: node_to_recipe(&self.node) }
    }
}

fn node_to_recipe(node: &CertNode) -> RecipeNode {
    match node {
        CertNode::Leaf { n, terms, .. } => RecipeNode::Leaf { n: *n, terms: terms.clone() },
        CertNode::Split { n, p, middle_positions: _, connector, children, .. } => {
            let connectors = match connector {
                ConnectorCheck::NotDivisible { term } => vec![*term],
                ConnectorCheck::CosetPair { terms, .. } => terms.to_vec(),
            };
            RecipeNode::Split {
                n: *n,
                p: *p,
                connectors,
                children: children.iter().map(|c| node_to_recipe(&c.node)).collect(),
            }
        }
    }
}

/// Decomposes a verified extremal sequence into its structural certificate.
///
/// The sequence must have the family's extremal length and no zero window
/// (rejected as [`Error::NotExtremal`] otherwise). A structural failure —
/// no prime fitting the divisibility pattern, a connector image failing its
/// coset test, or a non-unique structural prime for the squares family —
/// is reported loudly as [`Error::CharacterizationViolated`], since it would
/// contradict the characterization.
pub fn decompose(s: &Seq, family: Family, ctx: &ZnContext) -> Result<Certificate> {
    if family == Family::One {
        return Err(Error::Domain(
            "the one family has no structural certificate; its extremal sequences are \
             exactly the prefix-sum-distinct ones"
                .to_string(),
        ));
    }
    if s.modulus() != ctx.modulus() {
        return Err(Error::ModulusMismatch { left: s.modulus(), right: ctx.modulus() });
    }
    let weights = family.weight_set(ctx)?;
    let len = pattern_length(family, ctx)?;
    if s.len() as u64 != len {
        return Err(Error::NotExtremal(format!(
            "length {} does not match the extremal length {len} for {family} over Z_{}",
            s.len(),
            ctx.modulus()
        )));
    }
    if let Some((i, j)) = has_zero_window(s, &weights)? {
        return Err(Error::NotExtremal(format!("zero window at [{i}..={j}]")));
    }
    let node = decompose_node(s.terms(), family, ctx)?;
    Ok(Certificate { family, n: ctx.modulus(), node })
}

fn three_part(family: Family, p: u64) -> bool {
    match family {
        Family::Units => false,
        Family::UnitsSquared => true,
        Family::UnitsCubed => p % 3 == 1,
        Family::One => unreachable!(),
    }
}

fn middle_positions(len: usize, three: bool) -> Vec<usize> {
    if three {
        vec![(len + 1) / 3 - 1, 2 * (len + 1) / 3 - 1]
    } else {
        vec![(len + 1) / 2 - 1]
    }
}

fn decompose_node(terms: &[u64], family: Family, ctx: &ZnContext) -> Result<CertNode> {
    let n = ctx.modulus();
    if ctx.is_prime() {
        return decompose_leaf(terms, family, ctx);
    }
    // Find every prime whose non-divisible positions are exactly the
    // mandated middles.
    let mut fits: Vec<(u64, Vec<usize>)> = Vec::new();
    for p in ctx.prime_divisors() {
        let nondiv: Vec<usize> =
            terms.iter().enumerate().filter(|(_, &t)| t % p != 0).map(|(i, _)| i).collect();
        let expected = middle_positions(terms.len(), three_part(family, p));
        if nondiv == expected {
            fits.push((p, expected));
        }
    }
    let Some((p, middles)) = fits.first().cloned() else {
        return Err(Error::CharacterizationViolated(format!(
            "no prime divisor of {n} divides all terms off the mandated middle positions"
        )));
    };
    let alternate_primes: Vec<u64> = fits.iter().skip(1).map(|&(q, _)| q).collect();
    if family == Family::UnitsSquared {
        // The structural prime is unique for squares: it is coprime to
        // exactly two terms and every other prime divisor to at least three.
        if !alternate_primes.is_empty() {
            return Err(Error::CharacterizationViolated(format!(
                "structural prime for squares is not unique: {p} and {}",
                alternate_primes[0]
            )));
        }
        for q in ctx.prime_divisors().filter(|&q| q != p) {
            let coprime = terms.iter().filter(|&&t| t % q != 0).count();
            if coprime < 3 {
                return Err(Error::CharacterizationViolated(format!(
                    "prime {q} is coprime to only {coprime} terms; expected at least 3"
                )));
            }
        }
    }
    let connector = match middles.as_slice() {
        [m] => ConnectorCheck::NotDivisible { term: terms[*m] },
        [m1, m2] => {
            let pair = [terms[*m1], terms[*m2]];
            let image = [pair[0] % p, pair[1] % p];
            let j = if family == Family::UnitsSquared { 2 } else { 3 };
            let weights_p = WeightSet::units_pow(&ZnContext::new(p)?, j)?;
            if !coset_test_pair(
                Residue::reduced(image[0], p),
                Residue::reduced(image[1], p),
                &weights_p,
            )? {
                return Err(Error::CharacterizationViolated(format!(
                    "connector image ({}, {}) mod {p} fails the coset test",
                    image[0], image[1]
                )));
            }
            ConnectorCheck::CosetPair { terms: pair, image }
        }
        _ => unreachable!(),
    };
    let child_ctx = ZnContext::new(n / p)?;
    let child_weights = family.weight_set(&child_ctx)?;
    let mut children = Vec::new();
    let mut start = 0usize;
    let end = terms.len();
    for (i, boundary) in middles.iter().chain(std::iter::once(&end)).enumerate() {
        let part: Vec<u64> = terms[start..*boundary].iter().map(|&t| t / p).collect();
        start = boundary + 1;
        let child_seq = Seq::new(n / p, part.clone())?;
        if !zero_window_free(&child_seq, &child_weights)? {
            return Err(Error::CharacterizationViolated(format!(
                "child {i} over Z_{} has a zero window",
                n / p
            )));
        }
        let node = decompose_node(&part, family, &child_ctx)?;
        children.push(CertChild { terms: part, node });
    }
    Ok(CertNode::Split {
        n,
        p,
        alternate_primes,
        middle_positions: middles,
        connector,
        children,
    })
}

fn decompose_leaf(terms: &[u64], family: Family, ctx: &ZnContext) -> Result<CertNode> {
    let p = ctx.modulus();
    let pair = match family {
        Family::Units => false,
        Family::UnitsSquared => true,
        Family::UnitsCubed => p % 3 == 1,
        Family::One => unreachable!(),
    };
    let base = if pair {
        let j = if family == Family::UnitsSquared { 2 } else { 3 };
        let weights = WeightSet::units_pow(ctx, j)?;
        if terms.len() != 2
            || !coset_test_pair(
                Residue::reduced(terms[0], p),
                Residue::reduced(terms[1], p),
                &weights,
            )?
        {
            return Err(Error::CharacterizationViolated(format!(
                "expected a coset pair over Z_{p}"
            )));
        }
        LeafBase::CosetPair
    } else {
        if terms.len() != 1 || gcd(terms[0], p) != 1 {
            return Err(Error::CharacterizationViolated(format!(
                "expected a unit singleton over Z_{p}"
            )));
        }
        LeafBase::UnitSingleton
    };
    Ok(CertNode::Leaf { n: p, base, terms: terms.to_vec() })
}

fn validate_node(node: &CertNode, terms: &[u64], family: Family) -> Result<()> {
    let fail = |msg: String| Err(Error::CertificateInvalid(msg));
    match node {
        CertNode::Leaf { n, base, terms: recorded } => {
            if recorded != terms {
                return fail("leaf terms differ from the sequence".to_string());
            }
            let ctx = ZnContext::new(*n)?;
            if !ctx.is_prime() {
                return fail(format!("leaf modulus {n} is not prime"));
            }
            match base {
                LeafBase::UnitSingleton => {
                    if terms.len() != 1 || gcd(terms[0], *n) != 1 {
                        return fail("leaf is not a unit singleton".to_string());
                    }
                }
                LeafBase::CosetPair => {
                    let j = if family == Family::UnitsSquared { 2 } else { 3 };
                    let weights = WeightSet::units_pow(&ctx, j)?;
                    if terms.len() != 2
                        || !coset_test_pair(
                            Residue::reduced(terms[0], *n),
                            Residue::reduced(terms[1], *n),
                            &weights,
                        )?
                    {
                        return fail("leaf is not a coset pair".to_string());
                    }
                }
            }
            Ok(())
        }
        CertNode::Split {
            n,
            p,
            alternate_primes: _,
            middle_positions: recorded_middles,
            connector,
            children,
        } => {
            let ctx = ZnContext::new(*n)?;
            if !ctx.prime_divisors().any(|q| q == *p) {
                return fail(format!("{p} is not a prime divisor of {n}"));
            }
            let expected = middle_positions(terms.len(), three_part(family, *p));
            if *recorded_middles != expected {
                return fail(format!(
                    "middle positions {recorded_middles:?} differ from the mandated {expected:?}"
                ));
            }
            let nondiv: Vec<usize> =
                terms.iter().enumerate().filter(|(_, &t)| t % p != 0).map(|(i, _)| i).collect();
            if nondiv != expected {
                return fail(format!(
                    "terms not divisible by {p} sit at {nondiv:?}, expected {expected:?}"
                ));
            }
            match connector {
                ConnectorCheck::NotDivisible { term } => {
                    if expected.len() != 1 || terms[expected[0]] != *term || term % p == 0 {
                        return fail("connector record does not match the sequence".to_string());
                    }
                }
                ConnectorCheck::CosetPair { terms: pair, image } => {
                    if expected.len() != 2
                        || [terms[expected[0]], terms[expected[1]]] != *pair
                        || [pair[0] % p, pair[1] % p] != *image
                    {
                        return fail("connector record does not match the sequence".to_string());
                    }
                    let j = if family == Family::UnitsSquared { 2 } else { 3 };
                    let weights_p = WeightSet::units_pow(&ZnContext::new(*p)?, j)?;
                    if !coset_test_pair(
                        Residue::reduced(image[0], *p),
                        Residue::reduced(image[1], *p),
                        &weights_p,
                    )? {
                        return fail("connector image fails the coset test".to_string());
                    }
                }
            }
            let arity = expected.len() + 1;
            if children.len() != arity {
                return fail(format!("expected {arity} children, found {}", children.len()));
            }
            let mut start = 0usize;
            let end = terms.len();
            for (child, boundary) in
                children.iter().zip(expected.iter().chain(std::iter::once(&end)))
            {
                let derived: Vec<u64> = terms[start..*boundary].iter().map(|&t| t / p).collect();
                start = boundary + 1;
                if child.terms != derived {
                    return fail("child terms differ from the divided slice".to_string());
                }
                let child_ctx = ZnContext::new(n / p)?;
                let child_weights = family.weight_set(&child_ctx)?;
                let child_seq = Seq::new(n / p, derived.clone())?;
                if !zero_window_free(&child_seq, &child_weights)? {
                    return fail("child has a zero window".to_string());
                }
                validate_node(&child.node, &derived, family)?;
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Closed-form shapes.

/// The closed-form shape of an extremal sequence for small numbers of prime
/// factors, with the matched prime ordering and coefficient lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ShapeMatch {
    /// `(a)` with `a` a unit, over a prime modulus.
    UnitsPrime { a: u64 },
    /// `(b1·q1, a1, b2·q1)` with `q1 ∤ a1` and `q2 ∤ b1 b2`.
    UnitsTwoPrimes { q: Vec<u64>, b: Vec<u64>, a: u64 },
    /// `(a1·q1q2, b1·q1, a2·q1q2, c1, a3·q1q2, b2·q1, a4·q1q2)`.
    UnitsThreePrimesNested { q: Vec<u64>, a: Vec<u64>, b: Vec<u64>, c: u64 },
    /// `(a1·q1q2, b1·q1, a2·q1q2, c1, b2·q1q3, a3·q1, b3·q1q3)`.
    UnitsThreePrimesMixed { q: Vec<u64>, a: Vec<u64>, b: Vec<u64>, c: u64 },
    /// `(b1·q1, b2·q1, a1, b3·q1, b4·q1, a2, b5·q1, b6·q1)` with the `b`
    /// pairs square-coset pairs over `Z_{q2}` and `(a1, a2)` one mod `q1`.
    SquaresTwoPrimes { q: Vec<u64>, b: Vec<u64>, a: Vec<u64> },
}

/// Matches an extremal sequence against the closed-form shapes: the units
/// family with at most three prime factors, or the squares family with
/// exactly two. Every extremal sequence in these regimes must match.
pub fn validate_shape(s: &Seq, family: Family, ctx: &ZnContext) -> Result<ShapeMatch> {
    let weights = family.weight_set(ctx)?;
    let len = pattern_length(family, ctx)?;
    if s.len() as u64 != len || !zero_window_free(s, &weights)? {
        return Err(Error::NotExtremal(format!(
            "not a {family}-extremal sequence over Z_{}",
            ctx.modulus()
        )));
    }
    let t = s.terms();
    match (family, ctx.omega()) {
        (Family::Units, 1) => Ok(ShapeMatch::UnitsPrime { a: t[0] }),
        (Family::Units, 2) => {
            for q in prime_orderings(ctx) {
                let (q1, q2) = (q[0], q[1]);
                if t[0] % q1 == 0 && t[2] % q1 == 0 && t[1] % q1 != 0 {
                    let b = [t[0] / q1, t[2] / q1];
                    if b[0] % q2 != 0 && b[1] % q2 != 0 {
                        return Ok(ShapeMatch::UnitsTwoPrimes {
                            q: vec![q1, q2],
                            b: b.to_vec(),
                            a: t[1],
                        });
                    }
                }
            }
            Err(shape_violation(s, family))
        }
        (Family::Units, 3) => {
            for q in prime_orderings(ctx) {
                let (q1, q2, q3) = (q[0], q[1], q[2]);
                let q12 = q1 * q2;
                let q13 = q1 * q3;
                // Nested form: both halves split by q2.
                let nested = [0usize, 2, 4, 6].iter().all(|&i| t[i] % q12 == 0)
                    && t[1] % q1 == 0
                    && t[5] % q1 == 0
                    && (t[1] / q1) % q2 != 0
                    && (t[5] / q1) % q2 != 0
                    && t[3] % q1 != 0
                    && [0usize, 2, 4, 6].iter().all(|&i| (t[i] / q12) % q3 != 0);
                if nested {
                    return Ok(ShapeMatch::UnitsThreePrimesNested {
                        q: q.clone(),
                        a: vec![t[0] / q12, t[2] / q12, t[4] / q12, t[6] / q12],
                        b: vec![t[1] / q1, t[5] / q1],
                        c: t[3],
                    });
                }
                // Mixed form: left half split by q2, right half by q3.
                let mixed = t[0] % q12 == 0
                    && t[2] % q12 == 0
                    && (t[0] / q12) % q3 != 0
                    && (t[2] / q12) % q3 != 0
                    && t[1] % q1 == 0
                    && (t[1] / q1) % q2 != 0
                    && t[3] % q1 != 0
                    && t[4] % q13 == 0
                    && t[6] % q13 == 0
                    && (t[4] / q13) % q2 != 0
                    && (t[6] / q13) % q2 != 0
                    && t[5] % q1 == 0
                    && (t[5] / q1) % q3 != 0;
                if mixed {
                    return Ok(ShapeMatch::UnitsThreePrimesMixed {
                        q: q.clone(),
                        a: vec![t[0] / q12, t[2] / q12, t[5] / q1],
                        b: vec![t[1] / q1, t[4] / q13, t[6] / q13],
                        c: t[3],
                    });
                }
            }
            Err(shape_violation(s, family))
        }
        (Family::UnitsSquared, 2) => {
            for q in prime_orderings(ctx) {
                let (q1, q2) = (q[0], q[1]);
                if [2usize, 5].iter().any(|&i| t[i] % q1 == 0)
                    || [0usize, 1, 3, 4, 6, 7].iter().any(|&i| t[i] % q1 != 0)
                {
                    continue;
                }
                let b: Vec<u64> = [0usize, 1, 3, 4, 6, 7].iter().map(|&i| t[i] / q1).collect();
                let q2ctx = ZnContext::new(q2)?;
                let sq2 = WeightSet::units_pow(&q2ctx, 2)?;
                let pairs_ok = b.chunks(2).all(|pair| {
                    coset_test_pair(
                        Residue::reduced(pair[0], q2),
                        Residue::reduced(pair[1], q2),
                        &sq2,
                    )
                    .unwrap_or(false)
                });
                let q1ctx = ZnContext::new(q1)?;
                let sq1 = WeightSet::units_pow(&q1ctx, 2)?;
                let image_ok = coset_test_pair(
                    Residue::reduced(t[2], q1),
                    Residue::reduced(t[5], q1),
                    &sq1,
                )?;
                if pairs_ok && image_ok {
                    return Ok(ShapeMatch::SquaresTwoPrimes {
                        q: vec![q1, q2],
                        b,
                        a: vec![t[2], t[5]],
                    });
                }
            }
            Err(shape_violation(s, family))
        }
        (family, omega) => Err(Error::Domain(format!(
            "no closed-form shape for {family} with {omega} prime factors"
        ))),
    }
}

fn shape_violation(s: &Seq, family: Family) -> Error {
    Error::CharacterizationViolated(format!(
        "extremal sequence {s} matches no closed-form {family} shape"
    ))
}

/// All distinct orderings of the prime multiset of `n`.
fn prime_orderings(ctx: &ZnContext) -> Vec<Vec<u64>> {
    let mut primes: Vec<u64> = Vec::new();
    for &(p, e) in ctx.factorization() {
        primes.extend(std::iter::repeat(p).take(e as usize));
    }
    let mut out = BTreeSet::new();
    permute(&mut primes, 0, &mut out);
    out.into_iter().collect()
}

fn permute(items: &mut Vec<u64>, k: usize, out: &mut BTreeSet<Vec<u64>>) {
    if k == items.len() {
        out.insert(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

// ---------------------------------------------------------------------------
// A-equivalence.

/// An A-equivalence class: two sequences are equivalent when one is
/// `(c·a_1 x_1, ..., c·a_k x_k)` for a global unit `c` and weights
/// `a_i ∈ A` (which must be a subgroup of `U(n)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivClass {
    /// The lexicographically least member of the orbit.
    pub canonical: Seq,
    pub orbit_size: u128,
}

/// Canonicalizes a sequence under A-equivalence.
///
/// For a fixed `c`, the per-term weights are independent, so the least orbit
/// member with that `c` minimizes each coordinate separately; the canonical
/// form is the minimum over `c`. The orbit size comes from the
/// orbit-stabilizer identity rather than enumeration:
/// `|orbit| = |U(n)|·|A|^k / (|K|·Π s_i)` where `s_i` counts the weights
/// fixing `x_i` and `K` is the subgroup of units `c` admitting weights that
/// undo them on every term.
pub fn canonicalize(s: &Seq, weights: &WeightSet) -> Result<EquivClass> {
    let n = s.modulus();
    if weights.modulus() != n {
        return Err(Error::ModulusMismatch { left: n, right: weights.modulus() });
    }
    if !weights.is_unit_subgroup() {
        return Err(Error::NotAUnitSubgroup(n));
    }
    if s.is_empty() {
        return Ok(EquivClass { canonical: s.clone(), orbit_size: 1 });
    }
    let ctx = ZnContext::new(n)?;
    let units = ctx.unit_values();
    let terms = s.terms();

    let mut best: Option<Vec<u64>> = None;
    for &c in &units {
        let candidate: Vec<u64> = terms
            .iter()
            .map(|&x| {
                let cx = mul_mod(c, x, n);
                weights.values().iter().map(|&a| mul_mod(a, cx, n)).min().unwrap()
            })
            .collect();
        if best.as_ref().is_none_or(|b| candidate < *b) {
            best = Some(candidate);
        }
    }

    // Orbit-stabilizer bookkeeping. m_i = n / gcd(x_i, n) is the modulus at
    // which weights must fix x_i; s_i counts A ∩ {a ≡ 1 mod m_i}.
    let moduli: Vec<u64> = terms.iter().map(|&x| n / gcd(x, n)).collect();
    let mut stab_weight_product: u128 = 1;
    for &m in &moduli {
        let s_i = weights.values().iter().filter(|&&a| a % m == 1 % m).count() as u128;
        stab_weight_product = stab_weight_product
            .checked_mul(s_i)
            .ok_or(Error::OrbitTooLarge)?;
    }
    let k_size = units
        .iter()
        .filter(|&&c| {
            moduli.iter().all(|&m| {
                weights.values().iter().any(|&a| {
                    // c ∈ A·H_i iff some weight agrees with c mod m_i.
                    a % m == c % m
                })
            })
        })
        .count() as u128;
    let group_order = (units.len() as u128)
        .checked_mul(
            (weights.len() as u128)
                .checked_pow(terms.len() as u32)
                .ok_or(Error::OrbitTooLarge)?,
        )
        .ok_or(Error::OrbitTooLarge)?;
    let stab = k_size * stab_weight_product;
    debug_assert_eq!(group_order % stab, 0);
    Ok(EquivClass {
        canonical: Seq::new(n, best.unwrap())?,
        orbit_size: group_order / stab,
    })
}

/// One canonical representative per A-equivalence class of extremal
/// sequences, sorted. The bool is false when the enumeration was cut short
/// by the budget.
pub fn enumerate_extremal_classes(
    ctx: &ZnContext,
    weights: &WeightSet,
    constant: u64,
    budget: SearchBudget,
) -> Result<(bool, Vec<Seq>)> {
    let mut classes: BTreeSet<Vec<u64>> = BTreeSet::new();
    let n = ctx.modulus();
    let mut inner_err = None;
    let complete = for_each_extremal(ctx, weights, constant, budget, FirstTerm::All, |terms| {
        if inner_err.is_some() {
            return;
        }
        match Seq::new(n, terms.to_vec()).and_then(|s| canonicalize(&s, weights)) {
            Ok(class) => {
                classes.insert(class.canonical.terms().to_vec());
            }
            Err(e) => inner_err = Some(e),
        }
    })?;
    if let Some(e) = inner_err {
        return Err(e);
    }
    let reps = classes
        .into_iter()
        .map(|terms| Seq::new(n, terms))
        .collect::<Result<Vec<_>>>()?;
    Ok((complete, reps))
}

/// The divide-by-`p` lifting implication, as a testable pair of truth
/// values: (is `S/p` a `U(n/p)^j`-weighted zero-sum sequence?, is `S` a
/// `U(n)^j`-weighted zero-sum sequence?). `p` must divide every term; the
/// first component implies the second.
pub fn lift_zero_sum_by_prime(s: &Seq, p: u64, j: u32) -> Result<(bool, bool)> {
    let n = s.modulus();
    let ctx = ZnContext::new(n)?;
    if !ctx.prime_divisors().any(|q| q == p) {
        return Err(Error::Domain(format!("{p} is not a prime divisor of {n}")));
    }
    if n / p < 2 {
        return Err(Error::BadModulus(n / p));
    }
    if let Some(&t) = s.terms().iter().find(|&&t| t % p != 0) {
        return Err(Error::Domain(format!("{p} does not divide the term {t}")));
    }
    let child = Seq::new(n / p, s.terms().iter().map(|&t| t / p).collect())?;
    let child_weights = WeightSet::units_pow(&ZnContext::new(n / p)?, j)?;
    let weights = WeightSet::units_pow(&ctx, j)?;
    Ok((is_zero_sum(&child, &child_weights)?, is_zero_sum(s, &weights)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::is_extremal;

    fn seq(n: u64, terms: &[u64]) -> Seq {
        Seq::new(n, terms.to_vec()).unwrap()
    }

    #[test]
    fn decompose_units_25() {
        let ctx = ZnContext::new(25).unwrap();
        let s = seq(25, &[10, 4, 20]);
        let cert = decompose(&s, Family::Units, &ctx).unwrap();
        match &cert.node {
            CertNode::Split { p, middle_positions, children, connector, .. } => {
                assert_eq!(*p, 5);
                assert_eq!(middle_positions, &[1]);
                assert_eq!(children[0].terms, vec![2]);
                assert_eq!(children[1].terms, vec![4]);
                assert!(matches!(connector, ConnectorCheck::NotDivisible { term: 4 }));
                for child in children {
                    assert!(matches!(
                        child.node,
                        CertNode::Leaf { base: LeafBase::UnitSingleton, .. }
                    ));
                }
            }
            other => panic!("expected a split, got {other:?}"),
        }
        cert.validate(&s).unwrap();
    }

    #[test]
    fn decompose_squares_25() {
        // Out of the proved regime (5 < 7) but structurally decomposable.
        let ctx = ZnContext::new(25).unwrap();
        let s = seq(25, &[20, 10, 21, 5, 15, 12, 15, 20]);
        let cert = decompose(&s, Family::UnitsSquared, &ctx).unwrap();
        match &cert.node {
            CertNode::Split { p, middle_positions, children, connector, .. } => {
                assert_eq!(*p, 5);
                assert_eq!(middle_positions, &[2, 5]);
                assert_eq!(children[0].terms, vec![4, 2]);
                assert_eq!(children[1].terms, vec![1, 3]);
                assert_eq!(children[2].terms, vec![3, 4]);
                match connector {
                    ConnectorCheck::CosetPair { terms, image } => {
                        assert_eq!(terms, &[21, 12]);
                        assert_eq!(image, &[1, 2]);
                    }
                    other => panic!("expected a coset pair, got {other:?}"),
                }
            }
            other => panic!("expected a split, got {other:?}"),
        }
        cert.validate(&s).unwrap();
    }

    #[test]
    fn decompose_cubes_95() {
        let ctx = ZnContext::new(95).unwrap();
        let s = seq(95, &[38, 37, 38, 78, 76]);
        let cert = decompose(&s, Family::UnitsCubed, &ctx).unwrap();
        match &cert.node {
            CertNode::Split { p, middle_positions, children, connector, .. } => {
                assert_eq!(*p, 19);
                assert_eq!(middle_positions, &[1, 3]);
                assert_eq!(children[0].terms, vec![2]);
                assert_eq!(children[1].terms, vec![2]);
                assert_eq!(children[2].terms, vec![4]);
                match connector {
                    ConnectorCheck::CosetPair { terms, image } => {
                        assert_eq!(terms, &[37, 78]);
                        assert_eq!(image, &[18, 2]);
                    }
                    other => panic!("expected a coset pair, got {other:?}"),
                }
            }
            other => panic!("expected a split, got {other:?}"),
        }
        cert.validate(&s).unwrap();
        // The two-part case at p = 5.
        let s = seq(95, &[15, 30, 69, 25, 35]);
        let cert = decompose(&s, Family::UnitsCubed, &ctx).unwrap();
        match &cert.node {
            CertNode::Split { p, middle_positions, children, .. } => {
                assert_eq!(*p, 5);
                assert_eq!(middle_positions, &[2]);
                assert_eq!(children[0].terms, vec![3, 6]);
                assert_eq!(children[1].terms, vec![5, 7]);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        cert.validate(&s).unwrap();
    }

    #[test]
    fn decompose_rejections() {
        let ctx = ZnContext::new(25).unwrap();
        assert!(matches!(
            decompose(&seq(25, &[10, 4]), Family::Units, &ctx),
            Err(Error::NotExtremal(_))
        ));
        assert!(matches!(
            decompose(&seq(25, &[10, 5, 20]), Family::Units, &ctx),
            Err(Error::NotExtremal(_)) // (5,20) scales to a zero window
        ));
        let ctx12 = ZnContext::new(12).unwrap();
        assert!(matches!(
            decompose(&seq(12, &[1, 2, 3]), Family::Units, &ctx12),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            decompose(&seq(25, &[10, 4, 20]), Family::One, &ctx),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn certificate_json_and_recipe_round_trip() {
        let ctx = ZnContext::new(95).unwrap();
        let s = seq(95, &[38, 37, 38, 78, 76]);
        let cert = decompose(&s, Family::UnitsCubed, &ctx).unwrap();
        let json = cert.to_json();
        assert!(json.contains("\"middle_positions\""));
        let rebuilt = cert.to_recipe().build().unwrap();
        assert_eq!(rebuilt, s);
        let cert2 = decompose(&rebuilt, Family::UnitsCubed, &ctx).unwrap();
        assert_eq!(cert, cert2);
    }

    #[test]
    fn validate_catches_tampering() {
        let ctx = ZnContext::new(25).unwrap();
        let s = seq(25, &[10, 4, 20]);
        let cert = decompose(&s, Family::Units, &ctx).unwrap();
        let other = seq(25, &[10, 21, 20]);
        assert!(matches!(cert.validate(&other), Err(Error::CertificateInvalid(_))));
    }

    #[test]
    fn shapes_two_primes() {
        let ctx = ZnContext::new(15).unwrap();
        let s = seq(15, &[3, 1, 3]); // q1 = 3, children (1), (1) over Z_5
        match validate_shape(&s, Family::Units, &ctx).unwrap() {
            ShapeMatch::UnitsTwoPrimes { q, b, a } => {
                assert_eq!(q, vec![3, 5]);
                assert_eq!(b, vec![1, 1]);
                assert_eq!(a, 1);
            }
            other => panic!("unexpected shape {other:?}"),
        }
        let s = seq(15, &[5, 3, 5]); // q1 = 5
        match validate_shape(&s, Family::Units, &ctx).unwrap() {
            ShapeMatch::UnitsTwoPrimes { q, .. } => assert_eq!(q, vec![5, 3]),
            other => panic!("unexpected shape {other:?}"),
        }
        // Degenerate permutation over Z_9.
        let ctx9 = ZnContext::new(9).unwrap();
        let s = seq(9, &[3, 1, 3]);
        match validate_shape(&s, Family::Units, &ctx9).unwrap() {
            ShapeMatch::UnitsTwoPrimes { q, .. } => assert_eq!(q, vec![3, 3]),
            other => panic!("unexpected shape {other:?}"),
        }
    }

    #[test]
    fn shape_squares_49() {
        let ctx = ZnContext::new(49).unwrap();
        let s = seq(49, &[7, 7, 1, 7, 7, 1, 7, 7]);
        match validate_shape(&s, Family::UnitsSquared, &ctx).unwrap() {
            ShapeMatch::SquaresTwoPrimes { q, b, a } => {
                assert_eq!(q, vec![7, 7]);
                assert_eq!(b, vec![1, 1, 1, 1, 1, 1]);
                assert_eq!(a, vec![1, 1]);
            }
            other => panic!("unexpected shape {other:?}"),
        }
    }

    #[test]
    fn shape_domain_errors() {
        let ctx = ZnContext::new(105).unwrap();
        // omega = 3 squares: no closed form.
        let s = crate::builder::random_extremal(Family::Units, &ctx, 1).unwrap().0;
        assert!(validate_shape(&s, Family::Units, &ctx).is_ok());
        let ctx343 = ZnContext::new(343).unwrap();
        let s = crate::builder::random_extremal(Family::UnitsSquared, &ctx343, 1).unwrap().0;
        assert!(matches!(
            validate_shape(&s, Family::UnitsSquared, &ctx343),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn canonicalize_examples() {
        let w = WeightSet::units_pow(&ZnContext::new(7).unwrap(), 3).unwrap();
        let class = canonicalize(&seq(7, &[1, 3, 1]), &w).unwrap();
        assert_eq!(class.canonical.terms(), &[1, 3, 1]);
        // (2,6,2) = 2·(1,3,1) is in the same class.
        let class2 = canonicalize(&seq(7, &[2, 6, 2]), &w).unwrap();
        assert_eq!(class2.canonical.terms(), &[1, 3, 1]);
        assert_eq!(class.orbit_size, class2.orbit_size);
        // (2,1,2) and (1,2,2) over Z_4 with A = {1,3} are inequivalent.
        let w4 = WeightSet::explicit(4, &[1, 3]).unwrap();
        let c1 = canonicalize(&seq(4, &[2, 1, 2]), &w4).unwrap();
        let c2 = canonicalize(&seq(4, &[1, 2, 2]), &w4).unwrap();
        assert_eq!(c1.canonical.terms(), &[2, 1, 2]);
        assert_eq!(c2.canonical.terms(), &[1, 2, 2]);
        assert_ne!(c1.canonical, c2.canonical);
    }

    #[test]
    fn canonicalize_matches_brute_force() {
        // Oracle: explicit orbit enumeration.
        fn brute(s: &Seq, w: &WeightSet) -> (Vec<u64>, u128) {
            let n = s.modulus();
            let units = ZnContext::new(n).unwrap().unit_values();
            let mut orbit = BTreeSet::new();
            let k = s.len();
            let mut assignment = vec![0usize; k];
            loop {
                for &c in &units {
                    let member: Vec<u64> = s
                        .terms()
                        .iter()
                        .zip(&assignment)
                        .map(|(&x, &ai)| mul_mod(mul_mod(c, w.values()[ai], n), x, n))
                        .collect();
                    orbit.insert(member);
                }
                // Next weight assignment.
                let mut i = 0;
                loop {
                    if i == k {
                        let first = orbit.iter().next().unwrap().clone();
                        return (first, orbit.len() as u128);
                    }
                    assignment[i] += 1;
                    if assignment[i] < w.len() {
                        break;
                    }
                    assignment[i] = 0;
                    i += 1;
                }
            }
        }
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in [4u64, 5, 7, 9, 10, 12, 15] {
            let ctx = ZnContext::new(n).unwrap();
            for w in [
                WeightSet::one(n).unwrap(),
                WeightSet::units_pow(&ctx, 2).unwrap(),
                WeightSet::units_pow(&ctx, 3).unwrap(),
            ] {
                for _ in 0..20 {
                    let len = rng.random_range(1..=3usize);
                    let terms: Vec<u64> = (0..len).map(|_| rng.random_range(0..n)).collect();
                    let s = Seq::new(n, terms).unwrap();
                    let fast = canonicalize(&s, &w).unwrap();
                    let (canon, size) = brute(&s, &w);
                    assert_eq!(fast.canonical.terms(), canon.as_slice(), "n={n} s={s}");
                    assert_eq!(fast.orbit_size, size, "n={n} s={s}");
                }
            }
        }
    }

    #[test]
    fn canonicalize_idempotent_and_constant_on_orbit() {
        let ctx = ZnContext::new(25).unwrap();
        let w = WeightSet::units_pow(&ctx, 1).unwrap();
        let s = seq(25, &[10, 4, 20]);
        let class = canonicalize(&s, &w).unwrap();
        let again = canonicalize(&class.canonical, &w).unwrap();
        assert_eq!(class.canonical, again.canonical);
        assert_eq!(class.orbit_size, again.orbit_size);
        // Scaling by a unit stays in the class.
        let scaled = seq(25, &[20, 8, 15]); // 2 * (10,4,20)
        assert_eq!(canonicalize(&scaled, &w).unwrap().canonical, class.canonical);
        // orbit_size divides |U(n)|·|A|^k.
        let bound = 20u128 * 20u128.pow(3);
        assert_eq!(bound % class.orbit_size, 0);
    }

    #[test]
    fn canonicalize_requires_subgroup() {
        let w = WeightSet::all_nonzero(8).unwrap();
        assert!(matches!(
            canonicalize(&seq(8, &[1, 2]), &w),
            Err(Error::NotAUnitSubgroup(8))
        ));
    }

    #[test]
    fn extremal_classes_for_cubes_mod_7() {
        let ctx = ZnContext::new(7).unwrap();
        let w = WeightSet::units_pow(&ctx, 3).unwrap();
        let (complete, reps) =
            enumerate_extremal_classes(&ctx, &w, 4, SearchBudget::default()).unwrap();
        assert!(complete);
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].terms(), &[1, 3, 1]);
    }

    #[test]
    fn lifting_examples() {
        // (10,15)/5 = (2,3) over Z_5 is a unit-weighted zero-sum, so the
        // parent must be as well.
        let (premise, conclusion) = lift_zero_sum_by_prime(&seq(25, &[10, 15]), 5, 1).unwrap();
        assert!(premise);
        assert!(conclusion);
        let (premise, conclusion) = lift_zero_sum_by_prime(&seq(25, &[0]), 5, 1).unwrap();
        assert!(premise);
        assert!(conclusion);
        assert!(matches!(
            lift_zero_sum_by_prime(&seq(25, &[10, 4]), 5, 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            lift_zero_sum_by_prime(&seq(5, &[0]), 5, 1),
            Err(Error::BadModulus(1))
        ));
    }

    #[test]
    fn decomposition_round_trip_via_builder() {
        for (family, n, seed) in [
            (Family::Units, 75u64, 3u64),
            (Family::UnitsSquared, 49, 4),
            (Family::UnitsCubed, 95, 5),
        ] {
            let ctx = ZnContext::new(n).unwrap();
            let (s, _) = crate::builder::random_extremal(family, &ctx, seed).unwrap();
            let cert = decompose(&s, family, &ctx).unwrap();
            let rebuilt = cert.to_recipe().build().unwrap();
            let cert2 = decompose(&rebuilt, family, &ctx).unwrap();
            assert_eq!(skeleton(&cert.node), skeleton(&cert2.node), "family={family} n={n}");
        }

        fn skeleton(node: &CertNode) -> Vec<(u64, Vec<usize>)> {
            match node {
                CertNode::Leaf { .. } => vec![],
                CertNode::Split { p, middle_positions, children, .. } => {
                    let mut out = vec![(*p, middle_positions.clone())];
                    for c in children {
                        out.extend(skeleton(&c.node));
                    }
                    out
                }
            }
        }
    }
}
