//! Batch re-verification of every statement the library relies on, with
//! independent brute-force oracles.
//!
//! Each driver checks one statement (a constant, a counting identity, a
//! zero-sum criterion, a decomposition completeness claim, ...) up to the
//! scope bound and reports pass/fail/skipped with a case count. Statements
//! whose smallest interesting modulus exceeds the scope are skipped, never
//! passed. The drivers are what the `wzs verify-theorems` subcommand runs,
//! and the acceptance suite calls them directly.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::builder::random_extremal;
use crate::decompose::{canonicalize, decompose, lift_zero_sum_by_prime, validate_shape};
use crate::engine::{
    compute_constant, enumerate_extremal, for_each_extremal, has_zero_window, is_zero_sum,
    triple_unit_cover, window_reach, zero_window_free, EnumerateMode, FirstTerm, SearchBudget,
    SearchOutcome, Seq,
};
use crate::known::{family_constant, pattern_length, Family};
use crate::ring::{
    coset_test_pair, lift_unit, mul_mod, natural_map, units, Residue, WeightSet, ZnContext,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatementOutcome {
    pub statement: &'static str,
    pub status: Status,
    pub cases: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub entries: Vec<StatementOutcome>,
}

impl VerifyReport {
    pub fn failed(&self) -> usize {
        self.entries.iter().filter(|e| e.status == Status::Fail).count()
    }

    pub fn skipped(&self) -> usize {
        self.entries.iter().filter(|e| e.status == Status::Skipped).count()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }
}

/// Bounds for a verification run. Statements needing moduli above `max_n`
/// are skipped; `samples` sizes the randomized suites.
#[derive(Debug, Clone, Copy)]
pub struct VerifyScope {
    pub max_n: u64,
    pub samples: u32,
}

impl Default for VerifyScope {
    fn default() -> Self {
        VerifyScope { max_n: 31, samples: 1000 }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Internal(msg()))
    }
}

fn outcome(
    statement: &'static str,
    body: impl FnOnce() -> Result<(u64, String)>,
) -> StatementOutcome {
    match body() {
        Ok((0, _)) => StatementOutcome {
            statement,
            status: Status::Skipped,
            cases: 0,
            detail: "out of scope".to_string(),
        },
        Ok((cases, detail)) => StatementOutcome { statement, status: Status::Pass, cases, detail },
        Err(e) => StatementOutcome {
            statement,
            status: Status::Fail,
            cases: 0,
            detail: e.to_string(),
        },
    }
}

// ---------------------------------------------------------------------------
// Independent oracles.

/// Brute-force zero-window scan: enumerates every window and every weight
/// assignment explicitly. Shares nothing with the engine's bitset fold.
pub fn naive_has_zero_window(s: &Seq, weights: &WeightSet) -> Option<(usize, usize)> {
    let t = s.terms();
    let n = s.modulus();
    for j in 0..t.len() {
        for i in 0..=j {
            if assignment_hits_zero(&t[i..=j], weights.values(), n, 0, 0) {
                return Some((i, j));
            }
        }
    }
    None
}

fn assignment_hits_zero(terms: &[u64], weights: &[u64], n: u64, idx: usize, partial: u64) -> bool {
    if idx == terms.len() {
        return partial == 0;
    }
    weights.iter().any(|&a| {
        assignment_hits_zero(terms, weights, n, idx + 1, (partial + mul_mod(a, terms[idx], n)) % n)
    })
}

/// Brute-force reachable-sum set.
pub fn naive_reach(s: &Seq, weights: &WeightSet) -> Vec<u64> {
    let n = s.modulus();
    let mut sums: BTreeSet<u64> = BTreeSet::new();
    sums.insert(0);
    for &x in s.terms() {
        let mut next = BTreeSet::new();
        for &partial in &sums {
            for &a in weights.values() {
                next.insert((partial + mul_mod(a, x, n)) % n);
            }
        }
        sums = next;
    }
    sums.into_iter().collect()
}

/// The number of extremal sequences the recursive characterization predicts,
/// for the moduli the verification suite enumerates. An independent route
/// against the search-based count.
pub fn expected_extremal_count(family: Family, ctx: &ZnContext) -> Result<u64> {
    let n = ctx.modulus();
    if ctx.is_prime() {
        let p = n;
        return Ok(match family {
            Family::One => p - 1,
            Family::Units => p - 1,
            Family::UnitsSquared => (p - 1) * ((p - 1) / 2),
            Family::UnitsCubed => {
                if p % 3 == 1 {
                    if p == 7 {
                        return Err(Error::Domain("no pair count for U(7)^3".to_string()));
                    }
                    (p - 1) * (2 * (p - 1) / 3)
                } else {
                    p - 1
                }
            }
        });
    }
    // Composite: split patterns at distinct primes are disjoint for the
    // moduli handled here (a term divisible by every prime would be 0).
    let mut total = 0u64;
    for p in ctx.prime_divisors() {
        let child_ctx = ZnContext::new(n / p)?;
        let child = expected_extremal_count(family, &child_ctx)?;
        let three = match family {
            Family::Units => false,
            Family::UnitsSquared => true,
            Family::UnitsCubed => p % 3 == 1,
            Family::One => {
                return Err(Error::Domain("no split count for the one family".to_string()))
            }
        };
        if three {
            let image_pairs = match family {
                Family::UnitsSquared => (p - 1) * ((p - 1) / 2),
                Family::UnitsCubed => (p - 1) * (2 * (p - 1) / 3),
                _ => unreachable!(),
            };
            total += child * child * child * image_pairs * (n / p) * (n / p);
        } else {
            total += child * child * (n - n / p);
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Constant statements.

fn search_constant(n: u64, weights: &WeightSet, budget: SearchBudget) -> Result<u64> {
    let ctx = ZnContext::new(n)?;
    let report = compute_constant(&ctx, weights, budget)?;
    match report.outcome {
        SearchOutcome::Exact { constant } => {
            // The witness must back the constant.
            check(
                report.witness.len() as u64 == constant - 1
                    && zero_window_free(&report.witness, weights)?,
                || format!("witness does not back C = {constant} for n = {n}"),
            )?;
            Ok(constant)
        }
        SearchOutcome::LowerBound { at_least } => Err(Error::Internal(format!(
            "budget exhausted at n = {n} (lower bound {at_least})"
        ))),
    }
}

pub fn check_constant_one(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("constant-one", || {
        let mut cases = 0;
        for n in 2..=scope.max_n.min(12) {
            let c = search_constant(n, &WeightSet::one(n)?, budget)?;
            check(c == n, || format!("C(n) = {c} != {n}"))?;
            cases += 1;
        }
        Ok((cases, "C(n) = n".to_string()))
    })
}

pub fn check_constant_nonzero(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("constant-nonzero", || {
        let mut cases = 0;
        for n in 2..=scope.max_n.min(50) {
            let c = search_constant(n, &WeightSet::all_nonzero(n)?, budget)?;
            check(c == 2, || format!("C_A({n}) = {c} != 2 for A = Z_n \\ {{0}}"))?;
            cases += 1;
        }
        Ok((cases, "C_A(n) = 2 for A = Z_n \\ {0}".to_string()))
    })
}

const SMALL_PRIMES: [u64; 11] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31];

pub fn check_constant_squares_prime(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("constant-squares-prime", || {
        let mut cases = 0;
        for p in SMALL_PRIMES.into_iter().filter(|&p| p <= scope.max_n) {
            let ctx = ZnContext::new(p)?;
            let c = search_constant(p, &WeightSet::units_pow(&ctx, 2)?, budget)?;
            let expected = if p == 2 { 2 } else { 3 };
            check(c == expected, || format!("C_Q({p}) = {c} != {expected}"))?;
            cases += 1;
        }
        Ok((cases, "C_A(2) = 2 and C_A(p) = 3 for A = U(p)^2".to_string()))
    })
}

pub fn check_constant_units(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("constant-units", || {
        let mut cases = 0;
        for n in [9u64, 15, 21, 25, 33, 35, 49].into_iter().filter(|&n| n <= scope.max_n) {
            let ctx = ZnContext::new(n)?;
            let c = search_constant(n, &WeightSet::units_pow(&ctx, 1)?, budget)?;
            let expected = 1u64 << ctx.omega();
            check(c == expected, || format!("C_U({n}) = {c} != {expected}"))?;
            cases += 1;
        }
        Ok((cases, "C_A(n) = 2^omega(n) for A = U(n), n odd".to_string()))
    })
}

pub fn check_constant_squares(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("constant-squares", || {
        let mut cases = 0;
        for n in [7u64, 11, 13, 49, 77].into_iter().filter(|&n| n <= scope.max_n) {
            let ctx = ZnContext::new(n)?;
            let c = search_constant(n, &WeightSet::units_pow(&ctx, 2)?, budget)?;
            let expected = 3u64.pow(ctx.omega());
            check(c == expected, || format!("C(U({n})^2) = {c} != {expected}"))?;
            cases += 1;
        }
        Ok((cases, "C_A(n) = 3^omega(n) for A = U(n)^2, prime divisors >= 7".to_string()))
    })
}

pub fn check_constant_cubes(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("constant-cubes", || {
        let mut cases = 0;
        for n in [5u64, 19, 55, 95].into_iter().filter(|&n| n <= scope.max_n) {
            let ctx = ZnContext::new(n)?;
            let c = search_constant(n, &WeightSet::units_pow(&ctx, 3)?, budget)?;
            let expected = family_constant(Family::UnitsCubed, &ctx)?;
            check(c == expected, || format!("C(U({n})^3) = {c} != {expected}"))?;
            cases += 1;
        }
        if scope.max_n >= 7 {
            let ctx = ZnContext::new(7)?;
            let c = search_constant(7, &WeightSet::units_pow(&ctx, 3)?, budget)?;
            check(c == 4, || format!("C(U(7)^3) = {c} != 4"))?;
            cases += 1;
        }
        Ok((cases, "C_A(n) = 2^omega(n2) * 3^omega(n1) for A = U(n)^3; C_A(7) = 4".to_string()))
    })
}

// ---------------------------------------------------------------------------
// Counting and pair statements.

pub fn check_count_one(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("count-one-factorial", || {
        let mut cases = 0;
        for (n, expected) in [(3u64, 2u64), (4, 6), (5, 24), (6, 120)] {
            if n > scope.max_n {
                continue;
            }
            let ctx = ZnContext::new(n)?;
            let e = enumerate_extremal(&ctx, &WeightSet::one(n)?, n, EnumerateMode::Count, budget)?;
            check(e.complete && e.count == expected, || {
                format!("count over Z_{n} is {} != {expected}", e.count)
            })?;
            cases += 1;
        }
        Ok((cases, "(n-1)! maximal sequences for A = {1}".to_string()))
    })
}

pub fn check_pairs_coset_rule(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("pairs-coset-rule", || {
        let mut cases = 0;
        // All pairs over Z_5 with the square weights: exactly the coset
        // pairs are extremal, 8 in total.
        if scope.max_n >= 5 {
            let ctx = ZnContext::new(5)?;
            let q5 = WeightSet::units_pow(&ctx, 2)?;
            let mut count = 0;
            for x in 0..5u64 {
                for y in 0..5u64 {
                    let s = Seq::new(5, vec![x, y])?;
                    let free = zero_window_free(&s, &q5)?;
                    let coset =
                        coset_test_pair(Residue::reduced(x, 5), Residue::reduced(y, 5), &q5)?;
                    check(free == coset, || format!("mismatch at ({x},{y}) over Z_5"))?;
                    if free {
                        count += 1;
                    }
                    cases += 1;
                }
            }
            check(count == 8, || format!("{count} extremal pairs over Z_5, expected 8"))?;
        }
        // Exhaustive agreement between the coset test and the window engine
        // for primes up to 31 and j in {2, 3}.
        for p in SMALL_PRIMES.into_iter().filter(|&p| p <= scope.max_n) {
            let ctx = ZnContext::new(p)?;
            for j in [2u32, 3] {
                let weights = WeightSet::units_pow(&ctx, j)?;
                for x in 0..p {
                    for y in 0..p {
                        let s = Seq::new(p, vec![x, y])?;
                        let free = zero_window_free(&s, &weights)?;
                        let coset = coset_test_pair(
                            Residue::reduced(x, p),
                            Residue::reduced(y, p),
                            &weights,
                        )?;
                        check(free == coset, || {
                            format!("mismatch at ({x},{y}) over Z_{p}, j={j}")
                        })?;
                        cases += 1;
                    }
                }
            }
        }
        Ok((cases, "pair zero-sum-freeness is the coset condition".to_string()))
    })
}

// ---------------------------------------------------------------------------
// Zero-sum criteria.

pub fn check_crt_locality(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("crt-locality", || {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut cases = 0;
        for n in [15u64, 21, 35, 45, 95, 105].into_iter().filter(|&n| n <= scope.max_n) {
            let ctx = ZnContext::new(n)?;
            for j in [1u32, 2, 3] {
                let weights = WeightSet::units_pow(&ctx, j)?;
                for _ in 0..scope.samples {
                    let len = rng.random_range(1..=8usize);
                    let terms: Vec<u64> = (0..len).map(|_| rng.random_range(0..n)).collect();
                    let s = Seq::new(n, terms)?;
                    let local = crate::engine::crt_zero_sum_check(&s, j)?;
                    let direct = window_reach(&s, &weights)?.contains_zero();
                    check(local == direct, || format!("CRT mismatch for {s} over Z_{n}, j={j}"))?;
                    cases += 1;
                }
            }
        }
        Ok((cases, "zero-sum iff zero-sum at every prime power component".to_string()))
    })
}

pub fn check_two_coprime_units(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("zero-sum-two-coprime-units", || {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let mut cases = 0;
        for n in
            [3u64, 5, 7, 9, 11, 13, 17, 19, 23, 25, 27].into_iter().filter(|&n| n <= scope.max_n)
        {
            let ctx = ZnContext::new(n)?;
            let weights = WeightSet::units_pow(&ctx, 1)?;
            let units = ctx.unit_values();
            for _ in 0..scope.samples {
                let len = rng.random_range(2..=6usize);
                let mut terms: Vec<u64> = (0..len).map(|_| rng.random_range(0..n)).collect();
                force_units(&mut terms, 2, &units, &mut rng);
                let s = Seq::new(n, terms)?;
                check(is_zero_sum(&s, &weights)?, || {
                    format!("{s} over Z_{n} with two units is not a unit-weighted zero sum")
                })?;
                cases += 1;
            }
        }
        Ok((
            cases,
            "two terms coprime to p force a U(p^r)-weighted zero sum (odd p)".to_string(),
        ))
    })
}

fn force_units(terms: &mut [u64], how_many: usize, units: &[u64], rng: &mut ChaCha8Rng) {
    let len = terms.len();
    let mut idx: Vec<usize> = (0..len).collect();
    for i in 0..how_many.min(len) {
        let j = rng.random_range(i..len);
        idx.swap(i, j);
        terms[idx[i]] = units[rng.random_range(0..units.len())];
    }
}

pub fn check_three_units_squares(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("zero-sum-three-units-squares", || {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let mut cases = 0;
        for n in [7u64, 49, 11, 121, 13, 169].into_iter().filter(|&n| n <= scope.max_n) {
            let ctx = ZnContext::new(n)?;
            let weights = WeightSet::units_pow(&ctx, 2)?;
            let units = ctx.unit_values();
            for _ in 0..scope.samples {
                let len = rng.random_range(3..=7usize);
                let mut terms: Vec<u64> = (0..len).map(|_| rng.random_range(0..n)).collect();
                force_units(&mut terms, 3, &units, &mut rng);
                let s = Seq::new(n, terms)?;
                check(is_zero_sum(&s, &weights)?, || {
                    format!("{s} over Z_{n} with three units is not a square-weighted zero sum")
                })?;
                cases += 1;
            }
        }
        // The counterexamples below 7.
        if scope.max_n >= 5 {
            for (n, terms) in [(2u64, vec![1u64, 1, 1]), (5, vec![1, 1, 1]), (3, vec![1, 2, 1])] {
                let ctx = ZnContext::new(n)?;
                let weights = WeightSet::units_pow(&ctx, 2)?;
                let s = Seq::new(n, terms)?;
                check(!is_zero_sum(&s, &weights)?, || {
                    format!("{s} over Z_{n} should not be a square-weighted zero sum")
                })?;
                cases += 1;
            }
        }
        Ok((cases, "three unit terms force a U(p^r)^2-weighted zero sum, p >= 7".to_string()))
    })
}

pub fn check_three_units_cubes(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("zero-sum-three-units-cubes", || {
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        let mut cases = 0;
        for p in SMALL_PRIMES.into_iter().filter(|&p| p <= scope.max_n && ![2, 7, 13].contains(&p))
        {
            let ctx = ZnContext::new(p)?;
            let weights = WeightSet::units_pow(&ctx, 3)?;
            let units = ctx.unit_values();
            for _ in 0..scope.samples {
                let len = rng.random_range(3..=7usize);
                let mut terms: Vec<u64> = (0..len).map(|_| rng.random_range(0..p)).collect();
                force_units(&mut terms, 3, &units, &mut rng);
                let s = Seq::new(p, terms)?;
                check(is_zero_sum(&s, &weights)?, || {
                    format!("{s} over Z_{p} with three units is not a cube-weighted zero sum")
                })?;
                cases += 1;
            }
        }
        // (1,1,1) fails exactly at p in {2, 7, 13}.
        for p in [2u64, 7, 13].into_iter().filter(|&p| p <= scope.max_n) {
            let ctx = ZnContext::new(p)?;
            let weights = WeightSet::units_pow(&ctx, 3)?;
            let s = Seq::new(p, vec![1, 1, 1])?;
            check(!is_zero_sum(&s, &weights)?, || {
                format!("(1,1,1) over Z_{p} should not be a cube-weighted zero sum")
            })?;
            cases += 1;
        }
        Ok((cases, "three unit terms force a U(p)^3-weighted zero sum, p != 2,7,13".to_string()))
    })
}

pub fn check_divide_lift(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("divide-by-prime-lift", || {
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        let mut cases = 0;
        for (n, p) in [(25u64, 5u64), (49, 7), (75, 3), (75, 5), (99, 3), (121, 11), (147, 7)]
            .into_iter()
            .filter(|&(n, _)| n <= scope.max_n)
        {
            for j in [1u32, 2] {
                for _ in 0..scope.samples {
                    let len = rng.random_range(1..=6usize);
                    let terms: Vec<u64> =
                        (0..len).map(|_| p * rng.random_range(0..n / p)).collect();
                    let s = Seq::new(n, terms)?;
                    let (premise, conclusion) = lift_zero_sum_by_prime(&s, p, j)?;
                    check(!premise || conclusion, || {
                        format!("lifting fails for {s} over Z_{n}, p={p}, j={j}")
                    })?;
                    cases += 1;
                }
            }
        }
        Ok((cases, "a zero sum of S/p lifts to a zero sum of S".to_string()))
    })
}

pub fn check_triple_cover(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("triple-unit-cover", || {
        let mut cases = 0;
        for p in [7u64, 11, 13].into_iter().filter(|&p| p <= scope.max_n) {
            let ctx = ZnContext::new(p)?;
            for x1 in 1..p {
                for x2 in 1..p {
                    for x3 in 1..p {
                        let covered = triple_unit_cover(
                            &ctx,
                            Residue::reduced(x1, p),
                            Residue::reduced(x2, p),
                            Residue::reduced(x3, p),
                        )?;
                        check(covered, || {
                            format!("A·{x1} + A·{x2} + A·{x3} misses part of Z_{p}")
                        })?;
                        cases += 1;
                    }
                }
            }
        }
        // Small primes do admit uncovered triples.
        for p in [3u64, 5].into_iter().filter(|&p| p <= scope.max_n) {
            let ctx = ZnContext::new(p)?;
            let covered = triple_unit_cover(
                &ctx,
                Residue::reduced(1, p),
                Residue::reduced(1, p),
                Residue::reduced(1, p),
            )?;
            check(!covered, || format!("(1,1,1) over Z_{p} should not cover"))?;
            cases += 1;
        }
        Ok((cases, "A·x1 + A·x2 + A·x3 = Z_{p^r} for unit squares, p >= 7".to_string()))
    })
}

pub fn check_unit_lift(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("unit-lift-roundtrip", || {
        let mut cases = 0;
        for n in 4..=scope.max_n.min(200) {
            let ctx = ZnContext::new(n)?;
            for m in ctx.divisors() {
                if m < 2 {
                    continue;
                }
                let mctx = ZnContext::new(m)?;
                let m_units = mctx.unit_values();
                let m_squares: BTreeSet<u64> = m_units.iter().map(|&x| mul_mod(x, x, m)).collect();
                for &b in &m_units {
                    let b = Residue::reduced(b, m);
                    let a = lift_unit(b, &ctx, false)?;
                    check(a.is_unit() && natural_map(a, m)? == b, || {
                        format!("lift of {b} mod {m} to Z_{n} fails")
                    })?;
                    cases += 1;
                    if m_squares.contains(&b.value()) {
                        let a = lift_unit(b, &ctx, true)?;
                        check(natural_map(a, m)? == b, || {
                            format!("square lift of {b} mod {m} to Z_{n} fails")
                        })?;
                        cases += 1;
                    }
                }
            }
        }
        Ok((cases, "unit lifting along a divisor inverts the natural map".to_string()))
    })
}

// ---------------------------------------------------------------------------
// Decomposition completeness.

fn decompose_all(
    family: Family,
    n: u64,
    budget: SearchBudget,
    with_shape: bool,
) -> Result<(u64, u64)> {
    let ctx = ZnContext::new(n)?;
    let weights = family.weight_set(&ctx)?;
    let constant = pattern_length(family, &ctx)? + 1;
    let mut checked = 0u64;
    let mut failure: Option<Error> = None;
    let complete = for_each_extremal(&ctx, &weights, constant, budget, FirstTerm::All, |terms| {
        if failure.is_some() {
            return;
        }
        let run = || -> Result<()> {
            let s = Seq::new(n, terms.to_vec())?;
            let cert = decompose(&s, family, &ctx)?;
            cert.validate(&s)?;
            if with_shape {
                validate_shape(&s, family, &ctx)?;
            }
            Ok(())
        };
        if let Err(e) = run() {
            failure = Some(e);
        } else {
            checked += 1;
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    check(complete, || format!("enumeration at n = {n} ran out of budget"))?;
    let expected = expected_extremal_count(family, &ctx)?;
    check(checked == expected, || {
        format!("enumerated {checked} extremal sequences over Z_{n}, structure predicts {expected}")
    })?;
    Ok((checked, expected))
}

pub fn check_decompose_units(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("decompose-units", || {
        let mut cases = 0;
        for n in [15u64, 21, 25].into_iter().filter(|&n| n <= scope.max_n) {
            let (checked, _) = decompose_all(Family::Units, n, budget, true)?;
            cases += checked;
        }
        Ok((cases, "every U(n)-extremal sequence decomposes and re-validates".to_string()))
    })
}

pub fn check_decompose_squares(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("decompose-squares", || {
        let mut cases = 0;
        if scope.max_n >= 49 {
            let (checked, _) = decompose_all(Family::UnitsSquared, 49, budget, true)?;
            cases += checked;
        }
        Ok((cases, "every U(49)^2-extremal sequence decomposes and re-validates".to_string()))
    })
}

pub fn check_decompose_cubes(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("decompose-cubes", || {
        let mut cases = 0;
        if scope.max_n >= 55 {
            let (checked, _) = decompose_all(Family::UnitsCubed, 55, budget, false)?;
            cases += checked;
        }
        Ok((cases, "every U(55)^3-extremal sequence decomposes and re-validates".to_string()))
    })
}

/// The closing uniqueness property for squares: the structural prime is
/// coprime to exactly two terms, every other prime divisor to at least
/// three. Checked over all extremal sequences up to unit scaling (which
/// preserves coprimality patterns), so divisor-led representatives cover
/// every sequence.
pub fn check_unique_prime_squares(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("unique-structural-prime-squares", || {
        let mut cases = 0;
        for n in [49u64, 77].into_iter().filter(|&n| n <= scope.max_n) {
            let ctx = ZnContext::new(n)?;
            let weights = WeightSet::units_pow(&ctx, 2)?;
            let constant = pattern_length(Family::UnitsSquared, &ctx)? + 1;
            let primes: Vec<u64> = ctx.prime_divisors().collect();
            let mut bad: Option<Vec<u64>> = None;
            let mut seen = 0u64;
            let complete = for_each_extremal(
                &ctx,
                &weights,
                constant,
                budget,
                FirstTerm::UnitOrbitReps,
                |terms| {
                    if bad.is_some() {
                        return;
                    }
                    let mut exactly_two = 0;
                    let mut ok = true;
                    for &p in &primes {
                        let coprime = terms.iter().filter(|&&t| t % p != 0).count();
                        match coprime {
                            2 => exactly_two += 1,
                            c if c >= 3 => {}
                            _ => ok = false,
                        }
                    }
                    if !(ok && exactly_two == 1) {
                        bad = Some(terms.to_vec());
                    }
                    seen += 1;
                },
            )?;
            check(complete, || format!("enumeration at n = {n} ran out of budget"))?;
            if let Some(terms) = bad {
                return Err(Error::Internal(format!(
                    "uniqueness fails for {terms:?} over Z_{n}"
                )));
            }
            cases += seen;
        }
        Ok((cases, "exactly one prime is coprime to exactly two terms".to_string()))
    })
}

// ---------------------------------------------------------------------------
// Equivalence, examples, builders.

pub fn check_canonical_equivalence(scope: &VerifyScope, budget: SearchBudget) -> StatementOutcome {
    outcome("canonical-equivalence", || {
        let mut cases = 0;
        if scope.max_n >= 7 {
            let ctx = ZnContext::new(7)?;
            let weights = WeightSet::units_pow(&ctx, 3)?;
            let mut failure = None;
            let complete = for_each_extremal(&ctx, &weights, 4, budget, FirstTerm::All, |terms| {
                if failure.is_some() {
                    return;
                }
                let s = Seq::new(7, terms.to_vec()).unwrap();
                match canonicalize(&s, &weights) {
                    Ok(class) if class.canonical.terms() == [1, 3, 1] => cases += 1,
                    Ok(class) => {
                        failure = Some(format!(
                            "{s} canonicalizes to {} instead of (1,3,1)",
                            class.canonical
                        ))
                    }
                    Err(e) => failure = Some(e.to_string()),
                }
            })?;
            check(complete && failure.is_none(), || failure.clone().unwrap_or_default())?;
        }
        // Random orbit members of random extremal sequences stay extremal.
        let mut rng = ChaCha8Rng::seed_from_u64(106);
        let pool: Vec<(Family, u64)> = [
            (Family::Units, 15u64),
            (Family::Units, 25),
            (Family::UnitsSquared, 7),
            (Family::UnitsSquared, 13),
            (Family::UnitsCubed, 19),
            (Family::UnitsCubed, 55),
        ]
        .into_iter()
        .filter(|&(_, n)| n <= scope.max_n)
        .collect();
        if !pool.is_empty() {
            for i in 0..500u64 {
                let (family, n) = pool[rng.random_range(0..pool.len())];
                let ctx = ZnContext::new(n)?;
                let (s, _) = random_extremal(family, &ctx, i)?;
                let weights = family.weight_set(&ctx)?;
                let u = units(&ctx);
                let c = u[rng.random_range(0..u.len())];
                let member: Vec<u64> = s
                    .terms()
                    .iter()
                    .map(|&x| {
                        let a = weights.values()[rng.random_range(0..weights.len())];
                        mul_mod(mul_mod(c.value(), a, n), x, n)
                    })
                    .collect();
                let t = Seq::new(n, member)?;
                check(zero_window_free(&t, &weights)?, || {
                    format!("orbit member {t} of {s} over Z_{n} is not zero-window-free")
                })?;
                cases += 1;
            }
        }
        Ok((cases, "equivalence classes and extremality preservation".to_string()))
    })
}

pub fn check_example_regression(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("example-regression", || {
        let mut cases = 0;
        struct Example {
            n: u64,
            weights: &'static str,
            terms: &'static [u64],
            free: bool,
        }
        let examples = [
            Example { n: 4, weights: "set:1,3", terms: &[2, 1, 2], free: true },
            Example { n: 4, weights: "set:1,3", terms: &[1, 2, 2], free: false },
            Example { n: 25, weights: "units", terms: &[10, 4, 20], free: true },
            Example { n: 25, weights: "units", terms: &[10, 21, 20], free: true },
            Example { n: 75, weights: "units", terms: &[30, 12, 60, 38, 30, 63, 60], free: true },
            Example {
                n: 25,
                weights: "units^2",
                terms: &[20, 10, 21, 5, 15, 12, 15, 20],
                free: true,
            },
            Example { n: 95, weights: "units^3", terms: &[38, 37, 38, 78, 76], free: true },
            Example { n: 95, weights: "units^3", terms: &[15, 30, 69, 25, 35], free: true },
        ];
        for e in examples {
            if e.n > scope.max_n {
                continue;
            }
            let weights = WeightSet::parse(e.n, e.weights)?;
            let s = Seq::new(e.n, e.terms.to_vec())?;
            check(zero_window_free(&s, &weights)? == e.free, || {
                format!("{s} over Z_{} with {}", e.n, e.weights)
            })?;
            cases += 1;
        }
        Ok((cases, "the documented example sequences verify as recorded".to_string()))
    })
}

pub fn check_builder_soundness(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("builder-soundness", || {
        let mut cases = 0;
        let pool: &[(Family, &[u64])] = &[
            (Family::One, &[2, 5, 8, 12]),
            (Family::Units, &[9, 15, 21, 25, 27, 33, 35, 45, 49, 63, 75, 105]),
            (Family::UnitsSquared, &[7, 11, 13, 49, 77, 91]),
            (Family::UnitsCubed, &[5, 11, 19, 55, 95]),
        ];
        for &(family, moduli) in pool {
            for &n in moduli.iter().filter(|&&n| n <= scope.max_n) {
                let ctx = ZnContext::new(n)?;
                let weights = family.weight_set(&ctx)?;
                let len = pattern_length(family, &ctx)?;
                for seed in 0..200u64 {
                    let (s, recipe) = random_extremal(family, &ctx, seed)?;
                    check(s.len() as u64 == len && zero_window_free(&s, &weights)?, || {
                        format!("recipe {recipe} built a non-extremal {s}")
                    })?;
                    cases += 1;
                }
            }
        }
        Ok((cases, "every random build is extremal with the exact pattern length".to_string()))
    })
}

pub fn check_builder_roundtrip(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("builder-roundtrip", || {
        let mut cases = 0;
        let pool: &[(Family, &[u64])] = &[
            (Family::Units, &[15, 25, 75]),
            (Family::UnitsSquared, &[49, 77]),
            (Family::UnitsCubed, &[55, 95]),
        ];
        for &(family, moduli) in pool {
            for &n in moduli.iter().filter(|&&n| n <= scope.max_n) {
                let ctx = ZnContext::new(n)?;
                for seed in 0..25u64 {
                    let (s, _) = random_extremal(family, &ctx, seed)?;
                    let cert = decompose(&s, family, &ctx)?;
                    let rebuilt = cert.to_recipe().build()?;
                    let cert2 = decompose(&rebuilt, family, &ctx)?;
                    check(cert == cert2, || {
                        format!("skeleton changed over a rebuild at n = {n}")
                    })?;
                    cases += 1;
                }
            }
        }
        Ok((cases, "decompose-rebuild keeps the certificate skeleton".to_string()))
    })
}

// ---------------------------------------------------------------------------
// Engine-level properties.

pub fn check_prefix_sum_rule(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("prefix-sum-rule", || {
        let mut cases = 0;
        for n in 2..=scope.max_n.min(8) {
            let weights = WeightSet::one(n)?;
            let mut stack: Vec<Vec<u64>> = vec![vec![]];
            while let Some(terms) = stack.pop() {
                let s = Seq::new(n, terms.clone())?;
                let free = has_zero_window(&s, &weights)?.is_none();
                check(crate::engine::prefix_sum_free(&s) == free, || {
                    format!("prefix-sum rule fails for {s} over Z_{n}")
                })?;
                cases += 1;
                if (terms.len() as u64) < n - 1 {
                    for x in 0..n {
                        let mut t = terms.clone();
                        t.push(x);
                        stack.push(t);
                    }
                }
            }
        }
        Ok((cases, "distinct prefix sums iff zero-window-free for A = {1}".to_string()))
    })
}

pub fn check_window_oracle(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("window-oracle", || {
        let mut cases = 0;
        // Exhaustive: n <= 6, every weight set of size <= 4, every sequence
        // of length <= 5.
        for n in 2..=scope.max_n.min(6) {
            for values in subsets_up_to(n, 4) {
                let weights = WeightSet::explicit(n, &values)?;
                let mut stack: Vec<Vec<u64>> = vec![vec![]];
                while let Some(terms) = stack.pop() {
                    if !terms.is_empty() {
                        let s = Seq::new(n, terms.clone())?;
                        check(
                            has_zero_window(&s, &weights)? == naive_has_zero_window(&s, &weights),
                            || format!("oracle mismatch for {s} over Z_{n}, A = {values:?}"),
                        )?;
                        cases += 1;
                    }
                    if terms.len() < 5 {
                        for x in 0..n {
                            let mut t = terms.clone();
                            t.push(x);
                            stack.push(t);
                        }
                    }
                }
            }
        }
        // 7 <= n <= 12: named families plus sampled weight sets, exhaustive
        // short sequences plus random longer ones.
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        for n in 7..=scope.max_n.min(12) {
            let ctx = ZnContext::new(n)?;
            let mut pool: Vec<Vec<u64>> = vec![vec![1]];
            for j in [1u32, 2, 3] {
                let w = WeightSet::units_pow(&ctx, j)?;
                if w.len() <= 4 {
                    pool.push(w.values().to_vec());
                }
            }
            for _ in 0..40 {
                let size = rng.random_range(1..=4usize);
                let mut values = BTreeSet::new();
                while values.len() < size {
                    values.insert(rng.random_range(1..n));
                }
                pool.push(values.into_iter().collect());
            }
            pool.sort();
            pool.dedup();
            for values in pool {
                let weights = WeightSet::explicit(n, &values)?;
                // All sequences of length <= 3, checking the reach set too.
                let mut stack: Vec<Vec<u64>> = vec![vec![]];
                while let Some(terms) = stack.pop() {
                    if !terms.is_empty() {
                        let s = Seq::new(n, terms.clone())?;
                        check(
                            has_zero_window(&s, &weights)? == naive_has_zero_window(&s, &weights),
                            || format!("oracle mismatch for {s} over Z_{n}, A = {values:?}"),
                        )?;
                        check(
                            window_reach(&s, &weights)?.values() == naive_reach(&s, &weights),
                            || format!("reach mismatch for {s} over Z_{n}, A = {values:?}"),
                        )?;
                        cases += 1;
                    }
                    if terms.len() < 3 {
                        for x in 0..n {
                            let mut t = terms.clone();
                            t.push(x);
                            stack.push(t);
                        }
                    }
                }
                // Random sequences of length 4 and 5.
                for _ in 0..scope.samples / 4 {
                    let len = rng.random_range(4..=5usize);
                    let terms: Vec<u64> = (0..len).map(|_| rng.random_range(0..n)).collect();
                    let s = Seq::new(n, terms)?;
                    check(
                        has_zero_window(&s, &weights)? == naive_has_zero_window(&s, &weights),
                        || format!("oracle mismatch for {s} over Z_{n}, A = {values:?}"),
                    )?;
                    cases += 1;
                }
            }
        }
        Ok((cases, "window engine agrees with explicit assignment enumeration".to_string()))
    })
}

fn subsets_up_to(n: u64, max_size: usize) -> Vec<Vec<u64>> {
    let items: Vec<u64> = (1..n).collect();
    let mut out = Vec::new();
    for mask in 1usize..(1 << items.len()) {
        if (mask as u32).count_ones() as usize <= max_size {
            let subset: Vec<u64> = items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            out.push(subset);
        }
    }
    out
}

pub fn check_monotonicity(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("window-monotonicity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(108);
        let mut cases = 0;
        let max_n = scope.max_n.min(30);
        if max_n < 3 {
            return Ok((0, String::new()));
        }
        for _ in 0..scope.samples {
            let n = rng.random_range(3..=max_n);
            let size = rng.random_range(1..=4usize.min(n as usize - 1));
            let mut values = BTreeSet::new();
            while values.len() < size {
                values.insert(rng.random_range(1..n));
            }
            let weights = WeightSet::explicit(n, &values.into_iter().collect::<Vec<_>>())?;
            let len = rng.random_range(1..=6usize);
            let terms: Vec<u64> = (0..len).map(|_| rng.random_range(0..n)).collect();
            let s = Seq::new(n, terms.clone())?;
            if has_zero_window(&s, &weights)?.is_some() {
                let mut extended = terms;
                extended.push(rng.random_range(0..n));
                let t = Seq::new(n, extended)?;
                check(has_zero_window(&t, &weights)?.is_some(), || {
                    format!("window vanished after extending {s} over Z_{n}")
                })?;
            }
            cases += 1;
        }
        Ok((cases, "zero windows persist under extension".to_string()))
    })
}

pub fn check_natural_map(scope: &VerifyScope, _budget: SearchBudget) -> StatementOutcome {
    outcome("natural-map-homomorphism", || {
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let mut cases = 0;
        for (n, m) in [(12u64, 4u64), (60, 15), (90, 9), (95, 19), (105, 21), (200, 8)]
            .into_iter()
            .filter(|&(n, _)| n <= scope.max_n)
        {
            for _ in 0..scope.samples {
                let a = Residue::reduced(rng.random_range(0..n), n);
                let b = Residue::reduced(rng.random_range(0..n), n);
                let map = |x: Residue| natural_map(x, m);
                check(
                    map(a.add(b))? == map(a)?.add(map(b)?)
                        && map(a.mul(b))? == map(a)?.mul(map(b)?),
                    || format!("natural map Z_{n} -> Z_{m} is not a homomorphism at ({a}, {b})"),
                )?;
                cases += 1;
            }
        }
        Ok((cases, "reduction mod a divisor preserves + and *".to_string()))
    })
}

/// Runs every statement driver up to the scope bound.
pub fn verify_theorems(scope: &VerifyScope, budget: SearchBudget) -> VerifyReport {
    let drivers: &[fn(&VerifyScope, SearchBudget) -> StatementOutcome] = &[
        check_constant_one,
        check_constant_nonzero,
        check_constant_squares_prime,
        check_constant_units,
        check_constant_squares,
        check_constant_cubes,
        check_count_one,
        check_pairs_coset_rule,
        check_crt_locality,
        check_two_coprime_units,
        check_three_units_squares,
        check_three_units_cubes,
        check_divide_lift,
        check_triple_cover,
        check_unit_lift,
        check_decompose_units,
        check_decompose_squares,
        check_decompose_cubes,
        check_unique_prime_squares,
        check_canonical_equivalence,
        check_example_regression,
        check_builder_soundness,
        check_builder_roundtrip,
        check_prefix_sum_rule,
        check_window_oracle,
        check_monotonicity,
        check_natural_map,
    ];
    let entries = drivers.iter().map(|driver| driver(scope, budget)).collect();
    VerifyReport { entries }
}
