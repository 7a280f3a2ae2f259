//! The decision and search core.
//!
//! Reachable weighted sums of a window are kept as `n`-bit masks: extending a
//! window by a term `x` under weight set `A` replaces the mask `R` by
//! `∪_{a∈A} (R rotated by a·x)`, so a window is an A-weighted zero-sum
//! sequence exactly when bit 0 is set after folding all its terms.
//!
//! The exhaustive search for `C_A(n)` extends sequences term by term and
//! prunes any extension that completes a zero window. When `A` is a subgroup
//! of `U(n)` the per-state bookkeeping collapses to a single mask: appending
//! `x` is legal iff `x` avoids the current forbidden mask `F`, and the next
//! forbidden mask is `∪_{a∈A} ((F ∪ {0}) rotated by -a·x)`. This is the same
//! shifted-OR fold as the reach sets, run on the complement side, and it is
//! what makes the larger searches (for example `n = 77` with the unit
//! squares) tractable. For weight sets that are not unit subgroups the
//! search carries one reach mask per suffix window instead.
//!
//! First-term reduction: multiplying a whole sequence by a unit preserves
//! zero-window-freeness for any weight set, and the unit multiples of `x`
//! are exactly the residues with the same `gcd` with `n`. The maximum-length
//! search therefore only tries one first term per divisor of `n`.

use std::time::{Duration, Instant};

use crate::ring::{mul_mod, words_for, WeightSet, ZnContext};
use crate::{Error, Result};

/// A finite ordered sequence of residues mod `n`. Order is significant:
/// windows are contiguous runs of terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Seq {
    modulus: u64,
    terms: Vec<u64>,
}

impl Seq {
    pub fn new(modulus: u64, terms: Vec<u64>) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::BadModulus(modulus));
        }
        if let Some(&bad) = terms.iter().find(|&&t| t >= modulus) {
            return Err(Error::TermOutOfRange { value: bad, modulus });
        }
        Ok(Seq { modulus, terms })
    }

    pub fn empty(modulus: u64) -> Result<Self> {
        Seq::new(modulus, Vec::new())
    }

    /// Parses the command-line syntax: comma-separated decimal residues.
    pub fn parse(modulus: u64, text: &str) -> Result<Self> {
        let terms: Vec<u64> = text
            .split(',')
            .map(|s| s.trim().parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Domain(format!("cannot parse sequence '{text}'")))?;
        Seq::new(modulus, terms)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn terms(&self) -> &[u64] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Pointwise reduction mod a divisor `m` of the modulus.
    pub fn natural_map(&self, m: u64) -> Result<Seq> {
        if m < 2 {
            return Err(Error::BadModulus(m));
        }
        if self.modulus % m != 0 {
            return Err(Error::NotADivisor { m, n: self.modulus });
        }
        Ok(Seq { modulus: m, terms: self.terms.iter().map(|&t| t % m).collect() })
    }
}

impl std::fmt::Display for Seq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// The set of residues reachable as weighted sums of a window, as an
/// `n`-bit mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachSet {
    modulus: u64,
    bits: Vec<u64>,
}

impl ReachSet {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn contains(&self, r: u64) -> bool {
        r < self.modulus && self.bits[(r / 64) as usize] >> (r % 64) & 1 == 1
    }

    pub fn contains_zero(&self) -> bool {
        self.bits[0] & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn values(&self) -> Vec<u64> {
        (0..self.modulus).filter(|&r| self.contains(r)).collect()
    }
}

// ---------------------------------------------------------------------------
// Bit-mask plumbing. Masks are little-endian u64 words holding n bits; bits
// at positions >= n stay clear.

fn top_mask(n: u64) -> u64 {
    match n % 64 {
        0 => !0u64,
        r => (1u64 << r) - 1,
    }
}

fn set_bit(mask: &mut [u64], i: u64) {
    mask[(i / 64) as usize] |= 1u64 << (i % 64);
}

fn test_bit(mask: &[u64], i: u64) -> bool {
    mask[(i / 64) as usize] >> (i % 64) & 1 == 1
}

/// `dst |= src rotated left by s` within `n` bits. `src` must have no bits
/// at positions >= n. `0 <= s < n`.
fn or_rotated(dst: &mut [u64], src: &[u64], s: u64, n: u64) {
    debug_assert!(s < n);
    if dst.len() == 1 {
        let x = src[0];
        let v = if s == 0 { x } else { (x << s) | (x >> (n - s)) };
        dst[0] |= v & top_mask(n);
        return;
    }
    if s == 0 {
        for (d, &w) in dst.iter_mut().zip(src.iter()) {
            *d |= w;
        }
        return;
    }
    or_shl(dst, src, s);
    or_shr(dst, src, n - s);
    let last = dst.len() - 1;
    dst[last] &= top_mask(n);
}

fn or_shl(dst: &mut [u64], src: &[u64], k: u64) {
    let w = (k / 64) as usize;
    let b = k % 64;
    let len = dst.len();
    if b == 0 {
        for i in 0..len - w {
            dst[i + w] |= src[i];
        }
    } else {
        for i in 0..len - w {
            dst[i + w] |= src[i] << b;
            if i + w + 1 < len {
                dst[i + w + 1] |= src[i] >> (64 - b);
            }
        }
    }
}

fn or_shr(dst: &mut [u64], src: &[u64], k: u64) {
    let w = (k / 64) as usize;
    let b = k % 64;
    let len = dst.len();
    if b == 0 {
        for i in w..len {
            dst[i - w] |= src[i];
        }
    } else {
        for i in w..len {
            dst[i - w] |= src[i] >> b;
            if i + 1 < len {
                dst[i - w] |= src[i + 1] << (64 - b);
            }
        }
    }
}

/// `out |= { r + a*x : r ∈ cur, a ∈ A }`.
fn or_extend(out: &mut [u64], cur: &[u64], x: u64, weights: &WeightSet, n: u64) {
    for &a in weights.values() {
        or_rotated(out, cur, mul_mod(a, x, n), n);
    }
}

fn check_same_modulus(s: &Seq, weights: &WeightSet) -> Result<()> {
    if s.modulus() != weights.modulus() {
        return Err(Error::ModulusMismatch { left: s.modulus(), right: weights.modulus() });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Decision operations.

/// The set `{ Σ a_i x_i mod n : a_i ∈ A }` over the whole sequence, computed
/// by folding `R_0 = {0}`, `R_k = { r + a·x_k }`. The sequence is an
/// A-weighted zero-sum sequence iff the result contains 0.
pub fn window_reach(s: &Seq, weights: &WeightSet) -> Result<ReachSet> {
    check_same_modulus(s, weights)?;
    if s.is_empty() {
        return Err(Error::EmptySequence);
    }
    let n = s.modulus();
    let words = words_for(n);
    let mut cur = vec![0u64; words];
    cur[0] = 1; // R_0 = {0}
    let mut next = vec![0u64; words];
    for &x in s.terms() {
        next.fill(0);
        or_extend(&mut next, &cur, x, weights, n);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(ReachSet { modulus: n, bits: cur })
}

/// True iff the sequence is an A-weighted zero-sum sequence.
pub fn is_zero_sum(s: &Seq, weights: &WeightSet) -> Result<bool> {
    Ok(window_reach(s, weights)?.contains_zero())
}

/// Finds the first contiguous window `[start..=end]` (ordered by end, then
/// start; 0-based) whose weighted reach contains 0, or `None` if the
/// sequence is zero-window-free. The empty sequence is zero-window-free.
pub fn has_zero_window(s: &Seq, weights: &WeightSet) -> Result<Option<(usize, usize)>> {
    check_same_modulus(s, weights)?;
    let n = s.modulus();
    let words = words_for(n);
    let mut sets: Vec<Vec<u64>> = Vec::with_capacity(s.len());
    let mut scratch = vec![0u64; words];
    for (j, &x) in s.terms().iter().enumerate() {
        for set in sets.iter_mut() {
            scratch.fill(0);
            or_extend(&mut scratch, set, x, weights, n);
            std::mem::swap(set, &mut scratch);
        }
        let mut single = vec![0u64; words];
        for &a in weights.values() {
            set_bit(&mut single, mul_mod(a, x, n));
        }
        sets.push(single);
        for (i, set) in sets.iter().enumerate() {
            if set[0] & 1 == 1 {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// True iff no contiguous window is an A-weighted zero-sum sequence.
pub fn zero_window_free(s: &Seq, weights: &WeightSet) -> Result<bool> {
    Ok(has_zero_window(s, weights)?.is_none())
}

/// True iff `S` has length `constant - 1` and no zero window, i.e. `S` is an
/// A-extremal sequence for a known `C_A(n)`.
pub fn is_extremal(s: &Seq, weights: &WeightSet, constant: u64) -> Result<bool> {
    Ok(s.len() as u64 + 1 == constant && has_zero_window(s, weights)?.is_none())
}

/// True iff all prefix sums `0, x_1, x_1+x_2, ...` are pairwise distinct
/// mod `n` — the zero-window-freeness condition specialized to `A = {1}`.
pub fn prefix_sum_free(s: &Seq) -> bool {
    let n = s.modulus();
    let mut seen = vec![0u64; words_for(n)];
    set_bit(&mut seen, 0);
    let mut sum = 0u64;
    for &x in s.terms() {
        sum = (sum + x) % n;
        if test_bit(&seen, sum) {
            return false;
        }
        set_bit(&mut seen, sum);
    }
    true
}

/// The local side of the prime-by-prime zero-sum criterion: for every prime
/// power `p^r || n`, reduce `S` mod `p^r` and test it against `U(p^r)^j`.
/// The conjunction equals the direct test of `S` against `U(n)^j`.
pub fn crt_zero_sum_check(s: &Seq, j: u32) -> Result<bool> {
    let ctx = ZnContext::new(s.modulus())?;
    for &(p, r) in ctx.factorization() {
        let pr = p.pow(r);
        let local = s.natural_map(pr)?;
        let weights = WeightSet::units_pow(&ZnContext::new(pr)?, j)?;
        if !window_reach(&local, &weights)?.contains_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `{ a_1 x_1 + a_2 x_2 + a_3 x_3 : a_i ∈ U(p^r)^2 }` covers all of
/// `Z_{p^r}`, for units `x_i` over a prime power modulus.
pub fn triple_unit_cover(
    ctx: &ZnContext,
    x1: crate::ring::Residue,
    x2: crate::ring::Residue,
    x3: crate::ring::Residue,
) -> Result<bool> {
    if !ctx.is_prime_power() {
        return Err(Error::NonPrimePowerModulus(ctx.modulus()));
    }
    let n = ctx.modulus();
    for x in [x1, x2, x3] {
        if x.modulus() != n {
            return Err(Error::ModulusMismatch { left: x.modulus(), right: n });
        }
        if !x.is_unit() {
            return Err(Error::NotAUnit { value: x.value(), modulus: n });
        }
    }
    let weights = WeightSet::units_pow(ctx, 2)?;
    let s = Seq::new(n, vec![x1.value(), x2.value(), x3.value()])?;
    Ok(window_reach(&s, &weights)?.count() == n)
}

// ---------------------------------------------------------------------------
// Exhaustive search.

/// Node and wall-clock limits for the search. Both default to unlimited.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchBudget {
    pub max_nodes: Option<u64>,
    pub max_elapsed: Option<Duration>,
}

/// Result of a `C_A(n)` computation. A search that exhausts its budget
/// reports only the verified lower bound, never a guessed constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchOutcome {
    Exact { constant: u64 },
    LowerBound { at_least: u64 },
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub n: u64,
    pub weights: String,
    pub outcome: SearchOutcome,
    /// The longest zero-window-free sequence found; when the outcome is
    /// exact this is an A-extremal witness of length `constant - 1`,
    /// lexicographically least among the first-term representatives.
    pub witness: Seq,
    pub extremal_count: Option<u64>,
    pub nodes_visited: u64,
    pub elapsed: Duration,
}

impl SearchReport {
    pub fn constant(&self) -> Option<u64> {
        match self.outcome {
            SearchOutcome::Exact { constant } => Some(constant),
            SearchOutcome::LowerBound { .. } => None,
        }
    }
}

/// Which first terms the depth-first search tries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstTerm {
    /// Every residue in `[1, n)` — required when enumerating all sequences.
    All,
    /// One representative per unit-scaling orbit: the divisors of `n`.
    UnitOrbitReps,
}

/// How [`enumerate_extremal`] reports its findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerateMode {
    Count,
    Collect,
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    /// False when the budget ran out before the space was exhausted.
    pub complete: bool,
    pub count: u64,
    pub sequences: Vec<Seq>,
}

struct SearchCore<'a> {
    n: u64,
    words: usize,
    weights: &'a WeightSet,
    grouped: bool,
    /// Group path: forbidden mask per depth (depth d = d terms placed).
    masks: Vec<Vec<u64>>,
    /// Generic path: per depth, a flat buffer of `depth` reach masks (one
    /// per suffix window), each `words` long.
    reaches: Vec<Vec<u64>>,
    scratch: Vec<u64>,
    seq: Vec<u64>,
    first_terms: Vec<u64>,
    nodes: u64,
    max_nodes: Option<u64>,
    deadline: Option<Instant>,
    aborted: bool,
    best: Vec<u64>,
}

impl<'a> SearchCore<'a> {
    fn new(ctx: &ZnContext, weights: &'a WeightSet, budget: SearchBudget, first: FirstTerm) -> Self {
        let n = ctx.modulus();
        let first_terms = match first {
            FirstTerm::All => (1..n).collect(),
            FirstTerm::UnitOrbitReps => {
                ctx.divisors().into_iter().filter(|&d| d < n).collect()
            }
        };
        SearchCore {
            n,
            words: words_for(n),
            weights,
            grouped: weights.is_unit_subgroup(),
            masks: vec![vec![0u64; words_for(n)]],
            reaches: vec![Vec::new()],
            scratch: vec![0u64; words_for(n)],
            seq: Vec::new(),
            first_terms,
            nodes: 0,
            max_nodes: budget.max_nodes,
            deadline: budget.max_elapsed.map(|d| Instant::now() + d),
            aborted: false,
            best: Vec::new(),
        }
    }

    fn budget_spent(&mut self) -> bool {
        if let Some(max) = self.max_nodes {
            if self.nodes >= max {
                return true;
            }
        }
        if let Some(deadline) = self.deadline {
            if self.nodes % 1024 == 0 && Instant::now() >= deadline {
                return true;
            }
        }
        false
    }

    fn ensure_depth(&mut self, depth: usize) {
        while self.masks.len() <= depth {
            self.masks.push(vec![0u64; self.words]);
        }
        while self.reaches.len() <= depth {
            self.reaches.push(Vec::new());
        }
    }

    /// Group path: the next forbidden mask after appending `x` at depth `d`.
    fn push_group(&mut self, d: usize, x: u64) {
        self.ensure_depth(d + 1);
        self.scratch.copy_from_slice(&self.masks[d]);
        self.scratch[0] |= 1; // fold the new singleton window in via bit 0
        self.masks[d + 1].fill(0);
        let n = self.n;
        let weights = self.weights;
        for &a in weights.values() {
            let shift = (n - mul_mod(a, x, n)) % n;
            or_rotated(&mut self.masks[d + 1], &self.scratch, shift, n);
        }
    }

    /// Generic path: is appending `x` legal, i.e. does no extended window
    /// reach 0?
    fn legal_generic(&self, d: usize, x: u64) -> bool {
        let words = self.words;
        for &a in self.weights.values() {
            let ax = mul_mod(a, x, self.n);
            if ax == 0 {
                return false; // the singleton window (x) reaches 0
            }
            let target = self.n - ax;
            for set in self.reaches[d].chunks_exact(words) {
                if test_bit(set, target) {
                    return false;
                }
            }
        }
        true
    }

    fn push_generic(&mut self, d: usize, x: u64) {
        self.ensure_depth(d + 1);
        let words = self.words;
        let (head, tail) = self.reaches.split_at_mut(d + 1);
        let cur = &head[d];
        let next = &mut tail[0];
        next.clear();
        next.resize((d + 1) * words, 0);
        for (set, out) in cur.chunks_exact(words).zip(next.chunks_exact_mut(words)) {
            or_extend(out, set, x, self.weights, self.n);
        }
        let single = &mut next[d * words..];
        for &a in self.weights.values() {
            set_bit(single, mul_mod(a, x, self.n));
        }
    }

    fn next_candidate(&self, d: usize, from: u64) -> Option<u64> {
        if d == 0 {
            return self.first_terms.iter().copied().find(|&x| x >= from);
        }
        if self.grouped {
            let mask = &self.masks[d];
            let mut v = from.max(1);
            while v < self.n {
                let w = (v / 64) as usize;
                let mut inv = !mask[w] & (!0u64 << (v % 64));
                if w == self.words - 1 {
                    inv &= top_mask(self.n);
                }
                if w == 0 {
                    inv &= !1u64;
                }
                if inv != 0 {
                    let x = w as u64 * 64 + inv.trailing_zeros() as u64;
                    if x < self.n {
                        return Some(x);
                    }
                    return None;
                }
                v = (w as u64 + 1) * 64;
            }
            None
        } else {
            (from.max(1)..self.n).find(|&x| self.legal_generic(d, x))
        }
    }

    /// Runs the depth-first search. `target`: stop descending at this length
    /// and hand each such sequence to `visit` (enumeration); `None` searches
    /// for the maximum length. Returns false when the budget ran out.
    fn run(&mut self, target: Option<usize>, mut visit: impl FnMut(&[u64])) -> bool {
        let mut cursors: Vec<u64> = vec![0];
        loop {
            let d = self.seq.len();
            let Some(x) = self.next_candidate(d, cursors[d]) else {
                if d == 0 {
                    return !self.aborted;
                }
                self.seq.pop();
                cursors.pop();
                continue;
            };
            cursors[d] = x + 1;
            self.nodes += 1;
            if self.budget_spent() {
                self.aborted = true;
                return false;
            }
            if self.grouped {
                self.push_group(d, x);
            } else {
                if !self.legal_generic(d, x) {
                    continue;
                }
                self.push_generic(d, x);
            }
            self.seq.push(x);
            if self.seq.len() > self.best.len() {
                self.best = self.seq.clone();
            }
            if let Some(t) = target {
                if self.seq.len() == t {
                    visit(&self.seq);
                    self.seq.pop();
                    continue;
                }
            }
            cursors.push(1);
        }
    }
}

/// Computes `C_A(n)` by exhaustive pruned depth-first search:
/// `C_A(n) = 1 + (maximum length of a zero-window-free sequence)`.
///
/// On budget exhaustion the outcome is a typed lower bound: the search never
/// reports an unverified constant.
pub fn compute_constant(
    ctx: &ZnContext,
    weights: &WeightSet,
    budget: SearchBudget,
) -> Result<SearchReport> {
    if weights.modulus() != ctx.modulus() {
        return Err(Error::ModulusMismatch { left: ctx.modulus(), right: weights.modulus() });
    }
    let start = Instant::now();
    let mut core = SearchCore::new(ctx, weights, budget, FirstTerm::UnitOrbitReps);
    let complete = core.run(None, |_| {});
    let best_len = core.best.len() as u64;
    let outcome = if complete {
        SearchOutcome::Exact { constant: best_len + 1 }
    } else {
        SearchOutcome::LowerBound { at_least: best_len + 1 }
    };
    Ok(SearchReport {
        n: ctx.modulus(),
        weights: weights.describe(),
        outcome,
        witness: Seq::new(ctx.modulus(), core.best)?,
        extremal_count: None,
        nodes_visited: core.nodes,
        elapsed: start.elapsed(),
    })
}

/// Streams every zero-window-free sequence of length `constant - 1` to
/// `visit`, in lexicographic order. Returns false when the budget ran out
/// (the stream is then incomplete). `first` controls whether all first
/// terms are explored or only one representative per unit-scaling orbit.
pub fn for_each_extremal(
    ctx: &ZnContext,
    weights: &WeightSet,
    constant: u64,
    budget: SearchBudget,
    first: FirstTerm,
    visit: impl FnMut(&[u64]),
) -> Result<bool> {
    if weights.modulus() != ctx.modulus() {
        return Err(Error::ModulusMismatch { left: ctx.modulus(), right: weights.modulus() });
    }
    if constant < 2 {
        return Err(Error::Domain(format!("constant must be at least 2, got {constant}")));
    }
    let target = (constant - 1) as usize;
    let mut core = SearchCore::new(ctx, weights, budget, first);
    Ok(core.run(Some(target), visit))
}

/// All A-extremal sequences for a known constant, counted or collected.
pub fn enumerate_extremal(
    ctx: &ZnContext,
    weights: &WeightSet,
    constant: u64,
    mode: EnumerateMode,
    budget: SearchBudget,
) -> Result<Enumeration> {
    let mut count = 0u64;
    let mut sequences = Vec::new();
    let n = ctx.modulus();
    let complete = for_each_extremal(ctx, weights, constant, budget, FirstTerm::All, |terms| {
        count += 1;
        if mode == EnumerateMode::Collect {
            sequences.push(Seq { modulus: n, terms: terms.to_vec() });
        }
    })?;
    Ok(Enumeration { complete, count, sequences })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Residue;

    fn seq(n: u64, terms: &[u64]) -> Seq {
        Seq::new(n, terms.to_vec()).unwrap()
    }

    #[test]
    fn seq_validation() {
        assert!(Seq::new(5, vec![0, 4]).is_ok());
        assert!(matches!(Seq::new(5, vec![5]), Err(Error::TermOutOfRange { .. })));
        assert!(matches!(Seq::new(1, vec![]), Err(Error::BadModulus(1))));
        assert_eq!(Seq::parse(25, "10,4,20").unwrap().terms(), &[10, 4, 20]);
        assert!(Seq::parse(25, "10,,20").is_err());
    }

    #[test]
    fn reach_of_full_sequence() {
        // (1,2,1) over Z_3 with A={1}: the full sum is 4 ≡ 1, never 0.
        let w = WeightSet::one(3).unwrap();
        let r = window_reach(&seq(3, &[1, 2, 1]), &w).unwrap();
        assert_eq!(r.values(), vec![1]);
        assert!(!r.contains_zero());

        // (1,1,1) over Z_7 with A={1,6}: sums of three ±1 are {1,3,4,6}.
        let w = WeightSet::explicit(7, &[1, 6]).unwrap();
        let r = window_reach(&seq(7, &[1, 1, 1]), &w).unwrap();
        assert_eq!(r.values(), vec![1, 3, 4, 6]);

        // A zero term is annihilated by every weight.
        let w = WeightSet::all_nonzero(9).unwrap();
        let r = window_reach(&seq(9, &[0]), &w).unwrap();
        assert_eq!(r.values(), vec![0]);

        assert!(matches!(
            window_reach(&Seq::empty(9).unwrap(), &w),
            Err(Error::EmptySequence)
        ));
        let w5 = WeightSet::one(5).unwrap();
        assert!(matches!(
            window_reach(&seq(9, &[1]), &w5),
            Err(Error::ModulusMismatch { .. })
        ));
    }

    #[test]
    fn reach_matches_brute_force() {
        // Independent reach computation by direct enumeration of weight
        // assignments, over a small grid.
        fn brute(s: &Seq, w: &WeightSet) -> Vec<u64> {
            let n = s.modulus();
            let mut sums = vec![0u64];
            for &x in s.terms() {
                let mut next = Vec::new();
                for &partial in &sums {
                    for &a in w.values() {
                        next.push((partial + a * x) % n);
                    }
                }
                next.sort_unstable();
                next.dedup();
                sums = next;
            }
            sums
        }
        for n in 2u64..=9 {
            let ctx = ZnContext::new(n).unwrap();
            let sets = [
                WeightSet::one(n).unwrap(),
                WeightSet::all_nonzero(n).unwrap(),
                WeightSet::units_pow(&ctx, 2).unwrap(),
            ];
            for w in &sets {
                for t1 in 0..n {
                    for t2 in 0..n {
                        let s = seq(n, &[t1, t2, (t1 + t2) % n]);
                        assert_eq!(window_reach(&s, w).unwrap().values(), brute(&s, w));
                    }
                }
            }
        }
    }

    #[test]
    fn zero_window_examples() {
        let w = WeightSet::explicit(4, &[1, 3]).unwrap();
        assert_eq!(has_zero_window(&seq(4, &[2, 1, 2]), &w).unwrap(), None);
        assert_eq!(has_zero_window(&seq(4, &[1, 2, 2]), &w).unwrap(), Some((1, 2)));
        // A zero term is a length-1 zero window.
        let w9 = WeightSet::units_pow(&ZnContext::new(9).unwrap(), 1).unwrap();
        assert_eq!(has_zero_window(&seq(9, &[1, 0, 2]), &w9).unwrap(), Some((1, 1)));
        // The empty sequence is zero-window-free.
        assert_eq!(has_zero_window(&Seq::empty(9).unwrap(), &w9).unwrap(), None);
    }

    #[test]
    fn extremal_examples() {
        let u25 = WeightSet::units_pow(&ZnContext::new(25).unwrap(), 1).unwrap();
        assert!(is_extremal(&seq(25, &[10, 4, 20]), &u25, 4).unwrap());
        assert!(!is_extremal(&seq(25, &[10, 4]), &u25, 4).unwrap());
        let u75 = WeightSet::units_pow(&ZnContext::new(75).unwrap(), 1).unwrap();
        assert!(is_extremal(&seq(75, &[30, 12, 60, 38, 30, 63, 60]), &u75, 8).unwrap());
        let u95c = WeightSet::units_pow(&ZnContext::new(95).unwrap(), 3).unwrap();
        assert!(is_extremal(&seq(95, &[15, 30, 69, 25, 35]), &u95c, 6).unwrap());
    }

    #[test]
    fn prefix_sum_examples() {
        assert!(prefix_sum_free(&seq(5, &[1, 1, 1, 1])));
        assert!(!prefix_sum_free(&seq(4, &[1, 2, 2])));
        assert!(!prefix_sum_free(&seq(4, &[0, 1])));
        assert!(prefix_sum_free(&Seq::empty(4).unwrap()));
    }

    #[test]
    fn prefix_sum_agrees_with_window_scan() {
        for n in 2u64..=7 {
            let w = WeightSet::one(n).unwrap();
            let mut stack = vec![vec![]];
            while let Some(terms) = stack.pop() {
                let s = Seq::new(n, terms.clone()).unwrap();
                let free = has_zero_window(&s, &w).unwrap().is_none();
                assert_eq!(prefix_sum_free(&s), free, "n={n} s={s}");
                if terms.len() < (n - 1) as usize {
                    for x in 0..n {
                        let mut t = terms.clone();
                        t.push(x);
                        stack.push(t);
                    }
                }
            }
        }
    }

    #[test]
    fn crt_check_examples() {
        // (3,5) over Z_15, j=1: fails locally at p=3 and directly.
        let s = seq(15, &[3, 5]);
        assert!(!crt_zero_sum_check(&s, 1).unwrap());
        let w = WeightSet::units_pow(&ZnContext::new(15).unwrap(), 1).unwrap();
        assert!(!window_reach(&s, &w).unwrap().contains_zero());
        // Prime modulus: reduces to the direct test.
        let s = seq(7, &[1, 6]);
        assert_eq!(
            crt_zero_sum_check(&s, 1).unwrap(),
            window_reach(&s, &WeightSet::units_pow(&ZnContext::new(7).unwrap(), 1).unwrap())
                .unwrap()
                .contains_zero()
        );
        // The extremal sequence over Z_95 is not a weighted zero-sum; the
        // p=19 component is what fails.
        let s = seq(95, &[38, 37, 38, 78, 76]);
        assert!(!crt_zero_sum_check(&s, 3).unwrap());
        let local = s.natural_map(19).unwrap();
        let w19 = WeightSet::units_pow(&ZnContext::new(19).unwrap(), 3).unwrap();
        assert!(!window_reach(&local, &w19).unwrap().contains_zero());
    }

    #[test]
    fn triple_cover_examples() {
        let ctx7 = ZnContext::new(7).unwrap();
        let r = |v, n| Residue::reduced(v, n);
        assert!(triple_unit_cover(&ctx7, r(1, 7), r(1, 7), r(1, 7)).unwrap());
        let ctx5 = ZnContext::new(5).unwrap();
        assert!(!triple_unit_cover(&ctx5, r(1, 5), r(1, 5), r(1, 5)).unwrap());
        let ctx11 = ZnContext::new(11).unwrap();
        for x1 in 1..11 {
            for x2 in 1..11 {
                for x3 in 1..11 {
                    assert!(triple_unit_cover(&ctx11, r(x1, 11), r(x2, 11), r(x3, 11)).unwrap());
                }
            }
        }
        assert!(matches!(
            triple_unit_cover(&ctx7, r(0, 7), r(1, 7), r(1, 7)),
            Err(Error::NotAUnit { .. })
        ));
        let ctx15 = ZnContext::new(15).unwrap();
        assert!(matches!(
            triple_unit_cover(&ctx15, r(1, 15), r(1, 15), r(1, 15)),
            Err(Error::NonPrimePowerModulus(15))
        ));
    }

    #[test]
    fn constants_small() {
        for n in 2u64..=8 {
            let ctx = ZnContext::new(n).unwrap();
            let w = WeightSet::one(n).unwrap();
            let report = compute_constant(&ctx, &w, SearchBudget::default()).unwrap();
            assert_eq!(report.outcome, SearchOutcome::Exact { constant: n });
            assert_eq!(report.witness.len() as u64, n - 1);
            assert!(has_zero_window(&report.witness, &w).unwrap().is_none());
        }
        let ctx = ZnContext::new(15).unwrap();
        let w = WeightSet::units_pow(&ctx, 1).unwrap();
        let report = compute_constant(&ctx, &w, SearchBudget::default()).unwrap();
        assert_eq!(report.outcome, SearchOutcome::Exact { constant: 4 });
        let ctx = ZnContext::new(7).unwrap();
        let w = WeightSet::units_pow(&ctx, 3).unwrap();
        let report = compute_constant(&ctx, &w, SearchBudget::default()).unwrap();
        assert_eq!(report.outcome, SearchOutcome::Exact { constant: 4 });
    }

    #[test]
    fn group_and_generic_paths_agree() {
        // The same search run with the subgroup fast path and with the
        // generic reach-set path must give identical constants.
        for n in [4u64, 6, 9, 10, 12] {
            let ctx = ZnContext::new(n).unwrap();
            for w in [
                WeightSet::units_pow(&ctx, 1).unwrap(),
                WeightSet::units_pow(&ctx, 2).unwrap(),
                WeightSet::one(n.min(10)).unwrap(),
            ] {
                let ctx = ZnContext::new(w.modulus()).unwrap();
                let grouped = compute_constant(&ctx, &w, SearchBudget::default()).unwrap();
                let explicit = WeightSet::explicit(w.modulus(), w.values()).unwrap();
                let generic = if explicit.is_unit_subgroup() {
                    // Force the generic path by spelling the set out by hand.
                    let mut core =
                        SearchCore::new(&ctx, &explicit, SearchBudget::default(), FirstTerm::UnitOrbitReps);
                    core.grouped = false;
                    assert!(core.run(None, |_| {}));
                    core.best.len() as u64 + 1
                } else {
                    compute_constant(&ctx, &explicit, SearchBudget::default())
                        .unwrap()
                        .constant()
                        .unwrap()
                };
                assert_eq!(grouped.constant().unwrap(), generic, "n={n} A={}", w.describe());
            }
        }
    }

    #[test]
    fn budget_exhaustion_is_typed() {
        let ctx = ZnContext::new(11).unwrap();
        let w = WeightSet::one(11).unwrap();
        let report =
            compute_constant(&ctx, &w, SearchBudget { max_nodes: Some(10), max_elapsed: None })
                .unwrap();
        match report.outcome {
            SearchOutcome::LowerBound { at_least } => assert!(at_least >= 2),
            SearchOutcome::Exact { .. } => panic!("expected budget exhaustion"),
        }
        assert!(has_zero_window(&report.witness, &w).unwrap().is_none());
    }

    #[test]
    fn enumeration_counts() {
        // (n-1)! extremal sequences for A = {1}.
        for (n, expected) in [(3u64, 2u64), (4, 6), (5, 24)] {
            let ctx = ZnContext::new(n).unwrap();
            let w = WeightSet::one(n).unwrap();
            let e =
                enumerate_extremal(&ctx, &w, n, EnumerateMode::Count, SearchBudget::default())
                    .unwrap();
            assert!(e.complete);
            assert_eq!(e.count, expected, "n={n}");
        }
        // Q_5 over Z_5: the extremal pairs are exactly the coset-test pairs.
        let ctx = ZnContext::new(5).unwrap();
        let q5 = WeightSet::units_pow(&ctx, 2).unwrap();
        let e = enumerate_extremal(&ctx, &q5, 3, EnumerateMode::Collect, SearchBudget::default())
            .unwrap();
        assert_eq!(e.count, 8);
        for s in &e.sequences {
            let (x, y) = (s.terms()[0], s.terms()[1]);
            assert!(crate::ring::coset_test_pair(
                Residue::reduced(x, 5),
                Residue::reduced(y, 5),
                &q5
            )
            .unwrap());
        }
    }

    #[test]
    fn enumeration_incomplete_when_budgeted() {
        let ctx = ZnContext::new(6).unwrap();
        let w = WeightSet::one(6).unwrap();
        let e = enumerate_extremal(
            &ctx,
            &w,
            6,
            EnumerateMode::Count,
            SearchBudget { max_nodes: Some(20), max_elapsed: None },
        )
        .unwrap();
        assert!(!e.complete);
        assert!(e.count < 120);
    }

    #[test]
    fn witness_is_lexicographically_least() {
        // For A = {1} the all-ones sequence is the lex-least extremal one.
        let ctx = ZnContext::new(6).unwrap();
        let w = WeightSet::one(6).unwrap();
        let report = compute_constant(&ctx, &w, SearchBudget::default()).unwrap();
        assert_eq!(report.witness.terms(), &[1, 1, 1, 1, 1]);
    }
}
