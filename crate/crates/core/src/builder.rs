//! Constructive generators of extremal sequences.
//!
//! Each composite construction splits off one prime `p`: the children are
//! extremal sequences over `Z_{n/p}` whose terms get multiplied by `p`, and
//! the connector terms placed between them are the only terms not divisible
//! by `p`. Two-part splits (units; cubes at `p ≢ 1 mod 3`) take two children
//! and one connector; three-part splits (unit squares; cubes at
//! `p ≡ 1 mod 3`) take three children and a connector pair whose image mod
//! `p` must itself be extremal over `Z_p`.
//!
//! A build is reproducible from its [`BuildRecipe`] alone; recipes have a
//! stable textual form of nested parenthesized records, e.g.
//!
//! ```text
//! (units n=25 p=5 x=4 (n=5 t=2) (n=5 t=4))
//! (units3 n=95 p=19 x=37 y=78 (n=5 t=2) (n=5 t=2) (n=5 t=4))
//! ```
//!
//! Leaf records carry `t=` and a prime modulus (for the `one` family, the
//! whole sequence); split records carry `p=`, one or two connectors (`x=`,
//! `y=`) and their child records.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{is_extremal, Seq};
use crate::known::{cubes_domain_check, family_constant, pattern_length, Family};
use crate::ring::{coset_test_pair, Residue, WeightSet, ZnContext};
use crate::{Error, Result};

/// A reproducible description of one build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildRecipe {
    pub family: Family,
    pub node: RecipeNode,
}

/// One node of a recipe tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecipeNode {
    /// A base-case extremal sequence (prime modulus, except for the `one`
    /// family where the leaf is the whole sequence).
    Leaf { n: u64, terms: Vec<u64> },
    /// A recursive split at the prime `p`, with one connector for two-part
    /// splits and two connectors for three-part splits.
    Split { n: u64, p: u64, connectors: Vec<u64>, children: Vec<RecipeNode> },
}

impl RecipeNode {
    pub fn modulus(&self) -> u64 {
        match self {
            RecipeNode::Leaf { n, .. } => *n,
            RecipeNode::Split { n, .. } => *n,
        }
    }
}

// ---------------------------------------------------------------------------
// Single-level constructions.

/// Builds a maximal prefix-sum-distinct sequence for `A = {1}`: length
/// `n - 1`, all prefix sums pairwise distinct. Without `choices` the least
/// legal residue is taken at each step; `choices` must supply all `n - 1`
/// residues and is validated step by step.
pub fn build_one_weight(ctx: &ZnContext, choices: Option<&[u64]>) -> Result<Seq> {
    let n = ctx.modulus();
    if let Some(c) = choices {
        if c.len() as u64 != n - 1 {
            return Err(Error::Domain(format!(
                "expected {} choices for modulus {n}, got {}",
                n - 1,
                c.len()
            )));
        }
    }
    let mut seen = vec![false; n as usize];
    seen[0] = true;
    let mut first_seen_after = vec![usize::MAX; n as usize];
    let mut sum = 0u64;
    let mut terms = Vec::with_capacity((n - 1) as usize);
    for step in 0..(n - 1) as usize {
        let x = match choices {
            Some(c) => {
                let x = c[step];
                if x >= n {
                    return Err(Error::TermOutOfRange { value: x, modulus: n });
                }
                let candidate = ((sum + x) % n) as usize;
                if seen[candidate] {
                    let clash = if candidate == 0 { 0 } else { first_seen_after[candidate] + 1 };
                    return Err(Error::PrefixSumClash { step, value: x, clash });
                }
                x
            }
            None => (1..n)
                .find(|&x| !seen[((sum + x) % n) as usize])
                .expect("a legal residue always exists while step < n - 1"),
        };
        sum = (sum + x) % n;
        seen[sum as usize] = true;
        first_seen_after[sum as usize] = step;
        terms.push(x);
    }
    Seq::new(n, terms)
}

fn check_prime_divisor(ctx: &ZnContext, p: u64) -> Result<()> {
    if !ctx.prime_divisors().any(|q| q == p) {
        return Err(Error::Domain(format!(
            "{p} is not a prime divisor of {}",
            ctx.modulus()
        )));
    }
    Ok(())
}

fn check_child(child: &Seq, family: Family, n_child: u64, index: usize) -> Result<()> {
    if child.modulus() != n_child {
        return Err(Error::ModulusMismatch { left: child.modulus(), right: n_child });
    }
    let ctx = ZnContext::new(n_child)?;
    let weights = family.weight_set(&ctx)?;
    let constant = family_constant(family, &ctx)?;
    if !is_extremal(child, &weights, constant)? {
        return Err(Error::ChildNotExtremal { index, modulus: n_child });
    }
    Ok(())
}

fn scaled_concat(n: u64, p: u64, parts: &[&Seq], connectors: &[u64]) -> Vec<u64> {
    // parts[0], conn[0], parts[1], conn[1], parts[2], ...
    let mut terms = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            terms.push(connectors[i - 1]);
        }
        terms.extend(part.terms().iter().map(|&u| p * u % n));
    }
    terms
}

fn verify_built(s: &Seq, family: Family, ctx: &ZnContext) -> Result<()> {
    let weights = family.weight_set(ctx)?;
    let len = pattern_length(family, ctx)?;
    if s.len() as u64 != len || !crate::engine::zero_window_free(s, &weights)? {
        return Err(Error::Internal(format!(
            "construction produced a non-extremal sequence {s} over Z_{}",
            ctx.modulus()
        )));
    }
    Ok(())
}

/// The two-part construction for `A = U(n)`, `n` odd: given `U(n/p)`-extremal
/// `S_1', S_2'` and a connector not divisible by `p`, the sequence
/// `(p·u_1, ..., p·u_k, x*, p·v_1, ..., p·v_k)` is `U(n)`-extremal.
pub fn build_units(ctx: &ZnContext, p: u64, s1: &Seq, s2: &Seq, x_star: u64) -> Result<Seq> {
    let n = ctx.modulus();
    if n % 2 == 0 {
        return Err(Error::Domain(format!("the U(n) construction requires odd n, got {n}")));
    }
    check_prime_divisor(ctx, p)?;
    if x_star >= n {
        return Err(Error::TermOutOfRange { value: x_star, modulus: n });
    }
    if x_star % p == 0 {
        return Err(Error::BadConnector(format!("{p} divides the connector {x_star}")));
    }
    let n_child = n / p;
    check_child(s1, Family::Units, n_child, 0)?;
    check_child(s2, Family::Units, n_child, 1)?;
    let s = Seq::new(n, scaled_concat(n, p, &[s1, s2], &[x_star]))?;
    verify_built(&s, Family::Units, ctx)?;
    Ok(s)
}

/// The three-part construction for `A = U(n)^2`, every prime divisor of `n`
/// at least 7: three `U(n/p)^2`-extremal children and a connector pair whose
/// image mod `p` passes the square-coset test.
pub fn build_units_squared(
    ctx: &ZnContext,
    p: u64,
    s1: &Seq,
    s2: &Seq,
    s3: &Seq,
    x_star: u64,
    x_star2: u64,
) -> Result<Seq> {
    let n = ctx.modulus();
    if let Some(q) = ctx.prime_divisors().find(|&q| q < 7) {
        return Err(Error::Domain(format!(
            "the U(n)^2 construction requires every prime divisor of n to be at least 7; \
             {n} is divisible by {q}"
        )));
    }
    check_prime_divisor(ctx, p)?;
    for x in [x_star, x_star2] {
        if x >= n {
            return Err(Error::TermOutOfRange { value: x, modulus: n });
        }
    }
    let q_p = WeightSet::units_pow(&ZnContext::new(p)?, 2)?;
    if !coset_test_pair(Residue::reduced(x_star, p), Residue::reduced(x_star2, p), &q_p)? {
        return Err(Error::BadConnector(format!(
            "the image ({}, {}) of the connectors mod {p} has a square-weighted zero-sum \
             subsequence",
            x_star % p,
            x_star2 % p
        )));
    }
    let n_child = n / p;
    check_child(s1, Family::UnitsSquared, n_child, 0)?;
    check_child(s2, Family::UnitsSquared, n_child, 1)?;
    check_child(s3, Family::UnitsSquared, n_child, 2)?;
    let s = Seq::new(n, scaled_concat(n, p, &[s1, s2, s3], &[x_star, x_star2]))?;
    verify_built(&s, Family::UnitsSquared, ctx)?;
    Ok(s)
}

/// The construction for `A = U(n)^3`, `n` squarefree and coprime to 2, 7
/// and 13. For `p ≡ 1 (mod 3)` this is a three-part split (three children,
/// two connectors whose image mod `p` passes the cube-coset test); otherwise
/// a two-part split (two children, one connector not divisible by `p`).
pub fn build_units_cubed(
    ctx: &ZnContext,
    p: u64,
    children: &[Seq],
    connectors: &[u64],
) -> Result<Seq> {
    let n = ctx.modulus();
    cubes_domain_check(ctx)?;
    check_prime_divisor(ctx, p)?;
    for &x in connectors {
        if x >= n {
            return Err(Error::TermOutOfRange { value: x, modulus: n });
        }
    }
    let three_part = p % 3 == 1;
    let (want_children, want_connectors) = if three_part { (3, 2) } else { (2, 1) };
    if children.len() != want_children || connectors.len() != want_connectors {
        return Err(Error::Domain(format!(
            "p = {p}: expected {want_children} children and {want_connectors} connector(s), \
             got {} and {}",
            children.len(),
            connectors.len()
        )));
    }
    if three_part {
        let cubes_p = WeightSet::units_pow(&ZnContext::new(p)?, 3)?;
        if !coset_test_pair(
            Residue::reduced(connectors[0], p),
            Residue::reduced(connectors[1], p),
            &cubes_p,
        )? {
            return Err(Error::BadConnector(format!(
                "the image ({}, {}) of the connectors mod {p} has a cube-weighted zero-sum \
                 subsequence",
                connectors[0] % p,
                connectors[1] % p
            )));
        }
    } else if connectors[0] % p == 0 {
        return Err(Error::BadConnector(format!("{p} divides the connector {}", connectors[0])));
    }
    let n_child = n / p;
    for (i, child) in children.iter().enumerate() {
        check_child(child, Family::UnitsCubed, n_child, i)?;
    }
    let parts: Vec<&Seq> = children.iter().collect();
    let s = Seq::new(n, scaled_concat(n, p, &parts, connectors))?;
    verify_built(&s, Family::UnitsCubed, ctx)?;
    Ok(s)
}

// ---------------------------------------------------------------------------
// Recipes.

impl BuildRecipe {
    /// Rebuilds the sequence this recipe describes, re-validating every
    /// base case, child and connector condition along the way.
    pub fn build(&self) -> Result<Seq> {
        build_node(self.family, &self.node)
    }

    /// Parses the textual recipe form produced by `Display`.
    pub fn parse(text: &str) -> Result<BuildRecipe> {
        let mut p = RecipeParser { text, pos: 0 };
        let recipe = p.parse_root()?;
        p.skip_ws();
        if p.pos != p.text.len() {
            return Err(Error::RecipeParse(format!(
                "trailing input at byte {}: '{}'",
                p.pos,
                &p.text[p.pos..]
            )));
        }
        Ok(recipe)
    }
}

fn build_node(family: Family, node: &RecipeNode) -> Result<Seq> {
    match node {
        RecipeNode::Leaf { n, terms } => {
            let ctx = ZnContext::new(*n)?;
            let s = Seq::new(*n, terms.clone())?;
            match family {
                Family::One => {
                    if s.len() as u64 != n - 1 || !crate::engine::prefix_sum_free(&s) {
                        return Err(Error::NotExtremal(format!(
                            "leaf {s} is not a maximal prefix-sum-distinct sequence over Z_{n}"
                        )));
                    }
                }
                _ => {
                    if !ctx.is_prime() {
                        return Err(Error::RecipeParse(format!(
                            "leaf modulus {n} must be prime for the {family} family"
                        )));
                    }
                    if family == Family::UnitsCubed && *n == 7 {
                        return Err(Error::Domain(
                            "no leaf construction for U(7)^3 over Z_7".to_string(),
                        ));
                    }
                    let weights = family.weight_set(&ctx)?;
                    let constant = family_constant(family, &ctx)?;
                    if !is_extremal(&s, &weights, constant)? {
                        return Err(Error::NotExtremal(format!(
                            "leaf {s} is not {family}-extremal over Z_{n}"
                        )));
                    }
                }
            }
            Ok(s)
        }
        RecipeNode::Split { n, p, connectors, children } => {
            if *p == 0 || n % p != 0 {
                return Err(Error::RecipeParse(format!("{p} does not divide {n}")));
            }
            let ctx = ZnContext::new(*n)?;
            let built: Vec<Seq> = children
                .iter()
                .map(|c| {
                    if c.modulus() != n / p {
                        return Err(Error::RecipeParse(format!(
                            "child modulus {} should be {}",
                            c.modulus(),
                            n / p
                        )));
                    }
                    build_node(family, c)
                })
                .collect::<Result<_>>()?;
            match family {
                Family::One => {
                    Err(Error::RecipeParse("the one family has no split nodes".to_string()))
                }
                Family::Units => {
                    if built.len() != 2 || connectors.len() != 1 {
                        return Err(Error::RecipeParse(
                            "a units split takes 2 children and 1 connector".to_string(),
                        ));
                    }
                    build_units(&ctx, *p, &built[0], &built[1], connectors[0])
                }
                Family::UnitsSquared => {
                    if built.len() != 3 || connectors.len() != 2 {
                        return Err(Error::RecipeParse(
                            "a units2 split takes 3 children and 2 connectors".to_string(),
                        ));
                    }
                    build_units_squared(
                        &ctx,
                        *p,
                        &built[0],
                        &built[1],
                        &built[2],
                        connectors[0],
                        connectors[1],
                    )
                }
                Family::UnitsCubed => build_units_cubed(&ctx, *p, &built, connectors),
            }
        }
    }
}

impl std::fmt::Display for BuildRecipe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write_node(f, Some(self.family), &self.node)
    }
}

fn write_node(
    f: &mut std::fmt::Formatter<'_>,
    family: Option<Family>,
    node: &RecipeNode,
) -> std::fmt::Result {
    write!(f, "(")?;
    if let Some(family) = family {
        write!(f, "{} ", family.recipe_tag())?;
    }
    match node {
        RecipeNode::Leaf { n, terms } => {
            let list: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
            write!(f, "n={n} t={}", list.join(","))?;
        }
        RecipeNode::Split { n, p, connectors, children } => {
            write!(f, "n={n} p={p} x={}", connectors[0])?;
            if connectors.len() > 1 {
                write!(f, " y={}", connectors[1])?;
            }
            for child in children {
                write!(f, " ")?;
                write_node(f, None, child)?;
            }
        }
    }
    write!(f, ")")
}

struct RecipeParser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> RecipeParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text.as_bytes()[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.pos < self.text.len() && self.text.as_bytes()[self.pos] == c {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::RecipeParse(format!("expected '{}' at byte {}", c as char, self.pos)))
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.as_bytes().get(self.pos).copied()
    }

    fn atom(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() {
            let b = self.text.as_bytes()[self.pos];
            if b == b'(' || b == b')' || b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::RecipeParse(format!("expected a token at byte {start}")));
        }
        Ok(&self.text[start..self.pos])
    }

    fn keyed_value(&mut self, key: &str) -> Result<&'a str> {
        let atom = self.atom()?;
        atom.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| Error::RecipeParse(format!("expected {key}=..., got '{atom}'")))
    }

    fn parse_root(&mut self) -> Result<BuildRecipe> {
        self.expect(b'(')?;
        let tag = self.atom()?;
        let family = match tag {
            "one" => Family::One,
            "units" => Family::Units,
            "units2" => Family::UnitsSquared,
            "units3" => Family::UnitsCubed,
            other => return Err(Error::RecipeParse(format!("unknown family tag '{other}'"))),
        };
        let node = self.parse_fields()?;
        Ok(BuildRecipe { family, node })
    }

    fn parse_child(&mut self) -> Result<RecipeNode> {
        self.expect(b'(')?;
        self.parse_fields()
    }

    fn parse_fields(&mut self) -> Result<RecipeNode> {
        let n: u64 = parse_int(self.keyed_value("n")?)?;
        self.skip_ws();
        let next = self.atom()?;
        let node = if let Some(list) = next.strip_prefix("t=") {
            let terms = list
                .split(',')
                .map(parse_int)
                .collect::<Result<Vec<u64>>>()?;
            RecipeNode::Leaf { n, terms }
        } else if let Some(pv) = next.strip_prefix("p=") {
            let p: u64 = parse_int(pv)?;
            let mut connectors = vec![parse_int(self.keyed_value("x")?)?];
            if let Some(b'y') = self.peek() {
                connectors.push(parse_int(self.keyed_value("y")?)?);
            }
            let mut children = Vec::new();
            while self.peek() == Some(b'(') {
                children.push(self.parse_child()?);
            }
            RecipeNode::Split { n, p, connectors, children }
        } else {
            return Err(Error::RecipeParse(format!("expected t=... or p=..., got '{next}'")));
        };
        self.expect(b')')?;
        Ok(node)
    }
}

fn parse_int(s: &str) -> Result<u64> {
    s.trim().parse::<u64>().map_err(|_| Error::RecipeParse(format!("bad integer '{s}'")))
}

// ---------------------------------------------------------------------------
// Random recipes.

/// Samples a random recipe for the family (random prime split at each level,
/// random base cases and connectors) and builds it. The returned sequence is
/// verified extremal by construction; a failure there would be an internal
/// inconsistency, not bad input.
pub fn random_extremal(family: Family, ctx: &ZnContext, seed: u64) -> Result<(Seq, BuildRecipe)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let recipe = random_recipe(family, ctx, &mut rng)?;
    let s = recipe.build()?;
    Ok((s, recipe))
}

/// Samples a random recipe without building it.
pub fn random_recipe(family: Family, ctx: &ZnContext, rng: &mut impl Rng) -> Result<BuildRecipe> {
    check_random_domain(family, ctx)?;
    Ok(BuildRecipe { family, node: random_node(family, ctx, rng)? })
}

/// The deterministic recipe: the smallest prime split at each level, the
/// least base cases, and the lexicographically least connectors.
pub fn first_recipe(family: Family, ctx: &ZnContext) -> Result<BuildRecipe> {
    check_random_domain(family, ctx)?;
    Ok(BuildRecipe { family, node: first_node(family, ctx)? })
}

fn first_node(family: Family, ctx: &ZnContext) -> Result<RecipeNode> {
    let n = ctx.modulus();
    if family == Family::One {
        let terms = build_one_weight(ctx, None)?.terms().to_vec();
        return Ok(RecipeNode::Leaf { n, terms });
    }
    let pair_base = |j: u32| -> Result<Vec<u64>> {
        let weights = WeightSet::units_pow(ctx, j)?;
        for x in ctx.unit_values() {
            for y in ctx.unit_values() {
                if coset_test_pair(Residue::reduced(x, n), Residue::reduced(y, n), &weights)? {
                    return Ok(vec![x, y]);
                }
            }
        }
        Err(Error::Internal(format!("no coset pair over Z_{n}")))
    };
    if ctx.is_prime() {
        let terms = match family {
            Family::Units => vec![1],
            Family::UnitsSquared => pair_base(2)?,
            Family::UnitsCubed if n % 3 == 1 => pair_base(3)?,
            Family::UnitsCubed => vec![1],
            Family::One => unreachable!(),
        };
        return Ok(RecipeNode::Leaf { n, terms });
    }
    let p = ctx.prime_divisors().next().expect("composite modulus has a prime divisor");
    let child = first_node(family, &ZnContext::new(n / p)?)?;
    let three = match family {
        Family::Units => false,
        Family::UnitsSquared => true,
        Family::UnitsCubed => p % 3 == 1,
        Family::One => unreachable!(),
    };
    let connectors = if three {
        let j = if family == Family::UnitsSquared { 2 } else { 3 };
        let weights_p = WeightSet::units_pow(&ZnContext::new(p)?, j)?;
        let mut found = None;
        'outer: for x in 1..n {
            for y in 1..n {
                if coset_test_pair(Residue::reduced(x, p), Residue::reduced(y, p), &weights_p)? {
                    found = Some(vec![x, y]);
                    break 'outer;
                }
            }
        }
        found.ok_or_else(|| Error::Internal(format!("no connector pair mod {p}")))?
    } else {
        vec![1] // 1 is never divisible by p
    };
    let children = vec![child; if three { 3 } else { 2 }];
    Ok(RecipeNode::Split { n, p, connectors, children })
}

fn check_random_domain(family: Family, ctx: &ZnContext) -> Result<()> {
    let n = ctx.modulus();
    match family {
        Family::One => Ok(()),
        Family::Units => {
            if n % 2 == 0 {
                Err(Error::Domain(format!("the U(n) construction requires odd n, got {n}")))
            } else {
                Ok(())
            }
        }
        Family::UnitsSquared => {
            if ctx.is_prime() {
                if n == 2 {
                    Err(Error::Domain("no square-coset pairs over Z_2".to_string()))
                } else {
                    Ok(())
                }
            } else if let Some(q) = ctx.prime_divisors().find(|&q| q < 7) {
                Err(Error::Domain(format!(
                    "the U(n)^2 construction requires every prime divisor of n to be at \
                     least 7; {n} is divisible by {q}"
                )))
            } else {
                Ok(())
            }
        }
        Family::UnitsCubed => {
            if ctx.is_prime() {
                if n == 7 {
                    Err(Error::Domain("no leaf construction for U(7)^3 over Z_7".to_string()))
                } else {
                    Ok(())
                }
            } else {
                cubes_domain_check(ctx)
            }
        }
    }
}

fn random_node(family: Family, ctx: &ZnContext, rng: &mut impl Rng) -> Result<RecipeNode> {
    let n = ctx.modulus();
    if family == Family::One {
        // A uniformly random legal residue at each step realizes any of the
        // (n-1)! maximal sequences.
        let mut seen = vec![false; n as usize];
        seen[0] = true;
        let mut sum = 0u64;
        let mut terms = Vec::new();
        for _ in 0..n - 1 {
            let legal: Vec<u64> = (1..n).filter(|&x| !seen[((sum + x) % n) as usize]).collect();
            let x = legal[rng.random_range(0..legal.len())];
            sum = (sum + x) % n;
            seen[sum as usize] = true;
            terms.push(x);
        }
        return Ok(RecipeNode::Leaf { n, terms });
    }
    if ctx.is_prime() {
        return random_leaf(family, ctx, rng);
    }
    let primes: Vec<u64> = ctx.prime_divisors().collect();
    let p = primes[rng.random_range(0..primes.len())];
    let child_ctx = ZnContext::new(n / p)?;
    let three_part = match family {
        Family::Units => false,
        Family::UnitsSquared => true,
        Family::UnitsCubed => p % 3 == 1,
        Family::One => unreachable!(),
    };
    let child_count = if three_part { 3 } else { 2 };
    let children: Vec<RecipeNode> = (0..child_count)
        .map(|_| random_node(family, &child_ctx, rng))
        .collect::<Result<_>>()?;
    let connectors = if three_part {
        let j = if family == Family::UnitsSquared { 2 } else { 3 };
        let weights_p = WeightSet::units_pow(&ZnContext::new(p)?, j)?;
        loop {
            let x = rng.random_range(0..n);
            let y = rng.random_range(0..n);
            if coset_test_pair(Residue::reduced(x, p), Residue::reduced(y, p), &weights_p)? {
                break vec![x, y];
            }
        }
    } else {
        loop {
            let x = rng.random_range(1..n);
            if x % p != 0 {
                break vec![x];
            }
        }
    };
    Ok(RecipeNode::Split { n, p, connectors, children })
}

fn random_leaf(family: Family, ctx: &ZnContext, rng: &mut impl Rng) -> Result<RecipeNode> {
    let p = ctx.modulus();
    let units = ctx.unit_values();
    let pick = |rng: &mut dyn rand::RngCore| units[rng.random_range(0..units.len())];
    let pair_family = match family {
        Family::Units => false,
        Family::UnitsSquared => true,
        Family::UnitsCubed => p % 3 == 1, // p = 7 was rejected up front
        Family::One => unreachable!(),
    };
    let terms = if pair_family {
        let j = if family == Family::UnitsSquared { 2 } else { 3 };
        let weights = WeightSet::units_pow(ctx, j)?;
        loop {
            let x = pick(rng);
            let y = pick(rng);
            if coset_test_pair(Residue::reduced(x, p), Residue::reduced(y, p), &weights)? {
                break vec![x, y];
            }
        }
    } else {
        vec![pick(rng)]
    };
    Ok(RecipeNode::Leaf { n: p, terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{enumerate_extremal, EnumerateMode, SearchBudget};

    fn seq(n: u64, terms: &[u64]) -> Seq {
        Seq::new(n, terms.to_vec()).unwrap()
    }

    #[test]
    fn one_weight_greedy() {
        let ctx = ZnContext::new(4).unwrap();
        assert_eq!(build_one_weight(&ctx, None).unwrap().terms(), &[1, 1, 1]);
        for n in 2u64..=9 {
            let ctx = ZnContext::new(n).unwrap();
            let s = build_one_weight(&ctx, None).unwrap();
            assert!(crate::engine::prefix_sum_free(&s));
            assert_eq!(s.len() as u64, n - 1);
        }
    }

    #[test]
    fn one_weight_choices() {
        let ctx = ZnContext::new(3).unwrap();
        assert_eq!(build_one_weight(&ctx, Some(&[1, 1])).unwrap().terms(), &[1, 1]);
        assert_eq!(build_one_weight(&ctx, Some(&[2, 2])).unwrap().terms(), &[2, 2]);
        // Those two are the only maximal sequences over Z_3: count 2 = 2!.
        assert!(matches!(
            build_one_weight(&ctx, Some(&[1, 2])),
            Err(Error::PrefixSumClash { step: 1, value: 2, .. })
        ));
        assert!(matches!(
            build_one_weight(&ctx, Some(&[0, 1])),
            Err(Error::PrefixSumClash { step: 0, value: 0, clash: 0 })
        ));
        let ws = WeightSet::one(3).unwrap();
        let e = enumerate_extremal(
            &ZnContext::new(3).unwrap(),
            &ws,
            3,
            EnumerateMode::Collect,
            SearchBudget::default(),
        )
        .unwrap();
        assert_eq!(e.count, 2);
    }

    #[test]
    fn units_construction_examples() {
        let ctx25 = ZnContext::new(25).unwrap();
        let s = build_units(&ctx25, 5, &seq(5, &[2]), &seq(5, &[4]), 4).unwrap();
        assert_eq!(s.terms(), &[10, 4, 20]);
        let s2 = build_units(&ctx25, 5, &seq(5, &[2]), &seq(5, &[4]), 21).unwrap();
        assert_eq!(s2.terms(), &[10, 21, 20]);
        let ctx75 = ZnContext::new(75).unwrap();
        let s3 = build_units(&ctx75, 3, &s, &s2, 38).unwrap();
        assert_eq!(s3.terms(), &[30, 12, 60, 38, 30, 63, 60]);
    }

    #[test]
    fn units_construction_rejections() {
        let ctx = ZnContext::new(25).unwrap();
        let good = seq(5, &[2]);
        assert!(matches!(
            build_units(&ctx, 5, &good, &good, 10),
            Err(Error::BadConnector(_))
        ));
        assert!(matches!(
            build_units(&ctx, 3, &good, &good, 4),
            Err(Error::Domain(_))
        ));
        // (0) is not U(5)-extremal.
        assert!(matches!(
            build_units(&ctx, 5, &seq(5, &[0]), &good, 4),
            Err(Error::ChildNotExtremal { index: 0, .. })
        ));
        let ctx10 = ZnContext::new(10).unwrap();
        assert!(matches!(
            build_units(&ctx10, 5, &seq(2, &[1]), &seq(2, &[1]), 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn squares_construction() {
        // Rejected below 7 even though the pieces would line up.
        let ctx25 = ZnContext::new(25).unwrap();
        assert!(matches!(
            build_units_squared(&ctx25, 5, &seq(5, &[4, 2]), &seq(5, &[1, 3]), &seq(5, &[3, 4]), 21, 12),
            Err(Error::Domain(_))
        ));
        let ctx49 = ZnContext::new(49).unwrap();
        let pair = seq(7, &[1, 1]);
        let s = build_units_squared(&ctx49, 7, &pair, &pair, &pair, 1, 1).unwrap();
        assert_eq!(s.terms(), &[7, 7, 1, 7, 7, 1, 7, 7]);
        assert_eq!(s.len(), 8);
        // A connector pair whose image is a zero-sum pair is rejected:
        // (1, 3) mod 7 has 1·1 + 2·3 = 7 ≡ 0 with square weights {1,2,4}.
        assert!(matches!(
            build_units_squared(&ctx49, 7, &pair, &pair, &pair, 1, 3),
            Err(Error::BadConnector(_))
        ));
    }

    #[test]
    fn cubes_construction_examples() {
        let ctx95 = ZnContext::new(95).unwrap();
        let s = build_units_cubed(
            &ctx95,
            19,
            &[seq(5, &[2]), seq(5, &[2]), seq(5, &[4])],
            &[37, 78],
        )
        .unwrap();
        assert_eq!(s.terms(), &[38, 37, 38, 78, 76]);
        let s = build_units_cubed(&ctx95, 5, &[seq(19, &[3, 6]), seq(19, &[5, 7])], &[69])
            .unwrap();
        assert_eq!(s.terms(), &[15, 30, 69, 25, 35]);
    }

    #[test]
    fn cubes_construction_rejections() {
        let ctx = ZnContext::new(91).unwrap(); // 7 * 13
        assert!(matches!(
            build_units_cubed(&ctx, 7, &[], &[]),
            Err(Error::Domain(_))
        ));
        let ctx45 = ZnContext::new(45).unwrap();
        assert!(matches!(
            build_units_cubed(&ctx45, 3, &[], &[]),
            Err(Error::NotSquarefree(45))
        ));
        let ctx95 = ZnContext::new(95).unwrap();
        // Wrong arity for the chosen prime's case.
        assert!(matches!(
            build_units_cubed(&ctx95, 19, &[seq(5, &[2]), seq(5, &[2])], &[37]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn recipe_round_trip() {
        let texts = [
            "(units n=25 p=5 x=4 (n=5 t=2) (n=5 t=4))",
            "(units n=75 p=3 x=38 (n=25 p=5 x=4 (n=5 t=2) (n=5 t=4)) (n=25 p=5 x=21 (n=5 t=2) (n=5 t=4)))",
            "(units3 n=95 p=19 x=37 y=78 (n=5 t=2) (n=5 t=2) (n=5 t=4))",
            "(units3 n=95 p=5 x=69 (n=19 t=3,6) (n=19 t=5,7))",
            "(one n=4 t=1,1,1)",
        ];
        for text in texts {
            let recipe = BuildRecipe::parse(text).unwrap();
            assert_eq!(recipe.to_string(), text);
            let again = BuildRecipe::parse(&recipe.to_string()).unwrap();
            assert_eq!(recipe, again);
            recipe.build().unwrap();
        }
    }

    #[test]
    fn recipe_examples_build_to_known_sequences() {
        let r = BuildRecipe::parse("(units3 n=95 p=19 x=37 y=78 (n=5 t=2) (n=5 t=2) (n=5 t=4))")
            .unwrap();
        assert_eq!(r.build().unwrap().terms(), &[38, 37, 38, 78, 76]);
        let r = BuildRecipe::parse("(units n=25 p=5 x=21 (n=5 t=2) (n=5 t=4))").unwrap();
        assert_eq!(r.build().unwrap().terms(), &[10, 21, 20]);
    }

    #[test]
    fn recipe_parse_errors() {
        for bad in [
            "units n=5 t=2",
            "(bogus n=5 t=2)",
            "(units n=25 p=4 x=3 (n=5 t=2) (n=5 t=4))",
            "(units n=25 p=5 x=4 (n=7 t=2) (n=5 t=4))",
            "(units n=25 p=5 x=4 (n=5 t=2) (n=5 t=4)) junk",
            "(one n=4 p=2 x=1 (n=2 t=1) (n=2 t=1))",
        ] {
            assert!(BuildRecipe::parse(bad).and_then(|r| r.build()).is_err(), "{bad}");
        }
    }

    #[test]
    fn random_builds_are_extremal() {
        for (family, ns) in [
            (Family::One, vec![2u64, 6, 9]),
            (Family::Units, vec![9, 15, 35, 75]),
            (Family::UnitsSquared, vec![7, 49, 77]),
            (Family::UnitsCubed, vec![5, 19, 55, 95]),
        ] {
            for &n in &ns {
                let ctx = ZnContext::new(n).unwrap();
                for seed in 0..5 {
                    let (s, recipe) = random_extremal(family, &ctx, seed).unwrap();
                    assert_eq!(recipe.build().unwrap(), s, "family={family} n={n} seed={seed}");
                    let weights = family.weight_set(&ctx).unwrap();
                    let len = pattern_length(family, &ctx).unwrap();
                    assert!(is_extremal(&s, &weights, len + 1).unwrap());
                }
            }
        }
    }

    #[test]
    fn random_domain_rejections() {
        let even = ZnContext::new(10).unwrap();
        assert!(random_extremal(Family::Units, &even, 0).is_err());
        let ctx35 = ZnContext::new(35).unwrap();
        assert!(random_extremal(Family::UnitsSquared, &ctx35, 0).is_err());
        let ctx7 = ZnContext::new(7).unwrap();
        assert!(random_extremal(Family::UnitsCubed, &ctx7, 0).is_err());
        let ctx13 = ZnContext::new(13).unwrap();
        assert!(random_extremal(Family::UnitsCubed, &ctx13, 0).is_ok());
    }
}
