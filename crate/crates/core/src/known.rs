//! Closed-form values of `C_A(n)` for the named weight families, and the
//! family bookkeeping shared by the builders and the decomposer.
//!
//! The table classifies a weight set by its materialized values, so an
//! explicit `set:1,4` over `Z_5` is recognized as the unit squares. A `None`
//! answer means no closed form applies and only the search can decide.

use serde::{Deserialize, Serialize};

use crate::ring::{cube_split, WeightSet, ZnContext};
use crate::{Error, Result};

/// The weight families with constructive theory behind them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `A = {1}`.
    One,
    /// `A = U(n)`.
    Units,
    /// `A = U(n)^2`.
    UnitsSquared,
    /// `A = U(n)^3`.
    UnitsCubed,
}

impl Family {
    pub fn parse(text: &str) -> Result<Family> {
        match text {
            "one" => Ok(Family::One),
            "units" => Ok(Family::Units),
            "units^2" => Ok(Family::UnitsSquared),
            "units^3" => Ok(Family::UnitsCubed),
            other => Err(Error::Domain(format!(
                "no construction for weights '{other}'; expected one, units, units^2 or units^3"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::One => "one",
            Family::Units => "units",
            Family::UnitsSquared => "units^2",
            Family::UnitsCubed => "units^3",
        }
    }

    /// The recipe tag used in the textual build-recipe form.
    pub(crate) fn recipe_tag(&self) -> &'static str {
        match self {
            Family::One => "one",
            Family::Units => "units",
            Family::UnitsSquared => "units2",
            Family::UnitsCubed => "units3",
        }
    }

    pub fn weight_set(&self, ctx: &ZnContext) -> Result<WeightSet> {
        match self {
            Family::One => WeightSet::one(ctx.modulus()),
            Family::Units => WeightSet::units_pow(ctx, 1),
            Family::UnitsSquared => WeightSet::units_pow(ctx, 2),
            Family::UnitsCubed => WeightSet::units_pow(ctx, 3),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A closed-form constant together with the statement it instantiates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownConstant {
    pub constant: u64,
    /// Human-readable form of the identity that fixes the value.
    pub statement: String,
}

/// Looks up `C_A(n)` when a closed form covers the given weights, matching
/// the materialized set against the named families.
pub fn known_constant(ctx: &ZnContext, weights: &WeightSet) -> Option<KnownConstant> {
    let n = ctx.modulus();
    if weights.modulus() != n {
        return None;
    }
    if weights.values() == [1] {
        return Some(KnownConstant { constant: n, statement: "C(n) = n".to_string() });
    }
    if weights.len() as u64 == n - 1 {
        return Some(KnownConstant {
            constant: 2,
            statement: "C_A(n) = 2 for A = Z_n \\ {0}".to_string(),
        });
    }
    let units = WeightSet::units_pow(ctx, 1).ok()?;
    if weights.values() == units.values() {
        // Composite even moduli have no closed form for U(n); primes were
        // caught by the all-nonzero case above.
        if n % 2 == 1 {
            return Some(KnownConstant {
                constant: 1 << ctx.omega(),
                statement: "C_A(n) = 2^omega(n) for A = U(n), n odd".to_string(),
            });
        }
        return None;
    }
    let squares = WeightSet::units_pow(ctx, 2).ok()?;
    if weights.values() == squares.values() {
        if ctx.is_prime() {
            // Odd primes: 3. (p = 2 has U(2)^2 = {1}, caught earlier.)
            return Some(KnownConstant {
                constant: 3,
                statement: "C_A(p) = 3 for A = U(p)^2, p an odd prime".to_string(),
            });
        }
        if ctx.prime_divisors().all(|p| p >= 7) {
            return Some(KnownConstant {
                constant: 3u64.pow(ctx.omega()),
                statement: "C_A(n) = 3^omega(n) for A = U(n)^2, every prime divisor >= 7"
                    .to_string(),
            });
        }
        return None;
    }
    let cubes = WeightSet::units_pow(ctx, 3).ok()?;
    if weights.values() == cubes.values() {
        if n == 7 {
            return Some(KnownConstant {
                constant: 4,
                statement: "C_A(7) = 4 for A = U(7)^3".to_string(),
            });
        }
        if ctx.is_prime() && n % 3 == 1 {
            return Some(KnownConstant {
                constant: 3,
                statement: "C_A(p) = 3 for A = U(p)^3, p ≡ 1 (mod 3), p ≠ 7".to_string(),
            });
        }
        if ctx.is_squarefree() && n % 2 != 0 && n % 7 != 0 && n % 13 != 0 {
            let split = cube_split(ctx).ok()?;
            return Some(KnownConstant {
                constant: (1u64 << split.omega2()) * 3u64.pow(split.omega1()),
                statement:
                    "C_A(n) = 2^omega(n2) * 3^omega(n1) for A = U(n)^3, n squarefree, gcd(n, 2*7*13) = 1"
                        .to_string(),
            });
        }
        return None;
    }
    None
}

/// The length `C_A(n) - 1` that the family's recursive structure prescribes.
/// For the unit squares this is defined for every odd modulus, not only in
/// the regime where the closed-form constant is proved, so the decomposer
/// can attempt out-of-regime inputs structurally.
pub fn pattern_length(family: Family, ctx: &ZnContext) -> Result<u64> {
    let n = ctx.modulus();
    match family {
        Family::One => Ok(n - 1),
        Family::Units => {
            if n % 2 == 0 {
                return Err(Error::Domain(format!(
                    "no characterization of U(n)-extremal sequences for even n = {n}"
                )));
            }
            Ok((1u64 << ctx.omega()) - 1)
        }
        Family::UnitsSquared => {
            if n % 2 == 0 {
                return Err(Error::Domain(format!(
                    "no characterization of U(n)^2-extremal sequences for even n = {n}"
                )));
            }
            Ok(3u64.pow(ctx.omega()) - 1)
        }
        Family::UnitsCubed => {
            cubes_domain_check(ctx)?;
            let split = cube_split(ctx)?;
            Ok((1u64 << split.omega2()) * 3u64.pow(split.omega1()) - 1)
        }
    }
}

/// The constant asserted by the family's closed form, in its proved regime.
pub fn family_constant(family: Family, ctx: &ZnContext) -> Result<u64> {
    let n = ctx.modulus();
    match family {
        Family::One => Ok(n),
        Family::Units => {
            if n % 2 == 0 {
                return Err(Error::Domain(format!("C_A(n) for A = U(n) requires odd n, got {n}")));
            }
            Ok(1u64 << ctx.omega())
        }
        Family::UnitsSquared => {
            if ctx.is_prime() {
                return Ok(if n == 2 { 2 } else { 3 });
            }
            if let Some(p) = ctx.prime_divisors().find(|&p| p < 7) {
                return Err(Error::Domain(format!(
                    "C_A(n) = 3^omega(n) for A = U(n)^2 requires every prime divisor >= 7; \
                     {n} is divisible by {p}"
                )));
            }
            Ok(3u64.pow(ctx.omega()))
        }
        Family::UnitsCubed => {
            if ctx.is_prime() {
                return Ok(match n {
                    2 => 2,
                    7 => 4,
                    p if p % 3 == 1 => 3,
                    _ => 2,
                });
            }
            cubes_domain_check(ctx)?;
            let split = cube_split(ctx)?;
            Ok((1u64 << split.omega2()) * 3u64.pow(split.omega1()))
        }
    }
}

pub(crate) fn cubes_domain_check(ctx: &ZnContext) -> Result<()> {
    let n = ctx.modulus();
    if !ctx.is_squarefree() {
        return Err(Error::NotSquarefree(n));
    }
    for bad in [2u64, 7, 13] {
        if n % bad == 0 {
            return Err(Error::Domain(format!(
                "the U(n)^3 family requires gcd(n, 2*7*13) = 1; {n} is divisible by {bad}"
            )));
        }
    }
    Ok(())
}
