//! The job layer behind the `wzs` command line: typed requests, dispatch to
//! the library, the JSON output envelope, and exit codes.
//!
//! Every invocation emits one JSON document on standard output:
//!
//! ```json
//! {
//!   "command": "...",
//!   "inputs": { ... },
//!   "result": { ... },
//!   "provenance": { "statement_checked": "...", "mode": "..." },
//!   "timing": { "nodes_visited": 0, "elapsed_ms": 1.2 }
//! }
//! ```
//!
//! Exit codes: 0 success, 1 domain rejection, 2 budget exhaustion
//! (64 for malformed input, decided by the argument parser in the binary).
//! `timing.elapsed_ms` is the only nondeterministic field and is omitted in
//! stable mode, where identical requests produce byte-identical output.

use std::time::Instant;

use serde_json::{json, Value};

use crate::builder::{first_recipe, random_extremal, BuildRecipe};
use crate::cache::{Cache, CacheEntry};
use crate::decompose::{canonicalize, decompose, enumerate_extremal_classes};
use crate::engine::{
    compute_constant, enumerate_extremal, has_zero_window, EnumerateMode, SearchBudget,
    SearchOutcome, Seq,
};
use crate::known::{known_constant, pattern_length, Family};
use crate::ring::{WeightSet, ZnContext};
use crate::verify::{verify_theorems, VerifyScope};
use crate::{Error, Result};

/// Largest modulus the CLI will launch an exhaustive search for. The search
/// state grows with both the modulus and the depth, and anything beyond this
/// is out of reach for an exponential-depth search anyway.
pub const MAX_SEARCH_MODULUS: u64 = 10_000;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub struct JobOutput {
    pub document: Value,
    pub exit_code: i32,
}

/// Options shared by every command.
#[derive(Debug, Default)]
pub struct JobOptions {
    pub cache: Option<Cache>,
    /// Omit wall-clock timing so identical requests are byte-identical.
    pub stable: bool,
}

struct Envelope {
    command: &'static str,
    inputs: Value,
    started: Instant,
    nodes: u64,
    provenance: Option<Value>,
}

impl Envelope {
    fn new(command: &'static str, inputs: Value) -> Self {
        Envelope { command, inputs, started: Instant::now(), nodes: 0, provenance: None }
    }

    fn finish(self, opts: &JobOptions, result: Result<(Value, i32)>) -> JobOutput {
        let mut timing = json!({ "nodes_visited": self.nodes });
        if !opts.stable {
            timing["elapsed_ms"] = json!(self.started.elapsed().as_secs_f64() * 1e3);
        }
        let (body, exit_code) = match result {
            Ok((result, code)) => (json!({ "result": result }), code),
            // Domain rejections and internal failures both exit 1; the
            // message distinguishes them.
            Err(e) => (json!({ "error": e.to_string() }), EXIT_DOMAIN),
        };
        let mut document = json!({
            "command": self.command,
            "inputs": self.inputs,
        });
        for (k, v) in body.as_object().unwrap() {
            document[k] = v.clone();
        }
        document["provenance"] = self.provenance.unwrap_or(Value::Null);
        document["timing"] = timing;
        JobOutput { document, exit_code }
    }
}

fn check_search_modulus(n: u64) -> Result<()> {
    if n > MAX_SEARCH_MODULUS {
        return Err(Error::Domain(format!(
            "exhaustive search is limited to n <= {MAX_SEARCH_MODULUS}, got {n}"
        )));
    }
    Ok(())
}

fn provenance(statement: Option<String>, mode: &str) -> Value {
    json!({ "statement_checked": statement, "mode": mode })
}

/// `constant`: compute `C_A(n)`, search-verified. With `bound_only`, build
/// a witness for the lower bound and assert the closed-form upper bound
/// instead of searching.
pub fn run_constant(
    n: u64,
    weights: &WeightSet,
    budget: SearchBudget,
    bound_only: bool,
    opts: &JobOptions,
) -> JobOutput {
    let mut env = Envelope::new(
        "constant",
        json!({ "n": n, "weights": weights.describe(), "bound_only": bound_only }),
    );
    let body = (|| -> Result<(Value, i32)> {
        let ctx = ZnContext::new(n)?;
        let known = known_constant(&ctx, weights);
        if bound_only {
            let Some(known) = known else {
                return Err(Error::Domain(format!(
                    "no closed form covers weights {} over Z_{n}; run a full search instead",
                    weights.describe()
                )));
            };
            let family = classify_family(&ctx, weights).ok_or_else(|| {
                Error::Domain(format!(
                    "no construction backs weights {} over Z_{n}",
                    weights.describe()
                ))
            })?;
            let recipe = first_recipe(family, &ctx)?;
            let witness = recipe.build()?;
            env.provenance =
                Some(provenance(Some(known.statement.clone()), "formula-asserted"));
            return Ok((
                json!({
                    "lower_bound": witness.len() as u64 + 1,
                    "upper_bound": known.constant,
                    "upper_bound_source": "formula-asserted",
                    "witness": witness.terms(),
                    "witness_recipe": recipe.to_string(),
                }),
                EXIT_OK,
            ));
        }
        // Serve a cache hit only after its witness re-verifies.
        if let Some(cache) = &opts.cache {
            if let Some(hit) = cache.lookup(n, weights) {
                env.provenance =
                    Some(provenance(known.map(|k| k.statement), "cache"));
                return Ok((
                    json!({ "constant": hit.constant, "witness": hit.witness }),
                    EXIT_OK,
                ));
            }
        }
        check_search_modulus(n)?;
        let report = compute_constant(&ctx, weights, budget)?;
        env.nodes = report.nodes_visited;
        match report.outcome {
            SearchOutcome::Exact { constant } => {
                if let Some(k) = &known {
                    if k.constant != constant {
                        return Err(Error::Internal(format!(
                            "search found C = {constant} but the closed form {} gives {}",
                            k.statement, k.constant
                        )));
                    }
                }
                if let Some(cache) = &opts.cache {
                    cache.append(&CacheEntry::new(n, weights, constant, &report.witness))?;
                }
                env.provenance =
                    Some(provenance(known.map(|k| k.statement), "search-verified"));
                Ok((
                    json!({ "constant": constant, "witness": report.witness.terms() }),
                    EXIT_OK,
                ))
            }
            SearchOutcome::LowerBound { at_least } => {
                env.provenance = Some(provenance(None, "budget-exhausted"));
                Ok((
                    json!({ "lower_bound": at_least, "witness": report.witness.terms() }),
                    EXIT_BUDGET,
                ))
            }
        }
    })();
    env.finish(opts, body)
}

/// Resolves the constant a `check`/`enumerate` command should measure
/// against: an explicit override, a closed form, a verified cache hit, or a
/// fresh search.
fn resolve_constant(
    ctx: &ZnContext,
    weights: &WeightSet,
    explicit: Option<u64>,
    budget: SearchBudget,
    opts: &JobOptions,
    nodes: &mut u64,
) -> Result<(u64, Value)> {
    if let Some(c) = explicit {
        return Ok((c, provenance(None, "supplied")));
    }
    if let Some(k) = known_constant(ctx, weights) {
        return Ok((k.constant, provenance(Some(k.statement), "formula")));
    }
    if let Some(cache) = &opts.cache {
        if let Some(hit) = cache.lookup(ctx.modulus(), weights) {
            return Ok((hit.constant, provenance(None, "cache")));
        }
    }
    check_search_modulus(ctx.modulus())?;
    let report = compute_constant(ctx, weights, budget)?;
    *nodes += report.nodes_visited;
    match report.outcome {
        SearchOutcome::Exact { constant } => {
            if let Some(cache) = &opts.cache {
                cache.append(&CacheEntry::new(ctx.modulus(), weights, constant, &report.witness))?;
            }
            Ok((constant, provenance(None, "search-verified")))
        }
        SearchOutcome::LowerBound { .. } => Err(Error::Domain(
            "budget exhausted while resolving the constant; pass --constant or raise the budget"
                .to_string(),
        )),
    }
}

/// `check`: is each sequence extremal (right length and zero-window-free)?
pub fn run_check(
    n: u64,
    weights: &WeightSet,
    seqs: &[Seq],
    explicit_constant: Option<u64>,
    budget: SearchBudget,
    opts: &JobOptions,
) -> JobOutput {
    let seq_values: Vec<&[u64]> = seqs.iter().map(|s| s.terms()).collect();
    let mut env = Envelope::new(
        "check",
        json!({ "n": n, "weights": weights.describe(), "seq": seq_values }),
    );
    let body = (|| -> Result<(Value, i32)> {
        let ctx = ZnContext::new(n)?;
        let mut nodes = 0;
        let (constant, prov) =
            resolve_constant(&ctx, weights, explicit_constant, budget, opts, &mut nodes)?;
        env.nodes = nodes;
        env.provenance = Some(prov);
        let mut items = Vec::new();
        for s in seqs {
            let window = has_zero_window(s, weights)?;
            let extremal = window.is_none() && s.len() as u64 + 1 == constant;
            items.push(json!({
                "seq": s.terms(),
                "extremal": extremal,
                "zero_window": window.map(|(i, j)| json!({ "start": i, "end": j })),
                "length": s.len(),
            }));
        }
        let result = if items.len() == 1 {
            let mut single = items.pop().unwrap();
            single["constant"] = json!(constant);
            single
        } else {
            json!({ "constant": constant, "items": items })
        };
        Ok((result, EXIT_OK))
    })();
    env.finish(opts, body)
}

/// `enumerate`: all extremal sequences, counted, collected, or reduced to
/// canonical representatives per A-equivalence class.
pub fn run_enumerate(
    n: u64,
    weights: &WeightSet,
    explicit_constant: Option<u64>,
    count_only: bool,
    canonical: bool,
    budget: SearchBudget,
    opts: &JobOptions,
) -> JobOutput {
    let mut env = Envelope::new(
        "enumerate",
        json!({
            "n": n,
            "weights": weights.describe(),
            "count_only": count_only,
            "canonical": canonical,
        }),
    );
    let body = (|| -> Result<(Value, i32)> {
        let ctx = ZnContext::new(n)?;
        check_search_modulus(n)?;
        let mut nodes = 0;
        let (constant, prov) =
            resolve_constant(&ctx, weights, explicit_constant, budget, opts, &mut nodes)?;
        env.nodes = nodes;
        env.provenance = Some(prov);
        if canonical {
            let (complete, reps) = enumerate_extremal_classes(&ctx, weights, constant, budget)?;
            let result = json!({
                "constant": constant,
                "classes": reps.len(),
                "complete": complete,
                "canonical": reps.iter().map(|s| s.terms().to_vec()).collect::<Vec<_>>(),
            });
            return Ok((result, if complete { EXIT_OK } else { EXIT_BUDGET }));
        }
        let mode = if count_only { EnumerateMode::Count } else { EnumerateMode::Collect };
        let e = enumerate_extremal(&ctx, weights, constant, mode, budget)?;
        let mut result = json!({
            "constant": constant,
            "count": e.count,
            "complete": e.complete,
        });
        if !count_only {
            result["sequences"] =
                json!(e.sequences.iter().map(|s| s.terms().to_vec()).collect::<Vec<_>>());
        }
        Ok((result, if e.complete { EXIT_OK } else { EXIT_BUDGET }))
    })();
    env.finish(opts, body)
}

/// `construct`: build an extremal sequence from a recipe, a random seed, or
/// deterministically.
pub fn run_construct(
    n: u64,
    family: Family,
    seed: Option<u64>,
    recipe_text: Option<&str>,
    opts: &JobOptions,
) -> JobOutput {
    let mut env = Envelope::new(
        "construct",
        json!({ "n": n, "weights": family.name(), "seed": seed, "recipe": recipe_text }),
    );
    let body = (|| -> Result<(Value, i32)> {
        let ctx = ZnContext::new(n)?;
        let (s, recipe) = match (recipe_text, seed) {
            (Some(text), _) => {
                let recipe = BuildRecipe::parse(text)?;
                if recipe.family != family {
                    return Err(Error::Domain(format!(
                        "recipe family {} does not match requested {}",
                        recipe.family, family
                    )));
                }
                if recipe.node.modulus() != n {
                    return Err(Error::Domain(format!(
                        "recipe modulus {} does not match requested {n}",
                        recipe.node.modulus()
                    )));
                }
                (recipe.build()?, recipe)
            }
            (None, Some(seed)) => random_extremal(family, &ctx, seed)?,
            (None, None) => {
                let recipe = first_recipe(family, &ctx)?;
                (recipe.build()?, recipe)
            }
        };
        let statement = known_constant(&ctx, &family.weight_set(&ctx)?).map(|k| k.statement);
        env.provenance = Some(provenance(statement, "constructed"));
        Ok((
            json!({
                "sequence": s.terms(),
                "length": s.len(),
                "recipe": recipe.to_string(),
                "verified": true,
            }),
            EXIT_OK,
        ))
    })();
    env.finish(opts, body)
}

/// `decompose`: extract and re-validate the structural certificate.
pub fn run_decompose(n: u64, family: Family, s: &Seq, opts: &JobOptions) -> JobOutput {
    let mut env = Envelope::new(
        "decompose",
        json!({ "n": n, "weights": family.name(), "seq": s.terms() }),
    );
    let body = (|| -> Result<(Value, i32)> {
        let ctx = ZnContext::new(n)?;
        let cert = decompose(s, family, &ctx)?;
        cert.validate(s)?;
        env.provenance = Some(provenance(
            Some(format!(
                "extremal length {} decomposition for {family}",
                pattern_length(family, &ctx)?
            )),
            "decomposed",
        ));
        Ok((
            json!({
                "certificate": serde_json::to_value(&cert)?,
                "recipe": cert.to_recipe().to_string(),
            }),
            EXIT_OK,
        ))
    })();
    env.finish(opts, body)
}

/// `canon`: the lexicographically least A-equivalent sequence and the orbit
/// size.
pub fn run_canon(n: u64, weights: &WeightSet, s: &Seq, opts: &JobOptions) -> JobOutput {
    let mut env = Envelope::new(
        "canon",
        json!({ "n": n, "weights": weights.describe(), "seq": s.terms() }),
    );
    let body = (|| -> Result<(Value, i32)> {
        let class = canonicalize(s, weights)?;
        let orbit = if class.orbit_size <= u64::MAX as u128 {
            json!(class.orbit_size as u64)
        } else {
            json!(class.orbit_size.to_string())
        };
        env.provenance = Some(provenance(None, "canonicalized"));
        Ok((
            json!({ "canonical": class.canonical.terms(), "orbit_size": orbit }),
            EXIT_OK,
        ))
    })();
    env.finish(opts, body)
}

/// `verify-theorems`: the batch statement suite up to a scope bound.
pub fn run_verify(scope: VerifyScope, budget: SearchBudget, opts: &JobOptions) -> JobOutput {
    let mut env = Envelope::new(
        "verify-theorems",
        json!({ "max_n": scope.max_n, "samples": scope.samples }),
    );
    let body = (|| -> Result<(Value, i32)> {
        let report = verify_theorems(&scope, budget);
        let failed = report.failed();
        let skipped = report.skipped();
        env.provenance = Some(provenance(None, "verified"));
        Ok((
            json!({
                "report": serde_json::to_value(&report.entries)?,
                "failed": failed,
                "skipped": skipped,
            }),
            if failed == 0 { EXIT_OK } else { EXIT_DOMAIN },
        ))
    })();
    env.finish(opts, body)
}

fn classify_family(ctx: &ZnContext, weights: &WeightSet) -> Option<Family> {
    if weights.values() == [1] {
        return Some(Family::One);
    }
    for (family, j) in
        [(Family::Units, 1u32), (Family::UnitsSquared, 2), (Family::UnitsCubed, 3)]
    {
        if let Ok(w) = WeightSet::units_pow(ctx, j) {
            if w.values() == weights.values() {
                return Some(family);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> JobOptions {
        JobOptions { cache: None, stable: true }
    }

    #[test]
    fn constant_with_formula_cross_check() {
        let w = WeightSet::parse(15, "units").unwrap();
        let out = run_constant(15, &w, SearchBudget::default(), false, &opts());
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.document["result"]["constant"], 4);
        assert_eq!(out.document["provenance"]["mode"], "search-verified");
        assert!(out.document["provenance"]["statement_checked"]
            .as_str()
            .unwrap()
            .contains("2^omega"));
        assert!(out.document["timing"].get("elapsed_ms").is_none());
    }

    #[test]
    fn constant_budget_exhaustion_exit_code() {
        let w = WeightSet::parse(11, "one").unwrap();
        let out = run_constant(
            11,
            &w,
            SearchBudget { max_nodes: Some(5), max_elapsed: None },
            false,
            &opts(),
        );
        assert_eq!(out.exit_code, EXIT_BUDGET);
        assert!(out.document["result"]["lower_bound"].as_u64().unwrap() >= 2);
    }

    #[test]
    fn constant_bound_only() {
        let w = WeightSet::parse(75, "units").unwrap();
        let out = run_constant(75, &w, SearchBudget::default(), true, &opts());
        assert_eq!(out.exit_code, EXIT_OK);
        let r = &out.document["result"];
        assert_eq!(r["lower_bound"], 8);
        assert_eq!(r["upper_bound"], 8);
        assert_eq!(r["upper_bound_source"], "formula-asserted");
        assert_eq!(r["witness"].as_array().unwrap().len(), 7);
    }

    #[test]
    fn check_command() {
        let w = WeightSet::parse(25, "units").unwrap();
        let s = Seq::parse(25, "10,4,20").unwrap();
        let out = run_check(25, &w, &[s], None, SearchBudget::default(), &opts());
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.document["result"]["extremal"], true);
        assert_eq!(out.document["result"]["constant"], 4);
        let s = Seq::parse(25, "10,5,20").unwrap();
        let out = run_check(25, &w, &[s], None, SearchBudget::default(), &opts());
        assert_eq!(out.document["result"]["extremal"], false);
        assert!(out.document["result"]["zero_window"].is_object());
    }

    #[test]
    fn enumerate_count() {
        let w = WeightSet::parse(4, "one").unwrap();
        let out =
            run_enumerate(4, &w, None, true, false, SearchBudget::default(), &opts());
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.document["result"]["count"], 6);
    }

    #[test]
    fn construct_and_decompose() {
        let out = run_construct(95, Family::UnitsCubed, None, None, &opts());
        assert_eq!(out.exit_code, EXIT_OK, "{}", out.document);
        let terms: Vec<u64> = out.document["result"]["sequence"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .collect();
        let s = Seq::new(95, terms).unwrap();
        let out = run_decompose(95, Family::UnitsCubed, &s, &opts());
        assert_eq!(out.exit_code, EXIT_OK, "{}", out.document);
        assert!(out.document["result"]["certificate"]["node"]["kind"].is_string());
    }

    #[test]
    fn construct_from_recipe_text() {
        let text = "(units n=25 p=5 x=21 (n=5 t=2) (n=5 t=4))";
        let out = run_construct(25, Family::Units, None, Some(text), &opts());
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.document["result"]["sequence"], json!([10, 21, 20]));
        assert_eq!(out.document["result"]["recipe"], text);
        // Wrong family is a domain rejection.
        let out = run_construct(25, Family::UnitsSquared, None, Some(text), &opts());
        assert_eq!(out.exit_code, EXIT_DOMAIN);
    }

    #[test]
    fn canon_command() {
        let w = WeightSet::parse(7, "units^3").unwrap();
        let s = Seq::parse(7, "2,6,2").unwrap();
        let out = run_canon(7, &w, &s, &opts());
        assert_eq!(out.document["result"]["canonical"], json!([1, 3, 1]));
        assert_eq!(out.document["result"]["orbit_size"], 24);
    }

    #[test]
    fn domain_rejection_exit_code() {
        let out = run_construct(12, Family::Units, None, None, &opts());
        assert_eq!(out.exit_code, EXIT_DOMAIN);
        assert!(out.document["error"].as_str().unwrap().contains("odd"));
        let w = WeightSet::parse(20000, "one").unwrap();
        let out = run_constant(20000, &w, SearchBudget::default(), false, &opts());
        assert_eq!(out.exit_code, EXIT_DOMAIN);
    }

    #[test]
    fn stable_output_is_byte_identical() {
        let w = WeightSet::parse(15, "units").unwrap();
        let a = run_constant(15, &w, SearchBudget::default(), false, &opts());
        let b = run_constant(15, &w, SearchBudget::default(), false, &opts());
        assert_eq!(
            serde_json::to_string(&a.document).unwrap(),
            serde_json::to_string(&b.document).unwrap()
        );
    }

    #[test]
    fn cache_round_trip_through_jobs() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().join("c.jsonl"));
        let opts = JobOptions { cache: Some(cache), stable: true };
        let w = WeightSet::parse(15, "units").unwrap();
        let a = run_constant(15, &w, SearchBudget::default(), false, &opts);
        assert_eq!(a.document["provenance"]["mode"], "search-verified");
        let b = run_constant(15, &w, SearchBudget::default(), false, &opts);
        assert_eq!(b.document["provenance"]["mode"], "cache");
        assert_eq!(a.document["result"], b.document["result"]);
    }

    #[test]
    fn verify_command_empty_scope() {
        let out = run_verify(
            VerifyScope { max_n: 1, samples: 1 },
            SearchBudget::default(),
            &opts(),
        );
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.document["result"]["failed"], 0);
    }
}
