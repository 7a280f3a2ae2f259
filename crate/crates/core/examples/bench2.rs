use wzs_core::engine::*;
use wzs_core::ring::{WeightSet, ZnContext};
fn main() {
    // Reduced enumeration at n=77 (first term restricted to divisors).
    let ctx = ZnContext::new(77).unwrap();
    let w = WeightSet::units_pow(&ctx, 2).unwrap();
    let t = std::time::Instant::now();
    let mut count = 0u64;
    let complete = for_each_extremal(&ctx, &w, 9, SearchBudget::default(), FirstTerm::UnitOrbitReps, |_| count += 1).unwrap();
    println!("n=77 reduced enumerate: count={count} complete={complete} in {:?}", t.elapsed());
    // What is C_{U(25)^2}(25)? The closed form is unproved there.
    let ctx = ZnContext::new(25).unwrap();
    let w = WeightSet::units_pow(&ctx, 2).unwrap();
    let t = std::time::Instant::now();
    let r = compute_constant(&ctx, &w, SearchBudget::default()).unwrap();
    println!("n=25 squares: outcome={:?} witness={} in {:?}", r.outcome, r.witness, t.elapsed());
}
