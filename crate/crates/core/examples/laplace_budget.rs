//! Laplace noise and scoped budget accounting.
//!
//! Sibling scopes compose in parallel (the max counts), nested scopes
//! sequentially (the chain sums).

use gramlink::dp::{audit_parallel, audit_sequential, noisy_count_in, LaplaceSampler, PrivacyBudget};

fn main() -> gramlink::Result<()> {
    let mut sampler = LaplaceSampler::new(7);
    let draws: Vec<f64> = (0..100_000).map(|_| sampler.sample(2.0)).collect::<Result<_, _>>()?;
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64;
    println!("Lap(2): mean {mean:+.4}, variance {var:.3} (expected 8)");

    // A two-level partition: both halves of the data are queried at 0.4,
    // then each half is split again and queried at 0.6.
    let mut budget = PrivacyBudget::new(1.0)?;
    for (i, count) in [(0u32, 120u64), (1, 80)] {
        let noisy = noisy_count_in(count, 0.4, &mut budget, &mut sampler, &[i], &format!("half {i}"))?;
        println!("half {i}: true {count}, noisy {noisy:.1}");
        for j in 0..2u32 {
            noisy_count_in(
                count / 2,
                0.6,
                &mut budget,
                &mut sampler,
                &[i, j],
                &format!("quarter {i}.{j}"),
            )?;
        }
    }
    println!(
        "spent {:.2} of {:.2} after {} queries",
        budget.spent(),
        budget.epsilon_total(),
        budget.charges().len()
    );

    // One more level would push every chain past the total.
    let refused = noisy_count_in(10, 0.1, &mut budget, &mut sampler, &[0, 0, 0], "too deep");
    println!(
        "extra level: {}",
        refused
            .map(|_| "accepted".to_string())
            .unwrap_or_else(|e| e.to_string())
    );

    println!(
        "audits: sequential [0.4, 0.6] = {}, parallel [1.0, 1.0, 0.4] = {}",
        audit_sequential(&[0.4, 0.6]),
        audit_parallel(&[1.0, 1.0, 0.4])
    );
    Ok(())
}
