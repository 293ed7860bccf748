//! Scores, weights and the winner decision for two chains.
//!
//! ```text
//! cargo run --example weighted_ranking
//! ```

use chainsel::chain::ChainId;
use chainsel::metrics::Metric;
use chainsel::selection::{rank_candidates, Candidate, ValidationResult, Weights};
use chainsel::time::Timestamp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let weights = Weights([5, 3, 4, 5, 3, 3, 5, 4]);
    let candidates = vec![
        Candidate {
            chain: ChainId::new("alpha")?,
            scores: [4, 4, 4, 2, 3, 3, 3, 3],
            validation: ValidationResult::ALL_TRUE,
            usable: true,
        },
        Candidate {
            chain: ChainId::new("beta")?,
            scores: [3, 4, 2, 4, 3, 3, 4, 2],
            validation: ValidationResult::ALL_TRUE,
            usable: true,
        },
    ];
    let ranking = rank_candidates(&weights, candidates, None, Timestamp::EPOCH);

    print!("{:<6}", "");
    for m in Metric::ALL {
        print!("{:>4}", m.label());
    }
    println!("  total");
    for c in &ranking.per_chain {
        print!("{:<6}", c.chain.as_str());
        for w in c.weighted_scores {
            print!("{w:>4}");
        }
        println!("  {}", c.benefit);
    }
    println!(
        "winner: {}",
        ranking.winner.map_or("none".to_string(), |w| w.to_string())
    );
    Ok(())
}
