//! Re-estimate posteriors when deployment class frequencies differ from
//! the training distribution, via likelihoods recovered from the
//! posterior/prior linear system.

use credence::prior_shift::{
    adapt_posterior, build_shift_system, recover_likelihoods, PriorVector,
};

fn main() -> credence::Result<()> {
    // A disease classifier trained on a balanced set, deployed where the
    // positive class is rare.
    let train = PriorVector::new(vec![0.5, 0.5])?;
    let deployed = PriorVector::new(vec![0.02, 0.98])?;

    let posterior = [0.8, 0.2];
    println!("training-time posterior: {posterior:?}");

    // The recovered likelihood direction is the interesting intermediate:
    // it is prior-free, so it transfers across deployments.
    let system = build_shift_system(&posterior, &train)?;
    let likelihoods = recover_likelihoods(&system)?;
    println!(
        "recovered likelihood direction: {:?} (residual {:.1e})",
        likelihoods.values(),
        system.max_residual(likelihoods.values())
    );

    let adapted = adapt_posterior(&posterior, &train, &deployed)?;
    println!("posterior under deployment priors: [{:.4}, {:.4}]", adapted[0], adapted[1]);

    // Shifting back recovers the original.
    let back = adapt_posterior(&adapted, &deployed, &train)?;
    println!("round trip back to training priors: [{:.4}, {:.4}]", back[0], back[1]);
    Ok(())
}
