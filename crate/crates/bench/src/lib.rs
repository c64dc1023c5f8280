//! Benchmark inputs shared by the criterion targets.

use locert::bundle::RdmBundle;
use locert::markov::{certificate_regions, ShieldPlan};
use locert::state::fixtures::rotated_markov_chain;
use locert::state::random_mixed_state;
use locert::{DensityMatrix, SystemLayout};

/// Full-rank random state on `n` qubits.
pub fn mixed_qubits(n: usize, seed: u64) -> DensityMatrix {
    let layout = SystemLayout::qubits(n).expect("qubit layout");
    let d = layout.total_dim();
    random_mixed_state(&layout, d, seed).expect("random state")
}

/// A quantum Markov chain on `n` qubits with its chain plan and window marginals.
pub fn chain_inputs(n: usize, seed: u64) -> (DensityMatrix, ShieldPlan, RdmBundle) {
    let rho = rotated_markov_chain(&vec![2; n], seed).expect("markov chain");
    let plan = ShieldPlan::chain(n);
    let bundle = RdmBundle::from_state(&rho, &certificate_regions(&plan)).expect("marginals");
    (rho, plan, bundle)
}
