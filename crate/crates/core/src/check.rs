//! Cross-validation of `edge_pushing` against the independent oracles on
//! random tapes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::edge_pushing::{edge_pushing_hessian, EdgePushingOptions};
use crate::error::Result;
use crate::graph::{build_folded_graph, path_enumeration_hessian, PATH_ENUMERATION_CAP};
use crate::hessian::SparseHessian;
use crate::oracles::{dense_hessian_nested, fd_hessian, hessian_vector_product, DEFAULT_FD_STEP};
use crate::random::{random_tape, RandomTape};

pub const DENSE_TOL: f64 = 1e-9;
pub const PATH_TOL: f64 = 1e-9;
pub const FD_TOL: f64 = 1e-4;
pub const HVP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub trials: usize,
    pub max_n: usize,
    pub max_ell: usize,
    pub seed: u64,
    pub dense_cap: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            trials: 1000,
            max_n: 8,
            max_ell: 40,
            seed: 0,
            dense_cap: crate::oracles::DEFAULT_DENSE_CAP,
        }
    }
}

/// Worst discrepancies observed, each relative to `max(1, max|reference|)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub trials: usize,
    pub max_dense_diff: f64,
    pub max_path_diff: f64,
    pub path_trials: usize,
    pub max_fd_diff: f64,
    pub max_hvp_diff: f64,
    pub accumulator_symmetry_violations: usize,
    pub accumulator_block_violations: usize,
    pub dense_block_violations: usize,
    pub max_dense_asymmetry: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.max_dense_diff <= DENSE_TOL
            && self.max_path_diff <= PATH_TOL
            && self.max_fd_diff <= FD_TOL
            && self.max_hvp_diff <= HVP_TOL
            && self.accumulator_symmetry_violations == 0
            && self.accumulator_block_violations == 0
            && self.dense_block_violations == 0
    }

    /// Largest discrepancy among the exact oracles.
    pub fn max_exact_diff(&self) -> f64 {
        self.max_dense_diff
            .max(self.max_path_diff)
            .max(self.max_hvp_diff)
    }
}

/// Assembles `f''` column by column from Hessian-vector products.
pub fn hvp_hessian(tape: &crate::tape::Tape) -> Result<SparseHessian> {
    let n = tape.n();
    let mut triplets = Vec::new();
    let mut e = vec![0.0; n];
    for k in 0..n {
        e[k] = 1.0;
        let col = hessian_vector_product(tape, &e)?;
        e[k] = 0.0;
        triplets.extend(
            col.into_iter()
                .enumerate()
                .filter(|&(r, v)| r >= k && v != 0.0)
                .map(|(r, v)| (r, k, v)),
        );
    }
    Ok(SparseHessian::from_triplets(n, triplets))
}

/// Runs every oracle on `config.trials` random tapes.
pub fn cross_validate(config: &CheckConfig) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = CheckReport::default();
    let opts = EdgePushingOptions {
        check_invariants: true,
        ..Default::default()
    };
    for _ in 0..config.trials {
        let RandomTape { tape, x } = random_tape(&mut rng, config.max_n, config.max_ell);
        let tape = tape.swept_at(&x)?;
        let ep = edge_pushing_hessian(&tape, &opts)?;
        report.trials += 1;
        report.accumulator_symmetry_violations += ep.stats.symmetry_violations;
        report.accumulator_block_violations += ep.stats.block_support_violations;

        let dense = dense_hessian_nested(&tape, config.dense_cap)?;
        report.max_dense_diff = report
            .max_dense_diff
            .max(ep.hessian.max_rel_diff(&dense.hessian));
        report.dense_block_violations += dense.block_support_violations;
        report.max_dense_asymmetry = report
            .max_dense_asymmetry
            .max(dense.max_asymmetry / dense.w.max_abs().max(1.0));

        if tape.len() <= PATH_ENUMERATION_CAP {
            let graph = build_folded_graph(&tape, &ep.adjoints)?;
            let paths = path_enumeration_hessian(&graph)?;
            report.max_path_diff = report.max_path_diff.max(ep.hessian.max_rel_diff(&paths));
            report.path_trials += 1;
        }

        let fd = fd_hessian(&tape, &x, DEFAULT_FD_STEP)?;
        report.max_fd_diff = report.max_fd_diff.max(ep.hessian.max_rel_diff(&fd));

        let hvp = hvp_hessian(&tape)?;
        report.max_hvp_diff = report.max_hvp_diff.max(ep.hessian.max_rel_diff(&hvp));
    }
    Ok(report)
}
