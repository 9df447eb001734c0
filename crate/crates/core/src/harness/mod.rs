//! Monte Carlo verification harness: path sources, replica batches and the
//! suites that check simulated paths against the closed-form theory.

mod batch;
mod clt;
mod gap;
mod moments;
mod source;
mod suite;

pub use batch::{partial_sums, simulate_batch, PathBatch, Runner};
pub use clt::{
    clt_check, clt_check_against, kolmogorov_tail, ks_p_value, ks_statistic, normal_cdf, CltResult,
    MIN_CLT_REPLICAS,
};
pub use gap::{independence_gap, independence_gaps, merl_domination, DominationRow, GapResult};
pub use moments::{
    block_moment_check, bounded_column, moment_slope, small_block_growth, BlockMomentRow,
    BlockMomentTable, MomentRow, MomentSlope, SmallBlockRow, SmallBlockTable, MOMENT_GRID,
};
pub use source::{
    chain_from, ConstantSource, FarSource, IidSource, MarkovSource, PathSource, SourceCtor,
    SourceRegistry,
};
pub use suite::{
    BlockEigsSuite, BlockMomentsSuite, CltSuite, GammaDefectSuite, IndependenceGapSuite,
    MerlDominationSuite, MomentSlopeSuite, RatesSuite, SmallBlockSuite, Suite, SuiteContext,
    SuiteOutput, SuiteRegistry, Table, Verdict,
};
