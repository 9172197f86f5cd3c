//! Primary-sale pricing, ticket pooling and multi-block reward bonuses.

mod multiblock;
mod pool;
mod pricing;

pub use multiblock::{multiblock_value_experiment, MultiBlockReport, MultiBlockSpec};
pub use pool::{pool_payout, pooled_variance_experiment, pooled_variance_experiment_with, PoolSpec, PoolVarianceReport};
pub use pricing::{protocol_capture, Capture, PricingPolicy};
