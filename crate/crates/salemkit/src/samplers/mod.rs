//! Digit pmfs, Dirichlet kernels, AD-regular sampling, block partitions and
//! the two-partition flow decomposition.

mod ad;
mod blocks;
mod flow;
mod pmf;
mod rng;

pub use ad::{
    ad_constant, ad_fiber, ad_min_scale, ad_regular_sample, ad_regular_sample_full,
    ad_seed_sample, ad_spec, check_counting_bounds, dyadic_exponent, free_bits_below,
    t_scale_holds, AdConstant, AdSample, AdSpec, BoxCounter, CountCheck,
};
pub use blocks::{
    build_partition_blocks, is_block_sparse, partition_indices, residue_separated_sum,
    sparsity_witness, BlockKind, SumCertificate,
};
pub use flow::{
    two_partition_decompose, two_partition_draw, two_partition_draw_index, uniform_below, FlowNetwork,
    SamplingDistribution,
};
pub use pmf::{char_m, char_m_raw, dirichlet, dirichlet_direct, pmf, Pmf};
pub use rng::Stream;
