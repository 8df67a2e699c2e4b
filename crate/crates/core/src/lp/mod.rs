//! Horizontal Littlewood-Paley toolkit: dyadic cutoffs, Besov and
//! Chemin-Lerner norms, paraproducts and Bernstein checks.

mod bernstein;
mod besov;
mod bony;
mod filter;

pub use bernstein::{bernstein_ratio, BernsteinReport};
pub use besov::{
    besov_norm, besov_norm_tuple, besov_norm_with_mean, block_l2_norms, block_norms_from_energies,
    chemin_lerner_norm, weighted_cl_norm, BlockNorms, NormSeries, TimeExponent,
};
pub use bony::{bony_split, extended_block, BonyParts};
pub use filter::{dyadic_block, low_pass, partition_sum, phi, psi, DyadicFilterBank};
