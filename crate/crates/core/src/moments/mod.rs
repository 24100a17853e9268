//! Empirical moment sums over twist families and their main-term oracles.

mod charsum;
mod dist;
mod first;
mod prime;
mod report;

pub use charsum::{
    charsum_average, charsum_main_term, coprime_density, inverse_sigma_factor, CHARSUM_EXPONENT,
};
pub use dist::{
    central_values_between, fractional_moment_ratio, gaussian_tail, log_tamagawa,
    logl_distribution, V_GRID, ZERO_THRESHOLD,
};
pub use first::{
    coprime_pairs, first_moment, first_moment_main_term, g_euler, g_factorization_defect, g_local,
    g_local_case, squarefree_part, FirstMomentSettings, GLocalCase, GValue,
};
pub use prime::{
    distinct_diagonal, gaussian_moment, pc_moments, pd_moments, prime_cutoff, prime_polynomial,
    prime_set, square_diagonal, tamagawa_statistic, tamagawa_terms, TamagawaWindow,
};
pub use report::{round_sig, DistributionReport, MomentReport, REPORT_DIGITS};
