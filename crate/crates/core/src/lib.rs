//! Monte Carlo benefit-cost engine for a vineyard, winery and biochar value
//! chain, with carbon accounting, sensitivity ranking and break-even solving.

pub mod carbon;
pub mod chain;
pub mod dist;
pub mod finance;
pub mod mc;
pub mod reference;
pub mod scenario;
pub mod sense;
