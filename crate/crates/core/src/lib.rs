//! Lower bounds on time-bounded reachability probabilities in stochastic
//! vector addition systems via priority-guided partial state-space search.

pub mod ctmc;
pub mod depgraph;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod search;
pub mod solution_space;
pub mod subspaces;
