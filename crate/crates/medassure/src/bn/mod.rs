//! Discrete Bayesian networks: structure, score, search and inference.

pub mod counts;
pub mod cpdag;
pub mod dag;
pub mod infer;
pub mod net;
pub mod score;
pub mod search;

pub use counts::{count_family, FamilyCounts};
pub use cpdag::{to_cpdag, Cpdag};
pub use dag::Dag;
pub use infer::{
    evaluate_classifier, fit_parameters, infer, infer_by_enumeration, risk_report,
    train_test_split, Evidence, Posterior, RiskReport,
};
pub use net::{structure_from_text, structure_to_text, BayesNet};
pub use score::{bdeu_family_score, bdeu_score, ln_gamma, BdeuParams, ScoreCache};
pub use search::{exhaustive_best, hill_climb, SearchConfig, SearchTrace};
