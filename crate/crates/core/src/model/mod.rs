//! The fixed-length-document topic model: parameters, documents,
//! likelihoods, sampling and distances.

mod corpus;
mod direction;
pub mod distance;
pub mod io;
pub mod likelihood;
mod topics;

pub use corpus::{Corpus, Document};
pub use direction::PerturbationDirection;
pub use distance::{kl_divergence, tv_distance, wasserstein};
pub use likelihood::{
    enumerate_distribution, expansion_term, expansion_terms, likelihood, log_likelihood, log_likelihood_gradient,
    sample_corpus, sample_document,
};
pub(crate) use topics::check_floor;
pub use topics::TopicMatrix;
