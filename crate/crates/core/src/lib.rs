//! Knowledge-cartography engine for embedded bibliographic corpora.
//!
//! The pipeline ingests a filtered corpus, places papers on a 2-D semantic
//! map, partitions the map with hierarchical density clustering, and
//! computes diffusion metrics over it: normalized k-core coreness of tagged
//! concepts in cumulative co-occurrence networks, and the citation radius of
//! gyration in map space.

pub mod atlas;
pub mod citegeom;
pub mod clusterer;
pub mod conceptnet;
pub mod corpus;
pub mod error;
pub mod profiler;
pub mod series;
pub mod synthkit;
pub mod validator;

pub use corpus::{Corpus, ConceptId, PaperId};
pub use error::{Error, Result};
pub use series::TemporalSeries;
