//! Technology-proximity analysis over a bibliometric corpus.
//!
//! The pipeline runs in stages: [`corpus`] ingestion and refinement,
//! [`keywords`] annotation, [`author_impact`] h-index tables, [`proximity`]
//! index series per technology pair, [`series`] processing, shape
//! [`clustering`] and [`forecasting`] backtests. [`synthetic`] builds a small
//! corpus with a planted convergence for end-to-end runs.

pub mod author_impact;
pub mod clustering;
pub mod corpus;
pub mod error;
pub mod forecasting;
pub mod keywords;
pub mod proximity;
pub mod series;
pub mod synthetic;

pub use error::{Error, Result};
