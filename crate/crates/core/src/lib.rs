//! Motif-based mass spectrum prediction.
//!
//! The pipeline reads molecules from SMILES, mines a vocabulary of frequent
//! connected fragments, links molecules and motifs in a weighted
//! heterogeneous graph and trains a pair of graph networks whose embeddings
//! are decoded into binned spectra.

pub mod chem;
pub mod eval;
pub mod hetero;
pub mod model;
pub mod motif;
pub mod motif_spectra;
pub mod neural;
pub mod spectra;
pub mod synthetic;
