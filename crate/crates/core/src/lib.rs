//! Exact computations for toric weak Fano manifolds and their Landau–Ginzburg
//! mirrors: fan combinatorics, cohomology rings, GKZ operators, I-functions,
//! mirror maps and quantum connection matrices.

pub mod cohomology;
pub mod connection;
pub mod cone;
pub mod fan;
pub mod fanfile;
pub mod fixtures;
pub mod gkz;
pub mod ifunction;
pub mod lattice;
pub mod linalg;
pub mod pipeline;
pub mod poly;
pub mod qseries;
pub mod rational;
pub mod series;
pub mod weyl;
