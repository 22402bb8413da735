pub mod algebra;
pub mod cli;
pub mod cohomology;
pub mod deformation;
pub mod dirichlet;
pub mod expr;
pub mod forms;
pub mod graph_algebra;
pub mod matrix_algebra;
pub mod qlattice;
pub mod selftest;
