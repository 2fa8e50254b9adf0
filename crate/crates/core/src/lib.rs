pub mod batch;
pub mod cli;
pub mod digraph;
pub mod edp;
pub mod gridtiling;
pub mod mappers;
pub mod reduction;
