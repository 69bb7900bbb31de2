pub mod cli;
pub mod estimate;
pub mod graph;
pub mod identify;
pub mod simulate;
pub mod surgery;
