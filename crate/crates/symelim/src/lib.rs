pub mod elim;
pub mod formula;
pub mod hybrid;
pub mod locality;
pub mod parser;
pub mod qe;
pub mod runner;
