pub mod bnb;
pub mod cnf;
pub mod cquel;
pub mod formula;
pub mod lipsat;
pub mod lp;
pub mod luka;
pub mod psat;
pub mod rational;
pub mod sat;
