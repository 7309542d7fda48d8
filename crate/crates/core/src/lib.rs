pub mod builtin;
pub mod chess;
pub mod engine;
pub mod seed;
pub mod uci;
pub mod team;
pub mod openings;
pub mod sme;
pub mod rl;
pub mod analysis;
