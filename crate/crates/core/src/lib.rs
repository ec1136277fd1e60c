pub mod model;
pub mod generators;
pub mod engine;
pub mod oracles;
pub mod lab;
pub mod output;
pub mod verify;
pub mod cli;
