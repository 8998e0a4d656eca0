pub mod cli;
pub mod driver;
pub mod eval;
pub mod matcher;
pub mod planner;
pub mod reasoner;
pub mod sim;
pub mod testcase;
pub mod text;
pub mod ui;
