pub mod generate;
pub mod landscape;
pub mod solve;
pub mod sweep;
pub mod verify;
