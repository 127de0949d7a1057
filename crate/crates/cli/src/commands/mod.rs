pub mod bench;
pub mod datr;
pub mod generate;
pub mod gradcheck;
pub mod transforms;
