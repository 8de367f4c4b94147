pub mod bench;
pub mod eval;
pub mod gen_data;
pub mod solve;
pub mod train;
