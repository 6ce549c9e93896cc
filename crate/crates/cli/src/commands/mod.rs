pub mod compare;
pub mod cost;
pub mod estimate;
pub mod fit;
pub mod generate;
