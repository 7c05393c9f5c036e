pub mod evaluate;
pub mod gradcheck;
pub mod sample_pairs;
pub mod train_toy;
