pub mod audio;
pub mod dsp;
pub mod graph;
pub mod inference;
pub mod propagation;
pub mod render;
pub mod scene;
pub mod session;
