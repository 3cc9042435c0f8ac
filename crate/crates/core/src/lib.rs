//! Simulation and neuroevolution engine for dyadic embodied agents.
//!
//! Circular two-wheeled agents carrying small continuous-time recurrent
//! neural controllers exchange acoustic signals in an unbounded 2D arena.
//! Populations are evolved with a real-valued genetic algorithm to maximize
//! the normalized Shannon entropy of their neural outputs, under four
//! coupling conditions (interactive, ghost-test, ghost-evolution, isolated).
//! Post-hoc metrics (heading sample entropy, inter-agent distance entropy,
//! DTW synchrony) quantify behavioral and interaction complexity.

pub mod analysis;
pub mod archive;
pub mod entropy;
pub mod experiments;
pub mod genome;
pub mod neural;
pub mod physics;
pub mod rng;
