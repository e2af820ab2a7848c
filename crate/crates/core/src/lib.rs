//! Haar-wavelet spin-echo magnetometry, simulated end to end.
//!
//! A temporal field is sensed by a two-level spin through Hahn echoes whose
//! filter functions are Haar wavelets. Each order of the wavelet expansion
//! is measured in one pass of the signal, so a `2^n`-point reconstruction
//! needs `n + 1` signal runs where a Walsh-sequence reconstruction needs
//! `2^n`.
//!
//! - [`wavelet`]: Haar and Walsh bases, transforms and reconstructions.
//! - [`signals`]: sinusoids, sampled waveforms, nerve-impulse trains, CSV.
//! - [`spinsim`]: filter functions, phase, contrast, shot-noise readout,
//!   calibration.
//! - [`protocol`]: Haar, Walsh and Ramsey protocols, run budgets, event
//!   detection.
//! - [`sensitivity`]: resolution scaling laws and protocol comparison.
//! - [`cli`]: the `haarsense` command-line front end and its file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod protocol;
pub mod sensitivity;
pub mod signals;
pub mod spinsim;
pub mod wavelet;

pub use error::{Error, Result};
