//! # lfi-core
//!
//! Likelihood-free Bayesian inference for simulator models: Approximate
//! Bayesian Computation (ABC) and Bayesian Synthetic Likelihood (BSL)
//! MCMC samplers, together with accelerated variants (AABC, ABSL) that
//! recycle the chain's past simulations through kNN-weighted estimates
//! of the acceptance ingredients.
//!
//! The crate is organised around a small set of pieces:
//!
//! * [`rng`] / [`dist`] — seedable deterministic random streams and the
//!   elementary distributions everything draws from (Gaussian, uniform,
//!   Poisson, α-stable, multivariate normal).
//! * [`models`] — benchmark generative models (MA(2), Ricker, stochastic
//!   volatility with Gaussian and with α-stable emissions), each bundling
//!   a simulator, a prior and a summary statistic, plus exact-likelihood
//!   hooks where they exist.
//! * [`calibration`] — construction of the quadratic discrepancy metric
//!   and the decreasing tolerance schedule shared by the ABC samplers.
//! * [`history`] — the append-only simulation history and the kNN-weighted
//!   estimators computed from it.
//! * [`samplers`] — Accept/Reject ABC, ABC-MCMC (plain and with burn-in
//!   adaptation), AABC, BSL, ABSL, an ABC-SMC baseline, an exact MA(2)
//!   chain and particle MCMC.
//! * [`diagnostics`] / [`study`] — efficiency and accuracy metrics (ACT,
//!   ESS, total variation, bias/variance/MSE) and a multi-replicate
//!   comparison harness.
//!
//! Everything is deterministic given a seed; wall-clock time is injected
//! through the [`clock::Clock`] trait so the algorithmic core stays pure.
//! The crate is `no_std`-compatible (with `alloc`); the companion CLI
//! crate carries all IO and file formats.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod calibration;
pub mod clock;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod history;
pub mod linalg;
pub mod math;
pub mod models;
pub mod rng;
pub mod samplers;
pub mod study;

pub use error::{Error, Result};
pub use rng::RngStream;
