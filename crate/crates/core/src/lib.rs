//! Sub-Nyquist MIMO radar simulation.
//!
//! The crate covers the whole chain from a radar definition to a recovered
//! range-azimuth-Doppler target map:
//!
//! * [`config`] describes the array, FDMA carriers, Fourier sampling set and
//!   pulse train.
//! * [`scene`] draws on-grid point-target scenes.
//! * [`synthesis`] evaluates the aligned per-channel Fourier coefficients
//!   analytically, builds dense time-domain records and injects noise.
//! * [`xampling`] recovers the same coefficients from dense time samples.
//! * [`dictionaries`] builds the measurement matrices and checks spark and
//!   coherence.
//! * [`recovery`] holds matrix OMP, Doppler focusing, focused 3D OMP and the
//!   classic Nyquist baseline.
//! * [`eval`] scores recoveries and runs Monte-Carlo SNR sweeps.

pub mod config;
pub mod dictionaries;
pub mod eval;
pub mod linalg;
pub mod recovery;
pub mod scene;
pub mod seed;
pub mod synthesis;
pub mod xampling;

pub use num_complex::Complex64;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
