//! XY8 spectra, dip detection, and hyperfine parameter fits.

mod fit;
mod spectrum;

pub use fit::{fit_hyperfine, FitBounds, FitResult, COARSE_POINTS_PER_AXIS, REFINED_CANDIDATES};
pub use spectrum::{find_dips, simulate_spectrum, xy8_p_down, Dip, SpectrumPoint};
