"""Signal generators, spectral estimators and the four resonance measurements."""

from .bench import Bench, BenchRecord, BenchSession, CircuitBench
from .generators import chirp_instantaneous_frequency, gen_chirp, gen_sine_burst, spectrogram_ridge
from .lockin import LockinResult, lockin_demod
from .measure import bode_measure, bode_resonance, chirp_measure, ringdown_capture, ringdown_measure
from .pll import PllGains, PllState, calibrate_gains, pll_track
from .spectrum import PeakEstimate, compute_spectrum, estimate_peak

__all__ = [
    "Bench",
    "BenchRecord",
    "BenchSession",
    "CircuitBench",
    "LockinResult",
    "PeakEstimate",
    "PllGains",
    "PllState",
    "bode_measure",
    "bode_resonance",
    "calibrate_gains",
    "chirp_instantaneous_frequency",
    "chirp_measure",
    "compute_spectrum",
    "estimate_peak",
    "gen_chirp",
    "gen_sine_burst",
    "lockin_demod",
    "pll_track",
    "ringdown_capture",
    "ringdown_measure",
    "spectrogram_ridge",
]
