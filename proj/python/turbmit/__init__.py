"""Anisoplanatic turbulence simulation and restoration toolkit.

The heavy lifting lives in the C++ extension; this package re-exports the
main operations. The extension sits inside the package in an installed
wheel, or on PYTHONPATH when running against a plain CMake build tree.
"""

try:
    from . import _turbmit as _core
except ImportError:  # CMake build tree: extension next to the build dir
    import _turbmit as _core

DeconvConfig = _core.DeconvConfig
LuckyConfig = _core.LuckyConfig
OpticsParams = _core.OpticsParams
PatchWindowConfig = _core.PatchWindowConfig
PsfBasis = _core.PsfBasis
SimulateOptions = _core.SimulateOptions
TrainOptions = _core.TrainOptions
__version__ = _core.__version__

bar_pattern_dynamic_range = _core.bar_pattern_dynamic_range
blind_deconvolve = _core.blind_deconvolve
calibrate_beta = _core.calibrate_beta
compute_reference = _core.compute_reference
diffraction_cutoff = _core.diffraction_cutoff
estimate_flow = _core.estimate_flow
fuse_lucky = _core.fuse_lucky
load_psfb = _core.load_psfb
long_exposure_otf = _core.long_exposure_otf
noll_covariance = _core.noll_covariance
normalized_gradient = _core.normalized_gradient
omp_sparse_code = _core.omp_sparse_code
phase_structure_function = _core.phase_structure_function
psf_from_coeffs = _core.psf_from_coeffs
psnr = _core.psnr
read_raster = _core.read_raster
sample_zernike_coeffs = _core.sample_zernike_coeffs
short_exposure_otf = _core.short_exposure_otf
simulate_sequence = _core.simulate_sequence
synth_points = _core.synth_points
synth_scene = _core.synth_scene
synth_usaf = _core.synth_usaf
train_prior = _core.train_prior
warp = _core.warp
write_pgm = _core.write_pgm
zernike_phase = _core.zernike_phase
