"""Dynamic mode decomposition in phasor form.

Thin Python layer over the C++ library: toy data generators, paired DMD fits, phasor
components and the windowed multi-level decomposition. Arrays are NumPy, space x time.
"""

from ._phasordmd import (
    Error,
    FitResult,
    MrDecomposition,
    PairedModel,
    PhasorMode,
    __version__,
    decompose,
    fit,
    gen_multiscale,
    gen_uniscale,
    phasor_decompose,
    phasor_reconstruct,
    phasor_reconstruct_pair,
    read_matrix,
    read_model,
    waveform,
    write_matrix,
    write_model,
)

__all__ = [
    "Error",
    "FitResult",
    "MrDecomposition",
    "PairedModel",
    "PhasorMode",
    "__version__",
    "decompose",
    "fit",
    "gen_multiscale",
    "gen_uniscale",
    "phasor_decompose",
    "phasor_reconstruct",
    "phasor_reconstruct_pair",
    "read_matrix",
    "read_model",
    "waveform",
    "write_matrix",
    "write_model",
]
