"""Thermally excited wave-packets for free quantum gases on a periodic lattice."""
from .envelope import Envelope, delta_envelope, thermal_envelope, thermal_length
from .greens import SpectralLines, compare_spectra, greens_eigen, greens_wavepacket
from .lattice import (
    AmplitudeField,
    Lattice,
    OperatorMatrix,
    build_lattice,
    to_momentum,
    to_position,
)
from .manybody import (
    FockBasis,
    ProductState,
    boltzmann_N,
    closure_N,
    h0_wavepacket_element,
    number_operator_check,
    permanent,
    product_overlap,
    u_q_amplitude,
    v_wavepacket_tensor,
)
from .thermal import (
    TemperatureSplit,
    ThermalParams,
    boltzmann_kernel_r,
    boltzmann_matrix,
    kernel_split,
    reconstruct_from_RKT,
    reconstruct_from_RT,
    thermal_params,
    verify_split,
)
from .wavepacket import (
    PacketTooWideError,
    WavePacketParams,
    WavePacketState,
    coherent_alpha,
    coherent_wavefunction,
    delta_phi,
    energy_mean,
    energy_variance,
    evolve,
    make_state,
    momentum_mean,
    overlap,
    position_mean,
    rkt_params,
    rt_params,
    uncertainty,
)

__all__ = [name for name in dir() if not name.startswith("_")]
