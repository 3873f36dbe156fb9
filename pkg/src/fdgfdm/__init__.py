"""Link-level laboratory for full-duplex GFDM transceivers.

Subpackages by capability:

* :mod:`fdgfdm.waveform` -- block geometry, prototype/receiver filters,
  (de)modulation and the shift/mapping matrices.
* :mod:`fdgfdm.impairments` -- Wiener phase noise, CFO, IQ imbalance,
  Rayleigh multipath draws and the equivalent channel gains.
* :mod:`fdgfdm.linksim` -- Monte-Carlo simulation with exact component
  decomposition and digital cancellation.
* :mod:`fdgfdm.analytics` -- closed-form component powers, SIR and their
  quadratic-form matrices.
* :mod:`fdgfdm.optimizer` -- SIR-optimal receiver filter design.
* :mod:`fdgfdm.scenarios` -- sweep scenarios, result emission, calibration.
"""

from .analytics import AnalyticsConfig, ClosedFormAnalytics, SirBreakdown
from .impairments import (ChannelPdp, IqMixerCoeffs, PhaseNoiseProcess,
                          coeffs_from_irr, draw_channel, gen_phase_noise)
from .linksim import (FrameComponents, ImpairmentConfig, LinkConfig,
                      PowerEstimates, apply_cancellation, monte_carlo_powers,
                      simulate_frame)
from .optimizer import (OptimalFilter, OptimizationProblem, assemble_problem,
                        optimal_receiver, sir_of_filter, solve)
from .scenarios import (Scenario, calibrate, emit_csv, emit_plotdata,
                        load_scenario, run_scenario)
from .waveform import (GfdmGrid, PrototypeFilter, ReceiverFilter, SymbolFrame,
                       add_cp, build_prototype, circular_shift, demodulate,
                       mf_receiver, modulate, remove_cp, zf_receiver)

__version__ = "0.1.0"

__all__ = [
    "AnalyticsConfig", "ClosedFormAnalytics", "SirBreakdown",
    "ChannelPdp", "IqMixerCoeffs", "PhaseNoiseProcess",
    "coeffs_from_irr", "draw_channel", "gen_phase_noise",
    "FrameComponents", "ImpairmentConfig", "LinkConfig", "PowerEstimates",
    "apply_cancellation", "monte_carlo_powers", "simulate_frame",
    "OptimalFilter", "OptimizationProblem", "assemble_problem",
    "optimal_receiver", "sir_of_filter", "solve",
    "Scenario", "calibrate", "emit_csv", "emit_plotdata",
    "load_scenario", "run_scenario",
    "GfdmGrid", "PrototypeFilter", "ReceiverFilter", "SymbolFrame",
    "add_cp", "build_prototype", "circular_shift", "demodulate",
    "mf_receiver", "modulate", "remove_cp", "zf_receiver",
]
