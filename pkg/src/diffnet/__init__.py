"""Transfer metrics, cutsets and decrescence checks for linear diffusive networks."""

from .cutsets import (SeparationCertificate, enumerate_minimal_cutsets, min_vertex_cut,
                      target_partition, validate_cutset)
from .errors import *  # noqa: F401,F403
from .metrics import (INF, ConvolutionOperator, GainResult, PiecewiseSpectrum, band_energy,
                      frequency_response, impulse_responses, lp_gain, lp_gain_infinite,
                      lp_gain_multi, markov_parameters, pnorm_power_iteration)
from .model import (Network, classify, example_network, from_edges, load_network,
                    load_network_file, spectral_radius, strongly_connected)
from .simulate import InputSignal, build_Q, reduced_simulate, simulate
from .verify import Theorem, VerificationReport, check_network, random_suite

__version__ = "0.1.0"
