"""Statistics of multi-cell zero-forcing downlink beamforming.

Closed-form signal/interference moments under instantaneous and average
precoder normalization, moment-matched distributions, outage probability,
and the Monte Carlo machinery that checks all of it.
"""

__version__ = "0.1.0"
