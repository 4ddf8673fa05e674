"""Linear stochastic approximation with Polyak-Ruppert averaging.

Simulation, exact oracles and finite-time bound evaluation for
``theta_k = theta_{k-1} - alpha (A(Z_k) theta_{k-1} - b(Z_k))`` driven by
i.i.d. or Markov noise on a finite state space.
"""

__version__ = "0.1.0"
