"""Slotted-time simulation and optimization toolkit for a single
energy-harvesting sensor node.

A node with a data queue (bits) and an energy buffer drains the queue
through a concave rate function g: spending energy T in a slot with channel
gain h serves g(h*T) bits. Arrivals, harvested energy, channel gains, and
sensing costs are i.i.d. processes. The package provides the stochastic
primitives, transmission policies, a fast slot-loop simulator with a
compiled core and a pure-Python fallback, a quantized average-cost /
discounted MDP solver, threshold analysis, and a CLI.
"""

__version__ = "0.1.0"
