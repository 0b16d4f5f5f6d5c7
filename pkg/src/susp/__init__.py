"""
susp - active five-bar rover suspension testbed

Planar rover physics with a step obstacle, PID joint actuation, and
from-scratch SAC / DDPG / TD3 agents that learn to keep the chassis level.
"""

__version__ = "0.1.0"
