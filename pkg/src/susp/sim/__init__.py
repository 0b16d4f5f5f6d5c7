"""
Simulation Module

Five-bar kinematics, planar rover physics, joint control and the step-climbing environment.
"""
