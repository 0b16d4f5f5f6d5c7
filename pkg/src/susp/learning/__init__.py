"""
Learning Module

Numpy approximators, replay pool, SAC and DDPG/TD3 agents, checkpoints and the training loop.
"""
