"""Two-vehicle narrow-road negotiation lab.

A self-contained multi-agent RL testbed: a kinematic 2D simulator where two
vehicles meet on an obstacle-strewn narrow road, a reward stack that splits
each agent's reward into self and cooperative parts weighted by a personality
parameter, PPO training with a decomposed critic, and a CLI for training,
evaluation, personality sweeps, and cross-evaluation.
"""

__version__ = "0.1.0"
