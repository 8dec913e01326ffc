"""Flow-network samplers for k-of-m sensor selection.

Library layout:

- mdp: the subset-construction DAG-MDP
- nn: self-contained Fourier-feature network, backprop, Adam
- flow_matching: GFLOW-SS trainer and rollout policies
- trajectory_balance: preference-conditioned MOGFLOW-SS trainer
- linear_reward: log-det objective and sigmoid reward
- isac: CRB / communication-rate objective with inner beamformer ascent
- baselines: greedy selection and the convex relaxation
- oracles: brute-force search and exact DAG flows
- experiments, suite, cli: reproducible experiment harness
"""

from .mdp import (Action, MdpSpec, SubsetState, Trajectory, allowed_actions,
                  apply_action, from_bits, is_terminal, parents, root,
                  state_from_indices, state_from_mask, to_bits)

__all__ = [
    "Action",
    "MdpSpec",
    "SubsetState",
    "Trajectory",
    "allowed_actions",
    "apply_action",
    "from_bits",
    "is_terminal",
    "parents",
    "root",
    "state_from_indices",
    "state_from_mask",
    "to_bits",
]

__version__ = "0.1.0"
