from collections import deque

import numpy as np
import torch

from envsim.world import GRIPPER_CLOSE, GRIPPER_OPEN, MAX_DELTA, Action

from .network import PolicyOutput, VisaFlowPolicy


def decode_actions(output: PolicyOutput) -> list[Action]:
    """
    Action chunk of the latest timestep of the first sample.

    The arm delta is the Gaussian mean clipped to the action bounds; the
    gripper closes only when sigmoid(logit) is strictly above one half.
    """
    means = output.action_mean[0, -1].detach().cpu().double().numpy()
    logits = output.gripper_logit[0, -1].detach().cpu().double().numpy()
    actions = []
    for mean, logit in zip(means, logits):
        dx, dy = (float(np.clip(value, -MAX_DELTA, MAX_DELTA)) for value in mean)
        # sigmoid(logit) > 0.5 exactly when logit > 0
        actions.append(Action((dx, dy), GRIPPER_CLOSE if logit > 0.0 else GRIPPER_OPEN))
    return actions


class PolicyRunner:
    """
    Closed-loop wrapper around a policy.

    Keeps the rolling window of the last h FlowReps and states; the window
    is bootstrapped by repeating the first observation. Each control step
    plans a full chunk and the caller executes its first action.
    """

    def __init__(self, policy: VisaFlowPolicy, instruction: str, goal=None):
        self.policy = policy.eval()
        self.config = policy.config
        self.lang = torch.tensor([self.config.instruction_index(instruction)])
        self.goal = goal
        self.flows = deque(maxlen=self.config.h)
        self.states = deque(maxlen=self.config.h)

    def observe(self, flowrep, proprio=None) -> None:
        vector = np.asarray(getattr(flowrep, "vector", flowrep), dtype=np.float32)
        if not self.flows:
            for _ in range(self.config.h):
                self.flows.append(vector)
                self.states.append(proprio)
        else:
            self.flows.append(vector)
            self.states.append(proprio)

    def predict_action(self) -> list[Action]:
        dtype = next(self.policy.parameters()).dtype
        flows = torch.as_tensor(np.stack(self.flows), dtype=dtype)[None]
        states = None
        if self.states[0] is not None:
            states = torch.as_tensor(np.stack(self.states), dtype=dtype)[None]
        goal = None
        if self.goal is not None:
            goal = torch.as_tensor(getattr(self.goal, "vector", self.goal), dtype=dtype)[None]
        with torch.no_grad():
            output = self.policy(self.lang, flows, states, goal)
        return decode_actions(output)

    def act(self, flowrep, proprio=None) -> Action:
        self.observe(flowrep, proprio)
        return self.predict_action()[0]


def predict_action(policy: VisaFlowPolicy, instruction: str, flowreps, states=None, goal=None):
    """Action chunk for one window of h FlowReps (and optional states)."""
    runner = PolicyRunner(policy, instruction, goal=goal)
    states = states if states is not None else [None] * len(flowreps)
    for flowrep, state in zip(flowreps, states):
        runner.observe(flowrep, state)
    return runner.predict_action()
