"""Selfish-mining decision process over key blocks and fee-splitting
microblocks, and its average-reward-ratio solver.

The chain game is a finite MDP.  A state is (l_a, l_h, fork, last_micro):
private selfish chain length and public chain length past the common
ancestor key block, whether a published matching branch exists (and whether
its trailing microblocks are hidden), and who owns the ancestor plus what
the selfish miner did with the ancestor's microblocks.

Fee accounting uses one fee unit per key-block interval.  A transition that
advances the ancestor by n key blocks finalizes the n-1 interior intervals
to the owner of that stretch, plus the old ancestor's leading interval,
which is assigned by who mined the first block after the old ancestor:

  ancestor H_in: next honest -> honest gets the unit;
                 next selfish -> split r to honest, 1-r to selfish.
  ancestor H_ex: next honest -> honest gets the unit;
                 next selfish -> the unit is orphaned (the selfish miner
                 skipped those microblocks, and full microblocks leave no
                 spare capacity to re-earn the fees).
  ancestor S_p:  next selfish -> selfish gets the unit;
                 next honest -> split r to selfish, 1-r to honest.
  ancestor S_h:  next selfish -> selfish gets the unit;
                 next honest -> orphaned (the hidden microblocks never
                 reached the public chain).

The optimal relative revenue solves a ratio objective: bisection on the
revenue w, where each trial w is checked by maximizing the long-run average
of (selfish reward - w * total reward) with relative value iteration.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterator, NamedTuple

import numpy as np
from scipy import sparse

from .model import ProtocolParams, RewardWeights

PROBABILITY_TOLERANCE = 1e-12


class Fork(IntEnum):
    NO_TIE = 0
    TIE = 1
    TIE_PRIME = 2


class LastMicro(IntEnum):
    H_IN = 0  # honest ancestor, its microblocks accepted by the selfish miner
    H_EX = 1  # honest ancestor, its microblocks rejected
    S_P = 2  # selfish ancestor, its microblocks published
    S_H = 3  # selfish ancestor, its microblocks hidden


_FORK_NAMES = {Fork.NO_TIE: "noTie", Fork.TIE: "tie", Fork.TIE_PRIME: "tiePrime"}
_LAST_NAMES = {
    LastMicro.H_IN: "H_in",
    LastMicro.H_EX: "H_ex",
    LastMicro.S_P: "S_p",
    LastMicro.S_H: "S_h",
}


class MdpAction(Enum):
    ADOPT = "adopt"
    ADOPT_E = "adoptE"
    OVERRIDE = "override"
    OVERRIDE_H = "overrideH"
    MATCH = "match"
    MATCH_H = "matchH"
    WAIT = "wait"
    REVERT = "revert"


# Fixed order used for greedy tie-breaking: honest-looking actions first.
ACTION_ORDER = (
    MdpAction.ADOPT,
    MdpAction.ADOPT_E,
    MdpAction.OVERRIDE,
    MdpAction.OVERRIDE_H,
    MdpAction.MATCH,
    MdpAction.MATCH_H,
    MdpAction.WAIT,
    MdpAction.REVERT,
)
_ACTION_INDEX = {a: i for i, a in enumerate(ACTION_ORDER)}


class MdpState(NamedTuple):
    l_a: int
    l_h: int
    fork: Fork
    last_micro: LastMicro

    def to_record(self) -> dict:
        return {
            "l_a": self.l_a,
            "l_h": self.l_h,
            "fork": _FORK_NAMES[self.fork],
            "last_micro": _LAST_NAMES[self.last_micro],
        }


class RewardTuple(NamedTuple):
    r_h: float  # honest key-block rewards
    t_h: float  # honest fee units
    r_a: float  # selfish key-block rewards
    t_a: float  # selfish fee units


ZERO_REWARD = RewardTuple(0.0, 0.0, 0.0, 0.0)


class Outcome(NamedTuple):
    next_state: MdpState
    probability: float
    reward: RewardTuple


def scalarize(reward: RewardTuple, weights: RewardWeights) -> tuple[float, float]:
    """Collapse a reward tuple to (selfish, total) scalars."""
    selfish = weights.key_weight * reward.r_a + weights.fee_weight * reward.t_a
    honest = weights.key_weight * reward.r_h + weights.fee_weight * reward.t_h
    return selfish, selfish + honest


def _adopt_reward(l_h: int, last: LastMicro, r: float) -> RewardTuple:
    # Honest miners finalize l_h key rewards and l_h - 1 interior fee units;
    # the old ancestor's leading interval goes by the rules above (first
    # block after the ancestor is honest here).
    if last == LastMicro.S_P:
        return RewardTuple(l_h, l_h - 1 + (1.0 - r), 0.0, r)
    if last == LastMicro.S_H:
        return RewardTuple(l_h, l_h - 1, 0.0, 0.0)  # leading unit orphaned
    return RewardTuple(l_h, float(l_h), 0.0, 0.0)  # H_in / H_ex


def _override_reward(l_h: int, last: LastMicro, r: float) -> RewardTuple:
    # The selfish miner publishes l_h + 1 key blocks: l_h interior fee units
    # plus the leading interval (first block after the ancestor is selfish).
    if last == LastMicro.H_IN:
        return RewardTuple(0.0, r, l_h + 1, l_h + (1.0 - r))
    if last == LastMicro.H_EX:
        return RewardTuple(0.0, 0.0, l_h + 1, float(l_h))  # leading unit orphaned
    return RewardTuple(0.0, 0.0, l_h + 1, l_h + 1.0)  # S_p / S_h


def _match_success_reward(l_h: int, last: LastMicro, r: float) -> RewardTuple:
    # An honest block lands on the published selfish branch: l_h selfish key
    # blocks finalize with l_h - 1 interior fee units plus the leading one.
    if last == LastMicro.H_IN:
        return RewardTuple(0.0, r, float(l_h), l_h - 1 + (1.0 - r))
    if last == LastMicro.H_EX:
        return RewardTuple(0.0, 0.0, float(l_h), l_h - 1.0)  # leading unit orphaned
    return RewardTuple(0.0, 0.0, float(l_h), float(l_h))  # S_p / S_h


def enumerate_states(truncation: int) -> list[MdpState]:
    """All states with chain lengths capped at the truncation bound.

    A tie (matched branch) requires l_a >= l_h >= 1.
    """
    states: list[MdpState] = []
    for l_a in range(truncation + 1):
        for l_h in range(truncation + 1):
            for last in LastMicro:
                states.append(MdpState(l_a, l_h, Fork.NO_TIE, last))
                if 1 <= l_h <= l_a:
                    states.append(MdpState(l_a, l_h, Fork.TIE, last))
                    states.append(MdpState(l_a, l_h, Fork.TIE_PRIME, last))
    return states


class TransitionTable:
    """Transition and reward structure for one parameterization.

    Maps (state, action) to outcome lists; unavailable pairs are absent.
    """

    def __init__(self, params: ProtocolParams, truncation: int):
        if truncation < 2:
            raise ValueError("truncation must be at least 2")
        self.params = params
        self.truncation = truncation
        self.states = enumerate_states(truncation)
        self.state_index = {s: i for i, s in enumerate(self.states)}
        self._table: dict[tuple[MdpState, MdpAction], list[Outcome]] = {}
        self._build()

    def actions(self, state: MdpState) -> list[MdpAction]:
        return [a for a in ACTION_ORDER if (state, a) in self._table]

    def outcomes(self, state: MdpState, action: MdpAction) -> list[Outcome]:
        return self._table[(state, action)]

    def items(self) -> Iterator[tuple[MdpState, MdpAction, list[Outcome]]]:
        for (state, action), outs in self._table.items():
            yield state, action, outs

    def __len__(self) -> int:
        return len(self._table)

    def _build(self) -> None:
        p = self.params
        alpha, gamma, r = p.alpha, p.gamma, p.split_ratio
        L = self.truncation
        for s in self.states:
            l_a, l_h, fork, last = s

            if l_h >= 1:
                reward = _adopt_reward(l_h, last, r)
                for action, landing in (
                    (MdpAction.ADOPT, LastMicro.H_IN),
                    (MdpAction.ADOPT_E, LastMicro.H_EX),
                ):
                    self._table[(s, action)] = [
                        Outcome(MdpState(1, 0, Fork.NO_TIE, landing), alpha, reward),
                        Outcome(MdpState(0, 1, Fork.NO_TIE, landing), 1 - alpha, reward),
                    ]

            if l_a > l_h:
                reward = _override_reward(l_h, last, r)
                for action, landing in (
                    (MdpAction.OVERRIDE, LastMicro.S_P),
                    (MdpAction.OVERRIDE_H, LastMicro.S_H),
                ):
                    self._table[(s, action)] = [
                        Outcome(
                            MdpState(l_a - l_h, 0, Fork.NO_TIE, landing), alpha, reward
                        ),
                        Outcome(
                            MdpState(l_a - l_h - 1, 1, Fork.NO_TIE, landing),
                            1 - alpha,
                            reward,
                        ),
                    ]

            # wait / match / matchH all mine one more key block, so they are
            # removed at the truncation boundary.
            if l_a < L and l_h < L:
                if fork == Fork.NO_TIE:
                    self._table[(s, MdpAction.WAIT)] = [
                        Outcome(MdpState(l_a + 1, l_h, fork, last), alpha, ZERO_REWARD),
                        Outcome(
                            MdpState(l_a, l_h + 1, fork, last), 1 - alpha, ZERO_REWARD
                        ),
                    ]
                    if 1 <= l_h <= l_a:
                        self._table[(s, MdpAction.MATCH)] = self._race_outcomes(
                            s, Fork.TIE, LastMicro.S_P
                        )
                        self._table[(s, MdpAction.MATCH_H)] = self._race_outcomes(
                            s, Fork.TIE_PRIME, LastMicro.S_H
                        )
                elif fork == Fork.TIE:
                    self._table[(s, MdpAction.WAIT)] = self._race_outcomes(
                        s, Fork.TIE, LastMicro.S_P
                    )
                else:
                    self._table[(s, MdpAction.WAIT)] = self._race_outcomes(
                        s, Fork.TIE_PRIME, LastMicro.S_H
                    )

            revert_target = self._revert_target(s)
            if revert_target is not None:
                self._table[(s, MdpAction.REVERT)] = [
                    Outcome(revert_target, 1.0, ZERO_REWARD)
                ]

    def _race_outcomes(
        self, s: MdpState, tie_kind: Fork, success_landing: LastMicro
    ) -> list[Outcome]:
        # Two equal-length public branches race for the next key block: the
        # selfish miner extends privately (tie persists), some honest power
        # mines the selfish branch (the match succeeds and the selfish branch
        # finalizes), the rest extend the honest branch (tie broken).
        p = self.params
        alpha, gamma, r = p.alpha, p.gamma, p.split_ratio
        l_a, l_h, _, last = s
        return [
            Outcome(MdpState(l_a + 1, l_h, tie_kind, last), alpha, ZERO_REWARD),
            Outcome(
                MdpState(l_a - l_h, 1, Fork.NO_TIE, success_landing),
                gamma * (1 - alpha),
                _match_success_reward(l_h, last, r),
            ),
            Outcome(
                MdpState(l_a, l_h + 1, Fork.NO_TIE, last),
                (1 - gamma) * (1 - alpha),
                ZERO_REWARD,
            ),
        ]

    @staticmethod
    def _revert_target(s: MdpState) -> MdpState | None:
        l_a, l_h, fork, last = s
        if fork == Fork.TIE_PRIME:
            # Publish the matched branch's hidden trailing microblocks.
            return MdpState(l_a, l_h, Fork.TIE, last)
        if last == LastMicro.S_H and l_h == 0:
            # No honest block contests the ancestor yet: publish the hidden
            # microblocks after all.
            return MdpState(l_a, l_h, fork, LastMicro.S_P)
        if last == LastMicro.H_EX and l_a == 0:
            # No selfish block commits to the exclusion: re-accept.
            return MdpState(l_a, l_h, fork, LastMicro.H_IN)
        return None


def build_transitions(params: ProtocolParams, truncation: int = 20) -> TransitionTable:
    return TransitionTable(params, truncation)


@dataclass(frozen=True)
class SolveResult:
    revenue: float
    policy: dict[MdpState, MdpAction]
    outer_iterations: int
    inner_tolerance: float
    truncation: int
    weights: RewardWeights

    def action(self, state: MdpState) -> MdpAction:
        return policy_actions(self, state)


def policy_actions(result: SolveResult, state: MdpState) -> MdpAction:
    """Solved policy's action at a state; errors outside the truncation."""
    try:
        return result.policy[state]
    except KeyError:
        raise ValueError(f"state {state} outside the solved state space") from None


class SolverError(RuntimeError):
    """Inner value iteration failed to converge; carries iteration state."""

    def __init__(self, message: str, iterations: int, span: float):
        super().__init__(f"{message} (iterations={iterations}, span={span:.3e})")
        self.iterations = iterations
        self.span = span


class _Compiled:
    """Array form of a transition table for vectorized value iteration."""

    def __init__(self, table: TransitionTable, weights: RewardWeights):
        n = len(table.states)
        n_actions = len(ACTION_ORDER)
        rows, cols, probs = [], [], []
        r_self = np.zeros(n_actions * n)
        r_total = np.zeros(n_actions * n)
        available = np.zeros(n_actions * n, dtype=bool)
        index = table.state_index
        for state, action, outcomes in table.items():
            flat = _ACTION_INDEX[action] * n + index[state]
            available[flat] = True
            for out in outcomes:
                rows.append(flat)
                cols.append(index[out.next_state])
                probs.append(out.probability)
                selfish, total = scalarize(out.reward, weights)
                r_self[flat] += out.probability * selfish
                r_total[flat] += out.probability * total
        self.n = n
        self.n_actions = n_actions
        self.transition = sparse.csr_matrix(
            (probs, (rows, cols)), shape=(n_actions * n, n)
        )
        self.r_self = r_self
        self.r_total = r_total
        self.available = available

    def gain(
        self,
        w: float,
        values: np.ndarray,
        eps: float,
        max_iterations: int,
        damping: float,
    ) -> tuple[float, np.ndarray, int]:
        """Optimal average of (selfish - w * total) by relative value iteration.

        The damping mixes in a self-loop, which removes periodicity without
        changing the average reward.  Returns (gain, bias values, iterations).
        """
        reward = self.r_self - w * self.r_total
        reward[~self.available] = -np.inf
        v = values
        for iteration in range(1, max_iterations + 1):
            q = reward + self.transition @ v
            best = q.reshape(self.n_actions, self.n).max(axis=0)
            mixed = (1.0 - damping) * v + damping * best
            diff = mixed - v
            lo, hi = diff.min(), diff.max()
            v = mixed - mixed[0]
            if (hi - lo) / damping < eps:
                return (hi + lo) / (2.0 * damping), v, iteration
        raise SolverError("value iteration did not converge", max_iterations, hi - lo)

    def greedy(self, w: float, values: np.ndarray) -> np.ndarray:
        reward = self.r_self - w * self.r_total
        reward[~self.available] = -np.inf
        q = (reward + self.transition @ values).reshape(self.n_actions, self.n)
        return q.argmax(axis=0)


def solve(
    table: TransitionTable,
    weights: RewardWeights,
    eps_inner: float = 1e-7,
    eps_outer: float = 1e-5,
    max_inner: int = 500_000,
    damping: float = 0.995,
) -> SolveResult:
    """Optimal relative revenue over the truncated state space.

    Bisects the candidate revenue w on [0, 1]: the optimal transformed
    average reward is positive below the true ratio and nonpositive above
    it.  Early bisection steps run the inner iteration at a coarser
    tolerance proportional to the bracket width.
    """
    if eps_inner <= 0 or eps_outer <= 0:
        raise ValueError("tolerances must be positive")
    compiled = _Compiled(table, weights)
    lo, hi = 0.0, 1.0
    v = np.zeros(compiled.n)
    v_low = v
    outer = 0
    while hi - lo > eps_outer:
        w = 0.5 * (lo + hi)
        eps = max(eps_inner, (hi - lo) * 1e-3)
        g, v, _ = compiled.gain(w, v, eps, max_inner, damping)
        outer += 1
        if g > 0:
            lo, v_low = w, v
        else:
            hi = w
    actions = compiled.greedy(lo, v_low)
    policy = {
        state: ACTION_ORDER[actions[i]] for i, state in enumerate(table.states)
    }
    return SolveResult(
        revenue=0.5 * (lo + hi),
        policy=policy,
        outer_iterations=outer,
        inner_tolerance=eps_inner,
        truncation=table.truncation,
        weights=weights,
    )


def policy_to_records(result: SolveResult) -> list[dict]:
    """JSON-ready rows: one 4-field state record plus the action string."""
    return [
        {**state.to_record(), "action": action.value}
        for state, action in result.policy.items()
    ]
