"""
Acceptance Verdicts

Pass/fail judgements over finished runs: training metrics, evaluation
results and active/passive traces. Hard verdicts fail a run. The
SAC-vs-baselines ordering is soft: a miss is flagged in the report, never
silently passed and never fatal.
"""

import logging
from dataclasses import dataclass
from typing import List, Mapping, Sequence

import numpy as np

from susp.learning.trainer import RunMetrics
from susp.sim.env import EpisodeTrace, EvaluationResult

logger = logging.getLogger(__name__)

TREND_WINDOW = 20
ENTROPY_REFERENCE_STEP = 5_000
PITCH_RATIO = 0.7
MIN_PASSIVE_PEAK_DEG = 10.0
VELOCITY_TOLERANCE = 0.2
MIN_SEED_WINS = 2


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    detail: str
    soft: bool = False

    @property
    def status(self) -> str:
        if self.passed:
            return "PASS"
        return "FLAG" if self.soft else "FAIL"


def success_rate(name: str, result: EvaluationResult, minimum: float) -> Verdict:
    rate = result.success_rate
    return Verdict(name, rate >= minimum, f"success {rate:.3f} (need >= {minimum:.2f})")


def episode_length_trend(metrics: RunMetrics, window: int = TREND_WINDOW) -> Verdict:
    """Mean length of the last `window` training episodes is below that of the first"""
    episodes = metrics.episodes
    if len(episodes) < 2 * window:
        return Verdict("episode_length_trend", False, f"only {len(episodes)} episodes recorded")
    first = float(np.mean([e.length for e in episodes[:window]]))
    last = float(np.mean([e.length for e in episodes[-window:]]))
    return Verdict(
        "episode_length_trend", last < first, f"first {window}: {first:.1f}, last {window}: {last:.1f}"
    )


def entropy_decay(metrics: RunMetrics, reference_step: int = ENTROPY_REFERENCE_STEP) -> Verdict:
    reference = next((r for r in metrics.rows if r.step >= reference_step), None)
    if reference is None or reference is metrics.rows[-1]:
        return Verdict("entropy_decay", False, f"no metrics row after step {reference_step}")
    final = metrics.rows[-1]
    return Verdict(
        "entropy_decay",
        final.ent_coef < reference.ent_coef,
        f"ent_coef {reference.ent_coef:.4g} at step {reference.step}, "
        f"{final.ent_coef:.4g} at step {final.step}",
    )


def pitch_reduction(active: EpisodeTrace, passive: EpisodeTrace) -> Verdict:
    ok = (
        passive.peak_pitch > MIN_PASSIVE_PEAK_DEG
        and active.peak_pitch <= PITCH_RATIO * passive.peak_pitch
    )
    return Verdict(
        "pitch_reduction",
        ok,
        f"peak |pitch| active {active.peak_pitch:.2f} deg, passive {passive.peak_pitch:.2f} deg",
    )


def crossing_velocity(active: EpisodeTrace, passive: EpisodeTrace, commanded: float) -> Verdict:
    """Active crossing speed within tolerance of the command; passive run rebounds"""
    steady = abs(active.crossing_velocity - commanded) <= VELOCITY_TOLERANCE * commanded
    rebound = min(passive.tick_velocity, default=0.0) < 0.0
    return Verdict(
        "crossing_velocity",
        steady and rebound,
        f"active crossing {active.crossing_velocity:.3f} m/s (commanded {commanded:.2f}), "
        f"passive min velocity {min(passive.tick_velocity, default=0.0):.3f} m/s",
    )


def final_reward(metrics: RunMetrics) -> float:
    return metrics.rows[-1].ep_rew_mean if metrics.rows else float("-inf")


def baseline_ordering(final_rewards: Mapping[str, Sequence[float]]) -> Verdict:
    """
    SAC's final ep_rew_mean against DDPG and TD3, seed by seed.

    Args:
        final_rewards: {"sac": [...], "ddpg": [...], "td3": [...]}, one entry per seed
    """
    sac = final_rewards["sac"]
    wins = sum(
        sac[i] >= final_rewards["ddpg"][i] and sac[i] >= final_rewards["td3"][i]
        for i in range(len(sac))
    )
    verdict = Verdict(
        "baseline_ordering",
        wins >= MIN_SEED_WINS,
        f"SAC ahead on {wins} of {len(sac)} seeds",
        soft=True,
    )
    if not verdict.passed:
        logger.warning(f"baseline ordering flagged: {verdict.detail}")
    return verdict


def format_verdicts(verdicts: List[Verdict]) -> str:
    width = max(len(v.name) for v in verdicts)
    return "\n".join(f"{v.name:<{width}}  {v.status}  {v.detail}" for v in verdicts)
