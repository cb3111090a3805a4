"""
Chained-subtask metrics.

SR_i is the fraction of sequences that completed at least i subtasks in a
row and Avg. Len. the mean number completed, which always equals the sum
of the SR_i. Both are computed independently from the per-sequence
records and cross-checked.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from core.exceptions import NumericError, ValidationFailure

CHAIN_LENGTH = 5
IDENTITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SequenceRecord:
    """One evaluation sequence: the subtasks attempted and how many succeeded."""

    chain: tuple[str, ...]
    completed: int
    seed: int
    index: int = 0

    def attempts(self) -> list[tuple[str, bool]]:
        """(subtask, succeeded) for every subtask the policy actually tried."""
        tried = self.chain[: self.completed + 1]
        return [(subtask, position < self.completed) for position, subtask in enumerate(tried)]


@dataclass
class EvalReport:
    sr: tuple[float, ...]
    avg_len: float
    n_sequences: int
    per_sequence_records: list[SequenceRecord] = field(default_factory=list)
    variant: str = "full"
    seed: int | str = 0
    subtask_success: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if any(not 0.0 <= rate <= 1.0 for rate in self.sr):
            raise ValidationFailure(f"success rates must lie in [0, 1], got {self.sr}")
        if any(later > earlier for earlier, later in zip(self.sr, self.sr[1:])):
            raise ValidationFailure(f"success rates must be non-increasing, got {self.sr}")
        if not 0.0 <= self.avg_len <= len(self.sr):
            raise ValidationFailure(f"avg_len {self.avg_len} is out of range")

    @classmethod
    def from_success_rates(cls, rates, n_sequences: int = 0, **kwargs) -> "EvalReport":
        """Aggregate published or recorded rates; Avg. Len. is their sum."""
        rates = tuple(float(rate) for rate in rates)
        return cls(sr=rates, avg_len=float(sum(rates)), n_sequences=n_sequences, **kwargs)

    @classmethod
    def from_records(
        cls,
        records: list[SequenceRecord],
        chain_length: int = CHAIN_LENGTH,
        variant: str = "full",
        seed: int | str = 0,
    ) -> "EvalReport":
        if not records:
            raise ValidationFailure("an evaluation report needs at least one sequence")
        completed = np.array([record.completed for record in records])
        n = len(records)
        sr = tuple(float(np.count_nonzero(completed >= i)) / n for i in range(1, chain_length + 1))
        avg_len = float(completed.sum()) / n
        if abs(avg_len - sum(sr)) > IDENTITY_TOLERANCE:
            raise NumericError(f"avg_len {avg_len} disagrees with the summed rates {sum(sr)}")
        return cls(
            sr=sr,
            avg_len=avg_len,
            n_sequences=n,
            per_sequence_records=list(records),
            variant=variant,
            seed=seed,
            subtask_success=subtask_success_rates(records),
        )

    @classmethod
    def pooled(cls, reports: list["EvalReport"], variant: str) -> "EvalReport":
        """One report over the records of several runs (e.g. several seeds)."""
        records = [record for report in reports for record in report.per_sequence_records]
        seeds = "+".join(str(report.seed) for report in reports)
        return cls.from_records(records, len(reports[0].sr), variant=variant, seed=seeds)

    def to_dict(self) -> dict:
        values = asdict(self)
        values["sr"] = list(self.sr)
        values["per_sequence_records"] = [
            {**asdict(record), "chain": list(record.chain)} for record in self.per_sequence_records
        ]
        return values


def subtask_success_rates(records: list[SequenceRecord]) -> dict[str, float]:
    """Success rate of every subtask type over all attempts made in the chains."""
    tries: dict[str, list[bool]] = {}
    for record in records:
        for subtask, succeeded in record.attempts():
            tries.setdefault(subtask, []).append(succeeded)
    return {subtask: float(np.mean(outcomes)) for subtask, outcomes in sorted(tries.items())}
