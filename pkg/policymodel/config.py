from dataclasses import asdict, dataclass, field

from core.exceptions import ConfigurationError
from envsim.tasks import instruction_vocabulary


@dataclass(frozen=True)
class ModelConfig:
    """
    Architecture of the policy transformer.

    Attributes:
        h: history length (timesteps per window)
        n: number of future FlowReps predicted per timestep
        k: action chunk length
        d: FlowRep width
        vocabulary: closed set of instructions the language embedding covers
    """

    d_model: int = 128
    depth: int = 4
    heads: int = 4
    h: int = 10
    n: int = 3
    k: int = 5
    d: int = 128
    state_dim: int = 3
    mlp_ratio: int = 4
    goal_conditioning: bool = False
    vocabulary: tuple[str, ...] = field(default_factory=lambda: tuple(instruction_vocabulary()))

    def __post_init__(self):
        if min(self.h, self.n, self.k) < 1:
            raise ConfigurationError("model.h, model.n and model.k must be at least 1")
        if self.d_model % self.heads:
            raise ConfigurationError(
                f"model.d_model ({self.d_model}) must be divisible by model.heads ({self.heads})"
            )
        if not self.vocabulary:
            raise ConfigurationError("the instruction vocabulary is empty")

    @property
    def prefix_length(self) -> int:
        return 2 if self.goal_conditioning else 1

    @property
    def tokens_per_step(self) -> int:
        return self.n + 3

    @property
    def sequence_length(self) -> int:
        return self.prefix_length + self.h * self.tokens_per_step

    def instruction_index(self, instruction: str) -> int:
        try:
            return self.vocabulary.index(instruction)
        except ValueError:
            raise ConfigurationError(
                f"instruction {instruction!r} is outside the vocabulary"
            ) from None

    def to_dict(self) -> dict:
        values = asdict(self)
        values["vocabulary"] = list(self.vocabulary)
        return values

    @classmethod
    def from_dict(cls, values: dict) -> "ModelConfig":
        known = {key: values[key] for key in cls.__dataclass_fields__ if key in values}
        if "vocabulary" in known:
            known["vocabulary"] = tuple(known["vocabulary"])
        return cls(**known)
